"""Backend selection for the LSTM sequence kernels.

The compiled extension is preferred when importable; the numpy reference
implementation is the fallback.  SKYOFF_BACKEND=py or =cy forces one
side (cy raises if the extension is missing), =auto is the default.
"""

from __future__ import annotations

import os

_requested = os.environ.get("SKYOFF_BACKEND", "auto")

if _requested not in ("auto", "cy", "py"):
    raise ValueError(
        f"SKYOFF_BACKEND must be one of auto/cy/py, got {_requested!r}"
    )

if _requested == "py":
    from skyoff.forecast import _lstm_py as _impl

    BACKEND = "py"
else:
    try:
        from skyoff.forecast import _lstm_cy as _impl  # type: ignore[no-redef]

        BACKEND = "cy"
    except ImportError:
        if _requested == "cy":
            raise
        from skyoff.forecast import _lstm_py as _impl  # type: ignore[no-redef]

        BACKEND = "py"

sequence_forward = _impl.sequence_forward
sequence_backward = _impl.sequence_backward
closed_loop = _impl.closed_loop


def available_backends() -> list[str]:
    out = []
    try:
        from skyoff.forecast import _lstm_cy  # noqa: F401

        out.append("cy")
    except ImportError:
        pass
    out.append("py")
    return out


def backend_module(name: str):
    if name == "py":
        from skyoff.forecast import _lstm_py

        return _lstm_py
    if name == "cy":
        from skyoff.forecast import _lstm_cy

        return _lstm_cy
    raise ValueError(f"unknown backend {name!r}")
