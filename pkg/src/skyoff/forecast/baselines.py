"""Reference forecasters the LSTM is judged against."""

from __future__ import annotations

import numpy as np


def persistence(history, horizon: int) -> np.ndarray:
    """Repeat the last observed value."""
    hist = np.asarray(history, dtype=np.float64)
    if len(hist) < 1:
        raise ValueError("persistence needs at least one sample")
    return np.full(horizon, hist[-1])


def linear_ar(history, horizon: int, order: int) -> np.ndarray:
    """Least-squares autoregression of the given order, rolled out
    closed-loop.  Needs more history than the order to fit anything."""
    hist = np.asarray(history, dtype=np.float64)
    n = len(hist)
    if order < 1:
        raise ValueError("AR order must be >= 1")
    if n <= order:
        raise ValueError(f"insufficient history for order {order}: {n} samples")
    rows = n - order
    design = np.ones((rows, order + 1))
    for lag in range(1, order + 1):
        design[:, lag] = hist[order - lag : n - lag]
    targets = hist[order:]
    coef, _, _, _ = np.linalg.lstsq(design, targets, rcond=None)
    out = np.zeros(horizon)
    window = list(hist[-order:])
    for t in range(horizon):
        y = coef[0]
        for lag in range(1, order + 1):
            y += coef[lag] * window[-lag]
        out[t] = y
        window.append(y)
        window.pop(0)
    return out


def baseline_forecast(history, horizon: int, kind: str, order: int = 3) -> np.ndarray:
    if kind == "persistence":
        return persistence(history, horizon)
    if kind == "linear_ar":
        return linear_ar(history, horizon, order)
    raise ValueError(f"unknown baseline kind: {kind}")


def rmse(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.mean((a - b) ** 2)))
