"""Load-series container and the LSTM parameter set.

The LSTM is a single layer with scalar input and a scalar linear output
head.  Parameters live in fixed-layout numpy arrays; the gate order
inside every stacked array is input, forget, candidate, output.  The
flat parameter vector (used by initialization, the gradient check, and
serialization) concatenates wx, wh row-major, b, wy, by.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np


@dataclass
class LoadSeries:
    """Evenly sampled communication load of one UAV, values in [0, 1]."""

    uav_id: int
    samples: list[tuple[float, float]]  # (t seconds, load)
    sample_period: float  # s

    def loads(self) -> np.ndarray:
        return np.array([v for _, v in self.samples], dtype=np.float64)

    def times(self) -> np.ndarray:
        return np.array([t for t, _ in self.samples], dtype=np.float64)


def validate_series(series: LoadSeries) -> list[str]:
    out = []
    if series.sample_period <= 0:
        out.append("sample_period: must be > 0")
        return out
    prev = None
    for i, (t, v) in enumerate(series.samples):
        if not 0.0 <= v <= 1.0:
            out.append(f"samples[{i}]: load {v} outside [0, 1]")
        if prev is not None:
            dt = t - prev
            if abs(dt - series.sample_period) > 1e-9 * max(1.0, series.sample_period):
                out.append(f"samples[{i}]: spacing {dt} != sample_period")
        prev = t
    return out


def series_to_csv(series_list: list[LoadSeries]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "uav_id", "load"])
    for s in series_list:
        for t, v in s.samples:
            w.writerow([repr(t), s.uav_id, repr(v)])
    return buf.getvalue()


def series_from_csv(text: str, sample_period: float) -> list[LoadSeries]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != ["t", "uav_id", "load"]:
        raise ValueError("load CSV must start with header t,uav_id,load")
    per_uav: dict[int, list[tuple[float, float]]] = {}
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != 3:
            raise ValueError(f"load CSV line {i}: expected 3 columns")
        t, uav_id, v = float(row[0]), int(row[1]), float(row[2])
        per_uav.setdefault(uav_id, []).append((t, v))
    return [
        LoadSeries(uav_id=uid, samples=sorted(samples), sample_period=sample_period)
        for uid, samples in sorted(per_uav.items())
    ]


# ---------------------------------------------------------------------------
# Model parameters


@dataclass
class LstmModel:
    hidden_size: int
    wx: np.ndarray  # (4H,) input weights, gate order i,f,g,o
    wh: np.ndarray  # (4H, H) recurrent weights
    b: np.ndarray  # (4H,) gate biases
    wy: np.ndarray  # (H,) output head weights
    by: float  # output head bias

    def copy(self) -> "LstmModel":
        return LstmModel(
            self.hidden_size,
            self.wx.copy(),
            self.wh.copy(),
            self.b.copy(),
            self.wy.copy(),
            float(self.by),
        )


@dataclass
class ForecastConfig:
    window: int  # W, history samples fed before the first prediction
    horizon: int  # L, samples predicted per window
    hidden_size: int = 16
    learning_rate: float = 0.05
    epochs: int = 5
    seed: int = 0


def param_count(hidden_size: int) -> int:
    h = hidden_size
    return 4 * h + 4 * h * h + 4 * h + h + 1


def init_model(hidden_size: int, seed: int) -> LstmModel:
    """Seeded uniform [-0.1, 0.1] init, one generator draw unpacked in
    flat-layout order so the weights are reproducible bit-for-bit."""
    rng = np.random.default_rng(seed)
    flat = rng.uniform(-0.1, 0.1, size=param_count(hidden_size))
    return unflatten_params(hidden_size, flat)


def flatten_params(model: LstmModel) -> np.ndarray:
    return np.concatenate(
        [model.wx, model.wh.ravel(), model.b, model.wy, [model.by]]
    )


def unflatten_params(hidden_size: int, flat: np.ndarray) -> LstmModel:
    h = hidden_size
    if flat.shape != (param_count(h),):
        raise ValueError(f"expected {param_count(h)} parameters, got {flat.shape}")
    flat = np.asarray(flat, dtype=np.float64)
    pos = 0

    def take(n):
        nonlocal pos
        out = flat[pos : pos + n].copy()
        pos += n
        return out

    wx = take(4 * h)
    wh = take(4 * h * h).reshape(4 * h, h)
    b = take(4 * h)
    wy = take(h)
    by = float(take(1)[0])
    return LstmModel(h, wx, wh, b, wy, by)


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def lstm_step(
    model: LstmModel, x: float, state: tuple[np.ndarray, np.ndarray]
) -> tuple[float, tuple[np.ndarray, np.ndarray]]:
    """One cell step: returns (y, (h', c')).

    Gates use the logistic sigmoid, the candidate uses tanh; the output
    is the linear head over the new hidden state.
    """
    if not math.isfinite(x):
        raise ValueError("lstm_step: non-finite input")
    h_prev, c_prev = state
    hs = model.hidden_size
    if h_prev.shape != (hs,) or c_prev.shape != (hs,):
        raise ValueError("lstm_step: state vectors must have length hidden_size")
    z = model.wx * x + model.wh @ h_prev + model.b
    i = _sigmoid(z[0:hs])
    f = _sigmoid(z[hs : 2 * hs])
    g = np.tanh(z[2 * hs : 3 * hs])
    o = _sigmoid(z[3 * hs : 4 * hs])
    c = f * c_prev + i * g
    h = o * np.tanh(c)
    y = float(model.wy @ h + model.by)
    return y, (h, c)


def zero_state(hidden_size: int) -> tuple[np.ndarray, np.ndarray]:
    return np.zeros(hidden_size), np.zeros(hidden_size)


def model_to_json(model: LstmModel) -> str:
    doc = {
        "hidden_size": model.hidden_size,
        "wx": model.wx.tolist(),
        "wh": model.wh.ravel().tolist(),
        "b": model.b.tolist(),
        "wy": model.wy.tolist(),
        "by": model.by,
    }
    return json.dumps(doc, sort_keys=True)


def model_from_json(text: str) -> LstmModel:
    doc = json.loads(text)
    h = doc["hidden_size"]
    return LstmModel(
        hidden_size=h,
        wx=np.array(doc["wx"], dtype=np.float64),
        wh=np.array(doc["wh"], dtype=np.float64).reshape(4 * h, h),
        b=np.array(doc["b"], dtype=np.float64),
        wy=np.array(doc["wy"], dtype=np.float64),
        by=float(doc["by"]),
    )
