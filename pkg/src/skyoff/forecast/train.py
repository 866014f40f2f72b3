"""Training loop, closed-loop forecasting and the BPTT gradient check.

Training is plain stochastic gradient descent over teacher-forced
sliding windows in a fixed order, one update per window, with global
gradient-norm clipping.  Everything is deterministic given the config
seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from skyoff.forecast import kernels
from skyoff.forecast.model import (
    ForecastConfig,
    LoadSeries,
    LstmModel,
    flatten_params,
    init_model,
    unflatten_params,
)

GRAD_CLIP_NORM = 5.0


@dataclass
class TrainResult:
    model: LstmModel
    epoch_losses: list[float]  # mean per-window MSE observed each epoch


def _as_loads(series) -> np.ndarray:
    if isinstance(series, LoadSeries):
        return series.loads()
    return np.asarray(series, dtype=np.float64)


def _windows(n: int, window: int, horizon: int):
    # window inputs warm the state, horizon outputs are scored; the
    # input slice runs one short of the last target (teacher forcing)
    span = window + horizon
    return range(0, n - span + 1)


def _window_loss_grads(model: LstmModel, xs, targets, horizon):
    ys, cache = kernels.sequence_forward(
        model.wx, model.wh, model.b, model.wy, model.by, xs
    )
    err = ys[-horizon:] - targets
    loss = float(err @ err) / horizon
    dys = np.zeros(len(xs))
    dys[-horizon:] = 2.0 * err / horizon
    grads = kernels.sequence_backward(
        model.wx, model.wh, model.b, model.wy, model.by, cache, dys
    )
    return loss, grads


def _clip_and_apply(model: LstmModel, grads, lr: float) -> None:
    dwx, dwh, db, dwy, dby = grads
    sq = (
        float(dwx @ dwx)
        + float(np.sum(dwh * dwh))
        + float(db @ db)
        + float(dwy @ dwy)
        + dby * dby
    )
    norm = sq**0.5
    scale = lr if norm <= GRAD_CLIP_NORM else lr * (GRAD_CLIP_NORM / norm)
    model.wx -= scale * dwx
    model.wh -= scale * dwh
    model.b -= scale * db
    model.wy -= scale * dwy
    model.by -= scale * dby


def train(series, cfg: ForecastConfig) -> TrainResult:
    """Fit the forecaster to one load series.

    Raises ValueError when the series cannot fill a single window.  With
    epochs = 0 the seeded initial model is returned untouched.
    """
    loads = _as_loads(series)
    w, horizon = cfg.window, cfg.horizon
    if len(loads) < w + horizon:
        raise ValueError(
            f"series too short: {len(loads)} samples, need at least {w + horizon}"
        )
    model = init_model(cfg.hidden_size, cfg.seed)
    starts = list(_windows(len(loads), w, horizon))
    epoch_losses: list[float] = []
    for _ in range(cfg.epochs):
        total = 0.0
        for s in starts:
            xs = loads[s : s + w + horizon - 1]
            targets = loads[s + w : s + w + horizon]
            loss, grads = _window_loss_grads(model, xs, targets, horizon)
            _clip_and_apply(model, grads, cfg.learning_rate)
            total += loss
        epoch_losses.append(total / len(starts))
    return TrainResult(model=model, epoch_losses=epoch_losses)


def forecast(
    model: LstmModel, history, horizon: int, window: int | None = None
) -> np.ndarray:
    """Closed-loop rollout: predictions feed back as inputs, clamped to
    [0, 1].  If `window` is given the history must be exactly that long."""
    hist = _as_loads(history)
    if window is not None and len(hist) != window:
        raise ValueError(f"history length {len(hist)} != window {window}")
    if len(hist) < 1:
        raise ValueError("history must hold at least one sample")
    if horizon == 0:
        return np.zeros(0)
    return kernels.closed_loop(
        model.wx, model.wh, model.b, model.wy, model.by, hist, horizon, 0.0, 1.0
    )


def gradient_check(model: LstmModel, window) -> float:
    """Max relative error between BPTT and central finite differences.

    The window is scored one step ahead: inputs are window[:-1], targets
    window[1:], MSE over all outputs.  Differences use step 1e-5 and the
    relative error guards the denominator with max(1, |numeric|).
    """
    data = _as_loads(window)
    if len(data) < 2:
        raise ValueError("gradient check needs a window of at least 2 samples")
    xs = data[:-1]
    targets = data[1:]
    horizon = len(xs)

    _, grads = _window_loss_grads(model, xs, targets, horizon)
    dwx, dwh, db, dwy, dby = grads
    analytic = np.concatenate([dwx, dwh.ravel(), db, dwy, [dby]])

    flat = flatten_params(model)
    h = 1e-5
    worst = 0.0
    for idx in range(len(flat)):
        orig = flat[idx]
        flat[idx] = orig + h
        m_hi = unflatten_params(model.hidden_size, flat)
        ys_hi, _ = kernels.sequence_forward(
            m_hi.wx, m_hi.wh, m_hi.b, m_hi.wy, m_hi.by, xs
        )
        err_hi = ys_hi[-horizon:] - targets
        loss_hi = float(err_hi @ err_hi) / horizon
        flat[idx] = orig - h
        m_lo = unflatten_params(model.hidden_size, flat)
        ys_lo, _ = kernels.sequence_forward(
            m_lo.wx, m_lo.wh, m_lo.b, m_lo.wy, m_lo.by, xs
        )
        err_lo = ys_lo[-horizon:] - targets
        loss_lo = float(err_lo @ err_lo) / horizon
        flat[idx] = orig
        numeric = (loss_hi - loss_lo) / (2.0 * h)
        rel = abs(analytic[idx] - numeric) / max(1.0, abs(numeric))
        worst = max(worst, rel)
    return float(worst)
