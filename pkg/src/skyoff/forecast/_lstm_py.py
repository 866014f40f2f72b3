"""Reference numpy implementation of the LSTM sequence kernels.

Mirrors the compiled backend exactly; kernels.py picks one at import.
The cache returned by sequence_forward holds everything the backward
pass needs: inputs, previous states, gate activations, cell states and
their tanh.
"""

from __future__ import annotations

import numpy as np


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def sequence_forward(wx, wh, b, wy, by, xs):
    """Run the cell over a scalar sequence from zero state.

    Returns (ys, cache) with ys the per-step head outputs.
    """
    t_len = len(xs)
    hs = wy.shape[0]
    xs = np.asarray(xs, dtype=np.float64)
    h = np.zeros(hs)
    c = np.zeros(hs)
    ys = np.zeros(t_len)
    h_prev = np.zeros((t_len, hs))
    c_prev = np.zeros((t_len, hs))
    gate_i = np.zeros((t_len, hs))
    gate_f = np.zeros((t_len, hs))
    gate_g = np.zeros((t_len, hs))
    gate_o = np.zeros((t_len, hs))
    cell = np.zeros((t_len, hs))
    tanh_c = np.zeros((t_len, hs))
    for t in range(t_len):
        h_prev[t] = h
        c_prev[t] = c
        z = wx * xs[t] + wh @ h + b
        i = _sigmoid(z[0:hs])
        f = _sigmoid(z[hs : 2 * hs])
        g = np.tanh(z[2 * hs : 3 * hs])
        o = _sigmoid(z[3 * hs : 4 * hs])
        c = f * c + i * g
        tc = np.tanh(c)
        h = o * tc
        gate_i[t], gate_f[t], gate_g[t], gate_o[t] = i, f, g, o
        cell[t] = c
        tanh_c[t] = tc
        ys[t] = wy @ h + by
    cache = (xs, h_prev, c_prev, gate_i, gate_f, gate_g, gate_o, cell, tanh_c)
    return ys, cache


def sequence_backward(wx, wh, b, wy, by, cache, dys):
    """Backpropagation through time for one forward cache.

    dys holds the loss derivative w.r.t. each head output; returns
    gradients in parameter layout order (dwx, dwh, db, dwy, dby).
    """
    xs, h_prev, c_prev, gate_i, gate_f, gate_g, gate_o, cell, tanh_c = cache
    t_len = len(xs)
    hs = wy.shape[0]
    dys = np.asarray(dys, dtype=np.float64)

    dwx = np.zeros_like(wx)
    dwh = np.zeros_like(wh)
    db = np.zeros_like(b)
    dwy = np.zeros_like(wy)
    dby = 0.0
    dh_next = np.zeros(hs)
    dc_next = np.zeros(hs)
    for t in range(t_len - 1, -1, -1):
        i, f, g, o = gate_i[t], gate_f[t], gate_g[t], gate_o[t]
        tc = tanh_c[t]
        h_t = o * tc
        dy = dys[t]
        dwy += dy * h_t
        dby += dy
        dh = dy * wy + dh_next
        do = dh * tc
        dc = dh * o * (1.0 - tc * tc) + dc_next
        di = dc * g
        dg = dc * i
        df = dc * c_prev[t]
        dc_next = dc * f
        dz = np.concatenate(
            [
                di * i * (1.0 - i),
                df * f * (1.0 - f),
                dg * (1.0 - g * g),
                do * o * (1.0 - o),
            ]
        )
        dwx += dz * xs[t]
        dwh += np.outer(dz, h_prev[t])
        db += dz
        dh_next = wh.T @ dz
    return dwx, dwh, db, dwy, dby


def closed_loop(wx, wh, b, wy, by, history, horizon, lo, hi):
    """Warm up on the history, then feed each clamped prediction back as
    the next input for `horizon` steps."""
    hs = wy.shape[0]
    h = np.zeros(hs)
    c = np.zeros(hs)
    y = 0.0

    def step(x, h, c):
        z = wx * x + wh @ h + b
        i = _sigmoid(z[0:hs])
        f = _sigmoid(z[hs : 2 * hs])
        g = np.tanh(z[2 * hs : 3 * hs])
        o = _sigmoid(z[3 * hs : 4 * hs])
        c = f * c + i * g
        h = o * np.tanh(c)
        return float(wy @ h + by), h, c

    for x in history:
        y, h, c = step(float(x), h, c)
    out = np.zeros(horizon)
    for n in range(horizon):
        y = min(hi, max(lo, y))
        out[n] = y
        if n + 1 < horizon:
            y, h, c = step(y, h, c)
    return out
