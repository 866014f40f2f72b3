# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled LSTM sequence kernels.

Same API and cache layout as the numpy reference backend; kernels.py
selects whichever is available (or whatever SKYOFF_BACKEND forces).
"""

import numpy as np

from libc.math cimport exp, tanh


cdef inline double _sig(double z):
    return 1.0 / (1.0 + exp(-z))


def sequence_forward(double[::1] wx, double[:, ::1] wh, double[::1] b,
                     double[::1] wy, double by, xs):
    cdef Py_ssize_t t_len = len(xs)
    cdef Py_ssize_t hs = wy.shape[0]
    xs_arr = np.ascontiguousarray(xs, dtype=np.float64)
    ys_arr = np.zeros(t_len)
    h_prev = np.zeros((t_len, hs))
    c_prev = np.zeros((t_len, hs))
    gate_i = np.zeros((t_len, hs))
    gate_f = np.zeros((t_len, hs))
    gate_g = np.zeros((t_len, hs))
    gate_o = np.zeros((t_len, hs))
    cell = np.zeros((t_len, hs))
    tanh_c = np.zeros((t_len, hs))

    cdef double[::1] xv = xs_arr
    cdef double[::1] ys = ys_arr
    cdef double[:, ::1] hp = h_prev
    cdef double[:, ::1] cp = c_prev
    cdef double[:, ::1] gi = gate_i
    cdef double[:, ::1] gf = gate_f
    cdef double[:, ::1] gg = gate_g
    cdef double[:, ::1] go = gate_o
    cdef double[:, ::1] cl = cell
    cdef double[:, ::1] tc = tanh_c

    cdef double[::1] h = np.zeros(hs)
    cdef double[::1] c = np.zeros(hs)
    cdef double[::1] z = np.zeros(4 * hs)

    cdef Py_ssize_t t, j, k
    cdef double x, acc, yacc, iv, fv, gv, ov, cv, tcv
    for t in range(t_len):
        x = xv[t]
        for j in range(hs):
            hp[t, j] = h[j]
            cp[t, j] = c[j]
        for k in range(4 * hs):
            acc = wx[k] * x + b[k]
            for j in range(hs):
                acc += wh[k, j] * h[j]
            z[k] = acc
        yacc = by
        for j in range(hs):
            iv = _sig(z[j])
            fv = _sig(z[hs + j])
            gv = tanh(z[2 * hs + j])
            ov = _sig(z[3 * hs + j])
            cv = fv * c[j] + iv * gv
            tcv = tanh(cv)
            gi[t, j] = iv
            gf[t, j] = fv
            gg[t, j] = gv
            go[t, j] = ov
            cl[t, j] = cv
            tc[t, j] = tcv
            c[j] = cv
            h[j] = ov * tcv
            yacc += wy[j] * h[j]
        ys[t] = yacc
    cache = (xs_arr, h_prev, c_prev, gate_i, gate_f, gate_g, gate_o, cell, tanh_c)
    return ys_arr, cache


def sequence_backward(double[::1] wx, double[:, ::1] wh, double[::1] b,
                      double[::1] wy, double by, cache, dys):
    xs_arr, h_prev, c_prev, gate_i, gate_f, gate_g, gate_o, cell, tanh_c = cache
    cdef Py_ssize_t t_len = xs_arr.shape[0]
    cdef Py_ssize_t hs = wy.shape[0]
    dys_arr = np.ascontiguousarray(dys, dtype=np.float64)

    dwx_arr = np.zeros(4 * hs)
    dwh_arr = np.zeros((4 * hs, hs))
    db_arr = np.zeros(4 * hs)
    dwy_arr = np.zeros(hs)
    cdef double dby = 0.0

    cdef double[::1] xv = xs_arr
    cdef double[::1] dyv = dys_arr
    cdef double[:, ::1] hp = h_prev
    cdef double[:, ::1] cp = c_prev
    cdef double[:, ::1] gi = gate_i
    cdef double[:, ::1] gf = gate_f
    cdef double[:, ::1] gg = gate_g
    cdef double[:, ::1] go = gate_o
    cdef double[:, ::1] tc = tanh_c
    cdef double[::1] dwx = dwx_arr
    cdef double[:, ::1] dwh = dwh_arr
    cdef double[::1] db = db_arr
    cdef double[::1] dwy = dwy_arr

    cdef double[::1] dh_next = np.zeros(hs)
    cdef double[::1] dc_next = np.zeros(hs)
    cdef double[::1] dz = np.zeros(4 * hs)

    cdef Py_ssize_t t, j, k
    cdef double dy, x, h_t, dh, do_, dc, di, dg, df, iv, fv, gv, ov, acc
    for t in range(t_len - 1, -1, -1):
        dy = dyv[t]
        x = xv[t]
        dby += dy
        for j in range(hs):
            iv = gi[t, j]
            fv = gf[t, j]
            gv = gg[t, j]
            ov = go[t, j]
            h_t = ov * tc[t, j]
            dwy[j] += dy * h_t
            dh = dy * wy[j] + dh_next[j]
            do_ = dh * tc[t, j]
            dc = dh * ov * (1.0 - tc[t, j] * tc[t, j]) + dc_next[j]
            di = dc * gv
            dg = dc * iv
            df = dc * cp[t, j]
            dc_next[j] = dc * fv
            dz[j] = di * iv * (1.0 - iv)
            dz[hs + j] = df * fv * (1.0 - fv)
            dz[2 * hs + j] = dg * (1.0 - gv * gv)
            dz[3 * hs + j] = do_ * ov * (1.0 - ov)
        for k in range(4 * hs):
            dwx[k] += dz[k] * x
            db[k] += dz[k]
            for j in range(hs):
                dwh[k, j] += dz[k] * hp[t, j]
        for j in range(hs):
            acc = 0.0
            for k in range(4 * hs):
                acc += wh[k, j] * dz[k]
            dh_next[j] = acc
    return dwx_arr, dwh_arr, db_arr, dwy_arr, dby


def closed_loop(double[::1] wx, double[:, ::1] wh, double[::1] b,
                double[::1] wy, double by, history, Py_ssize_t horizon,
                double lo, double hi):
    cdef Py_ssize_t hs = wy.shape[0]
    hist_arr = np.ascontiguousarray(history, dtype=np.float64)
    out_arr = np.zeros(horizon)

    cdef double[::1] hv = hist_arr
    cdef double[::1] out = out_arr
    cdef double[::1] h = np.zeros(hs)
    cdef double[::1] c = np.zeros(hs)
    cdef double[::1] z = np.zeros(4 * hs)

    cdef Py_ssize_t t, j, k, n
    cdef double x, acc, y, iv, fv, gv, ov
    y = 0.0
    for t in range(hv.shape[0] + horizon - 1):
        if t < hv.shape[0]:
            x = hv[t]
        else:
            x = y  # already clamped below
        for k in range(4 * hs):
            acc = wx[k] * x + b[k]
            for j in range(hs):
                acc += wh[k, j] * h[j]
            z[k] = acc
        y = by
        for j in range(hs):
            iv = _sig(z[j])
            fv = _sig(z[hs + j])
            gv = tanh(z[2 * hs + j])
            ov = _sig(z[3 * hs + j])
            c[j] = fv * c[j] + iv * gv
            h[j] = ov * tanh(c[j])
            y += wy[j] * h[j]
        if t >= hv.shape[0] - 1:
            n = t - (hv.shape[0] - 1)
            if y < lo:
                y = lo
            elif y > hi:
                y = hi
            if n < horizon:
                out[n] = y
    return out_arr
