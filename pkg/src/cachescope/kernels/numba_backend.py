"""Numba-JIT implementations of the hot kernels.

Same contracts as numpy_backend; matmuls stay on np.dot (BLAS) while the
per-timestep gate math and the DFT inner loops are fused into nopython
loops. Compiled artifacts are cached on disk.
"""

import numpy as np
from numba import njit

ACT_TANH = 0
ACT_RELU = 1


@njit(cache=True)
def _act_scalar(z, act_id):
    if act_id == ACT_TANH:
        return np.tanh(z)
    return z if z > 0.0 else 0.0


@njit(cache=True)
def lstm_forward(x_seq, wx, wh, b, act_id):
    """Run one LSTM layer over a batched window; see numpy_backend.lstm_forward."""
    L, B, _ = x_seq.shape
    H = wh.shape[0]
    h_seq = np.empty((L, B, H))
    i_seq = np.empty((L, B, H))
    f_seq = np.empty((L, B, H))
    g_seq = np.empty((L, B, H))
    o_seq = np.empty((L, B, H))
    c_seq = np.empty((L, B, H))
    h = np.zeros((B, H))
    c = np.zeros((B, H))
    for t in range(L):
        z = np.dot(x_seq[t], wx) + np.dot(h, wh)
        for bi in range(B):
            for u in range(H):
                i = 1.0 / (1.0 + np.exp(-(z[bi, u] + b[u])))
                f = 1.0 / (1.0 + np.exp(-(z[bi, H + u] + b[H + u])))
                g = _act_scalar(z[bi, 2 * H + u] + b[2 * H + u], act_id)
                o = 1.0 / (1.0 + np.exp(-(z[bi, 3 * H + u] + b[3 * H + u])))
                cc = f * c[bi, u] + i * g
                c[bi, u] = cc
                h[bi, u] = o * _act_scalar(cc, act_id)
                i_seq[t, bi, u] = i
                f_seq[t, bi, u] = f
                g_seq[t, bi, u] = g
                o_seq[t, bi, u] = o
                c_seq[t, bi, u] = cc
                h_seq[t, bi, u] = h[bi, u]
    return h_seq, i_seq, f_seq, g_seq, o_seq, c_seq


@njit(cache=True)
def lstm_backward(x_seq, wx, wh, i_seq, f_seq, g_seq, o_seq, c_seq, h_seq, dh_seq, act_id):
    """Backprop through one LSTM layer; see numpy_backend.lstm_backward."""
    L, B, D = x_seq.shape
    H = wh.shape[0]
    dwx = np.zeros_like(wx)
    dwh = np.zeros_like(wh)
    db = np.zeros(4 * H)
    dx_seq = np.empty((L, B, D))
    dh_next = np.zeros((B, H))
    dc_next = np.zeros((B, H))
    dz = np.empty((B, 4 * H))
    for t in range(L - 1, -1, -1):
        for bi in range(B):
            for u in range(H):
                i = i_seq[t, bi, u]
                f = f_seq[t, bi, u]
                g = g_seq[t, bi, u]
                o = o_seq[t, bi, u]
                c = c_seq[t, bi, u]
                if act_id == ACT_TANH:
                    ac = np.tanh(c)
                    d_ac = 1.0 - ac * ac
                    d_g = 1.0 - g * g
                else:
                    ac = c if c > 0.0 else 0.0
                    d_ac = 1.0 if ac > 0.0 else 0.0
                    d_g = 1.0 if g > 0.0 else 0.0
                dh = dh_seq[t, bi, u] + dh_next[bi, u]
                dc = dh * o * d_ac + dc_next[bi, u]
                c_prev = c_seq[t - 1, bi, u] if t > 0 else 0.0
                dz[bi, u] = dc * g * i * (1.0 - i)
                dz[bi, H + u] = dc * c_prev * f * (1.0 - f)
                dz[bi, 2 * H + u] = dc * i * d_g
                dz[bi, 3 * H + u] = dh * ac * o * (1.0 - o)
                db[u] += dz[bi, u]
                db[H + u] += dz[bi, H + u]
                db[2 * H + u] += dz[bi, 2 * H + u]
                db[3 * H + u] += dz[bi, 3 * H + u]
                dc_next[bi, u] = dc * f
        dwx += np.dot(x_seq[t].T, dz)
        if t > 0:
            dwh += np.dot(h_seq[t - 1].T, dz)
        dx_seq[t] = np.dot(dz, wx.T)
        dh_next = np.dot(dz, wh.T)
    return dx_seq, dwx, dwh, db


@njit(cache=True)
def dft_power(x):
    """Mean-removed periodogram powers |DFT_k|^2 / N for k = 1..N//2.

    The basis is generated by the angle-addition recurrence (one rotation
    per sample) instead of per-element trig calls; drift is ~N*eps, far
    below the 1e-9 tolerances this feeds.
    """
    n = x.size
    mean = 0.0
    for t in range(n):
        mean += x[t]
    mean /= n
    centered = np.empty(n)
    for t in range(n):
        centered[t] = x[t] - mean
    kmax = n // 2
    power = np.empty(kmax)
    for k in range(1, kmax + 1):
        w = 2.0 * np.pi * k / n
        cw = np.cos(w)
        sw = np.sin(w)
        c = 1.0  # cos(w * 0)
        s = 0.0  # sin(w * 0)
        re = 0.0
        im = 0.0
        for t in range(n):
            v = centered[t]
            re += v * c
            im += v * s
            c, s = c * cw - s * sw, s * cw + c * sw
        power[k - 1] = (re * re + im * im) / n
    return power
