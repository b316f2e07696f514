"""Pure-numpy implementations of the hot kernels.

Reference fallback for machines without numba (or with
CACHESCOPE_BACKEND=numpy). Mirrors numba_backend function-for-function;
matmuls go through np.dot in both so results agree closely.
"""

import numpy as np

ACT_TANH = 0
ACT_RELU = 1


def _act(z, act_id):
    if act_id == ACT_TANH:
        return np.tanh(z)
    return np.maximum(z, 0.0)


def _act_deriv_from_out(a, act_id):
    # derivative of the activation expressed through its output value
    if act_id == ACT_TANH:
        return 1.0 - a * a
    return (a > 0.0).astype(np.float64)


def _sigmoid(z):
    # exp may overflow to inf for very negative z; 1/(1+inf) -> 0 is the
    # right limit, so just silence the warning
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-z))


def lstm_forward(x_seq, wx, wh, b, act_id):
    """Run one LSTM layer over a batched window.

    x_seq: (L, B, D); wx: (D, 4H); wh: (H, 4H); b: (4H,). Gate packing
    along the 4H axis is [input, forget, candidate, output]. Returns
    (h_seq, i_seq, f_seq, g_seq, o_seq, c_seq), each (L, B, H).
    """
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
        z = np.dot(x_seq[t], wx) + np.dot(h, wh) + b
        i = _sigmoid(z[:, :H])
        f = _sigmoid(z[:, H : 2 * H])
        g = _act(z[:, 2 * H : 3 * H], act_id)
        o = _sigmoid(z[:, 3 * H :])
        c = f * c + i * g
        h = o * _act(c, act_id)
        i_seq[t], f_seq[t], g_seq[t], o_seq[t], c_seq[t], h_seq[t] = i, f, g, o, c, h
    return h_seq, i_seq, f_seq, g_seq, o_seq, c_seq


def lstm_backward(x_seq, wx, wh, i_seq, f_seq, g_seq, o_seq, c_seq, h_seq, dh_seq, act_id):
    """Backprop through one LSTM layer.

    dh_seq is the loss gradient w.r.t. h_seq (all timesteps). Returns
    (dx_seq, dwx, dwh, db).
    """
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
        i, f, g, o, c = i_seq[t], f_seq[t], g_seq[t], o_seq[t], c_seq[t]
        ac = _act(c, act_id)
        dh = dh_seq[t] + dh_next
        dc = dh * o * _act_deriv_from_out(ac, act_id) + dc_next
        c_prev = c_seq[t - 1] if t > 0 else np.zeros((B, H))
        h_prev = h_seq[t - 1] if t > 0 else np.zeros((B, H))
        dz[:, :H] = dc * g * i * (1.0 - i)
        dz[:, H : 2 * H] = dc * c_prev * f * (1.0 - f)
        dz[:, 2 * H : 3 * H] = dc * i * _act_deriv_from_out(g, act_id)
        dz[:, 3 * H :] = dh * ac * o * (1.0 - o)
        dwx += np.dot(x_seq[t].T, dz)
        dwh += np.dot(h_prev.T, dz)
        db += dz.sum(axis=0)
        dx_seq[t] = np.dot(dz, wx.T)
        dh_next = np.dot(dz, wh.T)
        dc_next = dc * f
    return dx_seq, dwx, dwh, db


def dft_power(x):
    """Mean-removed periodogram powers |DFT_k|^2 / N for k = 1..N//2."""
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    centered = x - x.mean()
    ks = np.arange(1, n // 2 + 1)
    ang = (2.0 * np.pi / n) * np.outer(ks, np.arange(n))
    re = np.dot(np.cos(ang), centered)
    im = np.dot(np.sin(ang), centered)
    return (re * re + im * im) / n
