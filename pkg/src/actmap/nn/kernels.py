"""Numba-compiled inner loops for 3D convolution and max-pooling.

Every kernel works on a single sample in (C, T, H, W) layout with float32
data. Batching happens in a Python loop one level up, so results are
bit-identical no matter how samples are grouped into batches.
"""
from __future__ import annotations

import numpy as np
from numba import njit

_JIT = dict(cache=True, fastmath=True, nogil=True)


@njit(**_JIT)
def conv3d_same(xp, w, b, out):
    """Same-padded 3x3x3 cross-correlation plus bias.

    xp:  (C, T+2, H+2, W+2) zero-padded input
    w:   (O, C, 3, 3, 3) taps ordered (dt, dh, dw)
    out: (O, T, H, W), overwritten
    """
    n_out, n_in = w.shape[0], w.shape[1]
    t_len, h_len, w_len = out.shape[1], out.shape[2], out.shape[3]
    for o in range(n_out):
        for t in range(t_len):
            for h in range(h_len):
                acc = out[o, t, h]
                acc[:] = b[o]
                for c in range(n_in):
                    for dt in range(3):
                        for dh in range(3):
                            row = xp[c, t + dt, h + dh]
                            w0 = w[o, c, dt, dh, 0]
                            w1 = w[o, c, dt, dh, 1]
                            w2 = w[o, c, dt, dh, 2]
                            for x in range(w_len):
                                acc[x] += w0 * row[x] + w1 * row[x + 1] + w2 * row[x + 2]


@njit(**_JIT)
def conv3d_weight_grad(xp, go, dw):
    """Accumulate d(loss)/d(weights) for one sample into dw (float64).

    xp: (C, T+2, H+2, W+2) padded forward input
    go: (O, T, H, W) upstream gradient
    dw: (O, C, 3, 3, 3) float64 accumulator, not cleared here
    """
    n_out, n_in = dw.shape[0], dw.shape[1]
    t_len, h_len, w_len = go.shape[1], go.shape[2], go.shape[3]
    for o in range(n_out):
        for t in range(t_len):
            for h in range(h_len):
                g = go[o, t, h]
                for c in range(n_in):
                    for dt in range(3):
                        for dh in range(3):
                            row = xp[c, t + dt, h + dh]
                            s0 = np.float32(0.0)
                            s1 = np.float32(0.0)
                            s2 = np.float32(0.0)
                            for x in range(w_len):
                                gv = g[x]
                                s0 += gv * row[x]
                                s1 += gv * row[x + 1]
                                s2 += gv * row[x + 2]
                            dw[o, c, dt, dh, 0] += s0
                            dw[o, c, dt, dh, 1] += s1
                            dw[o, c, dt, dh, 2] += s2


@njit(**_JIT)
def maxpool3d(x, kt, kh, kw, out, idx):
    """Non-overlapping window maxima with argmax bookkeeping.

    x:   (C, T, H, W); remainder cells beyond the last full window are ignored
    out: (C, T//kt, H//kh, W//kw)
    idx: same shape as out, uint8 linear window offset (dt*kh*kw + dh*kw + dw)
    """
    n_ch = x.shape[0]
    t_out, h_out, w_out = out.shape[1], out.shape[2], out.shape[3]
    for c in range(n_ch):
        for to in range(t_out):
            for ho in range(h_out):
                for wo in range(w_out):
                    best = np.float32(-np.inf)
                    best_k = np.uint8(0)
                    k = 0
                    for dt in range(kt):
                        for dh in range(kh):
                            for dw in range(kw):
                                v = x[c, to * kt + dt, ho * kh + dh, wo * kw + dw]
                                if v > best:
                                    best = v
                                    best_k = np.uint8(k)
                                k += 1
                    out[c, to, ho, wo] = best
                    idx[c, to, ho, wo] = best_k


@njit(**_JIT)
def maxpool3d_grad(go, idx, kt, kh, kw, dx):
    """Scatter upstream gradient to the argmax cell of each window.

    dx must be zero-initialised to the forward input shape.
    """
    n_ch = go.shape[0]
    t_out, h_out, w_out = go.shape[1], go.shape[2], go.shape[3]
    for c in range(n_ch):
        for to in range(t_out):
            for ho in range(h_out):
                for wo in range(w_out):
                    k = idx[c, to, ho, wo]
                    dt = k // (kh * kw)
                    rem = k % (kh * kw)
                    dh = rem // kw
                    dw = rem % kw
                    dx[c, to * kt + dt, ho * kh + dh, wo * kw + dw] += go[c, to, ho, wo]


@njit(**_JIT)
def channel_moments(x, sums, sumsq):
    """Per-channel sum and sum of squares over (N, T, H, W); float64 accumulators."""
    n, c = x.shape[0], x.shape[1]
    flat = x.reshape(n, c, -1)
    m = flat.shape[2]
    for i in range(n):
        for ch in range(c):
            s = 0.0
            q = 0.0
            row = flat[i, ch]
            for k in range(m):
                v = np.float64(row[k])
                s += v
                q += v * v
            sums[ch] += s
            sumsq[ch] += q


@njit(**_JIT)
def bn_normalize(x, mean, istd, gamma, beta, xhat, out):
    """xhat = (x - mean) * istd and out = gamma * xhat + beta, one pass."""
    n, c = x.shape[0], x.shape[1]
    xf = x.reshape(n, c, -1)
    hf = xhat.reshape(n, c, -1)
    of = out.reshape(n, c, -1)
    m = xf.shape[2]
    for i in range(n):
        for ch in range(c):
            mu = mean[ch]
            si = istd[ch]
            g = gamma[ch]
            b = beta[ch]
            for k in range(m):
                h = (xf[i, ch, k] - mu) * si
                hf[i, ch, k] = h
                of[i, ch, k] = g * h + b


@njit(**_JIT)
def bn_grad_reduce(grad, xhat, dbeta, dgamma):
    """dbeta = sum(grad), dgamma = sum(grad * xhat), per channel (float64)."""
    n, c = grad.shape[0], grad.shape[1]
    gf = grad.reshape(n, c, -1)
    hf = xhat.reshape(n, c, -1)
    m = gf.shape[2]
    for i in range(n):
        for ch in range(c):
            sb = 0.0
            sg = 0.0
            for k in range(m):
                g = np.float64(gf[i, ch, k])
                sb += g
                sg += g * hf[i, ch, k]
            dbeta[ch] += sb
            dgamma[ch] += sg


@njit(**_JIT)
def bn_grad_input(grad, xhat, coeff, dbeta, dgamma):
    """In place: grad = coeff * (m * grad - dbeta - xhat * dgamma), per channel."""
    n, c = grad.shape[0], grad.shape[1]
    gf = grad.reshape(n, c, -1)
    hf = xhat.reshape(n, c, -1)
    inner = gf.shape[2]
    m = np.float32(inner * n)
    for i in range(n):
        for ch in range(c):
            a = coeff[ch]
            db = dbeta[ch]
            dg = dgamma[ch]
            for k in range(inner):
                gf[i, ch, k] = a * (m * gf[i, ch, k] - db - hf[i, ch, k] * dg)


@njit(**_JIT)
def relu_forward(x, out, mask):
    """out = max(x, 0) plus a uint8 activity mask; out may alias x."""
    xf = x.reshape(-1)
    of = out.reshape(-1)
    mf = mask.reshape(-1)
    for k in range(xf.size):
        v = xf[k]
        if v > 0:
            of[k] = v
            mf[k] = 1
        else:
            of[k] = 0.0
            mf[k] = 0


@njit(**_JIT)
def relu_backward(grad, mask):
    """In place: zero the gradient where the unit was inactive."""
    gf = grad.reshape(-1)
    mf = mask.reshape(-1)
    for k in range(gf.size):
        if mf[k] == 0:
            gf[k] = 0.0


@njit(**_JIT)
def maxpool3d_grad_full(go, idx, kt, kh, kw, dx):
    """Zero-fill dx and scatter the upstream gradient in one pass."""
    df = dx.reshape(-1)
    for k in range(df.size):
        df[k] = 0.0
    n_ch = go.shape[0]
    t_out, h_out, w_out = go.shape[1], go.shape[2], go.shape[3]
    for c in range(n_ch):
        for to in range(t_out):
            for ho in range(h_out):
                for wo in range(w_out):
                    k = idx[c, to, ho, wo]
                    dt = k // (kh * kw)
                    rem = k % (kh * kw)
                    dx[c, to * kt + dt, ho * kh + rem // kw, wo * kw + rem % kw] \
                        += go[c, to, ho, wo]


def warmup():
    """Trigger JIT compilation of all kernels on tiny inputs."""
    xp = np.zeros((1, 3, 3, 3), np.float32)
    w = np.zeros((1, 1, 3, 3, 3), np.float32)
    b = np.zeros(1, np.float32)
    out = np.zeros((1, 1, 1, 1), np.float32)
    conv3d_same(xp, w, b, out)
    conv3d_weight_grad(xp, out, np.zeros((1, 1, 3, 3, 3), np.float64))
    x = np.zeros((1, 2, 2, 2), np.float32)
    pout = np.zeros((1, 1, 1, 1), np.float32)
    pidx = np.zeros((1, 1, 1, 1), np.uint8)
    maxpool3d(x, 2, 2, 2, pout, pidx)
    maxpool3d_grad(pout, pidx, 2, 2, 2, np.zeros_like(x))
    maxpool3d_grad_full(pout, pidx, 2, 2, 2, np.zeros_like(x))
    xb = np.zeros((1, 1, 2, 2, 2), np.float32)
    c1 = np.zeros(1, np.float64)
    c2 = np.zeros(1, np.float64)
    channel_moments(xb, c1, c2)
    f1 = np.zeros(1, np.float32)
    bn_normalize(xb, f1, f1 + 1, f1 + 1, f1, np.zeros_like(xb), np.zeros_like(xb))
    bn_grad_reduce(xb, xb, c1, c2)
    bn_grad_input(xb.copy(), xb, f1, f1, f1)
    mask = np.zeros(xb.shape, np.uint8)
    relu_forward(xb, np.zeros_like(xb), mask)
    relu_backward(xb.copy(), mask)
