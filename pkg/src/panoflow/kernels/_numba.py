"""Numba-compiled implementations of the hot kernels.

Each function matches the numpy reference in :mod:`panoflow.kernels._numpy`
up to floating-point summation order.
"""
import math

import numpy as np
from numba import njit, prange


@njit(cache=True, parallel=True)
def bilinear_wrap(img, u, v):
    H, W, C = img.shape
    N = u.shape[0]
    out = np.empty((N, C))
    for k in prange(N):
        uu = u[k] - W * math.floor(u[k] / W)
        vv = min(max(v[k], 0.0), H - 1.0)
        u0f = math.floor(uu)
        v0f = math.floor(vv)
        fu = uu - u0f
        fv = vv - v0f
        u0 = int(u0f) % W
        u1 = (u0 + 1) % W
        v0 = int(v0f)
        v1 = min(v0 + 1, H - 1)
        for c in range(C):
            top = (1.0 - fu) * img[v0, u0, c] + fu * img[v0, u1, c]
            bot = (1.0 - fu) * img[v1, u0, c] + fu * img[v1, u1, c]
            out[k, c] = (1.0 - fv) * top + fv * bot
    return out


@njit(cache=True, parallel=True)
def bilinear_clamp(img, x, y):
    H, W, C = img.shape
    N = x.shape[0]
    out = np.empty((N, C))
    for k in prange(N):
        xx = min(max(x[k], 0.0), W - 1.0)
        yy = min(max(y[k], 0.0), H - 1.0)
        x0f = math.floor(xx)
        y0f = math.floor(yy)
        fx = xx - x0f
        fy = yy - y0f
        x0 = int(x0f)
        y0 = int(y0f)
        x1 = min(x0 + 1, W - 1)
        y1 = min(y0 + 1, H - 1)
        for c in range(C):
            top = (1.0 - fx) * img[y0, x0, c] + fx * img[y0, x1, c]
            bot = (1.0 - fx) * img[y1, x0, c] + fx * img[y1, x1, c]
            out[k, c] = (1.0 - fy) * top + fy * bot
    return out


@njit(cache=True, inline="always")
def _at(img, x, y):
    H, W = img.shape
    xx = min(max(x, 0.0), W - 1.0)
    yy = min(max(y, 0.0), H - 1.0)
    x0f = math.floor(xx)
    y0f = math.floor(yy)
    fx = xx - x0f
    fy = yy - y0f
    x0 = int(x0f)
    y0 = int(y0f)
    x1 = min(x0 + 1, W - 1)
    y1 = min(y0 + 1, H - 1)
    top = (1.0 - fx) * img[y0, x0] + fx * img[y0, x1]
    bot = (1.0 - fx) * img[y1, x0] + fx * img[y1, x1]
    return (1.0 - fy) * top + fy * bot


@njit(cache=True)
def _residual(I1, T, x0, y0, u, v, buf):
    ps = T.shape[0]
    mean = 0.0
    for i in range(ps):
        for j in range(ps):
            val = _at(I1, x0 + j + u, y0 + i + v)
            buf[i, j] = val
            mean += val
    mean /= ps * ps
    for i in range(ps):
        for j in range(ps):
            buf[i, j] = buf[i, j] - mean - T[i, j]


@njit(cache=True, parallel=True)
def inverse_search(I0, gx, gy, I1, px, py, init, valid, patch_size, max_iters, eps):
    P = px.shape[0]
    ps = patch_size
    n = ps * ps
    uv = init.copy()
    resid = np.empty(P)
    for p in prange(P):
        x0 = px[p]
        y0 = py[p]
        T = np.empty((ps, ps))
        Gx = np.empty((ps, ps))
        Gy = np.empty((ps, ps))
        e = np.empty((ps, ps))
        mt = 0.0
        mx = 0.0
        my = 0.0
        for i in range(ps):
            for j in range(ps):
                T[i, j] = I0[y0 + i, x0 + j]
                Gx[i, j] = gx[y0 + i, x0 + j]
                Gy[i, j] = gy[y0 + i, x0 + j]
                mt += T[i, j]
                mx += Gx[i, j]
                my += Gy[i, j]
        mt /= n
        mx /= n
        my /= n
        h11 = 0.0
        h12 = 0.0
        h22 = 0.0
        for i in range(ps):
            for j in range(ps):
                T[i, j] -= mt
                Gx[i, j] -= mx
                Gy[i, j] -= my
                h11 += Gx[i, j] * Gx[i, j]
                h12 += Gx[i, j] * Gy[i, j]
                h22 += Gy[i, j] * Gy[i, j]
        det = h11 * h22 - h12 * h12
        u0 = init[p, 0]
        v0 = init[p, 1]
        _residual(I1, T, x0, y0, u0, v0, e)
        r0 = 0.0
        for i in range(ps):
            for j in range(ps):
                r0 += abs(e[i, j])
        r0 /= n
        u = u0
        v = v0
        if valid[p] and det > 1e-12 * (h11 + h22 + 1e-300) ** 2:
            for _ in range(max_iters):
                _residual(I1, T, x0, y0, u, v, e)
                b1 = 0.0
                b2 = 0.0
                for i in range(ps):
                    for j in range(ps):
                        b1 += Gx[i, j] * e[i, j]
                        b2 += Gy[i, j] * e[i, j]
                d1 = (h22 * b1 - h12 * b2) / det
                d2 = (h11 * b2 - h12 * b1) / det
                u -= d1
                v -= d2
                if d1 * d1 + d2 * d2 < eps * eps:
                    break
        _residual(I1, T, x0, y0, u, v, e)
        r = 0.0
        for i in range(ps):
            for j in range(ps):
                r += abs(e[i, j])
        r /= n
        du = u - u0
        dv = v - v0
        if du * du + dv * dv > ps * ps or r > r0 or not math.isfinite(r):
            u = u0
            v = v0
            r = r0
        uv[p, 0] = u
        uv[p, 1] = v
        resid[p] = r
    return uv, resid


@njit(cache=True)
def densify(px, py, uv, weight, patch_size, H, W):
    acc = np.zeros((H, W, 2))
    wsum = np.zeros((H, W))
    for p in range(px.shape[0]):
        w = weight[p]
        if w == 0.0:
            continue
        for i in range(patch_size):
            for j in range(patch_size):
                y = py[p] + i
                x = px[p] + j
                acc[y, x, 0] += w * uv[p, 0]
                acc[y, x, 1] += w * uv[p, 1]
                wsum[y, x] += w
    return acc, wsum
