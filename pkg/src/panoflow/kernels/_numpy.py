"""Vectorised numpy implementations of the hot kernels.

Signatures mirror :mod:`panoflow.kernels._numba` exactly; images are
float64 arrays of shape (H, W, C).
"""
import numpy as np


def bilinear_wrap(img, u, v):
    H, W = img.shape[:2]
    u = np.mod(u, W)
    v = np.clip(v, 0.0, H - 1.0)
    u0f = np.floor(u)
    v0f = np.floor(v)
    fu = (u - u0f)[:, None]
    fv = (v - v0f)[:, None]
    u0 = u0f.astype(np.int64) % W
    u1 = (u0 + 1) % W
    v0 = v0f.astype(np.int64)
    v1 = np.minimum(v0 + 1, H - 1)
    top = (1.0 - fu) * img[v0, u0] + fu * img[v0, u1]
    bot = (1.0 - fu) * img[v1, u0] + fu * img[v1, u1]
    return (1.0 - fv) * top + fv * bot


def bilinear_clamp(img, x, y):
    H, W = img.shape[:2]
    x = np.clip(x, 0.0, W - 1.0)
    y = np.clip(y, 0.0, H - 1.0)
    x0f = np.floor(x)
    y0f = np.floor(y)
    fx = (x - x0f)[:, None]
    fy = (y - y0f)[:, None]
    x0 = x0f.astype(np.int64)
    y0 = y0f.astype(np.int64)
    x1 = np.minimum(x0 + 1, W - 1)
    y1 = np.minimum(y0 + 1, H - 1)
    top = (1.0 - fx) * img[y0, x0] + fx * img[y0, x1]
    bot = (1.0 - fx) * img[y1, x0] + fx * img[y1, x1]
    return (1.0 - fy) * top + fy * bot


def _sample2d(img, x, y):
    return bilinear_clamp(img[:, :, None], x.ravel(), y.ravel())[:, 0].reshape(x.shape)


def inverse_search(I0, gx, gy, I1, px, py, init, valid, patch_size, max_iters, eps):
    """Inverse-compositional translation search for every patch at once.

    Returns the per-patch displacement (P, 2) and the mean absolute
    zero-mean residual (P,) at that displacement.
    """
    P = px.shape[0]
    ps = patch_size
    jj, ii = np.meshgrid(np.arange(ps), np.arange(ps))
    X = px[:, None, None] + jj[None]
    Y = py[:, None, None] + ii[None]
    T = I0[Y, X]
    Gx = gx[Y, X]
    Gy = gy[Y, X]
    T = T - T.mean(axis=(1, 2), keepdims=True)
    Gx = Gx - Gx.mean(axis=(1, 2), keepdims=True)
    Gy = Gy - Gy.mean(axis=(1, 2), keepdims=True)
    h11 = (Gx * Gx).sum(axis=(1, 2))
    h12 = (Gx * Gy).sum(axis=(1, 2))
    h22 = (Gy * Gy).sum(axis=(1, 2))
    det = h11 * h22 - h12 * h12
    Xf = X.astype(np.float64)
    Yf = Y.astype(np.float64)

    def residual(idx, uv):
        Wv = _sample2d(I1, Xf[idx] + uv[:, 0, None, None], Yf[idx] + uv[:, 1, None, None])
        Wv = Wv - Wv.mean(axis=(1, 2), keepdims=True)
        return Wv - T[idx]

    uv = init.astype(np.float64).copy()
    all_idx = np.arange(P)
    resid0 = np.abs(residual(all_idx, uv)).mean(axis=(1, 2))
    active = valid & (det > 1e-12 * (h11 + h22 + 1e-300) ** 2)
    for _ in range(max_iters):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        e = residual(idx, uv[idx])
        b1 = (Gx[idx] * e).sum(axis=(1, 2))
        b2 = (Gy[idx] * e).sum(axis=(1, 2))
        d1 = (h22[idx] * b1 - h12[idx] * b2) / det[idx]
        d2 = (h11[idx] * b2 - h12[idx] * b1) / det[idx]
        uv[idx, 0] -= d1
        uv[idx, 1] -= d2
        active[idx] = d1 * d1 + d2 * d2 >= eps * eps
    resid = np.abs(residual(all_idx, uv)).mean(axis=(1, 2))
    moved = uv - init
    bad = (moved[:, 0] ** 2 + moved[:, 1] ** 2 > ps * ps) | (resid > resid0) | ~np.isfinite(resid)
    uv[bad] = init[bad]
    resid[bad] = resid0[bad]
    return uv, resid


def densify(px, py, uv, weight, patch_size, H, W):
    """Accumulate weighted patch displacements onto the pixel grid.

    Returns the weighted sum (H, W, 2) and weight total (H, W).
    """
    ps = patch_size
    acc = np.zeros(H * W * 2)
    wsum = np.zeros(H * W)
    for i in range(ps):
        for j in range(ps):
            lin = (py + i) * W + (px + j)
            wsum += np.bincount(lin, weights=weight, minlength=H * W)
            acc[0::2] += np.bincount(lin, weights=weight * uv[:, 0], minlength=H * W)
            acc[1::2] += np.bincount(lin, weights=weight * uv[:, 1], minlength=H * W)
    return acc.reshape(H, W, 2), wsum.reshape(H, W)
