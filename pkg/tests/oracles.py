"""Independent reference computations used as test oracles.

Everything here is written against explicit matrices or plain loops and
shares no code with ``sci_forge``.
"""

import math

import numpy as np
import scipy.sparse as sp


# --- sensing operator as an explicit sparse matrix -------------------------

def sensing_matrix(masks):
    """Phi with shape (H*W, T*H*W); x is vectorized frame after frame."""
    t = masks.shape[0]
    return sp.hstack([sp.diags(masks[k].ravel().astype(np.float64)) for k in range(t)]).tocsr()


def diff_matrices(h, w):
    def d1(n):
        if n == 1:
            return sp.csr_matrix((0, 1))
        return sp.diags([-np.ones(n - 1), np.ones(n - 1)], [0, 1], shape=(n - 1, n))
    dh = sp.kron(sp.identity(h), d1(w))
    dv = sp.kron(d1(h), sp.identity(w))
    return sp.vstack([dh, dv]).tocsr()


def tv_objective_ref(u, x, lam):
    u = np.asarray(u, np.float64)
    x = np.asarray(x, np.float64)
    tv = np.abs(np.diff(u, axis=1)).sum() + np.abs(np.diff(u, axis=0)).sum()
    return 0.5 * ((u - x) ** 2).sum() + lam * tv


def tv_dual_ref(frame, lam, iters):
    """Projected-gradient descent on the dual of anisotropic TV, last iterate."""
    h, w = frame.shape
    d = diff_matrices(h, w)
    x = frame.astype(np.float64).ravel()
    p = np.zeros(d.shape[0])
    u = x.copy()
    for _ in range(iters):
        u = x - lam * (d.T @ p)
        p = np.clip(p + (d @ u) / (8.0 * lam), -1.0, 1.0)
    u = x - lam * (d.T @ p)
    return u.reshape(h, w)


def gap_tv_ref(y, masks, iters, lam, inner):
    t, h, w = masks.shape
    phi = sensing_matrix(masks)
    yv = y.astype(np.float64).ravel()
    e = np.asarray(phi.multiply(phi).sum(axis=1)).ravel()
    inv_e = np.where(e > 0, 1.0 / np.where(e > 0, e, 1.0), 0.0)
    x = (phi.T @ (yv / np.maximum(e, 1.0)))
    for _ in range(iters):
        x = x + phi.T @ ((yv - phi @ x) * inv_e)
        cube = x.reshape(t, h, w)
        x = np.stack([tv_dual_ref(cube[k], lam, inner) for k in range(t)]).ravel()
    return np.clip(x.reshape(t, h, w), 0.0, 1.0)


def best_piecewise_constant_objective(x, lam, levels):
    """Grid search over two-level images split along one column or row."""
    x = np.asarray(x, np.float64)
    h, w = x.shape
    best = math.inf
    for axis, n in ((1, w), (0, h)):
        for j in range(0, n + 1):
            for a in levels:
                for b in levels:
                    u = np.empty_like(x)
                    if axis == 1:
                        u[:, :j] = a
                        u[:, j:] = b
                    else:
                        u[:j] = a
                        u[j:] = b
                    best = min(best, tv_objective_ref(u, x, lam))
    return best


# --- convolution ---------------------------------------------------------

def conv3d_loops(x, k, b, dilation):
    """Direct nested-loop 3D cross-correlation with zero padding ``dilation``."""
    c_in, t, h, w = x.shape
    c_out = k.shape[0]
    d = dilation
    out = np.zeros((c_out, t, h, w))
    for o in range(c_out):
        for tt in range(t):
            for hh in range(h):
                for ww in range(w):
                    acc = float(b[o])
                    for i in range(c_in):
                        for a in range(3):
                            for bb in range(3):
                                for c in range(3):
                                    ti = tt + (a - 1) * d
                                    hi = hh + (bb - 1) * d
                                    wi = ww + (c - 1) * d
                                    if 0 <= ti < t and 0 <= hi < h and 0 <= wi < w:
                                        acc += float(k[o, i, a, bb, c]) * float(x[i, ti, hi, wi])
                    out[o, tt, hh, ww] = acc
    return out


# --- Fourier ------------------------------------------------------------

def dft2_half(x):
    """Half-spectrum 2D DFT via explicit DFT matrices."""
    h, w = x.shape
    fh = np.exp(-2j * np.pi * np.outer(np.arange(h), np.arange(h)) / h)
    fw = np.exp(-2j * np.pi * np.outer(np.arange(w), np.arange(w)) / w)
    full = fh @ x.astype(np.float64) @ fw.T
    return full[:, : w // 2 + 1]


# --- metrics ------------------------------------------------------------

def psnr_ref(a, b):
    a = np.asarray(a, np.float64).ravel()
    b = np.asarray(b, np.float64).ravel()
    mse = sum((float(p) - float(q)) ** 2 for p, q in zip(a, b)) / a.size
    return 10.0 * math.log10(1.0 / mse)


def gaussian_window_ref(size=11, sigma=1.5):
    c = (size - 1) / 2.0
    g = np.array([[math.exp(-((i - c) ** 2 + (j - c) ** 2) / (2 * sigma ** 2)) for j in range(size)]
                  for i in range(size)])
    return g / g.sum()


def ssim_ref(a, b, size=11, sigma=1.5, k1=0.01, k2=0.03, L=1.0):
    a = np.asarray(a, np.float64)
    b = np.asarray(b, np.float64)
    g = gaussian_window_ref(size, sigma)
    c1, c2 = (k1 * L) ** 2, (k2 * L) ** 2
    h, w = a.shape
    vals = []
    for i in range(h - size + 1):
        for j in range(w - size + 1):
            pa = a[i:i + size, j:j + size]
            pb = b[i:i + size, j:j + size]
            ma = (g * pa).sum()
            mb = (g * pb).sum()
            va = (g * (pa - ma) ** 2).sum()
            vb = (g * (pb - mb) ** 2).sum()
            cov = (g * (pa - ma) * (pb - mb)).sum()
            vals.append(((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma ** 2 + mb ** 2 + c1) * (va + vb + c2)))
    return float(np.mean(vals))


# --- seeded synthetic instances ---------------------------------------------

def piecewise_instance(seed, t=8, size=32, n_rect=3):
    """Piecewise-constant moving rectangles plus Bernoulli(0.5) masks."""
    g = np.random.default_rng(seed)
    cube = np.full((t, size, size), 0.2)
    rects = []
    for _ in range(n_rect):
        y0, x0 = g.integers(0, size - 8, 2)
        hh, ww = g.integers(5, 12, 2)
        vy, vx = g.integers(-1, 2, 2)
        rects.append((y0, x0, hh, ww, vy, vx, g.uniform(0.4, 1.0)))
    for k in range(t):
        for y0, x0, hh, ww, vy, vx, lev in rects:
            ys, xs = (y0 + vy * k) % size, (x0 + vx * k) % size
            cube[k, ys:ys + hh, xs:xs + ww] = lev
    masks = (g.random((t, size, size)) < 0.5).astype(np.float64)
    return cube, masks


def psnr_cube_ref(ref, test):
    mse = np.mean((np.asarray(ref, np.float64) - np.asarray(test, np.float64)) ** 2)
    return 10.0 * math.log10(1.0 / mse)
