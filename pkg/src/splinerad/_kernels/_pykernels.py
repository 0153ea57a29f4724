"""NumPy implementations of the hot kernels.

Semantics match ``_ckernels.pyx`` exactly; the compiled module is preferred
when it is importable.
"""
import numpy as np


def de_casteljau(ctrl, t):
    """Evaluate cubic Bezier segments by repeated linear interpolation.

    Parameters
    ----------
    ctrl : ndarray, shape (S, 4, 2)
    t : ndarray, shape (n,)

    Returns
    -------
    ndarray, shape (S, n, 2)
    """
    ctrl = np.asarray(ctrl, dtype=float)
    t = np.asarray(t, dtype=float)[None, :, None]
    p = [ctrl[:, i, None, :] for i in range(4)]
    while len(p) > 1:
        p = [(1.0 - t) * a + t * b for a, b in zip(p[:-1], p[1:])]
    return np.broadcast_to(p[0], (ctrl.shape[0], t.shape[1], 2)).copy()


def polyline_self_intersects(pts, closed, tol):
    """True if any two non-adjacent edges of the polyline touch within ``tol``."""
    pts = np.asarray(pts, dtype=float)
    if closed:
        pts = np.vstack([pts, pts[:1]])
    a = pts[:-1]
    b = pts[1:]
    m = len(a)
    if m < 3:
        return False
    i, j = np.triu_indices(m, k=2)
    if closed:
        keep = ~((i == 0) & (j == m - 1))
        i, j = i[keep], j[keep]
    p, r = a[i], b[i] - a[i]
    q, s = a[j], b[j] - a[j]
    qp = q - p
    rxs = r[:, 0] * s[:, 1] - r[:, 1] * s[:, 0]
    qpxr = qp[:, 0] * r[:, 1] - qp[:, 1] * r[:, 0]
    qpxs = qp[:, 0] * s[:, 1] - qp[:, 1] * s[:, 0]
    par = np.abs(rxs) <= 1e-300
    with np.errstate(divide="ignore", invalid="ignore"):
        tt = np.where(par, -1.0, qpxs / np.where(par, 1.0, rxs))
        uu = np.where(par, -1.0, qpxr / np.where(par, 1.0, rxs))
    lr = np.hypot(r[:, 0], r[:, 1])
    ls = np.hypot(s[:, 0], s[:, 1])
    et = tol / np.maximum(lr, 1e-300)
    eu = tol / np.maximum(ls, 1e-300)
    hit = (~par) & (tt >= -et) & (tt <= 1 + et) & (uu >= -eu) & (uu <= 1 + eu)
    if hit.any():
        return True
    # parallel/collinear pairs: endpoint-to-segment distances
    idx = np.nonzero(par)[0]
    for k in idx:
        if _seg_dist(p[k], p[k] + r[k], q[k], q[k] + s[k]) <= tol:
            return True
    return False


def _point_seg(pt, a, b):
    d = b - a
    L2 = d @ d
    if L2 == 0.0:
        return float(np.hypot(*(pt - a)))
    u = min(1.0, max(0.0, float((pt - a) @ d) / L2))
    return float(np.hypot(*(pt - a - u * d)))


def _seg_dist(a, b, c, d):
    return min(_point_seg(a, c, d), _point_seg(b, c, d),
               _point_seg(c, a, b), _point_seg(d, a, b))


def gauss_corr(A, B, theta):
    """Gaussian correlation ``exp(-sum_k theta_k (a_k - b_k)^2)``, shape (n, m)."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    theta = np.asarray(theta, dtype=float)
    sa = A * np.sqrt(theta)
    sb = B * np.sqrt(theta)
    d2 = (sa * sa).sum(1)[:, None] + (sb * sb).sum(1)[None, :] - 2.0 * sa @ sb.T
    return np.exp(-np.maximum(d2, 0.0))


def array_factor(moments, y, k0, sin_t, ef):
    """Far field of point current moments along the y axis.

    ``E[f, t, c] = ef[t] * sum_p moments[f, p, c] * exp(1j k0[f] y[p] sin_t[t])``
    """
    moments = np.asarray(moments, dtype=complex)
    phase = np.exp(1j * np.asarray(k0)[:, None, None] * np.asarray(y)[None, None, :]
                   * np.asarray(sin_t)[None, :, None])
    return np.einsum("ftp,fpc->ftc", phase, moments) * np.asarray(ef)[None, :, None]
