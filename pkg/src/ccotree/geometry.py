"""Vectorized point/segment distance kernels.

Dot products are written as explicit sums over coordinates so that a
distance computed on a subset of segments is bitwise identical to the one
computed on the full array. The spatial index relies on this to reproduce
linear-scan results exactly.
"""

import math

import numpy as np


def _dot(u, v):
    out = u[..., 0] * v[..., 0]
    for k in range(1, u.shape[-1]):
        out = out + u[..., k] * v[..., k]
    return out


def norm(v):
    return np.sqrt(_dot(v, v))


def distance(a, b):
    """Euclidean distance between two points given as sequences."""
    return math.sqrt(sum((float(x) - float(y)) ** 2 for x, y in zip(a, b)))


def point_segment_distance(p, a, b):
    """Distance from point ``p`` to each closed segment ``a[i] -> b[i]``.

    ``p`` has shape (dim,) or broadcasts against ``a``/``b`` of shape (n, dim).
    Zero-length segments are treated as points.
    """
    p = np.asarray(p, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    d = b - a
    w = p - a
    dd = _dot(d, d)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(dd > 0.0, _dot(w, d) / dd, 0.0)
    t = np.clip(t, 0.0, 1.0)
    diff = w - t[..., None] * d
    return np.sqrt(_dot(diff, diff))


def segment_segment_distance(a0, a1, b0, b1):
    """Minimum distance between closed segments ``a0->a1`` and ``b0->b1``.

    All arguments broadcast to a common (n, dim) shape. Uses the clamped
    closest-parameter construction with explicit handling of degenerate
    (point-like) and parallel segments.
    """
    a0, a1, b0, b1 = np.broadcast_arrays(
        *(np.atleast_2d(np.asarray(x, dtype=float)) for x in (a0, a1, b0, b1))
    )
    d1 = a1 - a0
    d2 = b1 - b0
    r = a0 - b0
    a = _dot(d1, d1)
    e = _dot(d2, d2)
    f = _dot(d2, r)
    c = _dot(d1, r)
    b = _dot(d1, d2)
    denom = a * e - b * b

    tiny = 1e-300
    a_deg = a <= tiny
    e_deg = e <= tiny
    safe_a = np.where(a_deg, 1.0, a)
    safe_e = np.where(e_deg, 1.0, e)

    # general case; parallel segments (denom ~ 0) start from s = 0
    par = denom <= 1e-14 * a * e
    s = np.where(par, 0.0, (b * f - c * e) / np.where(par, 1.0, denom))
    s = np.clip(s, 0.0, 1.0)
    t = (b * s + f) / safe_e
    lo = t < 0.0
    hi = t > 1.0
    s = np.where(lo, np.clip(-c / safe_a, 0.0, 1.0), s)
    s = np.where(hi, np.clip((b - c) / safe_a, 0.0, 1.0), s)
    t = np.clip(t, 0.0, 1.0)

    # one or both segments degenerate to a point
    s = np.where(e_deg, np.clip(-c / safe_a, 0.0, 1.0), s)
    t = np.where(e_deg, 0.0, t)
    s = np.where(a_deg, 0.0, s)
    t = np.where(a_deg, np.clip(f / safe_e, 0.0, 1.0), t)
    s = np.where(a_deg & e_deg, 0.0, s)
    t = np.where(a_deg & e_deg, 0.0, t)

    diff = (a0 + s[:, None] * d1) - (b0 + t[:, None] * d2)
    return np.sqrt(_dot(diff, diff))
