"""Perfusion domains: analytic balls and boxes, and voxel masks.

Every domain answers the same geometric queries used by the growth engine:
point containment, measure (area or volume), uniform sampling and a
sampled "segment stays inside" test.
"""

import logging
import math

import numpy as np

from .errors import DegenerateDomainError, UsageError

log = logging.getLogger(__name__)

MAX_CONSECUTIVE_MISSES = 10_000


class PerfusionDomain:
    """Common interface. Subclasses set ``kind``, ``dim`` and the bounding box."""

    kind = None

    def __init__(self, dim):
        if dim not in (2, 3):
            raise UsageError(f"domain dimension must be 2 or 3, got {dim}")
        self.dim = dim
        self.draws = 0
        self.accepted = 0

    # subclasses implement these two
    def _contains(self, pts):
        raise NotImplementedError

    def measure(self):
        raise NotImplementedError

    def bounds(self):
        """(lo, hi) of the sampling bounding box."""
        return self._lo.copy(), self._hi.copy()

    def _check_dim(self, pts):
        if pts.shape[-1] != self.dim:
            raise UsageError(
                f"{pts.shape[-1]}D point queried against a {self.dim}D domain"
            )

    def contains(self, p):
        p = np.asarray(p, dtype=float)
        self._check_dim(p)
        return bool(self._contains(p[None, :])[0])

    def contains_many(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        self._check_dim(pts)
        return self._contains(pts)

    def characteristic_length(self):
        return self.measure() ** (1.0 / self.dim)

    def min_segment_length(self):
        """Degeneracy guard used for every segment and branching point."""
        return 1e-4 * self.characteristic_length()

    def default_step(self):
        return self.characteristic_length() / 64.0

    def sample_point(self, rng):
        """Uniform point inside the domain by rejection from the bounding box.

        Each attempt consumes exactly ``dim`` doubles from ``rng.random``.
        """
        span = self._hi - self._lo
        for _ in range(MAX_CONSECUTIVE_MISSES):
            p = self._lo + rng.random(self.dim) * span
            self.draws += 1
            if self._contains(p[None, :])[0]:
                self.accepted += 1
                return p
        raise DegenerateDomainError(
            f"{MAX_CONSECUTIVE_MISSES} consecutive rejection-sampling misses"
        )

    def acceptance_rate(self):
        return self.accepted / self.draws if self.draws else float("nan")

    def segment_inside(self, a, b, step=None):
        """True iff points every ``step`` along a->b, plus both ends, are inside."""
        if step is None:
            step = self.default_step()
        if not step > 0:
            raise UsageError("step must be positive")
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        self._check_dim(a)
        self._check_dim(b)
        length = math.sqrt(float(np.sum((b - a) ** 2)))
        n = int(math.floor(length / step))
        s = np.arange(n + 1, dtype=float) * step
        if s[-1] < length:
            s = np.append(s, length)
        if length > 0:
            pts = a + (s / length)[:, None] * (b - a)
        else:
            pts = a[None, :]
        return bool(np.all(self._contains(pts)))


class BallDomain(PerfusionDomain):
    """Closed disk (2D) or ball (3D)."""

    def __init__(self, center, radius):
        center = np.asarray(center, dtype=float)
        super().__init__(center.shape[0])
        if not radius > 0:
            raise UsageError("ball radius must be positive")
        self.kind = "disk2d" if self.dim == 2 else "sphere3d"
        self.center = center
        self.radius = float(radius)
        self._lo = center - radius
        self._hi = center + radius

    def _contains(self, pts):
        d = pts - self.center
        return np.sum(d * d, axis=1) <= self.radius * self.radius

    def measure(self):
        if self.dim == 2:
            return math.pi * self.radius**2
        return 4.0 * math.pi * self.radius**3 / 3.0


class BoxDomain(PerfusionDomain):
    """Closed axis-aligned box."""

    kind = "box"

    def __init__(self, lo, hi):
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        if lo.shape != hi.shape:
            raise UsageError("box corners must have the same dimension")
        super().__init__(lo.shape[0])
        if not np.all(hi > lo):
            raise UsageError("box must have positive extent on every axis")
        self._lo = lo
        self._hi = hi

    def _contains(self, pts):
        return np.all((pts >= self._lo) & (pts <= self._hi), axis=1)

    def measure(self):
        return float(np.prod(self._hi - self._lo))


class MaskDomain(PerfusionDomain):
    """Voxel occupancy grid with half-open cells.

    ``occupancy`` is indexed ``[i, j(, k)]`` with ``i`` along x. A point maps
    to voxel ``floor((p - origin) / spacing)``; points on the upper grid
    boundary are outside.
    """

    kind = "voxel-mask"

    def __init__(self, occupancy, spacing, origin):
        occ = np.asarray(occupancy).astype(bool)
        super().__init__(occ.ndim)
        spacing = np.asarray(spacing, dtype=float)
        origin = np.asarray(origin, dtype=float)
        if spacing.shape != (self.dim,) or origin.shape != (self.dim,):
            raise UsageError("spacing and origin must match the mask dimension")
        if not np.all(spacing > 0):
            raise UsageError("voxel spacing must be positive on every axis")
        self.count = int(np.count_nonzero(occ))
        if self.count == 0:
            raise UsageError("voxel mask has no voxel set")
        self.occupancy = occ
        self.shape = occ.shape
        self.spacing = spacing
        self.origin = origin
        self._lo = origin.copy()
        self._hi = origin + spacing * np.asarray(occ.shape, dtype=float)

    def voxel_measure(self):
        return float(np.prod(self.spacing))

    def measure(self):
        return self.count * self.voxel_measure()

    def default_step(self):
        return 0.5 * float(np.min(self.spacing))

    def _contains(self, pts):
        idx = np.floor((pts - self.origin) / self.spacing).astype(np.int64)
        ok = np.all((idx >= 0) & (idx < np.asarray(self.shape)), axis=1)
        out = np.zeros(len(pts), dtype=bool)
        if np.any(ok):
            out[ok] = self.occupancy[tuple(idx[ok].T)]
        return out
