"""Uniform-grid index over segment bounding boxes.

Each segment is registered in every cell its axis-aligned bounding box
touches. A nearest query visits growing cubes of cells around the query
point. Every segment within ``m * cell`` of the point is registered in the
cube of radius ``m``, so the search stops once the k-th best exact distance
is within that bound. Distances come from the same kernel as the linear
scan, and ties are broken by id, so results match the scan exactly.
"""

import itertools
import math

import numpy as np

from .geometry import point_segment_distance

# keeps ulp-level disagreement between the cell bound and a computed distance
# from ending a search early
_SAFE = 1.0 - 1e-9


def linear_nearest(tree, p, k):
    """Reference answer: k nearest segment ids by (distance, id)."""
    n = tree.segment_count
    d = point_segment_distance(p, tree.proximal_points, tree.distal_points)
    order = np.lexsort((np.arange(n), d))
    return [int(i) for i in order[: min(k, n)]]


def linear_nearest_distance(tree, p):
    d = point_segment_distance(p, tree.proximal_points, tree.distal_points)
    return float(np.min(d))


class SpatialIndex:
    def __init__(self, tree, cell_size):
        if not cell_size > 0:
            raise ValueError("cell_size must be positive")
        self.tree = tree
        self.h = float(cell_size)
        self.cells = {}
        self.owned = []
        self.lo = None
        self.hi = None
        for i in range(tree.segment_count):
            self.update(i)

    def _cell(self, p):
        return tuple(int(math.floor(float(x) / self.h)) for x in p)

    def update(self, i):
        """(Re)register segment i after it was created or its geometry changed."""
        while len(self.owned) <= i:
            self.owned.append(())
        for c in self.owned[i]:
            bucket = self.cells[c]
            bucket.discard(i)
            if not bucket:
                del self.cells[c]
        a = self.tree._prox[i]
        b = self.tree._dist[i]
        c_lo = self._cell(np.minimum(a, b))
        c_hi = self._cell(np.maximum(a, b))
        keys = tuple(itertools.product(*(range(l, h + 1) for l, h in zip(c_lo, c_hi))))
        for c in keys:
            self.cells.setdefault(c, set()).add(i)
        self.owned[i] = keys
        if self.lo is None:
            self.lo, self.hi = list(c_lo), list(c_hi)
        else:
            self.lo = [min(x, y) for x, y in zip(self.lo, c_lo)]
            self.hi = [max(x, y) for x, y in zip(self.hi, c_hi)]

    def _shell(self, center, m):
        """Occupied-range cells at Chebyshev distance exactly m from center."""
        ranges = [range(max(c - m, l), min(c + m, h) + 1)
                  for c, l, h in zip(center, self.lo, self.hi)]
        if math.prod(len(r) for r in ranges) > len(self.cells):
            # cheaper to filter the occupied cells than to walk the shell
            cells = self.cells
        else:
            cells = itertools.product(*ranges)
        for cell in cells:
            if max(abs(a - b) for a, b in zip(cell, center)) == m:
                yield cell

    def _search(self, p, done):
        p = np.asarray(p, dtype=float)
        center = self._cell(p)
        reach = max(max(c - l, h - c) for c, l, h in zip(center, self.lo, self.hi))
        # shells closer than the occupied range are empty
        m = max(0, max(max(l - c, c - h) for c, l, h in zip(center, self.lo, self.hi)))
        prox, dist = self.tree._prox, self.tree._dist
        ids = []
        dists = np.empty(0)
        while True:
            new = set()
            for c in self._shell(center, m):
                bucket = self.cells.get(c)
                if bucket:
                    new.update(bucket)
            new.difference_update(ids)
            if new:
                new = sorted(new)
                d = point_segment_distance(p, prox[new], dist[new])
                ids.extend(new)
                dists = np.concatenate([dists, d])
            if m >= reach or done(dists, m * self.h):
                return ids, dists
            m += 1

    def nearest(self, p, k):
        """k nearest segment ids, ascending distance, exact ties by id."""
        k = min(k, self.tree.segment_count)

        def done(d, bound):
            return len(d) >= k and np.partition(d, k - 1)[k - 1] <= bound * _SAFE

        ids, dists = self._search(p, done)
        ids = np.asarray(ids)
        order = np.lexsort((ids, dists))
        return [int(i) for i in ids[order[:k]]]

    def nearest_distance(self, p):
        _, dists = self._search(p, lambda d, bound: len(d) > 0 and d.min() <= bound * _SAFE)
        return float(dists.min())

    def within(self, p, radius):
        """Ids of all segments at distance <= radius from p, ascending."""
        m_needed = int(math.ceil(radius / self.h)) + 1
        ids, dists = self._search(p, lambda d, bound: bound >= m_needed * self.h)
        return sorted(int(i) for i, d in zip(ids, dists) if d <= radius)
