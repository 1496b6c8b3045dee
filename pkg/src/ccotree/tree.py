"""Arena-indexed binary vessel tree with hydrodynamic bookkeeping.

Radii are never stored as absolute values during growth. Each segment keeps
its radius ratio to its parent (``beta``), its terminal count and a reduced
resistance ``r_star`` (resistance times r**4 of the segment itself) so that a
single pass from the root turns the ratios into radii:

    r_star(leaf)     = k * l
    r_star(internal) = k * l + 1 / (beta_l**4 / r_star(l) + beta_r**4 / r_star(r))

with k = 8 mu / pi. Sibling radii satisfy equal pressure drop to the
terminals, ``r_l / r_r = ((n_l r_star(l)) / (n_r r_star(r)))**(1/4)`` and the
Murray closure ``r_p**g = r_l**g + r_r**g`` fixes both betas.

A reduced volume ``v_star = l + beta_l**2 v_star(l) + beta_r**2 v_star(r)``
is carried alongside so the full tree volume, ``pi r_root**2 v_star(root)``,
can be previewed for a hypothetical insertion by walking only the path from
the insertion point to the root.

Segment ids are stable arena indices; they are not topologically ordered
(a split appends the continuation segment after the subtree it inherits).
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DegenerateGeometryError, UsageError
from .geometry import segment_segment_distance


def pair_betas(n_l, rs_l, n_r, rs_r, gamma):
    """Radius ratios (child/parent) for a sibling pair."""
    ratio = ((n_l * rs_l) / (n_r * rs_r)) ** 0.25
    beta_l = (1.0 + ratio ** (-gamma)) ** (-1.0 / gamma)
    beta_r = (1.0 + ratio**gamma) ** (-1.0 / gamma)
    return beta_l, beta_r


def _combine(k, gamma, length, n_l, rs_l, vs_l, n_r, rs_r, vs_r):
    beta_l, beta_r = pair_betas(n_l, rs_l, n_r, rs_r, gamma)
    rs = k * length + 1.0 / (beta_l**4 / rs_l + beta_r**4 / rs_r)
    vs = length + beta_l * beta_l * vs_l + beta_r * beta_r * vs_r
    return n_l + n_r, rs, vs, beta_l, beta_r


@dataclass(frozen=True)
class SegmentRecord:
    id: int
    proximal: tuple
    distal: tuple
    parent: int | None
    children: tuple
    beta: float
    n_leaves: int
    r_star: float
    radius: float | None


class SplitPreview(NamedTuple):
    """Outcome of a hypothetical insertion, computed without mutating the tree."""

    volume: float
    root_radius: float
    radius_parent: float      # x0 -> bifurcation (keeps the target id)
    radius_continuation: float  # bifurcation -> old distal point
    radius_leaf: float        # bifurcation -> new terminal


def _dist(a, b):
    return math.dist(a.tolist() if hasattr(a, "tolist") else a,
                     b.tolist() if hasattr(b, "tolist") else b)


class VesselTree:
    """Strict binary tree of straight cylindrical segments."""

    def __init__(self, params, dim=None, min_length=0.0):
        self.params = params
        self.dim = int(dim if dim is not None else params.dim)
        self.min_length = float(min_length)
        self.root = -1
        self._cap = 16
        self._prox = np.zeros((self._cap, self.dim))
        self._dist = np.zeros((self._cap, self.dim))
        self._radius = np.full(self._cap, np.nan)
        self.length = []
        self.parent = []
        self.left = []
        self.right = []
        self.beta = []
        self.n_leaves = []
        self.r_star = []
        self.v_star = []
        self.radii_realized = False

    # -- arena ------------------------------------------------------------

    def _grow_capacity(self):
        cap = self._cap * 2
        for name in ("_prox", "_dist"):
            arr = np.zeros((cap, self.dim))
            arr[: self._cap] = getattr(self, name)
            setattr(self, name, arr)
        rad = np.full(cap, np.nan)
        rad[: self._cap] = self._radius
        self._radius = rad
        self._cap = cap

    def _append(self, prox, dist, parent):
        i = len(self.parent)
        if i == self._cap:
            self._grow_capacity()
        self._prox[i] = prox
        self._dist[i] = dist
        self.length.append(_dist(prox, dist))
        self.parent.append(parent)
        self.left.append(-1)
        self.right.append(-1)
        self.beta.append(1.0)
        self.n_leaves.append(1)
        self.r_star.append(0.0)
        self.v_star.append(0.0)
        return i

    def _set_distal(self, i, p):
        self._dist[i] = p
        self.length[i] = _dist(self._prox[i], p)

    # -- read access --------------------------------------------------------

    @property
    def segment_count(self):
        return len(self.parent)

    @property
    def terminal_count(self):
        return self.n_leaves[self.root] if self.root >= 0 else 0

    @property
    def proximal_points(self):
        return self._prox[: self.segment_count]

    @property
    def distal_points(self):
        return self._dist[: self.segment_count]

    @property
    def radii(self):
        return self._radius[: self.segment_count]

    def proximal(self, i):
        return self._prox[i].copy()

    def distal(self, i):
        return self._dist[i].copy()

    def is_leaf(self, i):
        return self.left[i] < 0

    def children(self, i):
        return () if self.left[i] < 0 else (self.left[i], self.right[i])

    def sibling(self, i):
        p = self.parent[i]
        if p < 0:
            return -1
        return self.right[p] if self.left[p] == i else self.left[p]

    def leaves(self):
        return [i for i in range(self.segment_count) if self.left[i] < 0]

    def flow(self, i):
        """Flow through segment i: its share of q_perf by terminal count."""
        return self.params.q_perf * (self.n_leaves[i] / self.terminal_count)

    def record(self, i):
        r = float(self._radius[i])
        return SegmentRecord(
            id=i,
            proximal=tuple(float(x) for x in self._prox[i]),
            distal=tuple(float(x) for x in self._dist[i]),
            parent=None if self.parent[i] < 0 else self.parent[i],
            children=self.children(i),
            beta=self.beta[i],
            n_leaves=self.n_leaves[i],
            r_star=self.r_star[i],
            radius=None if math.isnan(r) else r,
        )

    def preorder(self):
        """Segment ids root first, left subtree before right subtree."""
        out = []
        stack = [self.root]
        while stack:
            i = stack.pop()
            out.append(i)
            if self.left[i] >= 0:
                stack.append(self.right[i])
                stack.append(self.left[i])
        return out

    def depths(self):
        """Number of segments on the root path of each segment (root = 1)."""
        depth = [0] * self.segment_count
        for i in self.preorder():
            p = self.parent[i]
            depth[i] = 1 if p < 0 else depth[p] + 1
        return depth

    def copy(self):
        new = VesselTree.__new__(VesselTree)
        new.__dict__.update(self.__dict__)
        for name in ("_prox", "_dist", "_radius"):
            setattr(new, name, getattr(self, name).copy())
        for name in ("length", "parent", "left", "right", "beta", "n_leaves",
                     "r_star", "v_star"):
            setattr(new, name, list(getattr(self, name)))
        return new

    # -- topology edits -----------------------------------------------------

    def _check_length(self, a, b, what):
        d = _dist(a, b)
        if not (d > 0.0 and d >= self.min_length):
            raise DegenerateGeometryError(
                f"{what} has length {d:.3g} below the minimum {self.min_length:.3g}"
            )

    def split(self, seg, bif_pos, new_terminal):
        """Insert a bifurcation on ``seg`` and attach a new terminal to it.

        ``seg`` keeps its id and becomes proximal -> bif_pos; a continuation
        segment bif_pos -> old distal inherits the old subtree and a new leaf
        runs bif_pos -> new_terminal. Returns ``(continuation, leaf)``.
        Ancestors of ``seg`` keep stale hydrodynamics until
        :meth:`update_hydrodynamics` is called.
        """
        if not 0 <= seg < self.segment_count:
            raise UsageError(f"no segment {seg}")
        bif_pos = np.asarray(bif_pos, dtype=float)
        new_terminal = np.asarray(new_terminal, dtype=float)
        prox = self._prox[seg].copy()
        dist = self._dist[seg].copy()
        self._check_length(prox, bif_pos, "parent part")
        self._check_length(bif_pos, dist, "continuation")
        self._check_length(bif_pos, new_terminal, "new leaf")

        old_l, old_r = self.left[seg], self.right[seg]
        cont = self._append(bif_pos, dist, seg)
        if old_l >= 0:
            self.left[cont], self.right[cont] = old_l, old_r
            self.parent[old_l] = cont
            self.parent[old_r] = cont
            self.beta[cont] = self.beta[seg]
        leaf = self._append(bif_pos, new_terminal, seg)
        self._set_distal(seg, bif_pos)
        self.left[seg], self.right[seg] = cont, leaf
        self._refresh(cont)
        self._refresh(leaf)
        self.radii_realized = False
        return cont, leaf

    # -- hydrodynamics ------------------------------------------------------

    def _refresh(self, i):
        k = self.params.hydraulic_constant
        length = self.length[i]
        a = self.left[i]
        if a < 0:
            self.n_leaves[i] = 1
            self.r_star[i] = k * length
            self.v_star[i] = length
            return
        b = self.right[i]
        n, rs, vs, bl, br = _combine(
            k, self.params.gamma, length,
            self.n_leaves[a], self.r_star[a], self.v_star[a],
            self.n_leaves[b], self.r_star[b], self.v_star[b],
        )
        self.beta[a] = bl
        self.beta[b] = br
        self.n_leaves[i] = n
        self.r_star[i] = rs
        self.v_star[i] = vs

    def update_hydrodynamics(self, start):
        """Recompute terminal counts, betas and r_star from ``start`` up to the root."""
        i = start
        while i >= 0:
            self._refresh(i)
            i = self.parent[i]
        self.beta[self.root] = 1.0
        self.radii_realized = False

    def recompute_all(self):
        """Full bottom-up recomputation of every segment."""
        for i in reversed(self.preorder()):
            self._refresh(i)
        self.beta[self.root] = 1.0
        self.radii_realized = False

    def root_radius(self, q_perf=None):
        q = self.params.q_perf if q_perf is None else q_perf
        return (self.r_star[self.root] * q / self.params.pressure_drop) ** 0.25

    def realize_radii(self, q_perf=None):
        """Turn betas into absolute radii; ``q_perf`` overrides the params value."""
        n = self.segment_count
        radius = [0.0] * n
        radius[self.root] = self.root_radius(q_perf)
        for i in self.preorder():
            if self.left[i] >= 0:
                r = radius[i]
                radius[self.left[i]] = self.beta[self.left[i]] * r
                radius[self.right[i]] = self.beta[self.right[i]] * r
        self._radius[:n] = radius
        self.radii_realized = True

    def _require_radii(self):
        if not self.radii_realized:
            raise UsageError("radii are not realized; call realize_radii() first")

    def volume(self):
        """Total intravascular volume, pi * sum(l * r**2).

        Summed exactly so the result does not depend on segment numbering.
        """
        self._require_radii()
        n = self.segment_count
        r = self._radius[:n]
        return math.pi * math.fsum((np.asarray(self.length) * r * r).tolist())

    def segment_drop(self, i):
        k = self.params.hydraulic_constant
        r = float(self._radius[i])
        return k * self.flow(i) * self.length[i] / (r * r * r * r)

    def node_pressure(self, seg):
        """Pressure at the distal end of ``seg`` from Poiseuille drops along its root path."""
        self._require_radii()
        path = []
        i = seg
        while i >= 0:
            path.append(i)
            i = self.parent[i]
        return self.params.p_perf - sum(self.segment_drop(j) for j in reversed(path))

    def distal_pressures(self):
        self._require_radii()
        p = [0.0] * self.segment_count
        for i in self.preorder():
            up = self.parent[i]
            p_in = self.params.p_perf if up < 0 else p[up]
            p[i] = p_in - self.segment_drop(i)
        return p

    def downstream_resistance(self, i):
        """Reduced resistance of the two subtrees hanging at the distal end of i."""
        a = self.left[i]
        if a < 0:
            return 0.0
        b = self.right[i]
        return 1.0 / (self.beta[a] ** 4 / self.r_star[a]
                      + self.beta[b] ** 4 / self.r_star[b])

    def preview_split(self, seg, bif_pos, new_terminal):
        """Volume and new radii if ``split(seg, bif_pos, new_terminal)`` were committed.

        Walks only the path from ``seg`` to the root and reuses the exact
        arithmetic of :meth:`update_hydrodynamics` and :meth:`realize_radii`.
        """
        k = self.params.hydraulic_constant
        g = self.params.gamma
        x0 = self._prox[seg]
        x1 = self._dist[seg]
        l0 = _dist(x0, bif_pos)
        l1 = _dist(bif_pos, x1)
        l2 = _dist(bif_pos, new_terminal)

        a = self.left[seg]
        if a < 0:
            cont = (1, k * l1, l1)
        else:
            b = self.right[seg]
            n, rs, vs, _, _ = _combine(
                k, g, l1,
                self.n_leaves[a], self.r_star[a], self.v_star[a],
                self.n_leaves[b], self.r_star[b], self.v_star[b],
            )
            cont = (n, rs, vs)
        leaf = (1, k * l2, l2)
        n, rs, vs, b_cont, b_leaf = _combine(k, g, l0, *cont, *leaf)

        betas = []
        cur = seg
        while self.parent[cur] >= 0:
            p = self.parent[cur]
            if self.left[p] == cur:
                s = self.right[p]
                n, rs, vs, b_cur, _ = _combine(
                    k, g, self.length[p], n, rs, vs,
                    self.n_leaves[s], self.r_star[s], self.v_star[s])
            else:
                s = self.left[p]
                n, rs, vs, _, b_cur = _combine(
                    k, g, self.length[p],
                    self.n_leaves[s], self.r_star[s], self.v_star[s], n, rs, vs)
            betas.append(b_cur)
            cur = p

        r_root = (rs * self.params.q_perf / self.params.pressure_drop) ** 0.25
        r_seg = r_root
        for b in reversed(betas):
            r_seg = b * r_seg
        return SplitPreview(
            volume=math.pi * r_root * r_root * vs,
            root_radius=r_root,
            radius_parent=r_seg,
            radius_continuation=b_cont * r_seg,
            radius_leaf=b_leaf * r_seg,
        )


def init_tree(params, root_pos, first_terminal, min_length=0.0):
    """One-segment tree from the root inlet to the first terminal."""
    root_pos = np.asarray(root_pos, dtype=float)
    first_terminal = np.asarray(first_terminal, dtype=float)
    if root_pos.shape != first_terminal.shape:
        raise UsageError("root and terminal dimensions differ")
    tree = VesselTree(params, dim=root_pos.shape[0], min_length=min_length)
    tree._check_length(root_pos, first_terminal, "root segment")
    tree.root = tree._append(root_pos, first_terminal, -1)
    tree._refresh(tree.root)
    return tree


# -- validation ---------------------------------------------------------------


@dataclass(frozen=True)
class TreeReport:
    terminal_count: int
    segment_count: int
    total_volume: float
    max_murray_residual: float
    max_terminal_pressure_error: float
    min_clearance_margin: float
    all_inside_domain: bool
    max_depth: int

    def failures(self, tol=1e-6):
        bad = []
        if not self.max_murray_residual <= tol:
            bad.append("max_murray_residual")
        if not self.max_terminal_pressure_error <= tol:
            bad.append("max_terminal_pressure_error")
        if not self.min_clearance_margin >= 0:
            bad.append("min_clearance_margin")
        if not self.all_inside_domain:
            bad.append("all_inside_domain")
        return bad

    def passed(self, tol=1e-6):
        return not self.failures(tol)

    def lines(self):
        out = []
        for name in self.__dataclass_fields__:
            v = getattr(self, name)
            if isinstance(v, bool):
                v = "true" if v else "false"
            elif isinstance(v, float):
                v = format(v, ".10g")
            out.append(f"{name}: {v}")
        return out


def murray_residuals(tree):
    """Relative Murray residual at every internal node (same order as internal ids)."""
    g = tree.params.gamma
    r = tree.radii
    out = []
    for i in range(tree.segment_count):
        a = tree.left[i]
        if a >= 0:
            rp = float(r[i]) ** g
            out.append(abs(rp - float(r[a]) ** g - float(r[tree.right[i]]) ** g) / rp)
    return out


def _adjacency(tree):
    n = tree.segment_count
    adj = np.full((n, 4), -1, dtype=np.int64)
    for i in range(n):
        adj[i] = (tree.parent[i], tree.sibling(i), tree.left[i], tree.right[i])
    return adj


def min_clearance_margin(tree, chunk_pairs=500_000):
    """min over non-adjacent pairs of (axis distance - r_a - r_b) / (r_a + r_b).

    Adjacent means parent/child or siblings (segments sharing an endpoint).
    Returns +inf when no non-adjacent pair exists.
    """
    n = tree.segment_count
    if n < 2:
        return math.inf
    prox, dist, rad = tree.proximal_points, tree.distal_points, tree.radii
    adj = _adjacency(tree)
    best = math.inf
    rows_per_chunk = max(1, chunk_pairs // n)
    cols = np.arange(n)
    for start in range(0, n, rows_per_chunk):
        rows = np.arange(start, min(n, start + rows_per_chunk))
        mask = cols[None, :] > rows[:, None]
        for k in range(4):
            mask &= cols[None, :] != adj[rows, k][:, None]
        ii, jj = np.nonzero(mask)
        if ii.size == 0:
            continue
        ii = rows[ii]
        d = segment_segment_distance(prox[ii], dist[ii], prox[jj], dist[jj])
        s = rad[ii] + rad[jj]
        best = min(best, float(np.min((d - s) / s)))
    return best


def validate(tree, domain, step=None):
    """Check every structural and hydrodynamic invariant; never raises on failure."""
    tree._require_radii()
    murray = murray_residuals(tree)
    pressures = tree.distal_pressures()
    p_term = tree.params.p_term
    # relative to p_term; the pressure drop stands in when p_term is zero
    scale = abs(p_term) if p_term != 0 else tree.params.pressure_drop
    p_err = max(abs(pressures[i] - p_term) / scale for i in tree.leaves())
    inside = all(
        domain.segment_inside(tree._prox[i], tree._dist[i], step)
        for i in range(tree.segment_count)
    )
    return TreeReport(
        terminal_count=tree.terminal_count,
        segment_count=tree.segment_count,
        total_volume=tree.volume(),
        max_murray_residual=max(murray, default=0.0),
        max_terminal_pressure_error=p_err,
        min_clearance_margin=min_clearance_margin(tree),
        all_inside_domain=inside,
        max_depth=max(tree.depths()),
    )
