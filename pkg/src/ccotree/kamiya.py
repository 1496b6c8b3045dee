"""Local bifurcation sub-problem: branching point and radii for one connection.

Given a parent inlet ``x0`` (pressure ``p0``), an existing downstream point
``x1`` (required pressure ``p1``, flow ``f1``) and a new terminal ``x2``
(``p2``, ``f2``), a branching point ``x_b`` fixes the three lengths and the
four unknowns (r0, r1, r2, p_b) solve

    p0 - p_b = k f0 l0 / r0**4
    p_b - p1 = k f1 l1 / r1**4
    p_b - p2 = k f2 l2 / r2**4
    r0**g    = r1**g + r2**g

with k = 8 mu / pi and f0 = f1 + f2. Eliminating the radii leaves a scalar
residual in p_b that is strictly increasing on (max(p1, p2), p0), so it is
solved by bisection.

The branching point minimizes the volume pi * sum(l_i r_i**2) with a
Weiszfeld-type fixed point. Its weights are the total derivatives of the
volume with respect to each length, including the shift of p_b imposed by
the Murray closure. Weighting by r_i**2 alone ignores that coupling and
settles percent-level away from the true minimum.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSolutionError, SolverError, UsageError

MAX_BISECTION = 200


@dataclass(frozen=True, eq=False)
class LocalBifurcationProblem:
    x0: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    f1: float
    f2: float
    p0: float
    p1: float
    p2: float
    mu: float
    gamma: float
    min_length: float = 0.0

    def __post_init__(self):
        for name in ("x0", "x1", "x2"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if not (self.f1 > 0 and self.f2 > 0):
            raise UsageError("both downstream flows must be positive")
        if not self.p0 > max(self.p1, self.p2):
            raise UsageError("inlet pressure must exceed both outlet pressures")
        if not self.mu > 0 or not self.gamma >= 1:
            raise UsageError("need mu > 0 and gamma >= 1")
        pts = (self.x0, self.x1, self.x2)
        for a in range(3):
            for b in range(a + 1, 3):
                if np.array_equal(pts[a], pts[b]):
                    raise UsageError("the three endpoints must be pairwise distinct")

    @property
    def f0(self):
        return self.f1 + self.f2

    @property
    def k(self):
        return 8.0 * self.mu / math.pi

    @property
    def points(self):
        return np.stack([self.x0, self.x1, self.x2])

    def lengths(self, x_b):
        x_b = [float(c) for c in x_b]
        return tuple(math.dist(x_b, x.tolist()) for x in (self.x0, self.x1, self.x2))


@dataclass(frozen=True)
class BifurcationSolution:
    x_b: np.ndarray
    r0: float
    r1: float
    r2: float
    p_b: float
    cost: float
    converged: bool
    iterations: int


def _solve_lengths(prob, l0, l1, l2, tol):
    k = prob.k
    e = prob.gamma / 4.0
    p0, p1, p2 = prob.p0, prob.p1, prob.p2
    c0 = k * prob.f0 * l0
    c1 = k * prob.f1 * l1
    c2 = k * prob.f2 * l2
    lo = max(p1, p2)
    hi = p0
    width = tol * (hi - lo)
    for _ in range(MAX_BISECTION):
        mid = 0.5 * (lo + hi)
        a0 = (c0 / (p0 - mid)) ** e
        g = a0 - (c1 / (mid - p1)) ** e - (c2 / (mid - p2)) ** e
        if not math.isfinite(g):
            raise SolverError(f"non-finite residual at p_b={mid!r}")
        if (hi - lo <= width and abs(g) <= tol * a0) or not lo < mid < hi:
            break
        if g > 0.0:
            hi = mid
        else:
            lo = mid
    if abs(g) > 10.0 * tol * a0:
        raise SolverError(f"Murray residual {abs(g) / a0:.3g} after bisection")
    return (
        (c0 / (p0 - mid)) ** 0.25,
        (c1 / (mid - p1)) ** 0.25,
        (c2 / (mid - p2)) ** 0.25,
        mid,
    )


def murray_residual(prob, p_b, lengths):
    """g(p_b) normalized by r0**gamma; negative below the root, positive above."""
    l0, l1, l2 = lengths
    k, e = prob.k, prob.gamma / 4.0
    a0 = (k * prob.f0 * l0 / (prob.p0 - p_b)) ** e
    a1 = (k * prob.f1 * l1 / (p_b - prob.p1)) ** e
    a2 = (k * prob.f2 * l2 / (p_b - prob.p2)) ** e
    return (a0 - a1 - a2) / a0


def solve_radii(prob, x_b, tol=1e-6):
    """Radii and branching pressure for a fixed branching point.

    Bisection stops once the bracket is below ``tol`` times its initial
    width and the relative Murray residual is below ``tol``.
    """
    lengths = prob.lengths(x_b)
    if min(lengths) <= 0.0:
        raise UsageError("branching point coincides with an endpoint")
    return _solve_lengths(prob, *lengths, tol)


def local_cost(sol, prob):
    l0, l1, l2 = prob.lengths(sol.x_b)
    return math.pi * (l0 * sol.r0**2 + l1 * sol.r1**2 + l2 * sol.r2**2)


# The fixed-point loop below runs once per candidate connection, so it works
# on plain float tuples; numpy call overhead dominates at dimension 2 or 3.

def _lens(pts, x):
    return math.dist(x, pts[0]), math.dist(x, pts[1]), math.dist(x, pts[2])


def _evaluate(prob, pts, x, tol):
    l0, l1, l2 = _lens(pts, x)
    r0, r1, r2, p_b = _solve_lengths(prob, l0, l1, l2, tol)
    cost = math.pi * (l0 * r0 * r0 + l1 * r1 * r1 + l2 * r2 * r2)
    return (l0, l1, l2), (r0, r1, r2), p_b, cost


def _weights(prob, lengths, radii, p_b):
    """Per-segment weights w_i with grad(volume) = pi * sum w_i (x_b - x_i)."""
    l0, l1, l2 = lengths
    r0, r1, r2 = radii
    g = prob.gamma
    d0, d1, d2 = prob.p0 - p_b, p_b - prob.p1, p_b - prob.p2
    s0, s1, s2 = r0 * r0, r1 * r1, r2 * r2
    dcost_dp = l0 * s0 / (2 * d0) - l1 * s1 / (2 * d1) - l2 * s2 / (2 * d2)
    dg_dp = r0**g / d0 + r1**g / d1 + r2**g / d2
    shift = dcost_dp / dg_dp
    return ((1.5 * s0 - shift * r0**g / l0) / l0,
            (1.5 * s1 + shift * r1**g / l1) / l1,
            (1.5 * s2 + shift * r2**g / l2) / l2)


def _next_point(prob, pts, lengths, radii, p_b):
    """Weighted-barycenter map; None when a weight is not positive."""
    w0, w1, w2 = _weights(prob, lengths, radii, p_b)
    if not (w0 > 0 and w1 > 0 and w2 > 0):
        return None
    w = w0 + w1 + w2
    return tuple((w0 * a + w1 * b + w2 * c) / w for a, b, c in zip(*pts))


def _gradient(prob, pts, x, tol):
    state = _evaluate(prob, pts, x, tol)
    w = _weights(prob, *state[:3])
    grad = np.array([sum(wi * (xk - p[k]) for wi, p in zip(w, pts))
                     for k, xk in enumerate(x)])
    return grad, state


def _newton_polish(prob, pts, x, tol, max_iter=50):
    """Damped Newton descent on the volume from ``x``.

    The Hessian is a central difference of the exact gradient. Used when the
    fixed point crawls along an ill-conditioned valley. Returns
    ``(x, state, iterations)`` on convergence, else None.
    """
    inner = min(tol, 1e-12)
    eps = prob.min_length
    try:
        grad, state = _gradient(prob, pts, x, inner)
        for it in range(1, max_iter + 1):
            scale = max(state[0])
            h = 1e-6 * scale
            cols = []
            for k in range(len(x)):
                e = [0.0] * len(x)
                e[k] = h
                up = _gradient(prob, pts, tuple(a + b for a, b in zip(x, e)), inner)[0]
                dn = _gradient(prob, pts, tuple(a - b for a, b in zip(x, e)), inner)[0]
                cols.append((up - dn) / (2 * h))
            hess = np.array(cols).T
            hess = 0.5 * (hess + hess.T)
            try:
                d = np.linalg.solve(hess, -grad)
            except np.linalg.LinAlgError:
                d = None
            if d is None or not np.all(np.isfinite(d)) or d @ grad >= 0:
                d = -grad / sum(_weights(prob, *state[:3]))
            if math.sqrt(float(d @ d)) < tol * scale:
                y = tuple((np.array(x) + d).tolist())
                if _too_close(pts, y, eps):
                    return None
                return y, _evaluate(prob, pts, y, tol), it
            step = 1.0
            for _ in range(40):
                y = tuple((np.array(x) + step * d).tolist())
                if not _too_close(pts, y, eps):
                    trial = _gradient(prob, pts, y, inner)
                    if trial[1][3] <= state[3]:
                        break
                step *= 0.5
            else:
                return None
            x, (grad, state) = y, trial
    except SolverError:
        return None
    return None


def _too_close(pts, x, eps):
    m = min(_lens(pts, x))
    return m < eps or m <= 0.0


def _dot(u, v):
    return sum(a * b for a, b in zip(u, v))


def _sub(u, v):
    return tuple(a - b for a, b in zip(u, v))


def _anderson(xs, gs):
    """Anderson-mixed point from up to three iterates and their steps."""
    dgs = [_sub(gs[j + 1], gs[j]) for j in range(len(gs) - 1)]
    dxs = [_sub(xs[j + 1], xs[j]) for j in range(len(xs) - 1)]
    g = gs[-1]
    coef = None
    if len(dgs) == 2:
        a11, a12, a22 = _dot(dgs[0], dgs[0]), _dot(dgs[0], dgs[1]), _dot(dgs[1], dgs[1])
        det = a11 * a22 - a12 * a12
        if det > 1e-12 * a11 * a22:
            b1, b2 = _dot(dgs[0], g), _dot(dgs[1], g)
            coef = ((a22 * b1 - a12 * b2) / det, (a11 * b2 - a12 * b1) / det)
        else:
            dgs, dxs = dgs[1:], dxs[1:]
    if coef is None:
        a = _dot(dgs[0], dgs[0])
        if not a > 0:
            return None
        coef = (_dot(dgs[0], g) / a,)
    out = [xi + gi for xi, gi in zip(xs[-1], g)]
    for c, dx, dg in zip(coef, dxs, dgs):
        for k in range(len(out)):
            out[k] -= c * (dx[k] + dg[k])
    return tuple(out)


def _check_collapse(prob, pts, x, cost, tol):
    """Raise if ``x``, inside an endpoint's exclusion ball, beats the current cost.

    The extrapolated step then points at a minimum the iteration could only
    reach by creeping towards the endpoint.
    """
    if min(_lens(pts, x)) <= 0.0:
        raise DegenerateSolutionError("branching point collapsed onto an endpoint")
    try:
        trial = _evaluate(prob, pts, x, tol)
    except SolverError:
        return
    if trial[3] < cost:
        raise DegenerateSolutionError("branching point collapsed onto an endpoint")


def optimal_bifurcation(prob, tol=1e-6, max_iter=100, fallback_resolution=None):
    """Volume-minimizing branching point.

    Fixed-point iteration from the flow-weighted centroid, accelerated with
    two-step Anderson mixing. An accelerated step that increases the volume
    or lands within ``min_length`` of an endpoint is replaced by the plain
    step. On convergence the last iterate is returned. Without convergence
    after ``max_iter`` steps, damped Newton descent restarts from the cheapest
    iterate. Only if that fails too is a three-level grid search run; Newton
    descent is retried from a winning grid point, and otherwise the better of
    the grid point and the cheapest iterate is returned with
    ``converged=False``.

    Raises DegenerateSolutionError when the plain step lands within
    ``min_length`` of an endpoint, when an accelerated step does so and
    lowers the volume, or when the grid optimum sits within one final grid
    cell of an endpoint's exclusion ball.
    """
    eps = prob.min_length
    pts = tuple(tuple(float(c) for c in x) for x in (prob.x0, prob.x1, prob.x2))
    f0, f1, f2 = prob.f0, prob.f1, prob.f2
    x = tuple((f0 * a + f1 * b + f2 * c) / (2.0 * f0) for a, b, c in zip(*pts))
    if _too_close(pts, x, eps):
        raise DegenerateSolutionError("initial branching point at an endpoint")
    lengths, radii, p_b, cost = _evaluate(prob, pts, x, tol)
    best = (cost, x, radii, p_b)
    xs, gs = [], []
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        t = _next_point(prob, pts, lengths, radii, p_b)
        if t is None:
            break
        step = _sub(t, x)
        if math.sqrt(_dot(step, step)) < tol * max(lengths):
            converged = True
            break
        xs.append(x)
        gs.append(step)
        del xs[:-3], gs[:-3]
        trial = None
        if len(gs) > 1:
            x_acc = _anderson(xs, gs)
            if x_acc is not None and all(map(math.isfinite, x_acc)) \
                    and _too_close(pts, x_acc, eps):
                _check_collapse(prob, pts, x_acc, cost, tol)
            elif x_acc is not None and all(map(math.isfinite, x_acc)):
                try:
                    trial = _evaluate(prob, pts, x_acc, tol)
                except SolverError:
                    trial = None
                if trial is not None and not trial[3] <= cost:
                    trial = None
            if trial is None:
                xs, gs = [], []
        if trial is None:
            if _too_close(pts, t, eps):
                raise DegenerateSolutionError("branching point collapsed onto an endpoint")
            x = t
            lengths, radii, p_b, cost = _evaluate(prob, pts, t, tol)
        else:
            x = x_acc
            lengths, radii, p_b, cost = trial
        if cost < best[0]:
            best = (cost, x, radii, p_b)

    if converged:
        # near the optimum volume differences drop below the p_b noise, so the
        # converged iterate is more accurate than the cheapest one seen
        return BifurcationSolution(np.array(x), *radii, p_b, cost, True, it)
    polished = _newton_polish(prob, pts, best[1], tol, max_iter)
    if polished is not None:
        x, (lengths, radii, p_b, cost), extra = polished
        return BifurcationSolution(np.array(x), *radii, p_b, cost, True, it + extra)
    sol = BifurcationSolution(np.array(best[1]), *best[2], best[3], best[0], False, it)
    if fallback_resolution is None:
        fallback_resolution = 41 if len(pts[0]) == 2 else 21
    levels = 3
    grid = brute_force_bifurcation(prob, fallback_resolution, levels, tol=tol)
    if grid.cost < sol.cost:
        # a grid optimum pressed against an exclusion ball is a collapse
        span = prob.points.max(axis=0) - prob.points.min(axis=0)
        cell = math.hypot(*span) / (fallback_resolution - 1) / 4 ** (levels - 1)
        if min(_lens(pts, tuple(grid.x_b.tolist()))) <= eps + cell:
            raise DegenerateSolutionError("grid optimum at an endpoint")
        sol = grid
        polished = _newton_polish(prob, pts, tuple(grid.x_b.tolist()), tol, max_iter)
        if polished is not None and polished[1][3] <= grid.cost:
            x, (lengths, radii, p_b, cost), extra = polished
            return BifurcationSolution(np.array(x), *radii, p_b, cost, True, it + extra)
    return BifurcationSolution(sol.x_b, sol.r0, sol.r1, sol.r2, sol.p_b,
                               sol.cost, False, it)


_CHUNK = 1 << 16  # grid points per vectorized batch, sized to stay in cache


def _pow34(x):
    s = np.sqrt(x)
    return s * np.sqrt(s)


def _solve_many(prob, l0, l1, l2, max_iter=100):
    """Vectorized root of the Murray residual over many length triples.

    The residual is increasing in p_b, so Newton steps are taken inside a
    shrinking bracket and replaced by the midpoint whenever they leave it.
    """
    k, e = prob.k, prob.gamma / 4.0
    p0, p1, p2 = prob.p0, prob.p1, prob.p2
    c0, c1, c2 = k * prob.f0 * l0, k * prob.f1 * l1, k * prob.f2 * l2
    lo = np.full(l0.shape, max(p1, p2))
    hi = np.full(l0.shape, float(p0))
    mid = 0.5 * (lo + hi)
    active = np.ones(l0.shape, dtype=bool)
    power = _pow34 if e == 0.75 else (lambda x: x**e)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for _ in range(max_iter):
            idx = np.flatnonzero(active)
            if idx.size == 0:
                break
            m, a, b = mid[idx], lo[idx], hi[idx]
            d0, d1, d2 = p0 - m, m - p1, m - p2
            t0 = power(c0[idx] / d0)
            t1 = power(c1[idx] / d1)
            t2 = power(c2[idx] / d2)
            g = t0 - t1 - t2
            slope = e * (t0 / d0 + t1 / d1 + t2 / d2)
            up = g > 0
            b = np.where(up, m, b)
            a = np.where(up, a, m)
            nxt = m - g / slope
            done = (g == 0) | (np.abs(nxt - m) <= 4e-16 * np.abs(m)) | (b - a <= 4e-16 * np.abs(m))
            bad = ~((nxt >= a) & (nxt <= b))
            nxt = np.where(done, m, np.where(bad, 0.5 * (a + b), nxt))
            mid[idx], lo[idx], hi[idx] = nxt, a, b
            active[idx[done]] = False
        r0 = (c0 / (p0 - mid)) ** 0.25
        r1 = (c1 / (mid - p1)) ** 0.25
        r2 = (c2 / (mid - p2)) ** 0.25
    return r0, r1, r2, mid


def brute_force_bifurcation(prob, grid_resolution, refinement_levels, tol=1e-6):
    """Exhaustive grid search over the bounding box of the three endpoints.

    Each level evaluates a ``grid_resolution``-per-axis grid, then the box is
    recentred on the incumbent and shrunk 4x. Grid points closer than
    ``min_length`` to an endpoint are skipped. The returned radii come from
    :func:`solve_radii` at the winning point.
    """
    if grid_resolution < 3:
        raise UsageError("grid_resolution must be >= 3")
    pts = prob.points
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    center = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    eps = max(prob.min_length, 0.0)
    best_cost, best_x = math.inf, None
    for _ in range(max(1, refinement_levels)):
        axes = [np.linspace(c - h, c + h, grid_resolution) for c, h in zip(center, half)]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(center))
        for start in range(0, len(grid), _CHUNK):
            block = grid[start:start + _CHUNK]
            ls = [np.sqrt(np.sum((block - x) ** 2, axis=1)) for x in pts]
            ok = np.ones(len(block), dtype=bool)
            for l in ls:
                ok &= (l >= eps) & (l > 0.0)
            if not np.any(ok):
                continue
            l0, l1, l2 = (l[ok] for l in ls)
            r0, r1, r2, _ = _solve_many(prob, l0, l1, l2)
            cost = np.pi * (l0 * r0**2 + l1 * r1**2 + l2 * r2**2)
            cost = np.where(np.isfinite(cost), cost, np.inf)
            j = int(np.argmin(cost))
            if cost[j] < best_cost:
                best_cost = float(cost[j])
                best_x = block[ok][j]
        if best_x is None:
            raise DegenerateSolutionError("no admissible grid point")
        center = best_x
        half = half / 4.0
    pts = tuple(tuple(x.tolist()) for x in (prob.x0, prob.x1, prob.x2))
    lengths, radii, p_b, cost = _evaluate(prob, pts, tuple(best_x.tolist()), tol)
    return BifurcationSolution(best_x.copy(), *radii, p_b, cost, False, 0)
