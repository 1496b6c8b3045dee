"""Constrained constructive growth loop.

Each insertion samples a candidate terminal that keeps a minimum distance
from the existing tree, tries to connect it to its ``n_con`` nearest
segments, and commits the feasible connection with the smallest total
tree volume.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateSolutionError,
    GrowthStalled,
    InputError,
    SolverError,
    UsageError,
)
from .geometry import segment_segment_distance
from .kamiya import BifurcationSolution, LocalBifurcationProblem, optimal_bifurcation
from .spatial import SpatialIndex
from .tree import init_tree, validate

log = logging.getLogger(__name__)

OUTSIDE = "outside-domain"
INTERSECTS = "intersects-tree"
DEGENERATE = "degenerate-geometry"
SOLVER_FAILED = "solver-failed"

ROOT_PROJECTION_SAMPLES = 4096


@dataclass(frozen=True)
class CandidateEvaluation:
    target_segment: int
    solution: BifurcationSolution | None
    reason: str | None
    total_cost: float | None

    @property
    def feasible(self):
        return self.reason is None


def distance_threshold(domain_measure, n_terminals_current, eta, dim):
    """Minimum distance between a new terminal and the existing tree."""
    return eta * (domain_measure / n_terminals_current) ** (1.0 / dim)


def sample_candidate(domain, tree, index, d_thresh, rng):
    """One sampled point, or None when it lies closer than d_thresh to the tree."""
    p = domain.sample_point(rng)
    if index.nearest_distance(p) < d_thresh:
        return None
    return p


def nearest_segments(tree, index, p, n_con):
    return index.nearest(p, n_con)


def local_problem(tree, target, candidate):
    """Boundary data for connecting ``candidate`` to ``target``.

    The rest of the tree is frozen at its current realized radii. Reduced
    resistances are radius-free, so a subtree resistance is ``r_star / r**4``
    with r the target's current radius. That gives the inlet pressure
    ``p0 = p_term + q_t r_star(t) / r**4`` under the current flows, and the
    pressure required at the old distal point
    ``p1 = p_term + f1 * R_down / r**4``, with ``R_down`` the reduced
    resistance of the subtrees below the target (zero for a leaf). Flows are
    already rebalanced for the extra terminal.
    """
    p = tree.params
    n = tree.terminal_count
    q_now = p.q_perf / n
    q_next = p.q_perf / (n + 1)
    r = float(tree.radii[target])
    r4 = r * r * r * r
    n_t = tree.n_leaves[target]
    f1 = n_t * q_next
    return LocalBifurcationProblem(
        x0=tree.proximal(target),
        x1=tree.distal(target),
        x2=np.asarray(candidate, dtype=float),
        f1=f1,
        f2=q_next,
        p0=p.p_term + n_t * q_now * tree.r_star[target] / r4,
        p1=p.p_term + f1 * tree.downstream_resistance(target) / r4,
        p2=p.p_term,
        mu=p.mu,
        gamma=p.gamma,
        min_length=tree.min_length,
    )


def check_constraints(tree, domain, target, proposed, margin=None, step=None):
    """First violated constraint for a proposed connection, or None.

    ``proposed`` holds three ``(proximal, distal, radius)`` triples in the
    order parent part, continuation, new leaf. Checks, in order: every
    segment inside the domain; clearance ``(1 + margin) (r_a + r_b)`` to
    every existing segment that will not share an endpoint with it; each
    length at least ``max(min_length, 2 r)``.
    """
    if margin is None:
        margin = tree.params.clearance_margin
    for a, b, _ in proposed:
        if not domain.segment_inside(a, b, step):
            return OUTSIDE

    n = tree.segment_count
    prox, dist, rad = tree.proximal_points, tree.distal_points, tree.radii
    excluded = (
        {target, tree.parent[target], tree.sibling(target)},
        {target, tree.left[target], tree.right[target]},
        {target},
    )
    for (a, b, r), skip in zip(proposed, excluded):
        keep = np.ones(n, dtype=bool)
        keep[[i for i in skip if i >= 0]] = False
        if not np.any(keep):
            continue
        d = segment_segment_distance(a, b, prox[keep], dist[keep])
        if np.any(d < (1.0 + margin) * (r + rad[keep])):
            return INTERSECTS

    for a, b, r in proposed:
        length = math.sqrt(float(np.sum((np.asarray(b) - np.asarray(a)) ** 2)))
        if length < max(tree.min_length, 2.0 * r):
            return DEGENERATE
    return None


def evaluate_connection(tree, domain, target, candidate, step=None):
    """Solve, constrain and price one candidate connection; never raises.

    The price is the full-tree volume after a hypothetical commit, computed
    by :meth:`VesselTree.preview_split` without touching the tree.
    """
    try:
        prob = local_problem(tree, target, candidate)
        sol = optimal_bifurcation(prob, tol=tree.params.tol,
                                  max_iter=tree.params.max_iter)
    except (UsageError, DegenerateSolutionError):
        return CandidateEvaluation(target, None, DEGENERATE, None)
    except SolverError:
        return CandidateEvaluation(target, None, SOLVER_FAILED, None)
    try:
        preview = tree.preview_split(target, sol.x_b, candidate)
    except ZeroDivisionError:
        return CandidateEvaluation(target, sol, DEGENERATE, None)
    proposed = (
        (prob.x0, sol.x_b, preview.radius_parent),
        (sol.x_b, prob.x1, preview.radius_continuation),
        (sol.x_b, prob.x2, preview.radius_leaf),
    )
    reason = check_constraints(tree, domain, target, proposed, step=step)
    if reason is not None:
        return CandidateEvaluation(target, sol, reason, None)
    return CandidateEvaluation(target, sol, None, preview.volume)


def default_root_position(domain):
    """Middle of the lower-y face of the domain bounding box."""
    lo, hi = domain.bounds()
    p = 0.5 * (lo + hi)
    p[1] = lo[1]
    return p


def project_root(domain, root_position, rng):
    """The configured root if it is inside, else the closest of 4096 samples."""
    root_position = np.asarray(root_position, dtype=float)
    if domain.contains(root_position):
        return root_position
    pts = np.array([domain.sample_point(rng) for _ in range(ROOT_PROJECTION_SAMPLES)])
    d = np.sum((pts - root_position) ** 2, axis=1)
    return pts[int(np.argmin(d))]


class EvaluationLog:
    """Tab-separated record of every candidate evaluation."""

    HEADER = "step\tcandidate\ttarget\tfeasible\treason\tcost\tcommitted\n"

    def __init__(self, stream):
        self.stream = stream
        stream.write(self.HEADER)

    def write(self, step, candidate, evaluations, committed=None):
        for e in evaluations:
            cost = "nan" if e.total_cost is None else format(e.total_cost, ".17g")
            self.stream.write(
                f"{step}\t{candidate}\t{e.target_segment}\t{int(e.feasible)}\t"
                f"{e.reason or 'ok'}\t{cost}\t{int(e is committed)}\n"
            )


class Grower:
    """Owns the tree, its spatial index and the RNG stream of one run."""

    def __init__(self, params, domain, seed_tree=None, root_position=None,
                 log_stream=None, threads=1):
        if domain.dim != params.dim:
            raise UsageError(f"params.dim={params.dim} but the domain is {domain.dim}D")
        self.params = params
        self.domain = domain
        self.rng = np.random.default_rng(params.seed)
        self.measure = domain.measure()
        self.eps = domain.min_segment_length()
        self.log = EvaluationLog(log_stream) if log_stream is not None else None
        self.threads = max(1, int(threads))
        self.step = 0
        if seed_tree is None:
            self.tree = self._initial_tree(root_position)
        else:
            self.tree = self._adopt_seed(seed_tree)
        cell = 2.0 * (self.measure / params.k_term) ** (1.0 / domain.dim)
        self.index = SpatialIndex(self.tree, cell)

    def _initial_tree(self, root_position):
        if root_position is None:
            root_position = default_root_position(self.domain)
        root = project_root(self.domain, root_position, self.rng)
        for _ in range(self.params.discard_cap):
            p = self.domain.sample_point(self.rng)
            d = math.sqrt(float(np.sum((p - root) ** 2)))
            if d >= self.eps and self.domain.segment_inside(root, p):
                tree = init_tree(self.params, root, p, min_length=self.eps)
                tree.realize_radii()
                return tree
        raise GrowthStalled("no admissible first terminal", None)

    def _adopt_seed(self, seed):
        if seed.dim != self.domain.dim:
            raise InputError(f"{seed.dim}D seed tree for a {self.domain.dim}D domain")
        tree = seed.copy()
        tree.params = self.params
        tree.min_length = self.eps
        tree.recompute_all()
        tree.realize_radii()
        report = validate(tree, self.domain)
        if not report.passed():
            raise InputError(
                "seed tree fails validation: " + ", ".join(report.failures()))
        return tree

    def evaluate(self, targets, candidate):
        fn = lambda t: evaluate_connection(self.tree, self.domain, t, candidate)
        if self.threads > 1 and len(targets) > 1:
            return list(self._pool().map(fn, targets))
        return [fn(t) for t in targets]

    def _pool(self):
        if not hasattr(self, "_executor"):
            self._executor = ThreadPoolExecutor(max_workers=self.threads)
        return self._executor

    def close(self):
        if hasattr(self, "_executor"):
            self._executor.shutdown()
            del self._executor

    def insert_one(self):
        """Add exactly one terminal, or raise GrowthStalled."""
        p = self.params
        self.step += 1
        d_thresh = distance_threshold(self.measure, self.tree.terminal_count,
                                      p.eta, self.domain.dim)
        rejected = 0
        discarded = 0
        candidate_no = 0
        while True:
            cand = sample_candidate(self.domain, self.tree, self.index, d_thresh, self.rng)
            if cand is None:
                rejected += 1
                if rejected % p.relax_every == 0:
                    d_thresh *= p.relax_factor
                continue
            candidate_no += 1
            targets = nearest_segments(self.tree, self.index, cand, p.n_con)
            evals = self.evaluate(targets, cand)
            feasible = [e for e in evals if e.feasible]
            if not feasible:
                if self.log:
                    self.log.write(self.step, candidate_no, evals)
                discarded += 1
                if discarded >= p.discard_cap:
                    raise GrowthStalled(
                        f"{discarded} consecutive candidates without a feasible "
                        f"connection at {self.tree.terminal_count} terminals",
                        self.tree,
                    )
                continue
            best = min(feasible, key=lambda e: (e.total_cost, e.target_segment))
            if self.log:
                self.log.write(self.step, candidate_no, evals, best)
            self.commit(best, cand)
            return best

    def commit(self, evaluation, candidate):
        t = evaluation.target_segment
        cont, leaf = self.tree.split(t, evaluation.solution.x_b, candidate)
        self.tree.update_hydrodynamics(cont)
        self.tree.realize_radii()
        for i in (t, cont, leaf):
            self.index.update(i)

    def run(self):
        try:
            while self.tree.terminal_count < self.params.k_term:
                self.insert_one()
        finally:
            self.close()
        log.info("grown %d terminals; sampling acceptance %.3f",
                 self.tree.terminal_count, self.domain.acceptance_rate())
        return self.tree


def grow(params, domain, seed_tree=None, root_position=None, log_stream=None, threads=1):
    """Grow a tree to ``params.k_term`` terminals inside ``domain``."""
    return Grower(params, domain, seed_tree, root_position, log_stream, threads).run()
