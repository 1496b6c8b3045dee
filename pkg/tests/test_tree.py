import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ccotree.domain import BallDomain
from ccotree.errors import DegenerateGeometryError, UsageError
from ccotree.params import CcoParams
from ccotree.tree import init_tree, murray_residuals, pair_betas, validate
from oracles import network_resistance, random_tree, solve_network

# 8 mu / pi == 1
UNIT_MU = math.pi / 8


def unit_params(**kw):
    base = dict(mu=UNIT_MU, q_perf=1.0, p_perf=1.0, p_term=0.0)
    base.update(kw)
    return CcoParams(**base)


def symmetric_tree(params=None):
    params = params or unit_params()
    t = init_tree(params, [0.0, 0.0], [0.0, 2.0])
    cont, leaf = t.split(t.root, [0.0, 1.0], [-1.0, 1.0 + 1.0])
    # mirror the existing distal end so both children match
    t._set_distal(cont, [1.0, 2.0])
    t.update_hydrodynamics(cont)
    t.update_hydrodynamics(leaf)
    t.realize_radii()
    return t, cont, leaf


def test_init_tree():
    t = init_tree(unit_params(), [0.0, 0.0], [0.6, 0.8])
    assert t.segment_count == 1 and t.terminal_count == 1
    assert t.r_star[t.root] == 1.0
    assert t.beta[t.root] == 1.0


def test_init_tree_rejects_degenerate_length():
    with pytest.raises(DegenerateGeometryError):
        init_tree(unit_params(), [0.0, 0.0], [0.0, 1e-9], min_length=1e-6)
    with pytest.raises(DegenerateGeometryError):
        init_tree(unit_params(), [0.0, 0.0], [0.0, 0.0])


def test_split_counts_and_leaf_accounting():
    t = init_tree(unit_params(), [0.0, 0.0], [0.0, 1.0])
    cont, leaf = t.split(t.root, [0.0, 0.5], [0.4, 0.7])
    t.update_hydrodynamics(cont)
    assert (t.segment_count, t.terminal_count) == (3, 2)
    assert t.children(t.root) == (cont, leaf)
    assert np.array_equal(t.distal(t.root), [0.0, 0.5])
    assert np.array_equal(t.distal(cont), [0.0, 1.0])
    # split an internal segment: counts on its root path grow by one
    before = list(t.n_leaves)
    c2, l2 = t.split(t.root, [0.0, 0.25], [-0.3, 0.3])
    t.update_hydrodynamics(c2)
    assert t.n_leaves[t.root] == before[t.root] + 1
    assert t.n_leaves[c2] == before[t.root]
    assert (t.segment_count, t.terminal_count) == (5, 3)


def test_split_degenerate_leaves_tree_unchanged():
    t = init_tree(unit_params(), [0.0, 0.0], [0.0, 1.0], min_length=1e-3)
    with pytest.raises(DegenerateGeometryError):
        t.split(t.root, [0.0, 1e-5], [0.5, 0.5])
    assert t.segment_count == 1
    assert np.array_equal(t.distal(t.root), [0.0, 1.0])
    with pytest.raises(UsageError):
        t.split(7, [0.0, 0.5], [0.5, 0.5])


@pytest.mark.parametrize("target", ["leaf", "internal"])
def test_split_preserves_strict_binary_structure(target):
    t = init_tree(unit_params(), [0.0, 0.0], [0.0, 1.0])
    cont, leaf = t.split(t.root, [0.0, 0.5], [0.5, 0.7])
    t.update_hydrodynamics(cont)
    seg = leaf if target == "leaf" else t.root
    c, _ = t.split(seg, 0.5 * (t.proximal(seg) + t.distal(seg)) + [0.0, 0.01], [-0.4, 0.2])
    t.update_hydrodynamics(c)
    t.realize_radii()
    assert all(len(t.children(i)) in (0, 2) for i in range(t.segment_count))
    assert t.segment_count == 2 * t.terminal_count - 1
    for i in range(t.segment_count):
        if not t.is_leaf(i):
            a, b = t.children(i)
            assert t.n_leaves[i] == t.n_leaves[a] + t.n_leaves[b]
    assert max(murray_residuals(t)) < 1e-12


def test_symmetric_betas():
    t, cont, leaf = symmetric_tree()
    assert t.beta[cont] == t.beta[leaf]
    assert math.isclose(t.beta[cont], 2 ** (-1 / 3), rel_tol=1e-15)
    assert math.isclose(t.radii[cont] / t.radii[t.root], 0.7937005259840998, rel_tol=1e-12)
    b4 = pair_betas(1, 1.0, 1, 1.0, 4.0)
    assert b4[0] == b4[1] == 2 ** (-1 / 4)


def test_realize_radii_unit_case_and_rescale():
    t = init_tree(unit_params(), [0.0, 0.0], [1.0, 0.0])
    t.realize_radii()
    assert t.radii[0] == 1.0
    t.realize_radii(q_perf=16.0)
    assert t.radii[0] == 2.0


def test_volume():
    t = init_tree(unit_params(), [0.0, 0.0], [1.0, 0.0])
    with pytest.raises(UsageError):
        t.volume()
    t.realize_radii()
    assert t.volume() == math.pi


def test_node_pressure_examples():
    t = init_tree(unit_params(), [0.0, 0.0], [1.0, 0.0])
    t.realize_radii()
    assert t.node_pressure(t.root) == 0.0
    t, cont, leaf = symmetric_tree(unit_params(p_perf=10.0, p_term=1.0))
    p = t.node_pressure(t.root)
    assert 1.0 < p < 10.0
    assert math.isclose(t.node_pressure(cont), 1.0, rel_tol=1e-12)
    assert math.isclose(t.node_pressure(leaf), 1.0, rel_tol=1e-12)


def test_r_star_matches_network_solve_17_terminals():
    rng = np.random.default_rng(17)
    t = random_tree(rng, 17)
    ref = network_resistance(t) * float(t.radii[t.root]) ** 4
    assert math.isclose(t.r_star[t.root], ref, rel_tol=1e-9)


def test_terminal_pressures_match_network_solve():
    rng = np.random.default_rng(5)
    t = random_tree(rng, 12, dim=3)
    p_net, flows, ends = solve_network(t, t.params.p_perf, t.params.p_term)
    ours = t.distal_pressures()
    for i in range(t.segment_count):
        assert math.isclose(ours[i], p_net[ends[i][1]], rel_tol=1e-9)
        assert math.isclose(flows[i], t.flow(i), rel_tol=1e-9)


@given(st.integers(0, 2**32), st.integers(2, 25), st.sampled_from([2, 3]))
def test_incremental_update_equals_full_recomputation(seed, n, dim):
    t = random_tree(np.random.default_rng(seed), n, dim=dim)
    beta, rs = list(t.beta), list(t.r_star)
    t.recompute_all()
    for a, b in zip(beta + rs, t.beta + t.r_star):
        assert abs(a - b) <= 1e-12 * abs(b)


@given(st.integers(0, 2**32), st.integers(1, 20))
def test_radius_monotone_and_rescale_covariant(seed, n):
    t = random_tree(np.random.default_rng(seed), n)
    r = t.radii.copy()
    for i in range(t.segment_count):
        if t.parent[i] >= 0:
            assert r[i] <= r[t.parent[i]]
    t.realize_radii(q_perf=t.params.q_perf * 81.0)
    assert np.allclose(t.radii / r, 3.0, rtol=1e-12, atol=0)


@given(st.integers(0, 2**32), st.integers(1, 15))
def test_preview_split_matches_real_commit(seed, n):
    rng = np.random.default_rng(seed)
    t = random_tree(rng, n)
    seg = int(rng.integers(t.segment_count))
    a, b = t.proximal(seg), t.distal(seg)
    bif = 0.5 * (a + b) + 0.1 * rng.standard_normal(2)
    term = bif + rng.standard_normal(2)
    prev = t.preview_split(seg, bif, term)
    scratch = t.copy()
    cont, leaf = scratch.split(seg, bif, term)
    scratch.update_hydrodynamics(cont)
    scratch.realize_radii()
    assert math.isclose(prev.volume, scratch.volume(), rel_tol=1e-12)
    assert math.isclose(prev.radius_parent, scratch.radii[seg], rel_tol=1e-12)
    assert math.isclose(prev.radius_continuation, scratch.radii[cont], rel_tol=1e-12)
    assert math.isclose(prev.radius_leaf, scratch.radii[leaf], rel_tol=1e-12)
    # the original is untouched
    assert t.segment_count == 2 * n - 1


def test_copy_is_independent():
    t = random_tree(np.random.default_rng(0), 4)
    c = t.copy()
    c.split(0, 0.5 * (c.proximal(0) + c.distal(0)) + 0.01, [5.0, 5.0])
    assert t.segment_count == 7 and c.segment_count == 9


def test_validate_consistent_tree():
    d = BallDomain([0.0, 0.0], 10.0)
    t = random_tree(np.random.default_rng(1), 6)
    rep = validate(t, d)
    assert rep.terminal_count == 6 and rep.segment_count == 11
    assert rep.max_murray_residual <= 1e-6
    assert rep.max_terminal_pressure_error <= 1e-6
    assert rep.all_inside_domain
    assert rep.max_depth == max(t.depths())
    assert math.isclose(rep.total_volume, t.volume())


def test_validate_flags_corrupted_beta():
    d = BallDomain([0.0, 0.0], 10.0)
    t = random_tree(np.random.default_rng(1), 6)
    leaf = t.leaves()[0]
    t.beta[leaf] *= 1.001
    t.realize_radii()
    rep = validate(t, d)
    assert rep.max_murray_residual > 1e-6
    assert "max_murray_residual" in rep.failures()


def test_validate_flags_outside_and_clearance():
    t = random_tree(np.random.default_rng(1), 6)
    rep = validate(t, BallDomain([0.0, 0.0], 0.5))
    assert not rep.all_inside_domain
    t._radius[: t.segment_count] = 10.0
    rep = validate(t, BallDomain([0.0, 0.0], 10.0))
    assert rep.min_clearance_margin < 0


def test_single_segment_report():
    t = init_tree(unit_params(), [0.0, 0.0], [0.5, 0.0])
    t.realize_radii()
    rep = validate(t, BallDomain([0.0, 0.0], 1.0))
    assert rep.max_murray_residual == 0.0
    assert rep.min_clearance_margin == math.inf
    assert rep.max_depth == 1
    assert rep.passed()
