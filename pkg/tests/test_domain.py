import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ccotree.domain import BallDomain, BoxDomain, MaskDomain
from ccotree.errors import DegenerateDomainError, UsageError
from shapes import c_mask


def unit_disk():
    return BallDomain([0.0, 0.0], 1.0)


def test_contains_examples():
    d = unit_disk()
    assert d.contains([0.0, 0.0])
    assert not d.contains([2.0, 0.0])
    assert d.contains([1.0, 0.0])  # closed
    m = MaskDomain(np.ones((1, 1, 1)), [0.1, 0.1, 0.1], [0, 0, 0])
    assert m.contains([0.05, 0.05, 0.05])


def test_mask_voxels_are_half_open():
    m = MaskDomain(np.ones((2, 2)), [0.5, 0.5], [1.0, 1.0])
    assert m.contains([1.0, 1.0])
    assert not m.contains([2.0, 1.5])
    assert not m.contains([0.999, 1.5])
    occ = np.zeros((2, 1), dtype=bool)
    occ[1, 0] = True
    m = MaskDomain(occ, [1.0, 1.0], [0.0, 0.0])
    assert not m.contains([0.5, 0.5]) and m.contains([1.5, 0.5])


def test_dimension_mismatch_is_usage_error():
    with pytest.raises(UsageError):
        unit_disk().contains([0.0, 0.0, 0.0])
    with pytest.raises(UsageError):
        BallDomain([0, 0, 0], 1.0).segment_inside([0, 0], [0.1, 0])


def test_measure_examples():
    assert unit_disk().measure() == math.pi
    assert BallDomain([0, 0, 0], 1.0).measure() == 4 * math.pi / 3
    assert BoxDomain([0, 0], [2, 3]).measure() == 6.0
    occ = np.zeros((10, 10, 10), dtype=bool)
    occ.flat[:100] = True
    m = MaskDomain(occ, [0.1, 0.1, 0.1], [0, 0, 0])
    assert m.count == 100
    assert math.isclose(m.measure(), 0.1, rel_tol=1e-12)


def test_invalid_domains_rejected():
    with pytest.raises(UsageError):
        MaskDomain(np.zeros((3, 3)), [1, 1], [0, 0])
    with pytest.raises(UsageError):
        MaskDomain(np.ones((3, 3)), [1, 0], [0, 0])
    with pytest.raises(UsageError):
        BallDomain([0, 0], 0.0)
    with pytest.raises(UsageError):
        BoxDomain([0, 0], [1, 0])


def test_sample_point_inside_and_deterministic():
    a, b = unit_disk(), unit_disk()
    ra, rb = np.random.default_rng(9), np.random.default_rng(9)
    for _ in range(200):
        p = a.sample_point(ra)
        assert np.linalg.norm(p) <= 1.0
        assert np.array_equal(p, b.sample_point(rb))


def test_sample_point_consumes_dim_doubles_per_attempt():
    d = unit_disk()
    rng = np.random.default_rng(1)
    for _ in range(50):
        d.sample_point(rng)
    ref = np.random.default_rng(1)
    ref.random(2 * d.draws)
    assert rng.random() == ref.random()


def test_sample_mean_is_centered():
    # mean of a uniform disk sample is the center; 10k samples give sd ~ 0.005
    d = unit_disk()
    rng = np.random.default_rng(2024)
    pts = np.array([d.sample_point(rng) for _ in range(10_000)])
    assert np.all(np.abs(pts.mean(axis=0)) < 0.05)
    assert 0.7 < d.acceptance_rate() < 0.87  # pi/4 expected


def test_sampling_mask_domain_uniform_over_voxels():
    occ = np.zeros((4, 4), dtype=bool)
    occ[0, 0] = occ[3, 3] = True
    m = MaskDomain(occ, [1.0, 1.0], [0.0, 0.0])
    rng = np.random.default_rng(3)
    pts = np.array([m.sample_point(rng) for _ in range(2000)])
    assert m.contains_many(pts).all()
    frac = np.mean(pts[:, 0] < 1.0)
    assert 0.45 < frac < 0.55


def test_degenerate_domain_error():
    occ = np.zeros((1000, 1000), dtype=bool)
    occ[0, 0] = True
    m = MaskDomain(occ, [1.0, 1.0], [0.0, 0.0])
    with pytest.raises(DegenerateDomainError):
        m.sample_point(np.random.default_rng(0))


def test_segment_inside_examples():
    d = unit_disk()
    assert d.segment_inside([-0.5, 0.0], [0.5, 0.0], 0.1)
    assert not d.segment_inside([0.0, 0.0], [2.0, 0.0], 0.1)
    with pytest.raises(UsageError):
        d.segment_inside([0, 0], [0.1, 0], 0.0)


def test_segment_inside_c_mask_crossing_void():
    m = c_mask()
    a, b = np.array([1.75, 0.55]), np.array([1.75, 1.45])
    assert m.contains(a) and m.contains(b)
    mid = 0.5 * (a + b)
    assert not m.contains(mid)
    assert not m.segment_inside(a, b)


def test_segment_inside_checks_the_far_endpoint():
    # step longer than the segment: only the two endpoints are tested
    d = BoxDomain([0, 0], [1, 1])
    assert not d.segment_inside([0.5, 0.5], [1.2, 0.5], 10.0)


def test_default_steps():
    assert math.isclose(unit_disk().default_step(), math.sqrt(math.pi) / 64)
    assert c_mask().default_step() == 0.05


@given(st.integers(0, 2**32))
def test_sampled_points_pass_segment_inside_for_a_short_step(seed):
    d = c_mask()
    rng = np.random.default_rng(seed)
    for _ in range(20):
        p = d.sample_point(rng)
        assert d.segment_inside(p, p, d.default_step())


def test_contains_is_pure(rng):
    m = c_mask()
    pts = rng.random((500, 2)) * 2.0
    first = m.contains_many(pts)
    assert np.array_equal(first, m.contains_many(pts))
    assert [m.contains(p) for p in pts] == list(first)
