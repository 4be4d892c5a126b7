from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rkl.kernels import TruncationLadder, catalog_kernel, make_subkernel
from rkl.quadrature import build_rule, discretize, nystrom_apply, operator_norm_estimate, spectral_norm


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 5), ppu=st.integers(1, 3), ppp=st.integers(2, 12))
def test_rule_integrates_constants_and_polynomials(n, ppu, ppp):
    ladder = TruncationLadder.linear(5)
    rule = build_rule(ladder, n, ppu, ppp)
    tau = ladder.tau(n)
    assert np.all(rule.weights > 0)
    assert rule.integrate(np.ones(rule.size)) == pytest.approx(2 * tau, rel=1e-13)
    assert rule.integrate(rule.nodes**2) == pytest.approx(2 * tau**3 / 3, rel=1e-12)


def test_rule_contains_ladder_edges():
    ladder = TruncationLadder.quartic(3)
    rule = build_rule(ladder, 3, 1, 4)
    for k in (1, 2):
        assert np.any(np.isclose(rule.edges, ladder.tau(k)))
        assert np.any(np.isclose(rule.edges, -ladder.tau(k)))
    assert rule.edges[0] == -98.0 and rule.edges[-1] == 98.0


def test_example1_panels_split_at_multiples_of_eps():
    spec = catalog_kernel("example1", {"eps": 0.75})
    rule = build_rule(TruncationLadder.linear(3), 2, 1, 6, spec)
    for k in range(-5, 6):
        assert np.any(np.isclose(rule.edges, 0.75 * k))


def test_gaussian_integral_machine_precision():
    rule = build_rule(TruncationLadder.linear(8), 8, 1, 10)
    assert rule.integrate(np.exp(-rule.nodes**2)) == pytest.approx(math.sqrt(math.pi), rel=1e-14)


def test_test_points_and_refinement():
    rule = build_rule(TruncationLadder.linear(2), 1, 1, 4)
    assert rule.test_points.size == rule.size + rule.midpoints.size
    fine = rule.refined()
    assert fine.panels_per_unit == 2
    assert fine.size == 2 * rule.size


def test_discretize_weighted_and_apply(gauss):
    ladder = TruncationLadder.linear(4)
    sub = make_subkernel(gauss, ladder, 4, "two_sided")
    op = discretize(sub, build_rule(ladder, 4))
    assert op.hermitian
    np.testing.assert_allclose(op.weighted, op.weighted.conj().T, atol=0)
    # T applied to exp(-x^2) at 0: int exp(-2x^2) = sqrt(pi/2)
    f = np.exp(-op.nodes**2)
    out = nystrom_apply(op, f)
    i0 = np.argmin(np.abs(op.nodes))
    expect = math.exp(-op.nodes[i0] ** 2) * math.sqrt(math.pi / 2)
    assert out[i0] == pytest.approx(expect, rel=1e-12)


def test_discretize_rejects_false_hermitian(gauss):
    from rkl.kernels import KernelSpec

    fake = KernelSpec("fake", {}, True, None, lambda s, t: np.exp(-((s - 1) ** 2) - t * t) + 0j)
    with pytest.raises(ValueError):
        discretize(fake, build_rule(TruncationLadder.linear(2), 2))


def test_spectral_norm_matches_svd():
    rng = np.random.default_rng(3)
    a = rng.standard_normal((30, 30)) + 1j * rng.standard_normal((30, 30))
    assert spectral_norm(a, tol=1e-13) == pytest.approx(np.linalg.norm(a, 2), rel=1e-8)
    assert spectral_norm(np.zeros((3, 3))) == 0.0


def test_operator_norm_rank_two(frh):
    ladder = TruncationLadder.linear(8)
    op = discretize(make_subkernel(frh, ladder, 6, "two_sided"), build_rule(ladder, 6))
    assert operator_norm_estimate(op) == pytest.approx(0.8, rel=1e-10)
