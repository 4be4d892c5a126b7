from __future__ import annotations

import math

import numpy as np
import pytest

from rkl.fredholm import fredholm_resolvent
from rkl.kernels import TruncationLadder, catalog_kernel, make_subkernel
from rkl.quadrature import build_rule, discretize
from rkl.resolvent import (
    inverse_identity_residual,
    iterant,
    neumann_resolvent,
    nystrom_direct,
    reconstruct_from_carleman,
    resolvent_carleman,
    resolvent_residuals,
    second_resolvent_residual,
    selfadjoint_resolvent_bound_check,
    spectral_radius,
    spectral_radius_reciprocal,
)

R_GAUSS = 1 / math.sqrt(math.pi / 2)  # reciprocal of the only nonzero eigenvalue


def _op(spec, n, kind="one_sided", size=8, ppu=1):
    ladder = TruncationLadder.linear(size)
    sub = make_subkernel(spec, ladder, n, kind)
    return discretize(sub, build_rule(ladder, n, ppu, 10, sub))


@pytest.fixture(scope="module")
def gop():
    return _op(catalog_kernel("gauss_bump"), 4)


def test_spectral_radius_gauss(gop):
    assert spectral_radius_reciprocal(gop) == pytest.approx(R_GAUSS, rel=1e-12)
    with pytest.raises(ValueError):
        spectral_radius_reciprocal(gop, k_max=3)


def test_spectral_radius_nilpotent_example1():
    op = _op(catalog_kernel("example1", {"eps": 1.0}), 3)
    assert spectral_radius(op) < 1e-14
    assert spectral_radius_reciprocal(op) == math.inf


def test_iterant_rank_one(gop):
    # T^[k] = (sqrt(pi/2))^{k-1} T for the Gaussian rank-one kernel
    t3 = iterant(gop, 3)
    np.testing.assert_allclose(t3.matrix, (math.pi / 2) * gop.matrix, atol=1e-14)
    with pytest.raises(ValueError):
        iterant(gop, 0)


@pytest.mark.parametrize("lam", [0.5 * R_GAUSS, 0.5j * R_GAUSS, -0.5 * R_GAUSS])
def test_method_triangle(gop, lam):
    pts = gop.rule.test_points
    a = fredholm_resolvent(gop, lam).matrix(pts, pts)
    b = nystrom_direct(gop, lam).matrix(pts, pts)
    c = neumann_resolvent(gop, lam, 60).matrix(pts, pts)
    for x, y in ((a, b), (a, c), (b, c)):
        assert np.max(np.abs(x - y)) < 1e-12


def test_neumann_meta_and_single_term(gop):
    ev = neumann_resolvent(gop, 2 * R_GAUSS, 5)
    assert ev.meta["converged"] is False
    one = neumann_resolvent(gop, 0.3, 1)
    assert one(0.1, 0.2) == pytest.approx(gop.source(0.1, 0.2))


def test_resolvent_closed_form(gop):
    lam = 0.4
    ev = fredholm_resolvent(gop, lam)
    exact = math.exp(-(0.3**2 + 0.7**2)) / (1 - lam * math.sqrt(math.pi / 2))
    assert ev(0.3, 0.7) == pytest.approx(exact, abs=1e-14)


@pytest.mark.parametrize("route", ["cols", "rows"])
def test_carleman_reconstruction(route):
    op = _op(catalog_kernel("example1", {"eps": 1.0}), 3)
    ev = fredholm_resolvent(op, 0.7 + 0.2j)
    s = np.array([-1.3, 0.2, 2.5])
    t = np.array([-0.5, 0.9, 3.1])
    rebuilt = reconstruct_from_carleman(op, ev, s, t, route)
    assert np.max(np.abs(rebuilt - ev.matrix(s, t))) < 1e-12


def test_carleman_samples_orientation(gop):
    ev = fredholm_resolvent(gop, 0.3)
    cs = resolvent_carleman(gop, ev, [0.4])
    np.testing.assert_allclose(cs.t[0], np.conj(ev.matrix([0.4], gop.nodes)[0]))
    np.testing.assert_allclose(cs.tprime[0], ev.matrix(gop.nodes, [0.4])[:, 0])
    nt, ntp = cs.norms()
    assert nt[0] > 0 and ntp[0] > 0


def test_defining_equation_residuals():
    op = _op(catalog_kernel("example1", {"eps": 0.5}), 3)
    ev = fredholm_resolvent(op, 1.5)
    res = resolvent_residuals(ev, op)
    assert res.left_residual < 1e-12
    assert res.right_residual < 1e-12
    assert math.isnan(res.second_residual)


def test_inverse_identity(gop):
    assert inverse_identity_residual(gop, fredholm_resolvent(gop, 0.6 + 0.1j)) < 1e-13


def test_second_resolvent_equation():
    spec = catalog_kernel("gauss_bump")
    ladder = TruncationLadder.linear(8)
    rule = build_rule(ladder, 6)
    full = discretize(make_subkernel(spec, ladder, 6, "one_sided"), rule)
    part = discretize(make_subkernel(spec, ladder, 1, "one_sided"), rule)
    lam = 0.5
    r = second_resolvent_residual(fredholm_resolvent(full, lam), fredholm_resolvent(part, lam))
    assert r < 1e-12


def test_selfadjoint_bound(frh):
    op = _op(frh, 6, "two_sided")
    for lam in (1.25 + 0.01j, 2 + 1j, -3 - 0.5j):
        check = selfadjoint_resolvent_bound_check(op, lam)
        assert check.ok, check
    with pytest.raises(ValueError):
        selfadjoint_resolvent_bound_check(op, 1.0)
