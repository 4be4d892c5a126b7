from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rkl.errors import OutOfDomainError
from rkl.kernels import (
    Profile,
    SubkernelSpec,
    TruncationLadder,
    carleman_function_samples,
    carleman_norms,
    catalog_kernel,
    gram_matrix,
    hermite_functions,
    indicator,
    make_subkernel,
    tabulated_kernel,
)


def example1_tau_sq(eps):
    c = math.exp(-eps) / eps
    return c * c * eps**3 / 3 + math.exp(-2 * eps) / 2


def test_example1_values():
    spec = catalog_kernel("example1", {"eps": 1.0})
    assert spec(0.0, 2.0) == pytest.approx(math.exp(-2.0), abs=1e-15)
    assert spec(0.0, 0.5) == pytest.approx(math.exp(-1.0) * 0.5, abs=1e-15)
    assert spec(5.0, 0.0) == 0


@pytest.mark.parametrize("eps", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("s", [-3.0, 0.0, 0.4, 2.5])
def test_example1_row_norm_closed_form(eps, s):
    spec = catalog_kernel("example1", {"eps": eps})
    tau, _ = carleman_norms(spec, s)
    assert tau**2 == pytest.approx(example1_tau_sq(eps), rel=1e-9)


def test_example1_is_not_hermitian():
    spec = catalog_kernel("example1", {"eps": 1.0})
    assert not spec.hermitian
    assert spec.hermitian_defect(np.linspace(-3, 3, 13)) > 0.1


def test_rank1_separable():
    a = Profile("gauss")
    b = Profile("bump", radius=1.5)
    spec = catalog_kernel("rank1", {"a": a, "b": b})
    s = np.linspace(-2, 2, 7)
    np.testing.assert_allclose(spec.matrix(s, s), np.outer(a(s), b(s)))
    assert not spec.hermitian
    assert catalog_kernel("rank1", {"a": "gauss"}).hermitian


def test_hermite_basis_orthonormal():
    phis = hermite_functions(4)
    assert np.max(np.abs(gram_matrix(phis) - np.eye(4))) < 1e-12


def test_finite_rank_hermitian_structure(frh):
    x = np.linspace(-3, 3, 11)
    m = frh.matrix(x, x)
    phi = np.array([f(x) for f in frh.basis])
    np.testing.assert_allclose(m, 0.8 * np.outer(phi[0], phi[0]) + 0.3 * np.outer(phi[1], phi[1]), atol=1e-15)
    assert frh.hermitian_defect(x) < 1e-15


def test_catalog_rejects_unknown():
    with pytest.raises(ValueError):
        catalog_kernel("nope")
    with pytest.raises(ValueError):
        catalog_kernel("finite_rank_hermitian")


def test_zero_kernel():
    z = catalog_kernel("zero")
    assert np.all(z.matrix([0.0, 1.0], [2.0]) == 0)


def test_ladders():
    q = TruncationLadder.quartic(3)
    assert q.values == (1.0, 17.0, 98.0)
    lin = TruncationLadder.linear(4)
    assert lin.tau(1) == 2.0 and lin.tau(4) == 8.0
    with pytest.raises(IndexError):
        lin.tau(0)
    with pytest.raises(ValueError):
        TruncationLadder((1.0, 1.0))
    assert lin.extended(6).size == 6


def test_indicator_half_open():
    assert indicator(2.0, -2.0) == 1.0
    assert indicator(2.0, 2.0) == 0.0
    assert indicator(2.0, 1.999) == 1.0


@settings(max_examples=40, deadline=None)
@given(
    s=st.floats(-10, 10, allow_nan=False),
    t=st.floats(-10, 10, allow_nan=False),
    n=st.integers(1, 4),
)
def test_subkernel_masks(gauss, s, t, n):
    ladder = TruncationLadder.linear(4)
    tau = ladder.tau(n)
    one = make_subkernel(gauss, ladder, n, "one_sided")
    two = make_subkernel(gauss, ladder, n, "two_sided")
    inside_s = -tau <= s < tau
    inside_t = -tau <= t < tau
    assert one(s, t) == (gauss(s, t) if inside_s else 0)
    assert two(s, t) == (gauss(s, t) if inside_s and inside_t else 0)


def test_subkernel_hermitian_flag(gauss, ladder8):
    assert not SubkernelSpec(gauss, ladder8, 2, "one_sided").hermitian
    assert SubkernelSpec(gauss, ladder8, 2, "two_sided").hermitian
    with pytest.raises(ValueError):
        SubkernelSpec(gauss, ladder8, 2, "diagonal")


def test_carleman_samples_orientation():
    spec = catalog_kernel("example1", {"eps": 1.0})
    nodes = np.linspace(-4, 4, 9)
    row = carleman_function_samples(spec, [0.5], nodes, "row")
    col = carleman_function_samples(spec, [0.5], nodes, "col")
    np.testing.assert_allclose(row[0], np.conj(spec(0.5, nodes)))
    np.testing.assert_allclose(col[0], spec(nodes, 0.5))


def test_gauss_bump_norms(gauss):
    tau, taup = carleman_norms(gauss, 0.3)
    expect = math.exp(-0.09) * (math.pi / 2) ** 0.25
    assert tau == pytest.approx(expect, rel=1e-10)
    assert taup == pytest.approx(expect, rel=1e-10)


def _write_grid(path, s, t, values):
    with open(path, "w") as fh:
        fh.write("s,t,re,im\n")
        for i, si in enumerate(s):
            for j, tj in enumerate(t):
                v = values[i, j]
                fh.write(f"{si},{tj},{v.real},{v.imag}\n")


def test_tabulated_kernel_roundtrip(tmp_path, gauss):
    s = np.linspace(-3, 3, 61)
    path = tmp_path / "k.csv"
    _write_grid(path, s, s, gauss.matrix(s, s))
    spec = tabulated_kernel(path, hermitian=True)
    assert spec(0.1, 0.1) == pytest.approx(gauss(0.1, 0.1), abs=5e-3)
    assert spec(0.0, 0.5) == pytest.approx(gauss(0.0, 0.5), abs=1e-14)
    with pytest.raises(OutOfDomainError):
        spec(4.0, 0.0)


def test_tabulated_rejects_false_hermitian_claim(tmp_path):
    s = np.linspace(-1, 1, 5)
    path = tmp_path / "k.csv"
    _write_grid(path, s, s, np.outer(s, np.ones_like(s)).astype(complex))
    with pytest.raises(ValueError):
        tabulated_kernel(path, hermitian=True)


def test_tabulated_rejects_bad_order(tmp_path):
    path = tmp_path / "k.csv"
    path.write_text("s,t,re,im\n0,1,0,0\n0,0,0,0\n1,0,0,0\n1,1,0,0\n")
    with pytest.raises(ValueError):
        tabulated_kernel(path)
