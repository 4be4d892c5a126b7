"""Acceptance gate: one PASS/FAIL line per criterion, tolerances pinned below."""

from __future__ import annotations

import json
import math

import numpy as np
import pytest
import yaml
from scipy import integrate

from rkl import cli
from rkl.convergence import (
    BOUND_SLACK,
    compactness_diagnostics,
    moebius_parameter,
    moebius_uniform_study,
    resolvent_convergence_study,
)
from rkl.errors import CharacteristicValueError
from rkl.fredholm import characteristic_values, determinant, first_minor, fredholm_resolvent
from rkl.kernels import Profile, TruncationLadder, carleman_norms, catalog_kernel, make_subkernel
from rkl.quadrature import build_rule, discretize
from rkl.resolvent import (
    inverse_identity_residual,
    neumann_resolvent,
    nystrom_direct,
    resolvent_residuals,
    second_resolvent_residual,
    spectral_radius_reciprocal,
)
from rkl.solver import manufactured_rhs, solvability_residuals, solve_second_kind
from rkl.spectral import (
    SpectralWindow,
    classify_point,
    default_grid,
    interval_convergence_study,
    interval_projection,
    point_projection_limit,
)

# pinned tolerances
TOL_C1_REL = 1e-6
TOL_C2_SUP = 1e-8
TOL_C3_ZERO_REL = 1e-6
TOL_C3_PROJ = 1e-7
TOL_C4_TRIANGLE = 1e-7
TOL_C4_TAIL = 1e-6
NEUMANN_TERMS = 60
C5_FACTOR = 10.0
TOL_C5_INVERSE = 1e-12
TOL_C5_SECOND = 1e-7
TOL_C6_FINAL = 1e-5
TOL_C7_FINAL = 1e-5
TOL_C8_CAUCHY = 1e-6
TOL_C9_KERNEL = 1e-2
TOL_C9_REGULAR = 1e-3
TOL_C10_FINAL = 1e-6
TOL_C11_RECOVERY = 1e-9
TOL_C11_R414 = 1e-8

EPS_MACH = np.finfo(float).eps
MU_SEQ = [0.5 * 0.5**k for k in range(8)]

# resolvents produced by criteria 2 and 4, re-checked in criterion 5
_PRODUCED: list = []


def _op(spec, ladder, n, kind="one_sided", ppu=1, ppp=10):
    sub = make_subkernel(spec, ladder, n, kind)
    return discretize(sub, build_rule(ladder, n, ppu, ppp, sub))


# 1 --------------------------------------------------------------------------


def test_criterion_01_example1_row_norms(criterion):
    s_values = np.linspace(-4.5, 4.5, 10)
    worst = 0.0
    for eps in (0.5, 1.0, 2.0):
        spec = catalog_kernel("example1", {"eps": eps})
        c = math.exp(-eps) / eps
        exact = c * c * eps**3 / 3 + math.exp(-2 * eps) / 2
        for s in s_values:
            tau, _ = carleman_norms(spec, s)
            worst = max(worst, abs(tau**2 - exact) / exact)
    criterion(1, worst < TOL_C1_REL, f"example1 tau(s)^2 max rel error {worst:.2e} < {TOL_C1_REL:g}")


# 2 --------------------------------------------------------------------------


def test_criterion_02_rank1_closed_forms(criterion):
    a = Profile("gauss")
    b = Profile("bump", radius=1.5)
    c = integrate.quad(lambda x: a(x) * b(x), -1.5, 1.5, epsabs=1e-15, epsrel=1e-14)[0]
    spec = catalog_kernel("rank1", {"a": a, "b": b})
    ladder = TruncationLadder.linear(8)
    op = _op(spec, ladder, 5)
    pts = op.rule.test_points
    ab = np.outer(a(pts), b(pts))
    errs = {"det": 0.0, "minor": 0.0, "resolvent": 0.0}
    for lam in (0.0, 0.3, 0.9 / c):
        errs["det"] = max(errs["det"], abs(determinant(op, lam).determinant - (1 - lam * c)))
        errs["minor"] = max(errs["minor"], float(np.max(np.abs(first_minor(op, lam, pts, pts) - ab))))
        ev = fredholm_resolvent(op, lam)
        errs["resolvent"] = max(errs["resolvent"], float(np.max(np.abs(ev.matrix(pts, pts) - ab / (1 - lam * c)))))
        if lam != 0:
            _PRODUCED.append(("rank1", op, ev))
    worst = max(errs.values())
    detail = ", ".join(f"{k} {v:.1e}" for k, v in errs.items())
    criterion(2, worst < TOL_C2_SUP, f"rank-1 closed forms sup error ({detail}) < {TOL_C2_SUP:g}")


# 3 --------------------------------------------------------------------------


def test_criterion_03_finite_rank_eigen_oracle(criterion, frh):
    ladder = TruncationLadder.linear(8)
    op = _op(frh, ladder, 6, "two_sided")
    found = sorted(characteristic_values(op, (-5, 5, -1, 1), 41).points, key=lambda z: z.real)
    expect = [1 / 0.8, 1 / 0.3]
    zero_err = max(abs(z - e) / e for z, e in zip(found, expect)) if len(found) == 2 else math.inf
    proj = interval_projection(op, SpectralWindow(0.5, 1.0))
    grid = default_grid(ladder, 121)
    phi = frh.basis[0](grid)
    proj_err = float(np.max(np.abs(proj.matrix(grid, grid) - np.outer(phi, phi))))
    ok = len(found) == 2 and zero_err < TOL_C3_ZERO_REL and proj_err < TOL_C3_PROJ
    criterion(
        3,
        ok,
        f"{len(found)} zeros, max rel error {zero_err:.1e} < {TOL_C3_ZERO_REL:g}; "
        f"projection vs phi1 x phi1 {proj_err:.1e} < {TOL_C3_PROJ:g}",
    )


# 4 --------------------------------------------------------------------------


def test_criterion_04_method_triangle(criterion, gauss):
    ladder = TruncationLadder.linear(8)
    op = _op(gauss, ladder, 4)
    r = spectral_radius_reciprocal(op)
    pts = op.rule.test_points
    lam = 0.5 * r
    ratio = fredholm_resolvent(op, lam)
    direct = nystrom_direct(op, lam)
    neumann = neumann_resolvent(op, lam, NEUMANN_TERMS)
    mats = [ev.matrix(pts, pts) for ev in (ratio, direct, neumann)]
    triangle = max(float(np.max(np.abs(mats[i] - mats[j]))) for i, j in ((0, 1), (0, 2), (1, 2)))
    _PRODUCED.extend([("gauss", op, ratio), ("gauss", op, direct), ("gauss", op, neumann)])
    tail = 0.0
    for k in range(5):
        z = 0.5 * r * np.exp(2j * np.pi * k / 5)
        ref = fredholm_resolvent(op, z).matrix(pts, pts)
        tail = max(tail, float(np.max(np.abs(neumann_resolvent(op, z, NEUMANN_TERMS).matrix(pts, pts) - ref))))
    ok = triangle < TOL_C4_TRIANGLE and tail < TOL_C4_TAIL and bool(neumann.meta["converged"])
    criterion(
        4,
        ok,
        f"r(T)={r:.6f}; pairwise method gap {triangle:.1e} < {TOL_C4_TRIANGLE:g}; "
        f"Neumann m={NEUMANN_TERMS} tail over 5-point disk {tail:.1e} < {TOL_C4_TAIL:g}",
    )


# 5 --------------------------------------------------------------------------


def test_criterion_05_defining_equations(criterion, gauss):
    produced = list(_PRODUCED)
    # a non-compactly supported, non-Hermitian case with kinks
    ex1 = catalog_kernel("example1", {"eps": 0.5})
    op_ex1 = _op(ex1, TruncationLadder.linear(4), 3)
    produced += [("example1", op_ex1, fredholm_resolvent(op_ex1, 2.0)), ("example1", op_ex1, nystrom_direct(op_ex1, 2.0))]
    if len(produced) < 5:
        pytest.fail("criteria 2 and 4 must run first to supply resolvents")

    worst_ratio = 0.0
    inverse = 0.0
    for _, op, ev in produced:
        fine = op.refined()
        pts = op.rule.test_points
        if ev.method == "fredholm_ratio":
            r_fine = fredholm_resolvent(fine, ev.lam)
        elif ev.method == "nystrom_direct":
            r_fine = nystrom_direct(fine, ev.lam)
        else:
            r_fine = neumann_resolvent(fine, ev.lam, ev.meta["terms"])
        here = ev.matrix(pts, pts)
        estimate = float(np.max(np.abs(here - r_fine.matrix(pts, pts))))
        estimate = max(estimate, 64 * EPS_MACH * max(1.0, float(np.max(np.abs(here)))))
        res = resolvent_residuals(ev, fine, test_points=pts)
        worst_ratio = max(worst_ratio, max(res.left_residual, res.right_residual) / estimate)
        inverse = max(inverse, inverse_identity_residual(op, ev))

    ladder = TruncationLadder.linear(8)
    # on a shared rule so the truncation difference is resolved exactly
    rule = build_rule(ladder, 4)
    full = discretize(make_subkernel(gauss, ladder, 4, "one_sided"), rule)
    part = discretize(make_subkernel(gauss, ladder, 1, "one_sided"), rule)
    second = second_resolvent_residual(fredholm_resolvent(full, 0.5), fredholm_resolvent(part, 0.5))
    ok = worst_ratio <= C5_FACTOR and inverse < TOL_C5_INVERSE and second < TOL_C5_SECOND
    criterion(
        5,
        ok,
        f"{len(produced)} resolvents: max residual / quadrature estimate {worst_ratio:.2f} <= {C5_FACTOR:g}; "
        f"inverse identity {inverse:.1e} < {TOL_C5_INVERSE:g}; second resolvent equation {second:.1e} < {TOL_C5_SECOND:g}",
    )


# 6 --------------------------------------------------------------------------

_C6: dict = {}


def test_criterion_06_resolvent_study(criterion, gauss):
    rep = resolvent_convergence_study(gauss, TruncationLadder.linear(8), 0.3, [1, 2, 3, 4, 5], reference_n=6)
    _C6["report"] = rep
    v = rep.verdict
    finals = [v[k]["final"] for k in ("err_kernel", "err_t", "err_tprime")]
    decreasing = all(v[k]["decreasing"] for k in ("err_kernel", "err_t", "err_tprime"))
    ok = decreasing and max(finals) < TOL_C6_FINAL and v["scaffold_ok"]
    criterion(
        6,
        ok,
        f"gauss_bump lambda=0.3 n=1..5: decreasing={decreasing}, finals "
        f"{', '.join(f'{x:.1e}' for x in finals)} < {TOL_C6_FINAL:g}; two-sided scaffold ok={v['scaffold_ok']}",
    )


# 7 --------------------------------------------------------------------------


def test_criterion_07_moebius_study(criterion, gauss):
    ladder = TruncationLadder.linear(8)
    n_list = [1, 2, 3, 4, 5, 6]
    rep = moebius_uniform_study(gauss, ladder, lambda n: 1.0 / n**2, [0.2, 0.25, 0.3], n_list, reference_n=7)
    finals = {k: rep.series(k)[-1] for k in ("err_kernel", "err_t", "err_tprime")}
    worst = max(finals.values())
    zero = moebius_uniform_study(gauss, ladder, lambda n: 0.0, [0.3], [1, 2, 3, 4, 5], reference_n=6)
    base = _C6.get("report") or resolvent_convergence_study(gauss, ladder, 0.3, [1, 2, 3, 4, 5], reference_n=6)
    fields = ("err_kernel", "err_t", "err_tprime", "err_kernel_tilde", "err_t_tilde", "err_tprime_tilde")
    exact = all(getattr(a, f) == getattr(b, f) for a, b in zip(zero.rows, base.rows) for f in fields)
    criterion(
        7,
        worst < TOL_C7_FINAL and exact,
        f"beta_n=1/n^2, K={{0.2,0.25,0.3}}: max error at n=6 {worst:.2e} < {TOL_C7_FINAL:g}; "
        f"beta=0 reproduces criterion 6 exactly={exact}",
    )


# 8 --------------------------------------------------------------------------


def test_criterion_08_compactness_diagnostics(criterion, gauss):
    ladder = TruncationLadder.linear(10)
    lam = 0.3
    n_list = [4, 5, 6, 7, 8]
    seq = [moebius_parameter(lam, 1.0 / n**2) for n in n_list]
    rep = compactness_diagnostics(gauss, ladder, seq, n_list, reference_n=9, cauchy_tol=TOL_C8_CAUCHY)
    # bounds on every study run in this suite
    studies = [rep, _C6.get("report") or resolvent_convergence_study(gauss, TruncationLadder.linear(8), 0.3, [1, 2, 3, 4, 5], reference_n=6)]
    bounds = all(s.verdict["bounds_hold"] for s in studies)
    frh_rep = compactness_diagnostics(
        catalog_kernel("finite_rank_hermitian", {"mu": [0.8, 0.3]}), ladder, [0.5] * 3, [3, 4, 5], reference_n=6
    )
    ex1_rep = compactness_diagnostics(catalog_kernel("example1", {"eps": 1.0}), TruncationLadder.linear(4), [1.5] * 2, [2, 3], reference_n=4)
    bounds = bounds and frh_rep.verdict["bounds_hold"] and ex1_rep.verdict["bounds_hold"]
    spread = rep.diagnostics["cauchy_spread"][0]
    criterion(
        8,
        bounds and spread < TOL_C8_CAUCHY,
        f"bounds hold on all studies={bounds} (relative slack {BOUND_SLACK:g}); "
        f"probe T_n|lambda_n(0,0) spread over n=4..8 {spread:.2e} < {TOL_C8_CAUCHY:g}",
    )


# 9 --------------------------------------------------------------------------


def test_criterion_09_classification(criterion, frh):
    ladder = TruncationLadder.linear(8)
    char = classify_point(frh, ladder, 1.25, MU_SEQ)
    res = point_projection_limit(frh, ladder, 1.25, MU_SEQ)
    phi = frh.basis[0](res.grid)
    kernel_err = float(np.max(np.abs(res.final - np.outer(phi, phi))))
    reg = classify_point(frh, ladder, 2.0, MU_SEQ)
    index_ok = all(e <= 1.0 / n for n, e in enumerate(char.eps_seq, start=1)) and all(
        e <= 1.0 / n for n, e in enumerate(reg.eps_seq, start=1)
    )
    ok = (
        char.verdict == "characteristic"
        and kernel_err < TOL_C9_KERNEL
        and reg.verdict == "regular_or_continuous"
        and reg.limit < TOL_C9_REGULAR
        and index_ok
    )
    criterion(
        9,
        ok,
        f"lambda=1.25 {char.verdict}, limit kernel error {kernel_err:.1e} < {TOL_C9_KERNEL:g}; "
        f"lambda=2.0 {reg.verdict}, limit {reg.limit:.1e} < {TOL_C9_REGULAR:g}; eps_n <= 1/n at every step={index_ok}",
    )


# 10 -------------------------------------------------------------------------


def test_criterion_10_interval_projections(criterion, frh):
    rep = interval_convergence_study(frh, TruncationLadder.linear(8), SpectralWindow(0.5, 1.0), [2, 3, 4, 5], reference_n=6, tol=TOL_C10_FINAL)
    bound = rep.constants["projection_bound"]
    sups = rep.diagnostics["sup_projection"]
    bound_ok = all(s <= bound for s in sups)
    v = rep.verdict
    finals = (v["err_kernel"]["final"], v["err_t"]["final"])
    decreasing = v["err_kernel"]["decreasing"] and v["err_t"]["decreasing"]
    ok = bound_ok and decreasing and max(finals) < TOL_C10_FINAL
    criterion(
        10,
        ok,
        f"sup|E_n| {max(sups):.3f} <= M^2||tau||^2 = {bound:.3f} for all n={bound_ok}; decreasing={decreasing}, "
        f"finals {finals[0]:.1e}, {finals[1]:.1e} < {TOL_C10_FINAL:g}",
    )


# 11 -------------------------------------------------------------------------


def test_criterion_11_fredholm_alternative(criterion, frh, gauss):
    ladder = TruncationLadder.linear(8)
    op_h = _op(frh, ladder, 6, "two_sided")
    raised = 0
    zeros = characteristic_values(op_h, (-5, 5, -1, 1), 41).points
    for z in zeros:
        for route in ("direct_linear", "resolvent_formula"):
            try:
                solve_second_kind(op_h, z, "gauss", route)
            except CharacteristicValueError:
                raised += 1
    op = _op(gauss, ladder, 5)
    f0 = Profile("odd_gauss", width=0.7)
    recovery = 0.0
    for lam in (0.5, -1.5, 0.3 + 0.8j):
        g, _ = manufactured_rhs(op, lam, f0)
        for route in ("direct_linear", "resolvent_formula"):
            rep = solve_second_kind(op, lam, g, route)
            recovery = max(recovery, float(np.max(np.abs(rep.f - f0(op.nodes)))))
    r414 = solvability_residuals(fredholm_resolvent(op, 0.5), op, 0.5, "gauss").commutation
    expected = 2 * len(zeros)
    ok = len(zeros) == 2 and raised == expected and recovery < TOL_C11_RECOVERY and r414 < TOL_C11_R414
    criterion(
        11,
        ok,
        f"solver raised at {raised}/{expected} determinant-zero solves; manufactured recovery {recovery:.1e} < "
        f"{TOL_C11_RECOVERY:g}; solvability commutation residual {r414:.1e} < {TOL_C11_R414:g}",
    )


# 12 -------------------------------------------------------------------------


def test_criterion_12_reproducibility(criterion, tmp_path):
    configs = {
        "converge": {
            "command": "converge",
            "kernel": {"id": "gauss_bump"},
            "params": {"study": "moebius", "lambdas": [0.2, 0.3], "n_list": [1, 2, 3], "reference_n": 4, "beta": {"rule": "inverse_square"}},
        },
        "determinant": {
            "command": "determinant",
            "kernel": {"id": "finite_rank_hermitian", "params": {"mu": [0.8, 0.3]}},
            "params": {"lambda": 0.7, "scan": {"re": [0.0, 4.0], "count": 41}, "characteristic": {"grid": 21}},
        },
        "classify": {
            "command": "classify",
            "kernel": {"id": "finite_rank_hermitian", "params": {"mu": [0.8, 0.3]}},
            "params": {"lambda": 1.25},
        },
    }
    identical = True
    checked = 0
    for name, cfg in configs.items():
        outputs = []
        for _ in range(2):
            cfg = dict(cfg, output={"dir": str(tmp_path / "out"), "stem": name, "formats": ["json", "csv"]})
            path = tmp_path / f"{name}.yaml"
            path.write_text(yaml.safe_dump(cfg))
            assert cli.main([str(path)]) == 0
            files = {p.suffix: p.read_bytes() for p in (tmp_path / "out").glob(f"{name}.*")}
            outputs.append(files)
        identical = identical and outputs[0] == outputs[1]
        checked += len(outputs[0])
        json.loads(outputs[0][".json"])
    criterion(12, identical, f"{checked} CSV/JSON artifacts byte-identical across repeated runs={identical}")
