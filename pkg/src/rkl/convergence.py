"""Convergence studies of subkernel resolvents against a high-resolution reference.

"Sup over the line" is realised as a max over the nodes and panel midpoints of
a study rule on ``[-tau_ref, tau_ref]``; L2 norms in the free variable use the
reference rule (twice the panels per unit).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .errors import CharacteristicValueError
from .fredholm import characteristic_values, fredholm_resolvent, is_characteristic
from .kernels import KernelSpec, SubkernelSpec, TruncationLadder, indicator
from .parallel import ordered_map
from .quadrature import DiscreteOperator, build_rule, discretize, spectral_norm

ERROR_FLOOR = 1e-12
BOUND_SLACK = 1e-9
SCAFFOLD_SLACK = 1e-12
STUDY_TOL = 1e-5

CSV_COLUMNS = ("n", "lambda_re", "lambda_im", "err_kernel", "err_t", "err_tprime", "bound_4_3", "bound_4_6", "flag")


def _c(z) -> dict:
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def _z(d) -> complex:
    return complex(d["re"], d["im"])


@dataclass
class ConvergenceRow:
    """Errors and bound data for one ``(n, lambda)`` pair."""

    n: int
    lam: complex
    lam_n: complex
    err_kernel: float = math.nan
    err_t: float = math.nan
    err_tprime: float = math.nan
    err_kernel_tilde: float = math.nan
    err_t_tilde: float = math.nan
    err_tprime_tilde: float = math.nan
    carleman_sup: float = math.nan
    bound_4_3: float = math.nan
    kernel_sup: float = math.nan
    bound_4_6: float = math.nan
    resolvent_norm: float = math.nan
    scaffold_ok: bool | None = None
    flag: str = "ok"
    probes: list = field(default_factory=list)

    def csv_row(self) -> list:
        return [
            self.n,
            self.lam.real,
            self.lam.imag,
            self.err_kernel,
            self.err_t,
            self.err_tprime,
            self.bound_4_3,
            self.bound_4_6,
            self.flag,
        ]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lam"] = _c(self.lam)
        d["lam_n"] = _c(self.lam_n)
        d["probes"] = [_c(p) for p in self.probes]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ConvergenceRow":
        d = dict(d)
        d["lam"] = _z(d["lam"])
        d["lam_n"] = _z(d["lam_n"])
        d["probes"] = [_z(p) for p in d.get("probes", [])]
        return cls(**d)


@dataclass
class ConvergenceReport:
    study: str
    lambdas: list
    n_list: list
    rows: list
    reference: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    constants: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    verdict: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    def series(self, name: str) -> list[float]:
        """Per-n max over lambda of a row attribute (``summary`` order)."""
        return list(self.summary.get(name, []))

    def csv_rows(self) -> list[list]:
        return [r.csv_row() for r in self.rows]

    def to_dict(self) -> dict:
        return {
            "study": self.study,
            "lambdas": [_c(z) for z in self.lambdas],
            "n_list": list(self.n_list),
            "rows": [r.to_dict() for r in self.rows],
            "reference": self.reference,
            "grid": self.grid,
            "constants": self.constants,
            "summary": self.summary,
            "verdict": self.verdict,
            "diagnostics": self.diagnostics,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ConvergenceReport":
        return cls(
            d["study"],
            [_z(z) for z in d["lambdas"]],
            list(d["n_list"]),
            [ConvergenceRow.from_dict(r) for r in d["rows"]],
            d.get("reference", {}),
            d.get("grid", {}),
            d.get("constants", {}),
            d.get("summary", {}),
            d.get("verdict", {}),
            d.get("diagnostics", {}),
        )


def is_decreasing(seq: Sequence[float], floor: float = ERROR_FLOOR) -> bool:
    """Strictly decreasing, except that entries at or below ``floor`` count as settled."""
    vals = [float(v) for v in seq]
    if any(math.isnan(v) for v in vals):
        return False
    for a, b in zip(vals, vals[1:]):
        if b <= floor:
            continue
        if not b < a:
            return False
    return True


# ---------------------------------------------------------------------------
# shared study context


@dataclass(frozen=True, eq=False)
class StudyContext:
    spec: KernelSpec
    ladder: TruncationLadder
    reference_n: int
    panels_per_unit: int
    points_per_panel: int
    points: np.ndarray
    ref_nodes: np.ndarray
    ref_weights: np.ndarray
    tau_norms: np.ndarray
    taup_norms: np.ndarray
    kernel_sup: float

    @classmethod
    def build(cls, spec, ladder, reference_n, panels_per_unit=1, points_per_panel=10) -> "StudyContext":
        study_rule = build_rule(ladder, reference_n, panels_per_unit, points_per_panel, spec)
        ref_rule = build_rule(ladder, reference_n, 2 * panels_per_unit, points_per_panel, spec)
        pts = study_rule.test_points
        x, w = ref_rule.nodes, ref_rule.weights
        tau = np.sqrt(np.sum(w[None, :] * np.abs(spec.matrix(pts, x)) ** 2, axis=1))
        taup = np.sqrt(np.sum(w[:, None] * np.abs(spec.matrix(x, pts)) ** 2, axis=0))
        sup = float(np.max(np.abs(spec.matrix(pts, pts))))
        return cls(spec, ladder, reference_n, panels_per_unit, points_per_panel, pts, x, w, tau, taup, sup)

    @property
    def tau_c(self) -> float:
        return float(np.max(self.tau_norms))

    @property
    def taup_c(self) -> float:
        return float(np.max(self.taup_norms))

    def rule(self, n: int, refine: int = 1):
        return build_rule(self.ladder, n, refine * self.panels_per_unit, self.points_per_panel, self.spec)

    def operator(self, n: int, kind: str = "one_sided", refine: int = 1) -> DiscreteOperator:
        return discretize(SubkernelSpec(self.spec, self.ladder, n, kind), self.rule(n, refine))

    def reference_operator(self) -> DiscreteOperator:
        return self.operator(self.reference_n, "one_sided", refine=2)

    def sample(self, ev) -> dict:
        """Resolvent samples on the test grid and against the reference nodes."""
        pts, x = self.points, self.ref_nodes
        return {
            "ss": ev.matrix(pts, pts),
            "sx": ev.matrix(pts, x),
            "xs": ev.matrix(x, pts),
        }

    def l2_rows(self, sx: np.ndarray) -> np.ndarray:
        return np.sqrt(np.sum(self.ref_weights[None, :] * np.abs(sx) ** 2, axis=1))

    def l2_cols(self, xs: np.ndarray) -> np.ndarray:
        return np.sqrt(np.sum(self.ref_weights[:, None] * np.abs(xs) ** 2, axis=0))

    def resolvent_norm_full(self, n: int, lam: complex) -> float:
        """``||(I - lam T_n)^{-1}||`` for the truncated operator acting on the reference interval."""
        spec = SubkernelSpec(self.spec, self.ladder, n, "one_sided")
        op = discretize(spec, build_rule(self.ladder, self.reference_n, 2 * self.panels_per_unit, self.points_per_panel, self.spec))
        inv = np.linalg.inv(np.eye(op.size) - complex(lam) * op.weighted)
        return spectral_norm(inv)

    def describe(self) -> dict:
        return {
            "reference_n": self.reference_n,
            "tau_ref": self.ladder.tau(self.reference_n),
            "test_points": int(self.points.size),
            "reference_nodes": int(self.ref_nodes.size),
            "panels_per_unit": self.panels_per_unit,
            "points_per_panel": self.points_per_panel,
        }


def _default_reference(ladder: TruncationLadder, n_list: Sequence[int], reference_n: int | None) -> int:
    if reference_n is not None:
        ladder.tau(reference_n)
        return reference_n
    top = max(n_list) if n_list else 1
    return min(top + 1, ladder.size)


def _resolve_beta(beta_seq, n: int) -> complex:
    if beta_seq is None:
        return 0j
    if callable(beta_seq):
        return complex(beta_seq(n))
    if isinstance(beta_seq, dict):
        return complex(beta_seq.get(n, 0.0))
    return complex(beta_seq[n - 1])


def moebius_parameter(lam: complex, beta: complex) -> complex:
    """``lam_n(lam) = lam / (1 - beta lam)``."""
    denom = 1.0 - beta * lam
    if denom == 0:
        raise ZeroDivisionError("1 - beta * lambda vanishes")
    return lam / denom


def _run_pair(ctx: StudyContext, n: int, lam: complex, lam_n: complex, ref: dict, probes, with_norm: bool) -> ConvergenceRow:
    row = ConvergenceRow(n, lam, lam_n)
    op = ctx.operator(n, "one_sided")
    op_tilde = ctx.operator(n, "two_sided")
    try:
        ev = fredholm_resolvent(op, lam_n)
        ev_tilde = fredholm_resolvent(op_tilde, lam_n)
    except CharacteristicValueError:
        row.flag = "characteristic"
        return row
    cur = ctx.sample(ev)
    til = ctx.sample(ev_tilde)
    pts, x = ctx.points, ctx.ref_nodes
    chi_pts = indicator(ctx.ladder.tau(n), pts)
    chi_x = indicator(ctx.ladder.tau(n), x)

    d_ss = cur["ss"] - ref["ss"]
    d_sx = cur["sx"] - ref["sx"]
    d_xs = cur["xs"] - ref["xs"]
    row.err_kernel = float(np.max(np.abs(d_ss)))
    row.err_t = float(np.max(ctx.l2_rows(d_sx)))
    row.err_tprime = float(np.max(ctx.l2_cols(d_xs)))

    dt_ss = til["ss"] - ref["ss"]
    dt_sx = til["sx"] - ref["sx"]
    dt_xs = til["xs"] - ref["xs"]
    row.err_kernel_tilde = float(np.max(np.abs(dt_ss)))
    row.err_t_tilde = float(np.max(ctx.l2_rows(dt_sx)))
    row.err_tprime_tilde = float(np.max(ctx.l2_cols(dt_xs)))

    # scaffolding inequalities relating tilded and one-sided errors
    lhs1 = np.abs(dt_ss)
    rhs1 = chi_pts[None, :] * np.abs(d_ss) + (1 - chi_pts[None, :]) * np.abs(ref["ss"])
    lhs2 = ctx.l2_rows(dt_sx)
    rhs2 = ctx.l2_rows(chi_x[None, :] * d_sx) + ctx.l2_rows((1 - chi_x[None, :]) * ref["sx"])
    lhs3 = ctx.l2_cols(dt_xs)
    rhs3 = chi_pts * ctx.l2_cols(d_xs) + (1 - chi_pts) * ctx.l2_cols(ref["xs"])
    row.scaffold_ok = bool(
        np.all(lhs1 <= rhs1 + SCAFFOLD_SLACK)
        and np.all(lhs2 <= rhs2 + SCAFFOLD_SLACK)
        and np.all(lhs3 <= rhs3 + SCAFFOLD_SLACK)
    )

    row.carleman_sup = float(np.max(ctx.l2_rows(cur["sx"])))
    row.kernel_sup = float(np.max(np.abs(cur["ss"])))
    if with_norm:
        row.resolvent_norm = ctx.resolvent_norm_full(n, lam_n)
    if probes:
        row.probes = [complex(ev(p[0], p[1])) for p in probes]
    return row


def _finish_bounds(ctx: StudyContext, rows: list[ConvergenceRow]) -> dict:
    good = [r for r in rows if r.flag != "characteristic"]
    c_const = max((abs(r.lam_n) for r in good), default=0.0)
    m_const = max((r.resolvent_norm for r in good if not math.isnan(r.resolvent_norm)), default=math.nan)
    b43 = m_const * ctx.tau_c
    b46 = 3 * c_const * m_const * ctx.tau_c * ctx.taup_c + ctx.kernel_sup
    ok43 = ok46 = True
    for r in good:
        r.bound_4_3 = b43
        r.bound_4_6 = b46
        flags = []
        if not r.carleman_sup <= b43 * (1 + BOUND_SLACK) + 1e-15:
            flags.append("bound_4_3_violated")
            ok43 = False
        if not r.kernel_sup <= b46 * (1 + BOUND_SLACK) + 1e-15:
            flags.append("bound_4_6_violated")
            ok46 = False
        if r.scaffold_ok is False:
            flags.append("scaffold_violated")
        r.flag = ";".join(flags) if flags else "ok"
    return {
        "C": c_const,
        "M": m_const,
        "tau_C": ctx.tau_c,
        "tau_prime_C": ctx.taup_c,
        "kernel_C": ctx.kernel_sup,
        "bound_4_3": b43,
        "bound_4_6": b46,
        "bound_4_3_holds": ok43,
        "bound_4_6_holds": ok46,
        "kernel_margin": b46 - max((r.kernel_sup for r in good), default=0.0),
    }


def _summaries(rows: list[ConvergenceRow], n_list) -> dict:
    names = ("err_kernel", "err_t", "err_tprime", "err_kernel_tilde", "err_t_tilde", "err_tprime_tilde")
    out = {name: [] for name in names}
    for n in n_list:
        sel = [r for r in rows if r.n == n and r.flag != "characteristic"]
        for name in names:
            vals = [getattr(r, name) for r in sel]
            out[name].append(max(vals) if vals else math.nan)
    return out


def _verdict(summary: dict, tol: float, floor: float, scaffold: bool) -> dict:
    out = {"tol": tol, "floor": floor}
    passed = True
    for name in ("err_kernel", "err_t", "err_tprime"):
        seq = summary.get(name, [])
        dec = is_decreasing(seq, floor)
        tail = is_decreasing(seq[-3:], floor)
        final = seq[-1] if seq else math.nan
        below = bool(final < tol) if seq else False
        out[name] = {"decreasing": dec, "tail_decreasing": tail, "final": final, "below_tol": below}
        passed = passed and tail and below
    out["scaffold_ok"] = scaffold
    out["passed"] = bool(passed and scaffold)
    return out


# ---------------------------------------------------------------------------
# public studies


def moebius_uniform_study(
    spec: KernelSpec,
    ladder: TruncationLadder,
    beta_seq,
    lambdas: Sequence[complex],
    n_list: Sequence[int],
    reference_n: int | None = None,
    panels_per_unit: int = 1,
    points_per_panel: int = 10,
    tol: float = STUDY_TOL,
    probes=((0.0, 0.0),),
    study: str = "moebius",
) -> ConvergenceReport:
    """Sup-norm errors of ``T_n|lam_n(lam)`` against ``T|lam`` for ``lam`` in a compact sample.

    ``beta_seq`` is a callable ``n -> beta_n``, a mapping, a sequence indexed
    from ``n = 1`` or ``None`` (all zero).
    """
    n_list = [int(n) for n in n_list]
    lambdas = [complex(z) for z in lambdas]
    n_ref = _default_reference(ladder, n_list, reference_n)
    betas = [_resolve_beta(beta_seq, n) for n in n_list]
    if len(betas) >= 2 and any(b != 0 for b in betas) and not abs(betas[-1]) < abs(betas[0]):
        warnings.warn("beta sequence does not appear to tend to zero on the given prefix", RuntimeWarning)

    ctx = StudyContext.build(spec, ladder, n_ref, panels_per_unit, points_per_panel)
    op_ref = ctx.reference_operator()
    refs = {}
    for lam in lambdas:
        refs[lam] = ctx.sample(fredholm_resolvent(op_ref, lam))

    tasks = []
    for n, beta in zip(n_list, betas):
        for lam in lambdas:
            tasks.append((n, lam, beta))

    def run(task):
        n, lam, beta = task
        try:
            lam_n = moebius_parameter(lam, beta)
        except ZeroDivisionError:
            return ConvergenceRow(n, lam, complex(math.inf, 0), flag="pole")
        return _run_pair(ctx, n, lam, lam_n, refs[lam], probes, True)

    rows = ordered_map(run, tasks)
    constants = _finish_bounds(ctx, rows)
    summary = _summaries(rows, n_list)
    scaffold = all(r.scaffold_ok is not False for r in rows)
    verdict = _verdict(summary, tol, ERROR_FLOOR, scaffold)
    verdict["bounds_hold"] = constants["bound_4_3_holds"] and constants["bound_4_6_holds"]
    return ConvergenceReport(
        study,
        lambdas,
        n_list,
        rows,
        {"n": n_ref, "rule": op_ref.rule.meta(), "betas": [_c(b) for b in betas]},
        ctx.describe(),
        constants,
        summary,
        verdict,
    )


def resolvent_convergence_study(
    spec: KernelSpec,
    ladder: TruncationLadder,
    lam: complex,
    n_list: Sequence[int],
    reference_n: int | None = None,
    panels_per_unit: int = 1,
    points_per_panel: int = 10,
    tol: float = STUDY_TOL,
    probes=((0.0, 0.0),),
) -> ConvergenceReport:
    """Errors of ``T_n|lam`` (and the tilded variant) against the reference ``T|lam``."""
    return moebius_uniform_study(
        spec, ladder, None, [lam], n_list, reference_n, panels_per_unit, points_per_panel, tol, probes, "resolvent"
    )


def compactness_diagnostics(
    spec: KernelSpec,
    ladder: TruncationLadder,
    lambda_seq,
    n_list: Sequence[int],
    reference_n: int | None = None,
    panels_per_unit: int = 1,
    points_per_panel: int = 10,
    probes=((0.0, 0.0),),
    cauchy_tol: float = 1e-6,
) -> ConvergenceReport:
    """Measured constants and the two uniform bounds along a parameter sequence.

    ``lambda_seq`` is a callable ``n -> lam_n`` or a sequence aligned with
    ``n_list``. Indices where ``lam_n`` is characteristic for ``T_n`` are
    excluded and recorded.
    """
    n_list = [int(n) for n in n_list]
    if callable(lambda_seq):
        lams = [complex(lambda_seq(n)) for n in n_list]
    else:
        lams = [complex(z) for z in lambda_seq]
        if len(lams) != len(n_list):
            raise ValueError("lambda_seq must align with n_list")
    n_ref = _default_reference(ladder, n_list, reference_n)
    ctx = StudyContext.build(spec, ladder, n_ref, panels_per_unit, points_per_panel)

    def run(task):
        n, lam_n = task
        row = ConvergenceRow(n, lam_n, lam_n)
        op = ctx.operator(n, "one_sided")
        try:
            ev = fredholm_resolvent(op, lam_n)
        except CharacteristicValueError:
            row.flag = "characteristic"
            return row
        sx = ev.matrix(ctx.points, ctx.ref_nodes)
        row.carleman_sup = float(np.max(ctx.l2_rows(sx)))
        row.kernel_sup = float(np.max(np.abs(ev.matrix(ctx.points, ctx.points))))
        row.resolvent_norm = ctx.resolvent_norm_full(n, lam_n)
        row.probes = [complex(ev(p[0], p[1])) for p in probes]
        return row

    rows = ordered_map(run, list(zip(n_list, lams)))
    constants = _finish_bounds(ctx, rows)
    good = [r for r in rows if r.flag != "characteristic"]
    spreads = []
    for k in range(len(probes)):
        vals = [r.probes[k] for r in good]
        spreads.append(max((abs(a - b) for a in vals for b in vals), default=0.0))
    diagnostics = {
        "excluded": [r.n for r in rows if r.flag == "characteristic"],
        "probe_points": [list(p) for p in probes],
        "probe_values": [[_c(v) for v in r.probes] for r in good],
        "cauchy_spread": spreads,
        "cauchy_tol": cauchy_tol,
        "cauchy_ok": bool(all(s < cauchy_tol for s in spreads)),
    }
    verdict = {
        "bounds_hold": constants["bound_4_3_holds"] and constants["bound_4_6_holds"],
        "cauchy_ok": diagnostics["cauchy_ok"],
    }
    return ConvergenceReport(
        "compactness",
        lams,
        n_list,
        rows,
        {"n": n_ref},
        ctx.describe(),
        constants,
        {},
        verdict,
        diagnostics,
    )


@dataclass
class TailProductReport:
    n_list: list
    m: int
    one_sided: list
    two_sided: list
    subkernel_norms: list
    rule: dict
    decreasing: bool
    floor: float = ERROR_FLOOR

    def to_dict(self) -> dict:
        return asdict(self)


def tail_product_norms(
    spec: KernelSpec,
    ladder: TruncationLadder,
    n_list: Sequence[int],
    m: int = 1,
    reference_n: int | None = None,
    panels_per_unit: int = 1,
    points_per_panel: int = 10,
) -> TailProductReport:
    """``||(T - T_n) T_n^m||`` and ``||(T - T~_n) T~_n^m||`` on a common fine rule."""
    if m < 1:
        raise ValueError("m must be >= 1")
    n_list = [int(n) for n in n_list]
    n_ref = _default_reference(ladder, n_list, reference_n)
    rule = build_rule(ladder, n_ref, panels_per_unit, points_per_panel, spec)
    sw = rule.sqrt_weights
    a = sw[:, None] * spec.matrix(rule.nodes, rule.nodes) * sw[None, :]

    def run(n):
        chi = indicator(ladder.tau(n), rule.nodes)
        a_n = chi[:, None] * a
        a_t = a_n * chi[None, :]
        p1 = np.linalg.matrix_power(a_n, m)
        p2 = np.linalg.matrix_power(a_t, m)
        return (
            spectral_norm((a - a_n) @ p1),
            spectral_norm((a - a_t) @ p2),
            spectral_norm(a_n),
        )

    res = ordered_map(run, n_list)
    one = [r[0] for r in res]
    two = [r[1] for r in res]
    norms = [r[2] for r in res]
    dec = is_decreasing(one) and is_decreasing(two)
    return TailProductReport(n_list, m, one, two, norms, rule.meta(), dec)


@dataclass
class RegionProbe:
    re: list
    im: list
    norms: list  # [im index][re index], inf at characteristic hits
    bounded: list
    regular: list
    threshold: float
    probe_set: list
    characteristic: list
    compared: list
    consistent: bool
    tail_vanishing: bool | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["characteristic"] = [_c(z) for z in self.characteristic]
        return d

    @property
    def classes(self) -> set[bool]:
        return {b for row in self.bounded for b in row}


def boundedness_region_probe(
    spec: KernelSpec,
    ladder: TruncationLadder,
    box=(-2.0, 4.0, -1.0, 1.0),
    grid=(25, 5),
    n_probe_set: Sequence[int] = (2, 3, 4),
    threshold: float = 100.0,
    reference_n: int | None = None,
    panels_per_unit: int = 1,
    points_per_panel: int = 10,
    tail_check: bool = True,
) -> RegionProbe:
    """Map of ``max_n ||T_n|lam||`` over a rectangle of parameters.

    A point is bounded when the max stays below ``threshold``. The regular set
    comes from the Fredholm determinant of the reference truncation; points
    within 1.5 grid cells of a detected characteristic value are left out of
    the bounded/regular comparison.
    """
    re_lo, re_hi, im_lo, im_hi = (float(v) for v in box)
    nx, ny = (grid, grid) if np.isscalar(grid) else tuple(int(g) for g in grid)
    xs = np.linspace(re_lo, re_hi, nx)
    ys = np.linspace(im_lo, im_hi, ny) if ny > 1 else np.array([0.5 * (im_lo + im_hi)])
    probe = [int(n) for n in n_probe_set]
    n_ref = _default_reference(ladder, probe, reference_n)
    rule = build_rule(ladder, n_ref, panels_per_unit, points_per_panel, spec)
    ops = [discretize(SubkernelSpec(spec, ladder, n, "one_sided"), rule) for n in probe]
    op_ref = discretize(SubkernelSpec(spec, ladder, n_ref, "one_sided"), rule)

    def norm_at(lam):
        best = 0.0
        for op in ops:
            if lam != 0 and is_characteristic(op, lam)[0]:
                return math.inf
            a = op.weighted
            if not np.any(a):
                continue
            val = spectral_norm(np.linalg.solve(np.eye(op.size) - lam * a, a))
            best = max(best, val)
        return best

    lams = [complex(x, y) for y in ys for x in xs]
    flat = ordered_map(norm_at, lams)
    norms = [flat[j * nx : (j + 1) * nx] for j in range(ny)]
    bounded = [[bool(v <= threshold) for v in row] for row in norms]
    regular = [[not (lam != 0 and is_characteristic(op_ref, lam)[0]) for lam in lams[j * nx : (j + 1) * nx]] for j in range(ny)]
    chars = characteristic_values(op_ref, (re_lo, re_hi, im_lo, im_hi), (max(nx, 11), max(ny, 3))).points
    dx = (re_hi - re_lo) / max(nx - 1, 1)
    dy = (im_hi - im_lo) / max(ny - 1, 1) if ny > 1 else dx
    radius = 1.5 * max(dx, dy)
    compared = [[bool(all(abs(complex(x, y) - z) > radius for z in chars)) for x in xs] for y in ys]
    tail = None
    if tail_check:
        tp = tail_product_norms(spec, ladder, probe, 1, n_ref, panels_per_unit, points_per_panel)
        tail = bool(tp.one_sided[-1] < 1e-6)
    consistent = all(
        bounded[j][i] == regular[j][i] for j in range(ny) for i in range(nx) if compared[j][i]
    )
    return RegionProbe(
        list(map(float, xs)),
        list(map(float, ys)),
        norms,
        bounded,
        regular,
        float(threshold),
        probe,
        [complex(z) for z in chars],
        compared,
        bool(consistent),
        tail,
    )
