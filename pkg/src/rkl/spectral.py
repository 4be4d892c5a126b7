"""Spectral projection kernels of Hermitian kernels and point classification."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .convergence import ConvergenceReport, ConvergenceRow, StudyContext, is_decreasing
from .fredholm import fredholm_resolvent, is_characteristic
from .kernels import KernelSpec, SubkernelSpec, TruncationLadder
from .quadrature import DiscreteOperator, build_rule, discretize

BOUNDARY_TOL = 1e-12
CLASSIFY_THRESHOLD = 1e-3


@dataclass(frozen=True)
class SpectralWindow:
    """Open interval ``(a, b)`` of eigenvalues whose closure avoids 0."""

    a: float
    b: float

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError("window needs a < b")
        if self.a <= 0 <= self.b:
            raise ValueError("window closure must exclude 0")

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, float)
        return (x > self.a) & (x < self.b)

    @property
    def inverse_sup(self) -> float:
        """``sup_{mu in window} 1 / |mu|``."""
        return 1.0 / min(abs(self.a), abs(self.b))


@dataclass(frozen=True, eq=False)
class SpectralProjectionKernel:
    """Projection kernel ``E(s, t) = sum_k psi_k(s) conj(psi_k(t))`` over selected eigenpairs.

    ``psi`` holds node samples of the orthonormal eigenfunctions; off-grid
    values come from ``psi_k(s) = (1 / mu_k) sum_j w_j S(s, x_j) psi_k(x_j)``.
    """

    op: DiscreteOperator
    eigenvalues: np.ndarray
    psi: np.ndarray
    window: SpectralWindow | None = None
    point: float | None = None
    n: int = 0
    method: str = "eigen"

    @property
    def rank(self) -> int:
        return int(self.eigenvalues.size)

    def psi_at(self, s) -> np.ndarray:
        s = np.atleast_1d(np.asarray(s, float))
        if self.rank == 0:
            return np.zeros((s.size, 0), dtype=complex)
        left = self.op.source.matrix(s, self.op.nodes) * self.op.weights[None, :]
        return (left @ self.psi) / self.eigenvalues[None, :]

    def e_samples(self, s, x=None) -> np.ndarray:
        """``e(s_i)(x_j) = sum_k (1/mu_k) <t(s_i), psi_k> psi_k(x_j)``."""
        s = np.atleast_1d(np.asarray(s, float))
        x_nodes = self.op.nodes
        if self.rank == 0:
            n_x = x_nodes.size if x is None else np.atleast_1d(x).size
            return np.zeros((s.size, n_x), dtype=complex)
        w = self.op.weights
        t_s = np.conj(self.op.source.matrix(s, x_nodes))  # Carleman function t(s)
        coeff = (t_s * w[None, :]) @ np.conj(self.psi) / self.eigenvalues[None, :]
        basis = self.psi if x is None else self.psi_at(x)
        return coeff @ basis.T

    def matrix(self, s, t) -> np.ndarray:
        """``E(s, t) = <e(t), e(s)>`` computed on the rule nodes."""
        es = self.e_samples(s)
        et = self.e_samples(t)
        return (np.conj(es) * self.op.weights[None, :]) @ et.T

    def __call__(self, s, t):
        out = self.matrix(s, t)
        return complex(out[0, 0]) if np.ndim(s) == 0 and np.ndim(t) == 0 else out

    def trace(self) -> float:
        """``sum_j w_j E(x_j, x_j)``, the rank of the projection."""
        e = self.matrix(self.op.nodes, self.op.nodes)
        return float(np.real(np.sum(self.op.weights * np.diag(e))))

    def idempotency_defect(self, points) -> float:
        pts = np.asarray(points, float)
        x, w = self.op.nodes, self.op.weights
        e_sx = self.matrix(pts, x)
        e_xt = self.matrix(x, pts)
        return float(np.max(np.abs((e_sx * w[None, :]) @ e_xt - self.matrix(pts, pts)))) if pts.size else 0.0

    def hermitian_defect(self, points) -> float:
        e = self.matrix(points, points)
        return float(np.max(np.abs(e - e.conj().T))) if e.size else 0.0


def interval_projection(op: DiscreteOperator, window: SpectralWindow) -> SpectralProjectionKernel:
    """Projection kernel for the eigenvalues of a Hermitian operator inside ``window``."""
    if not op.hermitian:
        raise ValueError("interval projection needs a Hermitian operator")
    vals, vecs = np.linalg.eigh(op.weighted)
    near = np.minimum(np.abs(vals - window.a), np.abs(vals - window.b))
    if np.any(near < BOUNDARY_TOL):
        warnings.warn("an eigenvalue lies on the window boundary", RuntimeWarning)
    sel = window.contains(vals)
    psi = vecs[:, sel] / op.rule.sqrt_weights[:, None]
    n = getattr(op.source, "n", 0)
    return SpectralProjectionKernel(op, vals[sel].astype(float), psi.astype(complex), window, None, n)


# ---------------------------------------------------------------------------
# point projections


def _validate_mu(mu_seq) -> np.ndarray:
    mu = np.asarray(mu_seq, dtype=float)
    if mu.ndim != 1 or mu.size < 2:
        raise ValueError("mu sequence needs at least two entries")
    if np.any(mu <= 0) or np.any(np.diff(mu) >= 0):
        raise ValueError("mu sequence must be positive and strictly decreasing")
    return mu


def default_grid(ladder: TruncationLadder, count: int = 121) -> np.ndarray:
    """Cell-centred points on ``[-tau_k, tau_k]`` with ``k = min(3, size)``."""
    tau = ladder.tau(min(3, ladder.size))
    h = 2 * tau / count
    return -tau + h * (np.arange(count) + 0.5)


def tail_functional(spec: KernelSpec, ladder: TruncationLadder, m: int, ev, outer_nodes, outer_weights) -> float:
    """``sup_{s in I_m} sqrt(int_{outside I_m} |int_{I_m} T(t,x) conj(R(s,x)) dx|^2 dt)``.

    ``R`` is the resolvent of the two-sided truncation on its own rule; the
    outer integral uses the nodes of a wider rule lying outside ``I_m``.
    """
    tau = ladder.tau(m)
    op = ev.op
    x, w = op.nodes, op.weights
    mask = np.abs(outer_nodes) >= tau
    t_out, w_out = outer_nodes[mask], outer_weights[mask]
    if t_out.size == 0:
        return 0.0
    r = ev.node_matrix  # [s, x], s and x nodes of I_m
    inner = (spec.matrix(t_out, x) * w[None, :]) @ np.conj(r).T  # [t, s]
    vals = np.sqrt(np.sum(w_out[:, None] * np.abs(inner) ** 2, axis=0))
    return float(np.max(vals))


@dataclass
class PointProjectionResult:
    lam: float
    mu: list
    m_seq: list
    eps_seq: list
    sup_values: list  # mu_n * sup |T~_{m_n|lam + i mu_n}| on the grid
    distances: list  # sup-grid distance between consecutive kernels
    grid: np.ndarray = field(repr=False)
    kernels: list = field(repr=False, default_factory=list)
    partial: bool = False

    @property
    def final(self) -> np.ndarray:
        return self.kernels[-1]

    def extrapolated_kernel(self) -> np.ndarray:
        """Linear extrapolation of the last two kernels to ``mu = 0``."""
        if len(self.kernels) < 2:
            return self.final
        m0, m1 = self.mu[len(self.kernels) - 2], self.mu[len(self.kernels) - 1]
        return (m0 * self.kernels[-1] - m1 * self.kernels[-2]) / (m0 - m1)

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "mu": list(self.mu),
            "m_seq": list(self.m_seq),
            "eps_seq": list(self.eps_seq),
            "sup_values": list(self.sup_values),
            "distances": list(self.distances),
            "partial": self.partial,
            "grid_size": int(self.grid.size),
        }


def point_projection_limit(
    spec: KernelSpec,
    ladder: TruncationLadder,
    lam: float,
    mu_seq: Sequence[float],
    panels_per_unit: int = 1,
    points_per_panel: int = 10,
    grid=None,
) -> PointProjectionResult:
    """Kernels ``-i mu_n T~_{m_n | lam + i mu_n}`` approaching the point projection at ``1/lam``.

    ``m_n`` is the smallest ladder index above ``m_{n-1}`` whose tail
    functional is at most ``1/n``.
    """
    if not spec.hermitian:
        raise ValueError("point projections need a Hermitian kernel")
    lam = float(lam)
    if lam == 0 or not math.isfinite(lam):
        raise ValueError("lambda must be real and nonzero")
    mu = _validate_mu(mu_seq)
    pts = default_grid(ladder) if grid is None else np.asarray(grid, float)
    outer = build_rule(ladder, ladder.size, panels_per_unit, points_per_panel, spec)

    result = PointProjectionResult(lam, [float(v) for v in mu], [], [], [], [], pts)
    m_prev = 0
    for n, mu_n in enumerate(mu, start=1):
        zeta = complex(lam, mu_n)
        accepted = None
        for m in range(m_prev + 1, ladder.size + 1):
            op = discretize(
                SubkernelSpec(spec, ladder, m, "two_sided"),
                build_rule(ladder, m, panels_per_unit, points_per_panel, spec),
            )
            ev = fredholm_resolvent(op, zeta)
            eps = tail_functional(spec, ladder, m, ev, outer.nodes, outer.weights)
            if eps <= 1.0 / n:
                accepted = (m, eps, ev)
                break
        if accepted is None:
            result.partial = True
            break
        m, eps, ev = accepted
        kernel = -1j * mu_n * ev.matrix(pts, pts)
        result.m_seq.append(m)
        result.eps_seq.append(eps)
        result.sup_values.append(float(np.max(np.abs(kernel))))
        if result.kernels:
            result.distances.append(float(np.max(np.abs(kernel - result.kernels[-1]))))
        result.kernels.append(kernel)
        m_prev = m
    return result


@dataclass
class ClassificationResult:
    verdict: str
    limit: float
    raw: list
    extrapolated: list
    threshold: float
    m_seq: list
    eps_seq: list
    partial: bool

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "limit": self.limit,
            "raw": list(self.raw),
            "extrapolated": list(self.extrapolated),
            "threshold": self.threshold,
            "m_seq": list(self.m_seq),
            "eps_seq": list(self.eps_seq),
            "partial": self.partial,
        }


def richardson_limits(mu: Sequence[float], values: Sequence[float]) -> list[float]:
    """Linear-in-mu extrapolations ``(mu_{k-1} x_k - mu_k x_{k-1}) / (mu_{k-1} - mu_k)``."""
    return [
        (mu[k - 1] * values[k] - mu[k] * values[k - 1]) / (mu[k - 1] - mu[k]) for k in range(1, len(values))
    ]


def classify_point(
    spec: KernelSpec,
    ladder: TruncationLadder,
    lam: float,
    mu_seq: Sequence[float],
    threshold: float = CLASSIFY_THRESHOLD,
    panels_per_unit: int = 1,
    points_per_panel: int = 10,
    grid=None,
) -> ClassificationResult:
    """Decide whether ``lam`` is a characteristic value from ``lim mu_n sup|T~_{m_n|lam + i mu_n}|``.

    The limit is estimated by linear extrapolation in ``mu`` of the last two
    terms; if the last two extrapolations disagree by more than
    ``max(threshold / 2, 5%)`` the verdict is ``inconclusive``.
    """
    res = point_projection_limit(spec, ladder, lam, mu_seq, panels_per_unit, points_per_panel, grid)
    raw = res.sup_values
    mu = res.mu[: len(raw)]
    extra = richardson_limits(mu, raw)
    if not extra:
        return ClassificationResult("inconclusive", math.nan, raw, extra, threshold, res.m_seq, res.eps_seq, res.partial)
    limit = max(0.0, extra[-1])
    settled = len(extra) < 2 or abs(extra[-1] - extra[-2]) <= max(0.5 * threshold, 0.05 * abs(extra[-1]))
    if not settled:
        verdict = "inconclusive"
    elif limit > threshold:
        verdict = "characteristic"
    else:
        verdict = "regular_or_continuous"
    return ClassificationResult(verdict, limit, raw, extra, threshold, res.m_seq, res.eps_seq, res.partial)


# ---------------------------------------------------------------------------
# interval convergence


def interval_convergence_study(
    spec: KernelSpec,
    ladder: TruncationLadder,
    window: SpectralWindow,
    n_list: Sequence[int],
    reference_n: int | None = None,
    panels_per_unit: int = 1,
    points_per_panel: int = 10,
    tol: float = 1e-6,
) -> ConvergenceReport:
    """Errors of ``E_{n|window}`` and ``e_{n|window}`` against the reference projection.

    Rows use ``err_kernel`` for the projection kernel, ``err_t`` for ``e`` and
    ``err_tprime`` for the column functions; the bound ``|E_n| <= M^2 ||tau||^2``
    with ``M = sup 1/|mu|`` over the window is recorded in ``diagnostics``.
    """
    if not spec.hermitian:
        raise ValueError("interval projections need a Hermitian kernel")
    n_list = [int(n) for n in n_list]
    n_ref = reference_n if reference_n is not None else min(max(n_list) + 1, ladder.size)
    ctx = StudyContext.build(spec, ladder, n_ref, panels_per_unit, points_per_panel)
    op_ref = ctx.operator(n_ref, "two_sided", refine=2)
    endpoint_hits = []
    for end in (window.a, window.b):
        if is_characteristic(op_ref, 1.0 / end)[0]:
            endpoint_hits.append(end)
    if endpoint_hits:
        warnings.warn(f"window endpoints {endpoint_hits} are reciprocal characteristic values", RuntimeWarning)
    ref = interval_projection(op_ref, window)
    pts, x = ctx.points, ctx.ref_nodes
    ref_ss = ref.matrix(pts, pts)
    ref_sx = ref.matrix(pts, x)
    m_const = window.inverse_sup
    bound = m_const**2 * ctx.tau_c**2

    rows = []
    sups = []
    for n in n_list:
        proj = interval_projection(ctx.operator(n, "two_sided"), window)
        ss = proj.matrix(pts, pts)
        sx = proj.matrix(pts, x)
        row = ConvergenceRow(n, complex(window.a, 0), complex(window.b, 0))
        row.err_kernel = float(np.max(np.abs(ss - ref_ss)))
        row.err_t = float(np.max(ctx.l2_rows(np.conj(sx - ref_sx))))
        row.err_tprime = float(np.max(ctx.l2_rows(sx - ref_sx)))
        sup = float(np.max(np.abs(ss)))
        sups.append(sup)
        row.kernel_sup = sup
        row.flag = "ok" if sup <= bound * (1 + 1e-9) else "projection_bound_violated"
        rows.append(row)

    summary = {
        "err_kernel": [r.err_kernel for r in rows],
        "err_t": [r.err_t for r in rows],
        "err_tprime": [r.err_tprime for r in rows],
    }
    verdict = {"tol": tol}
    for name, seq in summary.items():
        verdict[name] = {
            "decreasing": is_decreasing(seq),
            "final": seq[-1] if seq else math.nan,
            "below_tol": bool(seq and seq[-1] < tol),
        }
    bound_ok = all(s <= bound * (1 + 1e-9) for s in sups)
    verdict["bound_holds"] = bound_ok
    verdict["passed"] = bool(
        bound_ok and all(verdict[k]["decreasing"] and verdict[k]["below_tol"] for k in ("err_kernel", "err_t"))
    )
    return ConvergenceReport(
        "spectral_interval",
        [complex(window.a, 0), complex(window.b, 0)],
        n_list,
        rows,
        {"n": n_ref, "rank": ref.rank, "eigenvalues": [float(v) for v in ref.eigenvalues]},
        ctx.describe(),
        {"M": m_const, "tau_C": ctx.tau_c, "projection_bound": bound},
        summary,
        verdict,
        {"sup_projection": sups, "endpoint_hits": endpoint_hits},
    )
