"""Iterants, Neumann-series resolvents, resolvent Carleman functions and residual checks."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .evaluation import ResolventEvaluation
from .quadrature import DiscreteOperator, operator_norm_estimate

RHO_FLOOR = 1e-14


def iterant(op: DiscreteOperator, k: int) -> DiscreteOperator:
    """Nystrom form ``(K W)^{k-1} K`` of the k-th iterant kernel."""
    if k < 1:
        raise ValueError("iterant order must be >= 1")
    if k == 1:
        return op
    mat = op.matrix
    for _ in range(k - 1):
        mat = op.kw @ mat
    return DiscreteOperator(mat, op.rule, None, op.hermitian, f"iterant {k}")


def spectral_radius(op: DiscreteOperator, k_max: int = 8) -> float:
    """Spectral radius of the weighted matrix.

    Dense eigenvalues, capped by the Gelfand bound ``||A^k||^{1/k}`` (which
    guards against spurious eigenvalue scatter of nilpotent matrices).
    """
    a = op.weighted
    if a.size == 0 or not np.any(a):
        return 0.0
    try:
        rho = float(np.max(np.abs(op.eigenvalues)))
    except np.linalg.LinAlgError:
        rho = math.inf
    power = np.linalg.matrix_power(a, k_max)
    gelfand = float(np.linalg.norm(power, 2)) ** (1.0 / k_max)
    return min(rho, gelfand)


def spectral_radius_reciprocal(op: DiscreteOperator, k_max: int = 8) -> float:
    """``r(T) = 1 / rho``; ``inf`` when ``rho < 1e-14``."""
    if k_max < 4:
        raise ValueError("k_max must be >= 4")
    rho = spectral_radius(op, k_max)
    return math.inf if rho < RHO_FLOOR else 1.0 / rho


def neumann_resolvent(op: DiscreteOperator, lam: complex, m: int, radius: float | None = None) -> ResolventEvaluation:
    """Partial sum ``sum_{k=1}^{m} lam^{k-1} T^{[k]}`` evaluated pointwise.

    Node columns are accumulated Horner-style; off-grid values follow from one
    more application of the source kernel.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    lam = complex(lam)
    r = spectral_radius_reciprocal(op) if radius is None else radius
    meta = {"terms": m, "radius": r, "converged": bool(abs(lam) < r)}
    if m == 1:
        return ResolventEvaluation(lam, "neumann(1)", op, None, None, meta)

    kw = op.kw

    def columns(t):
        c = op.source.matrix(op.nodes, t)
        v = c.copy()
        for _ in range(m - 2):
            v = c + lam * (kw @ v)
        return v

    return ResolventEvaluation(lam, f"neumann({m})", op, columns, None, meta)


def nystrom_direct(op: DiscreteOperator, lam: complex) -> ResolventEvaluation:
    """Resolvent from a direct solve of ``(I - lam K W) R(X, t) = T(X, t)``."""
    lam = complex(lam)
    system = np.eye(op.size) - lam * op.kw

    def columns(t):
        return np.linalg.solve(system, op.source.matrix(op.nodes, t))

    return ResolventEvaluation(lam, "nystrom_direct", op, columns)


@dataclass(frozen=True)
class CarlemanSamples:
    """Node-sampled resolvent Carleman functions.

    ``t[i, j] = t|lam(points_i)(nodes_j)`` and ``tprime[i, j] = t'|lam(points_i)(nodes_j)``.
    """

    points: np.ndarray
    nodes: np.ndarray
    weights: np.ndarray
    t: np.ndarray
    tprime: np.ndarray

    def norms(self) -> tuple[np.ndarray, np.ndarray]:
        nt = np.sqrt(np.sum(self.weights * np.abs(self.t) ** 2, axis=1))
        ntp = np.sqrt(np.sum(self.weights * np.abs(self.tprime) ** 2, axis=1))
        return nt, ntp


def resolvent_carleman(op: DiscreteOperator, ev: ResolventEvaluation, points=None) -> CarlemanSamples:
    """Sample ``t|lam(s) = conj(R(s, .))`` and ``t'|lam(t) = R(., t)`` on the rule nodes."""
    if ev.op is not op and ev.op.rule is not op.rule:
        raise ValueError("evaluation was not built on this operator's rule")
    pts = op.nodes if points is None else np.atleast_1d(np.asarray(points, float))
    x = op.nodes
    return CarlemanSamples(pts, x, op.weights, ev.carleman_rows(pts, x), ev.carleman_cols(pts, x))


def reconstruct_from_carleman(op: DiscreteOperator, ev: ResolventEvaluation, s, t, route: str = "cols") -> np.ndarray:
    """Rebuild ``R(s, t)`` from sampled resolvent Carleman functions.

    ``cols``: ``R(s,t) = S(s,t) + lam <t'|lam(t), s(s)>`` with ``s(s) = conj(S(s, .))``;
    ``rows``: ``conj R(s,t) = conj S(s,t) + conj(lam) <t|lam(s), s'(t)>`` with
    ``s'(t) = S(., t)``. ``S`` is the (sub)kernel the evaluation was built from.
    """
    s = np.atleast_1d(np.asarray(s, float))
    t = np.atleast_1d(np.asarray(t, float))
    x, w = op.nodes, op.weights
    src = op.source
    if route == "cols":
        tp_res = ev.carleman_cols(t, x)  # [k, j] = R(x_j, t_k)
        row_src = np.conj(src.matrix(s, x))  # [i, j] = conj S(s_i, x_j)
        gram = (tp_res * w[None, :]) @ np.conj(row_src).T  # [k, i]
        return src.matrix(s, t) + ev.lam * gram.T
    if route == "rows":
        t_res = ev.carleman_rows(s, x)  # [i, j] = conj R(s_i, x_j)
        col_src = src.matrix(x, t).T  # [k, j] = S(x_j, t_k)
        gram = (t_res * w[None, :]) @ np.conj(col_src).T  # [i, k]
        return np.conj(np.conj(src.matrix(s, t)) + np.conj(ev.lam) * gram)
    raise ValueError("route must be 'cols' or 'rows'")


def resolvent_operator(op: DiscreteOperator, lam: complex) -> np.ndarray:
    """``R_lam = (I - lam A)^{-1}`` in weighted coordinates."""
    return np.linalg.inv(np.eye(op.size) - complex(lam) * op.weighted)


def weighted_resolvent_kernel(ev: ResolventEvaluation) -> np.ndarray:
    """Node matrix of ``R`` in weighted coordinates ``W^{1/2} R W^{1/2}``."""
    sw = ev.op.rule.sqrt_weights
    return sw[:, None] * ev.node_matrix * sw[None, :]


def inverse_identity_residual(op: DiscreteOperator, ev: ResolventEvaluation) -> float:
    """Max entry of ``R_lam - (I + lam T|lam)`` in weighted coordinates."""
    inv = resolvent_operator(op, ev.lam)
    rk = weighted_resolvent_kernel(ev)
    return float(np.max(np.abs(inv - (np.eye(op.size) + ev.lam * rk))))


def second_resolvent_residual(ev_t: ResolventEvaluation, ev_a: ResolventEvaluation) -> float:
    """Max of ``T|lam - A|lam - (I + lam T|lam)(T - A)(I + lam A|lam)`` on the nodes.

    Both evaluations must share the same rule and parameter; kernels compose
    through the quadrature weights.
    """
    if ev_t.op.rule is not ev_a.op.rule and not np.array_equal(ev_t.op.nodes, ev_a.op.nodes):
        raise ValueError("evaluations must share a rule")
    if ev_t.lam != ev_a.lam:
        raise ValueError("evaluations must share lambda")
    lam = ev_t.lam
    w = ev_t.op.weights
    rt = ev_t.node_matrix
    ra = ev_a.node_matrix
    diff = ev_t.op.matrix - ev_a.op.matrix
    q = diff + lam * (rt * w[None, :]) @ diff
    rhs = q + lam * (q * w[None, :]) @ ra
    return float(np.max(np.abs(rt - ra - rhs)))


@dataclass(frozen=True)
class ResidualReport:
    left_residual: float
    right_residual: float
    second_residual: float = math.nan


def resolvent_residuals(
    ev: ResolventEvaluation,
    op_full: DiscreteOperator,
    lam: complex | None = None,
    test_points=None,
    partner: ResolventEvaluation | None = None,
) -> ResidualReport:
    """Sup over a test grid of the defining-equation residuals.

    ``left_residual = |R - lam T o R - T|`` and ``right_residual = |R - lam R o T - T|`` with the
    compositions done by ``op_full``'s rule; ``second_residual`` compares ``ev`` to
    ``partner`` through the second resolvent equation when given.
    """
    lam = ev.lam if lam is None else complex(lam)
    pts = op_full.rule.test_points if test_points is None else np.asarray(test_points, float)
    src = op_full.source
    x, w = op_full.nodes, op_full.weights
    r_st = ev.matrix(pts, pts)
    t_st = src.matrix(pts, pts)
    r_xt = ev.matrix(x, pts)
    r_sx = ev.matrix(pts, x)
    t_sx = src.matrix(pts, x)
    t_xt = src.matrix(x, pts)
    left_residual = np.max(np.abs(r_st - lam * (t_sx * w[None, :]) @ r_xt - t_st)) if pts.size else 0.0
    right_residual = np.max(np.abs(r_st - lam * (r_sx * w[None, :]) @ t_xt - t_st)) if pts.size else 0.0
    second_residual = second_resolvent_residual(ev, partner) if partner is not None else math.nan
    return ResidualReport(float(left_residual), float(right_residual), second_residual)


@dataclass(frozen=True)
class BoundCheck:
    ok: bool
    measured: float
    bound: float


def selfadjoint_resolvent_bound_check(op: DiscreteOperator, lam: complex, tol: float = 1e-10) -> BoundCheck:
    """Check ``||R_lam|| <= |lam| / |Im lam|`` for a Hermitian operator."""
    lam = complex(lam)
    if not op.hermitian:
        raise ValueError("operator is not Hermitian")
    if lam.imag == 0:
        raise ValueError("lambda must have nonzero imaginary part")
    measured = operator_norm_estimate(resolvent_operator(op, lam))
    bound = abs(lam) / abs(lam.imag)
    return BoundCheck(measured <= bound + tol, measured, bound)
