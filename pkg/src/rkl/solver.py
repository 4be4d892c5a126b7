"""Second-kind equations ``f - lam T f = g`` and their solvability checks."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .errors import CharacteristicValueError
from .evaluation import ResolventEvaluation
from .fredholm import CHAR_TOL, fredholm_resolvent, is_characteristic
from .kernels import Profile
from .quadrature import DiscreteOperator


def load_profile_csv(path) -> Callable:
    """Piecewise-linear function from a CSV with ``s,value`` or ``s,re,im`` columns."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        fields = [f.strip() for f in (reader.fieldnames or [])]
        rows = list(reader)
    if fields == ["s", "value"]:
        v = np.array([float(r["value"]) for r in rows], dtype=complex)
    elif fields == ["s", "re", "im"]:
        v = np.array([complex(float(r["re"]), float(r["im"])) for r in rows])
    else:
        raise ValueError(f"{path}: expected columns s,value or s,re,im")
    s = np.array([float(r["s"]) for r in rows])
    order = np.argsort(s)
    s, v = s[order], v[order]

    def func(x):
        x = np.asarray(x, float)
        return np.interp(x, s, v.real, left=0.0, right=0.0) + 1j * np.interp(x, s, v.imag, left=0.0, right=0.0)

    return func


def as_function(g) -> Callable | None:
    """Interpret ``g`` as a callable if it names a profile or is one."""
    if callable(g):
        return g
    if isinstance(g, (str, dict, Profile)):
        return Profile.parse(g)
    return None


def _samples(g, nodes) -> np.ndarray:
    func = as_function(g)
    if func is not None:
        return np.asarray(func(nodes), dtype=complex)
    arr = np.asarray(g, dtype=complex)
    if arr.shape != nodes.shape:
        raise ValueError(f"expected {nodes.size} node samples, got shape {arr.shape}")
    return arr


@dataclass(frozen=True, eq=False)
class SolveReport:
    """Solution of ``f - lam T f = g`` on the rule nodes."""

    f: np.ndarray
    g: np.ndarray
    lam: complex
    route: str
    residual: float
    condition: float
    op: DiscreteOperator = field(repr=False)
    g_func: Callable | None = field(default=None, repr=False)

    def __call__(self, s) -> np.ndarray:
        """Nystrom extension ``f(s) = g(s) + lam sum_j w_j T(s, x_j) f(x_j)``."""
        if self.g_func is None:
            raise ValueError("off-node values need g as a function or profile")
        s = np.atleast_1d(np.asarray(s, float))
        left = self.op.source.matrix(s, self.op.nodes) * self.op.weights[None, :]
        return np.asarray(self.g_func(s), complex) + self.lam * (left @ self.f)


def solve_second_kind(
    op: DiscreteOperator,
    lam: complex,
    g,
    route: str = "direct_linear",
    tol: float = CHAR_TOL,
    row_order=None,
) -> SolveReport:
    """Solve on the nodes of ``op``; characteristic values raise.

    ``direct_linear`` factorizes ``I - lam K W`` (rows taken in ``row_order``
    when given); ``resolvent_formula`` uses ``f = g + lam int R(., t) g(t) dt``
    with the Fredholm resolvent.
    """
    lam = complex(lam)
    g_func = as_function(g)
    gx = _samples(g, op.nodes)
    if lam == 0:
        return SolveReport(gx.copy(), gx, lam, route, 0.0, 1.0, op, g_func)
    flag, abs_det, scale = is_characteristic(op, lam, tol)
    if flag:
        raise CharacteristicValueError(lam, abs_det, scale)
    system = np.eye(op.size) - lam * op.weighted
    sw = op.rule.sqrt_weights
    if route == "direct_linear":
        order = np.arange(op.size) if row_order is None else np.asarray(row_order)
        lu = lu_factor(system[order], check_finite=False)
        f = lu_solve(lu, (sw * gx)[order], check_finite=False) / sw
    elif route == "resolvent_formula":
        ev = fredholm_resolvent(op, lam, tol)
        f = gx + lam * (ev.node_matrix @ (op.weights * gx))
    else:
        raise ValueError(f"unknown route {route!r}")
    residual = float(np.max(np.abs(f - lam * (op.kw @ f) - gx))) if f.size else 0.0
    condition = float(np.linalg.cond(system))
    return SolveReport(f, gx, lam, route, residual, condition, op, g_func)


def manufactured_rhs(op: DiscreteOperator, lam: complex, f0) -> tuple[np.ndarray, Callable]:
    """``g = f0 - lam T f0`` on the nodes together with an off-node evaluator."""
    func = as_function(f0)
    fx = np.asarray(func(op.nodes), complex)
    lam = complex(lam)

    def g_func(s):
        s = np.atleast_1d(np.asarray(s, float))
        left = op.source.matrix(s, op.nodes) * op.weights[None, :]
        return np.asarray(func(s), complex) - lam * (left @ fx)

    return fx - lam * (op.kw @ fx), g_func


@dataclass(frozen=True)
class SolvabilityResiduals:
    energy: float
    commutation: float


def solvability_residuals(r_limit: ResolventEvaluation, op_full: DiscreteOperator, lam: complex, g, test_points=None) -> SolvabilityResiduals:
    """Quadrature versions of the two solvability relations.

    ``energy`` is the discrete value of ``int |int R(s,t) g(t) dt|^2 ds``;
    ``commutation`` is the sup over test points of the difference between
    ``int T(s,x) int R(x,t) g(t) dt dx`` and ``int g(t) int T(s,x) R(x,t) dx dt``,
    where the inner kernel composition of the latter is replayed through the
    resolvent equation ``int T(s,x) R(x,t) dx = (R(s,t) - T(s,t)) / lam``.
    """
    lam = complex(lam)
    x, w = op_full.nodes, op_full.weights
    gx = _samples(g, x)
    pts = op_full.rule.test_points if test_points is None else np.asarray(test_points, float)
    rg = r_limit.matrix(x, x) @ (w * gx)
    energy = float(np.sum(w * np.abs(rg) ** 2))
    src = op_full.source
    lhs = (src.matrix(pts, x) * w[None, :]) @ rg
    if lam != 0:
        comp = (r_limit.matrix(pts, x) - src.matrix(pts, x)) / lam
    else:
        comp = (src.matrix(pts, x) * w[None, :]) @ r_limit.matrix(x, x)
    rhs = comp @ (w * gx)
    commutation = float(np.max(np.abs(lhs - rhs))) if pts.size else 0.0
    return SolvabilityResiduals(energy, commutation)
