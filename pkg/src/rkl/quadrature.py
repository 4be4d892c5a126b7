"""Composite Gauss-Legendre rules on truncated intervals and Nystrom matrices."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.special import roots_legendre

from .errors import AccuracyError
from .kernels import HERMITIAN_TOL, TruncationLadder

POWER_TOL = 1e-10
POWER_MAX_ITER = 20000


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and positive weights of a composite rule on ``[-tau, tau]``."""

    nodes: np.ndarray
    weights: np.ndarray
    edges: np.ndarray
    tau: float
    n: int
    panels_per_unit: int
    points_per_panel: int
    ladder: TruncationLadder = field(repr=False)
    extra_breaks: tuple[float, ...] = field(default=(), repr=False)

    @property
    def size(self) -> int:
        return self.nodes.size

    def __len__(self) -> int:
        return self.nodes.size

    @cached_property
    def sqrt_weights(self) -> np.ndarray:
        return np.sqrt(self.weights)

    @cached_property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @cached_property
    def test_points(self) -> np.ndarray:
        """Union of nodes and panel midpoints, sorted."""
        return np.unique(np.concatenate([self.nodes, self.midpoints]))

    def integrate(self, values) -> complex:
        return np.sum(self.weights * np.asarray(values), axis=-1)

    def refined(self, factor: int = 2) -> "QuadratureRule":
        """Every panel split into ``factor`` equal pieces (panels per unit scaled to match)."""
        inner = self.edges[:-1, None] + np.diff(self.edges)[:, None] * (np.arange(1, factor) / factor)[None, :]
        breaks = tuple(self.extra_breaks) + tuple(float(v) for v in inner.ravel())
        return build_rule(self.ladder, self.n, self.panels_per_unit * factor, self.points_per_panel, extra_breaks=breaks)

    def meta(self) -> dict:
        return {
            "n": self.n,
            "tau": self.tau,
            "panels_per_unit": self.panels_per_unit,
            "points_per_panel": self.points_per_panel,
            "size": int(self.size),
        }


def _merge(points, tol) -> np.ndarray:
    pts = np.sort(np.asarray(points, dtype=float))
    keep = [pts[0]]
    for p in pts[1:]:
        if p - keep[-1] > tol:
            keep.append(p)
    return np.array(keep)


def build_rule(
    ladder: TruncationLadder,
    n: int,
    panels_per_unit: int = 1,
    points_per_panel: int = 10,
    spec=None,
    extra_breaks=(),
) -> QuadratureRule:
    """Composite Gauss-Legendre rule on ``[-tau_n, tau_n]``.

    Panels have length at most ``1 / panels_per_unit`` and are split at every
    ``±tau_k`` of the ladder below ``tau_n`` and at the kernel's fixed break
    points when ``spec`` is given (multiples of eps for the example1 kernel).
    """
    if panels_per_unit < 1 or points_per_panel < 1:
        raise ValueError("panels_per_unit and points_per_panel must be positive")
    tau = ladder.tau(n)
    breaks = list(extra_breaks)
    if spec is not None:
        breaks.extend(spec.interval_breaks(-tau, tau))
    breaks = tuple(sorted(float(b) for b in breaks if -tau < b < tau))

    count = max(1, math.ceil(2.0 * tau * panels_per_unit - 1e-9))
    edges = list(np.linspace(-tau, tau, count + 1))
    for k in range(1, n):
        edges += [-ladder.tau(k), ladder.tau(k)]
    edges += list(breaks)
    edges = _merge(edges, 1e-10 * max(1.0, tau))
    edges[0], edges[-1] = -tau, tau

    x, w = roots_legendre(points_per_panel)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return QuadratureRule(nodes, weights, edges, tau, n, panels_per_unit, points_per_panel, ladder, breaks)


@dataclass(frozen=True, eq=False)
class DiscreteOperator:
    """Nystrom matrix ``K_ij = T(x_i, x_j)`` of a kernel on a rule.

    ``weighted`` is ``W^{1/2} K W^{1/2}``, the matrix of the operator in an
    orthonormal coordinate system of the discrete L2 space.
    """

    matrix: np.ndarray
    rule: QuadratureRule
    source: object = None
    hermitian: bool = False
    label: str = ""

    def __post_init__(self):
        n = self.rule.size
        if self.matrix.shape != (n, n):
            raise ValueError(f"matrix shape {self.matrix.shape} does not match rule size {n}")

    @property
    def size(self) -> int:
        return self.rule.size

    @property
    def nodes(self) -> np.ndarray:
        return self.rule.nodes

    @property
    def weights(self) -> np.ndarray:
        return self.rule.weights

    @cached_property
    def weighted(self) -> np.ndarray:
        sw = self.rule.sqrt_weights
        a = sw[:, None] * self.matrix * sw[None, :]
        if self.hermitian:
            a = 0.5 * (a + a.conj().T)
        return a

    @property
    def symmetric_weighted(self) -> np.ndarray | None:
        """Cached Hermitian weighted matrix; ``None`` for non-Hermitian sources."""
        return self.weighted if self.hermitian else None

    @cached_property
    def kw(self) -> np.ndarray:
        """``K W``, the matrix acting on node samples."""
        return self.matrix * self.rule.weights[None, :]

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        if self.hermitian:
            return np.linalg.eigvalsh(self.weighted).astype(complex)
        return np.linalg.eigvals(self.weighted)

    def refined(self, factor: int = 2) -> "DiscreteOperator":
        if self.source is None:
            raise ValueError("operator has no source kernel to re-discretize")
        return discretize(self.source, self.rule.refined(factor))


def discretize(spec, rule: QuadratureRule) -> DiscreteOperator:
    """Sample ``spec`` on ``rule`` nodes; Hermitian claims are verified."""
    mat = np.asarray(spec.matrix(rule.nodes, rule.nodes), dtype=complex)
    hermitian = bool(getattr(spec, "hermitian", False))
    if hermitian and mat.size:
        sw = rule.sqrt_weights
        a = sw[:, None] * mat * sw[None, :]
        defect = np.max(np.abs(a - a.conj().T))
        if defect > HERMITIAN_TOL * max(1.0, np.max(np.abs(a))):
            raise ValueError(f"kernel claimed Hermitian but weighted defect is {defect:.2e}")
    return DiscreteOperator(mat, rule, spec, hermitian)


def nystrom_apply(op: DiscreteOperator, f) -> np.ndarray:
    """``(Tf)(x_i) = sum_j K_ij w_j f(x_j)``."""
    f = np.asarray(f)
    if f.shape[0] != op.size:
        raise ValueError(f"expected {op.size} samples, got {f.shape[0]}")
    return op.kw @ f


def _start_vector(n: int) -> np.ndarray:
    rng = np.random.default_rng(20240607)
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return v / np.linalg.norm(v)


def spectral_norm(matrix: np.ndarray, tol: float = POWER_TOL, max_iter: int = POWER_MAX_ITER) -> float:
    """Largest singular value by power iteration on ``A^H A``."""
    a = np.asarray(matrix)
    if a.size == 0:
        return 0.0
    fro = float(np.linalg.norm(a))
    if fro == 0.0:
        return 0.0
    v = _start_vector(a.shape[1])
    sigma = 0.0
    for _ in range(max_iter):
        u = a @ v
        new = float(np.linalg.norm(u))
        if new == 0.0:
            # start vector annihilated; restart from a different direction
            v = np.roll(v, 1) + 1.0 / np.sqrt(v.size)
            v /= np.linalg.norm(v)
            continue
        v = a.conj().T @ u
        nv = float(np.linalg.norm(v))
        if nv == 0.0:
            return new
        v /= nv
        if abs(new - sigma) <= tol * new:
            return new
        sigma = new
    raise AccuracyError("power iteration did not converge", estimate=sigma, bracket=(sigma, fro))


def operator_norm_estimate(op, tol: float = POWER_TOL, max_iter: int = POWER_MAX_ITER) -> float:
    """L2 operator norm of a discrete operator (or of an already weighted matrix)."""
    a = op.weighted if isinstance(op, DiscreteOperator) else np.asarray(op)
    return spectral_norm(a, tol, max_iter)
