"""Bi-Carleman kernels on the real line, their truncations and a small catalog.

A kernel is anything with a vectorised ``__call__(s, t)`` returning complex
values; :class:`KernelSpec` wraps catalog and tabulated kernels and
:class:`SubkernelSpec` applies the indicator masks of a truncation ladder.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import integrate
from scipy.interpolate import RegularGridInterpolator

from .errors import AccuracyError, OutOfDomainError

HERMITIAN_TOL = 1e-12
ORTHONORMAL_TOL = 1e-10

CATALOG_IDS = ("example1", "rank1", "finite_rank_hermitian", "gauss_bump", "zero")


# ---------------------------------------------------------------------------
# one-variable profiles used by the separable catalog entries


def _bump(x, radius):
    y = np.asarray(x, dtype=float) / radius
    return np.where(np.abs(y) < 1.0, (1.0 - y * y) ** 2, 0.0)


PROFILES: dict[str, Callable] = {
    # Gaussian decay
    "gauss": lambda x, width=1.0: np.exp(-0.5 * (np.asarray(x, float) / width) ** 2),
    "odd_gauss": lambda x, width=1.0: (np.asarray(x, float) / width)
    * np.exp(-0.5 * (np.asarray(x, float) / width) ** 2),
    # compact support on [-radius, radius], C^1 at the edges
    "bump": lambda x, radius=2.0: _bump(x, radius),
    "odd_bump": lambda x, radius=2.0: (np.asarray(x, float) / radius) * _bump(x, radius),
}


@dataclass(frozen=True)
class Profile:
    """A named profile, optionally shifted and scaled: ``scale * p(x - shift)``."""

    kind: str = "gauss"
    width: float = 1.0
    radius: float = 2.0
    shift: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in PROFILES:
            raise ValueError(f"unknown profile {self.kind!r}; choose from {sorted(PROFILES)}")
        if self.width <= 0 or self.radius <= 0:
            raise ValueError("profile width and radius must be positive")

    @classmethod
    def parse(cls, value) -> "Profile":
        if isinstance(value, Profile):
            return value
        if isinstance(value, str):
            return cls(kind=value)
        if isinstance(value, Mapping):
            return cls(**dict(value))
        raise TypeError(f"cannot build a profile from {value!r}")

    @property
    def compact(self) -> bool:
        return self.kind in ("bump", "odd_bump")

    def __call__(self, x):
        x = np.asarray(x, dtype=float) - self.shift
        if self.compact:
            return self.scale * PROFILES[self.kind](x, self.radius)
        return self.scale * PROFILES[self.kind](x, self.width)

    def breakpoints(self) -> tuple[float, ...]:
        if self.compact:
            return (self.shift - self.radius, self.shift + self.radius)
        return ()

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "width": self.width,
            "radius": self.radius,
            "shift": self.shift,
            "scale": self.scale,
        }


def hermite_functions(count: int) -> list[Callable]:
    """Orthonormal Hermite functions ``h_0, ..., h_{count-1}``.

    These are Gram-Schmidt applied to ``s^k exp(-s^2/2)`` (positive leading
    coefficients), evaluated with the stable three-term recurrence; the
    result is certified against quadrature in :func:`catalog_kernel`.
    """
    if count < 1:
        raise ValueError("need at least one function")

    def make(k):
        def phi(x):
            x = np.asarray(x, dtype=float)
            prev = np.zeros_like(x)
            cur = np.pi**-0.25 * np.exp(-0.5 * x * x)
            for j in range(k):
                prev, cur = cur, math.sqrt(2.0 / (j + 1)) * x * cur - math.sqrt(j / (j + 1)) * prev
            return cur

        return phi

    return [make(k) for k in range(count)]


# ---------------------------------------------------------------------------
# kernel specs


@dataclass(frozen=True)
class TabulatedGrid:
    """Complex samples on a rectangular grid, interpolated bilinearly."""

    s: np.ndarray
    t: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float)
        t = np.asarray(self.t, dtype=float)
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (s.size, t.size):
            raise ValueError(f"values shape {v.shape} does not match grid {(s.size, t.size)}")
        if s.size < 2 or t.size < 2 or np.any(np.diff(s) <= 0) or np.any(np.diff(t) <= 0):
            raise ValueError("tabulated grid axes must be strictly increasing with >= 2 points")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "values", v)
        re = RegularGridInterpolator((s, t), v.real, method="linear", bounds_error=False)
        im = RegularGridInterpolator((s, t), v.imag, method="linear", bounds_error=False)
        object.__setattr__(self, "_interp", (re, im))

    @classmethod
    def from_csv(cls, path) -> "TabulatedGrid":
        """Read rows ``s,t,re,im`` listed row-major (s outer, t inner)."""
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["s", "t", "re", "im"]:
                raise ValueError(f"{path}: expected header s,t,re,im")
            rows = [(float(r["s"]), float(r["t"]), float(r["re"]), float(r["im"])) for r in reader]
        data = np.array(rows, dtype=float).reshape(-1, 4)
        s = np.unique(data[:, 0])
        t = np.unique(data[:, 1])
        if s.size * t.size != data.shape[0]:
            raise ValueError(f"{path}: rows do not form a full rectangular grid")
        order = np.lexsort((data[:, 1], data[:, 0]))
        if not np.array_equal(order, np.arange(data.shape[0])):
            raise ValueError(f"{path}: rows must be row-major (s outer, t inner), ascending")
        values = (data[:, 2] + 1j * data[:, 3]).reshape(s.size, t.size)
        return cls(s, t, values)

    def __call__(self, s, t):
        s, t = np.broadcast_arrays(np.asarray(s, float), np.asarray(t, float))
        outside = (s < self.s[0]) | (s > self.s[-1]) | (t < self.t[0]) | (t > self.t[-1])
        if np.any(outside):
            raise OutOfDomainError(
                f"tabulated kernel queried outside [{self.s[0]}, {self.s[-1]}] x [{self.t[0]}, {self.t[-1]}]"
            )
        pts = np.stack([s.ravel(), t.ravel()], axis=-1)
        re, im = self._interp
        return (re(pts) + 1j * im(pts)).reshape(s.shape)


@dataclass(frozen=True)
class KernelSpec:
    """A pointwise evaluable kernel ``T(s, t)`` on the real plane.

    Build catalog entries with :func:`catalog_kernel`; ``func`` is the
    vectorised evaluator and ``breaks`` maps a coordinate to the points of
    the other variable where the kernel may fail to be smooth.
    """

    catalog_id: str
    params: Mapping = field(default_factory=dict)
    hermitian: bool = False
    tabulated: TabulatedGrid | None = None
    func: Callable = field(default=None, repr=False, compare=False)
    breaks: Callable = field(default=None, repr=False, compare=False)
    panel_breaks: Callable = field(default=None, repr=False, compare=False)

    def __call__(self, s, t):
        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=float)
        out = np.asarray(self.func(s, t), dtype=complex)
        return out if out.ndim else complex(out)

    def matrix(self, s, t) -> np.ndarray:
        """``T(s_i, t_j)`` for all pairs."""
        s = np.atleast_1d(np.asarray(s, float))
        t = np.atleast_1d(np.asarray(t, float))
        return np.asarray(self.func(s[:, None], t[None, :]), dtype=complex)

    def kinks(self, x: float) -> tuple[float, ...]:
        return tuple(self.breaks(float(x))) if self.breaks else ()

    def interval_breaks(self, lo: float, hi: float) -> tuple[float, ...]:
        """Fixed panel split points inside ``[lo, hi]``."""
        return tuple(self.panel_breaks(lo, hi)) if self.panel_breaks else ()

    @property
    def domain(self) -> tuple[float, float] | None:
        if self.tabulated is None:
            return None
        g = self.tabulated
        return (max(g.s[0], g.t[0]), min(g.s[-1], g.t[-1]))

    def hermitian_defect(self, grid: np.ndarray) -> float:
        """Largest relative violation of ``T(s,t) = conj(T(t,s))`` on ``grid``."""
        m = self.matrix(grid, grid)
        return float(np.max(np.abs(m - m.conj().T) / (1.0 + np.abs(m)))) if m.size else 0.0

    def describe(self) -> dict:
        params = {}
        for key, val in self.params.items():
            if isinstance(val, Profile):
                params[key] = val.as_dict()
            elif isinstance(val, (list, tuple)):
                params[key] = [float(v) for v in val]
            else:
                params[key] = val
        return {"id": self.catalog_id, "params": params, "hermitian": self.hermitian}


@dataclass(frozen=True)
class TruncationLadder:
    """Strictly increasing positive truncation radii ``tau_1 < tau_2 < ...``.

    Indices are 1-based, matching ``tau(n)``.
    """

    values: tuple[float, ...]
    rule: str = "explicit"

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise ValueError("ladder needs at least one value")
        if vals[0] <= 0 or any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError("ladder values must be positive and strictly increasing")
        object.__setattr__(self, "values", vals)

    @classmethod
    def quartic(cls, size: int) -> "TruncationLadder":
        """``tau_n = 1^4 + ... + n^4``."""
        return cls(tuple(float(sum(k**4 for k in range(1, n + 1))) for n in range(1, size + 1)), "quartic")

    @classmethod
    def linear(cls, size: int, step: float = 2.0) -> "TruncationLadder":
        """``tau_n = step * n`` (default ``2n``)."""
        return cls(tuple(step * n for n in range(1, size + 1)), "linear")

    def __len__(self) -> int:
        return len(self.values)

    @property
    def size(self) -> int:
        return len(self.values)

    def tau(self, n: int) -> float:
        if not 1 <= n <= len(self.values):
            raise IndexError(f"ladder index {n} outside 1..{len(self.values)}")
        return self.values[n - 1]

    def extended(self, size: int) -> "TruncationLadder":
        if size <= self.size:
            return self
        if self.rule == "quartic":
            return TruncationLadder.quartic(size)
        if self.rule == "linear" and self.size >= 1:
            return TruncationLadder.linear(size, self.values[0])
        raise ValueError("explicit ladders cannot be extended automatically")

    def describe(self) -> dict:
        return {"rule": self.rule, "values": list(self.values)}


def indicator(tau: float, x):
    """Half-open indicator of ``[-tau, tau)``."""
    x = np.asarray(x, dtype=float)
    return ((x >= -tau) & (x < tau)).astype(float)


@dataclass(frozen=True)
class SubkernelSpec:
    """Truncation of ``base`` on ladder interval ``n``.

    ``one_sided``: ``chi_n(s) T(s,t)``; ``two_sided``: ``chi_n(s) T(s,t) chi_n(t)``.
    """

    base: KernelSpec
    ladder: TruncationLadder
    n: int
    kind: str = "one_sided"

    def __post_init__(self):
        if self.kind not in ("one_sided", "two_sided"):
            raise ValueError(f"unknown subkernel kind {self.kind!r}")
        self.ladder.tau(self.n)  # range check

    @property
    def tau(self) -> float:
        return self.ladder.tau(self.n)

    @property
    def hermitian(self) -> bool:
        return self.base.hermitian and self.kind == "two_sided"

    @property
    def catalog_id(self) -> str:
        return self.base.catalog_id

    def mask_s(self, s):
        return indicator(self.tau, s)

    def mask_t(self, t):
        if self.kind == "two_sided":
            return indicator(self.tau, t)
        return np.ones_like(np.asarray(t, dtype=float))

    def __call__(self, s, t):
        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=float)
        out = np.asarray(self.base.func(s, t), dtype=complex) * self.mask_s(s) * self.mask_t(t)
        return out if out.ndim else complex(out)

    def matrix(self, s, t) -> np.ndarray:
        s = np.atleast_1d(np.asarray(s, float))
        t = np.atleast_1d(np.asarray(t, float))
        return self.base.matrix(s, t) * self.mask_s(s)[:, None] * self.mask_t(t)[None, :]

    def kinks(self, x: float) -> tuple[float, ...]:
        return self.base.kinks(x) + (-self.tau, self.tau)

    def interval_breaks(self, lo: float, hi: float) -> tuple[float, ...]:
        return self.base.interval_breaks(lo, hi)

    @property
    def domain(self):
        return self.base.domain

    def describe(self) -> dict:
        return {"base": self.base.describe(), "n": self.n, "tau": self.tau, "kind": self.kind}


def make_subkernel(spec: KernelSpec, ladder: TruncationLadder, n: int, kind: str = "one_sided") -> SubkernelSpec:
    return SubkernelSpec(spec, ladder, n, kind)


def eval_kernel(spec, s, t):
    """Evaluate ``T(s, t)`` (broadcasting over array arguments)."""
    return spec(s, t)


# ---------------------------------------------------------------------------
# catalog


def _example1(eps: float) -> KernelSpec:
    if eps <= 0:
        raise ValueError("example1 needs eps > 0")
    c = math.exp(-eps) / eps

    def func(s, t):
        s, t = np.broadcast_arrays(np.asarray(s, float), np.asarray(t, float))
        a = np.abs(s)
        upper = t > a + eps
        ramp = (t >= a) & ~upper
        out = np.zeros(s.shape)
        out = np.where(upper, np.exp(np.minimum(a - t, 0.0)), out)
        out = np.where(ramp, -c * (a - t), out)
        return out.astype(complex)

    def breaks(x):
        a = abs(x)
        return (a, a + eps, x - eps, -x + eps, x, -x)

    def panel_breaks(lo, hi):
        k0 = math.ceil(lo / eps)
        k1 = math.floor(hi / eps)
        return tuple(k * eps for k in range(k0, k1 + 1))

    return KernelSpec("example1", {"eps": eps}, False, None, func, breaks, panel_breaks)


def _rank1(a: Profile, b: Profile) -> KernelSpec:
    def func(s, t):
        return np.asarray(a(s), complex) * np.asarray(b(t), complex)

    def breaks(x):
        return a.breakpoints() + b.breakpoints()

    def panel_breaks(lo, hi):
        return tuple(p for p in a.breakpoints() + b.breakpoints() if lo <= p <= hi)

    return KernelSpec("rank1", {"a": a, "b": b}, a == b, None, func, breaks, panel_breaks)


def _finite_rank_hermitian(mu: Sequence[float], certify: bool = True) -> KernelSpec:
    mu = tuple(float(m) for m in mu)
    if not mu:
        raise ValueError("finite_rank_hermitian needs at least one coefficient")
    phis = hermite_functions(len(mu))
    if certify:
        gram = gram_matrix(phis)
        defect = float(np.max(np.abs(gram - np.eye(len(mu)))))
        if defect > ORTHONORMAL_TOL:
            raise AccuracyError(f"basis Gram defect {defect:.2e} exceeds {ORTHONORMAL_TOL}", estimate=defect)

    def func(s, t):
        s, t = np.broadcast_arrays(np.asarray(s, float), np.asarray(t, float))
        out = np.zeros(s.shape)
        for m, phi in zip(mu, phis):
            out = out + m * phi(s) * phi(t)
        return out.astype(complex)

    spec = KernelSpec("finite_rank_hermitian", {"mu": mu}, True, None, func)
    object.__setattr__(spec, "basis", tuple(phis))
    return spec


def gram_matrix(funcs: Sequence[Callable], radius: float = 14.0, panels: int = 56, order: int = 16) -> np.ndarray:
    """Gram matrix of real functions by composite Gauss-Legendre on ``[-radius, radius]``."""
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(-radius, radius, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    samples = np.array([f(nodes) for f in funcs])
    return (samples * weights) @ samples.T


def _gauss_bump(sigma: float) -> KernelSpec:
    if sigma <= 0:
        raise ValueError("gauss_bump needs sigma > 0")

    def func(s, t):
        s, t = np.broadcast_arrays(np.asarray(s, float), np.asarray(t, float))
        return np.exp(-(s * s + t * t) / sigma**2).astype(complex)

    return KernelSpec("gauss_bump", {"sigma": sigma}, True, None, func)


def _zero() -> KernelSpec:
    def func(s, t):
        s, t = np.broadcast_arrays(np.asarray(s, float), np.asarray(t, float))
        return np.zeros(s.shape, dtype=complex)

    return KernelSpec("zero", {}, True, None, func)


def catalog_kernel(catalog_id: str, params: Mapping | None = None) -> KernelSpec:
    """Build a catalog kernel.

    ``example1(eps)``, ``rank1(a, b)`` with profile specs, ``finite_rank_hermitian(mu)``,
    ``gauss_bump(sigma)`` and ``zero``.
    """
    params = dict(params or {})
    if catalog_id == "example1":
        return _example1(float(params.get("eps", 1.0)))
    if catalog_id == "rank1":
        a = Profile.parse(params.get("a", "gauss"))
        b = Profile.parse(params.get("b", a))
        return _rank1(a, b)
    if catalog_id == "finite_rank_hermitian":
        mu = params.get("mu")
        if mu is None:
            raise ValueError("finite_rank_hermitian needs params.mu")
        return _finite_rank_hermitian(mu)
    if catalog_id == "gauss_bump":
        return _gauss_bump(float(params.get("sigma", 1.0)))
    if catalog_id == "zero":
        return _zero()
    raise ValueError(f"unknown catalog id {catalog_id!r}; choose from {CATALOG_IDS}")


def tabulated_kernel(path, hermitian: bool = False) -> KernelSpec:
    grid = TabulatedGrid.from_csv(path)
    spec = KernelSpec(
        "tabulated",
        {"path": str(path)},
        hermitian,
        grid,
        grid,
        lambda x: tuple(np.union1d(grid.s, grid.t)),
        lambda lo, hi: tuple(float(v) for v in np.union1d(grid.s, grid.t) if lo <= v <= hi),
    )
    if hermitian:
        defect = spec.hermitian_defect(np.intersect1d(grid.s, grid.t))
        if defect > HERMITIAN_TOL:
            raise ValueError(f"tabulated kernel claimed Hermitian but defect is {defect:.2e}")
    return spec


# ---------------------------------------------------------------------------
# Carleman functions


def _quad_l2(func: Callable[[float], float], points: Sequence[float], lo=-math.inf, hi=math.inf, limit=400):
    """``int |func|^2`` over ``[lo, hi]`` split at ``points``."""
    pts = sorted({float(p) for p in points if lo < p < hi and math.isfinite(p)})
    edges = [lo, *pts, hi]
    total = 0.0
    err = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        for a, b in zip(edges, edges[1:]):
            if b <= a:
                continue
            try:
                val, e = integrate.quad(lambda x: abs(func(x)) ** 2, a, b, limit=limit, epsabs=1e-15, epsrel=1e-12)
            except integrate.IntegrationWarning as exc:
                raise AccuracyError(
                    f"adaptive quadrature failed on [{a}, {b}]: {exc}", estimate=math.sqrt(total)
                ) from exc
            total += val
            err += e
    return total, err


def carleman_norms(spec, s: float) -> tuple[float, float]:
    """``(tau(s), tau'(s))`` = L2 norms of ``T(s, .)`` and ``T(., s)`` by adaptive quadrature."""
    s = float(s)
    lo, hi = (-math.inf, math.inf)
    dom = spec.domain
    if dom is not None:
        lo, hi = dom
    pts = spec.kinks(s)
    row, _ = _quad_l2(lambda t: spec(s, t), pts, lo, hi)
    col, _ = _quad_l2(lambda x: spec(x, s), pts, lo, hi)
    return math.sqrt(row), math.sqrt(col)


def carleman_function_samples(spec, s_grid, nodes, direction: str = "row") -> np.ndarray:
    """Node samples of the Carleman functions.

    ``row``: ``t(s_i)(x_j) = conj(T(s_i, x_j))``; ``col``: ``t'(s_i)(x_j) = T(x_j, s_i)``.
    Returns an array of shape ``(len(s_grid), len(nodes))``.
    """
    s_grid = np.atleast_1d(np.asarray(s_grid, float))
    nodes = np.asarray(nodes, float)
    if direction == "row":
        return np.conj(spec.matrix(s_grid, nodes))
    if direction == "col":
        return spec.matrix(nodes, s_grid).T
    raise ValueError("direction must be 'row' or 'col'")


def inner(f, g, weights) -> complex:
    """Discrete ``<f, g> = sum w f conj(g)`` along the last axis."""
    return np.sum(np.asarray(weights) * np.asarray(f) * np.conj(g), axis=-1)
