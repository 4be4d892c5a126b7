"""Fredholm determinants, first minors, resolvent ratios and characteristic values."""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .errors import CharacteristicValueError
from .evaluation import ResolventEvaluation
from .quadrature import DiscreteOperator

CHAR_TOL = 1e-8


@dataclass(frozen=True)
class FredholmData:
    lam: complex
    determinant: complex
    log_abs_det: float
    n: int
    rule: dict
    method: str = "discrete_det"
    error_estimate: float = math.nan

    def as_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "determinant": self.determinant,
            "abs_det": abs(self.determinant),
            "log_abs_det": self.log_abs_det,
            "n": self.n,
            "rule": self.rule,
            "method": self.method,
            "error_estimate": self.error_estimate,
        }


@dataclass(frozen=True)
class CharacteristicValue:
    value: complex
    multiplicity: int
    abs_det: float
    refined: bool


@dataclass(frozen=True)
class CharacteristicValueSet:
    values: tuple[CharacteristicValue, ...]
    box: tuple[float, float, float, float]
    tol: float
    grid: tuple[int, int] = (0, 0)

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    @property
    def points(self) -> np.ndarray:
        return np.array([v.value for v in self.values], dtype=complex)


# ---------------------------------------------------------------------------
# determinant


def _system(op: DiscreteOperator, lam: complex) -> np.ndarray:
    return np.eye(op.size) - lam * op.weighted


def _logdet_lu(lu: np.ndarray, piv: np.ndarray) -> tuple[float, complex]:
    d = np.diag(lu)
    absd = np.abs(d)
    if np.any(absd == 0):
        return -math.inf, 0.0
    swaps = int(np.count_nonzero(piv != np.arange(piv.size)))
    phase = complex(np.prod(d / absd)) * (-1.0 if swaps % 2 else 1.0)
    return float(np.sum(np.log(absd))), phase


def _det_parts(op: DiscreteOperator, lam: complex):
    lam = complex(lam)
    if lam == 0 or op.size == 0:
        return 0.0, 1.0 + 0j, None
    lu, piv = lu_factor(_system(op, lam), check_finite=False)
    log_abs, phase = _logdet_lu(lu, piv)
    return log_abs, phase, (lu, piv)


def _compose(log_abs: float, phase: complex) -> complex:
    if log_abs == -math.inf:
        return 0j
    return phase * math.exp(log_abs) if log_abs < 700 else phase * math.inf


def characteristic_scale(op: DiscreteOperator, lam: complex) -> float:
    """``exp(sum_i max(0, log|1 - lam mu_i|))`` over the discrete eigenvalues."""
    if lam == 0 or op.size == 0:
        return 1.0
    logs = np.log(np.abs(1.0 - complex(lam) * op.eigenvalues) + 1e-300)
    return math.exp(min(700.0, float(np.sum(np.maximum(0.0, logs)))))


def is_characteristic(op: DiscreteOperator, lam: complex, tol: float = CHAR_TOL) -> tuple[bool, float, float]:
    """Threshold test ``|D(lam)| < tol * scale``; returns (flag, |D|, scale)."""
    log_abs, phase, _ = _det_parts(op, lam)
    abs_det = 0.0 if log_abs == -math.inf else math.exp(min(log_abs, 700.0))
    scale = characteristic_scale(op, lam)
    return abs_det < tol * scale, abs_det, scale


def determinant(op: DiscreteOperator, lam: complex, refine: bool = True) -> FredholmData:
    """``det(I - lam W^{1/2} K W^{1/2})`` by pivoted LU in the log domain.

    With ``refine`` the error estimate is the change under doubling the
    panels per unit (requires a source kernel).
    """
    lam = complex(lam)
    log_abs, phase, _ = _det_parts(op, lam)
    det = _compose(log_abs, phase)
    err = math.nan
    if lam == 0:
        err = 0.0
    elif refine and op.source is not None:
        fine = op.refined()
        la2, ph2, _ = _det_parts(fine, lam)
        err = abs(_compose(la2, ph2) - det)
    return FredholmData(lam, det, log_abs, op.rule.n, op.rule.meta(), "discrete_det", err)


def determinant_series_oracle(op: DiscreteOperator, lam: complex, m_max: int) -> complex:
    """Partial sum ``sum_{m <= m_max} (-lam)^m e_m`` of the Fredholm series.

    The coefficients ``e_m`` are elementary symmetric functions of the weighted
    matrix, obtained from the traces ``tr((lam A)^k)`` with Newton's identities.
    """
    if m_max < 0 or m_max > op.size:
        raise ValueError(f"m_max must lie in 0..{op.size}")
    lam = complex(lam)
    if m_max == 0:
        return 1.0 + 0j
    a = lam * op.weighted
    power = a.copy()
    traces = np.empty(m_max + 1, dtype=complex)
    traces[1] = np.trace(power)
    for k in range(2, m_max + 1):
        power = power @ a
        traces[k] = np.trace(power)
    e = np.zeros(m_max + 1, dtype=complex)
    e[0] = 1.0
    for m in range(1, m_max + 1):
        acc = 0j
        for i in range(1, m + 1):
            acc += (-1) ** (i - 1) * e[m - i] * traces[i]
        e[m] = acc / m
    signs = np.array([(-1) ** m for m in range(m_max + 1)])
    return complex(np.sum(signs * e))


# ---------------------------------------------------------------------------
# resolvent and minors


def _node_columns(op: DiscreteOperator, factors):
    lu, piv = factors
    sw = op.rule.sqrt_weights

    def columns(t):
        rhs = op.source.matrix(op.nodes, t)
        return lu_solve((lu, piv), sw[:, None] * rhs, check_finite=False) / sw[:, None]

    return columns


def fredholm_resolvent(op: DiscreteOperator, lam: complex, tol: float = CHAR_TOL) -> ResolventEvaluation:
    """Resolvent kernel as the minor/determinant ratio.

    Expanding the bordered determinant of the first minor, the ratio reduces
    to ``T(s,t) + lam * T(s,X) W (I - lam K W)^{-1} T(X,t)``; the node solve
    uses one LU factorization shared by every query.
    """
    lam = complex(lam)
    if lam == 0:
        return ResolventEvaluation(lam, "fredholm_ratio", op, None, 1.0 + 0j)
    flag, abs_det, scale = is_characteristic(op, lam, tol)
    if flag:
        raise CharacteristicValueError(lam, abs_det, scale)
    log_abs, phase, factors = _det_parts(op, lam)
    return ResolventEvaluation(
        lam, "fredholm_ratio", op, _node_columns(op, factors), _compose(log_abs, phase)
    )


def minor_series(op: DiscreteOperator, lam: complex, s, t, m_max: int = 3) -> np.ndarray:
    """Low-order Fredholm minor series ``sum_{m <= m_max} (-lam)^m / m! B_m(s, t)``.

    ``B_0 = T``, ``c_m = int B_{m-1}(x, x) dx`` and
    ``B_m(s, t) = c_m T(s, t) - m int T(s, x) B_{m-1}(x, t) dx``.
    """
    lam = complex(lam)
    s = np.atleast_1d(np.asarray(s, float))
    t = np.atleast_1d(np.asarray(t, float))
    src = op.source
    w = op.weights
    k = op.matrix
    kw = op.kw
    t_st = src.matrix(s, t)
    t_sx = src.matrix(s, op.nodes) * w[None, :]
    t_xt = src.matrix(op.nodes, t)

    b_st = t_st.copy()
    b_xt = t_xt.copy()
    b_xx = k.copy()
    total = b_st.copy()
    fact = 1.0
    for m in range(1, m_max + 1):
        c = complex(np.sum(w * np.diag(b_xx)))
        new_st = c * t_st - m * (t_sx @ b_xt)
        new_xt = c * t_xt - m * (kw @ b_xt)
        new_xx = c * k - m * (kw @ b_xx)
        b_st, b_xt, b_xx = new_st, new_xt, new_xx
        fact *= m
        total = total + (-lam) ** m / fact * b_st
    return total


def first_minor(op: DiscreteOperator, lam: complex, s, t, route: str = "ratio", m_max: int = 3):
    """First Fredholm minor ``D(s, t | lam)``.

    ``ratio`` returns ``D(lam) R(s, t)``; near a characteristic value it falls
    back to the series route with a warning.
    """
    scalar = np.ndim(s) == 0 and np.ndim(t) == 0
    if route == "ratio":
        try:
            ev = fredholm_resolvent(op, lam)
        except CharacteristicValueError as exc:
            warnings.warn(f"ratio route unavailable ({exc}); using the m<={m_max} series", RuntimeWarning)
            route = "series"
        else:
            out = ev.determinant * ev.matrix(s, t)
    if route == "series":
        out = minor_series(op, lam, s, t, m_max)
    elif route != "ratio":
        raise ValueError(f"unknown route {route!r}")
    return complex(out[0, 0]) if scalar else out


# ---------------------------------------------------------------------------
# characteristic values


def _log_trace_derivative(op: DiscreteOperator, lam: complex) -> complex:
    """``D'(lam) / D(lam) = -tr((I - lam A)^{-1} A)``."""
    a = op.weighted
    sol = np.linalg.solve(_system(op, lam), a)
    return -complex(np.trace(sol))


def _newton(op: DiscreteOperator, lam: complex, max_iter: int = 80) -> tuple[complex, bool]:
    for _ in range(max_iter):
        try:
            g = _log_trace_derivative(op, lam)
        except np.linalg.LinAlgError:
            return lam, True
        if g == 0 or not cmath.isfinite(g):
            return lam, False
        step = -1.0 / g
        lam = lam + step
        if abs(step) <= 1e-14 * max(1.0, abs(lam)):
            return lam, True
    return lam, False


def characteristic_values(
    op: DiscreteOperator,
    box=(-5.0, 5.0, -1.0, 1.0),
    grid=41,
    tol: float = CHAR_TOL,
    exclude_zero: bool = True,
) -> CharacteristicValueSet:
    """Zeros of ``D(lam)`` inside ``box = (re_lo, re_hi, im_lo, im_hi)``.

    Seeds are the local minima of ``|D|`` on a coarse grid together with the
    reciprocals of the discrete eigenvalues that fall in the box; each seed is
    refined by Newton's method on ``log D`` and kept only if it passes the
    characteristic-value threshold.
    """
    re_lo, re_hi, im_lo, im_hi = (float(v) for v in box)
    nx, ny = (grid, grid) if np.isscalar(grid) else tuple(grid)
    xs = np.linspace(re_lo, re_hi, nx)
    ys = np.linspace(im_lo, im_hi, ny) if ny > 1 else np.array([0.5 * (im_lo + im_hi)])
    logd = np.empty((ny, nx))
    for j, y in enumerate(ys):
        for i, x in enumerate(xs):
            logd[j, i] = _det_parts(op, complex(x, y))[0]

    seeds = []
    for j in range(ny):
        for i in range(nx):
            window = logd[max(0, j - 1) : j + 2, max(0, i - 1) : i + 2]
            if logd[j, i] <= window.min():
                seeds.append(complex(xs[i], ys[j]))
    mu = op.eigenvalues
    with np.errstate(divide="ignore"):
        recip = 1.0 / mu[np.abs(mu) > 1e-14]
    seeds.extend(z for z in recip if re_lo <= z.real <= re_hi and im_lo <= z.imag <= im_hi)

    pad_re = 1e-9 * max(1.0, abs(re_lo), abs(re_hi))
    pad_im = 1e-9 * max(1.0, abs(im_lo), abs(im_hi))
    found: list[CharacteristicValue] = []
    for seed in seeds:
        root, ok = _newton(op, seed)
        if not (re_lo - pad_re <= root.real <= re_hi + pad_re and im_lo - pad_im <= root.imag <= im_hi + pad_im):
            continue
        if exclude_zero and abs(root) < 1e-12:
            continue
        flag, abs_det, _ = is_characteristic(op, root, tol)
        if not flag:
            continue
        if any(abs(root - f.value) <= 1e-7 * max(1.0, abs(root)) for f in found):
            continue
        mult = int(np.count_nonzero(np.abs(root * mu - 1.0) < 1e-6)) or 1
        found.append(CharacteristicValue(root, mult, abs_det, ok))
    found.sort(key=lambda c: (round(c.value.real, 9), round(c.value.imag, 9)))
    return CharacteristicValueSet(tuple(found), (re_lo, re_hi, im_lo, im_hi), tol, (nx, ny))
