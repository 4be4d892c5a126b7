"""Pointwise resolvent-kernel evaluators shared by the Fredholm and Neumann routes."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .quadrature import DiscreteOperator


@dataclass(frozen=True, eq=False)
class ResolventEvaluation:
    """A resolvent-like kernel ``R(s, t)`` at parameter ``lam``.

    Node columns ``C(X, t)`` come from ``columns``; off-grid values use the
    Nystrom extension ``R(s, t) = S(s, t) + lam * sum_j w_j S(s, x_j) C(x_j, t)``
    with ``S`` the source kernel of ``op``. When ``columns`` is ``None`` the
    evaluator is the source kernel itself.
    """

    lam: complex
    method: str
    op: DiscreteOperator
    columns: Callable[[np.ndarray], np.ndarray] | None
    determinant: complex | None = None
    meta: dict = field(default_factory=dict)

    @property
    def source(self):
        return self.op.source

    @property
    def rule(self):
        return self.op.rule

    def matrix(self, s, t) -> np.ndarray:
        """``R(s_i, t_j)`` for all pairs."""
        s = np.atleast_1d(np.asarray(s, float))
        t = np.atleast_1d(np.asarray(t, float))
        base = self.source.matrix(s, t)
        if self.columns is None or self.lam == 0:
            return base
        cols = self.columns(t)
        left = self.source.matrix(s, self.op.nodes) * self.op.weights[None, :]
        return base + self.lam * (left @ cols)

    def __call__(self, s, t):
        s_arr = np.asarray(s, float)
        t_arr = np.asarray(t, float)
        if s_arr.ndim == 0 and t_arr.ndim == 0:
            return complex(self.matrix(s_arr, t_arr)[0, 0])
        s_b, t_b = np.broadcast_arrays(s_arr, t_arr)
        flat_s, flat_t = s_b.ravel(), t_b.ravel()
        # evaluate column-wise to avoid an all-pairs matrix
        uniq_t, inv = np.unique(flat_t, return_inverse=True)
        out = np.empty(flat_s.size, dtype=complex)
        for k, tv in enumerate(uniq_t):
            sel = inv == k
            out[sel] = self.matrix(flat_s[sel], [tv])[:, 0]
        return out.reshape(s_b.shape)

    @property
    def node_matrix(self) -> np.ndarray:
        return self.matrix(self.op.nodes, self.op.nodes)

    def carleman_rows(self, s, x) -> np.ndarray:
        """Samples of ``t|lam(s_i)(x_j) = conj(R(s_i, x_j))``."""
        return np.conj(self.matrix(s, x))

    def carleman_cols(self, t, x) -> np.ndarray:
        """Samples of ``t'|lam(t_i)(x_j) = R(x_j, t_i)``, one row per ``t_i``."""
        return self.matrix(x, t).T

    def describe(self) -> dict:
        out = {"lambda": self.lam, "method": self.method, "rule": self.op.rule.meta()}
        if self.determinant is not None:
            out["determinant"] = self.determinant
        out.update(self.meta)
        return out
