"""Conformal gluing function built from the generalized Chebyshev function.

``T_a(x) = cos(a arccos x)`` is analytic on ``C \\ (-inf, -1]``; with the
principal complex ``arccos`` the two sides of ``[1, inf)`` agree because
``cos`` is even, so no extra bookkeeping is needed there.
"""
from __future__ import annotations

import math

import numpy as np

from .curve import BranchPoints, branch_points
from .model import ModelError, ModelParams, Wedge

__all__ = [
    "OnCut",
    "GluingFunction",
    "chebyshev_T",
    "chebyshev_T_algebraic",
    "chebyshev_T_prime",
    "gluing_function",
    "glue_w",
    "glue_w_prime",
]


class OnCut(ModelError):
    pass


def _on_minus_cut(x) -> np.ndarray:
    x = np.asarray(x, dtype=complex)
    return (x.imag == 0.0) & (x.real < -1.0)


def chebyshev_T(a: float, x, check: bool = True):
    """``cos(a arccos x)`` for complex ``x`` off ``(-inf, -1]``."""
    x = np.asarray(x, dtype=complex)
    if check and np.any(_on_minus_cut(x)):
        raise OnCut("T_a is not defined on (-inf, -1)")
    return np.cos(a * np.arccos(x))


def chebyshev_T_algebraic(a: float, x):
    """``((x + sqrt(x^2-1))^a + (x - sqrt(x^2-1))^a) / 2``.

    The square root is taken as ``sqrt(x-1) sqrt(x+1)`` so that
    ``|x + sqrt(x^2-1)| >= 1`` off ``[-1, 1]``; on ``[-1, 1]`` it gives
    ``z = exp(+-i arccos x)`` and both signs yield the same value.
    """
    x = np.asarray(x, dtype=complex)
    if np.any(_on_minus_cut(x)):
        raise OnCut("T_a is not defined on (-inf, -1)")
    z = x + np.sqrt(x - 1.0) * np.sqrt(x + 1.0)
    return 0.5 * (z**a + z ** (-a))


def chebyshev_T_prime(a: float, x):
    """Derivative ``a sin(a t) / sin(t)`` with ``t = arccos x`` (limit ``a^2`` at ``x = 1``)."""
    x = np.asarray(x, dtype=complex)
    if np.any(_on_minus_cut(x)):
        raise OnCut("T_a is not defined on (-inf, -1)")
    t = np.arccos(x)
    small = np.abs(t) < 1e-6
    ts = np.where(small, 1.0, t)
    out = a * np.sin(a * ts) / np.sin(ts)
    # series a^2 (1 - (a^2 - 1) t^2 / 6) near t = 0
    return np.where(small, a * a * (1.0 - (a * a - 1.0) * t * t / 6.0), out)


class GluingFunction:
    """``w(p) = T_a(sign * (2p - (p1 + p2)) / (p2 - p1))`` with ``a = pi / beta``.

    ``sign`` is ``+1`` in the three-quarter plane (cut ``(-inf, p1]``) and
    ``-1`` in the quarter plane (cut ``[p2, inf)``).
    """

    def __init__(self, params: ModelParams, bp: BranchPoints | None = None):
        bp = bp or branch_points(params)
        self.a = math.pi / params.beta
        self.p1 = bp.p1
        self.p2 = bp.p2
        self.orientation_sign = 1.0 if params.wedge is Wedge.THREE_QUARTER else -1.0

    def arg(self, p):
        p = np.asarray(p, dtype=complex)
        return self.orientation_sign * (2.0 * p - (self.p1 + self.p2)) / (self.p2 - self.p1)

    def on_cut(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=complex)
        if self.orientation_sign > 0:
            return (p.imag == 0.0) & (p.real < self.p1)
        return (p.imag == 0.0) & (p.real > self.p2)

    def __call__(self, p):
        if np.any(self.on_cut(p)):
            raise OnCut("p lies on the cut of the gluing function")
        return chebyshev_T(self.a, self.arg(p), check=False)

    def prime(self, p):
        if np.any(self.on_cut(p)):
            raise OnCut("p lies on the cut of the gluing function")
        return (chebyshev_T_prime(self.a, self.arg(p))
                * 2.0 * self.orientation_sign / (self.p2 - self.p1))


def gluing_function(params: ModelParams) -> GluingFunction:
    return GluingFunction(params)


def glue_w(params: ModelParams, p):
    out = GluingFunction(params)(p)
    return complex(out) if np.ndim(p) == 0 else out


def glue_w_prime(params: ModelParams, p):
    out = GluingFunction(params).prime(p)
    return complex(out) if np.ndim(p) == 0 else out
