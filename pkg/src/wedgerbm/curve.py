"""The kernel curve {K(p, q) = 0}.

Over the q-plane the curve has two branches ``P1(q)``, ``P2(q)`` with cuts
``(-inf, q1] U [q2, inf)``; they are labelled so that ``Re P1 <= Re P2``
(``P1(0) = 0``).  The q-branches ``Q1(p)``, ``Q2(p)`` are obtained by the
coordinate swap.  Cut values are limits from ``Im > 0`` unless a caller
passes an argument with imaginary part ``-0.0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ModelError, ModelParams, Wedge, kernel_K

__all__ = [
    "BranchPoints",
    "BranchValue",
    "HyperbolaBranch",
    "UniformizationPoint",
    "DegenerateContour",
    "ZeroArgument",
    "branch_points",
    "branch_P",
    "branch_Q",
    "hyperbola_residual",
    "bvp_contour",
    "contour_side",
    "uniformize",
    "lifted_domain",
    "kernel_residual",
    "contour_points",
]


class DegenerateContour(ModelError):
    pass


class ZeroArgument(ModelError):
    pass


@dataclass(frozen=True)
class BranchPoints:
    q1: float
    q2: float
    p1: float
    p2: float


@dataclass(frozen=True)
class BranchValue:
    first: np.ndarray | complex
    second: np.ndarray | complex


def _real_roots(a: float, b: float, c: float) -> tuple[float, float]:
    """Roots of a x^2 + 2 b x + c with a < 0, c >= 0 (one <= 0 <= other)."""
    disc = math.sqrt(b * b - a * c)
    # cancellation-free: the root with the larger modulus first
    t = -(b + math.copysign(disc, b))
    x1, x2 = t / a, c / t
    return min(x1, x2), max(x1, x2)


def branch_points(params: ModelParams) -> BranchPoints:
    """Zeros of the discriminants of K in p (gives q1, q2) and in q (gives p1, p2)."""
    s1, s2, rho, mu1, mu2 = params.sigma1, params.sigma2, params.rho, params.mu1, params.mu2
    lead = rho * rho - s1 * s2
    q1, q2 = _real_roots(lead, rho * mu1 - s1 * mu2, mu1 * mu1)
    p1, p2 = _real_roots(lead, rho * mu2 - s2 * mu1, mu2 * mu2)
    return BranchPoints(q1=q1, q2=q2, p1=p1, p2=p2)


def _cut_sqrt(z, lo: float, hi: float):
    """sqrt((z - lo)(hi - z)) analytic off (-inf, lo] U [hi, inf), positive on (lo, hi).

    Signed zeros of ``Im z`` select the side of the cut.
    """
    z = np.asarray(z, dtype=complex)
    a = np.empty_like(z)
    a.real = z.real - lo
    a.imag = z.imag
    b = np.empty_like(z)
    b.real = hi - z.real
    b.imag = -z.imag
    return np.sqrt(a) * np.sqrt(b)


def _branches(sig_a, sig_b, rho, mu_a, mu_b, lo, hi, x):
    """Both roots y of sig_a y^2/2 + (rho x + mu_a) y + sig_b x^2/2 + mu_b x = 0."""
    x = np.asarray(x, dtype=complex)
    b = rho * x + mu_a
    s = math.sqrt(sig_a * sig_b - rho * rho) * _cut_sqrt(x, lo, hi)
    prod = (sig_b * x * x + 2.0 * mu_b * x) / sig_a
    m = -b - s
    n = -b + s
    big_m = np.abs(m) >= np.abs(n)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        first = np.where(big_m, m / sig_a, prod / (n / sig_a))
        second = np.where(big_m, prod / (m / sig_a), n / sig_a)
    # both numerators vanish only at x = 0 with mu_a = 0, excluded by validation
    first = np.where(np.isfinite(first), first, m / sig_a)
    second = np.where(np.isfinite(second), second, n / sig_a)
    return first, second


def branch_P(params: ModelParams, q, bp: BranchPoints | None = None) -> BranchValue:
    """Roots ``P1(q)``, ``P2(q)`` of ``K(., q) = 0``, with ``Re P1 <= Re P2``."""
    bp = bp or branch_points(params)
    f, s = _branches(params.sigma1, params.sigma2, params.rho, params.mu1, params.mu2,
                     bp.q1, bp.q2, q)
    if np.ndim(q) == 0:
        return BranchValue(complex(f), complex(s))
    return BranchValue(f, s)


def branch_Q(params: ModelParams, p, bp: BranchPoints | None = None) -> BranchValue:
    """Roots ``Q1(p)``, ``Q2(p)`` of ``K(p, .) = 0``, with ``Re Q1 <= Re Q2``."""
    bp = bp or branch_points(params)
    f, s = _branches(params.sigma2, params.sigma1, params.rho, params.mu2, params.mu1,
                     bp.p1, bp.p2, p)
    if np.ndim(p) == 0:
        return BranchValue(complex(f), complex(s))
    return BranchValue(f, s)


def hyperbola_residual(params: ModelParams, t):
    """Left side of the quadratic equation of the hyperbola carrying P(cuts)."""
    s1, s2, rho, mu1, mu2 = params.sigma1, params.sigma2, params.rho, params.mu1, params.mu2
    t = np.asarray(t, dtype=complex)
    x, y = t.real, t.imag
    return ((rho * rho - s1 * s2) * x * x + rho * rho * y * y
            + 2.0 * (rho * mu2 - mu1 * s2) * x + mu1 * (2.0 * rho * mu2 - s2 * mu1) / s1)


def contour_side(params: ModelParams) -> str | None:
    """Which hyperbola component carries the boundary value problem.

    ``"plus"`` is the right component, ``"minus"`` the left one and ``None``
    the degenerate vertical line (``rho == 0``).
    """
    if params.rho == 0.0:
        return None
    right = params.rho < 0.0
    if params.wedge is Wedge.QUARTER:
        right = not right
    return "plus" if right else "minus"


@dataclass(frozen=True)
class HyperbolaBranch:
    """Upper half of the BVP contour, sampled as ``t = P1(q + i0)``.

    ``q`` runs along the q-cut that carries the contour: ``[q2, q_max]`` in the
    three-quarter plane and ``[q_min, q1]`` (stored in decreasing order, from the
    vertex outward) in the quarter plane.  ``upper`` holds the member of the
    conjugate pair with ``Im >= 0``; its conjugate is implied.
    """

    a: float  # x^2 coefficient of the hyperbola equation
    b: float  # y^2 coefficient
    c: float  # x coefficient
    d: float  # constant term
    side: str | None
    vertex: float
    q: np.ndarray
    upper: np.ndarray
    upper_is_first: bool  # whether ``upper`` is the P1 branch


def _graded_grid(start: float, stop: float, n: int) -> np.ndarray:
    """Grid on [start, stop] clustered quadratically at ``start``."""
    s = np.linspace(0.0, 1.0, n)
    return start + (stop - start) * s * s


def contour_points(params: ModelParams, q, bp: BranchPoints | None = None):
    """``(t, t_bar)`` on the contour for cut values ``q``: ``Im t >= 0``."""
    bp = bp or branch_points(params)
    q = np.asarray(q, dtype=float)
    P = branch_P(params, q + 0j, bp)
    first = np.asarray(P.first)
    second = np.asarray(P.second)
    up = np.where(first.imag >= 0.0, first, second)
    lo = np.where(first.imag >= 0.0, second, first)
    return up, lo


def bvp_contour(params: ModelParams, n_points: int = 200, q_max: float | None = None
                ) -> HyperbolaBranch:
    """Sample the BVP contour.

    In the three-quarter plane the contour is the image of ``[q2, inf)``; in
    the quarter plane, of ``(-inf, q1]``.  ``q_max`` is the distance from the
    branch point along the cut (default ``50 * (q2 - q1)``).
    """
    if n_points < 2:
        raise ModelError("n_points must be >= 2")
    bp = branch_points(params)
    span = 50.0 * (bp.q2 - bp.q1) if q_max is None else q_max
    s1, s2, rho, mu1, mu2 = params.sigma1, params.sigma2, params.rho, params.mu1, params.mu2
    if params.wedge is Wedge.THREE_QUARTER:
        if q_max is not None and q_max <= bp.q2:
            raise DegenerateContour(f"q_max={q_max} must exceed q2={bp.q2}")
        end = span if q_max is not None else bp.q2 + span
        q = _graded_grid(bp.q2, end, n_points)
        qv = bp.q2
    else:
        if q_max is not None and q_max >= bp.q1:
            raise DegenerateContour(f"q_min={q_max} must be below q1={bp.q1}")
        end = q_max if q_max is not None else bp.q1 - span
        q = _graded_grid(bp.q1, end, n_points)
        qv = bp.q1
    up, _ = contour_points(params, q, bp)
    P = branch_P(params, complex(q[-1]), bp)
    upper_is_first = bool(np.isclose(P.first, up[-1]))
    return HyperbolaBranch(
        a=rho * rho - s1 * s2,
        b=rho * rho,
        c=2.0 * (rho * mu2 - mu1 * s2),
        d=mu1 * (2.0 * rho * mu2 - s2 * mu1) / s1,
        side=contour_side(params),
        vertex=-(rho * qv + mu1) / s1,
        q=q,
        upper=up,
        upper_is_first=upper_is_first,
    )


@dataclass(frozen=True)
class UniformizationPoint:
    s: complex
    p_of_s: complex
    q_of_s: complex


def _uniform_pq(params: ModelParams, s, bp: BranchPoints):
    s = np.asarray(s, dtype=complex)
    e = np.exp(1j * params.beta)
    p = 0.5 * (bp.p1 + bp.p2) + 0.25 * (bp.p2 - bp.p1) * (s + 1.0 / s)
    q = 0.5 * (bp.q1 + bp.q2) + 0.25 * (bp.q2 - bp.q1) * (s / e + e / s)
    return p, q


def uniformize(params: ModelParams, s, bp: BranchPoints | None = None):
    """Rational parametrization ``s -> (p(s), q(s))`` of the kernel curve.

    Scalar ``s`` returns a :class:`UniformizationPoint`; arrays return ``(p, q)``.
    """
    bp = bp or branch_points(params)
    if np.any(np.asarray(s) == 0):
        raise ZeroArgument("s must be nonzero")
    p, q = _uniform_pq(params, s, bp)
    if np.ndim(s) == 0:
        return UniformizationPoint(complex(s), complex(p), complex(q))
    return p, q


def lifted_domain(params: ModelParams, omega: complex, bp: BranchPoints | None = None) -> set[str]:
    """Membership of ``omega`` in the lifted domains D1hat, D2hat, Dhat.

    Decided from the sign conditions on ``Re p(e^{i omega})``, ``Re q(e^{i omega})``
    and their sum, together with the vertical strips attached to each domain.
    """
    bp = bp or branch_points(params)
    p, q = _uniform_pq(params, np.exp(1j * complex(omega)), bp)
    x = complex(omega).real
    beta = params.beta
    flags = set()
    if p.real > 0 and math.pi < x < 3 * math.pi:
        flags.add("InD1hat")
    if q.real > 0 and beta - math.pi < x < beta + math.pi:
        flags.add("InD2hat")
    if (p + q).real < 0 and 0 < x < 2 * math.pi:
        flags.add("InDhat")
    return flags


def kernel_residual(params: ModelParams, p, q):
    """|K(p, q)| scaled by the size of its terms."""
    p = np.asarray(p)
    q = np.asarray(q)
    scale = (0.5 * (params.sigma1 * abs(p) ** 2 + 2 * abs(params.rho * p * q)
                    + params.sigma2 * abs(q) ** 2)
             + abs(params.mu1 * p) + abs(params.mu2 * q))
    return np.abs(kernel_K(params, p, q)) / np.maximum(scale, 1e-300)
