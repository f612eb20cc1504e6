"""Contour-integral solution of the boundary value problem for A, B and L.

The contour is parametrized by ``tau >= 0`` through the cut variable
``q = q2 + tau**2`` (three-quarter plane) or ``q = q1 - tau**2`` (quarter
plane), with ``t(tau)`` the member of the conjugate pair ``P1, P2`` lying
in the upper half-plane.  Along the contour ``W(tau) = w(t(tau))`` is real
and decreases from ``-1`` to ``-inf``, so the Cauchy integral of the
solution is an integral over a real variable:

    log A(p) = log A(0) + chi-term
               + (1/pi) int theta(tau) W'(tau) [1/(W - w(p)) - 1/(W - w(0))] dtau

where ``theta = arg g(t)`` is unwrapped from ``0`` at the vertex, i.e.
``log(g(t)/g(conj t)) = 2i theta``.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .curve import BranchPoints, branch_P, branch_Q, branch_points, contour_side
from .gluing import GluingFunction
from .model import (
    ModelError,
    ModelParams,
    RawParams,
    Wedge,
    kernel_K,
    mass_constants,
    reflection_u,
    reflection_v,
    swap_params,
    validate_params,
)

__all__ = [
    "DomainTag",
    "TransformValue",
    "ContourTooShort",
    "DomainViolation",
    "NearPole",
    "KernelZero",
    "PoleOfG",
    "BvpSolution",
    "solve",
    "pole_p0",
    "index_chi",
    "g_func",
    "eval_A",
    "eval_B",
    "eval_L",
    "counterpart",
    "comparison_table",
]

log = logging.getLogger(__name__)


class ContourTooShort(ModelError):
    pass


class DomainViolation(ModelError):
    pass


class NearPole(ModelError):
    pass


class KernelZero(ModelError):
    pass


class PoleOfG(ModelError):
    pass


class DomainTag(str, Enum):
    INTERIOR = "Interior"
    BOUNDARY = "Boundary"
    CONTINUED = "Continued"


@dataclass(frozen=True)
class TransformValue:
    value: complex
    domain_tag: DomainTag
    estimated_error: float


# Gauss-Kronrod 7/15 on [-1, 1]
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
_GK_X = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_GK_WK = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GK_WG = np.zeros(15)
_GK_WG[1:15:2] = np.concatenate([_WG[:-1], _WG[::-1]])


def pole_p0(params: ModelParams) -> float:
    """Candidate pole ``2 (mu2 r1 - mu1) / (sigma1 + sigma2 r1^2 - 2 rho r1)`` of A."""
    den = params.sigma1 + params.sigma2 * params.r1**2 - 2.0 * params.rho * params.r1
    return 2.0 * (params.mu2 * params.r1 - params.mu1) / den


def _vertex(params: ModelParams, bp: BranchPoints) -> tuple[float, float]:
    qv = bp.q2 if params.wedge is Wedge.THREE_QUARTER else bp.q1
    return -(params.rho * qv + params.mu1) / params.sigma1, qv


def index_chi(params: ModelParams, bp: BranchPoints | None = None) -> int:
    """Index from the sign of ``u`` at the double point over the contour's branch point."""
    bp = bp or branch_points(params)
    tv, qv = _vertex(params, bp)
    uv = float(reflection_u(params, tv, qv))
    if params.wedge is Wedge.THREE_QUARTER:
        return 0 if uv >= 0.0 else -1
    return 0 if uv <= 0.0 else -1


def _g_branch(params: ModelParams, bp: BranchPoints) -> str:
    """Which q-branch returns the contour's cut value ``q`` at contour points."""
    _, qv = _vertex(params, bp)
    q = qv + (1.0 if params.wedge is Wedge.THREE_QUARTER else -1.0) * (bp.q2 - bp.q1)
    P = branch_P(params, complex(q), bp)
    t = P.first if P.first.imag >= 0 else P.second
    Q = branch_Q(params, t, bp)
    return "first" if abs(Q.first - q) < abs(Q.second - q) else "second"


def g_func(params: ModelParams, p, bp: BranchPoints | None = None, branch: str | None = None):
    """``u(p, Q(p)) / v(p, Q(p))`` along the q-branch that carries the contour.

    In the three-quarter plane this is ``Q2``; in the quarter plane ``Q1``.
    """
    bp = bp or branch_points(params)
    branch = branch or _g_branch(params, bp)
    Q = branch_Q(params, p, bp)
    q = Q.first if branch == "first" else Q.second
    num = reflection_u(params, p, q)
    den = reflection_v(params, p, q)
    if np.any(den == 0):
        raise PoleOfG("v(p, Q(p)) vanishes")
    out = num / den
    return complex(out) if np.ndim(p) == 0 else out


class BvpSolution:
    """Precomputed contour data for evaluating A by quadrature.

    Parameters
    ----------
    params : ModelParams
    tol : float
        Target absolute accuracy of the exponent; governs truncation.
    """

    n_below = 14  # octaves of panels below the natural scale

    def __init__(self, params: ModelParams, tol: float = 1e-10):
        self.params = params
        self.tol = tol
        self.bp = bp = branch_points(params)
        self.glue = GluingFunction(params, bp)
        self.three_quarter = params.wedge is Wedge.THREE_QUARTER
        self.chi = index_chi(params, bp)
        self.p0 = pole_p0(params)
        self.prefactor = mass_constants(params)[0]
        self.vertex, self.q_vertex = _vertex(params, bp)
        self.branch = _g_branch(params, bp)
        self.g_vertex = float(np.real(self._g(self.vertex + 0j)))
        if self.g_vertex == 0.0:
            raise PoleOfG("g vanishes at the contour vertex")
        self.w0 = complex(self.glue(0.0))
        self.w_p0 = None
        if self.chi == -1:
            p0 = self.p0
            if self.glue.on_cut(p0):
                p0 = complex(p0, 1e-300)
                log.warning("pole p0=%g lies on the gluing cut; using the upper limit", self.p0)
            self.w_p0 = complex(self.glue(p0))
        self.scale = math.sqrt(bp.q2 - bp.q1)
        self._build()
        # the jump -2i theta of the Cauchy integral must occur across the image
        # of the upper contour as seen from inside the domain
        self.orientation = self.upper_side()

    # -- contour ---------------------------------------------------------------
    def q_of_tau(self, tau):
        tau = np.asarray(tau, dtype=float)
        return self.q_vertex + (1.0 if self.three_quarter else -1.0) * tau * tau

    def t_of_tau(self, tau):
        q = self.q_of_tau(tau)
        P = branch_P(self.params, q + 0j, self.bp)
        f, s = np.asarray(P.first), np.asarray(P.second)
        return np.where(f.imag >= 0.0, f, s)

    def _dt_dtau(self, tau, t):
        P = self.params
        q = self.q_of_tau(tau)
        kp = P.sigma1 * t + P.rho * q + P.mu1
        kq = P.rho * t + P.sigma2 * q + P.mu2
        dq = (2.0 if self.three_quarter else -2.0) * np.asarray(tau)
        return -kq / kp * dq

    def _g(self, p):
        return g_func(self.params, p, self.bp, self.branch)

    def _theta_raw(self, t):
        return np.angle(self._g(t) / self.g_vertex)

    def _edges(self):
        s = self.scale
        edges = [0.0] + [s * 2.0**k for k in np.arange(-self.n_below, 0.25, 0.5)]
        # extend until the image W is large enough for the analytic tail bound
        while True:
            tau = edges[-1]
            W = float(np.real(self.glue(self.t_of_tau(tau))))
            if abs(W) > 1e12 * (1.0 + abs(self.w0)) or len(edges) > 400:
                break
            edges.append(math.sqrt(2.0) * tau)
        return np.array(edges)

    def _build(self):
        edges = self._edges()
        lo, hi = edges[:-1], edges[1:]
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        tau = (mid[:, None] + half[:, None] * _GK_X[None, :]).ravel()
        self.tau = tau
        self.wk = (half[:, None] * _GK_WK[None, :]).ravel()
        self.wg = (half[:, None] * _GK_WG[None, :]).ravel()
        self.n_panels = len(lo)
        t = self.t_of_tau(tau)
        self.t = t
        Wc = self.glue(t)
        dW = self.glue.prime(t) * self._dt_dtau(tau, t)
        self.gluing_defect = float(np.max(np.abs(Wc.imag) / (1.0 + np.abs(Wc))))
        self.W = Wc.real
        self.dW = dW.real
        raw = self._theta_raw(t)
        theta = np.unwrap(raw)
        jumps = np.abs(np.diff(theta))
        if jumps.size and jumps.max() > 0.5 * math.pi:
            warnings.warn("arg g jumps by more than pi/2 between quadrature nodes; "
                          "the log branch may be unreliable", RuntimeWarning)
        self.theta = theta
        self.edges = edges
        self.tau_max = edges[-1]
        self.W_max = float(np.real(self.glue(self.t_of_tau(self.tau_max))))
        self.theta_max = float(self._theta_at(np.array([self.tau_max]))[0])
        th_half = float(self._theta_at(np.array([0.5 * self.tau_max]))[0])
        self.theta_drift = abs(self.theta_max - th_half)

    def _theta_at(self, tau):
        """theta at arbitrary tau, unwrapped consistently with the node values."""
        tau = np.asarray(tau, dtype=float)
        raw = self._theta_raw(self.t_of_tau(tau))
        ref = np.interp(tau, self.tau, self.theta, left=0.0, right=self.theta[-1])
        return raw + 2.0 * math.pi * np.round((ref - raw) / (2.0 * math.pi))

    def _tau_of_W(self, Wt):
        """Solve W(tau) = Wt (Wt <= -1) by Newton from an interpolated start."""
        Wt = np.asarray(Wt, dtype=float)
        # W decreases along tau; interpolate log(-1 - W) vs tau
        x = np.log(np.maximum(-1.0 - self.W, 1e-300))
        tau = np.interp(np.log(np.maximum(-1.0 - Wt, 1e-300)), x, self.tau)
        for _ in range(8):
            t = self.t_of_tau(tau)
            f = self.glue(t).real - Wt
            with np.errstate(divide="ignore", invalid="ignore"):
                d = (self.glue.prime(t) * self._dt_dtau(tau, t)).real
                step = f / d
            # at the vertex W'(0) = 0 and tau = 0 is already the root
            tau = np.abs(tau - np.where(np.isfinite(step), step, 0.0))
        return tau

    def _panel_sums(self, lo, hi, Z, th):
        """Kronrod and Gauss sums of the integrand on each panel ``[lo, hi]``."""
        half = 0.5 * (hi - lo)
        tau = (0.5 * (hi + lo)[:, None] + half[:, None] * _GK_X[None, :])
        t = self.t_of_tau(tau.ravel())
        W = self.glue(t).real
        dW = (self.glue.prime(t) * self._dt_dtau(tau.ravel(), t)).real
        d = self._theta_at(tau.ravel()) - th
        with np.errstate(divide="ignore", invalid="ignore"):
            f = d * dW * (1.0 / (W - Z) - 1.0 / (W - self.w0))
        f = np.where(np.isfinite(f), f, 0.0).reshape(tau.shape)
        return (f @ _GK_WK) * half, (f @ _GK_WG) * half

    def _adaptive(self, Z, th, max_panels: int = 4000):
        """Bisect panels until each Kronrod-Gauss difference is below its share of tol."""
        lo, hi = self.edges[:-1], self.edges[1:]
        k, g = self._panel_sums(lo, hi, Z, th)
        done_k = done_g = 0.0
        while lo.size:
            width = (hi - lo) / self.tau_max
            ok = np.abs(k - g) <= self.tol * np.maximum(width, 1e-3)
            if lo.size > max_panels:
                ok[:] = True
            done_k += k[ok].sum()
            done_g += g[ok].sum()
            lo, hi = lo[~ok], hi[~ok]
            if not lo.size:
                break
            mid = 0.5 * (lo + hi)
            lo, hi = np.concatenate([lo, mid]), np.concatenate([mid, hi])
            k, g = self._panel_sums(lo, hi, Z, th)
        return done_k, done_g

    # -- Cauchy integral in the W variable -------------------------------------
    def exponent(self, Z, theta_star=None):
        """``(1/pi) int theta W' [1/(W-Z) - 1/(W-w0)] dtau`` and an error estimate.

        ``Z`` may lie on the contour image ``(-inf, -1]`` if it carries a signed
        imaginary part (``+0.0`` or ``-0.0``) choosing the side; ``theta_star``
        then must be the exact ``theta`` at ``W = Re Z``.
        """
        Z = np.atleast_1d(np.asarray(Z, dtype=complex))
        if theta_star is None:
            theta_star = np.zeros(Z.shape)
            on = Z.real < -1.0
            if np.any(on):
                theta_star[on] = self._theta_at(self._tau_of_W(Z.real[on]))
        theta_star = np.atleast_1d(np.asarray(theta_star, dtype=float))
        W = self.W[None, :]
        d = self.theta[None, :] - theta_star[:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            kern = 1.0 / (W - Z[:, None]) - 1.0 / (W - self.w0)
            f = d * self.dW[None, :] * kern
        f = np.where(np.isfinite(f), f, 0.0)
        ik = f @ self.wk
        ig = f @ self.wg
        # the Kronrod-Gauss difference overstates the error by orders of
        # magnitude on resolved panels; refine only clear outliers
        bad = np.abs(ik - ig) > 1e3 * self.tol
        for i in np.flatnonzero(bad):
            ik[i], ig[i] = self._adaptive(Z[i], theta_star[i])
        # analytic tail with theta frozen at its last value
        ratio = (self.W_max - Z) / (self.W_max - self.w0)
        tail = -(self.theta_max - theta_star) * np.log(ratio)
        tail_err = self.theta_drift * np.abs(np.log(ratio)) + 1e-300
        # closed form of int W' [1/(W-Z) - 1/(W-w0)] over [0, inf)
        one_plus = np.empty_like(Z)
        one_plus.real = 1.0 + Z.real
        one_plus.imag = Z.imag
        # separate logs: a quotient would lose the signed zero that selects the side
        closed = -theta_star * (np.log(one_plus) - np.log(1.0 + self.w0))
        val = self.orientation * (ik + tail + closed) / math.pi
        err = (np.abs(ik - ig) + tail_err) / math.pi
        return val, err

    # -- domain ---------------------------------------------------------------
    def contour_x(self, y):
        """Abscissa of the contour component at ordinate ``y``."""
        P = self.params
        y = np.asarray(y, dtype=float)
        a = P.rho**2 - P.sigma1 * P.sigma2
        c = 2.0 * (P.rho * P.mu2 - P.mu1 * P.sigma2)
        d = P.mu1 * (2.0 * P.rho * P.mu2 - P.sigma2 * P.mu1) / P.sigma1 + P.rho**2 * y * y
        disc = np.sqrt(np.maximum(c * c - 4.0 * a * d, 0.0))
        r1 = (-c + disc) / (2.0 * a)
        r2 = (-c - disc) / (2.0 * a)
        if P.rho == 0.0:
            return np.full_like(y, self.vertex)
        # larger root on the right component, smaller on the left
        return np.maximum(r1, r2) if contour_side(P) == "plus" else np.minimum(r1, r2)

    def in_domain(self, p) -> np.ndarray:
        p = np.atleast_1d(np.asarray(p, dtype=complex))
        x = self.contour_x(np.abs(p.imag))
        return p.real > x if self.three_quarter else p.real < x

    # -- A --------------------------------------------------------------------
    def evaluate(self, p, strict: bool = False):
        """A(p) with error estimate and domain tags (vectorized)."""
        p = np.atleast_1d(np.asarray(p, dtype=complex))
        if np.any(self.glue.on_cut(p)):
            raise DomainViolation("p lies on the cut of the gluing function")
        inside = self.in_domain(p)
        if strict and not np.all(inside):
            raise DomainViolation("p lies outside the BVP domain")
        Z = self.glue(p)
        on_image = (np.abs(Z.imag) <= 1e-14 * (1.0 + np.abs(Z))) & (Z.real < -1.0)
        if np.any(on_image & ~inside):
            raise DomainViolation("w(p) lies on the contour image")
        val, err = self.exponent(Z)
        pref = self._pref(Z)
        A = self.prefactor * pref * np.exp(val)
        tags = np.where(inside, DomainTag.INTERIOR.value, DomainTag.CONTINUED.value)
        return A, np.abs(A) * err, tags

    def _pref(self, Z):
        if self.chi == 0:
            return np.ones_like(Z)
        den = Z - self.w_p0
        scale = 1.0 + abs(self.w_p0)
        if np.any(np.abs(den) < 1e-8 * scale):
            raise NearPole("w(p) too close to w(p0)")
        return ((self.w0 - self.w_p0) / den) ** (-self.chi)

    def boundary(self, q):
        """Boundary values ``(A(t), A(conj t))`` from inside the domain, ``q`` on the cut.

        Computed with the Plemelj formula: no quadrature node is required
        near the singular point.
        """
        q = np.atleast_1d(np.asarray(q, dtype=float))
        tau = np.sqrt(np.abs(q - self.q_vertex))
        t = self.t_of_tau(tau)
        Ws = self.glue(t).real
        th = self._theta_at(tau)
        side = self.orientation
        Zu = np.empty(Ws.shape, dtype=complex)
        Zu.real = Ws
        Zu.imag = 0.0 if side > 0 else -0.0
        Zl = np.conj(Zu)
        vu, eu = self.exponent(Zu, th)
        vl, el = self.exponent(Zl, th)
        Au = self.prefactor * self._pref(Ws + 0j) * np.exp(vu)
        Al = self.prefactor * self._pref(Ws + 0j) * np.exp(vl)
        return t, Au, Al, np.abs(Au) * eu, np.abs(Al) * el

    def upper_side(self) -> int:
        """Sign of ``Im w`` just inside the domain next to the upper half of the contour."""
        tau = np.array([self.scale])
        t = self.t_of_tau(tau)[0]
        dt = self._dt_dtau(tau, np.array([t]))[0]
        # inward normal: rotate the tangent (oriented outward along tau)
        n = -1j * dt / abs(dt)
        if not self.in_domain(t + 1e-6 * self.scale * n)[0]:
            n = -n
        return 1 if self.glue(t + 1e-7 * self.scale * n).imag > 0 else -1


def solve(params: ModelParams, tol: float = 1e-10) -> BvpSolution:
    return BvpSolution(params, tol)


_CACHE: dict = {}


def _solution(params: ModelParams, tol: float) -> BvpSolution:
    key = (params, params.wedge, tol)
    sol = _CACHE.get(key)
    if sol is None:
        sol = _CACHE[key] = BvpSolution(params, tol)
    return sol


def eval_A(params: ModelParams, p, tol: float = 1e-10) -> TransformValue:
    sol = _solution(params, tol)
    A, err, tag = sol.evaluate(complex(p))
    if err[0] > max(tol, 1e-14) * max(1.0, abs(A[0])) * 1e4:
        raise ContourTooShort(f"estimated error {err[0]:.3g} exceeds tolerance")
    return TransformValue(complex(A[0]), DomainTag(tag[0]), float(err[0]))


def eval_B(params: ModelParams, q, tol: float = 1e-10) -> TransformValue:
    return eval_A(swap_params(params), q, tol)


def eval_L(params: ModelParams, p, q, tol: float = 1e-10, guard: float = 1e-6) -> TransformValue:
    """L = -(u A + v B) / K away from the kernel curve; L(0, 0) = 1."""
    p, q = complex(p), complex(q)
    if p == 0 and q == 0:
        return TransformValue(1.0 + 0j, DomainTag.INTERIOR, 0.0)
    r = math.hypot(abs(p), abs(q))
    if r < guard:
        # one Richardson step along the ray through (p, q)
        s = guard / r
        v1 = eval_L(params, p * s, q * s, tol).value
        v2 = eval_L(params, p * 2 * s, q * 2 * s, tol).value
        v = 2 * v1 - v2
        lin = v + (v1 - v) * (r / guard)
        return TransformValue(lin, DomainTag.CONTINUED, abs(v1 - v2))
    K = complex(kernel_K(params, p, q))
    Av = eval_A(params, p, tol)
    Bv = eval_B(params, q, tol)
    uA = complex(reflection_u(params, p, q)) * Av.value
    vB = complex(reflection_v(params, p, q)) * Bv.value
    if abs(K) < 1e-10 * (abs(uA) + abs(vB) + 1.0):
        raise KernelZero("(p, q) lies on the kernel curve")
    val = -(uA + vB) / K
    err = (abs(complex(reflection_u(params, p, q))) * Av.estimated_error
           + abs(complex(reflection_v(params, p, q))) * Bv.estimated_error) / abs(K)
    tag = DomainTag.INTERIOR
    if DomainTag.CONTINUED in (Av.domain_tag, Bv.domain_tag):
        tag = DomainTag.CONTINUED
    return TransformValue(val, tag, err)


# -- three-quarter vs quarter plane ----------------------------------------------
def counterpart(params: ModelParams) -> ModelParams:
    """Same covariance and drift in the other wedge, with ergodic reflection slopes.

    The slopes are moved across the ergodicity thresholds ``mu1/mu2`` and
    ``mu2/mu1``: halved for the quarter plane, doubled for the three-quarter
    plane.
    """
    target = Wedge.QUARTER if params.wedge is Wedge.THREE_QUARTER else Wedge.THREE_QUARTER
    k = 0.5 if target is Wedge.QUARTER else 2.0
    raw = RawParams(params.sigma1, params.sigma2, params.rho, params.mu1, params.mu2,
                    k * params.mu1 / params.mu2, k * params.mu2 / params.mu1, target)
    return validate_params(raw)


def _domain_side(sol: BvpSolution) -> str:
    """``"H+"`` if the domain lies right of the contour, ``"H-"`` otherwise."""
    x = float(sol.contour_x(np.array([0.0]))[0])
    probe = x + 0.5 * sol.scale**2 + 1.0
    return "H+" if sol.in_domain(probe)[0] else "H-"


def _column(params: ModelParams) -> dict:
    bp = branch_points(params)
    sol = _solution(params, 1e-10)
    tv, qv = _vertex(params, bp)
    side = contour_side(params)
    # gluing identity on a few contour points
    t = sol.t_of_tau(sol.scale * np.array([0.3, 1.0, 3.0]))
    defect = float(np.max(np.abs(sol.glue(t) - sol.glue(np.conj(t)))
                          / (1.0 + np.abs(sol.glue(t)))))
    p0 = pole_p0(params)
    return {
        "params": params.to_dict(),
        "hyperbola": {"component": {"plus": "H_p^+", "minus": "H_p^-", None: "line"}[side],
                      "rho_sign": int(np.sign(params.rho)), "vertex": tv},
        "bvp_domain": _domain_side(sol),
        "gluing": {"argument_sign": int(sol.glue.orientation_sign),
                   "exponent": sol.glue.a, "p1": bp.p1, "p2": bp.p2,
                   "conjugate_defect": defect},
        "pole": {"p0": p0, "sign": int(np.sign(p0))},
        "index": {"chi": sol.chi, "at": "q2" if qv == bp.q2 else "q1", "q": qv,
                  "u_at_vertex": float(reflection_u(params, tv, qv))},
    }


def comparison_table(params: ModelParams) -> dict:
    """Differences between the two wedges, computed for ``params`` and its counterpart."""
    other = counterpart(params)
    cols = {params.wedge.value: _column(params), other.wedge.value: _column(other)}
    return {"rows": ["hyperbola", "bvp_domain", "gluing", "pole", "index"], "columns": cols}
