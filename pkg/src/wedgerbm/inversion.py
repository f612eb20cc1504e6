"""Inversion of the transforms along the imaginary axes.

``nu1(z) = (1/2pi) int A(ix) exp(-ixz) dx`` and the two-dimensional analogue
for ``pi``.  The oscillatory integrals use a Filon-type rule: on each panel
the transform is expanded in Legendre polynomials from its values at Gauss
nodes, and the expansion is integrated exactly against the exponential via

    int_{-1}^{1} P_k(s) exp(-i w s) ds = 2 (-i)^k j_k(w)

(``j_k`` the spherical Bessel function).  Beyond the truncation point ``T``
one integration by parts gives the endpoint correction
``(f(T) e^{-iTz} - f(-T) e^{iTz}) / (iz)``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import legendre
from scipy.special import spherical_jn

from .bvp import BvpSolution, DomainTag, _solution
from .curve import branch_points
from .model import ModelError, ModelParams, Wedge, kernel_K, reflection_u, reflection_v, swap_params

__all__ = [
    "SlowDecay",
    "DensityGrid",
    "FourierNodes",
    "fourier_nodes",
    "invert_nu1",
    "invert_nu2",
    "invert_pi",
    "nu_grid",
    "pi_grid",
]

log = logging.getLogger(__name__)

_N = 10
_XI, _OMEGA = legendre.leggauss(_N)
# P_k(xi_j) for k < _N
_PK = np.array([legendre.legval(_XI, np.eye(_N)[k]) for k in range(_N)])


class SlowDecay(ModelError):
    pass


def filon_weights(lo, hi, z):
    """Complex weights ``(len(z), n_panels * _N)`` for ``int f(x) e^{-ixz} dx``."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    z = np.atleast_1d(np.asarray(z, dtype=float))
    h = 0.5 * (hi - lo)
    c = 0.5 * (hi + lo)
    arg = np.abs(h[None, :] * z[:, None])  # (nz, np)
    sgn = np.sign(h[None, :] * z[:, None])
    k = np.arange(_N)
    jk = spherical_jn(k[None, None, :], arg[:, :, None])  # (nz, np, N)
    # j_k is even/odd in its argument
    jk = jk * np.where(k % 2 == 1, sgn[:, :, None], 1.0)
    coef = (2 * k + 1) * (-1j) ** k
    # sum_k (2k+1)(-i)^k j_k(h z) P_k(xi_j)
    s = np.einsum("zpk,kj->zpj", jk * coef, _PK)
    w = (h[None, :, None] * _OMEGA[None, None, :] * s
         * np.exp(-1j * c[None, :] * z[:, None])[:, :, None])
    return w.reshape(len(z), -1)


@dataclass
class FourierNodes:
    """Quadrature nodes on ``[-T, T]`` and the values of the transform there."""

    lo: np.ndarray
    hi: np.ndarray
    x: np.ndarray
    f: np.ndarray
    T: float
    fT: complex
    fmT: complex
    tags: set = field(default_factory=set)

    def weights(self, z):
        """Weights for the nodes plus the two endpoint values, shape ``(nz, n+2)``."""
        z = np.atleast_1d(np.asarray(z, dtype=float))
        W = filon_weights(self.lo, self.hi, z)
        with np.errstate(divide="ignore", invalid="ignore"):
            eT = np.where(z != 0, np.exp(-1j * self.T * z) / (1j * z), 0.0)
            emT = np.where(z != 0, -np.exp(1j * self.T * z) / (1j * z), 0.0)
        return np.concatenate([W, eT[:, None], emT[:, None]], axis=1)

    @property
    def values(self):
        return np.concatenate([self.f, [self.fT, self.fmT]])

    def integrate(self, z):
        return self.weights(z) @ self.values


def _panels(scale: float, T: float):
    """Symmetric panels: uniform near 0, doubling outward up to T."""
    h0 = 0.25 * scale
    edges = list(np.arange(0.0, 8.0 * scale + 0.5 * h0, h0))
    while edges[-1] < T * (1 - 1e-12):
        edges.append(min(2.0 * edges[-1], T))
    e = np.array(edges)
    pos_lo, pos_hi = e[:-1], e[1:]
    lo = np.concatenate([-pos_hi[::-1], pos_lo])
    hi = np.concatenate([-pos_lo[::-1], pos_hi])
    return lo, hi


def _nodes(lo, hi):
    h = 0.5 * (hi - lo)
    c = 0.5 * (hi + lo)
    return (c[:, None] + h[:, None] * _XI[None, :]).ravel()


def _scale(sol: BvpSolution) -> float:
    return max(min(abs(sol.bp.p1), abs(sol.bp.p2)), 1e-3)


def fourier_nodes(sol: BvpSolution, z, tol: float = 1e-5, T_cap: float | None = None
                  ) -> FourierNodes:
    """Grow ``T`` by doubling until the last octave changes the integral by < tol/4.

    Raises
    ------
    SlowDecay
        if the cap is reached while ``|A(iT)|`` still exceeds ``tol``.
    """
    s = _scale(sol)
    T_cap = T_cap or 2.0**16 * s
    z = np.atleast_1d(np.asarray(z, dtype=float))
    T = 16.0 * s

    def build(T):
        lo, hi = _panels(s, T)
        x = _nodes(lo, hi)
        f, _, tags = sol.evaluate(1j * x)
        fe, _, tags_e = sol.evaluate(np.array([1j * T, -1j * T]))
        return FourierNodes(lo, hi, x, f, T, fe[0], fe[1], set(tags) | set(tags_e))

    fn = build(T)
    prev = fn.integrate(z) / (2 * math.pi)
    while True:
        if T >= T_cap:
            if abs(fn.fT) > tol:
                raise SlowDecay(f"|A(iT)|={abs(fn.fT):.3g} > tol at the truncation cap T={T:.3g}")
            log.warning("truncation cap reached at T=%g", T)
            return fn
        T *= 2.0
        fn = build(T)
        cur = fn.integrate(z) / (2 * math.pi)
        if np.max(np.abs(cur - prev)) < 0.25 * tol:
            return fn
        prev = cur


@dataclass
class DensityGrid:
    """Density values on a grid; ``values`` clipped at 0, ``raw`` as computed.

    ``axes`` holds one ``(min, max, step)`` triple per coordinate; the
    points are the cell centers.
    """

    axes: tuple
    values: np.ndarray
    raw: np.ndarray
    diagnostics: dict

    def coords(self, i: int) -> np.ndarray:
        return _centers(*self.axes[i])

    def mass(self) -> float:
        cell = float(np.prod([ax[2] for ax in self.axes]))
        return float(self.values.sum() * cell)


def _centers(lo: float, hi: float, step: float) -> np.ndarray:
    n = max(int(round((hi - lo) / step)), 1)
    return lo + step * (np.arange(n) + 0.5)


def _support_sign(params: ModelParams) -> float:
    """Boundary measures live on the negative half-axes in the three-quarter plane."""
    return -1.0 if params.wedge is Wedge.THREE_QUARTER else 1.0


def _invert_1d(params: ModelParams, z, tol: float, which: str):
    z = np.atleast_1d(np.asarray(z, dtype=float))
    sgn = _support_sign(params)
    if np.any(sgn * z <= 0):
        raise ModelError("z must lie in the support of the boundary measure")
    P = params if which == "A" else swap_params(params)
    sol = _solution(P, min(tol, 1e-10))
    fn = fourier_nodes(sol, z, tol)
    val = np.real(fn.integrate(z)) / (2 * math.pi)
    return val, fn


def invert_nu1(params: ModelParams, z1, tol: float = 1e-5):
    """Density of the boundary measure on the first face at ``z1``."""
    val, _ = _invert_1d(params, z1, tol, "A")
    return float(val[0]) if np.ndim(z1) == 0 else val


def invert_nu2(params: ModelParams, z2, tol: float = 1e-5):
    val, _ = _invert_1d(params, z2, tol, "B")
    return float(val[0]) if np.ndim(z2) == 0 else val


def nu_grid(params: ModelParams, which: str, zmin: float, zmax: float, step: float,
            tol: float = 1e-5) -> DensityGrid:
    """Boundary density (``which`` = "nu1" or "nu2") on cell centers of a grid."""
    z = _centers(zmin, zmax, step)
    val, fn = _invert_1d(params, z, tol, "A" if which == "nu1" else "B")
    mass = float(val.sum() * step)
    diag = {
        "T": fn.T,
        "n_nodes": int(fn.x.size),
        "continued": DomainTag.CONTINUED.value in fn.tags,
        "mass": mass,
        "min_raw": float(val.min()),
    }
    return DensityGrid(((zmin, zmax, step),), np.maximum(val, 0.0), val, diag)


def _L_on_grid(params: ModelParams, fa: np.ndarray, fb: np.ndarray, x, y):
    """L(ix, iy) = -(u A + v B)/K on the tensor grid, with L(0, 0) = 1."""
    p = 1j * np.asarray(x)[:, None]
    q = 1j * np.asarray(y)[None, :]
    K = kernel_K(params, p, q)
    num = reflection_u(params, p, q) * fa[:, None] + reflection_v(params, p, q) * fb[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        L = -num / K
    return np.where(K == 0, 1.0 + 0j, L)


def _in_S(params: ModelParams, z1, z2):
    if params.wedge is Wedge.THREE_QUARTER:
        return (z1 >= 0) | (z2 >= 0)
    return (z1 >= 0) & (z2 >= 0)


def pi_grid(params: ModelParams, x_axis: tuple, y_axis: tuple, tol: float = 1e-4
            ) -> DensityGrid:
    """Interior density on a tensor grid of cell centers, zero outside the wedge."""
    z1 = _centers(*x_axis)
    z2 = _centers(*y_axis)
    sa = _solution(params, min(tol, 1e-10))
    sb = _solution(swap_params(params), min(tol, 1e-10))
    fa = fourier_nodes(sa, z1[z1 != 0], tol)
    fb = fourier_nodes(sb, z2[z2 != 0], tol)
    xa = np.concatenate([fa.x, [fa.T, -fa.T]])
    yb = np.concatenate([fb.x, [fb.T, -fb.T]])
    L = _L_on_grid(params, fa.values, fb.values, xa, yb)
    Wx = fa.weights(z1)
    Wy = fb.weights(z2)
    raw = np.real(Wx @ L @ Wy.T) / (4 * math.pi**2)
    inside = _in_S(params, z1[:, None], z2[None, :])
    raw = np.where(inside, raw, 0.0)
    cell = x_axis[2] * y_axis[2]
    diag = {
        "T": [fa.T, fb.T],
        "continued": DomainTag.CONTINUED.value in (fa.tags | fb.tags),
        "mass": float(np.maximum(raw, 0).sum() * cell),
        "mass_raw": float(raw.sum() * cell),
        "min_raw": float(raw.min()),
    }
    return DensityGrid((tuple(x_axis), tuple(y_axis)), np.maximum(raw, 0.0), raw, diag)


def invert_pi(params: ModelParams, z1: float, z2: float, tol: float = 1e-4) -> float:
    """Interior density at one point; 0 in the complementary quadrant."""
    if not _in_S(params, z1, z2):
        return 0.0
    g = pi_grid(params, (z1 - 0.5, z1 + 0.5, 1.0), (z2 - 0.5, z2 + 0.5, 1.0), tol)
    return float(g.raw[0, 0])
