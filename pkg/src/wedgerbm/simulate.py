"""Euler simulation of the reflected diffusion and empirical transforms.

The free move ``z + mu dt + Sigma^{1/2} sqrt(dt) xi`` is followed, on exit,
by an oblique push along the reflection vector of the face that was
crossed.  In the three-quarter plane the only way out is into the open
negative quadrant; the face is the one whose coordinate changed sign last
along the straight segment.  Near the corner the increment is resampled.

The push magnitude is the normal component of the displacement, so the
long-run local-time rates estimate ``A(0)`` and ``B(0)`` directly.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numba
import numpy as np

from .model import ModelError, ModelParams, Wedge, kernel_K, reflection_u, reflection_v

__all__ = [
    "CornerPolicy",
    "CornerRejection",
    "Scheme",
    "HistogramSpec",
    "SimConfig",
    "PathState",
    "StuckAtBoundary",
    "EmpiricalMeasures",
    "EmpiricalTransform",
    "step",
    "run",
    "empirical_transform",
    "validation_report",
    "default_panel",
]


class StuckAtBoundary(ModelError):
    pass


class CornerRejection(ModelError):
    pass


class CornerPolicy(str, Enum):
    """``refine``: sub-steps near the corner.  ``reject``: resample increments
    that leave the wedge from within ``sqrt(dt)`` of the corner."""

    REFINE = "refine"
    REJECT = "reject"


class Scheme(str, Enum):
    """``projected``: push back at the end of the step.  ``bridge``: also sample
    the minimum of the Brownian bridge of the normal coordinate (removes the
    O(sqrt(dt)) boundary bias of the plain projection)."""

    PROJECTED = "projected"
    BRIDGE = "bridge"


@dataclass(frozen=True)
class HistogramSpec:
    """Square box ``[-half_width, half_width]^2`` with square bins."""

    half_width: float = 30.0
    bin_width: float = 0.25

    @property
    def n(self) -> int:
        return int(round(2 * self.half_width / self.bin_width))

    @property
    def centers(self) -> np.ndarray:
        return -self.half_width + self.bin_width * (np.arange(self.n) + 0.5)


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-3
    horizon: float = 1e4
    burn_in: float | None = None  # default 10% of the horizon
    n_paths: int = 32
    seed: int = 0
    corner_policy: CornerPolicy = CornerPolicy.REFINE
    scheme: Scheme = Scheme.BRIDGE
    hist: HistogramSpec = field(default_factory=HistogramSpec)
    batches_per_path: int | None = None  # default: enough for >= 32 batches
    #: abscissas x, y of the imaginary points (ix, iy) whose transforms are accumulated exactly
    panel_x: tuple = (-2.0, -1.0, 0.0, 1.0, 2.0)
    panel_y: tuple = (-2.0, -1.0, 0.0, 1.0, 2.0)

    def __post_init__(self):
        if not self.dt > 0:
            raise ModelError("dt must be > 0")
        if not self.n_paths >= 1:
            raise ModelError("n_paths must be >= 1")
        if not self.burn < self.horizon:
            raise ModelError("burn_in must be smaller than the horizon")

    @property
    def burn(self) -> float:
        return 0.1 * self.horizon if self.burn_in is None else self.burn_in

    @property
    def n_batches_per_path(self) -> int:
        if self.batches_per_path is not None:
            return max(int(self.batches_per_path), 1)
        return max(1, -(-32 // self.n_paths))


@dataclass(frozen=True)
class PathState:
    z1: float
    z2: float
    l1: float = 0.0
    l2: float = 0.0


def _sqrt_cov(params: ModelParams):
    c = np.linalg.cholesky(np.array([[params.sigma1, params.rho], [params.rho, params.sigma2]]))
    return c[0, 0], c[1, 0], c[1, 1]


@numba.njit(cache=True, nogil=True)
def _push(z1, z2, n1, n2, r1, r2, three_quarter):
    """Return (n1, n2, d1, d2, ok) after oblique reflection of a free move."""
    d1 = 0.0
    d2 = 0.0
    if three_quarter:
        if n1 < 0.0 and n2 < 0.0:
            if z2 < 0.0:
                face = 2
            elif z1 < 0.0:
                face = 1
            else:
                s1 = z1 / (z1 - n1)
                s2 = z2 / (z2 - n2)
                face = 1 if s2 >= s1 else 2
            if face == 1:
                d1 = -n2
                n1 += r1 * d1
                n2 = 0.0
            else:
                d2 = -n1
                n2 += r2 * d2
                n1 = 0.0
        return n1, n2, d1, d2, True
    for _ in range(16):
        if n2 < 0.0:
            e = -n2
            d1 += e
            n1 += r1 * e
            n2 = 0.0
        if n1 < 0.0:
            e = -n1
            d2 += e
            n2 += r2 * e
            n1 = 0.0
        if n1 >= 0.0 and n2 >= 0.0:
            return n1, n2, d1, d2, True
    return n1, n2, d1, d2, False


@numba.njit(cache=True, nogil=True)
def _bridge_push(a, b, var, u):
    """Local time needed to keep a 1-d bridge from ``a`` to ``b`` nonnegative.

    Uses the exact law of the bridge minimum: ``(a + b - sqrt((b-a)^2 - 2 var log u))/2``.
    """
    if a > 0.0 and b > 0.0 and 2.0 * a * b > 40.0 * var:
        return 0.0
    mn = 0.5 * (a + b - math.sqrt((b - a) ** 2 - 2.0 * var * math.log(u)))
    return -mn if mn < 0.0 else 0.0


@numba.njit(cache=True, nogil=True)
def _move(z1, z2, g1, g2, u1, u2, dt, mu1, mu2, a11, a21, a22, r1, r2, three_quarter, bridge,
          reject):
    """One step; returns (n1, n2, d1, d2, status) with status 0 ok, 1 corner, 2 stuck."""
    sq = math.sqrt(dt)
    n1 = z1 + mu1 * dt + sq * a11 * g1
    n2 = z2 + mu2 * dt + sq * (a21 * g1 + a22 * g2)
    d1 = 0.0
    d2 = 0.0
    if bridge:
        v1 = a11 * a11 * dt
        v2 = (a21 * a21 + a22 * a22) * dt
        if three_quarter:
            if z1 < 0.0 and z2 >= 0.0:
                d1 = _bridge_push(z2, n2, v2, u1)
                n2 += d1
                n1 += r1 * d1
            elif z2 < 0.0 and z1 >= 0.0:
                d2 = _bridge_push(z1, n1, v1, u2)
                n1 += d2
                n2 += r2 * d2
        else:
            d1 = _bridge_push(z2, n2, v2, u1)
            n2 += d1
            n1 += r1 * d1
            d2 = _bridge_push(z1, n1, v1, u2)
            n1 += d2
            n2 += r2 * d2
    out = (n1 < 0.0 and n2 < 0.0) if three_quarter else (n1 < 0.0 or n2 < 0.0)
    if out:
        if reject and abs(z1) < sq and abs(z2) < sq:
            return z1, z2, 0.0, 0.0, 1
        n1, n2, e1, e2, ok = _push(z1, z2, n1, n2, r1, r2, three_quarter)
        if not ok:
            return n1, n2, d1, d2, 2
        d1 += e1
        d2 += e2
    return n1, n2, d1, d2, 0


#: sub-step levels below dt used by the refining corner policy (factor 16 each)
_LEVELS = 3
_FINE = 16**_LEVELS


@numba.njit(cache=True, nogil=True)
def _advance(state, nsteps, xi, pos, dt, mu1, mu2, a11, a21, a22, r1, r2, three_quarter,
             bridge, refine, record, lo, width, n, H1, H2, B1, B2, xs, ys, T1, T2, TA, TB, acc):
    """Advance one path by up to ``nsteps`` steps of length ``dt`` using draws from ``xi``.

    ``xi`` rows are two standard normals and two uniforms per (sub-)step.
    With ``refine`` a step starting within ``3 sqrt(h)`` of the corner is cut
    into 16 sub-steps, recursively down to ``dt / 16**_LEVELS``; otherwise
    such steps landing outside are resampled.
    ``state`` = [z1, z2, l1, l2]; ``acc`` = [rejections, overflow, sum z1, sum z2,
    local time 1, local time 2, stuck].  Returns (steps done, new pos).
    """
    z1, z2, l1, l2 = state[0], state[1], state[2], state[3]
    m = xi.shape[1]
    nx = xs.shape[0]
    ny = ys.shape[0]
    ex = np.empty(nx, dtype=np.complex128)
    ey = np.empty(ny, dtype=np.complex128)
    h_min = dt / _FINE
    done = 0
    while done < nsteps and pos + 2 * _FINE < m:
        rem = _FINE  # remaining time in units of h_min
        while rem > 0:
            k = _FINE
            if refine:
                while k > 1 and (rem % k != 0 or (abs(z1) < 3.0 * math.sqrt(k * h_min)
                                                  and abs(z2) < 3.0 * math.sqrt(k * h_min))):
                    k //= 16
            h = k * h_min
            n1, n2, d1, d2, status = _move(z1, z2, xi[0, pos], xi[1, pos], xi[2, pos], xi[3, pos],
                                           h, mu1, mu2, a11, a21, a22, r1, r2, three_quarter,
                                           bridge, not refine)
            pos += 1
            if status == 1:
                acc[0] += 1.0
                if pos >= m:
                    acc[6] = 1.0
                    break
                continue
            if status == 2:
                acc[6] = 1.0
                break
            # local time accrues along the step: attribute it to the midpoint
            # of the tangential coordinate, not to its pushed end value
            m1 = 0.5 * (z1 + n1)
            m2 = 0.5 * (z2 + n2)
            z1, z2 = n1, n2
            l1 += d1
            l2 += d2
            rem -= k
            if record and (d1 > 0.0 or d2 > 0.0):
                if d1 > 0.0:
                    acc[4] += d1
                    zb = min(m1, 0.0) if three_quarter else max(m1, 0.0)
                    b = int(math.floor((zb - lo) / width))
                    if 0 <= b < n:
                        B1[b] += d1
                    for a in range(nx):
                        TA[a] += d1 * complex(math.cos(xs[a] * zb), math.sin(xs[a] * zb))
                if d2 > 0.0:
                    acc[5] += d2
                    zb = min(m2, 0.0) if three_quarter else max(m2, 0.0)
                    b = int(math.floor((zb - lo) / width))
                    if 0 <= b < n:
                        B2[b] += d2
                    for a in range(ny):
                        TB[a] += d2 * complex(math.cos(ys[a] * zb), math.sin(ys[a] * zb))
        if acc[6] != 0.0:
            break
        done += 1
        if record:
            in1 = z1 <= z2 and (z2 >= 0.0 or not three_quarter)
            i = int(math.floor((z1 - lo) / width))
            j = int(math.floor((z2 - lo) / width))
            if 0 <= i < n and 0 <= j < n:
                if in1:
                    H1[i, j] += 1.0
                else:
                    H2[i, j] += 1.0
            else:
                acc[1] += 1.0
            acc[2] += z1
            acc[3] += z2
            for a in range(nx):
                ex[a] = complex(math.cos(xs[a] * z1), math.sin(xs[a] * z1))
            for b in range(ny):
                ey[b] = complex(math.cos(ys[b] * z2), math.sin(ys[b] * z2))
            if in1:
                for a in range(nx):
                    for b in range(ny):
                        T1[a, b] += ex[a] * ey[b]
            else:
                for a in range(nx):
                    for b in range(ny):
                        T2[a, b] += ex[a] * ey[b]
    state[0], state[1], state[2], state[3] = z1, z2, l1, l2
    return done, pos


def step(params: ModelParams, state: PathState, dt: float, gaussian_increment,
         reflect: bool = True, scheme: "Scheme | str" = "projected", uniforms=(0.5, 0.5)
         ) -> PathState:
    """One Euler step from ``state`` with standard normal pair ``gaussian_increment``.

    Raises
    ------
    StuckAtBoundary
        if the push does not return the state to the wedge.
    CornerRejection
        if the step lands in the corner region (the caller should resample).
    """
    a11, a21, a22 = _sqrt_cov(params)
    g1, g2 = gaussian_increment
    if not reflect:
        sq = math.sqrt(dt)
        return PathState(state.z1 + params.mu1 * dt + sq * a11 * g1,
                         state.z2 + params.mu2 * dt + sq * (a21 * g1 + a22 * g2),
                         state.l1, state.l2)
    n1, n2, d1, d2, status = _move(
        float(state.z1), float(state.z2), float(g1), float(g2), float(uniforms[0]),
        float(uniforms[1]), float(dt), params.mu1, params.mu2, a11, a21, a22,
        params.r1, params.r2, params.wedge is Wedge.THREE_QUARTER, Scheme(scheme) is Scheme.BRIDGE,
        True)
    if status == 1:
        raise CornerRejection("corner region: resample the increment")
    if status == 2:
        raise StuckAtBoundary("oblique push did not re-enter the wedge")
    return PathState(n1, n2, state.l1 + d1, state.l2 + d2)


@dataclass
class EmpiricalMeasures:
    """Per-batch occupation fractions and local-time densities.

    ``h1``/``h2`` are (batch, i, j) fractions of recorded time spent in each
    cell of S1 and S2; ``b1``/``b2`` are (batch, i) local-time increments per
    unit time (so ``b1[k].sum()`` estimates ``A(0)``).
    """

    params: ModelParams
    config: SimConfig
    h1: np.ndarray
    h2: np.ndarray
    b1: np.ndarray
    b2: np.ndarray
    overflow: np.ndarray
    mean_z: np.ndarray  # (batch, 2)
    lt_rate: np.ndarray  # (batch, 2)
    rejections: int
    steps: int
    t1: np.ndarray | None = None  # (batch, nx, ny) exact transform sums over S1
    t2: np.ndarray | None = None
    ta: np.ndarray | None = None  # (batch, nx)
    tb: np.ndarray | None = None  # (batch, ny)

    @property
    def n_batches(self) -> int:
        return self.h1.shape[0]

    @property
    def centers(self) -> np.ndarray:
        return self.config.hist.centers

    def _mean_se(self, x):
        x = np.asarray(x)
        m = x.mean(axis=0)
        se = x.std(axis=0, ddof=1) / math.sqrt(x.shape[0]) if x.shape[0] > 1 else np.full_like(m, np.nan)
        return m, se

    def boundary_masses(self):
        """Estimates of ``(A(0), B(0))`` and their standard errors."""
        return self._mean_se(self.lt_rate)

    def density(self):
        """Interior density on the fine grid (time fraction / cell area)."""
        area = self.config.hist.bin_width ** 2
        m, se = self._mean_se((self.h1 + self.h2).astype(float) / area)
        return m, se

    def coarse_density(self, factor: int):
        """Density averaged over ``factor x factor`` blocks of fine cells, with SE."""
        h = (self.h1 + self.h2).astype(float)
        nb, n, _ = h.shape
        k = n // factor
        h = h[:, :k * factor, :k * factor].reshape(nb, k, factor, k, factor).sum(axis=(2, 4))
        area = (self.config.hist.bin_width * factor) ** 2
        m, se = self._mean_se(h / area)
        c = self.centers[:k * factor].reshape(k, factor).mean(axis=1)
        return c, m, se


@dataclass(frozen=True)
class EmpiricalTransform:
    p: complex
    q: complex
    L: complex
    L1: complex
    L2: complex
    A: complex
    B: complex
    se_L: float
    se_L1: float
    se_L2: float
    se_A: float
    se_B: float
    batches: dict = field(default_factory=dict, compare=False, repr=False)


def _threads() -> int:
    env = os.environ.get("RBM_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _draws(rng, chunk: int) -> np.ndarray:
    buf = np.empty((4, chunk))
    buf[:2] = rng.standard_normal((2, chunk))
    # uniforms in (0, 1]: log(u) stays finite
    buf[2:] = 1.0 - rng.random((2, chunk))
    return buf


def _run_path(params: ModelParams, config: SimConfig, path: int):
    hs = config.hist
    n = hs.n
    lo = -hs.half_width
    a11, a21, a22 = _sqrt_cov(params)
    tq = params.wedge is Wedge.THREE_QUARTER
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(config.seed, spawn_key=(path,))))
    chunk = 1 << 18
    buf = _draws(rng, chunk)
    pos = 0
    bridge = Scheme(config.scheme) is Scheme.BRIDGE
    state = np.zeros(4)
    acc = np.zeros(7)
    # start on the positive diagonal, away from the corner
    state[0] = state[1] = 1.0
    n_burn = int(round(config.burn / config.dt))
    n_rec = int(round((config.horizon - config.burn) / config.dt))
    nbp = config.n_batches_per_path
    sizes = [n_rec // nbp + (1 if k < n_rec % nbp else 0) for k in range(nbp)]
    dummy2 = np.zeros((1, 1))
    dummy1 = np.zeros(1)
    out = []
    rejections = 0

    refine = CornerPolicy(config.corner_policy) is CornerPolicy.REFINE
    xs = np.asarray(config.panel_x, dtype=float)
    ys = np.asarray(config.panel_y, dtype=float)

    def advance(count, record, H1, H2, B1, B2, T1, T2, TA, TB):
        nonlocal buf, pos
        left = count
        while left > 0:
            done, pos = _advance(state, left, buf, pos, config.dt, params.mu1, params.mu2,
                                 a11, a21, a22, params.r1, params.r2, tq, bridge, refine, record,
                                 lo, hs.bin_width, n, H1, H2, B1, B2, xs, ys, T1, T2, TA, TB, acc)
            if acc[6]:
                raise StuckAtBoundary(f"path {path}: oblique push did not re-enter the wedge")
            left -= done
            if pos + 2 * _FINE >= buf.shape[1]:
                buf = _draws(rng, chunk)
                pos = 0

    c2 = np.zeros((1, 1), dtype=complex)
    c1 = np.zeros(1, dtype=complex)
    advance(n_burn, False, dummy2, dummy2, dummy1, dummy1, c2, c2, c1, c1)
    for size in sizes:
        H1 = np.zeros((n, n))
        H2 = np.zeros((n, n))
        B1 = np.zeros(n)
        B2 = np.zeros(n)
        T1 = np.zeros((xs.size, ys.size), dtype=complex)
        T2 = np.zeros((xs.size, ys.size), dtype=complex)
        TA = np.zeros(xs.size, dtype=complex)
        TB = np.zeros(ys.size, dtype=complex)
        acc[:6] = 0.0
        advance(size, True, H1, H2, B1, B2, T1, T2, TA, TB)
        T = size * config.dt
        out.append({
            "h1": (H1 / size).astype(np.float32),
            "h2": (H2 / size).astype(np.float32),
            "b1": B1 / T,
            "b2": B2 / T,
            "overflow": acc[1] / size,
            "mean_z": (acc[2] / size, acc[3] / size),
            "lt_rate": (acc[4] / T, acc[5] / T),
            "t1": T1 / size,
            "t2": T2 / size,
            "ta": TA / T,
            "tb": TB / T,
        })
        rejections += int(acc[0])
    return out, rejections, n_burn + n_rec


def run(params: ModelParams, config: SimConfig | None = None) -> EmpiricalMeasures:
    """Simulate ``n_paths`` independent paths and collect batch statistics.

    Paths run concurrently (``RBM_THREADS`` caps the workers) and are merged
    in path order, so results are bit-identical for a fixed seed.
    """
    config = config or SimConfig()
    workers = min(_threads(), config.n_paths)
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            results = list(ex.map(lambda i: _run_path(params, config, i), range(config.n_paths)))
    else:
        results = [_run_path(params, config, i) for i in range(config.n_paths)]
    batches = [b for res, _, _ in results for b in res]
    def stack(key):
        return np.stack([np.asarray(b[key]) for b in batches])

    return EmpiricalMeasures(
        params=params,
        config=config,
        h1=stack("h1"),
        h2=stack("h2"),
        b1=stack("b1"),
        b2=stack("b2"),
        overflow=stack("overflow"),
        mean_z=stack("mean_z"),
        lt_rate=stack("lt_rate"),
        t1=stack("t1"),
        t2=stack("t2"),
        ta=stack("ta"),
        tb=stack("tb"),
        rejections=sum(r for _, r, _ in results),
        steps=sum(s for _, _, s in results),
    )


def _phase(c: np.ndarray, x: float, width: float) -> np.ndarray:
    """Cell average of exp(i x z) over bins centered at ``c``."""
    return np.exp(1j * x * c) * np.sinc(x * width / (2 * math.pi))


def _se_complex(v: np.ndarray) -> float:
    if v.size < 2:
        return float("nan")
    return float(math.sqrt((v.real.var(ddof=1) + v.imag.var(ddof=1)) / v.size))


def _panel_index(values, x: float):
    for k, v in enumerate(values):
        if abs(v - x) <= 1e-12 * max(1.0, abs(x)):
            return k
    return None


def empirical_transform(measures: EmpiricalMeasures, p: complex, q: complex) -> EmpiricalTransform:
    """Histogram-weighted Fourier sums at purely imaginary ``(p, q)``."""
    p, q = complex(p), complex(q)
    if p.real != 0 or q.real != 0:
        raise ModelError("p and q must be purely imaginary")
    cfg = measures.config
    ix = _panel_index(cfg.panel_x, p.imag)
    iy = _panel_index(cfg.panel_y, q.imag)
    if ix is not None and iy is not None and measures.t1 is not None:
        L1 = measures.t1[:, ix, iy]
        L2 = measures.t2[:, ix, iy]
        A = measures.ta[:, ix]
        B = measures.tb[:, iy]
    else:
        # histogram fallback, cell averages of the exponential
        c = measures.centers
        w = cfg.hist.bin_width
        ex = _phase(c, p.imag, w)
        ey = _phase(c, q.imag, w)
        L1 = np.einsum("i,bij,j->b", ex, measures.h1.astype(float), ey)
        L2 = np.einsum("i,bij,j->b", ex, measures.h2.astype(float), ey)
        A = measures.b1 @ ex
        B = measures.b2 @ ey
    L = L1 + L2
    return EmpiricalTransform(
        p, q, complex(L.mean()), complex(L1.mean()), complex(L2.mean()),
        complex(A.mean()), complex(B.mean()),
        _se_complex(L), _se_complex(L1), _se_complex(L2), _se_complex(A), _se_complex(B),
        batches={"L": L, "L1": L1, "L2": L2, "A": A, "B": B},
    )


def default_panel(n: int = 5, extent: float = 2.0):
    """The ``n x n`` grid of imaginary points ``(ix, iy)`` with ``|x|, |y| <= extent``."""
    g = np.linspace(-extent, extent, n)
    return [(1j * x, 1j * y) for x in g for y in g]


def validation_report(params: ModelParams, measures: EmpiricalMeasures, tol: float = 1e-8,
                      panel=None, n_sigma: float = 3.0, density: bool = False,
                      density_box: float = 4.0, coarse_width: float = 0.5) -> dict:
    """Compare the simulation with the analytic pipeline on a panel of imaginary points.

    Per point: (i) ``|K Lhat + u A + v B|`` against ``n_sigma`` standard errors
    with analytic A, B; (ii) ``F1 = K Lhat1 + u A`` against ``F2 = -K Lhat2 - v B``;
    (iii) the purely empirical residual ``|K Lhat + u Ahat + v Bhat|``.
    With ``density=True`` the inverted density is compared with coarse
    histogram bins.
    """
    from .bvp import ModelError as _ME, eval_A, eval_B  # local: heavy setup

    if panel is None:
        cfg = measures.config
        panel = [(1j * x, 1j * y) for x in cfg.panel_x for y in cfg.panel_y]
    rows = []
    for p, q in panel:
        et = empirical_transform(measures, p, q)
        K = complex(kernel_K(params, p, q))
        u = complex(reflection_u(params, p, q))
        v = complex(reflection_v(params, p, q))
        row = {"x": p.imag, "y": q.imag}
        try:
            Av = eval_A(params, p, tol)
            Bv = eval_B(params, q, tol)
            a, b = Av.value, Bv.value
            an_err = abs(u) * Av.estimated_error + abs(v) * Bv.estimated_error
            res_b = K * et.batches["L"] + u * a + v * b
            se = math.hypot(_se_complex(res_b), an_err)
            F1 = K * et.batches["L1"] + u * a
            F2 = -K * et.batches["L2"] - v * b
            se_f = math.hypot(_se_complex(F1 - F2), an_err)
            res = abs(res_b.mean())
            dF = abs((F1 - F2).mean())
            row.update(residual=res, se=se, ok=bool(res <= n_sigma * se or (p == 0 and q == 0)),
                       F1=complex(F1.mean()), F2=complex(F2.mean()), F_diff=dF, F_se=se_f,
                       F_ok=bool(dF <= n_sigma * se_f or (p == 0 and q == 0)),
                       tags=[Av.domain_tag.value, Bv.domain_tag.value])
        except _ME as exc:
            row.update(ok=False, F_ok=False, error=f"{type(exc).__name__}: {exc}")
        emp = K * et.batches["L"] + u * et.batches["A"] + v * et.batches["B"]
        e_se = _se_complex(emp)
        row.update(empirical_residual=abs(emp.mean()), empirical_se=e_se,
                   empirical_ok=bool(abs(emp.mean()) <= n_sigma * e_se or (p == 0 and q == 0)))
        rows.append(row)
    m, se = measures.boundary_masses()
    from .model import mass_constants

    a0, b0 = mass_constants(params)
    report = {
        "n_points": len(rows),
        "passed": sum(r["ok"] for r in rows),
        "F_passed": sum(r["F_ok"] for r in rows),
        "empirical_passed": sum(r["empirical_ok"] for r in rows),
        "rows": rows,
        "boundary_mass": {"A0": a0, "B0": b0, "A0_hat": float(m[0]), "B0_hat": float(m[1]),
                          "se": [float(se[0]), float(se[1])]},
        "rejections": measures.rejections,
        "overflow": float(measures.overflow.mean()),
    }
    if density:
        factor = max(1, int(round(coarse_width / measures.config.hist.bin_width)))
        report["density"] = density_comparison(params, measures, density_box, factor)
    return report


def density_comparison(params: ModelParams, measures: EmpiricalMeasures, box: float = 4.0,
                       factor: int = 2, tol: float = 1e-4, n_sigma: float = 3.0) -> dict:
    """Inverted density against the Monte Carlo histogram on coarse bins inside the wedge."""
    from .inversion import ModelError as _ME, pi_grid

    c, m, se = measures.coarse_density(factor)
    w = measures.config.hist.bin_width * factor
    sel = np.abs(c) < box
    cs = c[sel]
    m = m[np.ix_(sel, sel)]
    se = se[np.ix_(sel, sel)]
    fine = min(measures.config.hist.bin_width, 0.1)
    sub = int(round(w / fine))
    lo = cs[0] - w / 2
    hi = cs[-1] + w / 2
    try:
        g = pi_grid(params, (lo, hi, fine), (lo, hi, fine), tol)
    except _ME as exc:
        return {"ok": False, "error": f"{type(exc).__name__}: {exc}"}
    k = len(cs)
    inv = g.raw[:k * sub, :k * sub].reshape(k, sub, k, sub).mean(axis=(1, 3))
    c1 = cs[:, None] + 0 * cs[None, :]
    c2 = cs[None, :] + 0 * cs[:, None]
    tq = params.wedge is Wedge.THREE_QUARTER
    # bins entirely inside the wedge
    inside = ((c1 - w / 2 >= 0) | (c2 - w / 2 >= 0)) if tq else ((c1 - w / 2 >= 0) & (c2 - w / 2 >= 0))
    comb = np.sqrt(se**2 + tol**2)
    ok = np.abs(inv - m) <= n_sigma * comb
    n_in = int(inside.sum())
    n_ok = int((ok & inside).sum())
    return {
        "n_bins": n_in,
        "n_within": n_ok,
        "fraction": n_ok / max(n_in, 1),
        "ok": n_ok >= 0.9 * n_in,
        "max_abs_diff": float(np.abs(inv - m)[inside].max()),
        "mass_inverted": g.diagnostics["mass_raw"],
        "continued": g.diagnostics["continued"],
    }
