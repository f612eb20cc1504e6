"""Model parameters, the kernel polynomial and the reflection polynomials.

Everything downstream reads its symbols from :class:`ModelParams`.  The
kernel ``K`` and the reflection polynomials ``u``, ``v`` accept scalars or
numpy arrays (real or complex) and broadcast.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from enum import Enum
from pathlib import Path

import numpy as np

__all__ = [
    "Wedge",
    "RawParams",
    "ModelParams",
    "ModelError",
    "NotElliptic",
    "NotErgodic",
    "NonPositiveVariance",
    "NonPositiveReflection",
    "DegenerateReflection",
    "validate_params",
    "kernel_K",
    "reflection_u",
    "reflection_v",
    "mass_constants",
    "swap_params",
    "load_params",
    "REFERENCE",
]

#: relative margin used for every strict inequality of the validation
MARGIN = 1e-12


class Wedge(str, Enum):
    THREE_QUARTER = "three_quarter"
    QUARTER = "quarter"


class ModelError(ValueError):
    """Base class for domain errors raised by the library."""


class NotElliptic(ModelError):
    pass


class NotErgodic(ModelError):
    pass


class NonPositiveVariance(ModelError):
    pass


class NonPositiveReflection(ModelError):
    pass


class DegenerateReflection(ModelError):
    pass


@dataclass(frozen=True)
class RawParams:
    """Unvalidated parameter container."""

    sigma1: float
    sigma2: float
    rho: float
    mu1: float
    mu2: float
    r1: float
    r2: float
    wedge: Wedge = Wedge.THREE_QUARTER

    @classmethod
    def from_mapping(cls, data: dict) -> "RawParams":
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ModelError(f"unknown parameter keys: {sorted(unknown)}")
        missing = names - set(data) - {"wedge"}
        if missing:
            raise ModelError(f"missing parameter keys: {sorted(missing)}")
        kw = {k: float(data[k]) for k in names - {"wedge"}}
        try:
            wedge = Wedge(data.get("wedge", Wedge.THREE_QUARTER.value))
        except ValueError:
            raise ModelError(f"wedge must be one of {[w.value for w in Wedge]}") from None
        return cls(wedge=wedge, **kw)


@dataclass(frozen=True)
class ModelParams(RawParams):
    """Validated parameters; ``beta`` is the angle arccos(-rho/sqrt(sigma1 sigma2)).

    Never construct directly, use :func:`validate_params`.
    """

    beta: float = field(default=float("nan"), compare=False)
    #: free-text remarks collected during validation (e.g. conventions used)
    notes: tuple = field(default=(), compare=False)

    @property
    def det(self) -> float:
        return self.sigma1 * self.sigma2 - self.rho**2

    @property
    def raw(self) -> RawParams:
        return RawParams(*(getattr(self, f.name) for f in fields(RawParams)))

    def to_dict(self) -> dict:
        d = asdict(self.raw)
        d["wedge"] = self.wedge.value
        return d


def _gt(a: float, b: float, scale: float) -> bool:
    return a - b > MARGIN * scale


def validate_params(raw: RawParams) -> ModelParams:
    """Check ellipticity, positivity and positive recurrence; compute ``beta``.

    Raises
    ------
    NonPositiveVariance, NotElliptic, NonPositiveReflection, NotErgodic
    """
    s1, s2, rho = raw.sigma1, raw.sigma2, raw.rho
    mu1, mu2, r1, r2 = raw.mu1, raw.mu2, raw.r1, raw.r2
    vals = (s1, s2, rho, mu1, mu2, r1, r2)
    if not all(math.isfinite(x) for x in vals):
        raise ModelError("parameters must be finite")
    scale = max(1.0, *(abs(x) for x in vals))

    if not (_gt(s1, 0, scale) and _gt(s2, 0, scale)):
        raise NonPositiveVariance(f"variances must be > 0, got sigma1={s1}, sigma2={s2}")
    det = s1 * s2 - rho**2
    if not det > MARGIN * scale**2:
        raise NotElliptic(
            f"sigma1*sigma2 - rho^2 = {det:.3g} must be > 0 "
            "(the boundary case gives a parabola and is not supported)"
        )
    if not (_gt(r1, 0, scale) and _gt(r2, 0, scale)):
        raise NonPositiveReflection(f"reflection slopes must be > 0, got r1={r1}, r2={r2}")

    wedge = Wedge(raw.wedge)
    if not (_gt(0, mu1, scale) and _gt(0, mu2, scale)):
        raise NotErgodic(f"drift must satisfy mu1 < 0 and mu2 < 0, got ({mu1}, {mu2})")
    c1 = mu1 - r1 * mu2
    c2 = mu2 - r2 * mu1
    notes: tuple = ()
    if wedge is Wedge.THREE_QUARTER:
        if not (_gt(c1, 0, scale) and _gt(c2, 0, scale)):
            raise NotErgodic(
                f"need mu1 - r1*mu2 > 0 and mu2 - r2*mu1 > 0, got {c1:.6g} and {c2:.6g}"
            )
    else:
        if not (_gt(0, c1, scale) and _gt(0, c2, scale)):
            raise NotErgodic(
                f"quarter plane: need mu1 - r1*mu2 < 0 and mu2 - r2*mu1 < 0, "
                f"got {c1:.6g} and {c2:.6g}"
            )
        notes = ("quarter-plane recurrence taken as mu1 - r1*mu2 < 0 and mu2 - r2*mu1 < 0 "
                 "(convention, not derived here)",)
    if abs(1.0 - r1 * r2) <= MARGIN:
        raise DegenerateReflection("r1*r2 == 1")

    beta = math.acos(-rho / math.sqrt(s1 * s2))
    return ModelParams(s1, s2, rho, mu1, mu2, r1, r2, wedge, beta=beta, notes=notes)


def load_params(path: str | Path) -> ModelParams:
    """Read and validate a JSON parameter document."""
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ModelError("parameter document must be a JSON object")
    return validate_params(RawParams.from_mapping(data))


def swap_params(params: ModelParams) -> ModelParams:
    """Exchange the roles of the two coordinates."""
    return validate_params(
        replace(
            params.raw,
            sigma1=params.sigma2,
            sigma2=params.sigma1,
            mu1=params.mu2,
            mu2=params.mu1,
            r1=params.r2,
            r2=params.r1,
        )
    )


def kernel_K(params: ModelParams, p, q):
    """K(p, q) = (sigma1 p^2 + 2 rho p q + sigma2 q^2)/2 + mu1 p + mu2 q."""
    p = np.asarray(p)
    q = np.asarray(q)
    return (
        0.5 * (params.sigma1 * p * p + 2.0 * params.rho * p * q + params.sigma2 * q * q)
        + params.mu1 * p
        + params.mu2 * q
    )


def reflection_u(params: ModelParams, p, q):
    return params.r1 * np.asarray(p) + np.asarray(q)


def reflection_v(params: ModelParams, p, q):
    return params.r2 * np.asarray(q) + np.asarray(p)


def mass_constants(params: ModelParams) -> tuple[float, float]:
    """Boundary masses (A(0), B(0)) from the two linear mass-balance equations."""
    d = 1.0 - params.r1 * params.r2
    if d == 0.0:
        raise DegenerateReflection("r1*r2 == 1")
    a0 = (params.mu1 * params.r2 - params.mu2) / d
    b0 = (params.mu2 * params.r1 - params.mu1) / d
    return a0, b0


REFERENCE = validate_params(RawParams(1.0, 1.0, 0.0, -1.0, -3.0, 0.5, 4.0))
