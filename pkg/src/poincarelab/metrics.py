"""Conformal metrics on the plane and derivative norms with respect to them."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DomainError


class MetricKind(enum.Enum):
    EUCLIDEAN = "euclidean"
    SPHERICAL = "spherical"
    CYLINDRICAL = "cylindrical"
    ONE_SIDED_CYLINDRICAL = "one-sided-cylindrical"


def metric_density(kind: MetricKind, z):
    """Density rho(z) of the conformal metric rho(z)|dz|.

    euclidean -> 1, spherical -> 2/(1+|z|^2), cylindrical -> 1/|z| (undefined
    at 0), one-sided cylindrical -> 1/max(|z|, 1).
    """
    z = np.asarray(z, dtype=complex)
    a = np.abs(z)
    if kind is MetricKind.EUCLIDEAN:
        out = np.ones_like(a)
    elif kind is MetricKind.SPHERICAL:
        out = 2.0 / (1.0 + a * a)
    elif kind is MetricKind.CYLINDRICAL:
        if np.any(a == 0):
            raise DomainError("cylindrical density undefined at 0")
        out = 1.0 / a
    elif kind is MetricKind.ONE_SIDED_CYLINDRICAL:
        out = 1.0 / np.maximum(a, 1.0)
    else:  # pragma: no cover
        raise ValueError(f"unknown metric {kind!r}")
    return out if out.shape else float(out)


def derivative_norm(kind: MetricKind, fprime, z, fz):
    """|f'(z)| * rho(f(z)) / rho(z) for a holomorphic map with f(z) = fz."""
    fprime = np.asarray(fprime, dtype=complex)
    num = metric_density(kind, fz)
    den = metric_density(kind, z)
    out = np.abs(fprime) * num / den
    return out if out.shape else float(out)


@dataclass(frozen=True)
class Annulus:
    """Round annulus, inner-closed and outer-open."""

    center: complex
    r_inner: float
    r_outer: float

    def __post_init__(self):
        if not (0 < self.r_inner < self.r_outer):
            raise ValueError("need 0 < r_inner < r_outer")

    def contains(self, z):
        a = np.abs(np.asarray(z, dtype=complex) - self.center)
        out = (a >= self.r_inner) & (a < self.r_outer)
        return out if out.shape else bool(out)
