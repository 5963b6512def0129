"""Vectorial refraction at conventional surfaces and metasurfaces.

The refraction laws are expressed through the tangential-momentum
conservation n1 (x cross nu) = n2 (m cross nu), resolved into
x - kappa m = lambda nu for a conventional interface and
x - grad(phi)/k - kappa m = mu nu for a metasurface.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    InvalidIncidence,
    MetaTotalInternalReflection,
    TotalInternalReflection,
)

# Clamp slightly negative discriminants caused by roundoff at grazing
# feasibility instead of letting sqrt produce NaN.
DISCRIMINANT_TOL = 1e-12


@dataclass(frozen=True)
class OpticalConstants:
    """Refractive indices of the three media and the lens geometry.

    Medium I is below the lower face, II inside the lens, III above the
    metasurface plane {x3 = a}; the target plane is {x3 = c}.  ``k`` is
    the wavenumber in medium II (the medium just before the metasurface).
    """

    n1: float
    n2: float
    n3: float
    k: float = 1.0
    a: float = 1.0
    c: float = 2.0

    def __post_init__(self):
        if min(self.n1, self.n2, self.n3) <= 0:
            raise ValueError("refractive indices must be positive")
        if self.k <= 0:
            raise ValueError("wavenumber must be positive")

    @property
    def kappa1(self):
        return self.n2 / self.n1

    @property
    def kappa2(self):
        return self.n3 / self.n2

    def require_lens_geometry(self):
        if not (self.kappa1 > 1.0):
            raise ValueError("lens problems require n2 > n1 (kappa1 > 1)")
        if not (self.c > self.a > 0.0):
            raise ValueError("lens problems require c > a > 0")


@dataclass(frozen=True)
class RefractionResult:
    """Refracted unit direction and the normal-component multiplier."""

    direction: np.ndarray
    multiplier: float


def _sqrt_clamped(value):
    if value < 0.0:
        if value < -DISCRIMINANT_TOL:
            raise FloatingPointError  # caller converts to a domain error
        value = 0.0
    return math.sqrt(value)


def refract_standard(x, nu, kappa):
    """Refract unit direction ``x`` at a surface with unit normal ``nu``.

    kappa = n2/n1 is the ratio of downstream to upstream indices.  The
    normal must point toward the outgoing medium: x . nu >= 0 is required
    and not silently fixed up, so orientation bugs surface immediately.
    """
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    x = np.asarray(x, dtype=float)
    nu = np.asarray(nu, dtype=float)
    xdn = float(np.dot(x, nu))
    if xdn < 0.0:
        raise InvalidIncidence(f"x . nu = {xdn} < 0; orient nu toward medium II")
    # same arithmetic as the metasurface branch with grad_phi = 0, so the
    # two laws coincide exactly (not just to roundoff) in that limit
    disc = kappa * kappa - float(np.dot(x, x)) + xdn * xdn
    if kappa < 1.0 and disc < DISCRIMINANT_TOL:
        raise TotalInternalReflection(
            f"x . nu = {xdn} < sqrt(1 - kappa^2) = {math.sqrt(1 - kappa**2)}"
        )
    lam = xdn - _sqrt_clamped(disc)
    m = (x - lam * nu) / kappa
    return RefractionResult(direction=m, multiplier=lam)


def refract_metasurface(x, nu, kappa, grad_phi, k):
    """Refract at a metasurface carrying phase gradient ``grad_phi``.

    Implements the generalized law with the incident direction shifted by
    grad(phi)/k.  ``grad_phi`` may be a full 3-vector; when it is
    tangential (grad_phi . nu = 0) the formula coincides with the
    documented tangential special case.
    """
    if kappa <= 0 or k <= 0:
        raise ValueError("kappa and k must be positive")
    x = np.asarray(x, dtype=float)
    nu = np.asarray(nu, dtype=float)
    xs = x - np.asarray(grad_phi, dtype=float) / k
    xsdn = float(np.dot(xs, nu))
    if xsdn < 0.0:
        raise InvalidIncidence(
            f"(x - grad_phi/k) . nu = {xsdn} < 0; orient nu toward the outgoing medium"
        )
    disc = kappa * kappa - float(np.dot(xs, xs)) + xsdn * xsdn
    if disc < -DISCRIMINANT_TOL:
        raise MetaTotalInternalReflection(
            f"feasibility bracket fails: {xsdn**2} < {np.dot(xs, xs) - kappa**2}"
        )
    mu = xsdn - _sqrt_clamped(max(disc, 0.0))
    m = (xs - mu * nu) / kappa
    return RefractionResult(direction=m, multiplier=mu)


def deviation_lower_bound(kappa):
    """Proven lower bound for x . m over all valid refractions."""
    if kappa <= 0 or kappa == 1.0:
        raise ValueError("kappa must be positive and different from 1")
    return 1.0 / kappa if kappa > 1.0 else kappa
