"""Lower-face surface representations: analytic graphs and spline fits."""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import RectBivariateSpline

from .geometry import FDStencil, fd_gradient, fd_hessian


@dataclass(frozen=True)
class Surface:
    """Graph surface x3 = r(x1, x2) with optional analytic derivatives."""

    name: str
    value: Callable[[np.ndarray], float]
    grad: Optional[Callable[[np.ndarray], np.ndarray]] = None
    hess: Optional[Callable[[np.ndarray], np.ndarray]] = None
    params: dict = field(default_factory=dict)

    def height(self, x):
        return float(self.value(np.asarray(x, dtype=float)))

    def gradient(self, x, stencil=None):
        x = np.asarray(x, dtype=float)
        if self.grad is not None:
            return np.asarray(self.grad(x), dtype=float)
        return fd_gradient(self.value, x, stencil)

    def hessian(self, x, stencil=None):
        x = np.asarray(x, dtype=float)
        if self.hess is not None:
            return np.asarray(self.hess(x), dtype=float)
        return fd_hessian(self.value, x, stencil or FDStencil(1e-4, 1e-4))

    def normal(self, x):
        """Unit normal with positive vertical component."""
        g = self.gradient(x)
        n = np.array([-g[0], -g[1], 1.0])
        return n / np.linalg.norm(n)


def flat(r0):
    return Surface(
        name="flat",
        value=lambda x: float(r0),
        grad=lambda x: np.zeros(2),
        hess=lambda x: np.zeros((2, 2)),
        params={"r0": float(r0)},
    )


def polynomial(coeffs):
    """r(x) = sum c_{ij} x1^i x2^j for a dict {(i, j): c} or nested list."""
    if isinstance(coeffs, dict):
        imax = max(i for i, _ in coeffs) + 1
        jmax = max(j for _, j in coeffs) + 1
        c = np.zeros((imax, jmax))
        for (i, j), v in coeffs.items():
            c[i, j] = v
    else:
        c = np.asarray(coeffs, dtype=float)

    def value(x):
        return float(np.polynomial.polynomial.polyval2d(x[0], x[1], c))

    c1 = np.polynomial.polynomial.polyder(c, axis=0) if c.shape[0] > 1 else np.zeros((1, 1))
    c2 = np.polynomial.polynomial.polyder(c, axis=1) if c.shape[1] > 1 else np.zeros((1, 1))
    c11 = np.polynomial.polynomial.polyder(c1, axis=0) if c1.shape[0] > 1 else np.zeros((1, 1))
    c12 = np.polynomial.polynomial.polyder(c1, axis=1) if c1.shape[1] > 1 else np.zeros((1, 1))
    c22 = np.polynomial.polynomial.polyder(c2, axis=1) if c2.shape[1] > 1 else np.zeros((1, 1))

    def ev(cc, x):
        return float(np.polynomial.polynomial.polyval2d(x[0], x[1], cc))

    return Surface(
        name="polynomial",
        value=value,
        grad=lambda x: np.array([ev(c1, x), ev(c2, x)]),
        hess=lambda x: np.array([[ev(c11, x), ev(c12, x)], [ev(c12, x), ev(c22, x)]]),
        params={"coeffs": c.tolist()},
    )


def from_design(design, order=3):
    """Spline fit of a solved lens design (C^1 normals between cells)."""
    return from_grid(design.grid, design.rho, order=order)


def from_grid(grid, rho, order=3):
    sp = RectBivariateSpline(grid.x1, grid.x2, np.asarray(rho, dtype=float),
                             kx=order, ky=order)
    return Surface(
        name="spline",
        value=lambda x: float(sp(x[0], x[1])[0, 0]),
        grad=lambda x: np.array(
            [sp(x[0], x[1], dx=1)[0, 0], sp(x[0], x[1], dy=1)[0, 0]]
        ),
        hess=lambda x: np.array(
            [
                [sp(x[0], x[1], dx=2)[0, 0], sp(x[0], x[1], dx=1, dy=1)[0, 0]],
                [sp(x[0], x[1], dx=1, dy=1)[0, 0], sp(x[0], x[1], dy=2)[0, 0]],
            ]
        ),
        params={"order": order},
    )


BUILTIN_SURFACES = {
    "flat": lambda params: flat(**params),
    "polynomial": lambda params: polynomial(**params),
}
