"""Independent ray-trace verification of a constructed lens.

Each ray is propagated from the source plane through the lower face
(standard refraction), across the lens to the metasurface (generalized
refraction with the stored phase), and on to the target plane; the
report compares exit directions with (0,0,1) and landings with the
prescribed image points.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np
from scipy.interpolate import RectBivariateSpline

from .farfield import PhaseMap, intersect_ray
from .geometry import Grid2D
from .maps import TargetMap
from .snell import refract_metasurface, refract_standard
from .surfaces import Surface, from_design

VERTICAL = np.array([0.0, 0.0, 1.0])


@dataclass
class TraceableLens:
    """A lens ready for tracing: lower face, phase map, and design grid."""

    surface: Surface
    phase: PhaseMap
    grid: Grid2D
    target_map: Optional[TargetMap] = None

    @staticmethod
    def from_design(design, phase, spline_order=3):
        return TraceableLens(
            surface=from_design(design, order=spline_order),
            phase=phase,
            grid=design.grid,
            target_map=design.target_map,
        )


@dataclass
class TraceReport:
    """Per-ray records plus error aggregates."""

    samples: np.ndarray       # (n, 2)
    hits: np.ndarray          # (n, 3) on the lower face
    mid_directions: np.ndarray  # (n, 3) in medium II
    meta_points: np.ndarray   # (n, 2) on {x3 = a}
    exit_directions: np.ndarray  # (n, 3)
    landings: np.ndarray      # (n, 2) on {x3 = c}
    targets: Optional[np.ndarray] = None
    aggregates: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        dir_err = np.linalg.norm(self.exit_directions - VERTICAL, axis=1)
        self.aggregates["max_direction_error"] = float(np.max(dir_err))
        self.aggregates["mean_direction_error"] = float(np.mean(dir_err))
        if self.targets is not None:
            land_err = np.linalg.norm(self.landings - self.targets, axis=1)
            self.aggregates["max_landing_error"] = float(np.max(land_err))
            self.aggregates["mean_landing_error"] = float(np.mean(land_err))

    def __len__(self):
        return self.samples.shape[0]


class _PhaseGradient:
    """Phase-gradient lookup: stored analytic samples or numeric
    differentiation of the interpolated phase samples.

    The numeric route never touches the stored tangential gradient: the
    phase and footprint samples are fit with splines over the design
    grid and the surface gradient is recovered through the chain rule
    grad_Q(phi) = (DQ)^-T grad_x(phi(Q(x))).
    """

    def __init__(self, lens, mode):
        self.lens = lens
        self.mode = mode
        if mode == "fd_phase":
            g = lens.grid
            order = min(5, g.shape[0] - 1, g.shape[1] - 1)
            mk = lambda z: RectBivariateSpline(g.x1, g.x2, z, kx=order, ky=order)
            self._phi = mk(lens.phase.phi)
            self._q1 = mk(lens.phase.Q[..., 0])
            self._q2 = mk(lens.phase.Q[..., 1])
        elif mode != "analytic":
            raise ValueError(f"unknown gradient mode {mode!r}")

    def __call__(self, x_sample, q):
        if self.mode == "analytic":
            i, j = self.lens.grid.nearest_index(x_sample)
            return self.lens.phase.grad_tan[i, j]
        x1, x2 = x_sample
        gx = np.array(
            [self._phi(x1, x2, dx=1)[0, 0], self._phi(x1, x2, dy=1)[0, 0]]
        )
        jac = np.array(
            [
                [self._q1(x1, x2, dx=1)[0, 0], self._q1(x1, x2, dy=1)[0, 0]],
                [self._q2(x1, x2, dx=1)[0, 0], self._q2(x1, x2, dy=1)[0, 0]],
            ]
        )
        return np.linalg.solve(jac.T, gx)


def trace_through(lens, incident_field, constants, samples,
                  gradient_mode="analytic"):
    """Trace rays from the given source samples through the lens.

    ``gradient_mode`` selects the stored tangential gradient at the
    nearest design node ("analytic") or finite differences of the
    interpolated phase samples ("fd_phase").
    """
    constants.require_lens_geometry()
    k1, k2 = constants.kappa1, constants.kappa2
    a, c = constants.a, constants.c
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    grad_phi = _PhaseGradient(lens, gradient_mode)

    def trace_one(x):
        e = incident_field.direction(x)
        if abs(e[0]) < 1e-15 and abs(e[1]) < 1e-15:
            t = lens.surface.height(x)  # vertical ray hits the graph directly
        else:
            t = intersect_ray(lens.surface, x, e, a)
        hit2 = x + t * e[:2]
        hit = np.array([hit2[0], hit2[1], t * e[2]])
        nu = lens.surface.normal(hit2)
        m = refract_standard(e, nu, k1).direction
        q = hit2 + ((a - hit[2]) / m[2]) * m[:2]
        g = grad_phi(x, q)
        w = refract_metasurface(
            m, VERTICAL, k2, np.array([g[0], g[1], 0.0]), constants.k
        ).direction
        landing = q + ((c - a) / w[2]) * w[:2]
        return hit, m, q, w, landing

    n = samples.shape[0]
    hits = np.zeros((n, 3))
    mids = np.zeros((n, 3))
    metas = np.zeros((n, 2))
    exits = np.zeros((n, 3))
    lands = np.zeros((n, 2))

    def run_chunk(lo, hi):
        for idx in range(lo, hi):
            hits[idx], mids[idx], metas[idx], exits[idx], lands[idx] = trace_one(
                samples[idx]
            )

    workers = int(os.environ.get("HYBRIDLENS_THREADS", "1"))
    if workers > 1 and n > workers:
        bounds = np.linspace(0, n, workers + 1).astype(int)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run_chunk, bounds[:-1], bounds[1:]))
    else:
        run_chunk(0, n)

    targets = None
    if lens.target_map is not None:
        targets = lens.target_map.target(samples)
    return TraceReport(
        samples=samples,
        hits=hits,
        mid_directions=mids,
        meta_points=metas,
        exit_directions=exits,
        landings=lands,
        targets=targets,
    )


def spot_diagram(report):
    """Landing-point scatter with error quantiles, CSV-ready."""
    if len(report) == 0:
        raise ValueError("empty report")
    ref = report.targets if report.targets is not None else report.landings.mean(
        axis=0
    )
    err = np.linalg.norm(report.landings - ref, axis=1)
    qs = [0.0, 0.25, 0.5, 0.75, 0.9, 0.99, 1.0]
    return {
        "points": report.landings,
        "errors": err,
        "quantiles": {f"q{int(100 * q)}": float(np.quantile(err, q)) for q in qs},
        "spot_radius": float(np.max(err)),
    }
