import numpy as np
import pytest

from hybridlens.farfield import PhaseMap, build_phase, midfield_vertical
from hybridlens.fields import vertical
from hybridlens.geometry import Grid2D
from hybridlens.imaging import solve_rho
from hybridlens.maps import identity
from hybridlens.raytrace import TraceableLens, spot_diagram, trace_through


@pytest.fixture(scope="module")
def dilation_lens(dilation_design, constants):
    d = dilation_design
    mid = midfield_vertical(d.grid, d.rho, d.drho, constants)
    phase = build_phase(vertical(), mid, constants)
    return TraceableLens.from_design(d, phase)


@pytest.fixture(scope="module")
def node_samples(dilation_design):
    g = dilation_design.grid
    pts = [g.node(i, j) for i in range(10, 91, 8) for j in range(10, 91, 8)]
    return np.array(pts)


def test_identity_lens_passes_rays_straight(constants):
    grid = Grid2D.from_box(((-0.3, 0.3), (-0.3, 0.3)), 41)
    design = solve_rho(identity(), constants, grid, (0.0, 0.0), z0=0.5)
    mid = midfield_vertical(grid, design.rho, design.drho, constants)
    phase = build_phase(vertical(), mid, constants)
    lens = TraceableLens.from_design(design, phase)
    samples = np.array([[0.0, 0.0], [0.1, -0.2], [-0.25, 0.15]])
    report = trace_through(lens, vertical(), constants, samples)
    assert report.aggregates["max_direction_error"] < 1e-13
    assert np.max(np.abs(report.landings - samples)) < 1e-13


def test_dilation_analytic_at_nodes(dilation_lens, constants, node_samples):
    report = trace_through(dilation_lens, vertical(), constants, node_samples)
    assert report.aggregates["max_landing_error"] < 1e-8
    assert report.aggregates["max_direction_error"] < 1e-8
    assert np.allclose(report.targets, 1.2 * node_samples)


def test_dilation_fd_phase_off_nodes(dilation_lens, constants, rng):
    r = 0.6 * np.sqrt(rng.uniform(size=200))
    theta = rng.uniform(0, 2 * np.pi, 200)
    samples = np.column_stack([r * np.cos(theta), r * np.sin(theta)])
    report = trace_through(dilation_lens, vertical(), constants, samples,
                           gradient_mode="fd_phase")
    assert report.aggregates["max_landing_error"] < 1e-6


def test_unknown_gradient_mode(dilation_lens, constants):
    with pytest.raises(ValueError):
        trace_through(dilation_lens, vertical(), constants,
                      np.zeros((1, 2)), gradient_mode="nope")


def test_hit_heights_inside_slab(dilation_lens, constants, node_samples):
    report = trace_through(dilation_lens, vertical(), constants, node_samples)
    assert np.all(report.hits[:, 2] > 0.0)
    assert np.all(report.hits[:, 2] < constants.a)


def test_corrupted_phase_detected(dilation_lens, constants, node_samples):
    corrupted = TraceableLens(
        surface=dilation_lens.surface,
        phase=PhaseMap(
            Q=dilation_lens.phase.Q,
            phi=dilation_lens.phase.phi,
            grad_tan=1.1 * dilation_lens.phase.grad_tan,
            k=dilation_lens.phase.k,
        ),
        grid=dilation_lens.grid,
        target_map=dilation_lens.target_map,
    )
    report = trace_through(corrupted, vertical(), constants, node_samples)
    # 10% gradient error leaves a clearly nonzero direction error pattern
    assert report.aggregates["max_direction_error"] > 1e-3


def test_threaded_trace_is_deterministic(dilation_lens, constants,
                                         node_samples, monkeypatch):
    base = trace_through(dilation_lens, vertical(), constants, node_samples)
    monkeypatch.setenv("HYBRIDLENS_THREADS", "4")
    threaded = trace_through(dilation_lens, vertical(), constants, node_samples)
    assert np.array_equal(base.landings, threaded.landings)
    assert np.array_equal(base.exit_directions, threaded.exit_directions)


def test_spot_diagram(dilation_lens, constants, node_samples):
    report = trace_through(dilation_lens, vertical(), constants, node_samples)
    spot = spot_diagram(report)
    assert spot["spot_radius"] == report.aggregates["max_landing_error"]
    assert spot["quantiles"]["q100"] == spot["spot_radius"]
    assert spot["quantiles"]["q0"] <= spot["quantiles"]["q50"]
