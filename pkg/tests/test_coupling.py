import numpy as np
import pytest

from mfgnet import presets
from mfgnet.coupling import (apply, bounded_smooth, identity_coupling,
                             monotonicity_gap, nonlocal_smoothing,
                             scaled_identity, zero_coupling)
from mfgnet.fields import Field, GridSpec, from_function, inner, integrate


@pytest.fixture
def uniform_density(star, star_grid):
    total = star.total_length()
    return from_function(star, star_grid,
                         lambda a, y: np.ones_like(y) / total, kind="jump")


def test_identity_on_uniform_density():
    # with mu-proportional entry probabilities the uniform density lies in
    # the jump space exactly, so F(m) = m reproduces 1/|network| everywhere
    from mfgnet.network import MetricNetwork, Edge
    net = MetricNetwork(["c", "l1", "l2", "l3"],
                        [Edge(f"e{k}", 0, k, 1.0, 1.0) for k in (1, 2, 3)])
    grid = GridSpec.uniform(net, 16, 1.0, 10)
    m = from_function(net, grid, lambda a, y: np.ones_like(y) / 3.0,
                      kind="jump")
    out = apply(identity_coupling(), m)
    for a in range(3):
        assert np.allclose(out.values[a], 1.0 / 3.0, atol=1e-14)


def test_zero_coupling(star, star_grid, uniform_density):
    out = apply(zero_coupling(), uniform_density)
    assert all(np.all(v == 0.0) for v in out.values)


def test_nonlocal_preserves_mass_away_from_vertices():
    net = presets.single_edge(length=4.0)
    grid = GridSpec.uniform(net, 128, 1.0, 1)
    op = nonlocal_smoothing(bandwidth=0.5)
    # bump supported well inside; every point reached by the kernel sees a
    # translation-invariant row, so the discrete kernel mass telescopes
    m = from_function(net, grid,
                      lambda a, y: np.exp(-((y - 2.0) / 0.25) ** 2),
                      kind="jump")
    out = apply(op, m)
    assert integrate(out) == pytest.approx(integrate(m), abs=1e-10)


def test_nonlocal_preserves_constants(star, star_grid):
    # row normalization maps every constant field to itself
    m = from_function(star, star_grid, lambda a, y: np.full_like(y, 0.7),
                      kind="pc")
    out = apply(nonlocal_smoothing(bandwidth=0.4), m)
    for a in range(3):
        assert np.allclose(out.values[a], 0.7, atol=1e-12)


def test_nonlocal_output_continuous_at_vertices(star, star_grid):
    # vertex evaluations split by entry probability, so the smoothed field
    # has matching traces there even though the input density jumps
    m = from_function(star, star_grid,
                      lambda a, y: np.exp(-((y - 0.2) / 0.2) ** 2) * (a == 0)
                      + 0.1, kind="jump")
    out = apply(nonlocal_smoothing(bandwidth=0.3), m)
    spread_in = np.ptp([m.values[a][0] for a in range(3)])
    spread_out = np.ptp([out.values[a][0] for a in range(3)])
    assert spread_in > 0.1
    assert spread_out < 1e-12


def test_monotonicity_gap_zero_for_equal_inputs(star, star_grid,
                                                uniform_density):
    assert monotonicity_gap(identity_coupling(), uniform_density,
                            uniform_density) == 0.0


def test_monotonicity_gap_equals_squared_distance_for_identity(star,
                                                               star_grid):
    m1 = from_function(star, star_grid, lambda a, y: 1.0 + 0.2 * y,
                       kind="jump")
    m2 = from_function(star, star_grid, lambda a, y: 0.8 + 0.1 * y * y,
                       kind="jump")
    gap = monotonicity_gap(identity_coupling(), m1, m2)
    diff = Field(star, star_grid, "pc",
                 [a - b for a, b in zip(m1.values, m2.values)])
    assert gap == pytest.approx(inner(diff, diff), rel=1e-12)
    assert gap >= 0.0


def test_decreasing_coupling_flags_negative_gap(star, star_grid):
    m1 = from_function(star, star_grid, lambda a, y: 1.0 + y, kind="jump")
    m2 = from_function(star, star_grid, lambda a, y: 1.0 - y, kind="jump")
    assert monotonicity_gap(scaled_identity(-1.0), m1, m2) < 0.0


def test_bounded_smooth_monotone_and_bounded(star, star_grid, rng):
    op = bounded_smooth(amplitude=2.0, slope=1.5)
    for _ in range(5):
        m1 = from_function(star, star_grid,
                           lambda a, y: rng.normal(size=y.shape), kind="jump")
        m2 = from_function(star, star_grid,
                           lambda a, y: rng.normal(size=y.shape), kind="jump")
        assert monotonicity_gap(op, m1, m2) >= -1e-10
        out = apply(op, m1)
        assert all(np.all((v >= 0) & (v <= 2.0)) for v in out.values)


def test_local_lipschitz_bound(star, star_grid, rng):
    op = scaled_identity(1.7)
    for _ in range(5):
        m1 = from_function(star, star_grid,
                           lambda a, y: rng.normal(size=y.shape), kind="jump")
        m2 = from_function(star, star_grid,
                           lambda a, y: rng.normal(size=y.shape), kind="jump")
        v1, v2 = apply(op, m1), apply(op, m2)
        dv = Field(star, star_grid, "pc",
                   [a - b for a, b in zip(v1.values, v2.values)])
        dm = Field(star, star_grid, "pc",
                   [a - b for a, b in zip(m1.values, m2.values)])
        lhs = np.sqrt(inner(dv, dv))
        rhs = op.lipschitz * (1.0 + 1e-8) * np.sqrt(inner(dm, dm))
        assert lhs <= rhs + 1e-14


def test_nonlocal_lipschitz_below_declared_constant(star, star_grid, rng):
    op = nonlocal_smoothing(bandwidth=0.3)
    for _ in range(5):
        m1 = from_function(star, star_grid,
                           lambda a, y: rng.normal(size=y.shape), kind="jump")
        m2 = from_function(star, star_grid,
                           lambda a, y: rng.normal(size=y.shape), kind="jump")
        v1, v2 = apply(op, m1), apply(op, m2)
        dv = Field(star, star_grid, "pc",
                   [a - b for a, b in zip(v1.values, v2.values)])
        dm = Field(star, star_grid, "pc",
                   [a - b for a, b in zip(m1.values, m2.values)])
        assert np.sqrt(inner(dv, dv)) <= \
            op.lipschitz * (1.0 + 1e-8) * np.sqrt(inner(dm, dm))
