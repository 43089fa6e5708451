import numpy as np
import pytest

from eqcavity.equilibrium import build_support
from eqcavity.errors import CoincidentPointsError, InvalidParameterError, SourceSingularityError
from eqcavity.fekete import FeketeState, energy, energy_gradient, initial_points, minimize, support_stats
from eqcavity.field import FieldSpec, PointSource

PLAIN = FieldSpec(0.5, 1)
SINGLE = FieldSpec(0.5, 1, [PointSource(0.6, 0.04)])
CASSINI = FieldSpec(1 / 50, 2, [PointSource(1, 0.125), PointSource(-1, 0.125)])


@pytest.fixture(scope="module")
def single_run():
    return minimize(SINGLE, 200, seed=1)


def test_two_point_energy_closed_form():
    for d in (0.3, 0.7, 1.2):
        assert energy([d, -d], PLAIN) == pytest.approx(-np.log(2 * d) + d * d, rel=1e-14)


def test_two_point_gradient_vanishes_at_optimum():
    d = 1 / np.sqrt(2)
    assert np.max(np.abs(energy_gradient([d, -d], PLAIN))) <= 1e-14


def test_single_point():
    assert energy([0.0], PLAIN) == 0
    assert np.all(energy_gradient([0.0], PLAIN) == 0)


def test_energy_relabeling_invariant():
    rng = np.random.default_rng(0)
    x = rng.normal(size=20) + 1j * rng.normal(size=20)
    assert energy(x, SINGLE) == pytest.approx(energy(x[rng.permutation(20)], SINGLE), rel=1e-14)


@pytest.mark.parametrize("field", [PLAIN, SINGLE, CASSINI])
def test_gradient_matches_finite_differences(field):
    rng = np.random.default_rng(4)
    x = 0.8 * (rng.uniform(-1, 1, 12) + 1j * rng.uniform(-1, 1, 12))
    g = energy_gradient(x, field)
    h = 1e-6
    for i in range(len(x)):
        for k, e in enumerate((1.0, 1j)):
            xp, xm = x.copy(), x.copy()
            xp[i] += h * e
            xm[i] -= h * e
            fd = (energy(xp, field) - energy(xm, field)) / (2 * h)
            assert abs(fd - g[i, k]) <= 1e-6 * max(1.0, abs(g[i, k]))


def test_errors():
    with pytest.raises(CoincidentPointsError):
        energy([0.1, 0.1], PLAIN)
    with pytest.raises(CoincidentPointsError):
        energy_gradient([0.1, 0.1], PLAIN)
    with pytest.raises(SourceSingularityError):
        energy([0.6, 0.1], SINGLE)
    with pytest.raises(InvalidParameterError):
        minimize(PLAIN, 1)


def test_two_point_minimum():
    s = minimize(PLAIN, 2, seed=0)
    assert s.converged
    assert abs(s.points[0] - s.points[1]) == pytest.approx(np.sqrt(2), abs=1e-4)


def test_initial_points_in_base_disc_and_avoid_sources():
    x = initial_points(SINGLE, 500, 3)
    assert np.max(np.abs(x)) <= 1 + 1e-2
    assert np.min(np.abs(x - 0.6)) >= 1e-3


def test_single_source_run(single_run):
    s = single_run
    st = support_stats(s, build_support(SINGLE))
    assert st["inside_cavity"] == 0
    assert st["offsupport_fraction"] <= 0.02
    assert st["max_radius"] <= 1.05
    assert np.all(np.abs(s.points - 0.6) > 0.196116 * 0.9)


def test_energy_monotone(single_run):
    assert np.all(np.diff(single_run.energy_history) < 0)
    assert len(single_run.energy_history) == single_run.iterations + 1


def test_rerun_bit_identical(single_run):
    again = minimize(SINGLE, 200, seed=1)
    assert np.array_equal(again.points, single_run.points)
    assert again.energy == single_run.energy
    assert again.energy_history == single_run.energy_history


def test_rotational_equivariance():
    rot = np.exp(0.7j)
    x0 = initial_points(CASSINI, 40, 2)
    opts = {"max_iter": 200}
    a = minimize(CASSINI, 40, initial=x0, opts=opts)
    turned = CASSINI.with_sources([PointSource(rot, 0.125), PointSource(-rot, 0.125)])
    b = minimize(turned, 40, initial=rot * x0, opts=opts)
    assert np.max(np.abs(b.points - rot * a.points)) <= 1e-10


def test_planted_point_counts():
    S = build_support(SINGLE)
    pts = np.array([0.0, 0.3j, -0.5])
    st = support_stats(FeketeState(pts, 0.0, 0.0, 0, 0), S)
    assert st == {"inside_cavity": 0, "max_radius": 0.5, "offsupport_fraction": 0.0}
    st = support_stats(FeketeState(np.append(pts, 0.6), 0.0, 0.0, 0, 0), S)
    assert st["inside_cavity"] == 1 and st["offsupport_fraction"] == 0.25


def test_cassini_run():
    s = minimize(CASSINI, 300, seed=0)
    st = support_stats(s, build_support(CASSINI))
    assert st["offsupport_fraction"] <= 0.02
    assert st["inside_cavity"] == 0


def test_cavity_fraction_does_not_grow():
    # fraction of points in a fixed open disc inside the cavity, N = 50..200
    fr = []
    for N in (50, 100, 200):
        x = minimize(SINGLE, N, seed=0).points
        fr.append(np.mean(np.abs(x - 0.6) < 0.15))
    assert all(b <= a + 1 / 50 for a, b in zip(fr, fr[1:]))
    assert fr[-1] == 0
