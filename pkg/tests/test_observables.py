import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from iqwalk.graph import generate
from iqwalk.observables import (
    TrajectoryRecord,
    entanglement_entropy,
    magnetization,
    mean_spin,
    position_distribution,
    run_trajectory,
    spin_fluctuation,
    time_average,
    von_neumann_entropy,
)
from iqwalk.state import PureState, complement_density, initial_state, padding_mask, reduced_density
from conftest import random_state


def test_position_distribution(bull):
    psi = initial_state(bull, [(0, 0, 0)])
    assert np.array_equal(position_distribution(psi), [1, 0, 0, 0, 0])
    uniform = PureState.zeros(bull)
    uniform.amplitudes[padding_mask(bull)] = 1 / np.sqrt(320)
    assert np.allclose(position_distribution(uniform), [0.3, 0.1, 0.1, 0.2, 0.3])


def test_magnetization():
    c9 = generate("cycle", 9)
    assert np.array_equal(magnetization(initial_state(c9, [(3, 1, 0)])), np.ones(9))
    s = magnetization(initial_state(c9, [(0, 0, 0), (0, 0, 1)]))
    assert abs(s[0]) < 1e-15 and np.allclose(s[1:], 1)
    down = initial_state(c9, [(0, 0, 0b101)])
    assert np.array_equal(magnetization(down)[:3], [-1, 1, -1])


def test_entropy_product_state_zero(bull):
    psi = initial_state(bull, [(2, 0, 17)])
    for part in "xcs":
        assert entanglement_entropy(psi, part) == 0


def test_entropy_bell_like(bull):
    # position superposition uncorrelated with the rest: still a product state
    psi = initial_state(bull, [(0, 0, 0), (1, 0, 0)])
    for part in "xcs":
        assert abs(entanglement_entropy(psi, part)) < 1e-12
    # walker position correlated with node-0 spin: one bit for x and for s
    psi = initial_state(bull, [(0, 0, 0), (1, 0, 1)])
    assert np.isclose(entanglement_entropy(psi, "x"), 1)
    assert np.isclose(entanglement_entropy(psi, "s"), 1)


@pytest.mark.parametrize("part", ["x", "c", "s"])
def test_entropy_sides_agree(cube, rng, part):
    psi = random_state(cube, rng)
    a = von_neumann_entropy(reduced_density(psi, part))
    b = von_neumann_entropy(complement_density(psi, part))
    assert abs(a - b) < 1e-8
    assert abs(entanglement_entropy(psi, part) - a) < 1e-8


def test_trajectory_bounds(cube):
    record, final = run_trajectory(initial_state(cube, [(0, 0, 0)]), 60, "fourier")
    assert record.p.shape == (61, 8) and record.entropy.shape == (61, 3)
    assert np.allclose(record.p.sum(axis=1), 1, atol=1e-10)
    assert np.all(np.abs(record.s) <= 1 + 1e-12)
    bounds = np.array([3, np.log2(3), 8])
    assert np.all(record.entropy >= -1e-12) and np.all(record.entropy <= bounds + 1e-9)
    assert abs(final.norm() - 1) < 1e-12


def test_trajectory_csv_round_trip(cube, tmp_path):
    record, _ = run_trajectory(initial_state(cube, [(0, 0, 0)]), 5)
    record.to_csv(tmp_path / "t.csv")
    header = (tmp_path / "t.csv").read_text().splitlines()[0].split(",")
    assert header[:2] == ["t", "p0"] and header[-3:] == ["S_x", "S_c", "S_s"]
    again = TrajectoryRecord.from_csv(tmp_path / "t.csv")
    assert np.array_equal(again.p, record.p) and np.array_equal(again.s, record.s)
    assert np.array_equal(again.entropy, record.entropy)


def test_time_average():
    series = np.full((11, 3), 0.25)
    per_node, overall = time_average(series, 2, 10)
    assert np.allclose(per_node, 0.25) and np.isclose(overall, 0.25)
    alternating = np.array([[1.0], [-1.0]] * 5)
    assert time_average(alternating, 0, 9)[1] == 0
    with pytest.raises(ValueError):
        time_average(series, 5, 3)
    with pytest.raises(ValueError):
        time_average(series, 0, 11)


def test_mean_spin_modes():
    series = np.array([[0.0, 0.0], [1.0, 0.5]])
    assert mean_spin(series, 0) == 0.375
    assert mean_spin(series, 0, mode="snapshot") == 0.75
    with pytest.raises(ValueError):
        mean_spin(series, 0, mode="other")


def test_spin_fluctuation():
    assert np.allclose(spin_fluctuation(np.full((5, 2), 0.3), 0), 0)
    a = 0.7
    assert np.allclose(spin_fluctuation(np.array([[a], [-a]]), 0), a)
    with pytest.raises(ValueError):
        spin_fluctuation(np.zeros((5, 2)), 4, 4)


@settings(max_examples=50, deadline=None)
@given(arrays(float, (6, 3), elements=st.floats(-1, 1)), st.integers(0, 4))
def test_fluctuation_matches_definition(series, t0):
    s_bar = series[t0:].mean()
    expected = np.sqrt(((series[t0:] - s_bar) ** 2).mean(axis=0))
    assert np.allclose(spin_fluctuation(series, t0), expected)
