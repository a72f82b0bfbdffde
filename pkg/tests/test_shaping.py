import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hordeshaping.envs import Transition, mc_step
from hordeshaping.shaping import (PotentialSpec, build_reward_vector, label_of, potential,
                                  shaping_reward)

# -1 + 10 * (0.99 * phi(x') - phi(x)) evaluated with phi = (x + 1.2) / 1.8
SHAPED_POSITION_EXAMPLE = -1.0343615254118195


def test_position_endpoints_and_start():
    p = PotentialSpec("mc_position")
    assert potential(p, (-1.2, 0.0)) == 0.0
    assert potential(p, (0.6, 0.0)) == pytest.approx(1.0, abs=1e-15)
    assert potential(p, (-0.5, 0.0)) == pytest.approx(0.7 / 1.8, abs=1e-15)


def test_height_and_speed_forms():
    assert potential(PotentialSpec("mc_height"), (math.pi / 6, 0.0)) == pytest.approx(1.0)
    # literal normalized-velocity-squared form: rest maps to 0.25
    assert potential(PotentialSpec("mc_speed"), (0.0, 0.0)) == pytest.approx(0.25)
    assert potential(PotentialSpec("mc_speed_magnitude"), (0.0, 0.0)) == 0.0
    assert potential(PotentialSpec("mc_speed_magnitude"), (0.0, -0.07)) == pytest.approx(1.0)


def test_cart_pole_potentials():
    assert potential(PotentialSpec("cp_angle"), (0.0, 0.0, 0.0, 0.0)) == 0.0
    assert potential(PotentialSpec("cp_angle"), (math.pi / 8, 0, 0, 0)) == pytest.approx(-0.25)
    assert potential(PotentialSpec("cp_angular_speed"), (0, -2.0, 0, 0)) == pytest.approx(-0.25)
    # clipped beyond the normalization bound
    assert potential(PotentialSpec("cp_angular_speed"), (0, 9.0, 0, 0)) == -1.0


@settings(max_examples=200, deadline=None)
@given(st.floats(-1.2, 0.6), st.floats(-0.07, 0.07), st.floats(-3, 3), st.floats(-10, 10))
def test_builtin_potentials_are_bounded(x, v, xi, xi_dot):
    for kind in ("mc_position", "mc_height", "mc_speed", "mc_speed_magnitude"):
        assert 0.0 <= potential(PotentialSpec(kind), (x, v)) <= 1.0 + 1e-12
    for kind in ("cp_angle", "cp_angular_speed"):
        assert -1.0 <= potential(PotentialSpec(kind), (xi, xi_dot, 0.0, 0.0)) <= 0.0


def test_kind_environment_mismatch():
    with pytest.raises(ValueError):
        potential(PotentialSpec("cp_angle"), (-0.5, 0.0))
    with pytest.raises(ValueError):
        PotentialSpec("mc_position", scale=-1.0)
    with pytest.raises(ValueError):
        PotentialSpec("nope")


def test_shaping_reward_examples():
    assert shaping_reward(0.0, 0.0, 0.99, 5.0) == 0.0
    assert shaping_reward(0.7, 0.7, 1.0, 3.0) == 0.0
    assert shaping_reward(0.5, 0.6, 0.99, 1.0) == pytest.approx(0.094, abs=1e-15)


@given(st.floats(-10, 10), st.floats(-10, 10), st.floats(0, 1), st.floats(0, 1e4))
def test_shaping_reward_linear_in_scale(a, b, g, c):
    assert shaping_reward(a, b, g, c) == c * shaping_reward(a, b, g, 1.0)


def test_telescoping_random_tables():
    rng = np.random.default_rng(11)
    for _ in range(100):
        phi = rng.normal(size=20)
        T = int(rng.integers(1, 60))
        gamma = float(rng.uniform(0.5, 1.0))
        states = rng.integers(20, size=T + 1)
        total = sum(gamma ** t * shaping_reward(phi[states[t]], phi[states[t + 1]], gamma, 1.0)
                    for t in range(T))
        assert abs(total - (gamma ** T * phi[states[T]] - phi[states[0]])) < 1e-9


def test_reward_vector_example():
    t = mc_step((-0.5, 0.0), 2)
    vec = build_reward_vector(t, [PotentialSpec("mc_position", 10.0)], 0.99)
    assert vec.components[0][0] == "mc_position@10"
    assert vec.components[0][1] == pytest.approx(SHAPED_POSITION_EXAMPLE, abs=1e-12)


def test_reward_vector_base_and_zero_scale():
    t = Transition(np.array([-0.3, 0.01]), 1, -1.0, np.array([-0.29, 0.01]), False, 1)
    vec = build_reward_vector(t, [None], 0.99)
    assert vec.values().tolist() == [-1.0]
    specs = [None] + [PotentialSpec(k, 0.0) for k in ("mc_position", "mc_height", "mc_speed")]
    vec = build_reward_vector(t, specs, 0.99)
    assert np.all(vec.values() == -1.0)
    assert [label for label, _ in vec.components][0] == "base"


def test_custom_tabular_and_labels():
    table = np.array([0.0, 2.0, -1.0])
    spec = PotentialSpec("custom_tabular", 1.0, table=table)
    assert potential(spec, 1) == 2.0
    assert label_of(None) == "base"
    assert PotentialSpec("mc_height", 20.0).label == "mc_height@20"
