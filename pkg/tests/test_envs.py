import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hordeshaping.envs import (CP_DROP_ANGLE, Environment, EnvSpec, cp_reset, cp_step,
                               gridworld_build, grid_state, mc_reset, mc_step)


def test_mc_reset_is_fixed():
    assert mc_reset().tolist() == [-0.5, 0.0]
    assert mc_reset().tolist() == mc_reset().tolist()


def test_mc_step_hand_evaluated():
    # v' = 0 + 0.001 - 0.0025 cos(-1.5); x' = -0.5 + v'
    t = mc_step((-0.5, 0.0), 2)
    assert t.next_state[0] == pytest.approx(-0.49917684, abs=1e-8)
    assert t.next_state[1] == pytest.approx(0.00082316, abs=1e-8)
    assert t.reward == -1.0
    assert not t.terminal


def test_mc_goal_boundary():
    t = mc_step((0.599, 0.07), 2)
    assert t.next_state[0] == 0.6
    assert t.terminal and not t.timeout


def test_mc_left_wall_is_inelastic():
    t = mc_step((-1.2, -0.07), 0)
    assert t.next_state.tolist() == [-1.2, 0.0]


def test_mc_step_budget():
    t = mc_step((-0.5, 0.0), 1, step_index=1999, max_steps=2000)
    assert t.terminal and t.timeout
    assert t.step_index == 2000


@pytest.mark.parametrize("a", [-1, 3, 1.0, "1"])
def test_mc_rejects_bad_action(a):
    with pytest.raises(ValueError):
        mc_step((-0.5, 0.0), a)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 2), min_size=1, max_size=400))
def test_mc_ranges_hold_and_return_counts_steps(actions):
    s = mc_reset()
    total = 0.0
    for k, a in enumerate(actions):
        t = mc_step(s, a, k)
        x, v = t.next_state
        assert -1.2 <= x <= 0.6 and -0.07 <= v <= 0.07
        total += t.reward
        s = t.next_state
        if t.terminal:
            break
    assert total == -(k + 1)


def test_cp_reset_seeded_and_bounded():
    a = cp_reset(np.random.default_rng(5))
    b = cp_reset(np.random.default_rng(5))
    c = cp_reset(np.random.default_rng(6))
    assert a.tolist() == b.tolist()
    assert not np.array_equal(a, c)
    assert np.all(np.abs(a) <= 0.05)


def test_cp_first_euler_step():
    t = cp_step((0.0, 0.0, 0.0, 0.0), 1)
    xi, xi_dot, x, x_dot = t.next_state
    assert xi == 0.0           # angle integrates the old angular velocity
    assert xi_dot < 0.0        # rightward push tips the pole left
    assert x == 0.0 and x_dot > 0.0
    # closed form at rest: xi_acc = -(F/M) / (l (4/3 - m/M))
    m_tot = 1.1
    xi_acc = -(10.0 / m_tot) / (0.5 * (4.0 / 3.0 - 0.1 / m_tot))
    assert xi_dot == pytest.approx(0.02 * xi_acc, rel=1e-12)
    assert t.reward == 0.0 and not t.terminal


def test_cp_drop_is_penalized_and_terminal():
    t = cp_step((CP_DROP_ANGLE + 1e-3, 1.0, 0.0, 0.0), 1)
    assert abs(t.next_state[0]) > math.pi / 4
    assert t.reward == -1.0 and t.terminal and not t.timeout


def test_cp_soft_walls():
    t = cp_step((0.0, 0.0, 3.999, 1.0), 1)
    assert t.next_state[2] == 4.0
    assert t.next_state[3] == 0.0


def test_cp_balanced_episode_returns_zero():
    # push toward the side the pole leans to (a = 1 pushes right)
    s = np.zeros(4)
    total = 0.0
    for k in range(2000):
        a = 1 if s[0] + 0.2 * s[1] > 0 else 0
        t = cp_step(s, a, k)
        total += t.reward
        s = t.next_state
        if t.terminal:
            break
    assert t.step_index == 1000 and t.timeout
    assert total == 0.0


def test_environment_determinism():
    rng_a, rng_b = np.random.default_rng(1), np.random.default_rng(1)
    env = Environment("cart_pole")
    sa, sb = env.reset(rng_a), env.reset(rng_b)
    acts = np.random.default_rng(2).integers(2, size=200)
    for k, a in enumerate(acts):
        ta, tb = env.step(sa, int(a), k), env.step(sb, int(a), k)
        assert ta.next_state.tobytes() == tb.next_state.tobytes()
        sa, sb = ta.next_state, tb.next_state
        if ta.terminal:
            break


def test_envspec_invariants():
    with pytest.raises(ValueError):
        EnvSpec("x", 2, 1, 10)
    with pytest.raises(ValueError):
        EnvSpec("x", 2, 2, 0)
    with pytest.raises(ValueError):
        EnvSpec("x", 2, 2, 10, gamma=1.5)
    with pytest.raises(ValueError):
        Environment("acrobot")


def test_gridworld_degenerate_and_moves():
    m = gridworld_build(1, 1, (0, 0))
    assert m.n_states == 1 and m.terminal.tolist() == [True]
    assert np.all(m.P[0, :, 0] == 1.0)

    m = gridworld_build(2, 2, (1, 1))
    s = grid_state(2, 0, 1)
    right = 1
    assert m.P[s, right, grid_state(2, 1, 1)] == 1.0
    assert m.terminal[grid_state(2, 1, 1)]
    # wall bump keeps position
    assert m.P[s, 3, s] == 1.0

    with pytest.raises(ValueError):
        gridworld_build(0, 3)
    with pytest.raises(ValueError):
        gridworld_build(2, 2, (2, 0))
