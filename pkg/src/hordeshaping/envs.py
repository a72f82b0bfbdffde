"""Episodic benchmark environments: mountain car, cart-pole and a tabular gridworld.

The continuous environments are pure functions of ``(state, action, step)``;
the only randomness is the cart-pole start state, drawn from a caller-owned
``numpy.random.Generator``. The scalar dynamics are numba-compiled so the
experiment engine can call them from inside its kernels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

MOUNTAIN_CAR = 0
CART_POLE = 1

ENV_IDS = {"mountain_car": MOUNTAIN_CAR, "cart_pole": CART_POLE}

# mountain car
MC_X_MIN, MC_X_MAX = -1.2, 0.6
MC_V_MIN, MC_V_MAX = -0.07, 0.07
MC_START = (-0.5, 0.0)
MC_MAX_STEPS = 2000

# cart-pole, state layout (xi, xi_dot, x, x_dot)
CP_GRAVITY = 9.8
CP_CART_MASS = 1.0
CP_POLE_MASS = 0.1
CP_HALF_LENGTH = 0.5
CP_FORCE = 10.0
CP_TAU = 0.02
CP_X_LIMIT = 4.0
CP_DROP_ANGLE = math.pi / 4
CP_START_RANGE = 0.05
CP_MAX_STEPS = 1000


@dataclass(frozen=True)
class EnvSpec:
    id: str
    state_dim: int
    action_count: int
    max_steps: int
    gamma: float = 0.99

    def __post_init__(self):
        if self.action_count < 2:
            raise ValueError(f"action_count must be >= 2, got {self.action_count}")
        if self.max_steps < 1:
            raise ValueError(f"max_steps must be >= 1, got {self.max_steps}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")


@dataclass(frozen=True)
class Transition:
    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray
    terminal: bool
    step_index: int
    # terminal only because the step budget ran out; the task itself goes on
    timeout: bool = False


@njit(cache=True)
def mc_dynamics(x, v, a):
    """One mountain-car step; returns ``(x', v', reached_goal)``."""
    u = a - 1
    v = v + 0.001 * u - 0.0025 * math.cos(3.0 * x)
    v = min(max(v, MC_V_MIN), MC_V_MAX)
    x = min(max(x + v, MC_X_MIN), MC_X_MAX)
    if x == MC_X_MIN:
        v = 0.0
    return x, v, x >= MC_X_MAX


@njit(cache=True)
def cp_dynamics(xi, xi_dot, x, x_dot, a):
    """One Euler step of the classical cart-pole; returns the new state and a drop flag."""
    force = CP_FORCE if a == 1 else -CP_FORCE
    total_mass = CP_CART_MASS + CP_POLE_MASS
    pole_ml = CP_POLE_MASS * CP_HALF_LENGTH
    cos_xi = math.cos(xi)
    sin_xi = math.sin(xi)
    temp = (force + pole_ml * xi_dot * xi_dot * sin_xi) / total_mass
    xi_acc = (CP_GRAVITY * sin_xi - cos_xi * temp) / (
        CP_HALF_LENGTH * (4.0 / 3.0 - CP_POLE_MASS * cos_xi * cos_xi / total_mass)
    )
    x_acc = temp - pole_ml * xi_acc * cos_xi / total_mass

    x_new = x + CP_TAU * x_dot
    x_dot_new = x_dot + CP_TAU * x_acc
    xi_new = xi + CP_TAU * xi_dot
    xi_dot_new = xi_dot + CP_TAU * xi_acc
    # soft walls: the cart stops instead of crashing
    if x_new <= -CP_X_LIMIT or x_new >= CP_X_LIMIT:
        x_new = min(max(x_new, -CP_X_LIMIT), CP_X_LIMIT)
        x_dot_new = 0.0
    return xi_new, xi_dot_new, x_new, x_dot_new, abs(xi_new) > CP_DROP_ANGLE


@njit(cache=True)
def env_step(env_id, state, a, step_index, max_steps, out):
    """Advance ``state`` by action ``a`` writing the next state into ``out``.

    ``step_index`` is the number of steps already taken in the episode.
    Returns ``(reward, terminal, timeout)`` where ``terminal`` means the task
    ended (goal or drop) and ``timeout`` that the step budget ran out first.
    """
    budget_spent = step_index + 1 >= max_steps
    if env_id == MOUNTAIN_CAR:
        x, v, goal = mc_dynamics(state[0], state[1], a)
        out[0] = x
        out[1] = v
        return -1.0, goal, budget_spent and not goal
    xi, xi_dot, x, x_dot, dropped = cp_dynamics(state[0], state[1], state[2], state[3], a)
    out[0] = xi
    out[1] = xi_dot
    out[2] = x
    out[3] = x_dot
    if dropped:
        return -1.0, True, False
    return 0.0, False, budget_spent


def _check_action(a, action_count):
    if not isinstance(a, (int, np.integer)) or not 0 <= a < action_count:
        raise ValueError(f"invalid action {a!r}; expected an integer in [0, {action_count})")
    return int(a)


def mc_reset() -> np.ndarray:
    return np.array(MC_START, dtype=np.float64)


def mc_step(s, a, step_index: int = 0, max_steps: int = MC_MAX_STEPS) -> Transition:
    a = _check_action(a, 3)
    s = np.asarray(s, dtype=np.float64)
    nxt = np.empty(2)
    r, term, timeout = env_step(MOUNTAIN_CAR, s, a, step_index, max_steps, nxt)
    return Transition(s.copy(), a, r, nxt, bool(term or timeout), step_index + 1, bool(timeout))


def cp_reset(rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(-CP_START_RANGE, CP_START_RANGE, size=4)


def cp_step(s, a, step_index: int = 0, max_steps: int = CP_MAX_STEPS) -> Transition:
    a = _check_action(a, 2)
    s = np.asarray(s, dtype=np.float64)
    nxt = np.empty(4)
    r, term, timeout = env_step(CART_POLE, s, a, step_index, max_steps, nxt)
    return Transition(s.copy(), a, r, nxt, bool(term or timeout), step_index + 1, bool(timeout))


class Environment:
    """Thin object wrapper used by the horde; one instance per run."""

    def __init__(self, name: str, max_steps: int | None = None, gamma: float = 0.99):
        if name not in ENV_IDS:
            raise ValueError(f"unknown environment {name!r}; choose from {sorted(ENV_IDS)}")
        self.env_id = ENV_IDS[name]
        if self.env_id == MOUNTAIN_CAR:
            self.spec = EnvSpec(name, 2, 3, max_steps or MC_MAX_STEPS, gamma)
        else:
            self.spec = EnvSpec(name, 4, 2, max_steps or CP_MAX_STEPS, gamma)

    @property
    def action_count(self) -> int:
        return self.spec.action_count

    def reset(self, rng: np.random.Generator | None = None) -> np.ndarray:
        if self.env_id == MOUNTAIN_CAR:
            return mc_reset()
        if rng is None:
            raise ValueError("cart-pole reset needs an RNG stream")
        return cp_reset(rng)

    def step(self, s, a, step_index: int = 0) -> Transition:
        if self.env_id == MOUNTAIN_CAR:
            return mc_step(s, a, step_index, self.spec.max_steps)
        return cp_step(s, a, step_index, self.spec.max_steps)


# Gridworld actions: (dx, dy)
GRID_MOVES = ((0, -1), (1, 0), (0, 1), (-1, 0))
GRID_ACTION_NAMES = ("up", "right", "down", "left")


def gridworld_build(width: int, height: int, goal=None, step_reward: float = -1.0,
                    gamma: float = 0.95):
    """Deterministic 4-action gridworld as a :class:`~hordeshaping.oracle.TabularMDP`.

    States are numbered ``y * width + x``. Bumping into a wall leaves the
    agent in place; the goal is absorbing with zero reward. Every other
    transition, including the one entering the goal, pays ``step_reward``.
    """
    from .oracle import TabularMDP

    if width < 1 or height < 1:
        raise ValueError(f"degenerate grid {width}x{height}")
    gx, gy = goal if goal is not None else (width - 1, height - 1)
    if not (0 <= gx < width and 0 <= gy < height):
        raise ValueError(f"goal {goal} outside {width}x{height} grid")
    n = width * height
    goal_state = gy * width + gx
    P = np.zeros((n, 4, n))
    R = np.zeros((n, 4, n))
    for s in range(n):
        x, y = s % width, s // width
        for a, (dx, dy) in enumerate(GRID_MOVES):
            if s == goal_state:
                P[s, a, s] = 1.0
                continue
            nx = min(max(x + dx, 0), width - 1)
            ny = min(max(y + dy, 0), height - 1)
            s2 = ny * width + nx
            P[s, a, s2] = 1.0
            R[s, a, s2] = step_reward
    terminal = np.zeros(n, dtype=bool)
    terminal[goal_state] = True
    return TabularMDP(P, R, gamma, terminal)


def grid_state(width: int, x: int, y: int) -> int:
    return y * width + x
