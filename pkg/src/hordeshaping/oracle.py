"""Exact tabular references: value iteration, tabular Q-learning, shaped MDPs.

These are deliberately small and dense; they exist to check the function
approximation learner and the policy-preservation property of
potential-based shaping on problems where the answer is computable.

Absorbing states are handled like any other state (no value is forced to
zero), which makes ``Q*_shaped(s, a) = Q*(s, a) - phi(s)`` hold exactly for
every state-action pair, absorbing ones included.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np


@dataclass
class TabularMDP:
    P: np.ndarray          # (S, A, S) transition probabilities
    R: np.ndarray          # (S, A, S) rewards
    gamma: float
    terminal: np.ndarray   # (S,) bool; episode ends on entering these states

    def __post_init__(self):
        self.P = np.asarray(self.P, dtype=np.float64)
        self.R = np.asarray(self.R, dtype=np.float64)
        self.terminal = np.asarray(self.terminal, dtype=bool)
        if self.P.ndim != 3 or self.P.shape != self.R.shape or self.P.shape[0] != self.P.shape[2]:
            raise ValueError(f"inconsistent table shapes P{self.P.shape} R{self.R.shape}")
        if not np.all(np.isfinite(self.R)):
            raise ValueError("rewards must be finite")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")

    @property
    def n_states(self) -> int:
        return self.P.shape[0]

    @property
    def n_actions(self) -> int:
        return self.P.shape[1]

    def expected_reward(self) -> np.ndarray:
        return np.einsum("sat,sat->sa", self.P, self.R)


class NotStochasticError(ValueError):
    pass


def _check_rows(m: TabularMDP):
    sums = m.P.sum(axis=2)
    bad = np.argwhere(np.abs(sums - 1.0) > 1e-9)
    if len(bad):
        s, a = bad[0]
        raise NotStochasticError(f"P[{s},{a}] sums to {sums[s, a]!r}, not 1")
    if np.any(m.P < 0):
        raise NotStochasticError("negative transition probability")


def value_iteration(m: TabularMDP, tol: float = 1e-12, max_iter: int = 1_000_000,
                    residuals: list | None = None) -> np.ndarray:
    """Return Q* with sup-norm Bellman residual below ``tol``.

    If ``residuals`` is given, the residual of every sweep is appended to it.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    _check_rows(m)
    r_sa = m.expected_reward()
    q = np.zeros((m.n_states, m.n_actions))
    for _ in range(max_iter):
        q_new = r_sa + m.gamma * m.P @ q.max(axis=1)
        res = float(np.max(np.abs(q_new - q)))
        q = q_new
        if residuals is not None:
            residuals.append(res)
        if res < tol:
            return q
    raise RuntimeError(f"value iteration did not reach tol={tol} in {max_iter} sweeps")


def shape_tabular(m: TabularMDP, phi) -> TabularMDP:
    """Add ``gamma * phi(s') - phi(s)`` to every reward; dynamics are untouched."""
    phi = np.asarray(phi, dtype=np.float64)
    if phi.shape != (m.n_states,):
        raise ValueError(f"potential table has shape {phi.shape}, expected ({m.n_states},)")
    if not np.all(np.isfinite(phi)):
        raise ValueError("potential must be finite")
    F = m.gamma * phi[None, None, :] - phi[:, None, None]
    return TabularMDP(m.P.copy(), m.R + F, m.gamma, m.terminal.copy())


def greedy_sets(q: np.ndarray, decimals: int = 9) -> list[frozenset]:
    """Per-state set of maximizing actions after rounding at ``10**-decimals``."""
    qr = np.round(q, decimals)
    return [frozenset(np.flatnonzero(row == row.max()).tolist()) for row in qr]


def tabular_q_learning(m: TabularMDP, rng: np.random.Generator, steps: int,
                       alpha: float | Callable[[int], float] = 0.5,
                       episode_length: int = 50, q0: np.ndarray | None = None) -> np.ndarray:
    """Off-policy Q-learning under a uniform behavior policy.

    Episodes start in a uniformly drawn state and last ``episode_length``
    steps; absorbing states keep being bootstrapped like in
    :func:`value_iteration`. ``alpha`` is a constant or a function of the
    visit count of the updated pair.
    """
    q = np.zeros((m.n_states, m.n_actions)) if q0 is None else np.array(q0, dtype=np.float64)
    visits = np.zeros_like(q, dtype=np.int64)
    rate = alpha if callable(alpha) else (lambda n: alpha)
    s = int(rng.integers(m.n_states))
    for t in range(steps):
        if t % episode_length == 0:
            s = int(rng.integers(m.n_states))
        a = int(rng.integers(m.n_actions))
        s2 = int(rng.choice(m.n_states, p=m.P[s, a]))
        r = m.R[s, a, s2]
        visits[s, a] += 1
        delta = r + m.gamma * q[s2].max() - q[s, a]
        q[s, a] += rate(visits[s, a]) * delta
        s = s2
    return q


def chain_mdp(n: int = 5, step_reward: float = -1.0, gamma: float = 0.9) -> TabularMDP:
    """Deterministic left/right chain whose last state is an absorbing goal."""
    P = np.zeros((n, 2, n))
    R = np.zeros((n, 2, n))
    for s in range(n):
        if s == n - 1:
            P[s, :, s] = 1.0
            continue
        for a, step in enumerate((-1, 1)):
            s2 = min(max(s + step, 0), n - 1)
            P[s, a, s2] = 1.0
            R[s, a, s2] = step_reward
    terminal = np.zeros(n, dtype=bool)
    terminal[n - 1] = True
    return TabularMDP(P, R, gamma, terminal)


# Fixture files (JSON):
#   gridworld: {"width": 5, "height": 5, "goal": [4, 4], "step_reward": -1, "gamma": 0.95}
#   potential: {"states": 25, "values": [...]} or {"states": 25, "values": {"3": 1.5, ...}}
#              (missing states in the mapping form default to 0)

def load_gridworld(path) -> TabularMDP:
    from .envs import gridworld_build

    doc = json.loads(Path(path).read_text())
    unknown = set(doc) - {"width", "height", "goal", "step_reward", "gamma"}
    if unknown:
        raise ValueError(f"{path}: unknown keys {sorted(unknown)}")
    return gridworld_build(int(doc["width"]), int(doc["height"]), tuple(doc.get("goal") or ())
                           or None, float(doc.get("step_reward", -1.0)),
                           float(doc.get("gamma", 0.95)))


def load_potential_table(path) -> np.ndarray:
    doc = json.loads(Path(path).read_text())
    n = int(doc["states"])
    values = doc["values"]
    if isinstance(values, dict):
        table = np.zeros(n)
        for k, v in values.items():
            s = int(k)
            if not 0 <= s < n:
                raise ValueError(f"{path}: state {s} outside [0, {n})")
            table[s] = float(v)
    else:
        table = np.asarray(values, dtype=np.float64)
        if table.shape != (n,):
            raise ValueError(f"{path}: expected {n} values, got {table.shape}")
    if not np.all(np.isfinite(table)):
        raise ValueError(f"{path}: non-finite potential")
    return table


def save_potential_table(path, table) -> None:
    table = np.asarray(table, dtype=np.float64)
    Path(path).write_text(json.dumps({"states": len(table), "values": table.tolist()}))
