"""Greedy-GQ(lambda) demon over sparse binary features.

This is the readable reference implementation: one demon, one transition
at a time, dense eligibility trace. The experiment engine
(:mod:`hordeshaping.engine`) runs the same update with sparse traces over
many demons and is checked against this module.

Trace handling is Watkins-style: the inherited trace survives only when the
behavior action was greedy for the demon's current weights (ties count as
greedy), otherwise it is cut.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .envs import Transition
from .shaping import PotentialSpec, label_of
from .tilecoding import SparseFeatures


class DemonUpdateError(FloatingPointError):
    def __init__(self, demon_id, message):
        super().__init__(f"demon {demon_id}: {message}")
        self.demon_id = demon_id


@dataclass(frozen=True)
class DemonParams:
    alpha: float = 0.1
    beta: float = 0.0001
    lam: float = 0.4
    gamma: float = 0.99
    # treat step-budget terminations as non-terminal for the TD target
    bootstrap_timeout: bool = True

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta >= 0):
            raise ValueError(f"need alpha > 0 and beta >= 0, got {self.alpha}, {self.beta}")
        if not (0 <= self.lam <= 1 and 0 <= self.gamma <= 1):
            raise ValueError(f"lambda and gamma must lie in [0, 1], got {self.lam}, {self.gamma}")


@dataclass
class DemonState:
    coder: object                      # TileCoder or TabularFeatures
    params: DemonParams
    shaping: Optional[PotentialSpec] = None
    id: str = ""
    theta: np.ndarray = field(default=None)
    w: np.ndarray = field(default=None)
    e: np.ndarray = field(default=None)

    def __post_init__(self):
        n = self.coder.total_dim
        if self.theta is None:
            self.theta = np.zeros(n)
        if self.w is None:
            self.w = np.zeros(n)
        if self.e is None:
            self.e = np.zeros(n)
        if not self.id:
            self.id = label_of(self.shaping)

    def reset_trace(self):
        self.e[:] = 0.0

    def copy(self) -> "DemonState":
        return DemonState(self.coder, self.params, self.shaping, self.id,
                          self.theta.copy(), self.w.copy(), self.e.copy())


def action_values(d: DemonState, s) -> np.ndarray:
    return np.array([d.theta[d.coder.encode(s, a).active_indices].sum()
                     for a in range(d.coder.action_count)])


def greedy_action(d: DemonState, s) -> tuple[int, np.ndarray]:
    """Greedy action with ties going to the lowest index, and all Q-values."""
    q = action_values(d, s)
    return int(np.argmax(q)), q


def td_error(q_sa: float, q_next_greedy: float, r: float, gamma: float, terminal: bool) -> float:
    return r + (0.0 if terminal else gamma * q_next_greedy) - q_sa


def tdc_update(d: DemonState, phi: SparseFeatures, phi_next: Optional[SparseFeatures],
               delta: float) -> DemonState:
    """One TDC step, touching only the active indices; ``phi_next=None`` is the zero vector."""
    if not math.isfinite(delta):
        raise DemonUpdateError(d.id, f"non-finite TD error {delta!r}")
    p = d.params
    idx = phi.active_indices
    phi_w = d.w[idx].sum()
    np.add.at(d.theta, idx, p.alpha * delta)
    if phi_next is not None:
        np.add.at(d.theta, phi_next.active_indices, -p.alpha * p.gamma * phi_w)
    np.add.at(d.w, idx, p.beta * (delta - phi_w))
    return d


def greedy_gq_lambda_step(d: DemonState, t: Transition, shaped_r: float,
                          behavior_prob: float) -> DemonState:
    """One Greedy-GQ(lambda) update of ``d`` from transition ``t``.

    ``behavior_prob`` is the probability the behavior policy gave to
    ``t.action``; with cut traces it is only validated.
    """
    if not behavior_prob > 0:
        raise ValueError(f"behavior_prob must be positive, got {behavior_prob}")
    if not math.isfinite(shaped_r):
        raise DemonUpdateError(d.id, f"non-finite reward {shaped_r!r}")
    p = d.params
    coder = d.coder
    q_s = action_values(d, t.state)
    was_greedy = q_s[t.action] >= q_s.max()
    phi = coder.encode(t.state, t.action)
    cut = t.terminal and not (t.timeout and p.bootstrap_timeout)
    if cut:
        phi_next = None
        q_next = 0.0
    else:
        a_star, q_next_all = greedy_action(d, t.next_state)
        phi_next = coder.encode(t.next_state, a_star)
        q_next = q_next_all[a_star]
    delta = td_error(q_s[t.action], q_next, shaped_r, p.gamma, cut)
    if not math.isfinite(delta):
        raise DemonUpdateError(d.id, f"non-finite TD error {delta!r}")

    if was_greedy:
        d.e *= p.gamma * p.lam
    else:
        d.e[:] = 0.0
    np.add.at(d.e, phi.active_indices, 1.0)

    e_w = float(d.e @ d.w)
    phi_w = float(d.w[phi.active_indices].sum())
    d.theta += p.alpha * delta * d.e
    if phi_next is not None:
        np.add.at(d.theta, phi_next.active_indices, -p.alpha * p.gamma * (1 - p.lam) * e_w)
    d.w += p.beta * delta * d.e
    np.add.at(d.w, phi.active_indices, -p.beta * phi_w)
    if not (np.all(np.isfinite(d.theta[phi.active_indices]))
            and np.all(np.isfinite(d.w[phi.active_indices]))):
        raise DemonUpdateError(d.id, "weights became non-finite")
    return d


# Snapshot format (.npz): id (str), dims (int), theta (float64[dims]), w (float64[dims])

def save_snapshot(d: DemonState, path) -> Path:
    path = Path(path)
    with open(path, "wb") as fh:
        np.savez(fh, id=np.array(d.id), dims=np.array(len(d.theta)), theta=d.theta, w=d.w)
    return path


def load_snapshot(path) -> dict:
    with np.load(path) as z:
        snap = {"id": str(z["id"]), "dims": int(z["dims"]), "theta": z["theta"].copy(),
                "w": z["w"].copy()}
    if len(snap["theta"]) != snap["dims"] or len(snap["w"]) != snap["dims"]:
        raise ValueError(f"{path}: weight length does not match dims={snap['dims']}")
    return snap
