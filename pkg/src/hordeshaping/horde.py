"""Latent learning with a horde of shaped demons (reference path).

A fixed uniform behavior policy drives the environment. Every demon sees the
same transitions and learns its own greedy policy from its own shaped
reward. The behavior never looks at any demon.

Random streams follow the same layout as the experiment engine so the two
paths can be compared transition for transition:

* behavior: one block of ``max_steps`` actions drawn at the start of every
  episode;
* environment: start states (cart-pole only);
* evaluation: the start state, then ``max_steps`` uniforms for tie-breaks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .envs import Environment, Transition
from .gtd import DemonState, action_values, greedy_gq_lambda_step
from .shaping import build_reward_vector
from .voting import pick_uniform_argmax, preferences


@dataclass(frozen=True)
class BehaviorPolicy:
    action_count: int
    kind: str = "uniform"

    def __post_init__(self):
        if self.kind != "uniform":
            raise ValueError(f"only uniform behavior is supported, got {self.kind!r}")

    def probs(self) -> np.ndarray:
        return np.full(self.action_count, 1.0 / self.action_count)

    def prob(self, a: int) -> float:
        return 1.0 / self.action_count

    def sample(self, rng: np.random.Generator, size: Optional[int] = None):
        return rng.integers(self.action_count, size=size)


@dataclass(frozen=True)
class EpisodeRecord:
    length: int
    base_return: float


@dataclass(frozen=True)
class GreedyPolicy:
    demon: DemonState


@dataclass(frozen=True)
class EnsemblePolicy:
    members: Sequence[DemonState]
    voting: str = "rank"
    ties: str = "shared"


class Horde:
    def __init__(self, env: Environment, demons: list[DemonState],
                 behavior: Optional[BehaviorPolicy] = None):
        if not demons:
            raise ValueError("a horde needs at least one demon")
        for d in demons:
            if d.shaping is not None and d.shaping.kind != "custom_tabular" \
                    and not d.shaping.compatible_with(env.env_id):
                raise ValueError(f"demon {d.id} uses {d.shaping.kind}, "
                                 f"incompatible with {env.spec.id}")
        self.env = env
        self.demons = demons
        self.behavior = behavior or BehaviorPolicy(env.action_count)
        self.gamma = env.spec.gamma
        self.state = None
        self.step_index = 0

    def start_episode(self, env_rng: Optional[np.random.Generator] = None):
        self.state = self.env.reset(env_rng)
        self.step_index = 0
        for d in self.demons:
            d.reset_trace()
        return self.state

    def learn_step(self, rng: Optional[np.random.Generator] = None, action: Optional[int] = None,
                   order: Optional[Sequence[int]] = None) -> Transition:
        """Take one behavior action and update every demon from the transition.

        ``order`` permutes the demon update schedule; results do not depend on it.
        """
        if self.state is None:
            raise RuntimeError("no episode in progress; call start_episode first")
        a = int(self.behavior.sample(rng)) if action is None else int(action)
        t = self.env.step(self.state, a, self.step_index)
        rewards = build_reward_vector(t, [d.shaping for d in self.demons], self.gamma)
        prob = self.behavior.prob(a)
        for j in (range(len(self.demons)) if order is None else order):
            greedy_gq_lambda_step(self.demons[j], t, rewards.components[j][1], prob)
        self.state = t.next_state
        self.step_index = t.step_index
        if t.terminal:
            self.state = None
        return t

    def run_episode(self, behavior_rng: np.random.Generator,
                    env_rng: Optional[np.random.Generator] = None,
                    max_steps: Optional[int] = None) -> EpisodeRecord:
        max_steps = max_steps or self.env.spec.max_steps
        self.start_episode(env_rng)
        actions = self.behavior.sample(behavior_rng, size=max_steps)
        total = 0.0
        for k in range(max_steps):
            t = self.learn_step(action=actions[k])
            total += t.reward
            if t.terminal:
                break
        self.state = None
        return EpisodeRecord(t.step_index, total)


def _policy_action(policy, s, u: float) -> int:
    if isinstance(policy, GreedyPolicy):
        return pick_uniform_argmax(action_values(policy.demon, s), u)
    q = np.array([action_values(d, s) for d in policy.members])
    return pick_uniform_argmax(preferences(q, policy.voting, policy.ties), u)


def evaluate_policy(policy, env: Environment, rng: np.random.Generator,
                    max_steps: Optional[int] = None) -> tuple[float, int]:
    """Run one learning-free episode; returns (undiscounted base return, steps)."""
    max_steps = max_steps or env.spec.max_steps
    s = env.reset(rng)
    uniforms = rng.random(max_steps)
    total = 0.0
    for k in range(max_steps):
        t = env.step(s, _policy_action(policy, s, uniforms[k]), k)
        total += t.reward
        s = t.next_state
        if t.terminal:
            return total, t.step_index
    return total, max_steps
