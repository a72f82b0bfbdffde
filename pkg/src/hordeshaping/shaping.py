"""Potential functions and potential-based shaping rewards.

A shaped demon ``j`` receives ``R + c_j * (gamma * phi_j(s') - phi_j(s))``.
The base learner is represented by ``None`` in demon lists and receives
``R`` unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from numba import njit

from .envs import CART_POLE, MOUNTAIN_CAR, Transition

BASE = 0
MC_POSITION = 1
MC_HEIGHT = 2
MC_SPEED = 3
MC_SPEED_MAGNITUDE = 4
CP_ANGLE = 5
CP_ANGULAR_SPEED = 6
CUSTOM_TABULAR = 7

KINDS = {
    "mc_position": MC_POSITION,
    "mc_height": MC_HEIGHT,
    "mc_speed": MC_SPEED,
    # |x_dot| / 0.07 squared: rest maps to 0 instead of 0.25
    "mc_speed_magnitude": MC_SPEED_MAGNITUDE,
    "cp_angle": CP_ANGLE,
    "cp_angular_speed": CP_ANGULAR_SPEED,
    "custom_tabular": CUSTOM_TABULAR,
}

KIND_ENV = {
    MC_POSITION: MOUNTAIN_CAR,
    MC_HEIGHT: MOUNTAIN_CAR,
    MC_SPEED: MOUNTAIN_CAR,
    MC_SPEED_MAGNITUDE: MOUNTAIN_CAR,
    CP_ANGLE: CART_POLE,
    CP_ANGULAR_SPEED: CART_POLE,
}

XI_DOT_MAX = 4.0


@njit(cache=True)
def builtin_potential(kind, s, xi_dot_max):
    if kind == MC_POSITION:
        return (s[0] + 1.2) / 1.8
    if kind == MC_HEIGHT:
        return (math.sin(3.0 * s[0]) + 1.0) / 2.0
    if kind == MC_SPEED:
        v = (s[1] + 0.07) / 0.14
        return v * v
    if kind == MC_SPEED_MAGNITUDE:
        v = abs(s[1]) / 0.07
        return v * v
    if kind == CP_ANGLE:
        v = min(abs(s[0]), math.pi / 4) / (math.pi / 4)
        return -v * v
    if kind == CP_ANGULAR_SPEED:
        v = min(abs(s[1]), xi_dot_max) / xi_dot_max
        return -v * v
    return 0.0


@dataclass(frozen=True)
class PotentialSpec:
    kind: str
    scale: float = 1.0
    xi_dot_max: float = XI_DOT_MAX
    table: Optional[np.ndarray] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if not (math.isfinite(self.scale) and self.scale >= 0):
            raise ValueError(f"scale must be finite and non-negative, got {self.scale}")
        if self.kind == "custom_tabular" and self.table is None:
            raise ValueError("custom_tabular potentials need a table")

    @property
    def kind_id(self) -> int:
        return KINDS[self.kind]

    @property
    def label(self) -> str:
        return f"{self.kind}@{self.scale:g}"

    def compatible_with(self, env_id: int) -> bool:
        return KIND_ENV.get(self.kind_id) == env_id


def potential(spec: PotentialSpec, s) -> float:
    """Unscaled potential of state ``s``."""
    if spec.kind == "custom_tabular":
        return float(spec.table[int(s)])
    s = np.asarray(s, dtype=np.float64)
    expected = 2 if KIND_ENV[spec.kind_id] == MOUNTAIN_CAR else 4
    if s.shape != (expected,):
        raise ValueError(f"potential {spec.kind} expects a {expected}-d state, got shape {s.shape}")
    return builtin_potential(spec.kind_id, s, spec.xi_dot_max)


def shaping_reward(phi_s: float, phi_next: float, gamma: float, c: float) -> float:
    return c * (gamma * phi_next - phi_s)


def label_of(spec: Optional[PotentialSpec]) -> str:
    return "base" if spec is None else spec.label


@dataclass(frozen=True)
class ShapedRewardVector:
    base: float
    components: list  # [(demon label, shaped reward)]

    def values(self) -> np.ndarray:
        return np.array([v for _, v in self.components])


def build_reward_vector(t: Transition, demons: Sequence[Optional[PotentialSpec]],
                        gamma: float) -> ShapedRewardVector:
    comps = []
    for spec in demons:
        if spec is None:
            comps.append(("base", t.reward))
            continue
        f = shaping_reward(potential(spec, t.state), potential(spec, t.next_state), gamma,
                           spec.scale)
        comps.append((spec.label, t.reward + f))
    return ShapedRewardVector(t.reward, comps)
