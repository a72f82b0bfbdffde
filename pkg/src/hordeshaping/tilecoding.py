"""Grid tile coding over a bounded box, one weight block per action.

Tiling ``i`` is the base grid shifted by ``i / (tilings * bins)`` of the
range along every dimension. The index of a feature is::

    action * tilings * bins**dims + tiling * bins**dims + cell

so the active set of any state-action pair is sorted and has exactly
``tilings`` entries. There is no hashing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit


@njit(cache=True)
def tile_cells(state, low, high, bins, tilings, out):
    """Write the within-action feature index of each tiling into ``out``."""
    dims = state.shape[0]
    per_tiling = bins ** dims
    for i in range(tilings):
        shift = i / tilings
        cell = 0
        stride = 1
        for k in range(dims):
            v = min(max(state[k], low[k]), high[k])
            u = (v - low[k]) / (high[k] - low[k])
            c = int(math.floor(u * bins + shift))
            if c >= bins:
                c = bins - 1
            elif c < 0:
                c = 0
            cell += c * stride
            stride *= bins
        out[i] = i * per_tiling + cell


@dataclass(frozen=True)
class SparseFeatures:
    active_indices: np.ndarray
    total_dim: int

    def dense(self) -> np.ndarray:
        v = np.zeros(self.total_dim)
        v[self.active_indices] = 1.0
        return v


@dataclass(frozen=True)
class TileCoder:
    low: tuple
    high: tuple
    action_count: int
    bins: int = 10
    tilings: int = 10
    _low: np.ndarray = field(init=False, repr=False, compare=False)
    _high: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.low) != len(self.high) or not self.low:
            raise ValueError("low/high must be non-empty and of equal length")
        if self.bins < 1 or self.tilings < 1 or self.action_count < 1:
            raise ValueError("bins, tilings and action_count must be >= 1")
        lo = np.asarray(self.low, dtype=np.float64)
        hi = np.asarray(self.high, dtype=np.float64)
        if np.any(hi <= lo):
            raise ValueError(f"bounds must be strictly ordered, got {self.low} / {self.high}")
        object.__setattr__(self, "_low", lo)
        object.__setattr__(self, "_high", hi)

    @property
    def dims(self) -> int:
        return len(self.low)

    @property
    def block_size(self) -> int:
        return self.tilings * self.bins ** self.dims

    @property
    def total_dim(self) -> int:
        return self.action_count * self.block_size

    def state_cells(self, s) -> np.ndarray:
        out = np.empty(self.tilings, dtype=np.int64)
        tile_cells(np.asarray(s, dtype=np.float64), self._low, self._high,
                   self.bins, self.tilings, out)
        return out

    def encode(self, s, a: int) -> SparseFeatures:
        if not 0 <= a < self.action_count:
            raise ValueError(f"action {a} out of range [0, {self.action_count})")
        return SparseFeatures(self.state_cells(s) + a * self.block_size, self.total_dim)


def encode(coder: TileCoder, s, a: int) -> SparseFeatures:
    return coder.encode(s, a)


def q_value(theta: np.ndarray, f: SparseFeatures) -> float:
    if len(theta) != f.total_dim:
        raise ValueError(f"theta has length {len(theta)}, features live in {f.total_dim}")
    return float(theta[f.active_indices].sum())


class TabularFeatures:
    """One-hot state-action features for integer states.

    Has the same ``encode``/``action_count``/``total_dim`` surface as
    :class:`TileCoder`, so the learner runs unchanged in the tabular case.
    """

    def __init__(self, n_states: int, action_count: int):
        self.n_states = n_states
        self.action_count = action_count
        self.total_dim = n_states * action_count

    def encode(self, s, a: int) -> SparseFeatures:
        return SparseFeatures(np.array([int(s) * self.action_count + a]), self.total_dim)


# Defaults for the two benchmarks. Cart-pole velocity bounds are not given by
# the task; values outside are clipped onto the edge tiles.
CP_XI_DOT_BOUND = 4.0
CP_X_DOT_BOUND = 3.0


def default_coder(env_name: str, bins: int = 10, tilings: int = 10,
                  low=None, high=None) -> TileCoder:
    if env_name == "mountain_car":
        lo, hi, actions = (-1.2, -0.07), (0.6, 0.07), 3
    elif env_name == "cart_pole":
        lo = (-math.pi / 4, -CP_XI_DOT_BOUND, -4.0, -CP_X_DOT_BOUND)
        hi = (math.pi / 4, CP_XI_DOT_BOUND, 4.0, CP_X_DOT_BOUND)
        actions = 2
    else:
        raise ValueError(f"no default tile coder for {env_name!r}")
    return TileCoder(tuple(low) if low is not None else lo,
                     tuple(high) if high is not None else hi,
                     actions, bins, tilings)
