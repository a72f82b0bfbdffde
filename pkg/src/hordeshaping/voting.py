"""Ensemble action selection by majority or rank voting.

Both schemes take a ``(members, actions)`` array of Q-values and return the
per-action preference totals. The ensemble then acts greedily on the
totals, breaking ties uniformly at random.

Ties inside a member follow one of two rules:

* ``"shared"`` (default): equal Q-values earn equal votes. Majority gives a
  vote to every maximizing action; rank gives each action the number of
  actions it strictly beats.
* ``"index"``: the lower action index wins. Majority gives exactly one vote
  per member and ranks are always a permutation of ``0..n-1``.

Without ties both rules agree.
"""

from __future__ import annotations

import numpy as np

SCHEMES = ("majority", "rank")
TIE_RULES = ("shared", "index")


def _as_table(q_values) -> np.ndarray:
    q = np.asarray(q_values, dtype=np.float64)
    if q.ndim == 1:
        q = q[None, :]
    if q.ndim != 2 or q.shape[1] < 1:
        raise ValueError(f"expected a (members, actions) table, got shape {q.shape}")
    return q


def _check_ties(ties):
    if ties not in TIE_RULES:
        raise ValueError(f"unknown tie rule {ties!r}; choose from {TIE_RULES}")


def majority_ballots(q_values, ties: str = "shared") -> np.ndarray:
    """Per-member 0/1 votes for the greedy action(s)."""
    _check_ties(ties)
    q = _as_table(q_values)
    if ties == "shared":
        return (q == q.max(axis=1, keepdims=True)).astype(np.float64)
    ballots = np.zeros_like(q)
    ballots[np.arange(q.shape[0]), np.argmax(q, axis=1)] = 1.0
    return ballots


def majority_votes(q_values, ties: str = "shared") -> np.ndarray:
    return majority_ballots(q_values, ties).sum(axis=0)


def rank_ranks(q_values, ties: str = "shared") -> np.ndarray:
    """Per-member ranks, ``n-1`` for the most preferred action down to 0."""
    _check_ties(ties)
    q = _as_table(q_values)
    if ties == "shared":
        return (q[:, None, :] < q[:, :, None]).sum(axis=2)
    n = q.shape[1]
    # stable sort on -q keeps ascending index order among ties
    order = np.argsort(-q, axis=1, kind="stable")
    ranks = np.empty_like(order)
    ranks[np.arange(q.shape[0])[:, None], order] = np.arange(n - 1, -1, -1)
    return ranks


def rank_votes(q_values, ties: str = "shared") -> np.ndarray:
    return rank_ranks(q_values, ties).sum(axis=0).astype(np.float64)


def preferences(q_values, scheme: str, ties: str = "shared") -> np.ndarray:
    if scheme == "majority":
        return majority_votes(q_values, ties)
    if scheme == "rank":
        return rank_votes(q_values, ties)
    raise ValueError(f"unknown voting scheme {scheme!r}; choose from {SCHEMES}")


def pick_uniform_argmax(values, u: float) -> int:
    """Map a uniform draw ``u`` in [0, 1) to one of the maximizing indices."""
    values = np.asarray(values)
    best = np.flatnonzero(values == values.max())
    return int(best[min(int(u * len(best)), len(best) - 1)])


def ensemble_action(P, rng: np.random.Generator) -> int:
    return pick_uniform_argmax(P, rng.random())
