"""Significance tests over per-run summed evaluation returns."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats


@dataclass(frozen=True)
class WelchResult:
    t: float
    df: float
    p: float


def welch_t_test(a: Sequence[float], b: Sequence[float],
                 alternative: str = "two-sided") -> WelchResult:
    """Welch's unequal-variance t-test.

    ``alternative="greater"`` tests mean(a) > mean(b). When both samples
    have zero variance the test is degenerate: equal means give ``t=0,
    p=1``, different means give ``t=+-inf`` and p of 0 (or 1 for the
    one-sided test pointing the wrong way).
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if len(a) < 2 or len(b) < 2:
        raise ValueError("each sample needs at least two elements")
    if alternative not in ("two-sided", "greater", "less"):
        raise ValueError(f"unknown alternative {alternative!r}")
    na, nb = len(a), len(b)
    va, vb = a.var(ddof=1) / na, b.var(ddof=1) / nb
    diff = a.mean() - b.mean()
    se2 = va + vb
    if se2 == 0:
        if diff == 0:
            return WelchResult(0.0, float(na + nb - 2), 1.0)
        t = math.copysign(math.inf, diff)
        df = float(na + nb - 2)
    else:
        t = diff / math.sqrt(se2)
        df = se2 * se2 / (va * va / (na - 1) + vb * vb / (nb - 1))
    if alternative == "two-sided":
        p = 2.0 * stats.t.sf(abs(t), df)
    elif alternative == "greater":
        p = stats.t.sf(t, df)
    else:
        p = stats.t.cdf(t, df)
    return WelchResult(float(t), float(df), float(min(max(p, 0.0), 1.0)))


@dataclass(frozen=True)
class Comparison:
    policy_a: str
    policy_b: str
    mean_a: float
    mean_b: float
    t: float
    df: float
    p: float

    @property
    def difference(self) -> float:
        return self.mean_a - self.mean_b


def summed_returns(curves: dict, policy: str) -> np.ndarray:
    if policy not in curves:
        raise KeyError(f"unknown policy {policy!r}")
    return np.asarray(curves[policy], dtype=np.float64).sum(axis=1)


def compare_policies(curves: dict, policy_a: str, policy_b: str,
                     alternative: str = "two-sided") -> Comparison:
    """Welch test on the per-run sums of the evaluation returns of two policies."""
    sa = summed_returns(curves, policy_a)
    sb = summed_returns(curves, policy_b)
    if len(sa) != len(sb):
        raise ValueError(f"run counts differ: {len(sa)} vs {len(sb)}")
    res = welch_t_test(sa, sb, alternative)
    return Comparison(policy_a, policy_b, float(sa.mean()), float(sb.mean()), res.t, res.df, res.p)


def mean_of_scale_range(curves: dict, kind: str, scales: Sequence[float]) -> np.ndarray:
    """Per-checkpoint mean over the demons of one potential across a scale range and all runs.

    A reference series only: no single demon has this performance.
    """
    from ..shaping import PotentialSpec

    labels = [PotentialSpec(kind, float(c)).label for c in scales]
    if not labels:
        raise ValueError("empty scale range")
    missing = [lab for lab in labels if lab not in curves]
    if missing:
        raise KeyError(f"missing curves for {missing}")
    stack = np.stack([np.asarray(curves[lab], dtype=np.float64) for lab in labels])
    return stack.mean(axis=(0, 1))


def final_quarter_mean(curves: dict, policy: str) -> float:
    c = np.asarray(curves[policy], dtype=np.float64)
    k = max(1, c.shape[1] // 4)
    return float(c[:, -k:].mean())
