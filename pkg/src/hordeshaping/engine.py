"""Compiled learning and evaluation kernels for whole runs.

All demons of a run live in two ``(demons, features)`` matrices. Eligibility
traces are kept sparse: a ring buffer per demon of past feature sets with a
scalar coefficient each, so that ``e = sum_k coef_k * phi_k``. A trace entry
is dropped once its coefficient falls below ``TRACE_TOL``; with the cut
traces used here buffers rarely hold more than a handful of entries.

The kernels consume pre-drawn random numbers only, which keeps them
deterministic and lets the reference implementation in
:mod:`hordeshaping.horde` replay the exact same stream.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np
from numba import njit

from .envs import Environment, env_step
from .gtd import DemonParams, DemonState, DemonUpdateError
from .shaping import BASE, PotentialSpec, builtin_potential, label_of
from .tilecoding import TileCoder, tile_cells

TRACE_TOL = 1e-20

GREEDY = 0
MAJORITY = 1
RANK = 2
SCHEME_IDS = {"greedy": GREEDY, "majority": MAJORITY, "rank": RANK}


@njit(cache=True)
def learn_episode(env_id, start, actions, max_steps, low, high, bins, tilings, n_actions,
                  kinds, scales, xi_dot_max, gamma, alpha, beta, lam, bootstrap_timeout,
                  theta, w, tr_idx, tr_coef, tr_head, tr_count):
    """Run one behavior episode, updating every demon in place.

    Returns ``(steps, base_return, failed_demon)``; ``failed_demon`` is -1
    unless a demon produced a non-finite TD error, in which case the episode
    stops at that step.
    """
    n_demons = theta.shape[0]
    cap = tr_coef.shape[1]
    block = tilings * bins ** start.shape[0]
    decay = gamma * lam
    cells_s = np.empty(tilings, dtype=np.int64)
    cells_n = np.empty(tilings, dtype=np.int64)
    s = start.copy()
    s_next = np.empty_like(s)
    tr_count[:] = 0
    tr_head[:] = 0
    total = 0.0
    steps = 0
    tile_cells(s, low, high, bins, tilings, cells_s)
    for t in range(max_steps):
        a = actions[t]
        r, ended, timeout = env_step(env_id, s, a, t, max_steps, s_next)
        done = ended or timeout
        term = ended or (timeout and not bootstrap_timeout)
        total += r
        steps = t + 1
        tile_cells(s_next, low, high, bins, tilings, cells_n)
        a_off = a * block
        for d in range(n_demons):
            th = theta[d]
            ww = w[d]
            q_a = 0.0
            q_max = -np.inf
            for b in range(n_actions):
                q = 0.0
                off = b * block
                for i in range(tilings):
                    q += th[off + cells_s[i]]
                if b == a:
                    q_a = q
                if q > q_max:
                    q_max = q
            was_greedy = q_a >= q_max

            a_star = -1
            q_next = 0.0
            if not term:
                best = -np.inf
                for b in range(n_actions):
                    q = 0.0
                    off = b * block
                    for i in range(tilings):
                        q += th[off + cells_n[i]]
                    if q > best:
                        best = q
                        a_star = b
                q_next = best

            rd = r
            if kinds[d] != BASE:
                rd = r + scales[d] * (gamma * builtin_potential(kinds[d], s_next, xi_dot_max)
                                      - builtin_potential(kinds[d], s, xi_dot_max))
            if term:
                delta = rd - q_a
            else:
                delta = rd + gamma * q_next - q_a
            if not math.isfinite(delta):
                return steps, total, d

            # trace: decay or cut, drop negligible entries, append phi(s, a)
            head = tr_head[d]
            count = tr_count[d]
            if was_greedy:
                for k in range(count):
                    tr_coef[d, (head + k) % cap] *= decay
                while count > 0 and tr_coef[d, head] < TRACE_TOL:
                    head = (head + 1) % cap
                    count -= 1
            else:
                count = 0
            if count == cap:
                head = (head + 1) % cap
                count -= 1
            pos = (head + count) % cap
            for i in range(tilings):
                tr_idx[d, pos, i] = a_off + cells_s[i]
            tr_coef[d, pos] = 1.0
            count += 1
            tr_head[d] = head
            tr_count[d] = count

            e_w = 0.0
            for k in range(count):
                slot = (head + k) % cap
                acc = 0.0
                for i in range(tilings):
                    acc += ww[tr_idx[d, slot, i]]
                e_w += tr_coef[d, slot] * acc
            phi_w = 0.0
            for i in range(tilings):
                phi_w += ww[a_off + cells_s[i]]

            for k in range(count):
                slot = (head + k) % cap
                step = alpha * delta * tr_coef[d, slot]
                for i in range(tilings):
                    th[tr_idx[d, slot, i]] += step
            if not term:
                corr = alpha * gamma * (1.0 - lam) * e_w
                off = a_star * block
                for i in range(tilings):
                    th[off + cells_n[i]] -= corr

            for k in range(count):
                slot = (head + k) % cap
                step = beta * delta * tr_coef[d, slot]
                for i in range(tilings):
                    ww[tr_idx[d, slot, i]] += step
            corr = beta * phi_w
            for i in range(tilings):
                ww[a_off + cells_s[i]] -= corr

        if done:
            break
        s[:] = s_next
        cells_s[:] = cells_n
    return steps, total, -1


@njit(cache=True)
def _pick(values, u):
    best = values.max()
    n_best = 0
    for b in range(values.shape[0]):
        if values[b] == best:
            n_best += 1
    k = min(int(u * n_best), n_best - 1)
    for b in range(values.shape[0]):
        if values[b] == best:
            if k == 0:
                return b
            k -= 1
    return 0


@njit(cache=True)
def evaluate_episode(env_id, start, uniforms, max_steps, low, high, bins, tilings, n_actions,
                     theta, members, scheme, shared_ties):
    """One learning-free rollout; returns ``(base_return, steps)``.

    With ``shared_ties`` equal Q-values earn equal votes; otherwise the lower
    action index wins the tie inside each member.
    """
    block = tilings * bins ** start.shape[0]
    cells = np.empty(tilings, dtype=np.int64)
    q = np.empty(n_actions)
    pref = np.empty(n_actions)
    s = start.copy()
    s_next = np.empty_like(s)
    total = 0.0
    for t in range(max_steps):
        tile_cells(s, low, high, bins, tilings, cells)
        pref[:] = 0.0
        for m in range(members.shape[0]):
            th = theta[members[m]]
            for b in range(n_actions):
                acc = 0.0
                off = b * block
                for i in range(tilings):
                    acc += th[off + cells[i]]
                q[b] = acc
            if scheme == GREEDY:
                pref[:] += q
            elif scheme == MAJORITY:
                if shared_ties:
                    q_max = q.max()
                    for b in range(n_actions):
                        if q[b] == q_max:
                            pref[b] += 1.0
                else:
                    pref[np.argmax(q)] += 1.0
            else:
                for b in range(n_actions):
                    rank = 0
                    for c in range(n_actions):
                        if q[c] < q[b] or (not shared_ties and q[c] == q[b] and c > b):
                            rank += 1
                    pref[b] += rank
        a = _pick(pref, uniforms[t])
        r, ended, timeout = env_step(env_id, s, a, t, max_steps, s_next)
        total += r
        if ended or timeout:
            return total, t + 1
        s[:] = s_next
    return total, max_steps


def trace_capacity(gamma: float, lam: float, max_steps: int) -> int:
    decay = gamma * lam
    if decay <= 0:
        return 1
    if decay >= 1:
        return max_steps + 1
    return int(min(max_steps + 1, math.ceil(math.log(TRACE_TOL) / math.log(decay)) + 2))


class RunEngine:
    """All demons of one run, stored as weight matrices."""

    def __init__(self, env: Environment, coder: TileCoder,
                 shapings: Sequence[Optional[PotentialSpec]], params: DemonParams):
        if coder.action_count != env.action_count or coder.dims != env.spec.state_dim:
            raise ValueError("tile coder does not match the environment")
        self.env = env
        self.coder = coder
        self.params = params
        self.shapings = list(shapings)
        kinds, scales = [], []
        for sp in self.shapings:
            if sp is None:
                kinds.append(BASE)
                scales.append(0.0)
                continue
            if not sp.compatible_with(env.env_id):
                raise ValueError(f"potential {sp.kind} is not defined for {env.spec.id}")
            kinds.append(sp.kind_id)
            scales.append(sp.scale)
        xi = {sp.xi_dot_max for sp in self.shapings if sp is not None}
        if len(xi) > 1:
            raise ValueError("all demons of a run must share xi_dot_max")
        self.xi_dot_max = float(xi.pop()) if xi else 4.0
        self.kinds = np.array(kinds, dtype=np.int64)
        self.scales = np.array(scales, dtype=np.float64)
        n, dim = len(self.shapings), coder.total_dim
        self.theta = np.zeros((n, dim))
        self.w = np.zeros((n, dim))
        cap = trace_capacity(params.gamma, params.lam, env.spec.max_steps)
        self.tr_idx = np.zeros((n, cap, coder.tilings), dtype=np.int64)
        self.tr_coef = np.zeros((n, cap))
        self.tr_head = np.zeros(n, dtype=np.int64)
        self.tr_count = np.zeros(n, dtype=np.int64)
        self._low = np.asarray(coder.low, dtype=np.float64)
        self._high = np.asarray(coder.high, dtype=np.float64)

    def learn_episode(self, start, actions) -> tuple[int, float]:
        p = self.params
        steps, ret, bad = learn_episode(
            self.env.env_id, np.asarray(start, dtype=np.float64),
            np.asarray(actions, dtype=np.int64), self.env.spec.max_steps,
            self._low, self._high, self.coder.bins, self.coder.tilings, self.coder.action_count,
            self.kinds, self.scales, self.xi_dot_max, p.gamma, p.alpha, p.beta, p.lam,
            p.bootstrap_timeout, self.theta, self.w, self.tr_idx, self.tr_coef, self.tr_head,
            self.tr_count)
        if bad >= 0:
            raise DemonUpdateError(label_of(self.shapings[bad]),
                                   f"non-finite TD error at step {steps}")
        return int(steps), float(ret)

    def evaluate(self, members: Sequence[int], scheme: str, start, uniforms,
                 ties: str = "shared") -> tuple[float, int]:
        if ties not in ("shared", "index"):
            raise ValueError(f"unknown tie rule {ties!r}")
        ret, steps = evaluate_episode(
            self.env.env_id, np.asarray(start, dtype=np.float64),
            np.asarray(uniforms, dtype=np.float64), self.env.spec.max_steps,
            self._low, self._high, self.coder.bins, self.coder.tilings, self.coder.action_count,
            self.theta, np.asarray(members, dtype=np.int64), SCHEME_IDS[scheme], ties == "shared")
        return float(ret), int(steps)

    def demon_states(self) -> list[DemonState]:
        return [DemonState(self.coder, self.params, sp, theta=self.theta[j].copy(),
                           w=self.w[j].copy()) for j, sp in enumerate(self.shapings)]
