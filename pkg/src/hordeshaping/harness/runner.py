"""Multi-run experiment orchestration.

Every run gets its own ``SeedSequence([seed, run])`` from which three named
streams are spawned (behavior, environment, evaluation), so a run's results
depend only on the master seed and its index, never on the worker count.
All policies evaluated at one checkpoint share the same start state and
tie-break uniforms.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..engine import RunEngine
from ..envs import Environment
from ..gtd import DemonParams, DemonUpdateError
from ..tilecoding import default_coder
from .config import ExperimentConfig
from .stats import compare_policies

log = logging.getLogger(__name__)


class RunFailed(RuntimeError):
    pass


@dataclass
class RunResult:
    run: int
    returns: np.ndarray   # (policies, checkpoints)
    steps: np.ndarray     # (policies, checkpoints)
    learn_steps: int = 0


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    policies: list
    episodes: list            # episode index of each checkpoint
    returns: np.ndarray       # (policies, runs, checkpoints)
    steps: np.ndarray
    elapsed: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def curves(self) -> dict:
        return {p: self.returns[i] for i, p in enumerate(self.policies)}

    def compare(self, a: str, b: str, alternative: str = "two-sided"):
        return compare_policies(self.curves, a, b, alternative)

    def summary(self) -> list[tuple[str, float, float, int]]:
        rows = []
        for i, p in enumerate(self.policies):
            sums = self.returns[i].sum(axis=1)
            n = len(sums)
            se = float(sums.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
            rows.append((p, float(sums.mean()), se, n))
        return rows

    def default_comparisons(self) -> list[tuple[str, str]]:
        if self.config.comparisons:
            return [tuple(c) for c in self.config.comparisons]
        if "base" not in self.policies:
            return []
        return [(p, "base") for p in self.policies if p != "base"]


def build_engine(cfg: ExperimentConfig) -> RunEngine:
    env = Environment(cfg.environment, cfg.max_steps, cfg.gamma)
    coder = default_coder(cfg.environment, cfg.tiling.bins, cfg.tiling.tilings,
                          cfg.tiling.low, cfg.tiling.high)
    k = cfg.step_scale()
    params = DemonParams(cfg.alpha / k, cfg.beta / k, cfg.lambda_, cfg.gamma,
                         cfg.bootstrap_timeout)
    return RunEngine(env, coder, cfg.shapings(), params)


def run_streams(seed: int, run: int):
    behavior, env, evaluation = np.random.SeedSequence([seed, run]).spawn(3)
    return (np.random.Generator(np.random.PCG64(behavior)),
            np.random.Generator(np.random.PCG64(env)),
            np.random.Generator(np.random.PCG64(evaluation)))


def policy_table(cfg: ExperimentConfig) -> list[tuple[str, list[int], str, str]]:
    table = [(lab, [j], "greedy", "shared") for j, lab in enumerate(cfg.demon_labels())]
    for e in cfg.ensembles:
        table.append((e.name, cfg.ensemble_members(e), e.voting, e.ties))
    return table


def run_single(cfg: ExperimentConfig, run: int) -> RunResult:
    engine = build_engine(cfg)
    env = engine.env
    max_steps = env.spec.max_steps
    behavior_rng, env_rng, eval_rng = run_streams(cfg.seed, run)
    table = policy_table(cfg)
    n_ckpt = cfg.episodes // cfg.eval_interval
    returns = np.zeros((len(table), n_ckpt))
    steps = np.zeros((len(table), n_ckpt), dtype=np.int64)
    learn_steps = 0
    for ep in range(1, cfg.episodes + 1):
        start = env.reset(env_rng)
        actions = behavior_rng.integers(env.action_count, size=max_steps)
        try:
            n, _ = engine.learn_episode(start, actions)
        except DemonUpdateError as err:
            raise RunFailed(f"run {run}, episode {ep}: {err}") from err
        learn_steps += n
        if ep % cfg.eval_interval == 0:
            c = ep // cfg.eval_interval - 1
            # one start state and tie-break block per checkpoint, shared by all policies
            start_e = env.reset(eval_rng)
            uniforms = eval_rng.random(max_steps)
            for i, (_, members, scheme, ties) in enumerate(table):
                returns[i, c], steps[i, c] = engine.evaluate(members, scheme, start_e, uniforms,
                                                             ties)
    return RunResult(run, returns, steps, learn_steps)


def _run_single_args(args):
    return run_single(*args)


def run_experiment(cfg: ExperimentConfig, workers: int | None = None,
                   progress=None) -> ExperimentResult:
    """Run every seed of ``cfg`` and collect all learning curves.

    ``progress``, if given, is called with each finished :class:`RunResult`.
    """
    workers = workers or cfg.workers
    t0 = time.perf_counter()
    jobs = [(cfg, r) for r in range(cfg.runs)]
    results = []
    if workers > 1 and cfg.runs > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for res in pool.map(_run_single_args, jobs):
                results.append(res)
                if progress:
                    progress(res)
    else:
        for job in jobs:
            res = run_single(*job)
            results.append(res)
            if progress:
                progress(res)
    results.sort(key=lambda r: r.run)
    policies = cfg.policy_ids()
    returns = np.stack([r.returns for r in results], axis=1)
    steps = np.stack([r.steps for r in results], axis=1)
    episodes = [cfg.eval_interval * (c + 1) for c in range(cfg.episodes // cfg.eval_interval)]
    elapsed = time.perf_counter() - t0
    log.info("%d runs finished in %.1fs", cfg.runs, elapsed)
    return ExperimentResult(cfg, policies, episodes, returns, steps, elapsed,
                            {"learn_steps": [r.learn_steps for r in results]})


def tune_scales(result: ExperimentResult) -> dict:
    """Best scale per potential kind by mean summed evaluation return."""
    best: dict = {}
    for sp in result.config.shapings():
        if sp is None:
            continue
        i = result.policies.index(sp.label)
        score = float(result.returns[i].sum(axis=1).mean())
        if sp.kind not in best or score > best[sp.kind][1]:
            best[sp.kind] = (sp.scale, score)
    return {k: v[0] for k, v in best.items()}
