"""CSV emission and loading.

Files written by :func:`emit_outputs`:

* ``curves.csv``       policy,run,checkpoint,episode,return,steps
* ``summary.csv``      policy,mean_sum_return,stderr,n
* ``comparisons.csv``  policy_a,policy_b,mean_a,mean_b,t,df,p
* ``manifest.json``    resolved config, master seed, package version

Rows follow the config's policy order, then run, then checkpoint. Floats are
written with ``repr`` so identical runs give identical bytes.
"""

from __future__ import annotations

import csv
import json
from collections import defaultdict
from pathlib import Path

import numpy as np

from .. import __version__
from .stats import compare_policies, mean_of_scale_range


def _f(x) -> str:
    return repr(float(x))


def _write(path: Path, header, rows):
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
    except OSError as err:
        raise OSError(f"cannot write {path}: {err.strerror or err}") from err


def emit_outputs(result, out_dir) -> dict:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise OSError(f"cannot create {out}: {err.strerror or err}") from err
    paths = {}

    rows = []
    for i, p in enumerate(result.policies):
        for r in range(result.returns.shape[1]):
            for c, ep in enumerate(result.episodes):
                rows.append((p, r, c, ep, _f(result.returns[i, r, c]), int(result.steps[i, r, c])))
    paths["curves"] = out / "curves.csv"
    _write(paths["curves"], ("policy", "run", "checkpoint", "episode", "return", "steps"), rows)

    paths["summary"] = out / "summary.csv"
    _write(paths["summary"], ("policy", "mean_sum_return", "stderr", "n"),
           [(p, _f(m), _f(se), n) for p, m, se, n in result.summary()])

    rows = []
    if result.returns.shape[1] >= 2:
        curves = result.curves
        for a, b in result.default_comparisons():
            c = compare_policies(curves, a, b)
            rows.append((a, b, _f(c.mean_a), _f(c.mean_b), _f(c.t), _f(c.df), _f(c.p)))
    paths["comparisons"] = out / "comparisons.csv"
    _write(paths["comparisons"], ("policy_a", "policy_b", "mean_a", "mean_b", "t", "df", "p"), rows)

    manifest = {"version": __version__, "seed": result.config.seed,
                "config": result.config.to_json(), "policies": result.policies,
                "episodes": result.episodes}
    paths["manifest"] = out / "manifest.json"
    try:
        paths["manifest"].write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    except OSError as err:
        raise OSError(f"cannot write {paths['manifest']}: {err.strerror or err}") from err
    return paths


def load_curves(in_dir) -> tuple[dict, dict, list]:
    """Read ``curves.csv`` back into ``{policy: (runs, checkpoints)}`` arrays.

    Returns ``(returns, steps, episodes)``.
    """
    path = Path(in_dir) / "curves.csv"
    if not path.exists():
        raise FileNotFoundError(f"{path} not found")
    ret = defaultdict(dict)
    stp = defaultdict(dict)
    episodes = {}
    order = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            p = row["policy"]
            if p not in ret:
                order.append(p)
            key = (int(row["run"]), int(row["checkpoint"]))
            ret[p][key] = float(row["return"])
            stp[p][key] = int(row["steps"])
            episodes[int(row["checkpoint"])] = int(row["episode"])

    def to_array(table):
        runs = 1 + max(k[0] for k in table)
        ckpts = 1 + max(k[1] for k in table)
        a = np.full((runs, ckpts), np.nan)
        for (r, c), v in table.items():
            a[r, c] = v
        return a

    returns = {p: to_array(ret[p]) for p in order}
    steps = {p: to_array(stp[p]) for p in order}
    return returns, steps, [episodes[c] for c in sorted(episodes)]


def plot_data(curves: dict, episodes: list, policies: list, references=()) -> str:
    """Whitespace-separated columns for gnuplot: episode, then mean and stderr per series.

    ``references`` is a list of ``(kind, scales)`` for mean-over-scale-range
    series (mean only, stderr column written as 0).
    """
    cols = []
    names = []
    for p in policies:
        if p not in curves:
            raise KeyError(f"unknown policy {p!r}")
        c = np.asarray(curves[p])
        se = c.std(axis=0, ddof=1) / np.sqrt(c.shape[0]) if c.shape[0] > 1 else np.zeros(c.shape[1])
        cols.append((c.mean(axis=0), se))
        names.append(p)
    for kind, scales in references:
        cols.append((mean_of_scale_range(curves, kind, scales), np.zeros(len(episodes))))
        names.append(f"mean[{kind}@{'/'.join(f'{s:g}' for s in scales)}]")
    lines = ["# episode " + " ".join(f"{n}_mean {n}_stderr" for n in names)]
    for k, ep in enumerate(episodes):
        vals = " ".join(f"{m[k]:.6f} {s[k]:.6f}" for m, s in cols)
        lines.append(f"{ep} {vals}")
    return "\n".join(lines) + "\n"
