"""Command line entry point: ``hordeshaping run|compare|curves|tune``.

Errors end the process with a nonzero exit code and a single JSON line on
stderr: ``{"error": <kind>, "message": <text>}`` (config errors also carry
``"keys"``).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .outputs import emit_outputs, load_curves, plot_data
from .runner import RunFailed, run_experiment, tune_scales
from .stats import compare_policies

EXIT_CONFIG = 2
EXIT_RUN = 3
EXIT_IO = 4
EXIT_USAGE = 5


def _fail(kind: str, message: str, code: int, **extra) -> int:
    print(json.dumps({"error": kind, "message": message, **extra}), file=sys.stderr)
    return code


def _parse_list(text: str) -> list[str]:
    return [p.strip() for p in text.split(",") if p.strip()]


def _parse_reference(text: str):
    kind, _, scales = text.partition(":")
    if not scales:
        raise argparse.ArgumentTypeError("reference must look like kind:s1,s2,...")
    return kind, [float(s) for s in scales.split(",")]


def cmd_run(args) -> int:
    cfg = load_config(args.config, seed=args.seed, output_dir=args.out)
    out = Path(args.out or cfg.output_dir or "results")

    def progress(res):
        logging.info("run %d done (%d learning steps)", res.run, res.learn_steps)

    result = run_experiment(cfg, workers=args.workers, progress=progress)
    emit_outputs(result, out)
    for p, m, se, n in result.summary():
        print(f"{p:28s} {m:12.2f} +- {se:8.2f}  (n={n})")
    print(f"wrote {out} in {result.elapsed:.1f}s")
    return 0


def cmd_compare(args) -> int:
    curves, _, _ = load_curves(args.input)
    c = compare_policies(curves, args.a, args.b, args.alternative)
    print(json.dumps({"policy_a": c.policy_a, "policy_b": c.policy_b, "mean_a": c.mean_a,
                      "mean_b": c.mean_b, "difference": c.difference, "t": c.t, "df": c.df,
                      "p": c.p, "alternative": args.alternative}))
    return 0


def cmd_curves(args) -> int:
    curves, steps, episodes = load_curves(args.input)
    table = steps if args.steps else curves
    sys.stdout.write(plot_data(table, episodes, _parse_list(args.policies), args.reference or ()))
    return 0


def cmd_tune(args) -> int:
    cfg = load_config(args.config, seed=args.seed)
    result = run_experiment(cfg, workers=args.workers)
    if args.out:
        emit_outputs(result, args.out)
    print(json.dumps(tune_scales(result), sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hordeshaping", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment config")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="Welch test on per-run summed returns of two policies")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--alternative", choices=("two-sided", "greater", "less"),
                   default="two-sided")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("curves", help="plot-ready learning curves (gnuplot columns)")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--policies", required=True, help="comma separated policy ids")
    p.add_argument("--reference", action="append", type=_parse_reference,
                   help="mean over a scale range, e.g. mc_height:20,40,60,80,100")
    p.add_argument("--steps", action="store_true", help="episode lengths instead of returns")
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser("tune", help="grid-search the best scale per potential")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_tune)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        if exc.code in (0, None):
            return 0
        return _fail("usage", "invalid command line", EXIT_USAGE)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as err:
        return _fail("config", str(err), EXIT_CONFIG,
                     keys=[path for path, _ in err.errors])
    except RunFailed as err:
        return _fail("run", str(err), EXIT_RUN)
    except (KeyError, ValueError) as err:
        return _fail("input", str(err).strip("'\""), EXIT_USAGE)
    except OSError as err:
        return _fail("io", str(err), EXIT_IO)


if __name__ == "__main__":
    sys.exit(main())
