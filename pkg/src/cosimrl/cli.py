"""Command-line front end.

    cosimrl train      --episodes 100 --out runs/train
    cosimrl experiment --episodes 100 --repeats 5 --force 17 --seed 7 --out runs/f17
    cosimrl sweep      --sweep force --out runs/force
    cosimrl validate

Exit status: 0 on success, 1 on usage errors, 2 on runtime or validation failures.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import oracles
from .agent import QTABLE_HEADER, LearnerParams, QLearner
from .cartpole import listing_config
from .env_core import ConfigError, EnvConfig
from .experiment import (
    MAX_STEPS,
    SWEEP_GRIDS,
    ExperimentResult,
    Setup,
    SweepPoint,
    average_smoothed,
    per_step_time,
    run_experiment,
    run_sweep,
    train,
)
from .reporting import TrajectoryRecorder, result_tables, write_tables

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2

log = logging.getLogger("cosimrl")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive(kind):
    def conv(text):
        try:
            value = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid {kind.__name__} value: {text!r}") from None
        if not (math.isfinite(value) and value > 0):
            raise argparse.ArgumentTypeError(f"must be > 0, got {text!r}")
        return value
    return conv


def _non_negative_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid int value: {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text!r}")
    return value


def _finite(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid float value: {text!r}") from None
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"must be finite, got {text!r}")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    g = common.add_argument_group("model and learner")
    g.add_argument("--config", type=Path, help="JSON environment configuration")
    g.add_argument("--force", type=_positive(float), help="force magnitude |f| in N (default 11)")
    g.add_argument("--m-cart", type=_positive(float))
    g.add_argument("--m-pole", type=_positive(float))
    g.add_argument("--theta0-deg", type=_finite, help="initial pole angle from +x axis, degrees")
    g.add_argument("--pole-length", type=_positive(float), help="full pole length in m (default 1)")
    g.add_argument("--gravity", type=_positive(float), help="g in m/s^2 (default 9.81)")
    g.add_argument("--time-step", type=_positive(float))
    g.add_argument("--pos-reward", type=_finite)
    g.add_argument("--neg-reward", type=_finite)
    g.add_argument("--episodes", type=_non_negative_int)
    g.add_argument("--repeats", type=_positive(int))
    g.add_argument("--max-steps", type=_positive(int), default=MAX_STEPS)
    g.add_argument("--seed", type=int, default=0, help="base seed; repeat i uses seed + i")
    g.add_argument("--decay-per-episode", action="store_true",
                   help="decay exploration once per episode instead of per step")
    g.add_argument("--jobs", type=_positive(int), default=1, help="worker processes for repeats")
    g.add_argument("--out", type=Path, help="output directory for CSV files")
    g.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="cosimrl", description="Tabular Q-learning on a co-simulated Cart-Pole.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name, help_text in (("train", "train one learner"), ("experiment", "repeated training runs")):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("--trajectory", action="store_true", help="dump per-step CSV per episode")
        p.add_argument("--visualize", action="store_true", help="print a text render every step")
    p = sub.add_parser("sweep", parents=[common], help="one of the four parameter sweeps")
    p.add_argument("--sweep", required=True, choices=sorted(SWEEP_GRIDS))
    sub.add_parser("validate", help="run physics and learner self-checks")
    return parser


@dataclass
class Invocation:
    command: str
    setup: Setup | None
    learner: LearnerParams
    args: argparse.Namespace
    recorder: TrajectoryRecorder | None = None
    trained: QLearner | None = None


def parse_args(argv=None) -> Invocation:
    """Parse ``argv``; usage problems exit with status 1 before anything is written."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "validate":
        return Invocation("validate", None, LearnerParams(), args)
    try:
        setup = _setup_from_args(args)
        _check_out(args.out)
    except (ConfigError, UsageError, OSError, ValueError) as exc:
        parser.error(str(exc))
    learner = LearnerParams(decay_per_episode=args.decay_per_episode)
    return Invocation(args.command, setup, learner, args)


def _check_out(out: Path | None):
    if out is None:
        return
    if out.exists() and not out.is_dir():
        raise UsageError(f"--out {out} exists and is not a directory")
    probe = out
    while not probe.exists():
        probe = probe.parent
    if not os.access(probe, os.W_OK):
        raise UsageError(f"--out {out} is not writable")


def _setup_from_args(args) -> Setup:
    cfg = EnvConfig.load(args.config) if args.config else listing_config()
    params = {}
    for flag, key in (("m_cart", "m_cart"), ("m_pole", "m_pole"),
                      ("pole_length", "pole_length"), ("gravity", "g")):
        value = getattr(args, flag)
        if value is not None:
            params[key] = value
    if args.theta0_deg is not None:
        params["theta_0"] = math.radians(args.theta0_deg)
    changes = {"model_parameters": params}
    if args.time_step is not None:
        changes["time_step"] = args.time_step
    if args.pos_reward is not None:
        changes["positive_reward"] = args.pos_reward
    if args.neg_reward is not None:
        changes["negative_reward"] = args.neg_reward
    cfg = cfg.with_updates(**changes)
    setup = Setup(cfg, args.force if args.force is not None else 11.0)
    setup.make_env()  # surfaces missing keys as usage errors
    return setup


def _summarise(point: SweepPoint) -> str:
    res = point.result
    if res.n_repeats == 0 or res.n_episodes == 0:
        return f"{point.sweep} {point.label}: no episodes"
    final = average_smoothed(res.lengths)[-1]
    try:
        sps = f"{per_step_time(res):.3e}"
    except ValueError:
        sps = "n/a"
    return (f"{point.sweep} {point.label}: final avg smoothed length {final:.2f}, "
            f"seconds per step {sps}")


def _run_train(inv: Invocation) -> list[SweepPoint]:
    a = inv.args
    recorder = TrajectoryRecorder() if a.trajectory else None
    hook = None
    if recorder is not None:
        def hook(ep, step, env, action, result):
            recorder(0, ep, step, env, action, result)
    learner = QLearner(params=inv.learner, seed=a.seed)
    res = train(inv.setup.make_env(), learner, a.episodes if a.episodes is not None else 100,
                a.max_steps, visualize=a.visualize, on_step=hook)
    result = ExperimentResult(
        lengths=np.array(res.episode_lengths, dtype=int).reshape(1, -1),
        exec_times=[res.wall_time], steps_totals=[res.steps_total],
        seeds=[a.seed], config=inv.setup.snapshot(),
    )
    inv.recorder = recorder
    inv.trained = learner
    return [SweepPoint("train", "base", None, result)]


def _run_experiment(inv: Invocation) -> list[SweepPoint]:
    a = inv.args
    recorder = TrajectoryRecorder() if a.trajectory else None
    hook = recorder
    if a.visualize:
        def hook(r, ep, step, env, action, result):
            print(env.render())
            if recorder is not None:
                recorder(r, ep, step, env, action, result)
    result = run_experiment(
        inv.setup.env_config, inv.learner,
        n_repeats=a.repeats or 5,
        n_episodes=a.episodes if a.episodes is not None else 100,
        max_steps=a.max_steps, force_magnitude=inv.setup.force_magnitude,
        base_seed=a.seed, jobs=a.jobs, on_step=hook,
    )
    inv.recorder = recorder
    return [SweepPoint("experiment", "base", None, result)]


def _run_sweep(inv: Invocation) -> list[SweepPoint]:
    a = inv.args
    return run_sweep(
        a.sweep, inv.setup, base_seed=a.seed, n_episodes=a.episodes, n_repeats=a.repeats,
        max_steps=a.max_steps, learner_params=inv.learner, jobs=a.jobs,
    )


def run(inv: Invocation) -> int:
    if inv.command == "validate":
        results = oracles.run_all()
        for r in results:
            print(r.line())
        ok = all(r.passed for r in results)
        print("all checks passed" if ok else "validation FAILED")
        return EXIT_OK if ok else EXIT_RUNTIME

    try:
        points = {"train": _run_train, "experiment": _run_experiment, "sweep": _run_sweep}[
            inv.command
        ](inv)
    except Exception as exc:  # noqa: BLE001 - reported as runtime failure
        log.error("%s failed: %s", inv.command, exc)
        return EXIT_RUNTIME

    for p in points:
        print(_summarise(p))
    failed = any(p.result.failures for p in points)
    for p in points:
        for i, msg in p.result.failures.items():
            print(f"{p.sweep} {p.label}: repeat {i} failed: {msg}", file=sys.stderr)

    if inv.args.out is not None:
        tables = result_tables(points)
        if inv.recorder is not None:
            tables.update(inv.recorder.tables())
        if inv.trained is not None:
            tables["qtable.csv"] = (QTABLE_HEADER, list(inv.trained.rows()))
        try:
            write_tables(inv.args.out, tables)
        except OSError as exc:
            log.error("could not write results to %s: %s", inv.args.out, exc)
            return EXIT_RUNTIME
    return EXIT_RUNTIME if failed else EXIT_OK


def main(argv=None) -> int:
    inv = parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if getattr(inv.args, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    return run(inv)


if __name__ == "__main__":
    sys.exit(main())
