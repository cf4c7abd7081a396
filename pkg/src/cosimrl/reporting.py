"""CSV output for experiment results.

Every file has a header row, '.' decimals and '\\n' line endings. Files of
one run are staged under temporary names and renamed only once all of them
were written, so a failure leaves no partial output behind.
"""

from __future__ import annotations

import csv
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

from .experiment import SweepPoint, average_smoothed, per_step_time

EPISODES_HEADER = ("sweep", "grid_point", "repeat", "episode", "length")
SUMMARY_HEADER = (
    "sweep", "grid_point", "n_repeats", "n_episodes",
    "mean_final_smoothed_length", "seconds_per_step", "wall_time_s",
)
CURVES_HEADER = ("sweep", "grid_point", "episode", "avg_smoothed_length")
TRAJECTORY_HEADER = ("t", "x", "x_dot", "theta", "theta_dot", "f", "reward", "done")


def _num(v: float) -> str:
    return repr(float(v))


def episodes_rows(points: Iterable[SweepPoint]):
    for p in points:
        for r, row in enumerate(p.result.lengths):
            for e, length in enumerate(row):
                yield (p.sweep, p.label, r, e + 1, int(length))


def summary_row(p: SweepPoint):
    res = p.result
    if res.n_repeats == 0:
        return (p.sweep, p.label, 0, res.n_episodes, "", "", _num(sum(res.exec_times)))
    final = average_smoothed(res.lengths)[-1] if res.n_episodes else float("nan")
    try:
        sps = _num(per_step_time(res))
    except ValueError:
        sps = ""
    return (
        p.sweep, p.label, res.n_repeats, res.n_episodes,
        _num(final), sps, _num(sum(res.exec_times)),
    )


def curves_rows(points: Iterable[SweepPoint]):
    for p in points:
        if p.result.n_repeats == 0 or p.result.n_episodes == 0:
            continue
        for e, v in enumerate(average_smoothed(p.result.lengths)):
            yield (p.sweep, p.label, e + 1, _num(v))


def result_tables(points: Sequence[SweepPoint]) -> dict[str, tuple]:
    return {
        "episodes.csv": (EPISODES_HEADER, list(episodes_rows(points))),
        "summary.csv": (SUMMARY_HEADER, [summary_row(p) for p in points]),
        "curves.csv": (CURVES_HEADER, list(curves_rows(points))),
    }


def write_tables(out_dir: str | Path, tables: dict[str, tuple]) -> list[Path]:
    """Write ``{relative_name: (header, rows)}`` under ``out_dir`` all-or-nothing."""
    out = Path(out_dir)
    staged: list[tuple[Path, Path]] = []
    done: list[Path] = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        for name, (header, rows) in tables.items():
            target = out / name
            target.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(prefix=".partial-", suffix=".csv", dir=target.parent)
            staged.append((Path(tmp), target))
            with os.fdopen(fd, "w", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(header)
                writer.writerows(rows)
        for tmp, target in staged:
            os.replace(tmp, target)
            done.append(target)
    except BaseException:
        for tmp, _ in staged:
            tmp.unlink(missing_ok=True)
        for target in done:
            target.unlink(missing_ok=True)
        raise
    return done


class TrajectoryRecorder:
    """Collects per-step rows for each (repeat, episode) of a Cart-Pole run."""

    def __init__(self):
        self.episodes: dict[tuple[int, int], list[tuple]] = {}

    def __call__(self, repeat, episode, step, env, action, result):
        rows = self.episodes.setdefault((repeat, episode), [])
        obs = dict(zip(env.config.model_output_names, result.observation))
        rows.append((
            _num(env.time),
            *(_num(obs.get(k, float("nan"))) for k in ("x", "x_dot", "theta", "theta_dot")),
            _num(env.last_force), _num(result.reward), int(result.done),
        ))

    def tables(self, prefix: str = "trajectories") -> dict[str, tuple]:
        return {
            f"{prefix}/repeat{r:02d}_episode{e + 1:04d}.csv": (TRAJECTORY_HEADER, rows)
            for (r, e), rows in sorted(self.episodes.items())
        }
