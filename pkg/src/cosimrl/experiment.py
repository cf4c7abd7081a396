"""Training loop, repeated experiments, parameter sweeps and smoothing."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np

from .agent import Discretizer, LearnerParams, QLearner
from .cartpole import CartPoleEnv, listing_config, make_cartpole_env
from .env_core import CoSimEnv, EnvConfig

log = logging.getLogger(__name__)

MAX_STEPS = 200
SMOOTHING_WINDOW = 20

StepCallback = Callable[[int, int, CoSimEnv, int, "object"], None]


@dataclass
class TrainResult:
    episode_lengths: list[int]
    wall_time: float
    steps_total: int
    learner: QLearner | None = field(default=None, repr=False)


def train(
    env: CoSimEnv,
    learner: QLearner,
    n_episodes: int,
    max_steps: int = MAX_STEPS,
    visualize: bool = False,
    discretizer: Discretizer | None = None,
    on_step: Callable | None = None,
    render_sink: Callable[[str], None] = print,
) -> TrainResult:
    """Train ``learner`` in ``env`` for ``n_episodes`` episodes.

    ``on_step(episode, step, env, action, result)`` is called after every
    environment step, e.g. to record trajectories.
    """
    if n_episodes < 0:
        raise ValueError(f"n_episodes must be >= 0, got {n_episodes}")
    if max_steps < 1:
        raise ValueError(f"max_steps must be >= 1, got {max_steps}")
    encode = discretizer or Discretizer()
    start = time.perf_counter()
    lengths: list[int] = []
    steps_total = 0
    for episode in range(n_episodes):
        state = encode(env.reset())
        action = learner.random_action()
        for step in range(1, max_steps + 1):
            if visualize:
                render_sink(env.render())
            result = env.step(action)
            next_state = encode(result.observation)
            learner.learn(state, action, result.reward, next_state, result.done)
            if on_step is not None:
                on_step(episode, step, env, action, result)
            action = learner.act(next_state)
            learner.step_decay()
            state = next_state
            if result.done or step == max_steps:
                lengths.append(step)
                steps_total += step
                break
        learner.episode_decay()
    return TrainResult(lengths, time.perf_counter() - start, steps_total, learner)


@dataclass
class ExperimentResult:
    """Episode lengths of every successful repeat, in repeat order."""

    lengths: np.ndarray
    exec_times: list[float]
    steps_totals: list[int]
    seeds: list[int]
    config: dict
    failures: dict[int, str] = field(default_factory=dict)

    @property
    def n_repeats(self) -> int:
        return self.lengths.shape[0]

    @property
    def n_episodes(self) -> int:
        return self.lengths.shape[1]


@dataclass(frozen=True)
class Setup:
    """Everything needed to rebuild an environment in another process."""

    env_config: EnvConfig
    force_magnitude: float = 11.0

    def make_env(self) -> CartPoleEnv:
        return make_cartpole_env(self.env_config, self.force_magnitude)

    def snapshot(self) -> dict:
        return {**self.env_config.to_dict(), "force_magnitude": self.force_magnitude}


def _train_repeat(setup: Setup, params: LearnerParams, seed: int, n_episodes: int, max_steps: int):
    result = train(setup.make_env(), QLearner(params=params, seed=seed), n_episodes, max_steps)
    return result.episode_lengths, result.wall_time, result.steps_total


def run_experiment(
    env_config: EnvConfig,
    learner_params: LearnerParams = LearnerParams(),
    n_repeats: int = 5,
    n_episodes: int = 100,
    max_steps: int = MAX_STEPS,
    force_magnitude: float = 11.0,
    base_seed: int = 0,
    jobs: int = 1,
    on_step: Callable | None = None,
) -> ExperimentResult:
    """Train ``n_repeats`` fresh learners, repeat ``i`` seeded ``base_seed + i``.

    With ``jobs > 1`` each repeat runs in a worker process with a private
    environment; results are identical to the sequential run.
    """
    if n_repeats < 1:
        raise ValueError(f"n_repeats must be >= 1, got {n_repeats}")
    setup = Setup(env_config, force_magnitude)
    seeds = [base_seed + i for i in range(n_repeats)]
    outcomes: list = [None] * n_repeats
    failures: dict[int, str] = {}

    if jobs > 1 and on_step is None:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [
                pool.submit(_train_repeat, setup, learner_params, s, n_episodes, max_steps)
                for s in seeds
            ]
            for i, fut in enumerate(futures):
                try:
                    outcomes[i] = fut.result()
                except Exception as exc:  # noqa: BLE001 - surfaced in failures
                    failures[i] = f"{type(exc).__name__}: {exc}"
    else:
        env = setup.make_env()
        for i, seed in enumerate(seeds):
            repeat_hook = None
            if on_step is not None:
                def repeat_hook(ep, step, e, a, r, _i=i):
                    on_step(_i, ep, step, e, a, r)
            try:
                res = train(
                    env, QLearner(params=learner_params, seed=seed), n_episodes, max_steps,
                    on_step=repeat_hook,
                )
                env.reset()
                outcomes[i] = (res.episode_lengths, res.wall_time, res.steps_total)
            except Exception as exc:  # noqa: BLE001 - surfaced in failures
                failures[i] = f"{type(exc).__name__}: {exc}"

    for i, msg in failures.items():
        log.error("repeat %d (seed %d) failed: %s", i, seeds[i], msg)
    ok = [i for i in range(n_repeats) if outcomes[i] is not None]
    lengths = np.array([outcomes[i][0] for i in ok], dtype=int).reshape(len(ok), n_episodes)
    return ExperimentResult(
        lengths=lengths,
        exec_times=[outcomes[i][1] for i in ok],
        steps_totals=[outcomes[i][2] for i in ok],
        seeds=[seeds[i] for i in ok],
        config=setup.snapshot(),
        failures=failures,
    )


def moving_average(xs: Sequence[float], window: int = SMOOTHING_WINDOW) -> np.ndarray:
    """Trailing mean; the first ``window - 1`` points average what exists so far."""
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    xs = np.asarray(xs, dtype=float)
    if xs.size == 0:
        return xs
    csum = np.concatenate(([0.0], np.cumsum(xs)))
    idx = np.arange(1, xs.size + 1)
    lo = np.maximum(idx - window, 0)
    return (csum[idx] - csum[lo]) / (idx - lo)


def average_smoothed(lengths, window: int = SMOOTHING_WINDOW) -> np.ndarray:
    """Smooth each repeat's curve, then average across repeats."""
    try:
        matrix = np.asarray(lengths, dtype=float)
    except ValueError as exc:
        raise ValueError(f"ragged lengths matrix: {exc}") from exc
    if matrix.ndim != 2 or matrix.shape[0] == 0:
        raise ValueError(f"expected a non-empty 2-D matrix, got shape {matrix.shape}")
    return np.mean([moving_average(row, window) for row in matrix], axis=0)


class UndefinedMetricError(ValueError):
    pass


def per_step_time(result: ExperimentResult) -> float:
    """Pooled wall time per simulation step across repeats."""
    steps = sum(result.steps_totals)
    if steps <= 0:
        raise UndefinedMetricError("no simulation steps were taken")
    return sum(result.exec_times) / steps


# Sweep grids; parameters outside the swept one stay at the reference configuration.
SWEEP_GRIDS: dict[str, tuple] = {
    "force": (5.0, 11.0, 17.0),
    "mass": ((1.0, 10.0), (5.0, 10.0), (10.0, 10.0), (10.0, 5.0), (10.0, 1.0)),
    "reward": ((1.0, -200.0), (1.0, -100.0), (1.0, -50.0)),
    "timestep": (0.01, 0.05, 0.1, 0.5, 1.0),
}
SWEEP_EPISODES = {"force": 100, "mass": 200, "reward": 100, "timestep": 100}
SWEEP_REPEATS = {"force": 5, "mass": 5, "reward": 5, "timestep": 5}


def _fmt(v: float) -> str:
    return f"{v:g}"


def grid_label(sweep: str, point) -> str:
    if sweep in ("force", "timestep"):
        return _fmt(point)
    return ";".join(_fmt(v) for v in point)


def sweep_setup(sweep: str, point, base: Setup) -> Setup:
    cfg = base.env_config
    if sweep == "force":
        return replace(base, force_magnitude=float(point))
    if sweep == "mass":
        m_cart, m_pole = point
        return replace(base, env_config=cfg.with_updates(model_parameters={"m_cart": m_cart, "m_pole": m_pole}))
    if sweep == "reward":
        pos, neg = point
        return replace(base, env_config=cfg.with_updates(positive_reward=pos, negative_reward=neg))
    if sweep == "timestep":
        return replace(base, env_config=cfg.with_updates(time_step=point))
    raise ValueError(f"unknown sweep {sweep!r}; expected one of {sorted(SWEEP_GRIDS)}")


@dataclass
class SweepPoint:
    sweep: str
    label: str
    value: object
    result: ExperimentResult


def run_sweep(
    sweep: str,
    base: Setup | None = None,
    base_seed: int = 0,
    n_episodes: int | None = None,
    n_repeats: int | None = None,
    max_steps: int = MAX_STEPS,
    learner_params: LearnerParams = LearnerParams(),
    jobs: int = 1,
    points: Iterable | None = None,
) -> list[SweepPoint]:
    """Run one experiment per grid point, other parameters held at ``base``."""
    if sweep not in SWEEP_GRIDS:
        raise ValueError(f"unknown sweep {sweep!r}; expected one of {sorted(SWEEP_GRIDS)}")
    base = base or Setup(listing_config())
    n_episodes = SWEEP_EPISODES[sweep] if n_episodes is None else n_episodes
    n_repeats = SWEEP_REPEATS[sweep] if n_repeats is None else n_repeats
    out = []
    for point in SWEEP_GRIDS[sweep] if points is None else points:
        setup = sweep_setup(sweep, point, base)
        label = grid_label(sweep, point)
        log.info("sweep %s: grid point %s", sweep, label)
        result = run_experiment(
            setup.env_config, learner_params, n_repeats, n_episodes, max_steps,
            force_magnitude=setup.force_magnitude, base_seed=base_seed, jobs=jobs,
        )
        out.append(SweepPoint(sweep, label, point, result))
    return out
