"""Gym-style environment contract over a co-simulation backend."""

from __future__ import annotations

import abc
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Any, Mapping, NamedTuple, Sequence

import numpy as np

from .cosim import Backend, SimulationError


class ConfigError(ValueError):
    """Invalid or incomplete environment configuration."""


class EnvStateError(RuntimeError):
    """Environment used out of order, e.g. stepped before reset."""


class InitializationError(RuntimeError):
    """Backend failed to initialize during reset."""


CONFIG_KEYS = (
    "model_input_names",
    "model_output_names",
    "model_parameters",
    "time_step",
    "positive_reward",
    "negative_reward",
)


def _name_list(value, key):
    if isinstance(value, str):
        value = [value]
    names = tuple(value)
    if not names:
        raise ConfigError(f"{key} must not be empty")
    if not all(isinstance(n, str) and n for n in names):
        raise ConfigError(f"{key} must contain non-empty strings, got {names!r}")
    if len(set(names)) != len(names):
        raise ConfigError(f"{key} contains duplicates: {names!r}")
    return names


@dataclass(frozen=True)
class EnvConfig:
    """Model-specific configuration handed to an environment.

    ``model_input_names`` may be given as a single string.
    """

    model_input_names: tuple[str, ...]
    model_output_names: tuple[str, ...]
    model_parameters: Mapping[str, float] = field(default_factory=dict)
    time_step: float = 0.05
    positive_reward: float = 1.0
    negative_reward: float = -100.0

    def __post_init__(self):
        inputs = _name_list(self.model_input_names, "model_input_names")
        outputs = _name_list(self.model_output_names, "model_output_names")
        params = {}
        for k, v in dict(self.model_parameters).items():
            try:
                params[str(k)] = float(v)
            except (TypeError, ValueError):
                raise ConfigError(f"model parameter {k!r} is not a real number: {v!r}") from None
        clash = (set(inputs) & set(outputs)) | ((set(inputs) | set(outputs)) & set(params))
        if clash:
            raise ConfigError(f"names appear in more than one collection: {sorted(clash)}")
        try:
            time_step = float(self.time_step)
        except (TypeError, ValueError):
            raise ConfigError(f"time_step is not a number: {self.time_step!r}") from None
        if not (math.isfinite(time_step) and time_step > 0):
            raise ConfigError(f"time_step must be > 0, got {self.time_step!r}")
        object.__setattr__(self, "model_input_names", inputs)
        object.__setattr__(self, "model_output_names", outputs)
        object.__setattr__(self, "model_parameters", MappingProxyType(params))
        object.__setattr__(self, "time_step", time_step)
        object.__setattr__(self, "positive_reward", float(self.positive_reward))
        object.__setattr__(self, "negative_reward", float(self.negative_reward))

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "EnvConfig":
        unknown = set(data) - set(CONFIG_KEYS)
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        for key in ("model_input_names", "model_output_names", "time_step"):
            if key not in data:
                raise ConfigError(f"missing configuration key: {key}")
        return cls(**data)

    @classmethod
    def from_json(cls, text: str) -> "EnvConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON configuration: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("configuration JSON must be an object")
        return cls.from_dict(data)

    @classmethod
    def load(cls, path: str | Path) -> "EnvConfig":
        return cls.from_json(Path(path).read_text())

    def to_dict(self) -> dict[str, Any]:
        return {
            "model_input_names": list(self.model_input_names),
            "model_output_names": list(self.model_output_names),
            "model_parameters": dict(self.model_parameters),
            "time_step": self.time_step,
            "positive_reward": self.positive_reward,
            "negative_reward": self.negative_reward,
        }

    def with_updates(self, **changes) -> "EnvConfig":
        data = self.to_dict()
        params = data["model_parameters"]
        params.update(changes.pop("model_parameters", {}))
        data.update(changes)
        return EnvConfig(**data)

    # MappingProxyType is neither hashable nor picklable
    def __hash__(self):
        return hash(json.dumps(self.to_dict(), sort_keys=True))

    def __reduce__(self):
        return (EnvConfig.from_dict, (self.to_dict(),))


@dataclass(frozen=True)
class Discrete:
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"Discrete space needs n >= 1, got {self.n!r}")

    def contains(self, x) -> bool:
        if isinstance(x, (bool, np.bool_)):
            return False
        if isinstance(x, (int, np.integer)):
            return 0 <= x < self.n
        return False

    def __contains__(self, x):
        return self.contains(x)


@dataclass(frozen=True)
class Box:
    """Per-dimension bounds; entries may be infinite."""

    low: tuple[float, ...]
    high: tuple[float, ...]

    def __post_init__(self):
        low = tuple(float(v) for v in self.low)
        high = tuple(float(v) for v in self.high)
        if len(low) != len(high):
            raise ValueError("Box low and high must have equal length")
        if any(lo > hi for lo, hi in zip(low, high)):
            raise ValueError(f"Box needs low <= high, got {low} / {high}")
        object.__setattr__(self, "low", low)
        object.__setattr__(self, "high", high)

    @property
    def shape(self):
        return (len(self.low),)

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return x.shape == self.shape and bool(np.all(x >= self.low) and np.all(x <= self.high))

    def __contains__(self, x):
        return self.contains(x)


class StepResult(NamedTuple):
    observation: np.ndarray
    reward: float
    done: bool


def default_reward(done: bool, cfg: EnvConfig) -> float:
    return cfg.negative_reward if done else cfg.positive_reward


class CoSimEnv(abc.ABC):
    """Environment that drives a co-simulation backend one ``time_step`` at a time.

    Subclasses describe the action and observation spaces, translate an
    action into backend inputs and decide when an episode is over. The
    reward hook defaults to ``default_reward`` and may be overridden.
    """

    units: Mapping[str, str] = {}

    def __init__(self, config: EnvConfig, backend: Backend):
        self.config = config
        self.backend = backend
        desc = backend.descriptor
        if set(config.model_input_names) != set(desc.input_names):
            raise ConfigError(
                f"model_input_names {list(config.model_input_names)} do not match "
                f"backend inputs {list(desc.input_names)}"
            )
        missing = [n for n in config.model_output_names if n not in desc.output_names]
        if missing:
            raise ConfigError(f"unknown model outputs: {missing}")
        unknown = [n for n in config.model_parameters if n not in desc.parameter_names]
        if unknown:
            raise ConfigError(f"unknown model parameters: {unknown}")
        self._input_order = [config.model_input_names.index(n) for n in desc.input_names]
        self._output_index = [desc.output_names.index(n) for n in config.model_output_names]
        self.action_space = self._get_action_space()
        self.observation_space = self._get_observation_space()
        self._observation: np.ndarray | None = None
        self._steps = 0
        self.done = False

    @property
    def time(self) -> float:
        return self._steps * self.config.time_step

    @property
    def observation(self) -> np.ndarray | None:
        return None if self._observation is None else self._observation.copy()

    @abc.abstractmethod
    def _get_action_space(self):
        ...

    @abc.abstractmethod
    def _get_observation_space(self):
        ...

    @abc.abstractmethod
    def _action_to_inputs(self, action) -> Sequence[float]:
        """Input values ordered as ``config.model_input_names``."""

    @abc.abstractmethod
    def _is_done(self, observation: np.ndarray) -> bool:
        ...

    def _reward_policy(self, done: bool) -> float:
        return default_reward(done, self.config)

    def _read_observation(self) -> np.ndarray:
        outputs = self.backend.get_outputs()
        obs = np.array([outputs[i] for i in self._output_index], dtype=float)
        if not np.all(np.isfinite(obs)):
            raise SimulationError(f"backend produced non-finite outputs {obs.tolist()}")
        return obs

    def reset(self) -> np.ndarray:
        try:
            self.backend.initialize(self.config.model_parameters)
        except SimulationError as exc:
            raise InitializationError(str(exc)) from exc
        self._steps = 0
        self.done = False
        self._observation = self._read_observation()
        return self._observation.copy()

    def step(self, action) -> StepResult:
        if self._observation is None:
            raise EnvStateError("step() called before reset()")
        if not self.action_space.contains(action):
            raise ValueError(f"action {action!r} is not in {self.action_space}")
        values = self._action_to_inputs(action)
        self.backend.set_inputs([values[i] for i in self._input_order])
        self.backend.do_step(self.config.time_step)
        self._steps += 1
        obs = self._read_observation()
        self._observation = obs
        self.done = bool(self._is_done(obs))
        reward = float(self._reward_policy(self.done))
        return StepResult(obs.copy(), reward, self.done)

    def render(self) -> str:
        """One-line text dump of the current observation."""
        if self._observation is None:
            raise EnvStateError("render() called before reset()")
        parts = [f"t={self.time:.4f} s"]
        for name, value in zip(self.config.model_output_names, self._observation):
            unit = self.units.get(name, "")
            parts.append(f"{name}={value:.4f}" + (f" {unit}" if unit else ""))
        return " ".join(parts)

    def close(self) -> None:
        # nothing to shut down for text rendering
        pass
