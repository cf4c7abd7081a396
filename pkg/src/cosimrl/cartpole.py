"""Cart-Pole backend and environment.

Angles follow the model's convention: ``theta`` is measured from the positive
x axis, so the upright pole sits at ``theta = pi/2`` and ``theta < pi/2``
means the pole leans toward +x. The pole is a point mass at half its length
on a frictionless pivot; the track is frictionless.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .cosim import DEFAULT_SUBSTEP, BackendDescriptor, ODEBackend
from .env_core import Box, CoSimEnv, ConfigError, Discrete, EnvConfig

HALF_PI = math.pi / 2

STATE_NAMES = ("x", "x_dot", "theta", "theta_dot")
REQUIRED_PARAMETERS = ("m_cart", "m_pole", "theta_0", "theta_dot_0")
OPTIONAL_PARAMETERS = {"x_0": 0.0, "x_dot_0": 0.0, "pole_length": 1.0, "g": 9.81}

PUSH_LEFT, PUSH_RIGHT = 0, 1


@dataclass(frozen=True)
class CartPoleParams:
    m_cart: float = 10.0
    m_pole: float = 1.0
    pole_length: float = 1.0
    g: float = 9.81
    force_magnitude: float = 11.0

    def __post_init__(self):
        for name in ("m_cart", "m_pole", "pole_length", "g", "force_magnitude"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be strictly positive, got {value!r}")


@dataclass(frozen=True)
class Thresholds:
    x_threshold: float = 2.4
    theta_threshold: float = 12 * math.pi / 180


def dynamics(state: Sequence[float], force: float, p: CartPoleParams) -> tuple[float, float, float, float]:
    """Time derivative ``(x_dot, x_ddot, theta_dot, theta_ddot)``.

    Works in the lean angle ``phi = pi/2 - theta`` (positive toward +x),
    where the point-mass pendulum on a cart reads

        phi_ddot = (g sin phi - cos phi (f + m L phi_dot^2 sin phi) / M)
                   / (L (1 - m cos^2 phi / M))
        x_ddot   = (f + m L (phi_dot^2 sin phi - phi_ddot cos phi)) / M

    with ``L`` half the pole length and ``M`` the total mass.
    """
    _, x_dot, theta, theta_dot = state
    m = p.m_pole
    half = 0.5 * p.pole_length
    total = p.m_cart + m
    phi = HALF_PI - theta
    phi_dot = -theta_dot
    s = math.sin(phi)
    c = math.cos(phi)
    pushed = (force + m * half * phi_dot * phi_dot * s) / total
    phi_ddot = (p.g * s - c * pushed) / (half * (1.0 - m * c * c / total))
    x_ddot = pushed - m * half * phi_ddot * c / total
    return (x_dot, x_ddot, theta_dot, -phi_ddot)


def energy(state: Sequence[float], p: CartPoleParams) -> float:
    """Kinetic plus potential energy, zero potential at pivot height."""
    _, x_dot, theta, theta_dot = state
    half = 0.5 * p.pole_length
    # bob at (x + L cos theta, L sin theta)
    bob_vx = x_dot - half * math.sin(theta) * theta_dot
    bob_vy = half * math.cos(theta) * theta_dot
    kinetic = 0.5 * p.m_cart * x_dot**2 + 0.5 * p.m_pole * (bob_vx**2 + bob_vy**2)
    return kinetic + p.m_pole * p.g * half * math.sin(theta)


def _beyond(deviation: float, limit: float) -> bool:
    # a relative ulp-scale slack so 78 and 102 degrees both count as standing
    return abs(deviation) > limit * (1 + 1e-12)


def is_done(state: Sequence[float], t: Thresholds = Thresholds()) -> bool:
    """True once the cart leaves the track limits or the pole deflects too far.

    Sitting exactly on a threshold still counts as standing.
    """
    x, _, theta, _ = state
    return _beyond(x, t.x_threshold) or _beyond(theta - HALF_PI, t.theta_threshold)


def mirror_state(state: Sequence[float]) -> list[float]:
    """Reflect the system through the vertical line x = 0."""
    x, x_dot, theta, theta_dot = state
    return [-x, -x_dot, math.pi - theta, -theta_dot]


class CartPoleBackend(ODEBackend):
    """Native stand-in for the Cart-Pole co-simulation unit.

    Input ``f`` is the signed force on the cart in N. Outputs are the four
    state variables. ``force_magnitude`` is not a model parameter; the
    environment owns it.
    """

    descriptor = BackendDescriptor(
        input_names=("f",),
        output_names=STATE_NAMES,
        parameter_names=REQUIRED_PARAMETERS + tuple(OPTIONAL_PARAMETERS),
    )

    def __init__(self, substep_target: float = DEFAULT_SUBSTEP):
        super().__init__(substep_target)
        self.params: CartPoleParams | None = None

    def configure(self, params):
        missing = [k for k in REQUIRED_PARAMETERS if k not in params]
        if missing:
            raise KeyError(f"missing model parameter {missing[0]!r}")
        merged = {**OPTIONAL_PARAMETERS, **params}
        self.params = CartPoleParams(
            m_cart=merged["m_cart"],
            m_pole=merged["m_pole"],
            pole_length=merged["pole_length"],
            g=merged["g"],
        )

    def initial_state(self, params):
        merged = {**OPTIONAL_PARAMETERS, **params}
        return [merged["x_0"], merged["x_dot_0"], merged["theta_0"], merged["theta_dot_0"]]

    def derivative(self, state, inputs):
        return dynamics(state, inputs[0], self.params)


class CartPoleEnv(CoSimEnv):
    """Two-action Cart-Pole: 0 pushes left with -|f|, 1 pushes right with +|f|."""

    units = {"x": "m", "x_dot": "m/s", "theta": "rad", "theta_dot": "rad/s"}

    def __init__(
        self,
        config: EnvConfig,
        force_magnitude: float = 11.0,
        thresholds: Thresholds = Thresholds(),
        substep_target: float = DEFAULT_SUBSTEP,
    ):
        if not (math.isfinite(force_magnitude) and force_magnitude > 0):
            raise ConfigError(f"force magnitude must be > 0, got {force_magnitude!r}")
        for key in REQUIRED_PARAMETERS:
            if key not in config.model_parameters:
                raise ConfigError(f"missing model parameter {key!r}")
        for key in ("x", "theta"):
            if key not in config.model_output_names:
                raise ConfigError(f"model_output_names must include {key!r}")
        self.force_magnitude = float(force_magnitude)
        self.thresholds = thresholds
        super().__init__(config, CartPoleBackend(substep_target))
        self._x_index = config.model_output_names.index("x")
        self._theta_index = config.model_output_names.index("theta")
        self.last_force = 0.0

    def _get_action_space(self):
        return Discrete(2)

    def _get_observation_space(self):
        bounds = {
            "x": (-2 * self.thresholds.x_threshold, 2 * self.thresholds.x_threshold),
            "x_dot": (-math.inf, math.inf),
            "theta": (
                HALF_PI - 2 * self.thresholds.theta_threshold,
                HALF_PI + 2 * self.thresholds.theta_threshold,
            ),
            "theta_dot": (-math.inf, math.inf),
        }
        names = self.config.model_output_names
        return Box([bounds[n][0] for n in names], [bounds[n][1] for n in names])

    def _action_to_inputs(self, action):
        self.last_force = self.force_magnitude if action == PUSH_RIGHT else -self.force_magnitude
        return [self.last_force]

    def _is_done(self, observation):
        t = self.thresholds
        return _beyond(observation[self._x_index], t.x_threshold) or _beyond(
            observation[self._theta_index] - HALF_PI, t.theta_threshold
        )

    @property
    def params(self) -> CartPoleParams:
        merged = {**OPTIONAL_PARAMETERS, **self.config.model_parameters}
        return CartPoleParams(
            m_cart=merged["m_cart"],
            m_pole=merged["m_pole"],
            pole_length=merged["pole_length"],
            g=merged["g"],
            force_magnitude=self.force_magnitude,
        )


def listing_config(**overrides) -> EnvConfig:
    """The reference Cart-Pole configuration, optionally modified."""
    params: dict[str, float] = {
        "m_cart": 10,
        "m_pole": 1,
        "theta_0": 85 / 180 * math.pi,
        "theta_dot_0": 0,
    }
    params.update(overrides.pop("model_parameters", {}))
    data = {
        "model_input_names": "f",
        "model_output_names": list(STATE_NAMES),
        "model_parameters": params,
        "time_step": 0.05,
        "positive_reward": 1,
        "negative_reward": -100,
    }
    data.update(overrides)
    return EnvConfig(**data)


def make_cartpole_env(
    cfg: EnvConfig,
    force_magnitude: float = 11.0,
    thresholds: Thresholds = Thresholds(),
    substep_target: float = DEFAULT_SUBSTEP,
) -> CartPoleEnv:
    return CartPoleEnv(cfg, force_magnitude, thresholds, substep_target)


def simulate(
    state: Sequence[float],
    force: float,
    p: CartPoleParams,
    duration: float,
    substep: float = DEFAULT_SUBSTEP,
) -> np.ndarray:
    """Integrate with a constant force; returns the final state."""
    backend = CartPoleBackend(substep)
    backend.params = p
    backend.state = [float(v) for v in state]
    backend.inputs = [float(force)]
    backend.do_step(duration)
    return np.array(backend.state)
