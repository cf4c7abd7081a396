"""Co-simulation backend contract and a fixed-step RK4 master.

A backend plays the role an FMU exported in co-simulation mode plays: it is
initialized with parameters, receives inputs, advances itself over a
communication interval with the inputs held constant, and exposes outputs.
"""

from __future__ import annotations

import abc
import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

DEFAULT_SUBSTEP = 0.005

Vector = Sequence[float]
Derivative = Callable[[Vector], Vector]


class SimulationError(RuntimeError):
    """Raised when a backend cannot initialize or advance."""


class NumericalError(SimulationError):
    """Raised when a derivative evaluation produces a non-finite value."""


@dataclass(frozen=True)
class BackendDescriptor:
    input_names: tuple[str, ...]
    output_names: tuple[str, ...]
    parameter_names: tuple[str, ...]

    def __post_init__(self):
        for label, names in (
            ("input", self.input_names),
            ("output", self.output_names),
            ("parameter", self.parameter_names),
        ):
            if len(set(names)) != len(names):
                raise ValueError(f"duplicate {label} names: {names}")
        overlap = set(self.input_names) & set(self.output_names)
        if overlap:
            raise ValueError(f"inputs and outputs overlap: {sorted(overlap)}")


class Backend(abc.ABC):
    """Simulation unit driven by an environment.

    Outputs only change inside ``do_step``; between calls they are constant.
    """

    descriptor: BackendDescriptor

    @abc.abstractmethod
    def initialize(self, params: Mapping[str, float]) -> None:
        ...

    @abc.abstractmethod
    def set_inputs(self, values: Vector) -> None:
        ...

    @abc.abstractmethod
    def do_step(self, dt: float) -> None:
        ...

    @abc.abstractmethod
    def get_outputs(self) -> list[float]:
        ...


def _check_finite(values: Vector, stage: str) -> Vector:
    for i, v in enumerate(values):
        if not math.isfinite(v):
            raise NumericalError(f"non-finite derivative component {i} ({v!r}) at RK4 stage {stage}")
    return values


def rk4_step(state: Vector, derivative: Derivative, h: float) -> list[float]:
    """One classical Runge-Kutta step of size ``h`` for an autonomous system.

    Inputs are whatever ``derivative`` closes over, so they stay fixed for
    the whole step (zero-order hold).
    """
    if not h > 0:
        raise ValueError(f"step size must be positive, got {h}")
    half = 0.5 * h
    k1 = _check_finite(derivative(state), "k1")
    k2 = _check_finite(derivative([y + half * k for y, k in zip(state, k1)]), "k2")
    k3 = _check_finite(derivative([y + half * k for y, k in zip(state, k2)]), "k3")
    k4 = _check_finite(derivative([y + h * k for y, k in zip(state, k3)]), "k4")
    sixth = h / 6.0
    return [
        y + sixth * (a + 2.0 * b + 2.0 * c + d)
        for y, a, b, c, d in zip(state, k1, k2, k3, k4)
    ]


def substep_plan(dt: float, substep_target: float) -> tuple[int, float]:
    """Number of equal substeps covering ``dt`` and their size."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if not substep_target > 0:
        raise ValueError(f"substep target must be positive, got {substep_target}")
    # tolerance keeps 0.05 / 0.005 from rounding up to 11
    n = max(1, math.ceil(dt / substep_target - 1e-9))
    return n, dt / n


class ODEBackend(Backend):
    """Backend whose model is an explicit ODE ``y' = f(y, u)``.

    Subclasses provide ``descriptor``, ``initial_state(params)``,
    ``configure(params)`` and ``derivative(state, inputs)``.
    """

    def __init__(self, substep_target: float = DEFAULT_SUBSTEP):
        if not substep_target > 0:
            raise ValueError(f"substep target must be positive, got {substep_target}")
        self.substep_target = substep_target
        self.state: list[float] | None = None
        self.inputs: list[float] = [0.0] * len(self.descriptor.input_names)
        self.time = 0.0

    @abc.abstractmethod
    def configure(self, params: Mapping[str, float]) -> None:
        ...

    @abc.abstractmethod
    def initial_state(self, params: Mapping[str, float]) -> list[float]:
        ...

    @abc.abstractmethod
    def derivative(self, state: Vector, inputs: Vector) -> Vector:
        ...

    def initialize(self, params):
        unknown = set(params) - set(self.descriptor.parameter_names)
        if unknown:
            raise SimulationError(f"unknown parameters for {type(self).__name__}: {sorted(unknown)}")
        try:
            self.configure(params)
            state = [float(v) for v in self.initial_state(params)]
        except (KeyError, ValueError, TypeError) as exc:
            raise SimulationError(f"{type(self).__name__} initialization failed: {exc}") from exc
        if not all(math.isfinite(v) for v in state):
            raise SimulationError(f"non-finite initial state {state}")
        self.state = state
        self.inputs = [0.0] * len(self.descriptor.input_names)
        self.time = 0.0

    def set_inputs(self, values):
        values = [float(v) for v in values]
        if len(values) != len(self.descriptor.input_names):
            raise ValueError(
                f"expected {len(self.descriptor.input_names)} inputs, got {len(values)}"
            )
        self.inputs = values

    def do_step(self, dt):
        if self.state is None:
            raise SimulationError("backend stepped before initialize()")
        advance(self, dt, self.substep_target)

    def get_outputs(self):
        if self.state is None:
            raise SimulationError("backend read before initialize()")
        return list(self.state)


def advance(backend: ODEBackend, dt: float, substep_target: float = DEFAULT_SUBSTEP) -> None:
    """Advance ``backend`` by exactly ``dt`` with its inputs held constant."""
    n, h = substep_plan(dt, substep_target)
    inputs = tuple(backend.inputs)

    def f(y):
        return backend.derivative(y, inputs)

    t0 = backend.time
    state = backend.state
    for i in range(n):
        state = rk4_step(state, f, h)
        backend.time = t0 + (i + 1) * h
    backend.state = state
    backend.time = t0 + dt
