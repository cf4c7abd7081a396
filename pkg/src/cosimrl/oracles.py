"""Self-checks for the physics, integrator and learner, run by ``cosimrl validate``."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .agent import LearnerParams, encode, to_bin, update
from .cartpole import CartPoleParams, dynamics, energy, listing_config, make_cartpole_env, mirror_state, simulate
from .cosim import rk4_step


@dataclass
class OracleResult:
    name: str
    passed: bool
    measured: float
    limit: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f" ({self.detail})" if self.detail else ""
        return f"[{status}] {self.name}: measured={self.measured:.6g} limit={self.limit:.6g}{extra}"


def energy_drift(duration: float = 10.0, substep: float = 0.001, theta0_deg: float = 85.0) -> float:
    p = CartPoleParams()
    start = [0.0, 0.0, math.radians(theta0_deg), 0.0]
    end = simulate(start, 0.0, p, duration, substep)
    e0 = energy(start, p)
    return abs(energy(end, p) - e0) / abs(e0)


def check_energy(limit: float = 1e-6) -> OracleResult:
    drift = energy_drift()
    return OracleResult("energy conservation, f=0, 10 s at 0.001 s", drift <= limit, drift, limit)


def rk4_error_ratios(n0: int = 10, halvings: int = 3) -> list[float]:
    """Endpoint error ratios for y' = y on [0, 1] as the step is halved."""
    errors = []
    for k in range(halvings + 1):
        n = n0 * 2**k
        y = [1.0]
        for _ in range(n):
            y = rk4_step(y, lambda v: [v[0]], 1.0 / n)
        errors.append(abs(y[0] - math.e))
    return [a / b for a, b in zip(errors, errors[1:])]


def check_rk4_order(limit: float = 12.0) -> OracleResult:
    ratios = rk4_error_ratios()
    worst = min(ratios)
    return OracleResult(
        "RK4 error reduction per halving", worst >= limit, worst, limit,
        "ratios " + ", ".join(f"{r:.2f}" for r in ratios),
    )


def check_equilibria(limit: float = 1e-12) -> OracleResult:
    p = CartPoleParams()
    upright = dynamics([0.0, 0.0, math.pi / 2, 0.0], 0.0, p)
    hanging = dynamics([0.0, 0.0, -math.pi / 2, 0.0], 0.0, p)
    worst = max(abs(upright[1]), abs(upright[3]), abs(hanging[1]), abs(hanging[3]))
    return OracleResult(
        "equilibrium accelerations (upright, hanging)",
        upright[1] == 0.0 and upright[3] == 0.0 and worst <= limit,
        worst, limit,
    )


def mirror_mismatch(n: int = 1000, seed: int = 0) -> float:
    """Largest componentwise gap between a mirrored step and a step of the mirror."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        state = [
            rng.uniform(-2.4, 2.4),
            rng.uniform(-2.0, 2.0),
            math.pi / 2 + rng.uniform(-0.4, 0.4),
            rng.uniform(-3.0, 3.0),
        ]
        action = int(rng.integers(2))
        a = _one_step(state, action)
        b = _one_step(mirror_state(state), 1 - action)
        worst = max(worst, float(np.max(np.abs(np.array(mirror_state(a)) - b))))
    return worst


def _one_step(state, action):
    x, x_dot, theta, theta_dot = state
    cfg = listing_config(
        model_parameters={"x_0": x, "x_dot_0": x_dot, "theta_0": theta, "theta_dot_0": theta_dot}
    )
    env = make_cartpole_env(cfg, 11.0)
    env.reset()
    return env.step(action).observation


def check_mirror(limit: float = 1e-9) -> OracleResult:
    gap = mirror_mismatch()
    return OracleResult("mirror symmetry over 1000 random steps", gap <= limit, gap, limit)


def check_discretizer() -> OracleResult:
    seen = set()
    for bins in itertools.product(range(10), repeat=4):
        seen.add(encode(bins))
    ok = seen == set(range(10**4))
    ok &= encode((3, 5, 7, 2)) == 3572
    ok &= to_bin(-3.0, -2.4, 2.4, 10) == 0
    ok &= to_bin(0.0, -2.4, 2.4, 10) == 5
    ok &= to_bin(10.0, -1.0, 1.0, 10) == 9
    return OracleResult("encode bijection on {0..9}^4 and bin examples", ok, len(seen), 10**4)


def check_update_rule() -> OracleResult:
    p = LearnerParams()
    q = np.zeros((2, 2))
    q[1] = [2.0, 1.0]
    cases = []
    cases.append((update(q, 0, 0, 1.0, 1, False, p), 0.6))
    q = np.array([[1.0, 0.0], [0.0, 0.0]])
    cases.append((update(q, 0, 0, -100.0, 1, True, p), -19.2))
    worst = max(abs(got - want) for got, want in cases)
    return OracleResult("Q-update unit cases", worst <= 1e-12, worst, 1e-12)


CHECKS = (
    check_energy,
    check_equilibria,
    check_mirror,
    check_rk4_order,
    check_discretizer,
    check_update_rule,
)


def run_all() -> list[OracleResult]:
    return [check() for check in CHECKS]
