"""Gym-style co-simulation environments and tabular Q-learning for the Cart-Pole."""

from .agent import Discretizer, LearnerParams, QLearner, default_bins, encode, to_bin
from .cartpole import CartPoleEnv, CartPoleParams, Thresholds, listing_config, make_cartpole_env
from .cosim import Backend, BackendDescriptor, ODEBackend, advance, rk4_step
from .env_core import Box, CoSimEnv, Discrete, EnvConfig, StepResult, default_reward
from .experiment import (
    ExperimentResult,
    TrainResult,
    average_smoothed,
    moving_average,
    per_step_time,
    run_experiment,
    run_sweep,
    train,
)

__version__ = "0.1.0"
