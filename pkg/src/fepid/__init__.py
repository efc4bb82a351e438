"""fepid: PID control realised as gradient descent on variational free energy.

A closed-loop simulation toolkit in which a classical PID controller
emerges as the fully-observable limit of an active-inference controller:
the three gains are the controller's expected observation precisions per
embedding order (times the action learning rate), gain tuning is gradient
descent on the same functional the controller minimises, set-point and
disturbance responses are shaped independently by the two prediction-error
channels, and hyperpriors on precisions regularise the
performance-robustness trade-off.
"""

from .gencoords import (DEFAULT_DEPTH, MAX_DEPTH, GeneralisedSignal, NoiseKind,
                        NoiseSpec, embed, gaussian_kernel, sample_noise, shift)
from .genmodel import (FreeEnergyBreakdown, GenerativeModel, PrecisionState,
                       free_energy, grad_action, grad_log_precisions, grad_mu_x,
                       prediction_errors)
from .controller import (ControllerConfig, ControllerState,
                         IntegrationDivergedError, PidState,
                         gains_from_precisions, pid_step, precisions_from_gains,
                         step_fast, step_slow)
from .plant import (DisturbanceKind, DisturbanceSpec, PlantDivergedError,
                    PlantKind, PlantSpec, SensorSpec, VolatilityRamp,
                    disturbance_at, measure, plant_output, plant_step)
from .simloop import (Metrics, ScenarioConfig, Trajectory, UnknownParameterError,
                      compute_metrics, rise_time_10_90, run_closed_loop,
                      set_param, sweep)
from .config import ConfigError, config_to_dict, dump_config, parse_config

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_DEPTH", "MAX_DEPTH", "GeneralisedSignal", "NoiseKind", "NoiseSpec",
    "embed", "gaussian_kernel", "sample_noise", "shift",
    "FreeEnergyBreakdown", "GenerativeModel", "PrecisionState", "free_energy",
    "grad_action", "grad_log_precisions", "grad_mu_x", "prediction_errors",
    "ControllerConfig", "ControllerState", "IntegrationDivergedError", "PidState",
    "gains_from_precisions", "pid_step", "precisions_from_gains", "step_fast",
    "step_slow",
    "DisturbanceKind", "DisturbanceSpec", "PlantDivergedError", "PlantKind",
    "PlantSpec", "SensorSpec", "VolatilityRamp", "disturbance_at", "measure",
    "plant_output", "plant_step",
    "Metrics", "ScenarioConfig", "Trajectory", "UnknownParameterError",
    "compute_metrics", "rise_time_10_90", "run_closed_loop", "set_param", "sweep",
    "ConfigError", "config_to_dict", "dump_config", "parse_config",
    "__version__",
]
