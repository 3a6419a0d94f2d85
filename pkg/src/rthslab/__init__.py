"""Virtual real-time hybrid simulation laboratory.

A braced-frame story is split into an analytical substructure (frame mass,
damping, frame stiffness) advanced by an explicit integrator, and a brace
"specimen" realized by a simulated servo-hydraulic plant with transport
delay, lag, and noise. Trained surrogates (linear regression, a small
recurrent network) can replace the analytical side of the loop. The package
reproduces a complete experiment battery: pure analysis, delayed and
compensated hybrid loops, surrogate training and deployment, all scored
against the analytical reference.
"""

__version__ = "0.1.0"

from .compensation import AtsCompensator, AtsConfig, compensate
from .config import ExperimentConfig, load_config, parse_config_text
from .history import PacingStats, RunHistory, StepRecord
from .integrator import (
    IntegratorConfig,
    Scheme,
    chang_parameters,
    initial_state,
    predict_displacement,
    run_pure_fe,
    step,
)
from .metrics import Metrics, compute_metrics, lag_estimate, nrmse, peak_error_percent
from .plant import ActuatorConfig, PlantMode, VirtualActuator, specimen_force
from .runner import (
    FeDriver,
    LoopDivergence,
    LrDriver,
    RnnDriver,
    RunConfig,
    TickInputs,
    pace_real_time,
    run_hybrid,
)
from .scenarios import SCENARIO_NAMES, run_matrix, run_scenario
from .signals import (
    GroundMotion,
    default_record_path,
    load_default_record,
    parse_record,
    resample,
)
from .structure import (
    SdofModel,
    brace_global_stiffness,
    build_sdof,
    damping_coefficient,
    exact_linear_response,
)
from .surrogate_lr import LrModel, build_lr_dataset, predict_lr, replay_lr, train_lr
from .surrogate_rnn import (
    RnnModel,
    TrainConfig,
    bptt_gradients,
    build_rnn_dataset,
    clip_gradients,
    evaluate_hidden_size_sweep,
    rnn_forward,
    train_rnn,
)

__all__ = [
    "__version__",
    "ActuatorConfig",
    "AtsCompensator",
    "AtsConfig",
    "ExperimentConfig",
    "FeDriver",
    "GroundMotion",
    "IntegratorConfig",
    "LoopDivergence",
    "LrDriver",
    "LrModel",
    "Metrics",
    "PacingStats",
    "PlantMode",
    "RnnDriver",
    "RnnModel",
    "RunConfig",
    "RunHistory",
    "SCENARIO_NAMES",
    "Scheme",
    "SdofModel",
    "StepRecord",
    "TickInputs",
    "TrainConfig",
    "VirtualActuator",
    "bptt_gradients",
    "brace_global_stiffness",
    "build_lr_dataset",
    "build_rnn_dataset",
    "build_sdof",
    "chang_parameters",
    "clip_gradients",
    "compensate",
    "compute_metrics",
    "damping_coefficient",
    "default_record_path",
    "evaluate_hidden_size_sweep",
    "exact_linear_response",
    "initial_state",
    "lag_estimate",
    "load_config",
    "load_default_record",
    "nrmse",
    "pace_real_time",
    "parse_config_text",
    "parse_record",
    "peak_error_percent",
    "predict_displacement",
    "predict_lr",
    "replay_lr",
    "resample",
    "run_hybrid",
    "run_matrix",
    "run_pure_fe",
    "run_scenario",
    "specimen_force",
    "step",
    "train_lr",
    "train_rnn",
]
