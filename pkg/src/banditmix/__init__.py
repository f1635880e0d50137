"""Adaptive data-mixture scheduling with a bandit policy and a synthetic trainer.

The package centers on a scheduling loop that treats each source dataset as
a bandit arm: sampling probabilities come from a prior-scaled Boltzmann
distribution over smoothed look-ahead rewards, blended with a uniform floor.
A deterministic simulated training world, baseline policies, JSONL run
traces, and a CLI experiment runner round out the toolkit.
"""

from .config import ConfigError, ExperimentConfig, load_config
from .mixture import (
    BanditConfig,
    Batch,
    MixtureDistribution,
    QState,
    boltzmann_probs,
    mixture_probs,
    prior_scaled_probs,
    sample_arm,
    sample_batch,
)
from .policies import MixturePolicy, PolicyKind
from .registry import Arm, ArmRegistry, builtin_registry, make_tulu_registry
from .rewards import (
    Learner,
    RewardReport,
    delta_entropy_reward,
    delta_loss_reward,
    ema_update,
    lookahead_round,
)
from .runner import RunResult, compare_experiments, run_experiment, sweep_experiments
from .simworld import LrSchedule, SimWorld, WorldParams, build_world
from .trace import (
    RunSummary,
    TraceRecord,
    TraceWriter,
    export_plot_data,
    read_trace,
    summarize,
)

__version__ = "0.1.0"

__all__ = [
    "Arm",
    "ArmRegistry",
    "BanditConfig",
    "Batch",
    "ConfigError",
    "ExperimentConfig",
    "Learner",
    "LrSchedule",
    "MixtureDistribution",
    "MixturePolicy",
    "PolicyKind",
    "QState",
    "RewardReport",
    "RunResult",
    "RunSummary",
    "SimWorld",
    "TraceRecord",
    "TraceWriter",
    "WorldParams",
    "boltzmann_probs",
    "build_world",
    "builtin_registry",
    "compare_experiments",
    "delta_entropy_reward",
    "delta_loss_reward",
    "ema_update",
    "export_plot_data",
    "load_config",
    "lookahead_round",
    "make_tulu_registry",
    "mixture_probs",
    "prior_scaled_probs",
    "read_trace",
    "run_experiment",
    "sample_arm",
    "sample_batch",
    "summarize",
    "sweep_experiments",
    "__version__",
]
