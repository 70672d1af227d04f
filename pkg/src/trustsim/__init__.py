"""Corpus-based, trust-aware user simulation for proactive dialog agents."""

from .behavior_tables import (
    BehaviorTable,
    CellStats,
    ContextKey,
    TableMode,
    build_table,
    load_table,
    lookup,
    save_table,
    table_summary,
)
from .corpus import (
    Corpus,
    Exchange,
    Gender,
    ProactiveAct,
    UserRecord,
    complexity_of_step,
    load_corpus,
    save_corpus,
    split_corpus,
)
from .errors import TrustSimError
from .fidelity import (
    BinningConfig,
    FidelityReport,
    Measure,
    compare_modes,
    estimate_distribution,
    evaluate_simulator,
    kl_divergence,
    mse,
)
from .rl_env import (
    EnvState,
    Hyperparams,
    RewardConfig,
    TrustSimEnv,
    train_tabular_policy,
)
from .sampling import RandomStream
from .simulator import (
    SimConfig,
    SimulatedLog,
    SimulatedTurn,
    replay_conditions,
    simulate_dialog,
    simulate_turn,
)
from .synth import BehaviorProcess, GeneratorConfig, generate_synthetic_corpus
from .trust_model import (
    TrainConfig,
    TrustClassifier,
    combine_trust_target,
    evaluate_classifier,
    extract_features,
    predict_trust,
    train_classifier,
)
from .user_model import (
    TraitDistributions,
    TraitTuple,
    UserProfile,
    binarize_traits,
    default_trait_distributions,
    fit_trait_distributions,
    sample_user,
)

__version__ = "0.1.0"

__all__ = [
    "BehaviorProcess",
    "BehaviorTable",
    "BinningConfig",
    "CellStats",
    "ContextKey",
    "Corpus",
    "EnvState",
    "Exchange",
    "FidelityReport",
    "Gender",
    "GeneratorConfig",
    "Hyperparams",
    "Measure",
    "ProactiveAct",
    "RandomStream",
    "RewardConfig",
    "SimConfig",
    "SimulatedLog",
    "SimulatedTurn",
    "TableMode",
    "TrainConfig",
    "TraitDistributions",
    "TraitTuple",
    "TrustClassifier",
    "TrustSimEnv",
    "TrustSimError",
    "UserProfile",
    "UserRecord",
    "binarize_traits",
    "default_trait_distributions",
    "build_table",
    "combine_trust_target",
    "compare_modes",
    "complexity_of_step",
    "estimate_distribution",
    "evaluate_classifier",
    "evaluate_simulator",
    "extract_features",
    "fit_trait_distributions",
    "generate_synthetic_corpus",
    "kl_divergence",
    "load_corpus",
    "load_table",
    "lookup",
    "mse",
    "predict_trust",
    "replay_conditions",
    "sample_user",
    "save_corpus",
    "save_table",
    "simulate_dialog",
    "simulate_turn",
    "split_corpus",
    "table_summary",
    "train_classifier",
    "train_tabular_policy",
]
