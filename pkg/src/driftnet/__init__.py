"""Sequence classification with fixed random reservoirs and a trained readout.

The pipeline: a per-frame feature sequence drives an untrained recurrent
reservoir, the reservoir trajectory is averaged over time into a single
vector, and a linear readout trained on those vectors assigns the class.
"""

from .data import (
    DatasetManifest,
    FeatureSequence,
    ManifestEntry,
    SplitPlan,
    derive_seed,
    fit_length,
    load_feature_file,
    load_manifest,
    save_feature_file,
    save_manifest,
    stratified_split,
    verify_manifest_files,
)
from .errors import ConfigError, DataFormatError, DriftnetError, TrainingError
from .harness import (
    ExperimentConfig,
    Metrics,
    PooledDataset,
    load_pooled,
    pool_dataset,
    run_experiment,
    save_pooled,
    summary_table,
)
from .readout import (
    Prediction,
    ReadoutModel,
    TrainSpec,
    classify,
    load_model,
    ridge_fit,
    save_model,
    score,
    softmax,
    train_softmax,
)
from .reservoir import (
    EsnConfig,
    PooledState,
    ReservoirState,
    ReservoirWeights,
    init_reservoir,
    pool_states,
    run_sequence,
    spectral_radius,
    step,
    zero_state,
)
from .synth import SynthSpec, generate

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DataFormatError",
    "DatasetManifest",
    "DriftnetError",
    "EsnConfig",
    "ExperimentConfig",
    "FeatureSequence",
    "ManifestEntry",
    "Metrics",
    "PooledDataset",
    "PooledState",
    "Prediction",
    "ReadoutModel",
    "ReservoirState",
    "ReservoirWeights",
    "SplitPlan",
    "SynthSpec",
    "TrainSpec",
    "TrainingError",
    "classify",
    "derive_seed",
    "fit_length",
    "generate",
    "init_reservoir",
    "load_feature_file",
    "load_manifest",
    "load_model",
    "load_pooled",
    "pool_dataset",
    "pool_states",
    "ridge_fit",
    "run_experiment",
    "run_sequence",
    "save_feature_file",
    "save_manifest",
    "save_model",
    "save_pooled",
    "score",
    "softmax",
    "spectral_radius",
    "step",
    "stratified_split",
    "summary_table",
    "train_softmax",
    "verify_manifest_files",
    "zero_state",
]
