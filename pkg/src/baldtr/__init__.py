"""Bayesian augmented learning for two-stage treatment regimes with a dependent spike-and-slab prior."""

from .core import (DesignSpec, TwoStageDataset, build_regressor_vector, counterfactual_designs,
                   dummy_encode, read_dataset_csv, stage_designs, stage_specs, write_dataset_csv)
from .dgp import DgpConfig, DgpTruth, simulate, simulate_coefficients, simulate_dataset
from .dss import DSS, ISS, DssConfig, SelectionState, prior_inclusion_correlation
from .evaluation import bic, lpml, regime_metrics, selection_metrics
from .experiment import ExperimentConfig, Scenario, run_experiment
from .gibbs import (ChainConfig, ChainOutput, InvalidStateError, PosteriorSummary, run_chain,
                    summarize)
from .rand import NumericalError, RngStream, make_rng

__version__ = "0.1.0"

__all__ = [
    "ChainConfig", "ChainOutput", "DSS", "DesignSpec", "DgpConfig", "DgpTruth", "DssConfig",
    "ExperimentConfig", "ISS", "InvalidStateError", "NumericalError", "PosteriorSummary",
    "RngStream", "Scenario", "SelectionState", "TwoStageDataset", "bic", "build_regressor_vector",
    "counterfactual_designs", "dummy_encode", "lpml", "make_rng", "prior_inclusion_correlation",
    "read_dataset_csv", "regime_metrics", "run_chain", "run_experiment", "selection_metrics",
    "simulate", "simulate_coefficients", "simulate_dataset", "stage_designs", "stage_specs",
    "summarize", "write_dataset_csv",
]
