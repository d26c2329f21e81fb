"""Filter-basis distillation toolkit for depthwise convolutional filters."""

from .filterbank import (
    BankEntry,
    BankStats,
    Filter,
    FilterBank,
    bank_stats,
    load_bank,
    save_bank,
)
from .normalize import NormalizedFilter, normalize_bank, normalize_filter
from .linfit import (
    Assignment,
    LinearShiftFit,
    assign_best,
    coverage,
    fit_batched,
    fit_pair,
    replace_bank,
)
from .manifold import (
    AutoencoderModel,
    TrainConfig,
    decode,
    encode,
    load_model,
    sample_around,
    sample_uniform,
    save_model,
    train_autoencoder,
)
from .greedy import GreedyTrace, Objective, elbow_index, greedy_eliminate, two_round_search
from .analytic import AnalyticKernelSpec, FamilyFit, fit_family, generate, master_report
from .masterkeys import get_master_bank, get_masters, verify_masters

__version__ = "0.1.0"

__all__ = [
    "AnalyticKernelSpec",
    "Assignment",
    "AutoencoderModel",
    "BankEntry",
    "BankStats",
    "FamilyFit",
    "Filter",
    "FilterBank",
    "GreedyTrace",
    "LinearShiftFit",
    "NormalizedFilter",
    "Objective",
    "TrainConfig",
    "assign_best",
    "bank_stats",
    "coverage",
    "decode",
    "elbow_index",
    "encode",
    "fit_batched",
    "fit_family",
    "fit_pair",
    "generate",
    "get_master_bank",
    "get_masters",
    "greedy_eliminate",
    "load_bank",
    "load_model",
    "master_report",
    "normalize_bank",
    "normalize_filter",
    "replace_bank",
    "sample_around",
    "sample_uniform",
    "save_bank",
    "save_model",
    "train_autoencoder",
    "two_round_search",
    "verify_masters",
]
