"""Bridge between torch DS-CNN models and the filter-distillation formats."""

from .errors import (
    BadMagic,
    BridgeError,
    CoverageGap,
    DatasetMissing,
    HashMismatch,
    ShapeMismatch,
    SkippedLayerWarning,
    TruncatedFile,
    UnknownModel,
    UnsupportedVersion,
    ZeroVariance,
)
from .formats import (
    AssignmentRow,
    Bank,
    normalize,
    read_assignment,
    read_bank,
    write_assignment,
    write_bank,
)
from .models import MODEL_NAMES, DepthwiseLocator, ModelRef, build_model
from .surgery import apply_assignment, evaluate, export_filters

__version__ = "0.1.0"
