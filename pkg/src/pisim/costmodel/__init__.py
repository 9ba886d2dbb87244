"""Calibrated latency, communication, and storage model."""

from .calibrate import CalibrationOptions, calibrate
from .comm import (
    BASE_OT_BYTES_PER_DIRECTION,
    CG_EVALUATOR_STATE_BYTES_PER_RELU,
    CG_GARBLER_STATE_BYTES_PER_RELU,
    GC_BLOB_BYTES_PER_RELU,
    GC_INPUT_BITS_PER_RELU,
    GC_TRANSFER_BYTES_PER_RELU,
    HE_CT_BYTES_PER_ELEM,
    INPUT_LABEL_BYTES_PER_RELU,
    KEY_BYTES,
    LABEL_BYTES_PER_INPUT_BIT,
    ONLINE_LABEL_BYTES_PER_RELU,
    OT_EXT_CHOICE_BYTES_PER_RELU,
    SG_GARBLER_STATE_BYTES_PER_RELU,
    SHARE_BYTES_PER_ELEM,
    CommInputs,
    CommTotals,
    StorageDeltas,
    offline_comm,
    online_comm,
    storage_deltas,
)
from .query import (
    apply_optimization,
    gc_storage,
    max_sustainable_rate,
    phase_costs,
)
from .regimes import Regime, RegimeThresholds, classify_regime
from .tables import (
    TableFormatError,
    get_optimization,
    load_optimizations,
    load_shipped_costs,
    read_measured_costs,
    read_optimizations,
    write_measured_costs,
)
from .types import (
    CalibrationReport,
    CostModel,
    CostModelError,
    InconsistentRows,
    InsufficientRows,
    MeasuredCosts,
    OptimizationKnobs,
    PhaseCosts,
    Protocol,
    UncalibratedTriple,
    UnknownOptimization,
    scaled_model,
)

__all__ = [
    "BASE_OT_BYTES_PER_DIRECTION",
    "CG_EVALUATOR_STATE_BYTES_PER_RELU",
    "CG_GARBLER_STATE_BYTES_PER_RELU",
    "GC_BLOB_BYTES_PER_RELU",
    "GC_INPUT_BITS_PER_RELU",
    "GC_TRANSFER_BYTES_PER_RELU",
    "HE_CT_BYTES_PER_ELEM",
    "INPUT_LABEL_BYTES_PER_RELU",
    "KEY_BYTES",
    "LABEL_BYTES_PER_INPUT_BIT",
    "ONLINE_LABEL_BYTES_PER_RELU",
    "OT_EXT_CHOICE_BYTES_PER_RELU",
    "SG_GARBLER_STATE_BYTES_PER_RELU",
    "SHARE_BYTES_PER_ELEM",
    "CalibrationOptions",
    "CalibrationReport",
    "CommInputs",
    "CommTotals",
    "CostModel",
    "CostModelError",
    "InconsistentRows",
    "InsufficientRows",
    "MeasuredCosts",
    "OptimizationKnobs",
    "PhaseCosts",
    "Protocol",
    "Regime",
    "RegimeThresholds",
    "StorageDeltas",
    "TableFormatError",
    "UncalibratedTriple",
    "UnknownOptimization",
    "apply_optimization",
    "calibrate",
    "classify_regime",
    "gc_storage",
    "get_optimization",
    "load_optimizations",
    "load_shipped_costs",
    "load_shipped_model",
    "max_sustainable_rate",
    "offline_comm",
    "online_comm",
    "phase_costs",
    "read_measured_costs",
    "read_optimizations",
    "scaled_model",
    "storage_deltas",
    "write_measured_costs",
]


def load_shipped_model(mode: str = "component") -> CostModel:
    """Calibrate from the packaged measured-costs table."""
    return calibrate(load_shipped_costs(), mode=mode)
