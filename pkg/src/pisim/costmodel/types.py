"""Shared cost-model types and errors."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace


class Protocol(str, enum.Enum):
    """Which party garbles: the protocol variant under study."""

    SERVER_GARBLER = "server_garbler"
    CLIENT_GARBLER = "client_garbler"

    @classmethod
    def parse(cls, value) -> "Protocol":
        if isinstance(value, Protocol):
            return value
        key = str(value).strip().lower()
        aliases = {
            "sg": cls.SERVER_GARBLER,
            "server_garbler": cls.SERVER_GARBLER,
            "server-garbler": cls.SERVER_GARBLER,
            "cg": cls.CLIENT_GARBLER,
            "client_garbler": cls.CLIENT_GARBLER,
            "client-garbler": cls.CLIENT_GARBLER,
        }
        if key not in aliases:
            raise ValueError(f"unknown protocol {value!r}; use sg or cg")
        return aliases[key]

    @property
    def short(self) -> str:
        return "sg" if self is Protocol.SERVER_GARBLER else "cg"


class CostModelError(Exception):
    pass


class InsufficientRows(CostModelError):
    """Calibration input does not cover the requested query."""


class InconsistentRows(CostModelError):
    """Measured rows cannot be fit within the residual tolerances."""


class UncalibratedTriple(CostModelError):
    """Table-direct lookup for a (protocol, model, dataset) with no row."""


class UnknownOptimization(CostModelError):
    pass


@dataclass(frozen=True)
class MeasuredCosts:
    """One measured row: a (protocol, model, dataset) at a fixed bandwidth.

    Comm columns may be None, in which case the structural byte model
    fills them in during calibration.
    """

    protocol: Protocol
    model: str
    dataset: str
    offline_latency_s: float
    online_latency_s: float
    client_storage_bytes: int
    server_storage_bytes: int
    bandwidth_bytes_per_s: float
    offline_comm_bytes: int | None = None
    online_comm_bytes: int | None = None


@dataclass(frozen=True)
class OptimizationKnobs:
    """Multiplicative what-if factors applied to counts and unit rates.

    Factors below 1.0 model an optimization (fewer ReLUs, cheaper GC
    per ReLU, ...); 1.0 is identity. Composition is elementwise
    multiplication, so knob application commutes.
    """

    relu_factor: float = 1.0
    flop_factor: float = 1.0
    gc_per_relu_factor: float = 1.0
    he_per_flop_factor: float = 1.0
    name: str = "none"

    def __post_init__(self):
        for f in (
            self.relu_factor,
            self.flop_factor,
            self.gc_per_relu_factor,
            self.he_per_flop_factor,
        ):
            if f <= 0:
                raise ValueError(f"knob factors must be positive, got {f}")

    @property
    def is_identity(self) -> bool:
        return (
            self.relu_factor == 1.0
            and self.flop_factor == 1.0
            and self.gc_per_relu_factor == 1.0
            and self.he_per_flop_factor == 1.0
        )

    def combine(self, other: "OptimizationKnobs") -> "OptimizationKnobs":
        return OptimizationKnobs(
            relu_factor=self.relu_factor * other.relu_factor,
            flop_factor=self.flop_factor * other.flop_factor,
            gc_per_relu_factor=self.gc_per_relu_factor * other.gc_per_relu_factor,
            he_per_flop_factor=self.he_per_flop_factor * other.he_per_flop_factor,
            name=f"{self.name}+{other.name}",
        )

    @property
    def gc_total_reduction(self) -> float:
        """Factor by which total GC cost shrinks (count times unit cost)."""
        return 1.0 / (self.relu_factor * self.gc_per_relu_factor)

    @property
    def he_total_reduction(self) -> float:
        return 1.0 / (self.flop_factor * self.he_per_flop_factor)


@dataclass(frozen=True)
class PhaseCosts:
    """Per-inference cost prediction for one protocol on one network."""

    protocol: Protocol
    model: str
    dataset: str
    offline_latency_s: float
    online_latency_s: float
    offline_compute_s: float
    online_compute_s: float
    offline_he_s: float
    offline_comm_c2s_bytes: int
    offline_comm_s2c_bytes: int
    online_comm_c2s_bytes: int
    online_comm_s2c_bytes: int
    client_storage_delta_bytes: int
    server_storage_delta_bytes: int
    gc_storage_bytes: int
    bandwidth_bytes_per_s: float

    def __post_init__(self):
        for name in (
            "offline_latency_s",
            "online_latency_s",
            "offline_compute_s",
            "online_compute_s",
            "offline_he_s",
            "offline_comm_c2s_bytes",
            "offline_comm_s2c_bytes",
            "online_comm_c2s_bytes",
            "online_comm_s2c_bytes",
            "client_storage_delta_bytes",
            "server_storage_delta_bytes",
            "gc_storage_bytes",
        ):
            value = getattr(self, name)
            assert value >= 0, f"negative cost {name}={value}"

    @property
    def offline_comm_bytes(self) -> int:
        return self.offline_comm_c2s_bytes + self.offline_comm_s2c_bytes

    @property
    def online_comm_bytes(self) -> int:
        return self.online_comm_c2s_bytes + self.online_comm_s2c_bytes

    @property
    def total_latency_s(self) -> float:
        return self.offline_latency_s + self.online_latency_s


@dataclass(frozen=True)
class CalibrationReport:
    max_latency_residual: float
    max_storage_residual: float
    row_residuals: tuple[tuple[str, float, float], ...]  # (row id, offline rel, online rel)
    he_share_anchors: dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class CostModel:
    """Calibrated rates plus the measured table they were fit from.

    mode picks the default phase_costs path: "table" replays measured
    rows (exact at the calibrated bandwidth), "component" scales the
    fitted per-ReLU / per-FLOP rates to any architecture. HE rates are
    keyed by input area (height*width) because ciphertext packing
    efficiency differs per resolution; queries snap to the nearest
    calibrated area.
    """

    mode: str
    gc_bytes_per_relu: float
    he_conv_s_per_flop: dict[int, float]
    he_fc_s_per_flop: dict[int, float]
    he_s_per_linear_unit: float
    garble_s_per_relu: dict[Protocol, float]
    offline_fixed_s: float
    gc_eval_s_per_relu: float
    online_conv_s_per_flop: float
    online_fc_s_per_flop: float
    ot_online_s_per_relu: float
    online_fixed_s: float
    calibrated_bandwidth: float
    table: dict[tuple[Protocol, str, str], MeasuredCosts]
    calibrated_protocols: frozenset[Protocol]
    report: CalibrationReport | None = None

    def __post_init__(self):
        assert self.mode in ("table", "component"), self.mode
        rates = [
            self.gc_bytes_per_relu,
            self.he_s_per_linear_unit,
            self.offline_fixed_s,
            self.gc_eval_s_per_relu,
            self.online_conv_s_per_flop,
            self.online_fc_s_per_flop,
            self.ot_online_s_per_relu,
            self.online_fixed_s,
            *self.he_conv_s_per_flop.values(),
            *self.he_fc_s_per_flop.values(),
            *self.garble_s_per_relu.values(),
        ]
        assert all(r >= 0 for r in rates), "all rates must be non-negative"

    def with_mode(self, mode: str) -> "CostModel":
        return replace(self, mode=mode)


def scaled_model(cm: CostModel, knobs: OptimizationKnobs) -> CostModel:
    """Apply the per-unit knob factors to a calibrated model."""
    if knobs.is_identity:
        return cm
    return replace(
        cm,
        gc_bytes_per_relu=cm.gc_bytes_per_relu * knobs.gc_per_relu_factor,
        he_conv_s_per_flop={
            k: v * knobs.he_per_flop_factor for k, v in cm.he_conv_s_per_flop.items()
        },
        he_fc_s_per_flop={
            k: v * knobs.he_per_flop_factor for k, v in cm.he_fc_s_per_flop.items()
        },
        garble_s_per_relu={
            k: v * knobs.gc_per_relu_factor for k, v in cm.garble_s_per_relu.items()
        },
        gc_eval_s_per_relu=cm.gc_eval_s_per_relu * knobs.gc_per_relu_factor,
        ot_online_s_per_relu=cm.ot_online_s_per_relu,
    )
