"""Executable two-party masked inference with functional crypto stand-ins."""

from .channel import (
    CLIENT,
    SERVER,
    Channel,
    EventKind,
    ProtocolHang,
    Transcript,
    TranscriptEvent,
)
from .compile import (
    ActivationPoint,
    CompiledNetwork,
    LinearUnit,
    PrimitiveOp,
    compile_network,
    gen_weights,
)
from .executor import (
    BundleConsumed,
    BundleMismatch,
    OnlineResult,
    PrecomputeBundle,
    run_offline,
    run_online,
    run_session,
    sample_input,
)
from .oracle import plaintext_forward
from .parties import ClientState, GarbledGadget, ServerState, apply_ops
from .sealed import SealKey, SealedVector, WrongKey, apply_linear, seal, unseal
from .verify import (
    GUARD_MAX_RELUS,
    TrialOutcome,
    VerifyGuard,
    VerifyResult,
    export_transcript,
    verify_against_plaintext,
)

__all__ = [
    "CLIENT",
    "SERVER",
    "ActivationPoint",
    "BundleConsumed",
    "BundleMismatch",
    "Channel",
    "ClientState",
    "CompiledNetwork",
    "EventKind",
    "GUARD_MAX_RELUS",
    "GarbledGadget",
    "LinearUnit",
    "OnlineResult",
    "PrecomputeBundle",
    "PrimitiveOp",
    "ProtocolHang",
    "SealKey",
    "SealedVector",
    "ServerState",
    "Transcript",
    "TranscriptEvent",
    "TrialOutcome",
    "VerifyGuard",
    "VerifyResult",
    "WrongKey",
    "apply_linear",
    "apply_ops",
    "compile_network",
    "export_transcript",
    "gen_weights",
    "plaintext_forward",
    "run_offline",
    "run_online",
    "run_session",
    "sample_input",
    "seal",
    "unseal",
    "verify_against_plaintext",
]
