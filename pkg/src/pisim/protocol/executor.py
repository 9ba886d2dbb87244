"""Orchestration: run both parties through a phase and manage bundles.

An offline run yields a PrecomputeBundle, the material exactly one
online inference consumes. The parties run in two threads with the
channel as their only shared state; strict message alternation keeps
transcripts deterministic for a given (arch, protocol, seed).
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass

import numpy as np

from ..costmodel.types import Protocol
from ..field import decode_signed
from ..netarch import NetworkArch
from .channel import Channel, ProtocolHang, Transcript
from .compile import CompiledNetwork, compile_network, gen_weights
from .parties import (
    ClientState,
    ServerState,
    client_offline,
    client_online,
    server_offline,
    server_online,
)
from ..field import FIELD_MODULUS

_bundle_counter = itertools.count(1)


class BundleConsumed(RuntimeError):
    """An online run tried to reuse spent precompute material."""


class BundleMismatch(RuntimeError):
    """Bundle and online request disagree on arch, protocol, or input."""


@dataclass
class PrecomputeBundle:
    arch: NetworkArch
    protocol: Protocol
    seed: int
    compiled: CompiledNetwork
    client_state: ClientState
    server_state: ServerState
    channel: Channel
    bundle_id: int
    consumed: bool = False

    @property
    def transcript(self) -> Transcript:
        return self.channel.transcript

    @property
    def client_stored_bytes(self) -> int:
        return (
            self.transcript.stored_bytes("client")
            + self.client_state.self_stored_bytes
        )

    @property
    def server_stored_bytes(self) -> int:
        return (
            self.transcript.stored_bytes("server")
            + self.server_state.self_stored_bytes
        )


@dataclass(frozen=True)
class OnlineResult:
    logits: np.ndarray
    transcript: Transcript


def _run_pair(client_fn, server_fn, timeout: float):
    results: dict[str, object] = {}
    errors: list[BaseException] = []

    def runner(name, fn):
        try:
            results[name] = fn()
        except BaseException as exc:  # propagate to the caller thread
            errors.append(exc)

    threads = [
        threading.Thread(target=runner, args=("client", client_fn), daemon=True),
        threading.Thread(target=runner, args=("server", server_fn), daemon=True),
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join(timeout=timeout + 5.0)
        if t.is_alive():
            raise ProtocolHang("party thread did not finish")
    if errors:
        # A peer crash usually shows up as the other side timing out;
        # surface the root cause first.
        real = [e for e in errors if not isinstance(e, ProtocolHang)]
        raise (real or errors)[0]
    return results


def run_offline(
    arch: NetworkArch,
    protocol,
    seed: int,
    timeout: float = 30.0,
) -> PrecomputeBundle:
    protocol = Protocol.parse(protocol)
    compiled = compile_network(arch)
    raw_weights = gen_weights(arch, seed)
    p = FIELD_MODULUS
    field_weights = {k: (w % p, b % p) for k, (w, b) in raw_weights.items()}

    bundle_id = next(_bundle_counter)
    client = ClientState(
        protocol=protocol,
        compiled=compiled,
        rng=np.random.default_rng(np.random.SeedSequence([seed, 1])),
        bundle_id=bundle_id,
    )
    server = ServerState(
        protocol=protocol,
        compiled=compiled,
        rng=np.random.default_rng(np.random.SeedSequence([seed, 2])),
        bundle_id=bundle_id,
        weights=field_weights,
    )
    channel = Channel(timeout=timeout)
    _run_pair(
        lambda: client_offline(client, channel),
        lambda: server_offline(server, channel),
        timeout,
    )
    return PrecomputeBundle(
        arch=arch,
        protocol=protocol,
        seed=seed,
        compiled=compiled,
        client_state=client,
        server_state=server,
        channel=channel,
        bundle_id=bundle_id,
    )


def run_online(
    bundle: PrecomputeBundle,
    x: np.ndarray,
    arch: NetworkArch | None = None,
    protocol=None,
) -> OnlineResult:
    if bundle.consumed:
        raise BundleConsumed(
            "precompute bundle was already used; run the offline phase again"
        )
    if arch is not None and arch != bundle.arch:
        raise BundleMismatch("bundle was precomputed for a different architecture")
    if protocol is not None and Protocol.parse(protocol) is not bundle.protocol:
        raise BundleMismatch("bundle was precomputed for a different protocol")
    if bundle.client_state.bundle_id != bundle.server_state.bundle_id:
        raise BundleMismatch("client and server state come from different bundles")
    ds = bundle.arch.dataset
    expected = (ds.channels, ds.height, ds.width)
    x = np.asarray(x, dtype=np.int64)
    if x.shape != expected:
        raise BundleMismatch(f"input shape {x.shape} does not match {expected}")

    bundle.consumed = True
    channel = bundle.channel
    channel.set_phase("online")
    results = _run_pair(
        lambda: client_online(bundle.client_state, channel, x),
        lambda: server_online(bundle.server_state, channel),
        channel.timeout,
    )
    logits_field = results["client"]
    return OnlineResult(
        logits=decode_signed(logits_field), transcript=channel.transcript
    )


def sample_input(arch: NetworkArch, seed: int, trial: int = 0) -> np.ndarray:
    """Small non-negative test image, deterministic per (seed, trial)."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 3, trial]))
    ds = arch.dataset
    return rng.integers(0, 16, size=(ds.channels, ds.height, ds.width), dtype=np.int64)


def run_session(
    arch: NetworkArch, protocol, seed: int, x: np.ndarray | None = None
) -> tuple[np.ndarray, PrecomputeBundle]:
    """Offline then online with a fresh bundle; returns (logits, bundle)."""
    bundle = run_offline(arch, protocol, seed)
    if x is None:
        x = sample_input(arch, seed)
    result = run_online(bundle, x)
    return result.logits, bundle
