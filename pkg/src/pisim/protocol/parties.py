"""Client and server programs for both phases.

Each function drives one party over the channel and touches only that
party's state: the client never sees weights, the server never sees
masks or the sealing key. Message order is strict request/reply, so a
run's transcript is deterministic.

Share convention per linear unit U with input activation a and mask r:
the client ends the offline phase holding c_U = L_U(r) + s_U, the
server holds s_U, and online the server computes L_U(a - r) + b - s_U.
The two sides sum to L_U(a) + b. Sums over all units into a ReLU give
the gadget's two input shares.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .._kernels import conv2d_mod, matvec_mod, relu_remask_mod, sumpool_mod
from ..field import FIELD_MODULUS, encode, sample_elements
from ..costmodel.comm import (
    BASE_OT_BYTES_PER_DIRECTION,
    CG_EVALUATOR_STATE_BYTES_PER_RELU,
    CG_GARBLER_STATE_BYTES_PER_RELU,
    GC_BLOB_BYTES_PER_RELU,
    HE_CT_BYTES_PER_ELEM,
    INPUT_LABEL_BYTES_PER_RELU,
    KEY_BYTES,
    ONLINE_LABEL_BYTES_PER_RELU,
    OT_EXT_CHOICE_BYTES_PER_RELU,
    SG_GARBLER_STATE_BYTES_PER_RELU,
    SHARE_BYTES_PER_ELEM,
)
from ..costmodel.types import Protocol
from .channel import CLIENT, SERVER, Channel, EventKind
from .compile import CompiledNetwork
from .sealed import SealKey, apply_linear, seal, unseal


class GarbledGadget:
    """Opaque garbled ReLU stand-in.

    When the server evaluates (client-garbler), the client's share and
    next mask are baked in at garble time; evaluate() is the only
    sanctioned access to them.
    """

    __slots__ = ("point_index", "relus", "_client_share", "_next_mask")

    def __init__(self, point_index, relus, client_share=None, next_mask=None):
        self.point_index = point_index
        self.relus = relus
        self._client_share = client_share
        self._next_mask = next_mask

    def evaluate(self, server_share: np.ndarray, p: int) -> np.ndarray:
        if self._client_share is None:
            raise RuntimeError("this gadget is a garbler-side record, not evaluable")
        return relu_remask_mod(
            self._client_share, server_share.reshape(-1), self._next_mask, p
        )


@dataclass
class ClientState:
    protocol: Protocol
    compiled: CompiledNetwork
    rng: np.random.Generator
    bundle_id: int
    key: SealKey = dc_field(default_factory=SealKey)
    masks: dict[int, np.ndarray] = dc_field(default_factory=dict)
    shares: dict[int, np.ndarray] = dc_field(default_factory=dict)
    gadgets: dict[int, GarbledGadget] = dc_field(default_factory=dict)
    self_stored_bytes: int = 0


@dataclass
class ServerState:
    protocol: Protocol
    compiled: CompiledNetwork
    rng: np.random.Generator
    bundle_id: int
    weights: dict
    s_shares: dict[str, np.ndarray] = dc_field(default_factory=dict)
    gadgets: dict[int, GarbledGadget] = dc_field(default_factory=dict)
    self_stored_bytes: int = 0
    # filled during the online phase; per-point server input shares,
    # kept so tests can audit share reconstruction against the oracle
    probe_shares: dict[int, np.ndarray] = dc_field(default_factory=dict)


def apply_ops(ops, x: np.ndarray, weights, p: int, with_bias: bool) -> np.ndarray:
    x = np.ascontiguousarray(x, dtype=np.int64)
    for op in ops:
        if op.kind == "conv":
            w, b = weights[op.weight_key]
            bias = b if with_bias else np.zeros_like(b)
            x = conv2d_mod(x, w, bias, op.stride, op.pad, p)
        elif op.kind == "fc":
            w, b = weights[op.weight_key]
            bias = b if with_bias else np.zeros_like(b)
            x = matvec_mod(w, x, bias, p)
        elif op.kind == "pool":
            x = sumpool_mod(x, op.window, op.stride, p)
        elif op.kind == "flatten":
            x = np.ascontiguousarray(x.reshape(-1))
        else:
            raise AssertionError(f"unknown op {op.kind}")
    return x


def _masked_points(comp: CompiledNetwork):
    return [pt for pt in comp.points if pt.masked]


def client_offline(state: ClientState, ch: Channel) -> None:
    comp = state.compiled
    p = FIELD_MODULUS
    cg = state.protocol is Protocol.CLIENT_GARBLER

    ch.send(CLIENT, EventKind.KEYS, state.key, KEY_BYTES, stored_by_receiver=True, label="setup")
    for pt in _masked_points(comp):
        r = sample_elements(state.rng, pt.shape)
        state.masks[pt.index] = r
        ch.send(
            CLIENT,
            EventKind.ENCRYPTED_MASKS,
            seal(state.key, r),
            HE_CT_BYTES_PER_ELEM * pt.elems,
            label=f"point{pt.index}",
        )

    for unit in comp.units:
        _, sealed = ch.receive(CLIENT, expect=EventKind.ENCRYPTED_LINEAR_SHARE)
        c = unseal(state.key, sealed)
        prev = state.shares.get(unit.dst_point)
        state.shares[unit.dst_point] = c if prev is None else (prev + c) % p

    ch.send(
        CLIENT,
        EventKind.OT_MESSAGE,
        None,
        BASE_OT_BYTES_PER_DIRECTION,
        stored_by_receiver=cg,
        label="base-ot",
    )
    ch.receive(CLIENT, expect=EventKind.OT_MESSAGE)

    if cg:
        for pt in comp.relu_points:
            gadget = GarbledGadget(
                pt.index,
                pt.elems,
                client_share=state.shares[pt.index].reshape(-1).copy(),
                next_mask=state.masks[pt.index].reshape(-1).copy(),
            )
            ch.send(
                CLIENT,
                EventKind.GARBLED_CIRCUIT,
                gadget,
                GC_BLOB_BYTES_PER_RELU * pt.elems,
                stored_by_receiver=True,
                label=f"point{pt.index}",
            )
            ch.send(
                CLIENT,
                EventKind.LABELS,
                None,
                INPUT_LABEL_BYTES_PER_RELU * pt.elems,
                stored_by_receiver=True,
                label=f"point{pt.index}",
            )
    else:
        for pt in comp.relu_points:
            _, gadget = ch.receive(CLIENT, expect=EventKind.GARBLED_CIRCUIT)
            ch.receive(CLIENT, expect=EventKind.LABELS)
            state.gadgets[pt.index] = gadget
            ch.send(
                CLIENT,
                EventKind.OT_MESSAGE,
                None,
                OT_EXT_CHOICE_BYTES_PER_RELU * pt.elems,
                label=f"choice point{pt.index}",
            )

    mask_elems = sum(pt.elems for pt in _masked_points(comp))
    state.self_stored_bytes = SHARE_BYTES_PER_ELEM * mask_elems
    if cg:
        state.self_stored_bytes += CG_GARBLER_STATE_BYTES_PER_RELU * comp.total_relus


def server_offline(state: ServerState, ch: Channel) -> None:
    comp = state.compiled
    p = FIELD_MODULUS
    cg = state.protocol is Protocol.CLIENT_GARBLER

    ch.receive(SERVER, expect=EventKind.KEYS)
    sealed_masks = {}
    for pt in _masked_points(comp):
        _, sealed = ch.receive(SERVER, expect=EventKind.ENCRYPTED_MASKS)
        sealed_masks[pt.index] = sealed

    for unit in comp.units:
        s = sample_elements(state.rng, unit.out_shape)
        state.s_shares[unit.uid] = s

        def share_of(r, unit=unit, s=s):
            lin = apply_ops(unit.ops, r, state.weights, p, with_bias=False)
            return (lin + s) % p

        ch.send(
            SERVER,
            EventKind.ENCRYPTED_LINEAR_SHARE,
            apply_linear(sealed_masks[unit.src_point], share_of),
            HE_CT_BYTES_PER_ELEM * unit.out_elems,
            stored_by_receiver=True,
            label=unit.uid,
        )

    ch.receive(SERVER, expect=EventKind.OT_MESSAGE)
    ch.send(
        SERVER,
        EventKind.OT_MESSAGE,
        None,
        BASE_OT_BYTES_PER_DIRECTION,
        stored_by_receiver=cg,
        label="base-ot",
    )

    if cg:
        for pt in comp.relu_points:
            _, gadget = ch.receive(SERVER, expect=EventKind.GARBLED_CIRCUIT)
            ch.receive(SERVER, expect=EventKind.LABELS)
            state.gadgets[pt.index] = gadget
    else:
        for pt in comp.relu_points:
            ch.send(
                SERVER,
                EventKind.GARBLED_CIRCUIT,
                GarbledGadget(pt.index, pt.elems),
                GC_BLOB_BYTES_PER_RELU * pt.elems,
                stored_by_receiver=True,
                label=f"point{pt.index}",
            )
            ch.send(
                SERVER,
                EventKind.LABELS,
                None,
                INPUT_LABEL_BYTES_PER_RELU * pt.elems,
                stored_by_receiver=True,
                label=f"point{pt.index}",
            )
            ch.receive(SERVER, expect=EventKind.OT_MESSAGE)

    out_elems = sum(u.out_elems for u in comp.units)
    state.self_stored_bytes = SHARE_BYTES_PER_ELEM * out_elems
    per_relu = (
        CG_EVALUATOR_STATE_BYTES_PER_RELU if cg else SG_GARBLER_STATE_BYTES_PER_RELU
    )
    state.self_stored_bytes += per_relu * comp.total_relus


def client_online(state: ClientState, ch: Channel, x: np.ndarray) -> np.ndarray:
    comp = state.compiled
    p = FIELD_MODULUS
    cg = state.protocol is Protocol.CLIENT_GARBLER

    y0 = (encode(x) - state.masks[0]) % p
    ch.send(
        CLIENT,
        EventKind.MASKED_TENSOR,
        y0,
        SHARE_BYTES_PER_ELEM * int(np.prod(x.shape)),
        label="input",
    )

    for pt in comp.relu_points:
        if cg:
            ch.receive(CLIENT, expect=EventKind.OT_MESSAGE)
            ch.send(
                CLIENT,
                EventKind.OT_MESSAGE,
                None,
                ONLINE_LABEL_BYTES_PER_RELU * pt.elems,
                label=f"point{pt.index}",
            )
        else:
            if pt.index not in state.gadgets:
                raise RuntimeError(f"no garbled gadget for point {pt.index}")
            _, server_share = ch.receive(CLIENT, expect=EventKind.LABELS)
            y = relu_remask_mod(
                state.shares[pt.index].reshape(-1),
                server_share.reshape(-1),
                state.masks[pt.index].reshape(-1),
                p,
            ).reshape(pt.shape)
            ch.send(
                CLIENT,
                EventKind.OUTPUT_LABELS,
                y,
                ONLINE_LABEL_BYTES_PER_RELU * pt.elems,
                label=f"point{pt.index}",
            )

    _, server_out = ch.receive(CLIENT, expect=EventKind.MASKED_TENSOR)
    out = comp.output_point
    return (state.shares[out.index] + server_out) % p


def server_online(state: ServerState, ch: Channel) -> None:
    comp = state.compiled
    p = FIELD_MODULUS
    cg = state.protocol is Protocol.CLIENT_GARBLER

    _, y0 = ch.receive(SERVER, expect=EventKind.MASKED_TENSOR)
    masked = {0: np.asarray(y0, dtype=np.int64) % p}

    def share_into(point_index: int) -> np.ndarray:
        total = None
        for unit in comp.units_into(point_index):
            lin = apply_ops(unit.ops, masked[unit.src_point], state.weights, p, True)
            contrib = (lin - state.s_shares[unit.uid]) % p
            total = contrib if total is None else (total + contrib) % p
        return total

    for pt in comp.relu_points:
        s_share = share_into(pt.index)
        state.probe_shares[pt.index] = s_share
        if cg:
            ch.send(
                SERVER,
                EventKind.OT_MESSAGE,
                {"point": pt.index},
                ONLINE_LABEL_BYTES_PER_RELU * pt.elems,
                label=f"point{pt.index}",
            )
            ch.receive(SERVER, expect=EventKind.OT_MESSAGE)
            gadget = state.gadgets[pt.index]
            masked[pt.index] = gadget.evaluate(s_share, p).reshape(pt.shape)
        else:
            ch.send(
                SERVER,
                EventKind.LABELS,
                s_share,
                ONLINE_LABEL_BYTES_PER_RELU * pt.elems,
                label=f"point{pt.index}",
            )
            _, y = ch.receive(SERVER, expect=EventKind.OUTPUT_LABELS)
            masked[pt.index] = np.asarray(y, dtype=np.int64)

    out = comp.output_point
    ch.send(
        SERVER,
        EventKind.MASKED_TENSOR,
        share_into(out.index),
        SHARE_BYTES_PER_ELEM * out.elems,
        label="logits-share",
    )
