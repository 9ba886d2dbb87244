"""Masked two-party execution checked against the plaintext oracle."""

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pisim.costmodel import CommInputs, Protocol, offline_comm, online_comm, storage_deltas
from pisim.field import FIELD_MODULUS, encode, sample_elements
from pisim.netarch import (
    AvgPool,
    Conv,
    DatasetSpec,
    FC,
    Flatten,
    NetworkArch,
    ReLU,
    SkipConnection,
    build_preset,
    validate,
)
from pisim.protocol import (
    BundleConsumed,
    BundleMismatch,
    EventKind,
    GUARD_MAX_RELUS,
    SealKey,
    VerifyGuard,
    WrongKey,
    export_transcript,
    gen_weights,
    plaintext_forward,
    run_offline,
    run_online,
    sample_input,
    seal,
    unseal,
    verify_against_plaintext,
)

SG = Protocol.SERVER_GARBLER
CG = Protocol.CLIENT_GARBLER
P = FIELD_MODULUS

TOY = build_preset("toy_cnn", "cifar100")


def mini_res() -> NetworkArch:
    """Small residual net with an identity skip and a strided projection."""
    ds = DatasetSpec("mini", 3, 8, 8, 5)
    layers = (
        Conv(3, 4, 3, padding=1),
        ReLU(),
        Conv(4, 4, 3, padding=1),
        ReLU(),
        Conv(4, 8, 3, stride=2, padding=1),
        ReLU(),
        AvgPool(),
        Flatten(),
        FC(8, 5),
    )
    skips = (
        SkipConnection(source=1, merge=2),
        SkipConnection(source=3, merge=4, conv=Conv(4, 8, 1, stride=2)),
    )
    arch = NetworkArch("mini_res", ds, layers, skips)
    validate(arch)
    return arch


MINI = mini_res()


@pytest.mark.parametrize("arch", [TOY, MINI], ids=["toy_cnn", "mini_res"])
@pytest.mark.parametrize("proto", [SG, CG], ids=["sg", "cg"])
def test_exact_against_oracle(arch, proto):
    for seed in range(4):
        bundle = run_offline(arch, proto, seed=seed)
        x = sample_input(arch, seed=seed)
        result = run_online(bundle, x)
        expected = plaintext_forward(arch, gen_weights(arch, seed), x)
        assert np.array_equal(result.logits, expected), f"seed {seed}"


@pytest.mark.parametrize("arch", [TOY, MINI], ids=["toy_cnn", "mini_res"])
def test_protocols_agree_on_logits(arch):
    for seed in (0, 3):
        x = sample_input(arch, seed=seed)
        sg = run_online(run_offline(arch, SG, seed=seed), x)
        cg = run_online(run_offline(arch, CG, seed=seed), x)
        assert np.array_equal(sg.logits, cg.logits)


@pytest.mark.parametrize("arch", [TOY, MINI], ids=["toy_cnn", "mini_res"])
@pytest.mark.parametrize("proto", [SG, CG], ids=["sg", "cg"])
def test_share_sums_reconstruct_preactivations(arch, proto):
    seed = 11
    bundle = run_offline(arch, proto, seed=seed)
    x = sample_input(arch, seed=seed)
    run_online(bundle, x)
    trace: dict[int, np.ndarray] = {}
    plaintext_forward(arch, gen_weights(arch, seed), x, trace=trace)
    server = bundle.server_state
    client = bundle.client_state
    points = bundle.compiled.relu_points
    assert len(points) == len(trace)
    for j, pt in enumerate(points):
        s = server.probe_shares[pt.index].astype(np.int64).ravel()
        if proto is SG:
            c = client.shares[pt.index].astype(np.int64).ravel()
        else:
            c = server.gadgets[pt.index]._client_share.astype(np.int64).ravel()
        rec = (c + s) % P
        assert np.array_equal(rec, encode(trace[j]).ravel()), f"point {pt.index}"


@pytest.mark.parametrize("proto", [SG, CG], ids=["sg", "cg"])
def test_transcript_bytes_match_comm_model(proto):
    inputs = CommInputs.from_arch(TOY)
    bundle = run_offline(TOY, proto, seed=2)
    online = run_online(bundle, sample_input(TOY, seed=2))
    off = offline_comm(proto, inputs)
    on = online_comm(proto, inputs)
    assert bundle.transcript.total_bytes("offline", "c2s") == off.c2s_bytes
    assert bundle.transcript.total_bytes("offline", "s2c") == off.s2c_bytes
    assert online.transcript.total_bytes("online", "c2s") == on.c2s_bytes
    assert online.transcript.total_bytes("online", "s2c") == on.s2c_bytes


@pytest.mark.parametrize("proto", [SG, CG], ids=["sg", "cg"])
def test_stored_bytes_match_storage_model(proto):
    inputs = CommInputs.from_arch(TOY)
    bundle = run_offline(TOY, proto, seed=2)
    d = storage_deltas(proto, inputs)
    assert bundle.client_stored_bytes == d.client_received_bytes + d.client_self_bytes
    assert bundle.server_stored_bytes == d.server_received_bytes + d.server_self_bytes


def test_garbled_circuits_travel_toward_evaluator():
    sg = run_offline(TOY, SG, seed=0).transcript
    cg = run_offline(TOY, CG, seed=0).transcript
    sg_gc = [e for e in sg.events if e.kind is EventKind.GARBLED_CIRCUIT]
    cg_gc = [e for e in cg.events if e.kind is EventKind.GARBLED_CIRCUIT]
    assert sg_gc and all(e.direction == "s2c" for e in sg_gc)
    assert cg_gc and all(e.direction == "c2s" for e in cg_gc)
    # the evaluator must hold the blob until the online phase
    assert all(e.stored_by_receiver for e in sg_gc + cg_gc)


def test_ot_setup_stored_only_by_garbling_client():
    sg = run_offline(TOY, SG, seed=0).transcript
    cg = run_offline(TOY, CG, seed=0).transcript

    def stored_ot(t):
        return [e for e in t.events if e.kind is EventKind.OT_MESSAGE and e.stored_by_receiver]

    assert not stored_ot(sg)
    assert stored_ot(cg)


def test_transcript_deterministic(tmp_path):
    paths = []
    for run in range(2):
        bundle = run_offline(TOY, CG, seed=9)
        online = run_online(bundle, sample_input(TOY, seed=9))
        p = tmp_path / f"t{run}.jsonl"
        export_transcript(online.transcript, p)
        paths.append(p.read_bytes())
    assert paths[0] == paths[1]
    lines = paths[0].decode().splitlines()
    assert lines
    first = json.loads(lines[0])
    assert {"seq", "phase", "direction", "kind", "nbytes"} <= set(first)


def test_different_seeds_differ():
    a = run_online(run_offline(TOY, SG, seed=0), sample_input(TOY, seed=0))
    b = run_online(run_offline(TOY, SG, seed=1), sample_input(TOY, seed=1))
    assert not np.array_equal(a.logits, b.logits)


def test_bundle_single_use():
    bundle = run_offline(TOY, SG, seed=0)
    x = sample_input(TOY, seed=0)
    run_online(bundle, x)
    with pytest.raises(BundleConsumed):
        run_online(bundle, x)


def test_bundle_mismatch_checks():
    bundle = run_offline(TOY, SG, seed=0)
    x = sample_input(TOY, seed=0)
    with pytest.raises(BundleMismatch):
        run_online(bundle, x, arch=MINI)
    with pytest.raises(BundleMismatch):
        run_online(bundle, x, protocol=CG)
    with pytest.raises(BundleMismatch):
        run_online(bundle, np.zeros((3, 8, 8), dtype=np.int64))


def test_sealed_roundtrip_and_opacity():
    rng = np.random.default_rng(0)
    vals = sample_elements(rng, (64,))
    key = SealKey()
    box = seal(key, vals)
    assert np.array_equal(unseal(key, box), vals)
    shown = repr(box)
    for v in vals[:8]:
        assert str(int(v)) not in shown
    with pytest.raises(WrongKey):
        unseal(SealKey(), box)


def test_verify_guard_on_large_arch():
    big = build_preset("resnet32", "cifar100")
    with pytest.raises(VerifyGuard):
        verify_against_plaintext(big, trials=1)
    assert GUARD_MAX_RELUS < 303_104


def test_verify_reports_ok():
    result = verify_against_plaintext(TOY, seed=0, trials=3)
    assert result.ok
    assert not result.failures
    assert len(result.trials) == 6  # 3 trials x 2 protocols
    for trial in result.trials:
        assert np.array_equal(trial.logits, trial.expected)


@given(st.integers(0, 2**32 - 1), st.integers(1, 128))
@settings(max_examples=30, deadline=None)
def test_share_reconstruction_property(seed, n):
    rng = np.random.default_rng(seed)
    v = sample_elements(rng, (n,))
    r = sample_elements(rng, (n,))
    assert np.array_equal(((v - r) % P + r) % P, v)


@given(st.integers(0, 2**32 - 1), st.integers(1, 64))
@settings(max_examples=30, deadline=None)
def test_gadget_evaluate_semantics(seed, n):
    from pisim.protocol.parties import GarbledGadget

    rng = np.random.default_rng(seed)
    v = rng.integers(-1000, 1000, size=n)
    c = sample_elements(rng, (n,))
    s = (encode(v) - c) % P
    mask = sample_elements(rng, (n,))
    gadget = GarbledGadget(0, n, client_share=c, next_mask=mask)
    out = gadget.evaluate(s, P)
    assert np.array_equal(out, (np.maximum(v, 0) - mask) % P)


def test_garbler_side_gadget_not_evaluable():
    from pisim.protocol.parties import GarbledGadget

    with pytest.raises(RuntimeError):
        GarbledGadget(0, 4).evaluate(np.zeros(4, dtype=np.int64), P)
