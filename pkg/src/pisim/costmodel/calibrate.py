"""Fitting per-unit rates from measured end-to-end rows.

The fit splits each measured latency into a wire term (bytes over the
measured bandwidth, priced by the structural byte model) and a compute
term, then solves a small non-negative least-squares system for the
compute rates:

  offline ~ he_conv[area]*conv_flops + he_fc[area]*fc_flops
            + garble[protocol]*relus + per_unit*n_units + fixed
  online  ~ gc_eval*relus + conv_rate*conv_flops + fc_rate*fc_flops
            + ot*relus (client-garbler only) + fixed

HE rates are fit per input area because ciphertext packing efficiency
depends on resolution. Rows are weighted relatively so small online
latencies count as much as large offline ones. A soft prior keeps the
HE share of offline compute near its measured fraction on the
largest-FLOP row per area, which pins down the split between the
FLOP-driven and ReLU-driven offline terms.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import lsq_linear

from ..netarch import NetworkArch, build_preset, canonical_dataset, count, linear_profile
from .comm import (
    CommInputs,
    gc_party_small_terms,
    offline_comm,
    online_comm,
    storage_deltas,
)
from .types import (
    CalibrationReport,
    CostModel,
    InconsistentRows,
    InsufficientRows,
    MeasuredCosts,
    Protocol,
)


@dataclass(frozen=True)
class CalibrationOptions:
    latency_tolerance: float = 0.10
    storage_tolerance: float = 0.05
    he_share_target: float = 0.915
    he_share_weight: float = 0.6
    validate: bool = True


@dataclass(frozen=True)
class _RowView:
    row: MeasuredCosts
    arch: NetworkArch
    sizes: CommInputs
    conv_flops: int
    fc_flops: int
    relus: int
    n_units: int
    area: int
    offline_compute_s: float
    online_compute_s: float

    @property
    def label(self) -> str:
        return f"{self.row.protocol.short}/{self.row.model}/{self.row.dataset}"


def _default_archs(rows: list[MeasuredCosts]) -> dict[tuple[str, str], NetworkArch]:
    archs = {}
    for row in rows:
        key = (row.model, row.dataset)
        if key not in archs:
            archs[key] = build_preset(row.model, row.dataset)
    return archs


def _view(row: MeasuredCosts, arch: NetworkArch) -> _RowView:
    sizes = CommInputs.from_arch(arch)
    counts = count(arch)
    profile = linear_profile(arch)
    bw = row.bandwidth_bytes_per_s
    off_comm = row.offline_comm_bytes
    if off_comm is None:
        off_comm = offline_comm(row.protocol, sizes).total_bytes
    on_comm = row.online_comm_bytes
    if on_comm is None:
        on_comm = online_comm(row.protocol, sizes).total_bytes
    off_compute = row.offline_latency_s - off_comm / bw
    on_compute = row.online_latency_s - on_comm / bw
    if off_compute <= 0 or on_compute <= 0:
        raise InconsistentRows(
            f"{row.protocol.short}/{row.model}/{row.dataset}: modeled wire time "
            "exceeds the measured latency; bandwidth or comm columns are off"
        )
    return _RowView(
        row=row,
        arch=arch,
        sizes=sizes,
        conv_flops=profile.conv_flops,
        fc_flops=profile.fc_flops,
        relus=counts.relus,
        n_units=profile.n_units,
        area=arch.dataset.height * arch.dataset.width,
        offline_compute_s=off_compute,
        online_compute_s=on_compute,
    )


def _fit_gc_rate(views: list[_RowView], options: CalibrationOptions) -> float:
    rates = []
    for v in views:
        deltas_bytes = (
            v.row.client_storage_bytes
            if v.row.protocol is Protocol.SERVER_GARBLER
            else v.row.server_storage_bytes
        )
        small = gc_party_small_terms(v.row.protocol, v.sizes)
        rates.append((deltas_bytes - small) / v.relus)
    rates_arr = np.asarray(rates)
    mean = float(rates_arr.mean())
    if mean <= 0:
        raise InconsistentRows("fitted GC storage rate is not positive")
    spread = float(np.abs(rates_arr - mean).max() / mean)
    if spread > options.storage_tolerance:
        raise InconsistentRows(
            f"per-row GC storage rates disagree by {spread:.1%} "
            f"(tolerance {options.storage_tolerance:.0%})"
        )
    return mean


def _solve_offline(views, conv_areas, fc_areas, protocols, options):
    n_conv, n_fc, n_prot = len(conv_areas), len(fc_areas), len(protocols)
    n_vars = n_conv + n_fc + n_prot + 2  # + per-unit + fixed
    rows_a, rows_b = [], []

    def add(coeffs: np.ndarray, target: float, weight: float) -> None:
        # Relative weighting: normalize by the target magnitude.
        rows_a.append(coeffs * (weight / target))
        rows_b.append(weight)

    for v in views:
        coeffs = np.zeros(n_vars)
        coeffs[conv_areas.index(v.area)] = v.conv_flops
        if v.fc_flops:
            coeffs[n_conv + fc_areas.index(v.area)] = v.fc_flops
        coeffs[n_conv + n_fc + protocols.index(v.row.protocol)] = v.relus
        coeffs[-2] = v.n_units
        coeffs[-1] = 1.0
        add(coeffs, v.offline_compute_s, 1.0)

    if options.he_share_weight > 0:
        for area in conv_areas:
            candidates = [v for v in views if v.area == area]
            cg = [v for v in candidates if v.row.protocol is Protocol.CLIENT_GARBLER]
            pool = cg or candidates
            anchor = max(pool, key=lambda v: v.conv_flops)
            coeffs = np.zeros(n_vars)
            coeffs[conv_areas.index(area)] = anchor.conv_flops
            if anchor.fc_flops and area in fc_areas:
                coeffs[n_conv + fc_areas.index(area)] = anchor.fc_flops
            add(
                coeffs,
                options.he_share_target * anchor.offline_compute_s,
                options.he_share_weight,
            )

    result = lsq_linear(np.vstack(rows_a), np.asarray(rows_b), bounds=(0, np.inf))
    return result.x


def _solve_online(views, protocols, options):
    has_cg = Protocol.CLIENT_GARBLER in protocols
    n_vars = 4 + (1 if has_cg else 0)  # eval, conv, fc, [ot], fixed
    rows_a, rows_b = [], []
    for v in views:
        coeffs = np.zeros(n_vars)
        coeffs[0] = v.relus
        coeffs[1] = v.conv_flops
        coeffs[2] = v.fc_flops
        if has_cg and v.row.protocol is Protocol.CLIENT_GARBLER:
            coeffs[3] = v.relus
        coeffs[-1] = 1.0
        rows_a.append(coeffs / v.online_compute_s)
        rows_b.append(1.0)
    result = lsq_linear(np.vstack(rows_a), np.asarray(rows_b), bounds=(0, np.inf))
    return result.x


def calibrate(
    rows: list[MeasuredCosts],
    archs: dict[tuple[str, str], NetworkArch] | None = None,
    options: CalibrationOptions | None = None,
    mode: str = "component",
) -> CostModel:
    """Fit a CostModel from measured rows.

    archs maps (model, dataset) names from the table to architectures;
    unnamed pairs fall back to the built-in presets. Partial protocol
    coverage is allowed: queries for a protocol with no rows raise
    InsufficientRows later, at query time.
    """
    if not rows:
        raise InsufficientRows("no measured rows to calibrate from")
    options = options or CalibrationOptions()
    archs = dict(archs or {})
    for key, arch in _default_archs(rows).items():
        archs.setdefault(key, arch)

    views = [_view(row, archs[(row.model, row.dataset)]) for row in rows]
    protocols = sorted({v.row.protocol for v in views}, key=lambda p: p.value)
    conv_areas = sorted({v.area for v in views})
    fc_areas = sorted({v.area for v in views if v.fc_flops})

    gc_rate = _fit_gc_rate(views, options)
    x_off = _solve_offline(views, conv_areas, fc_areas, protocols, options)
    x_on = _solve_online(views, protocols, options)

    n_conv, n_fc = len(conv_areas), len(fc_areas)
    he_conv = {a: float(x_off[i]) for i, a in enumerate(conv_areas)}
    he_fc = {a: float(x_off[n_conv + i]) for i, a in enumerate(fc_areas)}
    garble = {
        p: float(x_off[n_conv + n_fc + i]) for i, p in enumerate(protocols)
    }
    has_cg = Protocol.CLIENT_GARBLER in protocols

    model = CostModel(
        mode=mode,
        gc_bytes_per_relu=gc_rate,
        he_conv_s_per_flop=he_conv,
        he_fc_s_per_flop=he_fc,
        he_s_per_linear_unit=float(x_off[-2]),
        garble_s_per_relu=garble,
        offline_fixed_s=float(x_off[-1]),
        gc_eval_s_per_relu=float(x_on[0]),
        online_conv_s_per_flop=float(x_on[1]),
        online_fc_s_per_flop=float(x_on[2]),
        ot_online_s_per_relu=float(x_on[3]) if has_cg else 0.0,
        online_fixed_s=float(x_on[-1]),
        calibrated_bandwidth=float(views[0].row.bandwidth_bytes_per_s),
        table={(r.protocol, r.model, canonical_dataset(r.dataset)): r for r in rows},
        calibrated_protocols=frozenset(protocols),
        report=None,
    )
    report = _build_report(model, views, conv_areas)
    model = replace(model, report=report)
    if options.validate:
        _validate(options, report)
    return model


def _predict_compute(model: CostModel, v: _RowView) -> tuple[float, float]:
    he = (
        model.he_conv_s_per_flop.get(v.area, 0.0) * v.conv_flops
        + model.he_fc_s_per_flop.get(v.area, 0.0) * v.fc_flops
        + model.he_s_per_linear_unit * v.n_units
    )
    off = he + model.garble_s_per_relu[v.row.protocol] * v.relus + model.offline_fixed_s
    on = (
        model.gc_eval_s_per_relu * v.relus
        + model.online_conv_s_per_flop * v.conv_flops
        + model.online_fc_s_per_flop * v.fc_flops
        + model.online_fixed_s
    )
    if v.row.protocol is Protocol.CLIENT_GARBLER:
        on += model.ot_online_s_per_relu * v.relus
    return off, on


def predicted_he_share(model: CostModel, v_area: int, conv_flops: int, fc_flops: int, n_units: int, relus: int, protocol: Protocol) -> float:
    he = (
        model.he_conv_s_per_flop.get(v_area, 0.0) * conv_flops
        + model.he_fc_s_per_flop.get(v_area, 0.0) * fc_flops
        + model.he_s_per_linear_unit * n_units
    )
    total = he + model.garble_s_per_relu[protocol] * relus + model.offline_fixed_s
    return he / total if total > 0 else 0.0


def _build_report(model: CostModel, views: list[_RowView], conv_areas) -> CalibrationReport:
    residuals = []
    he_shares = {}
    worst_storage = 0.0
    for v in views:
        off, on = _predict_compute(model, v)
        bw = v.row.bandwidth_bytes_per_s
        off_pred = off + offline_comm(v.row.protocol, v.sizes).total_bytes / bw
        on_pred = on + online_comm(v.row.protocol, v.sizes).total_bytes / bw
        residuals.append(
            (
                v.label,
                abs(off_pred - v.row.offline_latency_s) / v.row.offline_latency_s,
                abs(on_pred - v.row.online_latency_s) / v.row.online_latency_s,
            )
        )
        deltas = storage_deltas(v.row.protocol, v.sizes)
        for measured, predicted in (
            (v.row.client_storage_bytes, deltas.client_bytes),
            (v.row.server_storage_bytes, deltas.server_bytes),
        ):
            if measured > 0:
                worst_storage = max(worst_storage, abs(predicted - measured) / measured)
    for area in conv_areas:
        pool = [v for v in views if v.area == area]
        anchor = max(pool, key=lambda v: v.conv_flops)
        he_shares[anchor.label] = predicted_he_share(
            model,
            anchor.area,
            anchor.conv_flops,
            anchor.fc_flops,
            anchor.n_units,
            anchor.relus,
            anchor.row.protocol,
        )
    max_lat = max(max(r[1], r[2]) for r in residuals)
    return CalibrationReport(
        max_latency_residual=max_lat,
        max_storage_residual=worst_storage,
        row_residuals=tuple(residuals),
        he_share_anchors=he_shares,
    )


def _validate(options: CalibrationOptions, report: CalibrationReport) -> None:
    bad = [r for r in report.row_residuals if max(r[1], r[2]) > options.latency_tolerance]
    if bad:
        detail = "; ".join(f"{label}: off {o:.1%} on {n:.1%}" for label, o, n in bad)
        raise InconsistentRows(
            f"latency residuals exceed {options.latency_tolerance:.0%}: {detail}"
        )
    if report.max_storage_residual > options.storage_tolerance:
        raise InconsistentRows(
            f"storage residuals exceed {options.storage_tolerance:.0%} "
            f"(worst {report.max_storage_residual:.1%})"
        )
