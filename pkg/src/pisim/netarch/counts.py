"""Parameter, FLOP, and ReLU counting.

Convention: one multiply-accumulate = one FLOP, so a conv costs
out_elems * in_channels * kernel**2 and an FC costs in * out. Pooling
and elementwise ops are not counted. Skip-connection convs contribute
params and FLOPs; identity skips contribute nothing.
"""

from __future__ import annotations

from dataclasses import dataclass

from .layers import Conv, FC, NetworkArch, ReLU
from .shapes import Shape, validate


@dataclass(frozen=True)
class LayerCounts:
    params: int
    flops: int
    relus: int


@dataclass(frozen=True)
class LinearProfile:
    """Shape-derived quantities the cost model scales by.

    n_units counts HE-processed linear units: convs, FCs, and skip
    connections (identity skips still cost a homomorphic pass for the
    client's share). mask_in/mask_out are the total elements masked at
    linear-segment inputs and shared at segment outputs; segments are
    the maximal linear runs between ReLUs, so every ReLU output is
    re-masked exactly once.
    """

    n_units: int
    conv_flops: int
    fc_flops: int
    mask_in_elems: int
    mask_out_elems: int


def _layer_kinds(arch: NetworkArch) -> dict[str, int]:
    kinds: dict[str, int] = {"conv": 0, "relu": 0, "avgpool": 0, "fc": 0, "flatten": 0}
    for layer in arch.layers:
        kinds[layer.kind] += 1
    return kinds


def layer_kind_counts(arch: NetworkArch) -> dict[str, int]:
    """Counts of each layer kind, excluding skip-connection convs."""
    return _layer_kinds(arch)


def count_table(arch: NetworkArch) -> list[tuple[str, Shape, int, int, int]]:
    """Per-layer (kind, out_shape, params, flops, relus) rows."""
    shapes = validate(arch)
    rows = []
    for layer, shape in zip(arch.layers, shapes):
        params = flops = relus = 0
        if isinstance(layer, Conv):
            out_elems = shape[0] * shape[1] * shape[2]
            params = layer.in_channels * layer.out_channels * layer.kernel**2
            if layer.bias:
                params += layer.out_channels
            flops = out_elems * layer.in_channels * layer.kernel**2
        elif isinstance(layer, FC):
            params = layer.in_features * layer.out_features
            if layer.bias:
                params += layer.out_features
            flops = layer.in_features * layer.out_features
        elif isinstance(layer, ReLU):
            relus = shape[0] if len(shape) == 1 else shape[0] * shape[1] * shape[2]
        rows.append((layer.kind, shape, params, flops, relus))
    input_shape: Shape = (
        arch.dataset.channels,
        arch.dataset.height,
        arch.dataset.width,
    )
    for skip in arch.skips:
        if skip.conv is None:
            continue
        src = input_shape if skip.source == -1 else shapes[skip.source]
        c = skip.conv
        oh = (src[1] + 2 * c.padding - c.kernel) // c.stride + 1
        ow = (src[2] + 2 * c.padding - c.kernel) // c.stride + 1
        params = c.in_channels * c.out_channels * c.kernel**2
        flops = c.out_channels * oh * ow * c.in_channels * c.kernel**2
        rows.append((f"skip-conv {skip.source}->{skip.merge}", (c.out_channels, oh, ow), params, flops, 0))
    return rows


def count(arch: NetworkArch) -> LayerCounts:
    """Totals over count_table."""
    params = flops = relus = 0
    for _, _, p, f, r in count_table(arch):
        params += p
        flops += f
        relus += r
    return LayerCounts(params=params, flops=flops, relus=relus)


def linear_profile(arch: NetworkArch) -> LinearProfile:
    shapes = validate(arch)
    conv_flops = fc_flops = 0
    n_units = len(arch.skips)
    for kind, shape, _, f, _ in count_table(arch):
        if kind.startswith("skip"):
            conv_flops += f
        elif kind == "conv":
            conv_flops += f
            n_units += 1
        elif kind == "fc":
            fc_flops += f
            n_units += 1

    def elems(shape: Shape) -> int:
        return shape[0] if len(shape) == 1 else shape[0] * shape[1] * shape[2]

    # walk segments: every ReLU closes one, the network end closes the last
    mask_in = arch.dataset.image_elems
    mask_out = 0
    for layer, shape in zip(arch.layers, shapes):
        if isinstance(layer, ReLU):
            mask_out += elems(shape)  # segment output, server-masked
            mask_in += elems(shape)  # re-masked ReLU output feeds the next
    mask_out += elems(shapes[-1])  # logits
    mask_in -= elems(shapes[-1]) if isinstance(arch.layers[-1], ReLU) else 0
    for skip in arch.skips:
        mask_out += elems(shapes[skip.merge])  # extra share at each merge
    return LinearProfile(
        n_units=n_units,
        conv_flops=conv_flops,
        fc_flops=fc_flops,
        mask_in_elems=mask_in,
        mask_out_elems=mask_out,
    )
