"""Shape inference and validation for architecture descriptions."""

from __future__ import annotations

from .layers import AvgPool, Conv, FC, Flatten, NetworkArch, ReLU, SkipConnection

Shape = tuple[int, ...]  # (c, h, w) before flatten, (features,) after


class InvalidArch(ValueError):
    """Architecture fails shape inference or structural validation."""


class IncompatibleResolution(InvalidArch):
    """Layer list cannot be re-inferred at the requested input size."""


def _conv_out(layer: Conv, shape: Shape, idx: int) -> Shape:
    if len(shape) != 3:
        raise InvalidArch(f"layer {idx}: conv applied to flattened input")
    c, h, w = shape
    if c != layer.in_channels:
        raise InvalidArch(
            f"layer {idx}: conv expects {layer.in_channels} channels, got {c}"
        )
    oh = (h + 2 * layer.padding - layer.kernel) // layer.stride + 1
    ow = (w + 2 * layer.padding - layer.kernel) // layer.stride + 1
    if oh < 1 or ow < 1:
        raise IncompatibleResolution(
            f"layer {idx}: conv output would be {oh}x{ow} for input {h}x{w}"
        )
    return (layer.out_channels, oh, ow)


def _pool_out(layer: AvgPool, shape: Shape, idx: int) -> Shape:
    if len(shape) != 3:
        raise InvalidArch(f"layer {idx}: avgpool applied to flattened input")
    c, h, w = shape
    window = h if layer.is_global else layer.window
    stride = window if layer.is_global else (layer.stride or layer.window)
    if window > h or window > w:
        raise IncompatibleResolution(
            f"layer {idx}: pool window {window} exceeds input {h}x{w}"
        )
    return (c, (h - window) // stride + 1, (w - window) // stride + 1)


def infer_shapes(arch: NetworkArch) -> list[Shape]:
    """Output shape of every layer, validating as it goes."""
    ds = arch.dataset
    shape: Shape = (ds.channels, ds.height, ds.width)
    shapes: list[Shape] = []
    for idx, layer in enumerate(arch.layers):
        if isinstance(layer, Conv):
            shape = _conv_out(layer, shape, idx)
        elif isinstance(layer, AvgPool):
            shape = _pool_out(layer, shape, idx)
        elif isinstance(layer, ReLU):
            pass
        elif isinstance(layer, Flatten):
            if len(shape) != 3:
                raise InvalidArch(f"layer {idx}: flatten applied twice")
            shape = (shape[0] * shape[1] * shape[2],)
        elif isinstance(layer, FC):
            if len(shape) != 1:
                raise InvalidArch(f"layer {idx}: fc requires flattened input")
            if shape[0] != layer.in_features:
                raise InvalidArch(
                    f"layer {idx}: fc expects {layer.in_features} features, "
                    f"got {shape[0]}"
                )
            shape = (layer.out_features,)
        else:
            raise InvalidArch(f"layer {idx}: unknown layer {layer!r}")
        shapes.append(shape)
    return shapes


def _skip_shape(skip: SkipConnection, shapes: list[Shape], input_shape: Shape) -> Shape:
    src = input_shape if skip.source == -1 else shapes[skip.source]
    if skip.conv is None:
        return src
    return _conv_out(skip.conv, src, skip.source)


def validate(arch: NetworkArch) -> list[Shape]:
    """Full structural check; returns per-layer shapes on success."""
    shapes = infer_shapes(arch)
    if not arch.layers:
        raise InvalidArch("empty layer list")
    final = shapes[-1]
    if len(final) != 1 or final[0] != arch.dataset.classes:
        raise InvalidArch(
            f"final output {final} does not match {arch.dataset.classes} classes"
        )
    input_shape: Shape = (arch.dataset.channels, arch.dataset.height, arch.dataset.width)
    n = len(arch.layers)
    for skip in arch.skips:
        if not (-1 <= skip.source < n) or not (0 <= skip.merge < n):
            raise InvalidArch(f"skip {skip.source}->{skip.merge} out of range")
        if skip.source >= skip.merge:
            raise InvalidArch(f"skip {skip.source}->{skip.merge} not forward")
        contributed = _skip_shape(skip, shapes, input_shape)
        if contributed != shapes[skip.merge]:
            raise InvalidArch(
                f"skip {skip.source}->{skip.merge} shape {contributed} does not "
                f"match merge shape {shapes[skip.merge]}"
            )
    return shapes
