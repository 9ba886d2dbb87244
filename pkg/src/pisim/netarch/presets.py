"""Built-in dataset and model presets.

The three models mirror the networks used for the measured cost table:
CIFAR-style stems (3x3 stride-1 first conv, no early downsampling),
max-pools replaced by average pools, and a global average pool before
the classifier in the ResNets. ResNet-18 uses projection (1x1 conv)
shortcuts at stage transitions; ResNet-32 uses parameter-free padded
shortcuts there, which carry no params, FLOPs, or ReLUs and are
omitted from the dataflow graph.
"""

from __future__ import annotations

from .layers import (
    AvgPool,
    Conv,
    DatasetSpec,
    FC,
    Flatten,
    NetworkArch,
    ReLU,
    SkipConnection,
)

CIFAR100 = DatasetSpec("cifar100", channels=3, height=32, width=32, classes=100)
TINYIMAGENET = DatasetSpec("tinyimagenet", channels=3, height=64, width=64, classes=200)
IMAGENET = DatasetSpec("imagenet", channels=3, height=224, width=224, classes=1000)
TOY8 = DatasetSpec("toy8", channels=1, height=8, width=8, classes=4)

DATASETS: dict[str, DatasetSpec] = {
    "cifar100": CIFAR100,
    "c100": CIFAR100,
    "tinyimagenet": TINYIMAGENET,
    "tiny": TINYIMAGENET,
    "imagenet": IMAGENET,
    "toy8": TOY8,
}


class UnknownPreset(KeyError):
    pass


def get_dataset(name: str) -> DatasetSpec:
    try:
        return DATASETS[name.lower()]
    except KeyError:
        raise UnknownPreset(
            f"unknown dataset {name!r}; known: {sorted(set(DATASETS))}"
        ) from None


def canonical_dataset(name: str) -> str:
    """Resolve aliases like c100 to the full dataset name; pass through
    names the registry does not know."""
    try:
        return get_dataset(name).name
    except UnknownPreset:
        return name


def _residual_stages(stage_channels, blocks_per_stage, in_channels, project):
    """Shared builder for the two ResNets.

    Yields layers and skip connections; `project` picks 1x1-conv
    shortcuts at shape-changing transitions (else those transitions get
    no modeled skip).
    """
    layers: list = []
    skips: list[SkipConnection] = []
    inc = in_channels
    for stage, ch in enumerate(stage_channels):
        for block in range(blocks_per_stage):
            stride = 2 if stage > 0 and block == 0 else 1
            src = len(layers) - 1
            layers.append(Conv(inc, ch, kernel=3, stride=stride, padding=1))
            layers.append(ReLU())
            layers.append(Conv(ch, ch, kernel=3, stride=1, padding=1))
            merge = len(layers) - 1
            if inc == ch and stride == 1:
                skips.append(SkipConnection(src, merge, conv=None))
            elif project:
                skips.append(
                    SkipConnection(
                        src, merge, conv=Conv(inc, ch, kernel=1, stride=stride)
                    )
                )
            layers.append(ReLU())
            inc = ch
    return layers, skips, inc


def _resnet32(dataset: DatasetSpec) -> NetworkArch:
    layers: list = [Conv(dataset.channels, 16, kernel=3, stride=1, padding=1), ReLU()]
    body, skips, width = _residual_stages((16, 32, 64), 5, 16, project=False)
    offset = len(layers)
    skips = [
        SkipConnection(s.source + offset, s.merge + offset, s.conv) for s in skips
    ]
    layers += body
    layers += [AvgPool(window=0), Flatten(), FC(width, dataset.classes)]
    return NetworkArch("resnet32", dataset, tuple(layers), tuple(skips))


def _resnet18(dataset: DatasetSpec) -> NetworkArch:
    layers: list = [Conv(dataset.channels, 64, kernel=3, stride=1, padding=1), ReLU()]
    body, skips, width = _residual_stages((64, 128, 256, 512), 2, 64, project=True)
    offset = len(layers)
    skips = [
        SkipConnection(s.source + offset, s.merge + offset, s.conv) for s in skips
    ]
    layers += body
    layers += [AvgPool(window=0), Flatten(), FC(width, dataset.classes)]
    return NetworkArch("resnet18", dataset, tuple(layers), tuple(skips))


_VGG_CFG = (64, 64, "P", 128, 128, "P", 256, 256, 256, "P", 512, 512, 512, "P", 512, 512, 512, "P")


def _vgg16(dataset: DatasetSpec) -> NetworkArch:
    layers: list = []
    inc = dataset.channels
    spatial = dataset.height
    for v in _VGG_CFG:
        if v == "P":
            layers.append(AvgPool(window=2, stride=2))
            spatial //= 2
        else:
            layers.append(Conv(inc, v, kernel=3, stride=1, padding=1, bias=True))
            layers.append(ReLU())
            inc = v
    flat = 512 * spatial * spatial
    layers += [
        Flatten(),
        FC(flat, 4096),
        ReLU(),
        FC(4096, 4096),
        ReLU(),
        FC(4096, dataset.classes),
    ]
    return NetworkArch("vgg16", dataset, tuple(layers), ())


def _toy_cnn(dataset: DatasetSpec) -> NetworkArch:
    layers = (
        Conv(dataset.channels, 2, kernel=3, stride=1, padding=1),
        ReLU(),
        Flatten(),
        FC(2 * dataset.height * dataset.width, dataset.classes),
    )
    return NetworkArch("toy_cnn", dataset, layers, ())


_BUILDERS = {
    "resnet32": _resnet32,
    "resnet18": _resnet18,
    "vgg16": _vgg16,
    "toy_cnn": _toy_cnn,
}

MODELS = tuple(sorted(_BUILDERS))


def build_preset(model: str, dataset: DatasetSpec | str | None = None) -> NetworkArch:
    """Construct a preset architecture at the given dataset's geometry."""
    key = model.lower()
    if key not in _BUILDERS:
        raise UnknownPreset(f"unknown model {key!r}; known: {sorted(_BUILDERS)}")
    if dataset is None:
        ds = TOY8 if key == "toy_cnn" else CIFAR100
    elif isinstance(dataset, str):
        ds = get_dataset(dataset)
    else:
        ds = dataset
    return _BUILDERS[key](ds)


def scale_to_input(arch: NetworkArch, dataset: DatasetSpec | str) -> NetworkArch:
    """Re-derive an architecture at a new input geometry.

    Channel widths are preserved. The first FC after each Flatten is
    resized to the new flattened width and the final FC's output is set
    to the new class count. Raises IncompatibleResolution if the layer
    list cannot be shape-inferred at the new size.
    """
    from .shapes import IncompatibleResolution, validate

    ds = get_dataset(dataset) if isinstance(dataset, str) else dataset
    if ds.channels != arch.dataset.channels:
        raise IncompatibleResolution(
            f"dataset {ds.name} has {ds.channels} channels, "
            f"architecture expects {arch.dataset.channels}"
        )
    last_fc = max(
        (i for i, layer in enumerate(arch.layers) if layer.kind == "fc"),
        default=None,
    )
    shape = (ds.channels, ds.height, ds.width)
    new_layers: list = []
    after_flatten = False
    for i, layer in enumerate(arch.layers):
        if layer.kind == "conv":
            oh = (shape[1] + 2 * layer.padding - layer.kernel) // layer.stride + 1
            ow = (shape[2] + 2 * layer.padding - layer.kernel) // layer.stride + 1
            shape = (layer.out_channels, oh, ow)
        elif layer.kind == "avgpool":
            window = shape[1] if layer.is_global else layer.window
            stride = window if layer.is_global else (layer.stride or layer.window)
            if window > shape[1] or window > shape[2]:
                raise IncompatibleResolution(
                    f"layer {i}: pool window {window} exceeds {shape[1]}x{shape[2]}"
                )
            shape = (
                shape[0],
                (shape[1] - window) // stride + 1,
                (shape[2] - window) // stride + 1,
            )
        elif layer.kind == "flatten":
            shape = (shape[0] * shape[1] * shape[2],)
            after_flatten = True
        elif layer.kind == "fc":
            in_features = shape[0] if after_flatten else layer.in_features
            out_features = ds.classes if i == last_fc else layer.out_features
            layer = FC(in_features, out_features, bias=layer.bias)
            shape = (out_features,)
            after_flatten = False
        new_layers.append(layer)
    scaled = NetworkArch(arch.name, ds, tuple(new_layers), arch.skips)
    validate(scaled)
    return scaled
