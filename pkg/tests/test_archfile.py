"""Text round-tripping for architecture description files."""

import pytest

from pisim.netarch import (
    MODELS,
    ParseError,
    build_preset,
    count,
    load,
    parse,
    save,
    serialize,
    validate,
)

SHIPPED = sorted(MODELS)


@pytest.mark.parametrize("model", SHIPPED)
def test_roundtrip_presets(model):
    arch = build_preset(model, "cifar100")
    again = parse(serialize(arch), name_hint=arch.name)
    validate(again)
    assert again.layers == arch.layers
    assert again.skips == arch.skips
    assert count(again) == count(arch)


def test_save_load(tmp_path):
    arch = build_preset("toy_cnn", "cifar100")
    p = tmp_path / "toy.arch"
    save(arch, p)
    back = load(p)
    assert back.layers == arch.layers
    assert back.dataset == arch.dataset


def test_parse_minimal():
    arch = parse(
        """
        name tiny
        input channels=3 height=8 width=8 classes=4
        conv in=3 out=4 kernel=3 stride=1 pad=1
        relu
        avgpool global
        flatten
        fc in=4 out=4
        """
    )
    validate(arch)
    assert len(arch.layers) == 5


@pytest.mark.parametrize(
    "text",
    [
        "input channels=3 height=8 width=8 classes=4\nconv in=3",
        "conv in=3 out=4 kernel=3",
        "input channels=3 height=8 width=8 classes=4\nwibble",
        "input channels=3 height=8 width=8 classes=4\nconv in=3 out=4 kernel=3 frobnicate=1",
        "input channels=3 height=8 width=8 classes=4\nskip from=0 to=5",
    ],
    ids=["missing-keys", "no-input", "unknown-directive", "unknown-key", "skip-oob"],
)
def test_parse_errors(text):
    with pytest.raises(ParseError):
        parse(text)


def test_load_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load(tmp_path / "nope.arch")
