"""Regenerate the packaged config files under src/pisim/configs/.

Latency numbers are the measured testbed values; comm and storage
columns are filled in from the structural byte model so the shipped
table is self-consistent with the calibration code.
"""

from __future__ import annotations

import io
from pathlib import Path

from pisim.costmodel import (
    CommInputs,
    MeasuredCosts,
    Protocol,
    offline_comm,
    online_comm,
    storage_deltas,
    write_measured_costs,
)
from pisim.netarch import build_preset, serialize

CONFIG_DIR = Path(__file__).resolve().parents[1] / "src" / "pisim" / "configs"

BANDWIDTH = 1e8

# (protocol, model, dataset) -> (offline s, online s), measured on the
# reference testbed at 100 MB/s.
LATENCIES = {
    ("sg", "resnet32", "c100"): (115.2, 9.4),
    ("sg", "vgg16", "c100"): (295.6, 9.4),
    ("sg", "resnet18", "c100"): (420.8, 17.2),
    ("sg", "resnet32", "tiny"): (401.9, 39.6),
    ("sg", "vgg16", "tiny"): (814.7, 34.2),
    ("sg", "resnet18", "tiny"): (1594.0, 68.5),
    ("cg", "resnet32", "c100"): (109.1, 11.9),
    ("cg", "vgg16", "c100"): (289.9, 11.6),
    ("cg", "resnet18", "c100"): (409.6, 21.8),
    ("cg", "resnet32", "tiny"): (377.4, 49.6),
    ("cg", "vgg16", "tiny"): (792.2, 43.4),
    ("cg", "resnet18", "tiny"): (1549.1, 86.9),
}

# name -> (relu, flop, gc_per_relu, he_per_flop, notes)
OPTIMIZATIONS = {
    "delphi": (0.5, 1.0, 1.0, 1.0, "relu pruning via nas"),
    "cryptonas": (0.25, 2.0, 1.0, 1.0, "relu budget search, heavier linear layers"),
    "safenet": (0.25, 1.0, 1.0, 1.0, "channelwise relu pruning"),
    "circa": (1.0, 1.0, 0.5, 1.0, "cheaper stochastic relu gadget"),
    "deepreduce": (0.2, 0.5, 1.0, 1.0, "relu and flop co-pruning"),
    "deepreduce_circa": (0.2, 0.5, 0.5, 1.0, "pruning stacked on cheaper gadget"),
    "falcon": (0.05, 0.5, 1.0, 0.5, "aggressive pruning, packed he"),
}


def make_costs() -> str:
    rows = []
    for (prot, model, dataset), (off, on) in LATENCIES.items():
        protocol = Protocol.parse(prot)
        sizes = CommInputs.from_arch(build_preset(model, dataset))
        deltas = storage_deltas(protocol, sizes)
        rows.append(
            MeasuredCosts(
                protocol=protocol,
                model=model,
                dataset=dataset,
                offline_latency_s=off,
                online_latency_s=on,
                client_storage_bytes=deltas.client_bytes,
                server_storage_bytes=deltas.server_bytes,
                bandwidth_bytes_per_s=BANDWIDTH,
                offline_comm_bytes=offline_comm(protocol, sizes).total_bytes,
                online_comm_bytes=online_comm(protocol, sizes).total_bytes,
            )
        )
    buf = io.StringIO()
    write_measured_costs(buf, rows)
    return buf.getvalue()


def make_optimizations() -> str:
    lines = ["name\trelu_factor\tflop_factor\tgc_per_relu_factor\the_per_flop_factor\tnotes"]
    for name, (rf, ff, gf, hf, notes) in OPTIMIZATIONS.items():
        lines.append(f"{name}\t{rf:g}\t{ff:g}\t{gf:g}\t{hf:g}\t{notes}")
    return "\n".join(lines) + "\n"


def main() -> None:
    CONFIG_DIR.mkdir(parents=True, exist_ok=True)
    (CONFIG_DIR / "measured_costs.tsv").write_text(make_costs())
    (CONFIG_DIR / "optimizations.tsv").write_text(make_optimizations())
    arch_dir = CONFIG_DIR / "archs"
    arch_dir.mkdir(exist_ok=True)
    for model, dataset in [
        ("resnet32", "c100"),
        ("vgg16", "c100"),
        ("resnet18", "c100"),
        ("toy_cnn", "toy8"),
    ]:
        arch = build_preset(model, dataset)
        (arch_dir / f"{model}.arch").write_text(serialize(arch))
    print(f"wrote configs under {CONFIG_DIR}")


if __name__ == "__main__":
    main()
