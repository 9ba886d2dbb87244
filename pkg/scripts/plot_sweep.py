#!/usr/bin/env python3
"""Plot mean latency against arrival rate from a sweep CSV.

One curve per (protocol, client capacity) pair, 95% error bars,
log-log axes. Requires matplotlib, which is intentionally not a
package dependency; install it separately to use this script.
"""

from __future__ import annotations

import argparse
import csv
import math
from collections import defaultdict


def _cap_label(raw: str) -> str:
    value = float(raw)
    if math.isinf(value):
        return "unbounded"
    return f"{value / 1e9:g} GB"


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("csv_path", help="output of `pisim sweep`")
    parser.add_argument("--out", default=None, help="PNG path (default: <csv>.png)")
    parser.add_argument("--title", default=None)
    args = parser.parse_args()

    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        raise SystemExit("matplotlib is required: pip install matplotlib")

    groups: dict[tuple[str, str], list[dict]] = defaultdict(list)
    with open(args.csv_path, newline="") as fh:
        for row in csv.DictReader(fh):
            if row["feasible"] != "true":
                continue
            groups[(row["protocol"], row["client_capacity_bytes"])].append(row)

    if not groups:
        raise SystemExit("no feasible rows to plot")

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for (protocol, cap), rows in sorted(groups.items()):
        rows.sort(key=lambda r: float(r["arrival_rate"]))
        x = [float(r["arrival_rate"]) for r in rows]
        y = [float(r["mean_latency_s"]) for r in rows]
        err = [float(r["ci95_latency_s"]) for r in rows]
        style = "-o" if protocol == "cg" else "--s"
        ax.errorbar(x, y, yerr=err, fmt=style, capsize=3,
                    label=f"{protocol} @ {_cap_label(cap)}")
        sat = [float(r["arrival_rate"]) for r in rows if r["saturated"] == "true"]
        if sat:
            ax.axvline(min(sat), color="gray", alpha=0.3, linestyle=":")

    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("arrival rate (req/s)")
    ax.set_ylabel("mean latency (s)")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    if args.title:
        ax.set_title(args.title)
    out = args.out or args.csv_path.rsplit(".", 1)[0] + ".png"
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
