#!/usr/bin/env python3
"""Render exported attention-trace matrices as heatmap panels.

Reads `trace_<setting>_<seed>_<period>_L<layer>_H<head>` files from a
run's traces/ directory and writes one PNG per (layer, head) with the
four training periods side by side. Requires matplotlib.
"""

import argparse
import sys
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

PERIOD_ORDER = ("initial", "early-mid", "late-mid", "end")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("trace_dir", help="a run's traces/ directory")
    parser.add_argument("--out", default=None, help="output directory (default: trace_dir)")
    args = parser.parse_args()

    trace_dir = Path(args.trace_dir)
    out_dir = Path(args.out) if args.out else trace_dir
    out_dir.mkdir(parents=True, exist_ok=True)

    panels = defaultdict(dict)  # (setting, seed, layer, head) -> period -> matrix
    for path in sorted(trace_dir.glob("trace_*")):
        _, setting, seed, period, layer, head = path.name.split("_")
        panels[(setting, seed, layer, head)][period] = np.loadtxt(path)
    if not panels:
        print(f"no trace files under {trace_dir}", file=sys.stderr)
        return 1

    for (setting, seed, layer, head), by_period in panels.items():
        fig, axes = plt.subplots(1, 4, figsize=(16, 4.2))
        for ax, period in zip(axes, PERIOD_ORDER):
            mat = by_period[period]
            im = ax.imshow(mat, cmap="viridis", aspect="auto", origin="upper")
            ax.set_title(period)
            ax.set_xlabel("key position")
            ax.set_ylabel("query position")
        fig.suptitle(f"{setting} seed {seed} {layer} {head}")
        fig.colorbar(im, ax=axes, shrink=0.85)
        name = f"attention_{setting}_{seed}_{layer}_{head}.png"
        fig.savefig(out_dir / name, dpi=110)
        plt.close(fig)
        print(f"wrote {out_dir / name}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
