#!/usr/bin/env python
"""
Plot a result file written by ``slice-planner sweep`` or ``slice-planner compare``.

The left panel shows the total cost per service against the swept value (with the
oracle cost dashed when present); the right panel shows, per point, the share of
carried traffic entering each tier. Needs the ``plot`` extra (matplotlib).
"""

import argparse
import csv
import sys
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

plt.rcParams.update(
    {"font.size": 12, "lines.linewidth": 2, "lines.markersize": 6, "pdf.fonttype": 42}
)
MARKERS = ["o", "^", "s", "d", "v", "P", "X", "*"]


def _number(cell):
    return float(cell) if cell else None


def _pairs(cell):
    shares = {}
    for item in filter(None, cell.split(";")):
        tier, value = item.rsplit(":", 1)
        shares[tier] = float(value)
    return shares


def read_rows(path):
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


def plot(rows, out):
    by_service = defaultdict(list)
    for row in rows:
        by_service[row["service"]].append(row)
    axis = rows[0]["axis"] or "point"

    fig, (cost_ax, tier_ax) = plt.subplots(1, 2, figsize=(12, 4.5))
    for i, (service, items) in enumerate(sorted(by_service.items())):
        x = [_number(r["value"]) for r in items]
        marker = MARKERS[i % len(MARKERS)]
        cost_ax.plot(x, [_number(r["total_cost"]) for r in items], marker=marker, label=service)
        if any(r["oracle_cost"] for r in items):
            cost_ax.plot(
                x, [_number(r["oracle_cost"]) for r in items], linestyle="--", marker=marker,
                label=f"{service} (optimum)",
            )
    cost_ax.set_xlabel(axis)
    cost_ax.set_ylabel("total cost")
    cost_ax.grid(linestyle="--")
    cost_ax.legend()

    values = sorted({_number(r["value"]) for r in rows if r["value"]})
    shares = defaultdict(lambda: [0.0] * len(values))
    for row in rows:
        if not row["value"] or not row["tier_traffic"]:
            continue
        index = values.index(_number(row["value"]))
        for tier, share in _pairs(row["tier_traffic"]).items():
            shares[tier][index] += share / len(by_service)
    bottom = [0.0] * len(values)
    positions = range(len(values))
    for tier in sorted(shares):
        tier_ax.bar(positions, shares[tier], bottom=bottom, label=tier)
        bottom = [b + s for b, s in zip(bottom, shares[tier])]
    tier_ax.set_xticks(list(positions), [format(v, "g") for v in values])
    tier_ax.set_xlabel(axis)
    tier_ax.set_ylabel("share of carried traffic")
    tier_ax.legend(fontsize=9)

    fig.tight_layout()
    fig.savefig(out, bbox_inches="tight", pad_inches=0.04)
    print(f"Wrote {out}")


def main():
    parser = argparse.ArgumentParser(description="Plot slice planner sweep results.")
    parser.add_argument("results", help="CSV written by the sweep or compare command")
    parser.add_argument("--out", default="results.pdf", help="Figure path (default: results.pdf)")
    args = parser.parse_args()

    rows = read_rows(args.results)
    if not rows:
        print(f"No rows in {args.results}", file=sys.stderr)
        return 1
    plot(rows, args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
