#!/usr/bin/env python3
"""Plot a gpq run from its manifest.

    python3 scripts/plot.py out/bell_7.manifest.json [-o bell.png]

Needs matplotlib. Reads only the CSV named in the manifest.
"""
import argparse
import csv
import json
import math
import pathlib
import sys


def rows(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def col(rs, key):
    return [float(r[key]) for r in rs]


def classical(ax, rs):
    x = col(rs, "theta_h_deg")
    for key in ("p_h", "p_v", "p_d", "p_a"):
        ax.plot(x, col(rs, key), label=key[2:].upper())
    ax.set_xlabel("stack HWP angle (deg)")
    ax.set_ylabel("relative power")
    ax.legend()


def fringe(ax, rs):
    x = col(rs, "idler_hwp_deg")
    ax.plot(x, col(rs, "coincidences"), "o", ms=3, label="counts")
    ax.plot(x, col(rs, "expected_coincidences"), "-", label="expected")
    ax.set_xlabel("idler HWP angle (deg)")
    ax.set_ylabel("coincidences")
    ax.legend()


def bell(ax, rs):
    x = col(rs, "theta_h_deg")
    ax.errorbar(x, col(rs, "s"), yerr=col(rs, "sigma_s"), fmt="o", ms=3, label="S")
    ax.plot(x, [math.sqrt(2) * (1 + abs(math.cos(math.radians(4 * t)))) for t in x], label="ideal")
    ax.axhline(2, color="grey", lw=0.8, ls="--")
    ax.set_xlabel("stack HWP angle (deg)")
    ax.set_ylabel("CHSH S")
    ax.legend()


def tomo(ax, rs):
    seen = {}
    for r in rs:
        if r["theta_h_deg"] and r["part"] == "re" and r["row"] == "HH":
            seen[float(r["theta_h_deg"])] = (float(r["fidelity"]), float(r["entropy"]))
    x = sorted(seen)
    ax.plot(x, [seen[t][0] for t in x], "o-", label="fidelity to target")
    ax.plot(x, [seen[t][1] for t in x], "s-", label="entropy (bits)")
    ax.set_xlabel("stack HWP angle (deg)")
    ax.set_ylim(-0.05, 1.05)
    ax.legend()


PLOTTERS = {"classical": classical, "fringe": fringe, "bell": bell, "tomo": tomo}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("manifest")
    ap.add_argument("-o", "--output")
    args = ap.parse_args()

    manifest_path = pathlib.Path(args.manifest)
    manifest = json.loads(manifest_path.read_text())
    csvs = [o for o in manifest["outputs"] if o.endswith(".csv")]
    if not csvs:
        sys.exit("manifest lists no CSV output")
    name = csvs[0].rsplit("_", 1)[0]
    if name not in PLOTTERS:
        sys.exit(f"nothing to plot for {name}")

    import matplotlib

    if args.output:
        matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    PLOTTERS[name](ax, rows(manifest_path.parent / csvs[0]))
    ax.set_title(f"{name}, seed {manifest['seed']}")
    fig.tight_layout()
    if args.output:
        fig.savefig(args.output, dpi=150)
    else:
        plt.show()


if __name__ == "__main__":
    main()
