#!/usr/bin/env python3
"""Turn scenario CSVs into PNGs. Usage: plot_figures.py <output_root> [<png_dir>]"""
import csv
import pathlib
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def read(path):
    with open(path) as f:
        rows = [r for r in csv.reader(line for line in f if not line.startswith("#"))]
    header, body = rows[0], rows[1:]
    cols = {h: [] for h in header}
    for r in body:
        for h, v in zip(header, r):
            try:
                cols[h].append(float(v))
            except ValueError:
                cols[h].append(v)
    return cols


def plot_lines(cols, x, ys, title, out, logy=False):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for y in ys:
        if y in cols:
            ax.plot(cols[x], cols[y], label=y)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(x)
    ax.set_title(title, fontsize=9)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    plt.close(fig)


def main():
    root = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else "out")
    dest = pathlib.Path(sys.argv[2] if len(sys.argv) > 2 else root / "png")
    dest.mkdir(parents=True, exist_ok=True)
    for path in sorted(root.glob("*/*.csv")):
        name = f"{path.parent.name}_{path.stem}.png"
        cols = read(path)
        stem = path.stem
        if stem.startswith("ladder_"):
            ys = ["exact_error", "integral_bound", "entanglement_bound", "split_bound", "frobenius_bound",
                  "spectral_bound"]
            plot_lines(cols, "t", ys, str(path), dest / name, logy=True)
        elif stem.startswith("segment_"):
            ys = [c for c in cols if c.startswith("segment_") or c == "one_segment_error"]
            plot_lines(cols, "t", ys, str(path), dest / name, logy=True)
            ent = [c for c in cols if c.startswith("S_")]
            plot_lines(cols, "t", ent, str(path), dest / name.replace(".png", "_entropy.png"))
        elif stem.startswith("sweep_"):
            fig, ax = plt.subplots(figsize=(5, 3.5))
            ax.scatter(cols["entropy_bits"], cols["error"], c=cols["temperature"], s=12)
            ax.set_xlabel("entropy (bits)")
            ax.set_ylabel("error")
            ax.set_title(str(path), fontsize=9)
            fig.tight_layout()
            fig.savefig(dest / name, dpi=120)
            plt.close(fig)
        elif stem.startswith("histogram_"):
            fig, ax = plt.subplots(figsize=(5, 3.5))
            ax.bar(cols["bin_center"], cols["count"], width=cols["bin_high"][0] - cols["bin_low"][0])
            ax.set_title(str(path), fontsize=9)
            fig.tight_layout()
            fig.savefig(dest / name, dpi=120)
            plt.close(fig)
        elif stem.startswith("ensemble_"):
            plot_lines(cols, "t", ["trace_distance", "bound", "disorder_part", "imperfection_part"], str(path),
                       dest / name)
        elif stem.startswith("distance_"):
            plot_lines(cols, "t", [c for c in cols if c.startswith("r_")], str(path), dest / name)
    print(f"wrote {dest}")


if __name__ == "__main__":
    main()
