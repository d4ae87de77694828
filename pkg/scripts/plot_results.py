"""Plot CSV output of the CLI or of the scripts in this directory.

Recognizes summary.csv (``weaknoise simulate``), sweep.csv (``weaknoise
sweep``), exponent_vs_n.csv and threshold_sweep.csv by their header.
Needs matplotlib (``pip install .[plot]``).
"""
import argparse
import csv

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def read(path):
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    cols = {k: [float(r[k]) if r[k] not in ("", "nan") else float("nan") for r in rows] for k in rows[0]}
    return cols


def plot(path, out):
    c = read(path)
    fig, ax = plt.subplots(figsize=(5, 3.5))
    if "gamma" in c:
        cost = c.get("mse", c["sup_cost"])
        ax.semilogy(c["gamma"], cost, "o-", label="mse" if "mse" in c else "sup cost")
        ax.set_xlabel("SNR (linear)")
        ax2 = ax.twinx()
        ax2.plot(c["gamma"], c.get("outage", c["delta_n"]), "s--", color="tab:red", label="outage")
        ax2.set_ylabel("outage rate")
        ax.set_ylabel("non-outage cost")
    else:
        ax.semilogy(c["n"], c["sup_cost"], "o-", label="sup cost")
        ax.set_xlabel("block length n")
        ax.set_ylabel("weak-noise cost")
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    print(f"wrote {out}")


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("csv")
    p.add_argument("--out", help="image path (default: CSV name with .png)")
    args = p.parse_args()
    plot(args.csv, args.out or args.csv.rsplit(".", 1)[0] + ".png")


if __name__ == "__main__":
    main()
