"""Render a gwboot CSV document (sharpness, ratio or verify) as a PNG."""

import argparse
import io
import json

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd


def read_document(path):
    meta = {}
    body = []
    with open(path) as f:
        for line in f:
            if line.startswith("# "):
                key, value = line[2:].split(": ", 1)
                meta[key] = json.loads(value)
            else:
                body.append(line)
    return meta, pd.read_csv(io.StringIO("".join(body)))


def plot_sharpness(meta, df, ax):
    ax.semilogy(df["b"], df["p_c"], "o-", label="p_c")
    ax.semilogy(df["b"], df["bound"], "s--", label="lower bound")
    fit = meta.get("fit", {})
    ax.set_title(f"r = {meta['manifest']['inputs']['r']}, slope of ln p_c = {fit.get('slope_ln_pc', float('nan')):.3f}")
    ax.set_xlabel("mean b")


def plot_ratio(meta, df, ax):
    ax.semilogx(df["b"], df["ratio"], "o-", base=2)
    ax.axhline(1.0, color="grey", lw=0.8)
    ax.set_title(f"r = {meta['manifest']['inputs']['r']}")
    ax.set_xlabel("b")
    ax.set_ylabel("p_c / asymptotic form")


def plot_verify(meta, df, ax):
    for alpha, group in df.groupby("alpha"):
        ax.loglog(group["p_c"], group["bound"], "o", label=f"alpha = {alpha:g}")
    lo = min(df["bound"].min(), df["p_c"].min())
    ax.loglog([lo, 1], [lo, 1], color="grey", lw=0.8)
    ax.set_xlabel("p_c")
    ax.set_ylabel("bound")


PLOTTERS = {"sharpness": plot_sharpness, "ratio": plot_ratio, "verify": plot_verify}


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("input")
    parser.add_argument("output")
    args = parser.parse_args()
    meta, df = read_document(args.input)
    command = meta["manifest"]["command"]
    if command not in PLOTTERS:
        raise SystemExit(f"no plot for command {command!r}")
    fig, ax = plt.subplots(figsize=(6, 4))
    PLOTTERS[command](meta, df, ax)
    if ax.get_legend_handles_labels()[0]:
        ax.legend()
    fig.tight_layout()
    fig.savefig(args.output, dpi=150)


if __name__ == "__main__":
    main()
