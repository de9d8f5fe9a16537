"""Draw the coherence trajectories and the bifurcation diagram from CLI output.

    decolab fig1 --output-dir out && decolab fig2 --output-dir out
    python3 scripts/plot_figures.py out

Needs matplotlib (``pip install .[plot]``).
"""
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from decolab.io import read_csv  # noqa: E402


def fig1(folder):
    fig, axes = plt.subplots(1, 2, figsize=(10, 4), sharey=True)
    for ax, panel in zip(axes, ("pre", "post")):
        for k in (1, 2):
            _, meta, cols = read_csv(os.path.join(folder, f"fig1_{panel}_phi{k}.csv"))
            ax.plot(cols["t"], cols["re_rho12"], label=f"Re rho12, phi0 = {float(meta['phi0_panel']):.3f}")
            ax.plot(cols["t"], cols["abs_rho12"], "--", lw=0.8)
        ax.set_title(f"a(Delta) = {float(meta['a_delta_panel']):g} Delta ({meta['regime']})")
        ax.set_xlabel("t Delta")
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(os.path.join(folder, "fig1.png"), dpi=150)


def fig2(folder):
    _, meta, cols = read_csv(os.path.join(folder, "fig2.csv"))
    fig, ax = plt.subplots(figsize=(6, 4))
    a = cols["a_delta"]
    ax.plot(a, cols["re_lambda_plus"], label="Re Lambda+")
    ax.plot(a, cols["re_lambda_minus"], label="Re Lambda-")
    ax.plot(a, cols["gamma1"] / 2, ":", label="Gamma1 / 2")
    ax.axvline(float(meta["a_thr_over_delta"]), color="grey", lw=0.8)
    ax.set_xlabel("a(Delta) / Delta")
    ax.set_ylabel("rate / Delta")
    ax.legend()
    fig.tight_layout()
    fig.savefig(os.path.join(folder, "fig2.png"), dpi=150)


if __name__ == "__main__":
    folder = sys.argv[1] if len(sys.argv) > 1 else "."
    fig1(folder)
    fig2(folder)
