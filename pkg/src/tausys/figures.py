"""Matplotlib rendering for the CLI report paths.

Each helper takes plain arrays, writes one PNG next to the delimited
output, and returns the path.  The Agg backend keeps this headless.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

DPI = 150


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def soliton_field(x, t, u, path):
    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(9, 3.4))
    im = ax0.imshow(u, aspect="auto", origin="lower",
                    extent=[x[0], x[-1], t[0], t[-1]], cmap="viridis")
    fig.colorbar(im, ax=ax0, label="u")
    ax0.set_xlabel("x")
    ax0.set_ylabel("t3")
    ax0.set_title("potential u(x, t)")
    for i in np.linspace(0, len(t) - 1, min(5, len(t))).astype(int):
        ax1.plot(x, u[i], label=f"t={t[i]:.3g}")
    ax1.set_xlabel("x")
    ax1.set_ylabel("u")
    ax1.legend(fontsize=7)
    ax1.set_title("profiles")
    return _finish(fig, path)


def tracy_widom(xs, f2_det, f2_pain, path):
    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(9, 3.4))
    ax0.plot(xs, f2_det, label="determinant route")
    ax0.plot(xs, f2_pain, "--", label="Painleve route")
    ax0.set_xlabel("x")
    ax0.set_ylabel("F2")
    ax0.legend(fontsize=8)
    ax0.set_title("Tracy-Widom F2")
    ax1.semilogy(xs, np.abs(np.asarray(f2_det) - np.asarray(f2_pain)) + 1e-18)
    ax1.set_xlabel("x")
    ax1.set_ylabel("|route gap|")
    ax1.set_title("two-route agreement")
    return _finish(fig, path)


def theta_comparison(xs, det_vals, prod_vals, path):
    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(9, 3.4))
    ax0.plot(xs, np.real(det_vals), label="det route")
    ax0.plot(xs, np.real(prod_vals), "--", label="product route")
    ax0.set_xlabel("x")
    ax0.set_ylabel("tau")
    ax0.legend(fontsize=8)
    ax0.set_title("periodic tau")
    ax1.semilogy(xs, np.abs(np.asarray(det_vals) - np.asarray(prod_vals)) + 1e-18)
    ax1.set_xlabel("x")
    ax1.set_ylabel("|difference|")
    ax1.set_title("det vs product")
    return _finish(fig, path)


def pole_trajectories(times, traj, path):
    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(9, 3.4))
    for j in range(traj.shape[1]):
        ax0.plot(times, traj[:, j].real, label=f"Re x_{j+1}")
    ax0.set_xlabel("t")
    ax0.set_ylabel("Re x_j")
    ax0.legend(fontsize=7)
    ax0.set_title("pole positions")
    for j in range(traj.shape[1]):
        ax1.plot(traj[:, j].real, traj[:, j].imag, ".-", ms=2)
    ax1.set_xlabel("Re")
    ax1.set_ylabel("Im")
    ax1.set_title("trajectories")
    return _finish(fig, path)


def residual_heatmap(xs, ys, res, path, title="residual"):
    fig, ax = plt.subplots(figsize=(4.8, 3.6))
    im = ax.imshow(np.log10(np.asarray(res) + 1e-18), aspect="auto", origin="lower",
                   extent=[ys[0], ys[-1], xs[0], xs[-1]], cmap="magma")
    fig.colorbar(im, ax=ax, label="log10 residual")
    ax.set_xlabel("y")
    ax.set_ylabel("x")
    ax.set_title(title)
    return _finish(fig, path)


def curve(xs, vals, path, xlabel="x", ylabel="value", title="", logy=False):
    fig, ax = plt.subplots(figsize=(4.8, 3.4))
    if logy:
        ax.semilogy(xs, np.abs(np.asarray(vals)) + 1e-18)
    else:
        ax.plot(xs, vals)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    return _finish(fig, path)
