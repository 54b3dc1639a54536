"""Matplotlib figure writers used by the CLI report paths.

Imported lazily by the CLI so that plot-free invocations never pay the
matplotlib import cost.  All figures render through the Agg backend straight
to files.
"""
from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np

from .model import CameraSpec, RadialModel, radial_forward
from .zeroshot import objective_J_stable


def save_model_curves(path: str | Path, omega: float, r_max: float, n: int = 1000) -> None:
    """Plot r_d(r_u) for every radial law at a fixed omega."""
    r_u = np.linspace(0.0, r_max, n)
    fig, ax = plt.subplots(figsize=(7.0, 5.0))
    for model in RadialModel:
        r_d = radial_forward(model, omega, r_u)
        style = "--" if model is RadialModel.PERSPECTIVE else "-"
        ax.plot(r_u, r_d, style, label=model.value)
    ax.set_xlabel("undistorted radius $r_u$ [px]")
    ax.set_ylabel("distorted radius $r_d$ [px]")
    ax.set_title(f"radial projection laws, $\\omega$ = {omega:g}")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_residual_curve(
    path: str | Path, spec: CameraSpec, omega_star: float | None = None
) -> None:
    """Plot |J_stable| over the omega domain, optionally marking the root."""
    hi = math.pi / spec.width
    omegas = np.linspace(hi * 1e-4, hi * 0.999, 800)
    values = [abs(objective_J_stable(w, spec)) for w in omegas]
    fig, ax = plt.subplots(figsize=(7.0, 5.0))
    ax.semilogy(omegas, values)
    if omega_star is not None and omega_star > 0.0:
        ax.axvline(omega_star, color="tab:red", linestyle="--",
                   label=f"$\\omega^*$ = {omega_star:.6g}")
        ax.legend()
    ax.set_xlabel("$\\omega$ [1/px]")
    ax.set_ylabel("|FOV-consistency residual|")
    ax.set_title(spec.name)
    ax.grid(True, alpha=0.3)
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_per_image_rms(
    path: str | Path, names: tuple[str, ...], values, title: str = "per-image RMS"
) -> None:
    """Bar chart of per-image RMS reprojection errors."""
    values = np.asarray(values, dtype=float)
    fig, ax = plt.subplots(figsize=(max(6.0, 0.35 * len(names)), 4.5))
    ax.bar(range(len(names)), values, color="tab:blue")
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=60, ha="right", fontsize=7)
    ax.set_ylabel("RMS reprojection error [px]")
    ax.set_title(title)
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_sweep(path: str | Path, gen, fit, title: str = "single-shot sweep") -> None:
    """Per-fold generalization vs fitting error for a single-shot sweep."""
    gen = np.asarray(gen, dtype=float)
    fit = np.asarray(fit, dtype=float)
    idx = np.arange(len(gen))
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    width = 0.4
    ax.bar(idx - width / 2, gen, width, label="generalization")
    ax.bar(idx + width / 2, fit, width, label="fitting")
    ax.set_xlabel("calibration image index")
    ax.set_ylabel("RMS reprojection error [px]")
    ax.set_title(title)
    ax.legend()
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
