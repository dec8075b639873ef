"""Rendering: frame composites to PNG and report figures to files."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from PIL import Image

from flowlenia.embedding import parameter_colors
from flowlenia.frames import FrameMessage

# default per-channel tints for composite views (RGB rows)
CHANNEL_TINTS = np.array([
    [0.1, 0.9, 0.6],
    [0.9, 0.3, 0.2],
    [0.3, 0.4, 1.0],
    [0.9, 0.8, 0.1],
])


def composite_rgb(A: np.ndarray, saturation: float | None = None) -> np.ndarray:
    """Map (C, H, W) matter to an RGB image (3, H, W) in [0, 1].

    Values are scaled by ``saturation`` (default: the 99th percentile, so a
    few saturated cells don't wash out the view).
    """
    c = A.shape[0]
    if saturation is None:
        peak = float(np.percentile(A, 99.0)) if A.size else 1.0
        saturation = peak if peak > 0 else 1.0
    scaled = np.clip(A / saturation, 0.0, 1.0)
    tints = CHANNEL_TINTS[np.arange(c) % len(CHANNEL_TINTS)]
    return np.clip(np.einsum("cd,chw->dhw", tints, scaled), 0.0, 1.0)


def species_rgb(A: np.ndarray, P: np.ndarray, seed: int = 0) -> np.ndarray:
    """Color by parameter vector, masked by matter presence."""
    colors = parameter_colors(P, seed=seed)
    a_sum = A.sum(axis=0)
    peak = float(np.percentile(a_sum, 99.0))
    mask = np.clip(a_sum / (peak if peak > 0 else 1.0), 0.0, 1.0)
    return colors * mask


def frame_to_png(frame: FrameMessage, out_path) -> Path:
    """Render one frame (raw or rgb encoded) to an 8-bit PNG."""
    if frame.encoding == 0:
        rgb = composite_rgb(frame.to_array())
        img = (rgb * 255).astype(np.uint8).transpose(1, 2, 0)
    else:
        img = np.frombuffer(frame.payload, dtype=np.uint8).reshape(
            frame.height, frame.width, 3)
    out_path = Path(out_path)
    Image.fromarray(img, mode="RGB").save(out_path)
    return out_path


def array_to_png(A: np.ndarray, out_path) -> Path:
    img = (composite_rgb(A) * 255).astype(np.uint8).transpose(1, 2, 0)
    out_path = Path(out_path)
    Image.fromarray(img, mode="RGB").save(out_path)
    return out_path


def search_figures(records, out_dir) -> list[Path]:
    """Summary figures for a random-search report."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ok = [r for r in records if r.stats is not None]
    paths = []
    fig, axes = plt.subplots(1, 3, figsize=(13, 4))
    speeds = [r.stats.mean_speed for r in ok]
    occupancy = [r.stats.occupancy_fraction for r in ok]
    localized = [r.stats.localized for r in ok]
    axes[0].hist(speeds, bins=30, color="#2a9d8f")
    axes[0].set_xlabel("mean speed (cells/step)")
    axes[0].set_ylabel("samples")
    axes[1].hist(occupancy, bins=30, color="#e76f51")
    axes[1].set_xlabel("bounding-box area fraction")
    rate = float(np.mean(localized)) if localized else 0.0
    axes[2].bar(["localized", "other"],
                [sum(localized), len(localized) - sum(localized)],
                color=["#264653", "#bbbbbb"])
    axes[2].set_title(f"localized rate: {rate:.2f}")
    fig.tight_layout()
    path = out_dir / "search_summary.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    paths.append(path)
    return paths


def evolve_figure(history, out_dir) -> Path:
    """Best/mean fitness curves across generations."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    gens = [row["generation"] for row in history]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(gens, [row["best_ever"] for row in history], label="best ever")
    ax.plot(gens, [row["best_fitness"] for row in history],
            label="generation best", alpha=0.6)
    ax.plot(gens, [row["mean_fitness"] for row in history],
            label="generation mean", alpha=0.6)
    ax.set_xlabel("generation")
    ax.set_ylabel("fitness")
    ax.legend()
    fig.tight_layout()
    path = out_dir / "fitness_curves.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
