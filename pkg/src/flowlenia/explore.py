"""Random search over the sampled parameter space and pattern statistics.

The sampler draws every per-kernel parameter independently and uniformly
from SAMPLER_RANGES; the neighborhood radius R is drawn once per rule set.  Trajectory statistics quantify whether a run ended
in a spatially localized pattern (SLP): at the final step, at least 99% of
the mass must fit inside the tightest toroidal bounding box, and that box
must cover at most 25% of the grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from flowlenia.engine import flow_lenia_step, lenia_step
from flowlenia.grids import channel_sum, total_mass
from flowlenia.rules import (CompiledRules, DegenerateKernelError, GrowthSpec,
                             KernelSpec, RuleSet)

#: Uniform sampling ranges of the explored parameter space.  Scalar entries
#: are (low, high); per-kernel vector parameters share one range per element.
SAMPLER_RANGES = {
    "R": (2, 25),        # integer, sampled once per rule set
    "r": (0.2, 1.0),     # per kernel
    "mu": (0.05, 0.5),   # per growth function
    "sigma": (0.001, 0.2),
    "h": (0.0, 1.0),     # per pair
    "a": (0.0, 1.0),     # per ring
    "b": (0.0, 1.0),
    "w": (0.01, 0.5),
}

#: Fixed transport hyperparameters of the explored space.
FLOW_DEFAULTS = {"s": 0.65, "n": 2.0, "dt": 0.2, "theta_A": 2.0}

SLP_MASS_FRACTION = 0.99
SLP_AREA_FRACTION = 0.25
SEARCH_STEPS_DEFAULT = 1000
PATCH_SIDE_DEFAULT = 40


def sample_ruleset(rng: np.random.Generator, C: int, M: list[list[int]],
                   **flow_overrides) -> RuleSet:
    """Uniform independent sample of one rule set for the given wiring."""
    if any(m < 0 for row in M for m in row):
        raise ValueError("M entries must be non-negative")
    n_pairs = sum(sum(row) for row in M)
    if n_pairs == 0:
        raise ValueError("M must wire at least one kernel")
    lo, hi = SAMPLER_RANGES["R"]
    R = int(rng.integers(lo, hi + 1))
    kernels, growths, h = [], [], []
    for src in range(len(M)):
        for tgt in range(len(M[src])):
            for _ in range(M[src][tgt]):
                kernels.append(KernelSpec(
                    r=float(rng.uniform(*SAMPLER_RANGES["r"])),
                    a=tuple(rng.uniform(*SAMPLER_RANGES["a"], size=3)),
                    b=tuple(rng.uniform(*SAMPLER_RANGES["b"], size=3)),
                    w=tuple(rng.uniform(*SAMPLER_RANGES["w"], size=3)),
                    source_channel=src,
                    target_channel=tgt,
                ))
                growths.append(GrowthSpec(
                    mu=float(rng.uniform(*SAMPLER_RANGES["mu"])),
                    sigma=float(rng.uniform(*SAMPLER_RANGES["sigma"])),
                ))
                h.append(float(rng.uniform(*SAMPLER_RANGES["h"])))
    flow = dict(FLOW_DEFAULTS)
    flow.update(flow_overrides)
    return RuleSet(R=R, kernels=kernels, growths=growths, h=h, M=M, **flow)


def init_patch(rng: np.random.Generator, dims: tuple[int, int],
               patch_side: int = PATCH_SIDE_DEFAULT, C: int = 1) -> np.ndarray:
    """Centered patch of i.i.d. uniform [0, 1) matter, zero elsewhere."""
    h, w = dims
    if patch_side > min(h, w):
        raise ValueError(f"patch side {patch_side} exceeds grid {h}x{w}")
    A = np.zeros((C, h, w))
    y0 = (h - patch_side) // 2
    x0 = (w - patch_side) // 2
    A[:, y0:y0 + patch_side, x0:x0 + patch_side] = rng.random(
        (C, patch_side, patch_side))
    return A


def wrap_unit(x):
    """Wrap to the half-open interval [-0.5, 0.5)."""
    return (np.asarray(x) + 0.5) % 1.0 - 0.5


def center_of_mass(A: np.ndarray) -> np.ndarray:
    """Toroidal (circular-mean) center of mass in normalized coordinates.

    Each axis is mapped to an angle; the mass-weighted mean resultant angle
    maps back to a coordinate in [-0.5, 0.5) with the origin at the grid
    center cell ``(H//2, W//2)``.  Zero total mass yields NaN coordinates
    (the distinguished "undefined" result; fitnesses treat it as no travel).
    Accepts ``(..., C, H, W)`` and returns ``(..., 2)``.
    """
    m = channel_sum(A)
    h, w = m.shape[-2:]
    out = np.empty(m.shape[:-2] + (2,))
    for axis, size, pos in ((-2, h, 0), (-1, w, 1)):
        marg = m.sum(axis=(-1 if axis == -2 else -2))
        ang = 2.0 * np.pi * np.arange(size) / size
        z = (marg * np.exp(1j * ang)).sum(axis=-1)
        frac = np.angle(z) / (2.0 * np.pi)  # cell-position fraction in [-0.5, 0.5)
        undefined = np.abs(z) < 1e-300
        frac = np.where(undefined, np.nan, frac)
        out[..., pos] = wrap_unit(frac - (size // 2) / size)
    return out


def toroidal_travel(c0: np.ndarray, c1: np.ndarray) -> np.ndarray:
    """Euclidean distance between normalized toroidal coordinates."""
    d = wrap_unit(np.asarray(c1) - np.asarray(c0))
    return np.hypot(d[..., 0], d[..., 1])


def tightest_box_axis(marginal: np.ndarray, mass_fraction: float) -> int:
    """Length of the shortest circular window holding ``mass_fraction`` of
    the marginal mass."""
    n = len(marginal)
    total = marginal.sum()
    if total <= 0:
        return n
    target = mass_fraction * total
    doubled = np.concatenate([marginal, marginal])
    csum = np.concatenate([[0.0], np.cumsum(doubled)])
    for length in range(1, n + 1):
        windows = csum[length:length + n] - csum[:n]
        if windows.max() >= target:
            return length
    return n


def tightest_box(m: np.ndarray, mass_fraction: float) -> tuple[int, int]:
    """Side lengths (len_y, len_x) of the minimum-area toroidal box that
    contains at least ``mass_fraction`` of the total mass."""
    h, w = m.shape
    target = mass_fraction * m.sum()
    best = (h, w)
    for len_y in range(1, h + 1):
        if len_y * 1 >= best[0] * best[1]:
            break
        # Minimal len_x for this len_y via binary search: box mass is
        # monotone in the window size.
        lo, hi = 1, min(w, (best[0] * best[1] - 1) // len_y)
        if hi < 1 or _best_box_mass(m, len_y, hi) < target:
            continue
        while lo < hi:
            mid = (lo + hi) // 2
            if _best_box_mass(m, len_y, mid) >= target:
                hi = mid
            else:
                lo = mid + 1
        if len_y * lo < best[0] * best[1]:
            best = (len_y, lo)
    return best


def slp_metrics(final: np.ndarray) -> tuple[float, float, bool]:
    """(box area fraction, mass fraction inside, localized flag).

    The box is the minimum-area toroidal rectangle containing at least 99%
    of the mass.  Flag = (box holds >= 99%) and (box covers <= 25% of the
    grid).
    """
    m = channel_sum(final) if final.ndim == 3 else final
    h, w = m.shape
    total = m.sum()
    if total <= 0:
        return 1.0, 0.0, False
    len_y, len_x = tightest_box(m, SLP_MASS_FRACTION)
    area_fraction = (len_y * len_x) / (h * w)
    mass_fraction = _best_box_mass(m, len_y, len_x) / total
    localized = (mass_fraction >= SLP_MASS_FRACTION
                 and area_fraction <= SLP_AREA_FRACTION)
    return float(area_fraction), float(mass_fraction), bool(localized)


def _best_box_mass(m: np.ndarray, len_y: int, len_x: int) -> float:
    """Maximum mass inside any toroidal box of the given side lengths."""
    h, w = m.shape
    ys = np.cumsum(np.concatenate([np.zeros((1, w)), np.tile(m, (2, 1))]), axis=0)
    rows = ys[len_y:len_y + h] - ys[:h]          # (h, w) row-window sums
    xs = np.cumsum(np.concatenate([np.zeros((h, 1)), np.tile(rows, (1, 2))], axis=1), axis=1)
    boxes = xs[:, len_x:len_x + w] - xs[:, :w]
    return float(boxes.max())


@dataclass
class PatternStats:
    """Trajectory summary for one rollout."""

    mass_per_channel: list[float]
    com_trajectory: np.ndarray          # (T+1, 2) normalized coordinates
    occupancy_fraction: float           # bounding-box area fraction at final step
    box_mass_fraction: float
    mean_speed: float                   # cells per step
    localized: bool

    def to_dict(self) -> dict:
        return {
            "mass_per_channel": [float(x) for x in self.mass_per_channel],
            "final_com": [float(x) for x in self.com_trajectory[-1]],
            "occupancy_fraction": self.occupancy_fraction,
            "box_mass_fraction": self.box_mass_fraction,
            "mean_speed": self.mean_speed,
            "localized": self.localized,
        }


def trajectory_stats(A_final: np.ndarray, com_traj: np.ndarray,
                     dims: tuple[int, int]) -> PatternStats:
    area_frac, mass_frac, localized = slp_metrics(A_final)
    steps = wrap_unit(np.diff(com_traj, axis=0))
    steps_cells = steps * np.array(dims)  # normalized -> cell units
    speed = np.hypot(steps_cells[..., 0], steps_cells[..., 1])
    mean_speed = float(np.nanmean(speed)) if len(speed) else 0.0
    if np.isnan(mean_speed):
        mean_speed = 0.0
    return PatternStats(
        mass_per_channel=[float(x) for x in total_mass(A_final)],
        com_trajectory=com_traj,
        occupancy_fraction=area_frac,
        box_mass_fraction=mass_frac,
        mean_speed=mean_speed,
        localized=localized,
    )


def rollout_stats(A0: np.ndarray, rules: RuleSet, steps: int,
                  mode: str = "flow", dtype=np.float64) -> PatternStats:
    """Roll out one world and summarize its trajectory."""
    dims = A0.shape[-2:]
    A = A0.astype(dtype)
    compiled = CompiledRules.from_ruleset(rules, dims, dtype=dtype)
    com = [center_of_mass(A)]
    for _ in range(steps):
        if mode == "flow":
            A, _ = flow_lenia_step(A, rules, compiled=compiled, exact_mass=False)
        elif mode == "lenia":
            A = lenia_step(A, rules, compiled=compiled)
        else:
            raise ValueError(f"unknown mode {mode!r}")
        com.append(center_of_mass(A))
    return trajectory_stats(A, np.stack(com), dims)


@dataclass
class SearchRecord:
    """One random-search sample: parameters plus trajectory summary."""

    index: int
    seed: int
    rules: RuleSet | None
    stats: PatternStats | None = None
    error: str | None = None


def run_random_search(seed: int, count: int, *, dims: tuple[int, int] = (64, 64),
                      C: int = 1, M: list[list[int]] | None = None,
                      steps: int = SEARCH_STEPS_DEFAULT,
                      patch_side: int = PATCH_SIDE_DEFAULT,
                      mode: str = "flow",
                      on_record=None) -> list[SearchRecord]:
    """Sample ``count`` rule sets, roll each out, and record statistics.

    Fully deterministic given ``seed``; per-sample failures (degenerate
    kernels, numerical trouble) are recorded rather than fatal.
    """
    if M is None:
        M = [[10]] if C == 1 else [[3, 2], [2, 3]]
    patch_side = min(patch_side, *dims)
    child_seeds = np.random.SeedSequence(seed).spawn(count)
    records = []
    for i, ss in enumerate(child_seeds):
        rng = np.random.Generator(np.random.Philox(ss))
        sample_seed = int(ss.entropy) if isinstance(ss.entropy, int) else seed
        try:
            rules = sample_ruleset(rng, C, M)
            A0 = init_patch(rng, dims, patch_side=patch_side, C=C)
            stats = rollout_stats(A0, rules, steps, mode=mode)
            rec = SearchRecord(index=i, seed=sample_seed, rules=rules, stats=stats)
        except DegenerateKernelError as exc:
            rec = SearchRecord(index=i, seed=sample_seed, rules=None, error=str(exc))
        except FloatingPointError as exc:  # pragma: no cover - defensive
            rec = SearchRecord(index=i, seed=sample_seed, rules=None, error=str(exc))
        records.append(rec)
        if on_record is not None:
            on_record(rec)
    return records
