"""Per-cell parameter maps: embedded weights, mixing rules, zone mutation.

A parameter map ``P`` stores one weight vector per cell (shape
``(K, H, W)`` for K kernel/growth pairs, values in [0, 1]).  The affinity
computation uses the local value of ``P`` in place of the global per-pair
weight ``h`` (see :meth:`flowlenia.rules.CompiledRules.affinity`).  When
matter moves, parameters must move with it; the two mixing rules resolve
what happens when mass from several sources lands in one cell:

- *average*: mass-weighted mean of incoming parameter vectors,
- *softmax_sample*: one source vector is copied whole, sampled with
  probability softmax(incoming mass).

Cells whose total inflow is below ``EPS_MASS`` keep their previous vector,
so matter-free regions are never averaged from numerical dust.
"""

from __future__ import annotations

import numpy as np

from flowlenia.engine import offset_overlaps
from flowlenia.grids import torus_distance_map
from flowlenia.rules import CompiledRules, RuleSet

EPS_MASS = 1e-10


def embedded_affinity(A: np.ndarray, P: np.ndarray, rules: RuleSet,
                      compiled: CompiledRules | None = None,
                      statics: np.ndarray | None = None) -> np.ndarray:
    """Affinity map with the per-pair weight replaced by its local value."""
    if P.shape[-3] != len(rules.kernels):
        raise ValueError(
            f"parameter map has {P.shape[-3]} components, rules have "
            f"{len(rules.kernels)} kernel/growth pairs")
    if compiled is None:
        compiled = CompiledRules.from_ruleset(
            rules, A.shape[-2:], n_matter_channels=A.shape[-3], dtype=A.dtype.type)
    state = A if statics is None else np.concatenate([A, statics], axis=-3)
    return compiled.affinity(state, param_map=P)


def _inflow_by_offset(A: np.ndarray, F: np.ndarray, s: float, dt: float) -> dict:
    """Incoming mass per integer offset, summed over channels.

    Returns ``{(ky, kx): mass}`` where ``mass[p]`` is the matter arriving at
    cell ``p`` from source cell ``p - (ky, kx)`` (toroidal).
    """
    C = A.shape[-3]
    inflow: dict[tuple[int, int], np.ndarray] = {}
    for c in range(C):
        src = A[c]
        d = dt * F[c]
        y_over = offset_overlaps(d[0], s)
        x_over = offset_overlaps(d[1], s)
        for ky, wy in y_over:
            base = src * wy
            if not base.any():
                continue
            for kx, wx in x_over:
                contrib = np.roll(base * wx, (ky, kx), axis=(-2, -1))
                key = (ky, kx)
                if key in inflow:
                    inflow[key] += contrib
                else:
                    inflow[key] = contrib
    return inflow


def mix_average(P: np.ndarray, A: np.ndarray, F: np.ndarray,
                s: float, dt: float, eps_mass: float = EPS_MASS) -> np.ndarray:
    """Mass-weighted average of incoming parameter vectors.

    ``P'(p) = sum_p' m(p', p) P(p') / sum_p' m(p', p)`` with ``m`` the
    incoming mass summed over channels; cells with inflow below ``eps_mass``
    keep their previous vector.
    """
    num = np.zeros_like(P)
    den = np.zeros(P.shape[-2:], dtype=P.dtype)
    for (ky, kx), mass in _inflow_by_offset(A, F, s, dt).items():
        den += mass
        # mass is target-located; the matching source params arrive rolled.
        num += mass * np.roll(P, (ky, kx), axis=(-2, -1))
    keep = den <= eps_mass
    den = np.where(keep, 1.0, den)
    mixed = num / den
    return np.where(keep, P, mixed)


def mix_softmax(P: np.ndarray, A: np.ndarray, F: np.ndarray,
                s: float, dt: float, rng: np.random.Generator,
                eps_mass: float = EPS_MASS,
                crossover: bool = False) -> np.ndarray:
    """Sample one incoming source per cell with probability softmax(mass).

    Only sources contributing positive mass are candidates; the raw masses
    are the logits (max-subtracted for numerical safety).  By default the
    whole vector is copied from the sampled source; ``crossover=True``
    samples each component independently.
    """
    inflow = _inflow_by_offset(A, F, s, dt)
    if not inflow:
        return P.copy()
    offsets = sorted(inflow.keys())
    masses = np.stack([inflow[o] for o in offsets])  # (n_off, H, W)
    total_in = masses.sum(axis=0)
    candidates = masses > 0.0
    logits = np.where(candidates, masses, -np.inf)
    with np.errstate(invalid="ignore"):
        # cells with no candidates yield NaN rows here; `keep` masks them out
        logits = logits - logits.max(axis=0, keepdims=True)
        probs = np.exp(logits)
        probs = np.where(candidates, probs, 0.0)
        norm = probs.sum(axis=0, keepdims=True)
        probs = np.divide(probs, np.where(norm > 0, norm, 1.0))
    rolled = np.stack([np.roll(P, o, axis=(-2, -1)) for o in offsets])  # (n_off, K, H, W)
    cdf = np.cumsum(probs, axis=0)
    if crossover:
        u = rng.random((P.shape[0],) + P.shape[-2:])
        choice = np.minimum((u[None] > cdf[:, None]).sum(axis=0), len(offsets) - 1)
        picked = np.take_along_axis(rolled, choice[None], axis=0)[0]
    else:
        u = rng.random(P.shape[-2:])
        choice = np.minimum((u[None] > cdf).sum(axis=0), len(offsets) - 1)
        picked = np.take_along_axis(
            rolled, np.broadcast_to(choice, P.shape)[None], axis=0)[0]
    keep = total_in <= eps_mass
    return np.where(keep, P, picked)


def mutate_zone(P: np.ndarray, rng: np.random.Generator,
                zone_radius: float, noise_sigma: float) -> np.ndarray:
    """Add Gaussian noise inside a random disc, then clip to [0, 1].

    The disc center is sampled uniformly; cells at toroidal distance
    strictly below ``zone_radius`` are mutated (radius 0 mutates nothing).
    """
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be non-negative")
    h, w = P.shape[-2:]
    cy = int(rng.integers(h))
    cx = int(rng.integers(w))
    noise = rng.normal(0.0, 1.0, size=P.shape)
    if noise_sigma == 0.0 or zone_radius <= 0.0:
        return P.copy()
    mask = torus_distance_map((h, w), (cy, cx)) < zone_radius
    return np.clip(P + noise_sigma * noise * mask, 0.0, 1.0).astype(P.dtype, copy=False)


def parameter_colors(P: np.ndarray, seed: int = 0) -> np.ndarray:
    """Project parameter vectors to RGB via a fixed random projection.

    Returns ``(3, H, W)`` in [0, 1].  The projection matrix depends only on
    the component count and ``seed`` so colors are stable across sessions;
    this is the species-color mapping documented for the frame protocol.
    """
    k = P.shape[0]
    proj = np.random.Generator(np.random.Philox(seed)).uniform(0.0, 1.0, size=(3, k))
    proj /= proj.sum(axis=1, keepdims=True)
    return np.einsum("ck,khw->chw", proj, P)
