"""Environmental features: food with decay/digestion, walls, chemical fields.

Food (``psi``) is transformed into matter where matter sits on it; matter
decays at a fixed per-step rate.  Walls repel matter through a strong flow
pointing down the (smoothed) wall-density gradient.  Chemical fields are
static Gaussian bumps that creatures can sense through extra kernel/growth
pairs wired from the static layer into the matter channels.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.ndimage import gaussian_filter

from flowlenia.grids import channel_sum, sobel_gradient, torus_distance_map

WALL_STRENGTH_DEFAULT = 10.0
WALL_SMOOTH_SIGMA = 2.0  # cells; fixed small blur before taking the gradient


@dataclass
class EcologyState:
    """Food map plus static wall / chemical layers and transfer rates."""

    food: np.ndarray                  # psi >= 0, evolves via digestion
    walls: np.ndarray | None = None   # in [0, 1], static during a rollout
    chem: np.ndarray | None = None    # >= 0, static per episode
    rho_decay: float = 0.0            # matter decay rate per step
    rho_digest: float = 0.0           # food -> matter transfer rate per step

    def __post_init__(self):
        if self.rho_decay < 0 or self.rho_digest < 0:
            raise ValueError("decay/digest rates must be non-negative")


def food_decay_update(A: np.ndarray, eco: EcologyState) -> tuple[np.ndarray, EcologyState]:
    """Digest food into matter, then decay matter.

    Per cell: ``d = clip(A_sum * rho_digest, 0, psi)`` is removed from the
    food map and credited to the matter channels proportionally to their
    local mass; afterwards every channel loses ``A * rho_decay``.  Applied
    after the transport scatter of the same step.
    """
    a_sum = channel_sum(A)
    digest = np.clip(a_sum * eco.rho_digest, 0.0, eco.food)
    safe_sum = np.where(a_sum > 0.0, a_sum, 1.0)
    share = np.where(a_sum > 0.0, digest / safe_sum, 0.0)
    out = A + A * share[..., None, :, :]
    if eco.rho_decay > 0.0:
        out = out * (1.0 - eco.rho_decay)
    return out, replace(eco, food=eco.food - digest)


def wall_flow(walls: np.ndarray, strength: float = WALL_STRENGTH_DEFAULT) -> np.ndarray:
    """Repulsion flow pointing from wall centers outwards: (2, H, W).

    The wall map is blurred first so the gradient exists on disc rims; the
    result is added to every channel's flow before clamping.
    """
    smooth = gaussian_filter(walls, sigma=WALL_SMOOTH_SIGMA, mode="wrap")
    return -strength * sobel_gradient(smooth)


def make_chem_field(dims: tuple[int, int], center: tuple[float, float],
                    sigma_gamma: float) -> np.ndarray:
    """Toroidal Gaussian bump with peak value 1 at ``center``."""
    if sigma_gamma <= 0:
        raise ValueError("sigma_gamma must be positive")
    dist = torus_distance_map(dims, center)
    return np.exp(-(dist ** 2) / (2.0 * sigma_gamma ** 2))


def sample_wall_discs(rng: np.random.Generator, dims: tuple[int, int],
                      n_discs: int = 8, disc_radius: float = 5.0,
                      circle_radius: float = 40.0) -> np.ndarray:
    """Forest of wall discs on a circle around the grid center."""
    h, w = dims
    walls = np.zeros(dims)
    angles = rng.uniform(0.0, 2.0 * np.pi, size=n_discs)
    for theta in angles:
        cy = (h / 2 + circle_radius * np.sin(theta)) % h
        cx = (w / 2 + circle_radius * np.cos(theta)) % w
        walls = np.maximum(walls, torus_distance_map(dims, (cy, cx)) <= disc_radius)
    return walls.astype(np.float64)


def sample_chem_center(rng: np.random.Generator, dims: tuple[int, int],
                       circle_radius: float = 60.0) -> tuple[float, float]:
    """Point on a circle around the grid center (fixed distance, random angle)."""
    h, w = dims
    theta = rng.uniform(0.0, 2.0 * np.pi)
    return ((h / 2 + circle_radius * np.sin(theta)) % h,
            (w / 2 + circle_radius * np.cos(theta)) % w)
