"""Toroidal grid primitives.

Conventions used across the package:

- a *field* is a ``(H, W)`` float array,
- multi-channel state is ``(..., C, H, W)``,
- vector fields are ``(..., 2, H, W)`` with component 0 along rows (y)
  and component 1 along columns (x).

Leading dimensions beyond the documented ones are treated as batch axes, so
the same code paths step one world or a whole population.  Every boundary is
periodic: stencils, convolutions and the transport scatter all wrap.
"""

from __future__ import annotations

import math

import numpy as np

MIN_SIDE = 3  # Sobel stencils need a full 3x3 neighborhood


def validate_field(field: np.ndarray, name: str = "field") -> None:
    """Check grid dimensions and finiteness; raises ValueError on bad input."""
    if field.ndim < 2:
        raise ValueError(f"{name} must have at least 2 dimensions, got {field.ndim}")
    h, w = field.shape[-2:]
    if h < MIN_SIDE or w < MIN_SIDE:
        raise ValueError(f"{name} must be at least {MIN_SIDE}x{MIN_SIDE}, got {h}x{w}")
    if not np.all(np.isfinite(field)):
        raise ValueError(f"{name} contains non-finite values")


def embed_kernel(kernel: np.ndarray, dims: tuple[int, int]) -> np.ndarray:
    """Place a small odd-sided kernel on a full grid, center at the origin.

    The result is the wrap-around raster expected by the FFT convolution
    path: entry (0, 0) holds the kernel center, negative offsets wrap to the
    far edges.
    """
    kh, kw = kernel.shape
    h, w = dims
    if kh > h or kw > w:
        raise ValueError(f"kernel {kh}x{kw} larger than grid {h}x{w}")
    if kh % 2 == 0 or kw % 2 == 0:
        raise ValueError("small kernels must have odd side lengths")
    raster = np.zeros(dims, dtype=kernel.dtype)
    raster[:kh, :kw] = kernel
    return np.roll(raster, (-(kh // 2), -(kw // 2)), axis=(0, 1))


def convolve_circular(field: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Circular convolution ``out(p) = sum_q kernel(q) * field(p - q)``.

    ``kernel`` is either an origin-centred full-grid raster (same spatial
    shape as ``field``) or a small odd-sided stencil, which gets embedded
    first.  Uses the FFT path; ``convolve_direct`` is the spatial-domain
    reference for small grids.
    """
    dims = field.shape[-2:]
    if kernel.shape == dims:
        raster = kernel
    else:
        raster = embed_kernel(kernel, dims)
    out = np.fft.irfft2(np.fft.rfft2(field) * np.fft.rfft2(raster), s=dims)
    return out.astype(field.dtype, copy=False)


def convolve_direct(field: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Direct sliding-window circular convolution (test oracle, O(N^2 K^2))."""
    h, w = field.shape
    if kernel.shape == field.shape:
        # Full-grid raster: offsets are the raster indices themselves.
        out = np.zeros_like(field)
        for qy in range(h):
            for qx in range(w):
                kv = kernel[qy, qx]
                if kv != 0.0:
                    out += kv * np.roll(field, (qy, qx), axis=(0, 1))
        return out
    kh, kw = kernel.shape
    cy, cx = kh // 2, kw // 2
    out = np.zeros_like(field)
    for ky in range(kh):
        for kx in range(kw):
            kv = kernel[ky, kx]
            if kv != 0.0:
                out += kv * np.roll(field, (ky - cy, kx - cx), axis=(0, 1))
    return out


def sobel_gradient(field: np.ndarray) -> np.ndarray:
    """Sobel gradient estimate with toroidal wrap.

    Returns ``(..., 2, H, W)`` with ``out[..., 0]`` = d/dy and
    ``out[..., 1]`` = d/dx.  Stencils are normalized by 1/8 so a unit-slope
    ramp yields a unit gradient, making magnitudes resolution-comparable.
    """
    gx = np.roll(field, -1, axis=-1) - np.roll(field, 1, axis=-1)
    gx = (np.roll(gx, -1, axis=-2) + 2.0 * gx + np.roll(gx, 1, axis=-2)) / 8.0
    gy = np.roll(field, -1, axis=-2) - np.roll(field, 1, axis=-2)
    gy = (np.roll(gy, -1, axis=-1) + 2.0 * gy + np.roll(gy, 1, axis=-1)) / 8.0
    return np.stack([gy, gx], axis=-3).astype(field.dtype, copy=False)


def channel_sum(mf: np.ndarray) -> np.ndarray:
    """Per-cell sum over channels: ``(..., C, H, W) -> (..., H, W)``."""
    return mf.sum(axis=-3)


def total_mass(mf: np.ndarray) -> np.ndarray:
    """Channel-wise total mass via compensated (exact) summation.

    ``(..., C, H, W) -> (..., C)``; uses ``math.fsum`` per channel so the
    result does not depend on accumulation order.
    """
    lead = mf.shape[:-2]
    out = np.empty(lead, dtype=np.float64)
    for idx in np.ndindex(*lead):
        out[idx] = math.fsum(mf[idx].ravel().astype(np.float64))
    return out


def fast_mass(mf: np.ndarray) -> np.ndarray:
    """Channel totals via numpy pairwise summation (batched hot path)."""
    return mf.sum(axis=(-2, -1), dtype=np.float64)


def torus_distance_map(dims: tuple[int, int], center: tuple[float, float] | None = None) -> np.ndarray:
    """Per-cell Euclidean distance to ``center`` using nearest periodic images."""
    h, w = dims
    cy, cx = (0.0, 0.0) if center is None else center
    dy = np.abs(np.arange(h) - cy)
    dy = np.minimum(dy, h - dy)
    dx = np.abs(np.arange(w) - cx)
    dx = np.minimum(dx, w - dx)
    return np.hypot(dy[:, None], dx[None, :])
