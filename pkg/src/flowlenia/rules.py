"""Update-rule genome: kernels, growth functions, channel wiring.

A :class:`RuleSet` is one complete genome: a list of (kernel, growth) pairs,
each wired from a source channel to a target channel according to an
adjacency matrix ``M`` (``M[i][j]`` = number of pairs sensing channel ``i``
and updating channel ``j``), plus the transport hyperparameters.

:class:`CompiledRules` binds a genome (or a whole stacked population of
genomes sharing the same wiring) to a grid size: kernels are rasterized onto
the full grid and FFT'd once, growth parameters become broadcastable arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from flowlenia.grids import torus_distance_map

N_RINGS = 3  # concentric Gaussian bumps per kernel

DEGENERATE_SUM = 1e-12


class DegenerateKernelError(ValueError):
    """Raised when a kernel rasterizes to (numerically) all zeros."""


@dataclass(frozen=True)
class KernelSpec:
    """One convolution kernel: 3 Gaussian rings inside relative radius r."""

    r: float
    a: tuple[float, float, float]
    b: tuple[float, float, float]
    w: tuple[float, float, float]
    source_channel: int
    target_channel: int


@dataclass(frozen=True)
class GrowthSpec:
    """Scaled Gaussian response mapping convolution values to [-1, 1]."""

    mu: float
    sigma: float

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")


@dataclass
class RuleSet:
    """One full update-rule genome.

    Kernel ordering is deterministic: row-major over (source, target) pairs
    of ``M``, then pair index, so a genotype encoding is stable.
    """

    R: int
    kernels: list[KernelSpec]
    growths: list[GrowthSpec]
    h: list[float]
    M: list[list[int]]
    s: float = 0.65
    n: float = 2.0
    theta_A: float = 2.0
    dt: float = 0.2

    def __post_init__(self):
        n_pairs = sum(sum(row) for row in self.M)
        if not (len(self.kernels) == len(self.growths) == len(self.h) == n_pairs):
            raise ValueError(
                f"kernel/growth/h counts ({len(self.kernels)}/{len(self.growths)}/"
                f"{len(self.h)}) must all equal sum(M) = {n_pairs}"
            )
        expected = [
            (src, tgt)
            for src in range(len(self.M))
            for tgt in range(len(self.M[src]))
            for _ in range(self.M[src][tgt])
        ]
        actual = [(k.source_channel, k.target_channel) for k in self.kernels]
        if actual != expected:
            raise ValueError("kernel wiring does not follow row-major order of M")
        if self.theta_A <= 0:
            raise ValueError("theta_A must be positive")
        if self.s <= 0:
            raise ValueError("s must be positive")
        if self.dt <= 0:
            raise ValueError("dt must be positive")

    @property
    def n_source_channels(self) -> int:
        """Rows of M; may exceed matter channels when static layers are wired in."""
        return len(self.M)

    def matter_channels(self, n_static: int = 0) -> int:
        return len(self.M) - n_static


def growth(g: GrowthSpec, x) -> np.ndarray | float:
    """Scaled Gaussian: 2 exp(-(mu - x)^2 / (2 sigma^2)) - 1, in [-1, 1]."""
    return growth_array(g.mu, g.sigma, x)


def growth_array(mu, sigma, x):
    d = np.subtract(mu, x)
    return 2.0 * np.exp(-(d * d) / (2.0 * np.square(sigma))) - 1.0


def kernel_profile(a, b, w, u):
    """Unnormalized ring profile at normalized radius u (u = dist / (r R))."""
    total = 0.0
    for aj, bj, wj in zip(a, b, w):
        total = total + bj * np.exp(-((u - aj) ** 2) / (2.0 * wj * wj))
    return total


def rasterize_kernel(spec: KernelSpec, R: int, dims: tuple[int, int],
                     dtype=np.float64) -> np.ndarray:
    """Rasterize one kernel onto the full grid, centered at the origin.

    Distances are center-to-center in cell units using the nearest toroidal
    image.  Hard support cutoff at ``r * R``; the raster is normalized to
    sum to exactly 1.  Raises :class:`DegenerateKernelError` when the raster
    sum is below 1e-12.
    """
    if R < 2:
        raise ValueError("R must be at least 2")
    rr = spec.r * R
    dist = torus_distance_map(dims)
    k = kernel_profile(spec.a, spec.b, spec.w, dist / rr)
    k = np.where(dist <= rr, k, 0.0)
    total = k.sum()
    if total < DEGENERATE_SUM:
        raise DegenerateKernelError(
            f"kernel rasterizes to zero (r*R={rr:.3f}, b={spec.b})"
        )
    return (k / total).astype(dtype)


def rasterize_kernels_batched(r, a, b, w, R: int, dims: tuple[int, int],
                              dtype=np.float64) -> tuple[np.ndarray, np.ndarray]:
    """Rasterize a stacked parameter block in one vectorized pass.

    ``r``: (..., K); ``a``/``b``/``w``: (..., K, 3).  Returns
    ``(rasters, degenerate)`` with rasters ``(..., K, H, W)`` normalized to
    sum 1 and ``degenerate`` a boolean mask of kernels whose raster summed
    below threshold.  Degenerate kernels are replaced by a center delta so
    batched runs stay total functions; callers decide how to flag them.
    """
    r = np.asarray(r, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    dist = torus_distance_map(dims)  # (H, W)
    rr = r[..., None, None] * R  # (..., K, 1, 1)
    u = dist / rr
    k = np.zeros(r.shape + dims, dtype=np.float64)
    for j in range(N_RINGS):
        aj = a[..., j, None, None]
        bj = b[..., j, None, None]
        wj = w[..., j, None, None]
        k += bj * np.exp(-((u - aj) ** 2) / (2.0 * wj * wj))
    k = np.where(dist <= rr, k, 0.0)
    total = k.sum(axis=(-2, -1), keepdims=True)
    degenerate = total[..., 0, 0] < DEGENERATE_SUM
    if degenerate.any():
        delta = np.zeros(dims)
        delta[0, 0] = 1.0
        k = np.where(degenerate[..., None, None], delta, k)
        total = np.where(degenerate[..., None, None], 1.0, total)
    return (k / total).astype(dtype), degenerate


class CompiledRules:
    """Kernels rasterized + FFT'd and growth parameters bound to a grid.

    Immutable after construction (mutation helpers return updated arrays in
    place only through :meth:`set_growth` / :meth:`set_h`, used by the live
    session).  Supports an optional leading batch axis on ``kfft``, ``mu``,
    ``sigma`` and ``h`` so a population sharing one wiring steps as a block.
    """

    def __init__(self, kfft, mu, sigma, h, src, tgt, n_channels, dims, dtype):
        self.kfft = kfft            # (..., K, H, W//2+1)
        self.mu = mu                # (..., K)
        self.sigma = sigma
        self.h = h
        self.src = np.asarray(src)  # (K,) source channel of each pair
        self.tgt = np.asarray(tgt)  # (K,) target channel
        self.n_channels = n_channels  # matter channels (targets live here)
        self.dims = dims
        self.dtype = dtype
        onehot = np.zeros((len(self.tgt), n_channels), dtype=dtype)
        onehot[np.arange(len(self.tgt)), self.tgt] = 1.0
        self._tgt_onehot = onehot

    @classmethod
    def from_ruleset(cls, rules: RuleSet, dims: tuple[int, int],
                     n_matter_channels: int | None = None,
                     dtype=np.float64) -> "CompiledRules":
        rasters = np.stack(
            [rasterize_kernel(k, rules.R, dims, dtype) for k in rules.kernels]
        )
        n_matter = n_matter_channels if n_matter_channels is not None else len(rules.M)
        for k in rules.kernels:
            if k.target_channel >= n_matter:
                raise ValueError(
                    f"kernel targets channel {k.target_channel} but only "
                    f"{n_matter} matter channels exist (static layers are read-only)"
                )
        return cls(
            kfft=np.fft.rfft2(rasters),
            mu=np.array([g.mu for g in rules.growths], dtype=dtype),
            sigma=np.array([g.sigma for g in rules.growths], dtype=dtype),
            h=np.array(rules.h, dtype=dtype),
            src=[k.source_channel for k in rules.kernels],
            tgt=[k.target_channel for k in rules.kernels],
            n_channels=n_matter,
            dims=dims,
            dtype=dtype,
        )

    @classmethod
    def from_arrays(cls, rasters, mu, sigma, h, src, tgt, n_channels,
                    dtype=np.float64) -> "CompiledRules":
        """Build from stacked rasters ``(..., K, H, W)`` (batched path)."""
        dims = rasters.shape[-2:]
        return cls(
            kfft=np.fft.rfft2(rasters),
            mu=np.asarray(mu, dtype=dtype),
            sigma=np.asarray(sigma, dtype=dtype),
            h=np.asarray(h, dtype=dtype),
            src=src,
            tgt=tgt,
            n_channels=n_channels,
            dims=dims,
            dtype=dtype,
        )

    def set_growth(self, index: int, mu: float | None = None,
                   sigma: float | None = None) -> None:
        if mu is not None:
            self.mu[..., index] = mu
        if sigma is not None:
            self.sigma[..., index] = sigma

    def set_h(self, index: int, value: float) -> None:
        self.h[..., index] = value

    def growth_responses(self, state: np.ndarray) -> np.ndarray:
        """Per-pair growth responses G_i(K_i * A_{src_i}): (..., K, H, W).

        ``state`` is ``(..., C_src, H, W)`` and may include read-only static
        layers beyond the matter channels; kernels may source them.
        """
        afft = np.fft.rfft2(state)
        convs = np.fft.irfft2(afft[..., self.src, :, :] * self.kfft, s=self.dims)
        convs = convs.astype(self.dtype, copy=False)
        return growth_array(self.mu[..., None, None], self.sigma[..., None, None], convs)

    def affinity(self, state: np.ndarray,
                 param_map: np.ndarray | None = None) -> np.ndarray:
        """Affinity map U: (..., C, H, W), one field per matter channel.

        ``U_j = sum_i h_i G_i(K_i * A_{src_i}) [tgt_i = j]`` (no sum-h
        normalization).  With ``param_map`` (..., K, H, W) the per-pair
        weight h_i is replaced by its local embedded value.
        """
        g = self.growth_responses(state)
        if param_map is None:
            weighted = g * self.h[..., None, None]
        else:
            weighted = g * param_map
        return np.einsum("...khw,kc->...chw", weighted, self._tgt_onehot)


def affinity_map(A: np.ndarray, rules: RuleSet,
                 kernel_cache: CompiledRules | None = None) -> np.ndarray:
    """Convenience wrapper: compile (or reuse a cache) and evaluate U."""
    compiled = kernel_cache
    if compiled is None:
        compiled = CompiledRules.from_ruleset(rules, A.shape[-2:], dtype=A.dtype.type)
    return compiled.affinity(A)


def ruleset_to_dict(rules: RuleSet) -> dict:
    return {
        "R": rules.R,
        "M": [list(row) for row in rules.M],
        "h": list(rules.h),
        "kernels": [
            {"r": k.r, "a": list(k.a), "b": list(k.b), "w": list(k.w),
             "source_channel": k.source_channel, "target_channel": k.target_channel}
            for k in rules.kernels
        ],
        "growths": [{"mu": g.mu, "sigma": g.sigma} for g in rules.growths],
        "s": rules.s,
        "n": rules.n,
        "theta_A": rules.theta_A,
        "dt": rules.dt,
    }


def ruleset_from_dict(data: dict) -> RuleSet:
    return RuleSet(
        R=int(data["R"]),
        kernels=[
            KernelSpec(r=k["r"], a=tuple(k["a"]), b=tuple(k["b"]), w=tuple(k["w"]),
                       source_channel=int(k["source_channel"]),
                       target_channel=int(k["target_channel"]))
            for k in data["kernels"]
        ],
        growths=[GrowthSpec(mu=g["mu"], sigma=g["sigma"]) for g in data["growths"]],
        h=[float(x) for x in data["h"]],
        M=[list(map(int, row)) for row in data["M"]],
        s=float(data["s"]),
        n=float(data["n"]),
        theta_A=float(data["theta_A"]),
        dt=float(data["dt"]),
    )
