"""Evolution-strategies optimization of rule parameters and seed patterns.

A genotype is a flat vector in [0, 1]: 13 genes per kernel/growth pair
(r, mu, sigma, h, a1-3, b1-3, w1-3, affinely mapped to their sampling
ranges) followed by the initial patch values (``patch_side^2 * C`` raw
genes).  The optimizer is OpenES: antithetic Gaussian perturbations around a
mean genotype, centered-rank fitness shaping, and an Adam update on the
estimated gradient.  The whole population of one generation rolls out as a
single batched simulation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from flowlenia import ecology
from flowlenia.engine import D_MAX_DEFAULT, flow_field, reintegration_step
from flowlenia.explore import (FLOW_DEFAULTS, SAMPLER_RANGES, center_of_mass,
                               toroidal_travel, wrap_unit)
from flowlenia.rules import (CompiledRules, GrowthSpec, KernelSpec, RuleSet,
                             rasterize_kernels_batched)

GENES_PER_KERNEL = 13
# Gene order within one kernel block; vector parameters take 3 consecutive genes.
KERNEL_GENE_RANGES = (
    [SAMPLER_RANGES["r"], SAMPLER_RANGES["mu"], SAMPLER_RANGES["sigma"],
     SAMPLER_RANGES["h"]]
    + [SAMPLER_RANGES["a"]] * 3
    + [SAMPLER_RANGES["b"]] * 3
    + [SAMPLER_RANGES["w"]] * 3
)

TASKS = ("directed_motion", "angular_motion", "obstacles", "chemotaxis")


@dataclass
class TaskSpec:
    """One behavioral fitness task plus its episode geometry."""

    task: str
    dims: tuple[int, int] = (64, 64)
    C: int = 2                                  # matter channels
    M: list[list[int]] = field(default_factory=lambda: [[3, 2], [2, 3]])
    R: int = 12
    patch_side: int = 20
    T: int = 500
    s: float = FLOW_DEFAULTS["s"]
    n: float = FLOW_DEFAULTS["n"]
    theta_A: float = FLOW_DEFAULTS["theta_A"]
    dt: float = FLOW_DEFAULTS["dt"]
    d_max: float = D_MAX_DEFAULT
    angular_threshold: float = 0.05             # normalized units
    wall_discs: int = 8
    wall_disc_radius: float = 5.0
    wall_circle_radius: float = 40.0
    wall_strength: float = ecology.WALL_STRENGTH_DEFAULT
    chem_circle_radius: float = 60.0
    chem_sigma: float = 30.0

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}")
        if len(self.M) < self.C:
            raise ValueError("M must cover at least the matter channels")

    @property
    def n_static(self) -> int:
        return len(self.M) - self.C

    @property
    def n_kernels(self) -> int:
        return sum(sum(row) for row in self.M)

    @property
    def n_genes(self) -> int:
        return GENES_PER_KERNEL * self.n_kernels + self.patch_side ** 2 * self.C


def default_task(task: str, dims: tuple[int, int] = (64, 64), **overrides) -> TaskSpec:
    """Task presets: matter wiring [[3,2],[2,3]] plus a sensing row when the
    task provides a static layer (walls or chemical)."""
    base = [[3, 2], [2, 3]]
    if task in ("obstacles", "chemotaxis"):
        M = [row + [0] for row in base] + [[5, 0, 0]]
    else:
        M = base
    overrides.setdefault("M", M)
    return TaskSpec(task=task, dims=dims, **overrides)


def _gene_bounds(n_kernels: int) -> tuple[np.ndarray, np.ndarray]:
    lows = np.array([lo for lo, _ in KERNEL_GENE_RANGES] * n_kernels)
    highs = np.array([hi for _, hi in KERNEL_GENE_RANGES] * n_kernels)
    return lows, highs


def split_genotype(g: np.ndarray, spec: TaskSpec) -> tuple[np.ndarray, np.ndarray]:
    """Split (..., n_genes) into kernel genes and patch genes, both clipped."""
    g = np.clip(np.asarray(g, dtype=np.float64), 0.0, 1.0)
    nk = GENES_PER_KERNEL * spec.n_kernels
    return g[..., :nk], g[..., nk:]


def decode_params(g: np.ndarray, spec: TaskSpec) -> dict:
    """Map kernel genes to their ranges: arrays keyed r/mu/sigma/h/a/b/w."""
    kg, patch = split_genotype(g, spec)
    lows, highs = _gene_bounds(spec.n_kernels)
    vals = lows + kg * (highs - lows)
    blocks = vals.reshape(vals.shape[:-1] + (spec.n_kernels, GENES_PER_KERNEL))
    return {
        "r": blocks[..., 0],
        "mu": blocks[..., 1],
        "sigma": blocks[..., 2],
        "h": blocks[..., 3],
        "a": blocks[..., 4:7],
        "b": blocks[..., 7:10],
        "w": blocks[..., 10:13],
        "patch": patch.reshape(patch.shape[:-1] + (spec.C, spec.patch_side, spec.patch_side)),
    }


def wiring(spec: TaskSpec) -> tuple[list[int], list[int]]:
    src, tgt = [], []
    for i, row in enumerate(spec.M):
        for j, count in enumerate(row):
            src.extend([i] * count)
            tgt.extend([j] * count)
    return src, tgt


def decode(g: np.ndarray, spec: TaskSpec) -> tuple[RuleSet, np.ndarray]:
    """Decode one genotype into a rule set and its initial state."""
    p = decode_params(np.atleast_1d(g), spec)
    src, tgt = wiring(spec)
    kernels = [
        KernelSpec(r=float(p["r"][k]), a=tuple(p["a"][k]), b=tuple(p["b"][k]),
                   w=tuple(p["w"][k]), source_channel=src[k], target_channel=tgt[k])
        for k in range(spec.n_kernels)
    ]
    growths = [GrowthSpec(mu=float(p["mu"][k]), sigma=float(p["sigma"][k]))
               for k in range(spec.n_kernels)]
    rules = RuleSet(R=spec.R, kernels=kernels, growths=growths,
                    h=[float(x) for x in p["h"]], M=spec.M,
                    s=spec.s, n=spec.n, theta_A=spec.theta_A, dt=spec.dt)
    A0 = place_patch(p["patch"], spec.dims)
    return rules, A0


def encode(rules: RuleSet, A0: np.ndarray, spec: TaskSpec) -> np.ndarray:
    """Inverse of :func:`decode`; round-trips exactly for in-range values."""
    lows, highs = _gene_bounds(spec.n_kernels)
    vals = []
    for k, g, h in zip(rules.kernels, rules.growths, rules.h):
        vals.extend([k.r, g.mu, g.sigma, h, *k.a, *k.b, *k.w])
    kernel_genes = (np.array(vals) - lows) / (highs - lows)
    hh, ww = spec.dims
    ps = spec.patch_side
    y0, x0 = (hh - ps) // 2, (ww - ps) // 2
    patch = A0[..., y0:y0 + ps, x0:x0 + ps].reshape(-1)
    return np.concatenate([kernel_genes, patch])


def place_patch(patch: np.ndarray, dims: tuple[int, int]) -> np.ndarray:
    """Center ``(..., C, ps, ps)`` patch values on an otherwise empty grid."""
    h, w = dims
    ps = patch.shape[-1]
    A = np.zeros(patch.shape[:-2] + (h, w))
    y0, x0 = (h - ps) // 2, (w - ps) // 2
    A[..., y0:y0 + ps, x0:x0 + ps] = patch
    return A


# ---------------------------------------------------------------------------
# Fitness functions
# ---------------------------------------------------------------------------

def fitness_directed(com_traj: np.ndarray, end_step: int = 400) -> np.ndarray:
    """Toroidal distance between the centers of mass at steps 0 and 400."""
    d = toroidal_travel(com_traj[0], com_traj[min(end_step, len(com_traj) - 1)])
    return np.nan_to_num(d, nan=0.0)


def fitness_angular(com_traj: np.ndarray, dist_threshold: float = 0.05) -> np.ndarray:
    """d(0,200) + d(200,400) + angle between the two legs.

    The angle (radians, in [0, pi]) counts only when both legs exceed the
    distance threshold, so large angles cannot come from jitter.
    """
    c0, c200, c400 = com_traj[0], com_traj[200], com_traj[400]
    v1 = wrap_unit(np.asarray(c200) - c0)
    v2 = wrap_unit(np.asarray(c400) - c200)
    d1 = np.hypot(v1[..., 0], v1[..., 1])
    d2 = np.hypot(v2[..., 0], v2[..., 1])
    with np.errstate(invalid="ignore", divide="ignore"):
        cosang = (v1 * v2).sum(axis=-1) / (d1 * d2)
        theta = np.arccos(np.clip(cosang, -1.0, 1.0))
    theta = np.where((d1 < dist_threshold) | (d2 < dist_threshold), 0.0, theta)
    return np.nan_to_num(d1 + d2 + theta, nan=0.0)


def fitness_chemotaxis(final: np.ndarray, chem: np.ndarray) -> np.ndarray:
    """Mass-weighted mean of the chemical field at the final step."""
    a_sum = final.sum(axis=-3)
    total = a_sum.sum(axis=(-2, -1))
    weighted = (a_sum * chem).sum(axis=(-2, -1))
    out = np.where(total > 0, weighted / np.where(total > 0, total, 1.0), 0.0)
    return np.nan_to_num(out, nan=0.0)


# ---------------------------------------------------------------------------
# Episode environments and batched rollout
# ---------------------------------------------------------------------------

@dataclass
class _FlowParams:
    theta_A: float
    n: float
    dt: float
    s: float


def build_episode(spec: TaskSpec, episode_seed: int):
    """(statics, extra_flow, chem) for one evaluation episode.

    Geometry is resampled per episode seed; within a generation all
    population members share one episode to keep sibling comparisons fair.
    """
    rng = np.random.Generator(np.random.Philox(episode_seed))
    statics, extra_flow, chem = None, None, None
    if spec.task == "obstacles":
        walls = ecology.sample_wall_discs(
            rng, spec.dims, n_discs=spec.wall_discs,
            disc_radius=spec.wall_disc_radius,
            circle_radius=spec.wall_circle_radius)
        statics = walls[None]
        extra_flow = ecology.wall_flow(walls, strength=spec.wall_strength)
    elif spec.task == "chemotaxis":
        center = ecology.sample_chem_center(rng, spec.dims,
                                            circle_radius=spec.chem_circle_radius)
        chem = ecology.make_chem_field(spec.dims, center, spec.chem_sigma)
        statics = chem[None]
    return statics, extra_flow, chem


def evaluate_population(genotypes: np.ndarray, spec: TaskSpec, episode_seed: int,
                        mode: str = "flow", dtype=np.float32,
                        record_final: bool = False):
    """Fitness of a whole population in one batched rollout.

    ``genotypes``: (B, n_genes).  Returns ``(fitness, info)`` where info
    carries the recorded center-of-mass checkpoints, flags for members whose
    kernels degenerated, and optionally the final states.
    """
    genotypes = np.atleast_2d(genotypes)
    p = decode_params(genotypes, spec)
    rasters, degenerate = rasterize_kernels_batched(
        p["r"], p["a"], p["b"], p["w"], spec.R, spec.dims, dtype=dtype)
    src, tgt = wiring(spec)
    compiled = CompiledRules.from_arrays(
        rasters, p["mu"], p["sigma"], p["h"], src, tgt,
        n_channels=spec.C, dtype=dtype)
    A = place_patch(p["patch"], spec.dims).astype(dtype)
    statics, extra_flow, chem = build_episode(spec, episode_seed)
    if statics is not None:
        statics = np.broadcast_to(
            statics.astype(dtype), A.shape[:-3] + statics.shape)
    flow = _FlowParams(theta_A=spec.theta_A, n=spec.n, dt=spec.dt, s=spec.s)
    checkpoints = {0: center_of_mass(A)}
    for step in range(1, spec.T + 1):
        state = A if statics is None else np.concatenate([A, statics], axis=-3)
        U = compiled.affinity(state)
        if mode == "flow":
            F, _ = flow_field(U, A, flow, d_max=spec.d_max, extra_flow=extra_flow)
            A = reintegration_step(A, F, spec.s, spec.dt)
        elif mode == "lenia":
            A = np.clip(A + spec.dt * U, 0.0, 1.0)
        else:
            raise ValueError(f"unknown mode {mode!r}")
        if step in (200, 400):
            checkpoints[step] = center_of_mass(A)
    # short rollouts (smoke runs): stand in the final state for the usual
    # step-200/400 measurement points
    final_com = center_of_mass(A)
    checkpoints.setdefault(200, final_com)
    checkpoints.setdefault(400, final_com)
    blown = ~np.isfinite(A).all(axis=(-3, -2, -1))
    if spec.task in ("directed_motion", "obstacles"):
        fitness = np.nan_to_num(
            toroidal_travel(checkpoints[0], checkpoints[400]), nan=0.0)
    elif spec.task == "angular_motion":
        fitness = _angular_from_checkpoints(checkpoints, spec.angular_threshold)
    elif spec.task == "chemotaxis":
        fitness = fitness_chemotaxis(np.nan_to_num(A, nan=0.0), chem.astype(dtype))
    fitness = np.where(blown, 0.0, fitness)
    info = {
        "degenerate": degenerate.any(axis=-1),
        "blown": blown,
        "checkpoints": checkpoints,
    }
    if record_final:
        info["final"] = A
    return np.asarray(fitness, dtype=np.float64), info


def _angular_from_checkpoints(cp: dict, threshold: float) -> np.ndarray:
    traj = np.stack([cp[0], cp[200], cp[400]])
    v1 = wrap_unit(traj[1] - traj[0])
    v2 = wrap_unit(traj[2] - traj[1])
    d1 = np.hypot(v1[..., 0], v1[..., 1])
    d2 = np.hypot(v2[..., 0], v2[..., 1])
    with np.errstate(invalid="ignore", divide="ignore"):
        cosang = (v1 * v2).sum(axis=-1) / (d1 * d2)
        theta = np.arccos(np.clip(cosang, -1.0, 1.0))
    theta = np.where((d1 < threshold) | (d2 < threshold), 0.0, theta)
    return np.nan_to_num(d1 + d2 + theta, nan=0.0)


def evaluate(g: np.ndarray, spec: TaskSpec, episode_seed: int,
             mode: str = "flow", dtype=np.float64) -> float:
    """Single-genotype fitness (batched path with B = 1)."""
    fitness, _ = evaluate_population(np.atleast_2d(g), spec, episode_seed,
                                     mode=mode, dtype=dtype)
    return float(fitness[0])


# ---------------------------------------------------------------------------
# OpenES with Adam
# ---------------------------------------------------------------------------

class Adam:
    """Adam with bias correction; ``ascend`` maximizes."""

    def __init__(self, n_params: int, lr: float = 0.01, beta1: float = 0.9,
                 beta2: float = 0.999, epsilon: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.m = np.zeros(n_params)
        self.v = np.zeros(n_params)
        self.t = 0

    def ascend(self, params: np.ndarray, gradient: np.ndarray) -> np.ndarray:
        self.t += 1
        a = self.lr * np.sqrt(1 - self.beta2 ** self.t) / (1 - self.beta1 ** self.t)
        self.m = self.beta1 * self.m + (1 - self.beta1) * gradient
        self.v = self.beta2 * self.v + (1 - self.beta2) * gradient * gradient
        return params + a * self.m / (np.sqrt(self.v) + self.epsilon)

    def state_dict(self) -> dict:
        return {"m": self.m.tolist(), "v": self.v.tolist(), "t": self.t}

    def load_state_dict(self, state: dict) -> None:
        self.m = np.array(state["m"])
        self.v = np.array(state["v"])
        self.t = int(state["t"])


@dataclass
class ESConfig:
    population: int = 16
    perturbation_sigma: float = 0.05
    learning_rate: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    generations: int = 100
    antithetic: bool = True
    rank_shaping: bool = True

    def __post_init__(self):
        if self.antithetic and self.population % 2:
            raise ValueError("population must be even with antithetic sampling")


def centered_ranks(fitness: np.ndarray) -> np.ndarray:
    """Map fitnesses to centered ranks in [-0.5, 0.5]; NaN ranks lowest."""
    f = np.where(np.isnan(fitness), -np.inf, fitness)
    ranks = np.empty(len(f))
    ranks[np.argsort(f, kind="stable")] = np.arange(len(f))
    return ranks / (len(f) - 1) - 0.5


def es_gradient(fitness: np.ndarray, perturbations: np.ndarray, sigma: float,
                rank_shaping: bool = True) -> np.ndarray:
    shaped = centered_ranks(fitness) if rank_shaping else np.nan_to_num(fitness)
    return shaped @ perturbations / (len(fitness) * sigma)


def open_es_run(cfg: ESConfig, spec: TaskSpec | None, seed: int,
                fitness_fn=None, mode: str = "flow", dtype=np.float32,
                n_genes: int | None = None, state: dict | None = None,
                on_generation=None):
    """Run OpenES; returns ``(history, state)``.

    ``fitness_fn(genotypes, generation) -> fitness`` overrides the simulator
    (surrogate benchmarks, tests); otherwise ``spec`` drives batched
    rollouts with a fresh episode seed per generation, shared across the
    population.  ``state`` resumes from an earlier return value; history
    rows carry per-generation stats and the best-ever genotype.
    """
    if fitness_fn is None and spec is None:
        raise ValueError("need a TaskSpec or a fitness_fn")
    n = n_genes if n_genes is not None else spec.n_genes
    rng = np.random.Generator(np.random.Philox(seed))
    mean = rng.random(n)
    adam = Adam(n, lr=cfg.learning_rate, beta1=cfg.beta1, beta2=cfg.beta2,
                epsilon=cfg.epsilon)
    start_gen = 0
    best_fitness = -np.inf
    best_genotype = mean.copy()
    if state is not None:
        mean = np.array(state["mean"])
        adam.load_state_dict(state["adam"])
        rng.bit_generator.state = state["rng"]
        start_gen = int(state["generation"])
        best_fitness = float(state["best_fitness"])
        best_genotype = np.array(state["best_genotype"])
    history = []
    for gen in range(start_gen, start_gen + cfg.generations):
        if cfg.antithetic:
            half = rng.standard_normal((cfg.population // 2, n))
            eps = np.concatenate([half, -half])
        else:
            eps = rng.standard_normal((cfg.population, n))
        episode_seed = int(rng.integers(0, 2 ** 62))
        candidates = mean + cfg.perturbation_sigma * eps
        if fitness_fn is not None:
            fitness = np.asarray(fitness_fn(candidates, gen), dtype=np.float64)
        else:
            fitness, _ = evaluate_population(candidates, spec, episode_seed,
                                             mode=mode, dtype=dtype)
        gen_best = int(np.nanargmax(fitness))
        if fitness[gen_best] > best_fitness:
            best_fitness = float(fitness[gen_best])
            best_genotype = candidates[gen_best].copy()
        grad = es_gradient(fitness, eps, cfg.perturbation_sigma,
                           rank_shaping=cfg.rank_shaping)
        mean = adam.ascend(mean, grad)
        row = {
            "generation": gen,
            "best_fitness": float(np.nanmax(fitness)),
            "mean_fitness": float(np.nanmean(fitness)),
            "best_ever": best_fitness,
            "episode_seed": episode_seed,
        }
        history.append(row)
        if on_generation is not None:
            on_generation(row, best_genotype)
    final_state = {
        "mean": mean.tolist(),
        "adam": adam.state_dict(),
        "rng": rng.bit_generator.state,
        "generation": start_gen + cfg.generations,
        "best_fitness": best_fitness,
        "best_genotype": best_genotype.tolist(),
    }
    return history, final_state
