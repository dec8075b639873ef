"""Per-step orchestration of engine, embedding and ecology.

:class:`Simulation` owns the mutable run state (matter, parameter map,
ecology layers, rng, step index) and composes the pure primitives in the
documented order: affinity -> alpha -> flow -> scatter, then parameter
mixing (from the same pre-step flow), then food digestion and decay.  All
interactive edits (brushes, parameter changes) go through methods here so
the session server can apply them atomically between steps.
"""

from __future__ import annotations

import numpy as np

from flowlenia import ecology as eco_mod
from flowlenia import embedding as emb
from flowlenia.config import SimConfig
from flowlenia.engine import StepReport, flow_field, reintegration_step
from flowlenia.explore import init_patch, sample_ruleset
from flowlenia.grids import fast_mass, total_mass
from flowlenia.rules import CompiledRules, RuleSet, ruleset_from_dict

#: Parameter ranges the live session will accept.
SANCTIONED_RANGES = {
    "s": (0.5, 2.0),
    "dt": (0.01, 1.0),
    "theta_A": (0.1, 20.0),
    "n": (1.0, 10.0),
    "h": (0.0, 1.0),
    "mu": (0.05, 0.5),
    "sigma": (0.001, 0.2),
}

#: Per-step relative mass drift triggering the conservation watchdog.
CONSERVATION_TOLERANCE = {"double": 1e-10, "single": 1e-5}


class ConservationError(RuntimeError):
    """Mass drifted beyond the active precision tolerance."""


class Simulation:
    """One running world, stepped synchronously."""

    def __init__(self, config: SimConfig, *, A=None, P=None, food=None,
                 walls=None, chem=None, rng_state=None, rules=None,
                 step_index: int = 0):
        self.config = config
        self.dims = (config.height, config.width)
        self.dtype = np.float64 if config.precision == "double" else np.float32
        self.rng = np.random.Generator(np.random.Philox(config.seed))
        M = config.default_M()
        if rules is not None:
            self.rules = rules
        elif config.rules is not None:
            self.rules = (ruleset_from_dict(config.rules)
                          if isinstance(config.rules, dict) else config.rules)
        else:
            self.rules = sample_ruleset(
                self.rng, config.channels, M,
                s=config.s, n=config.n, dt=config.dt, theta_A=config.theta_A)
        if A is not None:
            self.A = np.asarray(A, dtype=self.dtype)
        else:
            side = min(config.patch_side, *self.dims)
            self.A = init_patch(self.rng, self.dims, side,
                                config.channels).astype(self.dtype)
        if config.embedding:
            if P is not None:
                self.P = np.asarray(P, dtype=self.dtype)
            else:
                h = np.asarray(self.rules.h, dtype=self.dtype)
                self.P = np.broadcast_to(
                    h[:, None, None], (len(h),) + self.dims).copy()
        else:
            self.P = None
        self.food = None if food is None else np.asarray(food, dtype=self.dtype)
        self.walls = None if walls is None else np.asarray(walls, dtype=self.dtype)
        self.chem = None if chem is None else np.asarray(chem, dtype=self.dtype)
        if self.food is None and (config.rho_digest > 0 or config.rho_decay > 0):
            self.food = np.zeros(self.dims, dtype=self.dtype)
        if rng_state is not None:
            self.rng.bit_generator.state = rng_state
        self.step_index = step_index
        self.last_report: StepReport | None = None
        self._wall_flow_cache = None
        self._compile()

    # -- setup ------------------------------------------------------------

    def _compile(self) -> None:
        self.compiled = CompiledRules.from_ruleset(
            self.rules, self.dims,
            n_matter_channels=self.config.channels, dtype=self.dtype)

    def _statics(self) -> np.ndarray | None:
        layers = []
        for name in self.config.static_layers:
            layer = self.walls if name == "walls" else self.chem
            if layer is None:
                layer = np.zeros(self.dims, dtype=self.dtype)
            layers.append(layer)
        if not layers:
            return None
        return np.stack(layers).astype(self.dtype)

    def _extra_flow(self) -> np.ndarray | None:
        if self.walls is None or not self.walls.any():
            return None
        if self._wall_flow_cache is None:
            self._wall_flow_cache = eco_mod.wall_flow(
                self.walls, strength=self.config.wall_strength).astype(self.dtype)
        return self._wall_flow_cache

    @property
    def conservation_tolerance(self) -> float:
        return CONSERVATION_TOLERANCE[self.config.precision]

    # -- stepping ---------------------------------------------------------

    def step(self, exact_mass: bool = True) -> StepReport:
        mass_fn = total_mass if exact_mass else fast_mass
        pre = mass_fn(self.A)
        statics = self._statics()
        state = self.A if statics is None else np.concatenate(
            [self.A, statics], axis=0)
        U = self.compiled.affinity(state, param_map=self.P)
        if self.config.mode == "lenia":
            self.A = np.clip(self.A + self.rules.dt * U, 0.0, 1.0)
            report = StepReport(pre_mass=pre, post_mass=mass_fn(self.A),
                                max_displacement=0.0, clamped_fraction=0.0)
        else:
            F, clamped = flow_field(U, self.A, self.rules,
                                    d_max=self.config.d_max,
                                    extra_flow=self._extra_flow())
            new_A = reintegration_step(self.A, F, self.rules.s, self.rules.dt)
            if self.P is not None:
                if self.config.mixing == "average":
                    self.P = emb.mix_average(self.P, self.A, F,
                                             self.rules.s, self.rules.dt)
                else:
                    self.P = emb.mix_softmax(self.P, self.A, F,
                                             self.rules.s, self.rules.dt,
                                             self.rng,
                                             crossover=self.config.crossover)
            self.A = new_A
            report = StepReport(pre_mass=pre, post_mass=mass_fn(self.A),
                                max_displacement=float(
                                    np.abs(self.rules.dt * F).max()),
                                clamped_fraction=clamped)
        if self.food is not None and (self.config.rho_digest > 0
                                      or self.config.rho_decay > 0):
            eco = eco_mod.EcologyState(food=self.food,
                                       rho_decay=self.config.rho_decay,
                                       rho_digest=self.config.rho_digest)
            self.A, eco = eco_mod.food_decay_update(self.A, eco)
            self.food = eco.food
        self.step_index += 1
        if (self.P is not None and self.config.mutation_sigma > 0
                and self.config.mutation_period > 0
                and self.step_index % self.config.mutation_period == 0):
            self.P = emb.mutate_zone(self.P, self.rng,
                                     self.config.mutation_radius,
                                     self.config.mutation_sigma)
        self.last_report = report
        return report

    def run(self, steps: int, on_step=None, watchdog: bool = False) -> None:
        for _ in range(steps):
            report = self.step()
            if watchdog and self.config.mode == "flow" \
                    and self.config.rho_digest == 0 and self.config.rho_decay == 0:
                drift = float(report.relative_drift().max())
                if drift > self.conservation_tolerance:
                    raise ConservationError(
                        f"mass drift {drift:.3e} beyond tolerance "
                        f"{self.conservation_tolerance:.0e} at step {self.step_index}")
            if on_step is not None:
                on_step(self)

    # -- interactive edits (applied between steps) -------------------------

    def set_param(self, name: str, value: float, index: int | None = None) -> None:
        """Update a sanctioned scalar; raises ValueError with range info."""
        if name not in SANCTIONED_RANGES:
            raise ValueError(f"parameter {name!r} is not adjustable")
        lo, hi = SANCTIONED_RANGES[name]
        value = float(value)
        if not (lo <= value <= hi):
            raise ValueError(f"{name}={value} outside sanctioned range [{lo}, {hi}]")
        if name in ("s", "dt", "theta_A", "n"):
            setattr(self.rules, name, value)
        else:
            if index is None or not (0 <= index < len(self.rules.kernels)):
                raise ValueError(f"{name} needs a kernel index in "
                                 f"[0, {len(self.rules.kernels)})")
            if name == "h":
                self.rules.h[index] = value
                self.compiled.set_h(index, value)
            elif name == "mu":
                g = self.rules.growths[index]
                self.rules.growths[index] = type(g)(mu=value, sigma=g.sigma)
                self.compiled.set_growth(index, mu=value)
            elif name == "sigma":
                g = self.rules.growths[index]
                self.rules.growths[index] = type(g)(mu=g.mu, sigma=value)
                self.compiled.set_growth(index, sigma=value)

    def get_param(self, name: str, index: int | None = None) -> float:
        if name in ("s", "dt", "theta_A", "n"):
            return float(getattr(self.rules, name))
        if name == "h":
            return float(self.rules.h[index])
        if name == "mu":
            return float(self.rules.growths[index].mu)
        if name == "sigma":
            return float(self.rules.growths[index].sigma)
        raise ValueError(f"unknown parameter {name!r}")

    def paint(self, layer: str, y: int, x: int, height: int, width: int,
              value: float, channel: int | None = None) -> None:
        """Set a cell rectangle (toroidal indices) on a layer to ``value``."""
        if value < 0:
            raise ValueError("painted values must be non-negative")
        ys = np.arange(y, y + height) % self.dims[0]
        xs = np.arange(x, x + width) % self.dims[1]
        grid = np.ix_(ys, xs)
        if layer == "matter":
            channels = [channel] if channel is not None else range(
                self.config.channels)
            for c in channels:
                self.A[(c,) + grid] = value
        elif layer == "food":
            if self.food is None:
                self.food = np.zeros(self.dims, dtype=self.dtype)
            self.food[grid] = value
        elif layer == "wall":
            if self.walls is None:
                self.walls = np.zeros(self.dims, dtype=self.dtype)
            self.walls[grid] = min(value, 1.0)
            self._wall_flow_cache = None
        else:
            raise ValueError(f"unknown layer {layer!r}")

    def erase(self, y: int, x: int, height: int, width: int) -> None:
        self.paint("matter", y, x, height, width, 0.0)

    def inject_species(self, y: int, x: int, patch_side: int,
                       params: list[float]) -> None:
        """Paint a patch of matter carrying its own parameter vector."""
        if self.P is None:
            raise ValueError("species injection requires embedding mode")
        if len(params) != self.P.shape[0]:
            raise ValueError(f"expected {self.P.shape[0]} parameters")
        ys = np.arange(y, y + patch_side) % self.dims[0]
        xs = np.arange(x, x + patch_side) % self.dims[1]
        grid = np.ix_(ys, xs)
        for c in range(self.config.channels):
            self.A[(c,) + grid] = self.rng.random((patch_side, patch_side))
        vec = np.clip(np.asarray(params, dtype=self.dtype), 0.0, 1.0)
        self.P[(slice(None),) + grid] = vec[:, None, None]

    def mutate(self, radius: float | None = None,
               sigma: float | None = None) -> None:
        if self.P is None:
            raise ValueError("mutation requires embedding mode")
        self.P = emb.mutate_zone(
            self.P, self.rng,
            self.config.mutation_radius if radius is None else radius,
            self.config.mutation_sigma if sigma is None else sigma)

    # -- state access -------------------------------------------------------

    def rng_state(self) -> dict:
        return self.rng.bit_generator.state

    def mass(self) -> np.ndarray:
        return total_mass(self.A)
