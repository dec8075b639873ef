"""Mass-conservative continuous cellular automaton workbench.

Core layers:

- :mod:`flowlenia.grids`     toroidal field primitives (convolution, Sobel, reductions)
- :mod:`flowlenia.rules`     update-rule genome (kernels, growth functions, wiring)
- :mod:`flowlenia.engine`    the two steppers (clipped-growth baseline and flow transport)
- :mod:`flowlenia.embedding` per-cell parameter maps, mixing rules, zone mutation
- :mod:`flowlenia.ecology`   food/decay, walls, chemical fields
- :mod:`flowlenia.explore`   random search over the sampled parameter space
- :mod:`flowlenia.evolve`    OpenES + Adam optimization of rules and seed patterns
- :mod:`flowlenia.sim`       full per-step orchestration used by CLI and server
"""

from flowlenia.rules import KernelSpec, GrowthSpec, RuleSet, CompiledRules
from flowlenia.engine import StepReport, flow_lenia_step, lenia_step
from flowlenia.config import SimConfig
from flowlenia.sim import Simulation

__all__ = [
    "KernelSpec",
    "GrowthSpec",
    "RuleSet",
    "CompiledRules",
    "StepReport",
    "flow_lenia_step",
    "lenia_step",
    "SimConfig",
    "Simulation",
]

__version__ = "0.1.0"
