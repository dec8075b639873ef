"""Configuration schema: one JSON-serializable description of a simulation."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

from flowlenia.rules import RuleSet, ruleset_from_dict, ruleset_to_dict

SCHEMA_VERSION = 1

MODES = ("flow", "lenia")
MIXING_MODES = ("average", "softmax_sample")
PRECISIONS = ("double", "single")


@dataclass
class SimConfig:
    """Everything needed to reconstruct a run deterministically."""

    width: int = 64
    height: int = 64
    channels: int = 1
    M: list[list[int]] | None = None    # None: [[10]] for C=1, [[3,2],[2,3]] for C=2
    mode: str = "flow"
    seed: int = 0
    rules: RuleSet | None = None        # None: sampled from seed
    # flow hyperparameters applied when rules are sampled
    s: float = 0.65
    n: float = 2.0
    theta_A: float = 2.0
    dt: float = 0.2
    d_max: float = 5.0
    # parameter embedding
    embedding: bool = False
    mixing: str = "average"
    crossover: bool = False
    mutation_period: int = 500
    mutation_radius: float = 8.0
    mutation_sigma: float = 0.0
    # ecology
    rho_decay: float = 0.0
    rho_digest: float = 0.0
    wall_strength: float = 10.0
    static_layers: list[str] = field(default_factory=list)  # subset of {walls, chem}
    # run setup
    patch_side: int = 40
    precision: str = "double"
    frame_stride: int = 10
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.mixing not in MIXING_MODES:
            raise ValueError(f"mixing must be one of {MIXING_MODES}")
        if self.precision not in PRECISIONS:
            raise ValueError(f"precision must be one of {PRECISIONS}")
        if self.width < 3 or self.height < 3:
            raise ValueError("grid must be at least 3x3")
        if any(layer not in ("walls", "chem") for layer in self.static_layers):
            raise ValueError("static_layers entries must be 'walls' or 'chem'")

    def default_M(self) -> list[list[int]]:
        if self.M is not None:
            return self.M
        if self.channels == 1:
            return [[10]]
        if self.channels == 2:
            return [[3, 2], [2, 3]]
        return [[1] * self.channels for _ in range(self.channels)]

    def to_dict(self) -> dict:
        d = asdict(self)
        if self.rules is None or isinstance(self.rules, dict):
            d["rules"] = self.rules
        else:
            d["rules"] = ruleset_to_dict(self.rules)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "SimConfig":
        data = dict(data)
        version = data.pop("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema version {version}")
        rules = data.pop("rules", None)
        cfg = cls(rules=None if rules is None else ruleset_from_dict(rules), **data)
        return cfg

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_json(cls, text: str) -> "SimConfig":
        return cls.from_dict(json.loads(text))


def load_config(path) -> SimConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return SimConfig.from_json(fh.read())


def save_config(path, cfg: SimConfig) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(cfg.to_json(indent=2))
        fh.write("\n")
