"""Checkpoints: lossless snapshots that resume bitwise-identically.

A checkpoint is a single ``.npz`` holding the exact state arrays plus JSON
blobs for the configuration, the live rule set (which may have drifted from
the config through interactive edits) and the counter-based rng state.
"""

from __future__ import annotations

import json

import numpy as np

from flowlenia.config import SimConfig
from flowlenia.rules import ruleset_from_dict, ruleset_to_dict
from flowlenia.sim import Simulation

FORMAT_VERSION = 1


def _encode_rng_state(state: dict) -> str:
    def default(o):
        if isinstance(o, np.ndarray):
            return {"__ndarray__": o.tolist(), "dtype": str(o.dtype)}
        if isinstance(o, (np.integer,)):
            return int(o)
        raise TypeError(type(o))

    return json.dumps(state, default=default)


def _decode_rng_state(text: str) -> dict:
    def hook(d):
        if "__ndarray__" in d:
            return np.array(d["__ndarray__"], dtype=d["dtype"])
        return d

    return json.loads(text, object_hook=hook)


def save_checkpoint(path, sim: Simulation) -> None:
    arrays = {"A": sim.A}
    if sim.P is not None:
        arrays["P"] = sim.P
    if sim.food is not None:
        arrays["food"] = sim.food
    if sim.walls is not None:
        arrays["walls"] = sim.walls
    if sim.chem is not None:
        arrays["chem"] = sim.chem
    np.savez(
        path,
        format_version=FORMAT_VERSION,
        step=sim.step_index,
        config=sim.config.to_json(),
        rules=json.dumps(ruleset_to_dict(sim.rules)),
        rng=_encode_rng_state(sim.rng_state()),
        **arrays,
    )


def load_checkpoint(path) -> Simulation:
    with np.load(path, allow_pickle=False) as data:
        version = int(data["format_version"])
        if version != FORMAT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        config = SimConfig.from_json(str(data["config"]))
        rules = ruleset_from_dict(json.loads(str(data["rules"])))
        rng_state = _decode_rng_state(str(data["rng"]))
        return Simulation(
            config,
            A=data["A"],
            P=data["P"] if "P" in data else None,
            food=data["food"] if "food" in data else None,
            walls=data["walls"] if "walls" in data else None,
            chem=data["chem"] if "chem" in data else None,
            rng_state=rng_state,
            rules=rules,
            step_index=int(data["step"]),
        )
