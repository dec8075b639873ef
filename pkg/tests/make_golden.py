"""Regenerate tests/data/traveler.ckpt.npz and its metadata sidecar.

Picks the fastest localized pattern from a seeded random search, saves its
step-0 state as a checkpoint, and records the center-of-mass displacement
after a fixed number of steps so tests can replay and compare.

Run from the repository root:  python3 tests/make_golden.py
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from flowlenia.checkpoint import load_checkpoint, save_checkpoint
from flowlenia.config import SimConfig
from flowlenia.explore import center_of_mass, init_patch, run_random_search, toroidal_travel
from flowlenia.sim import Simulation

SEARCH_SEED = 42
SETTLE_STEPS = 1000   # burn past the noisy transient before checkpointing
STEPS = 500           # replay horizon recorded in the metadata
DATA_DIR = Path(__file__).parent / "data"


def main() -> None:
    records = run_random_search(SEARCH_SEED, 100, dims=(64, 64), C=1,
                                steps=1000, patch_side=16)
    best = max(
        (r for r in records if r.stats is not None and r.stats.localized),
        key=lambda r: float(toroidal_travel(r.stats.com_trajectory[0],
                                            r.stats.com_trajectory[-1])),
    )
    # Rebuild the exact initial state of that sample.
    ss = np.random.SeedSequence(SEARCH_SEED).spawn(100)[best.index]
    rng = np.random.Generator(np.random.Philox(ss))
    from flowlenia.explore import sample_ruleset

    rules = sample_ruleset(rng, 1, [[10]])
    A0 = init_patch(rng, (64, 64), patch_side=16, C=1)

    cfg = SimConfig(width=64, height=64, channels=1, rules=rules,
                    seed=SEARCH_SEED)
    sim = Simulation(cfg, A=A0)
    sim.run(SETTLE_STEPS)
    DATA_DIR.mkdir(exist_ok=True)
    ckpt = DATA_DIR / "traveler.ckpt.npz"
    save_checkpoint(ckpt, sim)

    replay = load_checkpoint(ckpt)
    start = center_of_mass(replay.A)
    replay.run(STEPS)
    final = center_of_mass(replay.A)
    meta = {
        "search_seed": SEARCH_SEED,
        "sample_index": best.index,
        "settle_steps": SETTLE_STEPS,
        "steps": STEPS,
        "start_com": [float(x) for x in start],
        "final_com": [float(x) for x in final],
        "travel": float(toroidal_travel(start, final)),
        "travel_cells": float(toroidal_travel(start, final)) * 64.0,
    }
    (DATA_DIR / "traveler.json").write_text(json.dumps(meta, indent=2) + "\n")
    print(json.dumps(meta, indent=2))


if __name__ == "__main__":
    main()
