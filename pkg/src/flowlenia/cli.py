"""Command-line entry points: simulate | search | evolve | serve | render.

Batch runs write line-delimited JSON records next to their figures so the
same directory doubles as a report.  The ``FLOWLENIA_THREADS`` environment
variable caps BLAS/FFT thread counts (set before numpy loads).
"""

from __future__ import annotations

import dataclasses
import json
import os
from pathlib import Path


def _apply_thread_limit() -> None:
    threads = os.environ.get("FLOWLENIA_THREADS")
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
            os.environ.setdefault(var, threads)


_apply_thread_limit()

import click
import numpy as np

from flowlenia.checkpoint import load_checkpoint, save_checkpoint
from flowlenia.config import SimConfig, load_config, save_config
from flowlenia.evolve import (ESConfig, TASKS, decode, default_task,
                              open_es_run, place_patch)
from flowlenia.explore import run_random_search
from flowlenia.frames import encode_frame, read_frame, write_frame
from flowlenia.render import evolve_figure, frame_to_png, search_figures
from flowlenia.rules import ruleset_to_dict
from flowlenia.sim import ConservationError, Simulation


@click.group()
def main():
    """Mass-conservative continuous cellular automaton workbench."""


def _load_or_default_config(config_path, precision):
    cfg = load_config(config_path) if config_path else SimConfig()
    if precision:
        cfg = dataclasses.replace(cfg, precision=precision)
    return cfg


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True),
              help="Simulation config JSON; defaults apply if omitted.")
@click.option("--steps", default=200, show_default=True)
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--precision", type=click.Choice(["single", "double"]),
              default=None, help="Override the config's precision mode.")
@click.option("--png/--no-png", default=False, show_default=True,
              help="Also write composite PNGs next to raw frames.")
def simulate(config_path, steps, out_dir, precision, png):
    """Run one rollout; write frames, a step log, and a final checkpoint."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = _load_or_default_config(config_path, precision)
    try:
        sim = Simulation(cfg)
    except ValueError as exc:
        raise click.ClickException(f"invalid config: {exc}")
    save_config(out / "config.json", sim.config)
    stride = max(1, cfg.frame_stride)

    def emit(simulation):
        frame = encode_frame(simulation.step_index, simulation.A)
        write_frame(out, frame)
        if png:
            frame_to_png(frame, out / f"frame_{simulation.step_index:08d}.png")

    emit(sim)
    with open(out / "steps.jsonl", "w") as log:
        def on_step(simulation):
            report = simulation.last_report
            log.write(json.dumps({
                "step": simulation.step_index,
                "pre_mass": np.asarray(report.pre_mass).tolist(),
                "post_mass": np.asarray(report.post_mass).tolist(),
                "relative_drift": np.asarray(report.relative_drift()).tolist(),
                "max_displacement": report.max_displacement,
                "clamped_fraction": report.clamped_fraction,
            }) + "\n")
            if simulation.step_index % stride == 0:
                emit(simulation)

        try:
            sim.run(steps, on_step=on_step, watchdog=cfg.mode == "flow")
        except ConservationError as exc:
            raise click.ClickException(str(exc))
    save_checkpoint(out / "final.ckpt.npz", sim)
    click.echo(f"simulated {steps} steps -> {out}")


@main.command()
@click.option("--seed", default=0, show_default=True)
@click.option("--count", default=100, show_default=True)
@click.option("--size", default=64, show_default=True, help="Grid side length.")
@click.option("--channels", default=1, show_default=True)
@click.option("--steps", default=1000, show_default=True)
@click.option("--mode", type=click.Choice(["flow", "lenia"]), default="flow",
              show_default=True)
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--top-k", default=5, show_default=True,
              help="Checkpoints kept for the fastest localized patterns.")
def search(seed, count, size, channels, steps, mode, out_dir, top_k):
    """Random parameter search; JSONL report, figures, top-k checkpoints."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records = []
    with open(out / "report.jsonl", "w") as report:
        def on_record(rec):
            row = {"index": rec.index, "seed": rec.seed, "error": rec.error}
            if rec.rules is not None:
                row["rules"] = ruleset_to_dict(rec.rules)
            if rec.stats is not None:
                row.update(rec.stats.to_dict())
            report.write(json.dumps(row) + "\n")
            click.echo(f"[{rec.index + 1}/{count}] "
                       + (f"error: {rec.error}" if rec.error
                          else f"speed={rec.stats.mean_speed:.4f} "
                               f"localized={rec.stats.localized}"))
            records.append(rec)

        run_random_search(seed, count, dims=(size, size), C=channels,
                          steps=steps, mode=mode, on_record=on_record)
    figures = search_figures(records, out)
    ranked = sorted((r for r in records if r.stats is not None),
                    key=lambda r: r.stats.mean_speed, reverse=True)
    for rank, rec in enumerate(ranked[:top_k]):
        cfg = SimConfig(width=size, height=size, channels=channels,
                        mode=mode, seed=rec.seed, rules=rec.rules)
        save_checkpoint(out / f"top{rank:02d}_sample{rec.index:04d}.ckpt.npz",
                        Simulation(cfg))
    click.echo(f"wrote {count} records, {len(figures)} figures -> {out}")


@main.command()
@click.option("--task", type=click.Choice(TASKS), default="directed_motion",
              show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--generations", default=150, show_default=True)
@click.option("--population", default=16, show_default=True)
@click.option("--size", default=64, show_default=True)
@click.option("--kernels-per-pair", "k_per_pair", default=None, type=int,
              help="Override kernel counts: every wiring entry gets this many.")
@click.option("--baseline-lenia", is_flag=True,
              help="Evolve under the non-conservative update for comparison.")
@click.option("--precision", type=click.Choice(["single", "double"]),
              default="single", show_default=True)
@click.option("--resume", "resume_path", type=click.Path(exists=True),
              help="Continue from a state JSON written by a previous run.")
@click.option("--out", "out_dir", type=click.Path(), required=True)
def evolve(task, seed, generations, population, size, k_per_pair,
           baseline_lenia, precision, resume_path, out_dir):
    """Evolution-strategies training; history JSONL, curves, best genotype."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    overrides = {}
    if k_per_pair is not None:
        base = default_task(task, dims=(size, size))
        overrides["M"] = [[k_per_pair if k else 0 for k in row]
                          for row in base.M]
    spec = default_task(task, dims=(size, size), **overrides)
    cfg = ESConfig(population=population, generations=generations)
    state = None
    if resume_path:
        with open(resume_path) as fh:
            state = json.load(fh)
        state["rng"] = _rng_state_from_json(state["rng"])
    mode = "lenia" if baseline_lenia else "flow"
    dtype = np.float32 if precision == "single" else np.float64
    history_path = out / "history.jsonl"
    with open(history_path, "a" if resume_path else "w") as log:
        def on_generation(row, best_genotype):
            log.write(json.dumps(row) + "\n")
            log.flush()
            click.echo(f"gen {row['generation']:4d}  "
                       f"best {row['best_fitness']:.5f}  "
                       f"mean {row['mean_fitness']:.5f}  "
                       f"ever {row['best_ever']:.5f}")

        _, final_state = open_es_run(cfg, spec, seed, mode=mode,
                                     dtype=dtype, state=state,
                                     on_generation=on_generation)
    state_out = dict(final_state)
    state_out["rng"] = _rng_state_to_json(state_out["rng"])
    with open(out / "state.json", "w") as fh:
        json.dump(state_out, fh)
    best = np.array(final_state["best_genotype"])
    rules, patch = decode(best, spec)
    ckpt_cfg = SimConfig(width=size, height=size, channels=spec.C,
                         mode=mode, seed=seed, rules=rules,
                         patch_side=spec.patch_side)
    sim = Simulation(ckpt_cfg, A=place_patch(patch, spec.dims))
    save_checkpoint(out / "best.ckpt.npz", sim)
    all_rows = [json.loads(line) for line in open(history_path)]
    evolve_figure(all_rows, out)
    click.echo(f"finished at generation {final_state['generation']} -> {out}")


def _rng_state_to_json(state):
    def default(obj):
        if isinstance(obj, np.ndarray):
            return {"__nd__": obj.tolist(), "dtype": str(obj.dtype)}
        if isinstance(obj, np.integer):
            return int(obj)
        raise TypeError(type(obj))
    return json.loads(json.dumps(state, default=default))


def _rng_state_from_json(state):
    def restore(obj):
        if isinstance(obj, dict):
            if "__nd__" in obj:
                return np.array(obj["__nd__"], dtype=obj["dtype"])
            return {k: restore(v) for k, v in obj.items()}
        return obj
    return restore(state)


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
def serve(config_path, host, port):
    """Start the live session server (HTTP control + WebSocket frames)."""
    import uvicorn

    from flowlenia.server import create_app
    app = create_app()
    if config_path:
        app.state.default_config = load_config(config_path).to_dict()
    uvicorn.run(app, host=host, port=port)


@main.command()
@click.argument("frame_path", type=click.Path(exists=True))
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Target PNG; defaults to the frame path with .png.")
def render(frame_path, out_path):
    """Composite a raw frame file into a PNG."""
    frame = read_frame(frame_path)
    target = Path(out_path) if out_path else Path(frame_path).with_suffix(".png")
    frame_to_png(frame, target)
    click.echo(str(target))


if __name__ == "__main__":
    main()
