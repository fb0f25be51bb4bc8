"""Seeded experiment campaigns: run, aggregate, plot and replay."""
from __future__ import annotations

import csv
import json
import logging
import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .coin_game import ACTION_NAMES, COLOR_NAMES, EpisodeMetrics
from .evolution import (
    EVAL,
    INIT,
    EvoConfig,
    Individual,
    elite_index,
    eval_stream,
    evaluate_population,
    next_generation,
    play_episode,
    rng_for,
    stream,
)
from .genomes import genome_from_dict, genome_to_dict, random_genome
from .policy import NNGenome, RandomGenome

log = logging.getLogger(__name__)

CONCEPTS = ("fixed", "layer", "gate", "prototype", "nn", "random")

CONCEPT_DEFAULTS = {
    "fixed": dict(strategy="mu", layers=4, sigma_p=0.01, sigma_a=0.0),
    "layer": dict(strategy="archmu", layers=1, sigma_p=0.05, sigma_a=10.0),
    "prototype": dict(strategy="archmu", layers=8, gates=18, sigma_p=0.05, sigma_a=10.0),
    "gate": dict(strategy="archmu", gates=70, sigma_p=0.01, sigma_a=1.0),
    "nn": dict(strategy="mu", sigma_p=0.01, sigma_a=0.0),
    "random": dict(strategy="mu", sigma_p=0.0, sigma_a=0.0),
}
TRUNCATION_SIZE = 5
TOURNAMENT_FRACTION = 0.4
REMU_RATE = 0.1

RECORD_COLUMNS = (
    "seed",
    "generation",
    "best_score",
    "avg_score",
    "best_total_coins",
    "avg_total_coins",
    "best_own_coins",
    "avg_own_coins",
    "best_own_coin_rate",
    "avg_own_coin_rate",
    "best_gates",
    "best_param_gates",
    "best_params",
)
METRIC_COLUMNS = RECORD_COLUMNS[2:]
TIMING_COLUMNS = ("seed", "generation", "seconds")


@dataclass
class ExperimentConfig:
    concept: str = "gate"
    strategy: Optional[str] = None
    generations: int = 200
    population: int = 250
    steps: int = 50
    selection: Optional[int] = None
    sigma_p: Optional[float] = None
    sigma_a: Optional[float] = None
    rate: Optional[float] = None
    layers: Optional[int] = None
    gates: Optional[int] = None
    hidden: tuple = (64, 64)
    qubits: int = 6
    seeds: list = field(default_factory=lambda: [0])
    out: str = "runs"
    jobs: Optional[int] = None
    fixed_eval_seed: bool = False
    checkpoint: bool = True

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        doc = dict(doc)
        if "hidden" in doc:
            doc["hidden"] = tuple(doc["hidden"])
        return cls(**doc)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as f:
            return cls.from_dict(json.load(f))

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["hidden"] = list(self.hidden)
        return doc

    def resolved(self) -> "ExperimentConfig":
        """Fill every unset field with the concept's default."""
        if self.concept not in CONCEPTS:
            raise ValueError(f"unknown concept {self.concept!r}; choose from {CONCEPTS}")
        defaults = CONCEPT_DEFAULTS[self.concept]
        cfg = replace(self, seeds=list(self.seeds), hidden=tuple(self.hidden))
        for key, value in defaults.items():
            if getattr(cfg, key) is None:
                setattr(cfg, key, value)
        tournament = cfg.strategy in ("archmu", "archremu")
        if cfg.selection is None:
            size = round(TOURNAMENT_FRACTION * cfg.population) if tournament else TRUNCATION_SIZE
            cfg.selection = min(max(1, size), cfg.population)
        if cfg.rate is None:
            cfg.rate = REMU_RATE if cfg.strategy == "archremu" else 1.0
        if cfg.jobs is None:
            cfg.jobs = os.cpu_count() or 1
        if not cfg.seeds:
            raise ValueError("need at least one seed")
        return cfg

    def evo_config(self) -> EvoConfig:
        cfg = self.resolved()
        return EvoConfig(
            generations=cfg.generations,
            population=cfg.population,
            steps=cfg.steps,
            selection=cfg.selection,
            sigma_p=cfg.sigma_p,
            sigma_a=cfg.sigma_a,
            rate=cfg.rate,
            strategy=cfg.strategy,
            fixed_eval_seed=cfg.fixed_eval_seed,
        )

    @property
    def stem(self) -> str:
        cfg = self.resolved()
        return f"{cfg.concept}_{cfg.strategy}"


def new_genome(cfg: ExperimentConfig, rng: np.random.Generator):
    if cfg.concept == "random":
        return RandomGenome()
    if cfg.concept == "nn":
        return NNGenome.random(cfg.hidden, rng)
    return random_genome(cfg.concept, rng, cfg.qubits, layers=cfg.layers, gates=cfg.gates)


def initial_population(cfg: ExperimentConfig, seed: int) -> list[Individual]:
    return [Individual(new_genome(cfg, rng_for(seed, INIT, i))) for i in range(cfg.population)]


def generation_record(population: Sequence[Individual], seed: int, generation: int) -> dict:
    best = population[elite_index(population)]
    metrics = [ind.metrics for ind in population]
    gates, param_gates = best.genome.gate_count()
    return {
        "seed": seed,
        "generation": generation,
        "best_score": best.metrics.score,
        "avg_score": float(np.mean([m.score for m in metrics])),
        "best_total_coins": best.metrics.total_coins,
        "avg_total_coins": float(np.mean([m.total_coins for m in metrics])),
        "best_own_coins": best.metrics.own_coins,
        "avg_own_coins": float(np.mean([m.own_coins for m in metrics])),
        "best_own_coin_rate": best.metrics.own_coin_rate,
        "avg_own_coin_rate": float(np.mean([m.own_coin_rate for m in metrics])),
        "best_gates": gates,
        "best_param_gates": param_gates,
        "best_params": best.genome.param_count(),
    }


# -- checkpoints -------------------------------------------------------------

def checkpoint_path(cfg: ExperimentConfig, seed: int) -> Path:
    return Path(cfg.out) / f"{cfg.stem}_seed{seed}.json"


def save_checkpoint(path: Path, cfg: ExperimentConfig, seed: int, generation: int,
                    population: Sequence[Individual], records: list, timings: list) -> None:
    elite = elite_index(population)
    key = eval_stream(seed, generation, elite, cfg.fixed_eval_seed)
    doc = {
        "config": cfg.to_dict(),
        "seed": seed,
        "generation": generation,
        "elite": elite,
        "elite_eval": {"entropy": key.entropy, "spawn_key": list(key.spawn_key)},
        "population": [
            {
                "genome": genome_to_dict(ind.genome),
                "fitness": ind.fitness,
                "metrics": list(ind.metrics),
            }
            for ind in population
        ],
        "records": records,
        "timings": timings,
    }
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps(doc), encoding="utf-8")
    tmp.replace(path)


def load_checkpoint(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no checkpoint at {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
        doc["population"] = [
            Individual(genome_from_dict(p["genome"]), p["fitness"], EpisodeMetrics(*p["metrics"]))
            for p in doc["population"]
        ]
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"corrupt checkpoint {path}: {exc}") from exc
    return doc


# -- running -----------------------------------------------------------------

def run_seed(cfg: ExperimentConfig, seed: int, executor=None, resume: bool = False):
    """Evolve one seed; returns (records, timings, final evaluated population)."""
    evo = cfg.evo_config()
    ckpt = checkpoint_path(cfg, seed)
    records: list[dict] = []
    timings: list[dict] = []
    start = 0
    population = None
    if resume and ckpt.exists():
        doc = load_checkpoint(ckpt)
        records, timings = doc["records"], doc["timings"]
        population = doc["population"]
        start = doc["generation"] + 1
        if start < evo.generations:
            population = next_generation(population, evo, seed, doc["generation"])
        log.info("resuming seed %d at generation %d", seed, start)
    if population is None:
        population = initial_population(cfg, seed)

    for g in range(start, evo.generations):
        tic = time.perf_counter()
        evaluate_population(population, evo.steps, seed, g, evo.fixed_eval_seed, executor)
        records.append(generation_record(population, seed, g))
        timings.append({"seed": seed, "generation": g, "seconds": round(time.perf_counter() - tic, 6)})
        log.info("seed %d gen %d best %s avg %.3f", seed, g, records[-1]["best_score"], records[-1]["avg_score"])
        if cfg.checkpoint:
            save_checkpoint(ckpt, cfg, seed, g, population, records, timings)
        if g < evo.generations - 1:
            population = next_generation(population, evo, seed, g)
    return records, timings, population


def _write_csv(path: Path, columns: Sequence[str], rows: Iterable[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(row[k]) for k in columns})


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return value


def run_experiment(config: ExperimentConfig, resume: bool = False) -> Path:
    """Run every seed and write ``<concept>_<strategy>.csv`` (plus timings) to ``config.out``."""
    cfg = config.resolved()
    out = Path(cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    (out / f"{cfg.stem}_config.json").write_text(json.dumps(cfg.to_dict(), indent=2), encoding="utf-8")

    records: list[dict] = []
    timings: list[dict] = []
    executor = ProcessPoolExecutor(max_workers=cfg.jobs) if cfg.jobs > 1 else None
    try:
        for seed in cfg.seeds:
            rec, tim, _ = run_seed(cfg, seed, executor, resume=resume)
            records += rec
            timings += tim
    finally:
        if executor is not None:
            executor.shutdown()

    csv_path = out / f"{cfg.stem}.csv"
    _write_csv(csv_path, RECORD_COLUMNS, records)
    _write_csv(out / f"{cfg.stem}_timing.csv", TIMING_COLUMNS, timings)
    return csv_path


# -- aggregation -------------------------------------------------------------

def read_records(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.DictReader(f))
    out = []
    for row in rows:
        rec = {k: float(v) for k, v in row.items()}
        rec["seed"], rec["generation"] = int(rec["seed"]), int(rec["generation"])
        out.append(rec)
    return out


def aggregate(records: Sequence[dict], seeds: Optional[Sequence[int]] = None) -> dict:
    """Cross-seed mean and (population) standard deviation per generation.

    Returns ``{"generation": array, "<metric>_mean": array, "<metric>_std": array}``.
    """
    if seeds is None:
        seeds = sorted({r["seed"] for r in records})
    by_seed = {s: sorted((r for r in records if r["seed"] == s), key=lambda r: r["generation"]) for s in seeds}
    lengths = {len(rows) for rows in by_seed.values()}
    if len(lengths) != 1:
        raise ValueError(f"ragged records: generation counts per seed are {sorted(lengths)}")
    gens = [r["generation"] for r in by_seed[seeds[0]]]
    for s in seeds:
        if [r["generation"] for r in by_seed[s]] != gens:
            raise ValueError(f"seed {s} covers different generations")
    result = {"generation": np.array(gens, dtype=int)}
    for col in METRIC_COLUMNS:
        table = np.array([[r[col] for r in by_seed[s]] for s in seeds], dtype=np.float64)
        result[f"{col}_mean"] = table.mean(axis=0)
        result[f"{col}_std"] = table.std(axis=0)
    return result


def write_aggregate(agg: dict, path) -> None:
    columns = list(agg)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for i in range(len(agg["generation"])):
            writer.writerow([_fmt(agg[c][i].item()) for c in columns])


def read_aggregate(path) -> dict:
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.DictReader(f))
    if not rows:
        return {}
    agg = {k: np.array([float(r[k]) for r in rows]) for k in rows[0]}
    agg["generation"] = agg["generation"].astype(int)
    return agg


# -- plots -------------------------------------------------------------------

PLOTS = {
    "score": ("Score", ("best_score", "avg_score")),
    "total_coins": ("Total coins collected", ("best_total_coins", "avg_total_coins")),
    "own_coins": ("Own coins collected", ("best_own_coins", "avg_own_coins")),
    "own_coin_rate": ("Own coin rate", ("best_own_coin_rate", "avg_own_coin_rate")),
    "gate_count": ("Gate count of best agent", ("best_gates", "best_param_gates")),
}
SERIES_LABELS = {
    "best_gates": "total",
    "best_param_gates": "parameterized",
}


def render_plots(aggregated: dict, out_dir, fmt: str = "svg") -> list[Path]:
    """One line chart per metric; ``aggregated`` maps a run label to its aggregate."""
    aggregated = {k: v for k, v in aggregated.items() if v and len(v.get("generation", ())) > 0}
    if not aggregated:
        warnings.warn("no aggregated data to plot; nothing written")
        return []
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.fonttype"] = "none"

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, (title, columns) in PLOTS.items():
        fig, ax = plt.subplots(figsize=(7, 4))
        for label, agg in aggregated.items():
            x = agg["generation"]
            for col in columns:
                mean, std = agg[f"{col}_mean"], agg[f"{col}_std"]
                series = SERIES_LABELS.get(col, col.split("_", 1)[0])
                (line,) = ax.plot(x, mean, label=f"{label} ({series})")
                ax.fill_between(x, mean - std, mean + std, color=line.get_color(), alpha=0.15, linewidth=0)
        ax.set_xlabel("generation")
        ax.set_title(title)
        ax.legend(fontsize="small")
        fig.tight_layout()
        path = out_dir / f"{name}.{fmt}"
        fig.savefig(path)
        plt.close(fig)
        written.append(path)
    return written


# -- replay ------------------------------------------------------------------

def format_trace_line(t: int, state, action, rewards) -> str:
    """``t=<step> turn=<agent> red=<r>,<c> blue=<r>,<c> coin=<r>,<c> color=<red|blue> action=<name|pass> rewards=<r0>,<r1>``"""
    (r0, c0), (r1, c1) = state.agent_pos
    cr, cc = state.coin_pos
    name = "pass" if action is None else ACTION_NAMES[action]
    return (
        f"t={t} turn={state.turn} red={r0},{c0} blue={r1},{c1} coin={cr},{cc} "
        f"color={COLOR_NAMES[state.coin_color]} action={name} rewards={rewards[0]},{rewards[1]}"
    )


def replay_best(checkpoint, seed: Optional[int] = None):
    """Play one episode with a checkpoint's elite.

    Without ``seed`` the elite's own evaluation episode is reproduced; with
    ``seed`` a fresh episode from that seed is played.  Returns the trace lines
    and the episode metrics.
    """
    doc = load_checkpoint(checkpoint)
    genome = doc["population"][doc["elite"]].genome
    steps = doc["config"]["steps"]
    if seed is None:
        key = doc["elite_eval"]
        seq = np.random.SeedSequence(key["entropy"], spawn_key=tuple(key["spawn_key"]))
    else:
        seq = stream(seed, EVAL)
    trace: list = []
    metrics = play_episode(genome, steps, seq, trace)
    lines = [format_trace_line(t, *entry) for t, entry in enumerate(trace)]
    return lines, metrics
