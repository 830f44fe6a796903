"""Experiment orchestration: single deterministic runs with CSV metric
logging, multi-seed benchmarks with aggregation, and the same- versus
opposite-target controversy experiment.

CSV schema (one file per run, UTF-8, "\\n" line endings, full float64
round-trip precision):

    step,return_mean,return_std,style0_return,...,style{K-1}_return,controversy,coverage

The step-0 row is the untrained policy, so curves are anchored at the
random-initialization baseline.
"""

from __future__ import annotations

import concurrent.futures
import dataclasses
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import metrics
from .agent import controversy as measure_controversy
from .agent import train
from .config import RunConfig, resolve_out_dir
from .envs import make_env
from .metrics import CoverageGrid, style_divergence
from .nets import save_params

CSV_SCHEMA_VERSION = 1


@dataclass
class EvalRow:
    step: int
    return_mean: float
    return_std: float
    per_style: list[float]
    controversy: float
    coverage: float


@dataclass
class RunResult:
    seed: int
    rows: list[EvalRow]
    max_avg_return: float
    final_coverage: float
    unique_cells: list[int] | None
    csv_path: str


def _fmt(x: float) -> str:
    return repr(float(x))


def csv_header(num_styles: int) -> str:
    styles = [f"style{j}_return" for j in range(num_styles)]
    return ",".join(["step", "return_mean", "return_std", *styles,
                     "controversy", "coverage"])


def row_to_csv(row: EvalRow) -> str:
    cells = [str(row.step), _fmt(row.return_mean), _fmt(row.return_std),
             *(_fmt(v) for v in row.per_style),
             _fmt(row.controversy), _fmt(row.coverage)]
    return ",".join(cells)


def read_csv(path) -> tuple[list[str], np.ndarray]:
    """Header columns and a float matrix (nan round-trips)."""
    lines = Path(path).read_text(encoding="utf-8").strip().split("\n")
    header = lines[0].split(",")
    data = np.array([[float(c) for c in ln.split(",")] for ln in lines[1:]])
    return header, data


def run_single(cfg: RunConfig, seed: int, csv_path=None, snapshot: bool = True) -> RunResult:
    """Train one seed, evaluating every eval_interval steps (plus step 0),
    and write the metrics CSV.  Byte-deterministic for a fixed (cfg, seed)."""
    ccep_cfg = cfg.to_ccep(seed).resolved()
    k = ccep_cfg.num_styles
    env = make_env(cfg.env, walls=cfg.maze_walls)
    eval_env = make_env(cfg.env, walls=cfg.maze_walls)

    bounds = metrics.coverage_bounds(cfg.env)
    grid = CoverageGrid(bounds, cfg.grid_resolution)
    style_grids = [CoverageGrid(bounds, cfg.grid_resolution) for _ in range(k)]

    # evaluation streams are isolated from the training stream so the
    # metric schedule can never perturb training
    eval_seed = int(np.random.SeedSequence([seed, 101]).generate_state(1)[0])
    ctrv_rng = np.random.default_rng(np.random.SeedSequence([seed, 202]))

    rows: list[EvalRow] = []

    def on_transition(t, tr):
        grid.record_visit(metrics.coverage_point(cfg.env, tr.s))
        grid.record_visit(metrics.coverage_point(cfg.env, tr.s_next))
        if t > ccep_cfg.warmup_steps:
            style_grids[tr.z].record_visit(metrics.coverage_point(cfg.env, tr.s_next))

    def on_eval(t, state):
        report = metrics.evaluate(state.actor, eval_env, cfg.eval_episodes,
                                  mode=cfg.eval_mode, seed=eval_seed)
        if state.buffer.size > 0:
            batch = state.buffer.sample(ccep_cfg.batch_size, ctrv_rng)
            ctrv = measure_controversy(state.critics, state.actor, batch.s, batch.z)
        else:
            ctrv = float("nan")
        rows.append(EvalRow(t, report.mean, report.std,
                            [float(v) for v in report.per_style_mean],
                            ctrv, grid.coverage()))

    state = train(ccep_cfg, env, on_transition=on_transition, on_eval=on_eval,
                  eval_interval=cfg.eval_interval)

    assert all(a.step < b.step for a, b in zip(rows, rows[1:]))
    if csv_path is not None:
        csv_path = Path(csv_path)
        csv_path.parent.mkdir(parents=True, exist_ok=True)
        text = csv_header(k) + "\n" + "".join(row_to_csv(r) + "\n" for r in rows)
        csv_path.write_bytes(text.encode("utf-8"))
        if snapshot:
            for name, net in zip(_snapshot_names(state), _snapshot_nets(state)):
                save_params(net, csv_path.with_suffix(f".{name}.params"))

    unique = None
    if k >= 2:
        unique = style_divergence(style_grids).unique_cells
    return RunResult(
        seed=seed,
        rows=rows,
        max_avg_return=max(r.return_mean for r in rows),
        final_coverage=grid.coverage(),
        unique_cells=unique,
        csv_path=str(csv_path) if csv_path is not None else "",
    )


def _snapshot_nets(state):
    nets = state.actor.parameter_nets() + [state.critics.net1]
    if state.critics.twin:
        nets.append(state.critics.net2)
    return nets


def _snapshot_names(state):
    actors = state.actor.parameter_nets()
    names = ["actor"] if len(actors) == 1 else [f"actor{j}" for j in range(len(actors))]
    names.append("critic1")
    if state.critics.twin:
        names.append("critic2")
    return names


def run_name(cfg: RunConfig, seed: int) -> str:
    return f"{cfg.algorithm}_{cfg.env}_seed{seed}"


@dataclass
class BenchResult:
    results: list[RunResult]
    failures: list[tuple[int, str]]
    aggregate_path: str
    max_avg_return: float


def bench(cfg: RunConfig, workers: int = 1) -> BenchResult:
    """Run every seed independently, then aggregate.

    Per-seed CSVs are written next to an aggregate CSV holding, per step,
    the across-seed mean and (population) std of the evaluation return plus
    mean controversy and coverage.  Aggregation is order-invariant in the
    seed list.  A failed seed is reported but does not discard the rest.
    """
    out = resolve_out_dir(cfg)
    out.mkdir(parents=True, exist_ok=True)
    jobs = {seed: str(out / f"{run_name(cfg, seed)}.csv") for seed in cfg.seeds}

    results: list[RunResult] = []
    failures: list[tuple[int, str]] = []
    if workers > 1 and len(cfg.seeds) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            futs = {pool.submit(run_single, cfg, seed, path): seed
                    for seed, path in jobs.items()}
            for fut in concurrent.futures.as_completed(futs):
                seed = futs[fut]
                try:
                    results.append(fut.result())
                except Exception as e:  # keep completed seeds
                    failures.append((seed, str(e)))
    else:
        for seed, path in jobs.items():
            try:
                results.append(run_single(cfg, seed, path))
            except Exception as e:
                failures.append((seed, str(e)))

    results.sort(key=lambda r: cfg.seeds.index(r.seed))
    agg_path = out / f"{cfg.algorithm}_{cfg.env}_aggregate.csv"
    max_avg = _write_aggregate(results, agg_path)
    return BenchResult(results, failures, str(agg_path), max_avg)


def _write_aggregate(results: list[RunResult], path: Path) -> float:
    if not results:
        raise ValueError("no successful runs to aggregate")
    steps = [r.step for r in results[0].rows]
    for res in results[1:]:
        if [r.step for r in res.rows] != steps:
            raise ValueError("seed runs disagree on evaluation steps")
    lines = ["step,return_mean,return_std,controversy_mean,coverage_mean"]
    max_avg = -np.inf
    for i, step in enumerate(steps):
        returns = np.array([res.rows[i].return_mean for res in results])
        ctrv = np.array([res.rows[i].controversy for res in results])
        cov = np.array([res.rows[i].coverage for res in results])
        mean = float(returns.mean())
        max_avg = max(max_avg, mean)
        ctrv_mean = float(np.nanmean(ctrv)) if not np.all(np.isnan(ctrv)) else float("nan")
        lines.append(",".join([str(step), _fmt(mean), _fmt(float(returns.std())),
                               _fmt(ctrv_mean), _fmt(float(cov.mean()))]))
    path.write_bytes(("\n".join(lines) + "\n").encode("utf-8"))
    return float(max_avg)


def end_of_run_controversy(rows: list[EvalRow], tail: int = 5) -> float:
    """Mean controversy over the last `tail` evaluation rows (nan-safe)."""
    vals = np.array([r.controversy for r in rows[-tail:]])
    return float(np.nanmean(vals)) if not np.all(np.isnan(vals)) else float("nan")


@dataclass
class ControversyComparison:
    seeds: list[int]
    same_target: list[float]
    opposite_target: list[float]

    @property
    def wins(self) -> int:
        return sum(1 for s, o in zip(self.same_target, self.opposite_target) if o > s)


def controversy_experiment(cfg: RunConfig, workers: int = 1) -> ControversyComparison:
    """Train twin-critic baselines with same versus opposite targets and
    compare end-of-run critic disagreement per seed."""
    base = dataclasses.replace(cfg, algorithm="td3")
    variants = {
        "same": dataclasses.replace(base, opposite_targets=False,
                                    out_dir=str(Path(cfg.out_dir) / "same_target")),
        "opposite": dataclasses.replace(base, opposite_targets=True,
                                        out_dir=str(Path(cfg.out_dir) / "opposite_target")),
    }
    values = {}
    for tag, vcfg in variants.items():
        res = bench(vcfg, workers=workers)
        if res.failures:
            raise RuntimeError(f"controversy-exp {tag} failed for seeds {res.failures}")
        values[tag] = [end_of_run_controversy(r.rows) for r in res.results]
    return ControversyComparison(list(cfg.seeds), values["same"], values["opposite"])
