"""Experiment driver: generate, evaluate, label, discover, report, converge.

Every stage reads and writes plain files under one output directory::

    scenarios.csv              discretized scenario matrix
    outcomes.jsonl             one row per (scenario, mode, policy), plus the
                               no-event perfect-foresight baseline row (id 0)
    labels.csv                 success/failure per row
    discover/<mode>_<policy>/  tree.json, tree.txt, failure_paths.json,
                               failure_paths.txt, importances.csv, sweep.csv
    discover/compare_<policy>/ same, for "perfect-feasible but myopic-failed"
    report/                    curve_<mode>_<policy>.csv, summary.csv,
                               heatmap_<mode>_<policy>.csv, correlation_<mode>_<policy>.csv,
                               convergence_<mode>_<policy>.csv and SVG renderings
    converge/                  convergence tables at user checkpoints

Outputs depend only on the configuration: evaluations run in a worker pool
but rows are buffered and written in a fixed order.
"""
from __future__ import annotations

import csv
import io
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import analysis, discovery, render
from .energy_model import YEARS, EnergySystemDataset, load_dataset, shipped_dataset_path
from .pathway import (
    PathwayOutcome,
    SolveOptions,
    read_outcomes,
    solve_myopic,
    solve_perfect_foresight,
    write_outcomes,
)
from .policies import POLICY_NAMES
from .scenario_space import (
    ScenarioVector,
    build_schedule,
    generate_scenarios,
    no_event_vector,
    read_scenarios,
    write_scenarios,
)

log = logging.getLogger(__name__)

MODES = ("perfect", "myopic")
WORKERS_ENV = "PATHWAY_EVENTS_WORKERS"
BASELINE_ID = 0


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    out_dir: Path
    dataset: Path | None = None  # None selects the shipped mini-be file
    n_scenarios: int = 64
    seed_skip: int = 1
    modes: tuple[str, ...] = MODES
    policies: tuple[str, ...] = ("baseline",)
    lookahead: int = 1
    tol: float = 1e-9
    method: str = "highs"
    workers: int = 1
    basis: str = "all"
    gradient_window: float = 1.0
    max_leaves: int = 8
    max_unique_features: int | None = None
    sweep_leaves: int = 12
    purity: float = 0.9
    cv_folds: int = 5
    cv_seed: int = 0
    heatmap: tuple[str, str] = ("p03", "cum_demand")
    checkpoints: tuple[int, ...] = ()

    def validate(self) -> None:
        if self.n_scenarios < 1:
            raise ConfigError("scenario count must be >= 1")
        if self.seed_skip < 0:
            raise ConfigError("seed_skip must be >= 0")
        if self.workers < 1:
            raise ConfigError("worker count must be >= 1")
        if self.lookahead < 1:
            raise ConfigError("lookahead must be >= 1")
        bad = [m for m in self.modes if m not in MODES]
        if bad or not self.modes:
            raise ConfigError(f"modes must be drawn from {MODES}, got {self.modes}")
        bad = [p for p in self.policies if p not in POLICY_NAMES]
        if bad or not self.policies:
            raise ConfigError(f"unknown policies {bad}; expected from {POLICY_NAMES}")
        if self.method not in ("highs", "simplex"):
            raise ConfigError(f"unknown LP method {self.method!r}")
        if self.basis not in ("all", "feasible"):
            raise ConfigError(f"unknown coverage basis {self.basis!r}")
        if self.dataset is not None and not Path(self.dataset).is_file():
            raise ConfigError(f"dataset {self.dataset} does not exist")

    @property
    def dataset_path(self) -> Path:
        return Path(self.dataset) if self.dataset is not None else shipped_dataset_path()

    @property
    def solve_options(self) -> SolveOptions:
        return SolveOptions(tol=self.tol, method=self.method, lookahead_phases=self.lookahead)

    def path(self, *parts: str) -> Path:
        return Path(self.out_dir).joinpath(*parts)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        if not np.isfinite(x):
            return ""
        return format(float(x), ".10g")
    return str(x)


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(buf.getvalue(), encoding="utf-8")


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


# ----------------------------------------------------------------------------
# generate


def run_generate(cfg: ExperimentConfig) -> Path:
    cfg.validate()
    vectors = generate_scenarios(cfg.n_scenarios, cfg.seed_skip)
    out = cfg.path("scenarios.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    write_scenarios(vectors, out)
    log.info("wrote %d scenarios to %s", len(vectors), out)
    return out


# ----------------------------------------------------------------------------
# evaluate

_WORKER_DS: EnergySystemDataset | None = None


def _init_worker(dataset_path: str) -> None:
    global _WORKER_DS
    _WORKER_DS = load_dataset(dataset_path)


def _evaluate_task(task) -> tuple[PathwayOutcome, float]:
    vector, mode, policy, opts = task
    t0 = time.perf_counter()
    try:
        sched = build_schedule(vector)
        if mode == "perfect":
            out = solve_perfect_foresight(_WORKER_DS, sched, policy, vector.scenario_id, opts)
        else:
            out = solve_myopic(_WORKER_DS, sched, policy, scenario_id=vector.scenario_id, opts=opts)
    except Exception as exc:  # recorded in-row, the batch carries on
        out = PathwayOutcome(vector.scenario_id, mode, policy, "error",
                             error=f"{type(exc).__name__}: {exc}")
    return out, time.perf_counter() - t0


def _row_key(cfg: ExperimentConfig, o: PathwayOutcome):
    return (o.scenario_id, POLICY_NAMES.index(o.policy), MODES.index(o.mode))


def evaluation_tasks(cfg: ExperimentConfig, vectors: Sequence[ScenarioVector]):
    opts = cfg.solve_options
    tasks = [(v, mode, policy, opts) for v in vectors for policy in cfg.policies for mode in cfg.modes]
    have = {(v.scenario_id, m, p) for v, m, p, _ in tasks}
    if (BASELINE_ID, "perfect", "baseline") not in have:
        tasks.insert(0, (no_event_vector(BASELINE_ID), "perfect", "baseline", opts))
    elif any(v.scenario_id == BASELINE_ID and any(v.values) for v, *_ in tasks):
        raise ConfigError("scenario id 0 is reserved for the no-event baseline")
    return tasks


def run_evaluate(cfg: ExperimentConfig, matrix: Path | None = None) -> Path:
    cfg.validate()
    matrix = Path(matrix) if matrix is not None else cfg.path("scenarios.csv")
    vectors = read_scenarios(matrix)
    for v in vectors:
        v.validate()
    tasks = evaluation_tasks(cfg, vectors)
    ds_path = str(cfg.dataset_path)
    results: list[PathwayOutcome] = []
    t_start = time.perf_counter()
    if cfg.workers == 1:
        _init_worker(ds_path)
        stream = map(_evaluate_task, tasks)
        pool = None
    else:
        pool = ProcessPoolExecutor(max_workers=cfg.workers, initializer=_init_worker,
                                   initargs=(ds_path,))
        stream = pool.map(_evaluate_task, tasks, chunksize=max(1, len(tasks) // (4 * cfg.workers)))
    try:
        for k, (out, dt) in enumerate(stream, 1):
            results.append(out)
            log.info("[%d/%d] scenario %d %s/%s: %s in %.3f s", k, len(tasks), out.scenario_id,
                     out.mode, out.policy, out.status, dt)
    finally:
        if pool is not None:
            pool.shutdown()
    results.sort(key=lambda o: _row_key(cfg, o))
    base = next(o for o in results if o.scenario_id == BASELINE_ID and o.mode == "perfect"
                and o.policy == "baseline")
    if base.feasible and base.total_cost > 0:
        for o in results:
            o.normalize(base.total_cost)
    else:
        log.error("no-event baseline is %s; costs left unnormalized", base.status)
    out_path = cfg.path("outcomes.jsonl")
    out_path.parent.mkdir(parents=True, exist_ok=True)
    write_outcomes(results, out_path)
    log.info("evaluated %d rows in %.1f s", len(results), time.perf_counter() - t_start)
    return out_path


# ----------------------------------------------------------------------------
# shared loading for the analysis stages


@dataclass
class Evaluated:
    vectors: dict[int, ScenarioVector]
    outcomes: list[PathwayOutcome]
    c_base: float
    groups: dict[tuple[str, str], list[PathwayOutcome]] = field(default_factory=dict)


def load_evaluated(cfg: ExperimentConfig, matrix: Path | None = None,
                   outcomes: Path | None = None) -> Evaluated:
    vectors = {v.scenario_id: v for v in read_scenarios(matrix or cfg.path("scenarios.csv"))}
    rows = read_outcomes(outcomes or cfg.path("outcomes.jsonl"))
    base = [o for o in rows if o.scenario_id == BASELINE_ID and o.mode == "perfect"
            and o.policy == "baseline"]
    if not base or not base[0].feasible:
        raise ValueError("missing or infeasible no-event baseline row")
    ev = Evaluated(vectors, rows, base[0].total_cost)
    for o in rows:
        if o.scenario_id in vectors:
            ev.groups.setdefault((o.mode, o.policy), []).append(o)
    for key in ev.groups:
        ev.groups[key].sort(key=lambda o: o.scenario_id)
    return ev


def _group_name(mode: str, policy: str) -> str:
    return f"{mode}_{policy}"


def _labels(cfg: ExperimentConfig, rows: Sequence[PathwayOutcome], c_base: float):
    return analysis.label_set(rows, c_base, cfg.basis, cfg.gradient_window)


def run_label(cfg: ExperimentConfig, matrix: Path | None = None,
              outcomes: Path | None = None) -> Path:
    ev = load_evaluated(cfg, matrix, outcomes)
    table = []
    for (mode, policy), rows in sorted(ev.groups.items(), key=lambda kv: _group_order(kv[0])):
        labels, _ = _labels(cfg, rows, ev.c_base)
        for o, lab in zip(rows, labels):
            table.append((o.scenario_id, mode, policy, o.status, o.failed_year, o.cost_normalized, lab))
    table.sort(key=lambda r: (r[0], POLICY_NAMES.index(r[2]), MODES.index(r[1])))
    out = cfg.path("labels.csv")
    _write_csv(out, ("scenario_id", "mode", "policy", "status", "failed_year", "cost_normalized",
                     "label"), table)
    return out


def _group_order(key):
    mode, policy = key
    return POLICY_NAMES.index(policy), MODES.index(mode)


# ----------------------------------------------------------------------------
# discover


def _tree_bundle(cfg: ExperimentConfig, ds: discovery.LabeledDataset, out_dir: Path,
                 max_unique_features: int | None) -> dict:
    n_fail = int(ds.y.sum())
    degenerate = n_fail in (0, ds.n_rows)
    tree = discovery.fit_tree(ds, cfg.max_leaves, max_unique_features)
    interp, cov = discovery.scores(tree, ds)
    fp = discovery.prune_failure_paths(tree, cfg.purity)
    _write_text(out_dir / "tree.json", discovery.dumps(discovery.tree_to_dict(tree)))
    _write_text(out_dir / "tree.txt", discovery.tree_to_text(tree))
    _write_text(out_dir / "failure_paths.json", discovery.dumps(discovery.failure_paths_to_dict(fp)))
    _write_text(out_dir / "failure_paths.txt",
                discovery.tree_to_text(tree, fp.kept_nodes) if not fp.empty else "no failure path\n")
    imp = discovery.feature_importances(tree)
    _write_csv(out_dir / "importances.csv", ("feature", "importance"),
               sorted(imp.items(), key=lambda kv: (-kv[1], kv[0])))
    sweep = []
    k = min(cfg.cv_folds, ds.n_rows)
    for leaves in range(1, cfg.sweep_leaves + 1):
        t = discovery.fit_tree(ds, leaves, max_unique_features)
        i_s, c_s = discovery.scores(t, ds)
        cv = discovery.kfold_cv(ds, k, leaves, max_unique_features, cfg.cv_seed) if k >= 2 else None
        sweep.append((leaves, len(t.leaves), len(t.used_features()), i_s, c_s, cv))
    _write_csv(out_dir / "sweep.csv", ("max_leaves", "leaves", "unique_features", "interpretability",
                                       "coverage", "cv_coverage"), sweep)
    return {"rows": ds.n_rows, "failures": n_fail, "degenerate": degenerate,
            "leaves": len(tree.leaves), "interpretability": interp, "coverage": cov,
            "failure_paths": len(fp.paths)}


def run_discover(cfg: ExperimentConfig, matrix: Path | None = None,
                 outcomes: Path | None = None) -> Path:
    ev = load_evaluated(cfg, matrix, outcomes)
    root = cfg.path("discover")
    summary = []
    for (mode, policy), rows in sorted(ev.groups.items(), key=lambda kv: _group_order(kv[0])):
        labels, _ = _labels(cfg, rows, ev.c_base)
        ds = discovery.scenario_dataset([ev.vectors[o.scenario_id] for o in rows], labels)
        info = _tree_bundle(cfg, ds, root / _group_name(mode, policy), cfg.max_unique_features)
        summary.append((_group_name(mode, policy), info))
    # perfect-feasible scenarios that the myopic run lost, three features at most
    for policy in POLICY_NAMES:
        pf, my = ev.groups.get(("perfect", policy)), ev.groups.get(("myopic", policy))
        if not pf or not my:
            continue
        my_labels = dict(zip((o.scenario_id for o in my), _labels(cfg, my, ev.c_base)[0]))
        keep = [o.scenario_id for o in pf if o.feasible and o.scenario_id in my_labels]
        if not keep:
            continue
        ds = discovery.scenario_dataset([ev.vectors[i] for i in keep], [my_labels[i] for i in keep])
        info = _tree_bundle(cfg, ds, root / f"compare_{policy}", 3)
        summary.append((f"compare_{policy}", info))
    cols = ("rows", "failures", "degenerate", "leaves", "interpretability", "coverage", "failure_paths")
    _write_csv(root / "summary.csv", ("group",) + cols,
               [(name,) + tuple(info[c] for c in cols) for name, info in summary])
    for name, info in summary:
        if info["degenerate"]:
            log.warning("%s: all %d labels identical; tree is a single leaf", name, info["rows"])
    return root


# ----------------------------------------------------------------------------
# report


def _default_checkpoints(n: int) -> list[int]:
    step = max(1, n // 10)
    cps = list(range(step, n + 1, step))
    if cps[-1] != n:
        cps.append(n)
    return cps


def _convergence_rows(rep: analysis.ConvergenceReport):
    for n, s, a in rep.rows():
        yield n, s, a, int(rep.stable_from is not None and n >= rep.stable_from)


def run_report(cfg: ExperimentConfig, matrix: Path | None = None,
               outcomes: Path | None = None) -> Path:
    ev = load_evaluated(cfg, matrix, outcomes)
    root = cfg.path("report")
    summary, curves = [], []
    policies_seen = []
    for (mode, policy), rows in sorted(ev.groups.items(), key=lambda kv: _group_order(kv[0])):
        name = _group_name(mode, policy)
        labels, curve = _labels(cfg, rows, ev.c_base)
        n_feas = sum(o.feasible for o in rows)
        share = analysis.success_proportion(labels)
        if curve is not None:
            beyond = {sid for sid, c in zip(curve.scenario_ids, curve.costs)
                      if curve.cutoff.found and c > curve.cutoff.cost + 1e-9}
            _write_csv(root / f"curve_{name}.csv",
                       ("rank", "scenario_id", "coverage", "cost_normalized", "beyond_cutoff"),
                       [(k + 1, sid, x, c, int(sid in beyond))
                        for k, (sid, x, c) in enumerate(zip(curve.scenario_ids, curve.coverage, curve.costs))])
            curves.append((name, curve))
        area = analysis.auc(curve) if curve is not None else None
        summary.append((mode, policy, len(rows), n_feas, labels.count(analysis.SUCCESS), share,
                        curve.cutoff.coverage if curve else None, curve.cutoff.cost if curve else None,
                        area))
        policies_seen.append(policy)

        ds = discovery.scenario_dataset([ev.vectors[o.scenario_id] for o in rows], labels)
        fa, fb = cfg.heatmap
        hm = analysis.failure_heatmap(ds, fa, fb)
        vals = hm.values
        _write_csv(root / f"heatmap_{name}.csv", (fa, fb, "samples", "failures", "failure_share"),
                   [(la, lb, int(hm.totals[i, j]), int(hm.failures[i, j]),
                     None if not np.isfinite(vals[i, j]) else float(vals[i, j]))
                    for i, la in enumerate(hm.levels_a) for j, lb in enumerate(hm.levels_b)])
        _write_text(root / f"heatmap_{name}.svg", render.heatmap_svg(hm, f"failure share, {name}"))

        feas = [o for o in rows if o.feasible]
        if len(feas) >= 2:
            techs = sorted(feas[0].capacities)
            names = [f"{t}@{y}" for t in techs for y in YEARS[1:]]
            X = np.array([[o.capacities[t][y] for t in techs for y in YEARS[1:]] for o in feas])
            cm = analysis.correlation_matrix(X, names)
            masked = cm.masked
            _write_csv(root / f"correlation_{name}.csv", ("column",) + cm.names,
                       [(cm.names[i],) + tuple(None if masked[i, j] else float(cm.r[i, j])
                                              for j in range(len(cm.names)))
                        for i in range(len(cm.names))])

        rep = analysis.convergence_report(rows, ev.c_base, cfg.checkpoints or _default_checkpoints(len(rows)),
                                          basis=cfg.basis, gradient_window=cfg.gradient_window)
        _write_csv(root / f"convergence_{name}.csv", ("scenarios", "success_share", "auc", "stable"),
                   _convergence_rows(rep))
    _write_csv(root / "summary.csv", ("mode", "policy", "scenarios", "feasible", "successful",
                                      "success_share", "cutoff_coverage", "cutoff_cost", "auc"), summary)
    if curves:
        _write_text(root / "curves.svg", render.curves_svg(curves))
    return root


# ----------------------------------------------------------------------------
# converge


def run_converge(cfg: ExperimentConfig, matrix: Path | None = None,
                 outcomes: Path | None = None) -> Path:
    ev = load_evaluated(cfg, matrix, outcomes)
    root = cfg.path("converge")
    table = []
    series_s, series_a = [], []
    for (mode, policy), rows in sorted(ev.groups.items(), key=lambda kv: _group_order(kv[0])):
        name = _group_name(mode, policy)
        cps = cfg.checkpoints or _default_checkpoints(len(rows))
        rep = analysis.convergence_report(rows, ev.c_base, cps, basis=cfg.basis,
                                          gradient_window=cfg.gradient_window)
        _write_csv(root / f"convergence_{name}.csv", ("scenarios", "success_share", "auc", "stable"),
                   _convergence_rows(rep))
        table.append((mode, policy, rep.stable_from, rep.success[-1], rep.auc[-1]))
        series_s.append((name, rep.checkpoints, rep.success))
        series_a.append((name, rep.checkpoints, rep.auc))
    _write_csv(root / "summary.csv", ("mode", "policy", "stable_from", "success_share", "auc"), table)
    _write_text(root / "success_share.svg", render.convergence_svg(series_s, "success share / final value"))
    _write_text(root / "auc.svg", render.convergence_svg(series_a, "AUC / final value"))
    return root


def workers_from_env(default: int = 1) -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV}={raw!r} is not an integer") from None


def with_overrides(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    return replace(cfg, **kw)
