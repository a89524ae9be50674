"""Success labeling, cumulative cost curves and the convergence metrics.

Costs are handled as percentages of ``c_base`` (the no-event perfect-foresight
optimum) and coverage as a percentage of the scenario count, so the cutoff
gradient reads "% cost per % scenarios".
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .discovery import LabeledDataset
from .pathway import PathwayOutcome
from .scenario_space import COLUMN_IDS, DERIVED_NAMES, T_LEVELS, levels_for

SUCCESS, FAILURE = "success", "failure"
GRADIENT_LIMIT = 1.0
SCAN_START = 10.0
_GRAD_TOL = 1e-9


@dataclass(frozen=True)
class Cutoff:
    """Excessive-cost cutoff; both fields are None when the gradient never exceeds 1."""

    coverage: float | None = None
    cost: float | None = None

    @property
    def found(self) -> bool:
        return self.coverage is not None


@dataclass(frozen=True)
class CostCurve:
    costs: np.ndarray  # normalized percent, non-decreasing
    coverage: np.ndarray  # percent of the denominator, strictly increasing
    scenario_ids: tuple[int, ...]
    n_total: int  # scenarios in the coverage denominator
    basis: str = "all"
    gradient_window: float = 1.0
    scan_start: float = SCAN_START
    cutoff: Cutoff = field(default_factory=Cutoff)

    @property
    def n_points(self) -> int:
        return int(self.costs.size)

    @property
    def cutoff_coverage(self) -> float | None:
        return self.cutoff.coverage

    def cost_at(self, x: float) -> float:
        return float(np.interp(x, self.coverage, self.costs))


def curve_from_costs(costs: Sequence[float], n_total: int | None = None, *,
                     scenario_ids: Sequence[int] | None = None, basis: str = "all",
                     gradient_window: float = 1.0, scan_start: float = SCAN_START) -> CostCurve:
    """Curve from normalized costs (percent of C_base).

    ``n_total`` is the coverage denominator; it defaults to ``len(costs)``.
    """
    c = np.asarray(costs, dtype=float)
    if c.size == 0:
        raise ValueError("cost curve needs at least one feasible outcome")
    ids = np.arange(c.size) if scenario_ids is None else np.asarray(scenario_ids)
    order = np.lexsort((ids, c))  # by cost, then scenario id
    n_total = c.size if n_total is None else int(n_total)
    if n_total < c.size:
        raise ValueError(f"coverage denominator {n_total} smaller than {c.size} points")
    if gradient_window <= 0:
        raise ValueError("gradient_window must be positive")
    cov = 100.0 * np.arange(1, c.size + 1) / n_total
    curve = CostCurve(c[order], cov, tuple(int(i) for i in ids[order]), n_total, basis,
                      float(gradient_window), float(scan_start))
    return CostCurve(**{**curve.__dict__, "cutoff": excessive_cost_cutoff(curve)})


def cost_curve(outcomes: Iterable[PathwayOutcome], c_base: float, basis: str = "all",
               gradient_window: float = 1.0, scan_start: float = SCAN_START) -> CostCurve:
    """Sorted normalized costs of the feasible outcomes.

    With ``basis="all"`` infeasible outcomes count in the coverage
    denominator, so the curve stops short of 100%; with ``"feasible"`` it
    spans the feasible set only.
    """
    if not c_base > 0:
        raise ValueError("c_base must be positive")
    if basis not in ("all", "feasible"):
        raise ValueError(f"unknown coverage basis {basis!r}")
    outcomes = list(outcomes)
    feas = [o for o in outcomes if o.feasible]
    if not feas:
        raise ValueError("cost curve needs at least one feasible outcome")
    costs = [o.total_cost / c_base * 100.0 for o in feas]
    n_total = len(outcomes) if basis == "all" else len(feas)
    return curve_from_costs(costs, n_total, scenario_ids=[o.scenario_id for o in feas],
                            basis=basis, gradient_window=gradient_window, scan_start=scan_start)


def excessive_cost_cutoff(curve: CostCurve) -> Cutoff:
    """First coverage x >= scan_start where the forward gradient exceeds 1.

    The gradient at x is ``(C(x + w) - C(x)) / w`` on the piecewise-linear
    curve, so the cutoff sits at the last point before the steep rise.
    """
    w = curve.gradient_window
    x_end = curve.coverage[-1]
    for x in curve.coverage:
        if x < curve.scan_start - 1e-12:
            continue
        if x + w > x_end + 1e-12:
            break
        g = (curve.cost_at(x + w) - curve.cost_at(x)) / w
        if g > GRADIENT_LIMIT + _GRAD_TOL:
            return Cutoff(float(x), curve.cost_at(x))
    return Cutoff()


def label_outcomes(outcomes: Iterable[PathwayOutcome], cutoff: Cutoff,
                   c_base: float) -> list[str]:
    """Infeasible, or feasible but costlier than the cutoff cost, is a failure."""
    labels = []
    for o in outcomes:
        if not o.feasible:
            labels.append(FAILURE)
        elif cutoff.found and o.total_cost / c_base * 100.0 > cutoff.cost + 1e-9:
            labels.append(FAILURE)
        else:
            labels.append(SUCCESS)
    return labels


def label_set(outcomes: Sequence[PathwayOutcome], c_base: float, basis: str = "all",
              gradient_window: float = 1.0) -> tuple[list[str], CostCurve | None]:
    """Curve, cutoff and labels in one go; the curve is None if nothing is feasible."""
    if not any(o.feasible for o in outcomes):
        return [FAILURE] * len(outcomes), None
    curve = cost_curve(outcomes, c_base, basis, gradient_window)
    return label_outcomes(outcomes, curve.cutoff, c_base), curve


def success_proportion(labels: Iterable) -> float:
    """S_success / S over labels ("success"/"failure" or booleans)."""
    labels = list(labels)
    if not labels:
        raise ValueError("success proportion of an empty set")
    ok = sum(1 for lab in labels if lab is True or lab == SUCCESS)
    return ok / len(labels)


def auc(curve_or_x, y: Sequence[float] | None = None) -> float:
    """Trapezoidal area under (x, y) points.

    A :class:`CostCurve` is integrated in fractional units, coverage / 100
    against cost / 100, from coverage 0: the cheapest point is extended back
    to the origin so each scenario owns a 1/S slice and a flat no-regret
    curve over all scenarios has area 1 whatever S is.
    """
    if isinstance(curve_or_x, CostCurve):
        x = np.concatenate([[0.0], curve_or_x.coverage / 100.0])
        y = np.concatenate([curve_or_x.costs[:1], curve_or_x.costs]) / 100.0
    else:
        x = np.asarray(curve_or_x, dtype=float)
        y = np.asarray(y, dtype=float)
    if x.size < 2 or x.size != y.size:
        raise ValueError("auc needs at least 2 matching points")
    return float(np.sum((y[1:] + y[:-1]) / 2.0 * np.diff(x)))


# ----------------------------------------------------------------------------
# convergence


@dataclass(frozen=True)
class ConvergenceReport:
    checkpoints: tuple[int, ...]
    success: tuple[float, ...]
    auc: tuple[float | None, ...]
    tolerance: float
    stable_from: int | None  # first checkpoint after which both metrics stay in band

    def rows(self):
        for n, s, a in zip(self.checkpoints, self.success, self.auc):
            yield n, s, a


def _within(value, final, tol) -> bool:
    if value is None or final is None:
        return value is None and final is None
    if final == 0:
        return abs(value) <= tol
    return abs(value - final) <= tol * abs(final)


def convergence_report(outcomes: Sequence[PathwayOutcome], c_base: float,
                       checkpoints: Sequence[int], tolerance: float = 0.05,
                       basis: str = "all", gradient_window: float = 1.0) -> ConvergenceReport:
    """Success share and AUC recomputed on each prefix of ``outcomes``."""
    cps = [int(c) for c in checkpoints]
    if not cps:
        raise ValueError("no checkpoints")
    if any(b <= a for a, b in zip(cps, cps[1:])):
        raise ValueError("checkpoints must be strictly ascending")
    if cps[0] < 1 or cps[-1] > len(outcomes):
        raise ValueError(f"checkpoint {cps[-1]} exceeds stream length {len(outcomes)}")
    succ, areas = [], []
    for n in cps:
        labels, curve = label_set(outcomes[:n], c_base, basis, gradient_window)
        succ.append(success_proportion(labels))
        areas.append(auc(curve) if curve is not None else None)
    stable_from = None
    for i in range(len(cps)):
        if all(_within(succ[k], succ[-1], tolerance) and _within(areas[k], areas[-1], tolerance)
               for k in range(i, len(cps))):
            stable_from = cps[i]
            break
    return ConvergenceReport(tuple(cps), tuple(succ), tuple(areas), tolerance, stable_from)


# ----------------------------------------------------------------------------
# heatmaps and correlations


@dataclass(frozen=True)
class Heatmap:
    feature_a: str
    feature_b: str
    levels_a: tuple[float, ...]
    levels_b: tuple[float, ...]
    failures: np.ndarray  # counts, shape (len(levels_a), len(levels_b))
    totals: np.ndarray

    @property
    def values(self) -> np.ndarray:
        """Failure proportion per cell; NaN marks cells without samples."""
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.totals > 0, self.failures / np.maximum(self.totals, 1), np.nan)


def _column_levels(ds: LabeledDataset, j: int) -> tuple[float, ...]:
    name = ds.columns[j]
    if name in COLUMN_IDS:
        return levels_for(COLUMN_IDS.index(name))
    if name in DERIVED_NAMES:
        # sums of four T levels: 0, 0.2, ..., 4.0
        step = T_LEVELS[1]
        return tuple(round(k * step, 10) for k in range(4 * (len(T_LEVELS) - 1) + 1))
    return tuple(float(v) for v in np.unique(np.round(ds.X[:, j], 9)))


def failure_heatmap(ds: LabeledDataset, feature_a: str, feature_b: str) -> Heatmap:
    """Raw failure proportion over the level grid of two discrete features."""
    for f in (feature_a, feature_b):
        if f not in ds.columns:
            raise ValueError(f"unknown feature {f!r}")
    ja, jb = ds.columns.index(feature_a), ds.columns.index(feature_b)
    la, lb = _column_levels(ds, ja), _column_levels(ds, jb)
    fail = np.zeros((len(la), len(lb)), dtype=int)
    tot = np.zeros_like(fail)
    ia = np.abs(ds.X[:, ja][:, None] - np.array(la)[None, :]).argmin(axis=1)
    ib = np.abs(ds.X[:, jb][:, None] - np.array(lb)[None, :]).argmin(axis=1)
    np.add.at(tot, (ia, ib), 1)
    np.add.at(fail, (ia, ib), ds.y)
    return Heatmap(feature_a, feature_b, la, lb, fail, tot)


@dataclass(frozen=True)
class CorrelationMatrix:
    names: tuple[str, ...]
    r: np.ndarray  # Pearson r, NaN where undefined
    mask_threshold: float

    @property
    def masked(self) -> np.ndarray:
        """True where the entry is hidden: |r| below threshold or undefined."""
        with np.errstate(invalid="ignore"):
            return ~(np.abs(self.r) >= self.mask_threshold)


def correlation_matrix(X: np.ndarray, names: Sequence[str], mask_threshold: float = 0.6,
                       drop_empty: bool = True) -> CorrelationMatrix:
    """Pearson matrix with weak entries masked and all-masked rows dropped."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("correlation needs at least 2 rows")
    if X.shape[1] != len(names):
        raise ValueError(f"{X.shape[1]} columns but {len(names)} names")
    centered = X - X.mean(axis=0)
    norm = np.sqrt((centered ** 2).sum(axis=0))
    # a column is constant when its spread is only rounding noise
    scale = np.maximum(np.abs(X).max(axis=0), 1.0)
    const = norm <= 1e-12 * scale * math.sqrt(X.shape[0])
    with np.errstate(invalid="ignore", divide="ignore"):
        r = (centered.T @ centered) / np.outer(norm, norm)
    r[const, :] = np.nan
    r[:, const] = np.nan
    r = np.clip(r, -1.0, 1.0)
    np.fill_diagonal(r, np.where(const, np.nan, 1.0))
    with np.errstate(invalid="ignore"):
        show = np.abs(r) >= mask_threshold
    np.fill_diagonal(show, False)
    keep = np.flatnonzero(show.any(axis=1)) if drop_empty else np.arange(len(names))
    return CorrelationMatrix(tuple(names[i] for i in keep), r[np.ix_(keep, keep)], mask_threshold)
