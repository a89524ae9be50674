"""Multi-phase transition LP, perfect-foresight and myopic rolling-horizon solves.

Variables per technology ``t``, representative year ``y`` and slice ``s``:

``F[t,y]``    installed capacity (GW)
``A[t,y]``    capacity added during the phase ending in ``y``
``D[t,y]``    capacity removed during that phase, end-of-life or early
``O[t,y,s]``  activity (TWh); storage technologies also get a charge ``C[t,y,s]``
``R[r,y,s]``  resource use (TWh)
``V[t,y]``    output given up by a heating or mobility technology (TWh)

End-of-life is enforced by a vintage row ``F[t,y] <= capacity still within
its lifetime``; together with ``F[t,y] = F[t,y-5] + A - D`` and ``D >= 0`` this
is exact, since any such trajectory is reachable by retiring oldest vintages
first.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

from .energy_model import (
    DECISION_YEARS,
    YEARS,
    YEARS_PER_PHASE,
    EnergySystemDataset,
    Technology,
    ghg_limit,
)
from .lp import LinearProgram, LPBuilder, lp_solve
from .policies import (
    FixAtPotential,
    MinCapacity,
    MinOutputShare,
    NoAdditions,
    Policy,
    RemoveFrom,
    apply_policy,
)
from .scenario_space import EventSchedule, identity_schedule, reveal

log = logging.getLogger(__name__)

REPORT_TOL = 1e-6


@dataclass(frozen=True)
class SolveOptions:
    tol: float = 1e-9
    method: str = "highs"
    discount_rate: float = 0.0
    lookahead_phases: int = 1


@dataclass
class Commitment:
    """Decisions fixed by earlier rolling-horizon steps, keyed by (tech, year)."""

    capacities: dict[tuple[str, int], float] = field(default_factory=dict)
    additions: dict[tuple[str, int], float] = field(default_factory=dict)
    # annual output of resistance-group technologies to their demand layer
    outputs: dict[tuple[str, int], float] = field(default_factory=dict)

    @property
    def years(self) -> list[int]:
        return sorted({y for _, y in self.capacities})

    def capacity(self, tech: str, year: int) -> float:
        return self.capacities[(tech, year)]


def initial_commitment(ds: EnergySystemDataset) -> Commitment:
    return Commitment({(t.name, YEARS[0]): ds.initial_capacities.get(t.name, 0.0)
                       for t in ds.technologies})


def _discount(opts: SolveOptions, year: int) -> float:
    return (1.0 + opts.discount_rate) ** -(year - YEARS[0])


def capex_factor(tech: Technology, sched: EventSchedule, year: int) -> float:
    return sched.capex_multiplier[year] if tech.flags.imported else 1.0


def _alive(tech: Technology, vintage: int, year: int) -> bool:
    return vintage <= year < vintage + YEARS_PER_PHASE * tech.lifetime_phases


def _capacity_allowed(tech: Technology, sched: EventSchedule, year: int) -> bool:
    if tech.flags.unicorn_class != "none" and not sched.unicorn_allowed(tech.flags.unicorn_class, year):
        return False
    return True


def _per_slice_output(tech: Technology, layer: str) -> tuple[float, ...] | None:
    return tech.layer_outputs.get(layer)


def _main_layer(ds: EnergySystemDataset, tech: Technology) -> str:
    demand_layers = {d.layer for d in ds.demands}
    cands = [(sum(v), layer) for layer, v in tech.layer_outputs.items() if layer in demand_layers]
    if not cands:
        raise ValueError(f"{tech.name} serves no demand layer")
    return max(cands, key=lambda c: (c[0], -ds.layers.index(c[1])))[1]


def _turnover_groups(ds: EnergySystemDataset) -> dict[str, tuple[str, list[Technology]]]:
    """Resistance group -> (served demand layer, member technologies)."""
    groups = {
        "lt_heating": [t for t in ds.technologies if t.flags.heating_class in ("lt_decentral", "lt_dhn")],
        "mobility": [t for t in ds.technologies if t.flags.mobility_class != "none"],
    }
    out = {}
    for key, techs in groups.items():
        if techs:
            layers = {_main_layer(ds, t) for t in techs}
            if len(layers) != 1:
                raise ValueError(f"{key} technologies serve several layers: {sorted(layers)}")
            out[key] = (layers.pop(), techs)
    return out


def build_lp(ds: EnergySystemDataset, sched: EventSchedule, policy: Policy,
             window: Sequence[int], committed: Commitment | None = None,
             opts: SolveOptions = SolveOptions()) -> LinearProgram:
    window = list(window)
    if not window or any(y not in YEARS for y in window):
        raise ValueError(f"window {window} is not a run of representative years")
    first = YEARS.index(window[0])
    if window != list(YEARS[first:first + len(window)]):
        raise ValueError(f"window {window} is not contiguous")
    committed = committed or Commitment()
    before = list(YEARS[:first])
    if committed.years != before:
        raise ValueError(f"window/committed mismatch: window starts {window[0]}, "
                         f"committed years {committed.years}")
    if window[0] == YEARS[0] and committed.capacities:
        raise ValueError("window/committed mismatch: nothing may be committed before 2020")

    b = LPBuilder()
    slices = ds.slices
    hours = [s.hours / 1000.0 for s in slices]
    techs = ds.technologies
    F, A, D, O, C, R = {}, {}, {}, {}, {}, {}

    for y in window:
        w = YEARS_PER_PHASE * _discount(opts, y)
        for t in techs:
            if y == YEARS[0]:
                cap0 = ds.initial_capacities.get(t.name, 0.0)
                F[t.name, y] = b.var(f"F[{t.name},{y}]", cap0, cap0, w * t.opex_fixed)
            else:
                ub = t.potential_max if _capacity_allowed(t, sched, y) else 0.0
                F[t.name, y] = b.var(f"F[{t.name},{y}]", 0.0, ub, w * t.opex_fixed)
                add_ub = t.addition_limit_per_phase
                if t.flags.renewable_class != "none":
                    add_ub *= sched.renewable_additions[t.flags.renewable_class][y]
                capex = t.capex * capex_factor(t, sched, y) * _discount(opts, y)
                A[t.name, y] = b.var(f"A[{t.name},{y}]", 0.0, add_ub, capex)
                D[t.name, y] = b.var(f"D[{t.name},{y}]", 0.0, np.inf, 0.0)
            for s in slices:
                O[t.name, y, s.slice_id] = b.var(f"O[{t.name},{y},{s.slice_id}]")
                if t.storage is not None:
                    C[t.name, y, s.slice_id] = b.var(f"C[{t.name},{y},{s.slice_id}]")
        for r in ds.resources:
            for s in slices:
                R[r.name, y, s.slice_id] = b.var(f"R[{r.name},{y},{s.slice_id}]", 0.0, np.inf, w * r.price)

    # layer balances: production + imports >= consumption + demand
    demand_of = {d.layer: d for d in ds.demands}
    for y in window:
        for k, s in enumerate(slices):
            sid = s.slice_id
            for layer in ds.layers:
                coefs: dict[int, float] = {}
                for t in techs:
                    out = _per_slice_output(t, layer)
                    val = out[k] if out is not None else 0.0
                    val -= t.layer_inputs.get(layer, 0.0)
                    if t.storage is not None and t.storage.layer == layer:
                        val += 1.0
                        coefs[C[t.name, y, sid]] = -1.0
                    if val:
                        coefs[O[t.name, y, sid]] = coefs.get(O[t.name, y, sid], 0.0) + val
                for r in ds.resources:
                    if r.layer == layer:
                        coefs[R[r.name, y, sid]] = 1.0
                rhs = 0.0
                if layer in demand_of:
                    d = demand_of[layer]
                    rhs = d.baseline_per_year[y] * sched.demand_multiplier[y] * d.slice_profile[k]
                b.row(f"balance[{layer},{y},{sid}]", coefs, ">", rhs)

    # activity within capacity; storage cycles within the year
    for y in window:
        for t in techs:
            for k, s in enumerate(slices):
                b.row(f"cap[{t.name},{y},{s.slice_id}]",
                      {O[t.name, y, s.slice_id]: 1.0, F[t.name, y]: -hours[k]}, "<", 0.0)
                if t.storage is not None:
                    b.row(f"charge_cap[{t.name},{y},{s.slice_id}]",
                          {C[t.name, y, s.slice_id]: 1.0, F[t.name, y]: -hours[k]}, "<", 0.0)
            if t.storage is not None:
                coefs = {}
                for s in slices:
                    coefs[C[t.name, y, s.slice_id]] = t.storage.charge_efficiency
                    coefs[O[t.name, y, s.slice_id]] = -1.0 / t.storage.discharge_efficiency
                b.row(f"cycle[{t.name},{y}]", coefs, "=", 0.0)

    # resource availability and GHG cap
    group_factor = sched.import_availability
    for y in window:
        for r in ds.resources:
            avail = r.availability_per_year[y]
            if r.import_group != "none":
                avail *= group_factor[r.import_group][y]
            b.row(f"avail[{r.name},{y}]", {R[r.name, y, s.slice_id]: 1.0 for s in slices}, "<", avail)
        ghg = {R[r.name, y, s.slice_id]: r.ghg_intensity
               for r in ds.resources if r.ghg_intensity for s in slices}
        b.row(f"ghg[{y}]", ghg, "<", ghg_limit(ds.ghg, y))

    def prev_capacity(tname: str, y: int):
        """(variable index or None, constant) for F[t, y-5]."""
        py = y - YEARS_PER_PHASE
        if (tname, py) in F:
            return F[tname, py], 0.0
        return None, committed.capacity(tname, py)

    # capacity continuity and lifetimes
    for y in window:
        if y == YEARS[0]:
            continue
        for t in techs:
            idx, const = prev_capacity(t.name, y)
            coefs = {F[t.name, y]: 1.0, A[t.name, y]: -1.0, D[t.name, y]: 1.0}
            if idx is not None:
                coefs[idx] = -1.0
            b.row(f"continuity[{t.name},{y}]", coefs, "=", const)
            alive_const = 0.0
            if _alive(t, YEARS[0], y):
                alive_const += ds.initial_capacities.get(t.name, 0.0)
            coefs = {F[t.name, y]: 1.0}
            for v in DECISION_YEARS:
                if v > y or not _alive(t, v, y):
                    continue
                if (t.name, v) in A:
                    coefs[A[t.name, v]] = -1.0
                else:
                    alive_const += committed.additions[(t.name, v)]
            b.row(f"vintage[{t.name},{y}]", coefs, "<", alive_const)

    # heating renovation and fleet turnover: within each group, the annual
    # output given up by technologies that shrink is capped at a share of the
    # group's previous output
    for key, (layer, group) in _turnover_groups(ds).items():
        for y in window:
            if y == YEARS[0]:
                continue
            share = ds.turnover_caps[key] * sched.turnover[key][y]
            cap_coefs: dict[int, float] = {}
            cap_const = 0.0
            for t in group:
                out = t.layer_outputs[layer]
                V = b.var(f"V[{t.name},{y}]")
                coefs = {V: 1.0}
                for k, s in enumerate(slices):
                    coefs[O[t.name, y, s.slice_id]] = out[k]
                py = y - YEARS_PER_PHASE
                prev = 0.0
                if py in window:
                    for k, s in enumerate(slices):
                        coefs[O[t.name, py, s.slice_id]] = -out[k]
                        cap_coefs[O[t.name, py, s.slice_id]] = -share * out[k]
                else:
                    prev = committed.outputs[(t.name, py)]
                    cap_const += share * prev
                # V >= output(y-5) - output(y)
                b.row(f"reduction[{t.name},{y}]", coefs, ">", prev)
                cap_coefs[V] = 1.0
            b.row(f"turnover[{key},{y}]", cap_coefs, "<", cap_const)

    # nuclear phase-out, irreversible
    if sched.nuclear_phaseout is not None:
        for y in window:
            if y < sched.nuclear_phaseout:
                continue
            for t in techs:
                if t.flags.nuclear_class != "none":
                    b.row(f"phaseout[{t.name},{y}]", {F[t.name, y]: 1.0}, "<", 0.0)

    _emit_policy_rows(b, ds, sched, policy, window, F, A, O)
    return b.build()


def _emit_policy_rows(b: LPBuilder, ds, sched, policy: Policy, window, F, A, O) -> None:
    tag = policy.name
    for rule in policy.rules:
        if isinstance(rule, FixAtPotential):
            if rule.year not in window:
                continue
            for t in ds.technologies:
                if t.flags.renewable_class in rule.renewable_classes:
                    b.row(f"policy[{tag},{t.name},{rule.year}]", {F[t.name, rule.year]: 1.0},
                          "=", t.potential_max)
        elif isinstance(rule, NoAdditions):
            if rule.year not in window:
                continue
            for t in ds.technologies:
                if t.flags.renewable_class in rule.renewable_classes:
                    b.row(f"policy[{tag},{t.name},{rule.year}]", {A[t.name, rule.year]: 1.0}, "<", 0.0)
        elif isinstance(rule, RemoveFrom):
            for y in window:
                if y < rule.year:
                    continue
                for t in ds.technologies:
                    if t.flags.nuclear_class in rule.nuclear_classes:
                        b.row(f"policy[{tag},{t.name},{y}]", {F[t.name, y]: 1.0}, "=", 0.0)
        elif isinstance(rule, MinCapacity):
            if rule.year not in window:
                continue
            names = ds.policy_targets[rule.techs_key]
            target = float(ds.policy_targets[rule.target_key])
            b.row(f"policy[{tag},{rule.target_key}]", {F[n, rule.year]: 1.0 for n in names}, ">", target)
        elif isinstance(rule, MinOutputShare):
            if rule.year not in window:
                continue
            names = ds.policy_targets[rule.techs_key]
            share = float(ds.policy_targets[rule.share_key])
            layer = _main_layer(ds, ds.technology(names[0]))
            demand = next(d for d in ds.demands if d.layer == layer)
            total = demand.baseline_per_year[rule.year] * sched.demand_multiplier[rule.year]
            coefs = {}
            for n in names:
                out = ds.technology(n).layer_outputs[layer]
                for k, s in enumerate(ds.slices):
                    coefs[O[n, rule.year, s.slice_id]] = out[k]
            b.row(f"policy[{tag},{rule.share_key}]", coefs, ">", share * total)
        else:
            raise TypeError(f"unsupported policy rule {rule!r}")


# ----------------------------------------------------------------------------
# outcomes


@dataclass
class PathwayOutcome:
    scenario_id: int
    mode: str
    policy: str
    status: str  # "feasible" | "infeasible" | "error"
    failed_year: int | None = None
    total_cost: float | None = None
    cost_normalized: float | None = None
    emissions_per_year: dict[int, float] = field(default_factory=dict)
    capacities: dict[str, dict[int, float]] = field(default_factory=dict)
    additions: dict[str, dict[int, float]] = field(default_factory=dict)
    resource_use: dict[str, dict[int, float]] = field(default_factory=dict)
    error: str | None = None

    @property
    def feasible(self) -> bool:
        return self.status == "feasible"

    def normalize(self, c_base: float) -> None:
        if self.total_cost is not None:
            self.cost_normalized = self.total_cost / c_base * 100.0


def _sig(x: float) -> float:
    return float(f"{x:.9g}")


def _render(value):
    if isinstance(value, float):
        return _sig(value)
    if isinstance(value, dict):
        return {str(k): _render(v) for k, v in value.items()}
    return value


def outcome_to_json(o: PathwayOutcome) -> str:
    row = {
        "scenario_id": o.scenario_id,
        "mode": o.mode,
        "policy": o.policy,
        "status": o.status,
        "failed_year": o.failed_year,
        "total_cost": _render(o.total_cost),
        "cost_normalized": _render(o.cost_normalized),
        "emissions_per_year": _render(o.emissions_per_year),
        "capacities": _render(o.capacities),
        "additions": _render(o.additions),
        "resource_use": _render(o.resource_use),
        "error": o.error,
    }
    return json.dumps(row, sort_keys=True)


def outcome_from_json(line: str) -> PathwayOutcome:
    row = json.loads(line)

    def years(m):
        return {int(k): v for k, v in m.items()}

    return PathwayOutcome(
        scenario_id=row["scenario_id"],
        mode=row["mode"],
        policy=row["policy"],
        status=row["status"],
        failed_year=row.get("failed_year"),
        total_cost=row.get("total_cost"),
        cost_normalized=row.get("cost_normalized"),
        emissions_per_year=years(row.get("emissions_per_year", {})),
        capacities={k: years(v) for k, v in row.get("capacities", {}).items()},
        additions={k: years(v) for k, v in row.get("additions", {}).items()},
        resource_use={k: years(v) for k, v in row.get("resource_use", {}).items()},
        error=row.get("error"),
    )


def read_outcomes(path) -> list[PathwayOutcome]:
    with open(path, encoding="utf-8") as fh:
        return [outcome_from_json(line) for line in fh if line.strip()]


def write_outcomes(outcomes: Iterable[PathwayOutcome], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for o in outcomes:
            fh.write(outcome_to_json(o) + "\n")


# ----------------------------------------------------------------------------
# solves


@dataclass
class _YearValues:
    F: dict[str, float]
    A: dict[str, float]
    R: dict[str, float]
    G: dict[str, float] = field(default_factory=dict)  # resistance-group outputs


def _extract(ds: EnergySystemDataset, lp: LinearProgram, x: np.ndarray, years) -> dict[int, _YearValues]:
    idx = {n: i for i, n in enumerate(lp.var_names)}
    out = {}
    for y in years:
        F = {t.name: float(x[idx[f"F[{t.name},{y}]"]]) for t in ds.technologies}
        A = {t.name: (float(x[idx[f"A[{t.name},{y}]"]]) if y != YEARS[0] else 0.0)
             for t in ds.technologies}
        R = {r.name: float(sum(x[idx[f"R[{r.name},{y},{s.slice_id}]"]] for s in ds.slices))
             for r in ds.resources}
        G = {}
        for layer, group in _turnover_groups(ds).values():
            for t in group:
                prod = t.layer_outputs[layer]
                G[t.name] = float(sum(prod[k] * x[idx[f"O[{t.name},{y},{s.slice_id}]"]]
                                      for k, s in enumerate(ds.slices)))
        out[y] = _YearValues(F, A, R, G)
    return out


def year_cost(ds: EnergySystemDataset, sched: EventSchedule, year: int, vals: _YearValues,
              opts: SolveOptions) -> float:
    """Investment, fixed operation and resource cost attributed to one year."""
    disc = _discount(opts, year)
    total = 0.0
    for t in ds.technologies:
        if year != YEARS[0]:
            total += t.capex * capex_factor(t, sched, year) * disc * vals.A[t.name]
        total += YEARS_PER_PHASE * disc * t.opex_fixed * vals.F[t.name]
    for r in ds.resources:
        total += YEARS_PER_PHASE * disc * r.price * vals.R[r.name]
    return total


def _fill(outcome: PathwayOutcome, ds: EnergySystemDataset, per_year: dict[int, _YearValues]) -> None:
    years = sorted(per_year)
    outcome.capacities = {t.name: {y: per_year[y].F[t.name] for y in years} for t in ds.technologies}
    outcome.additions = {t.name: {y: per_year[y].A[t.name] for y in years if y != YEARS[0]}
                         for t in ds.technologies}
    outcome.resource_use = {r.name: {y: per_year[y].R[r.name] for y in years} for r in ds.resources}
    outcome.emissions_per_year = {
        y: sum(r.ghg_intensity * per_year[y].R[r.name] for r in ds.resources) for y in years
    }


def _policy(policy: Policy | str) -> Policy:
    return apply_policy(policy) if isinstance(policy, str) else policy


def solve_perfect_foresight(ds: EnergySystemDataset, sched: EventSchedule | None = None,
                            policy: Policy | str = "baseline", scenario_id: int = 0,
                            opts: SolveOptions = SolveOptions(),
                            c_base: float | None = None) -> PathwayOutcome:
    sched = sched or identity_schedule()
    policy = _policy(policy)
    lp = build_lp(ds, sched, policy, YEARS, Commitment(), opts)
    res = lp_solve(lp, tol=opts.tol, method=opts.method)
    outcome = PathwayOutcome(scenario_id, "perfect", policy.name, "infeasible")
    if not res.optimal:
        # no single year to blame under perfect foresight
        return outcome
    outcome.status = "feasible"
    outcome.total_cost = res.objective
    _fill(outcome, ds, _extract(ds, lp, res.x, YEARS))
    if c_base:
        outcome.normalize(c_base)
    return outcome


@dataclass
class MyopicTrace:
    """Per-step record of a rolling-horizon run (for inspection and tests)."""

    windows: list[list[int]] = field(default_factory=list)
    commitment: Commitment = field(default_factory=Commitment)


def solve_myopic(ds: EnergySystemDataset, sched: EventSchedule | None = None,
                 policy: Policy | str = "baseline", lookahead_phases: int | None = None,
                 scenario_id: int = 0, opts: SolveOptions = SolveOptions(),
                 c_base: float | None = None, trace: MyopicTrace | None = None) -> PathwayOutcome:
    sched = sched or identity_schedule()
    policy = _policy(policy)
    lookahead = opts.lookahead_phases if lookahead_phases is None else lookahead_phases
    if lookahead < 1:
        raise ValueError("lookahead_phases must be >= 1")
    outcome = PathwayOutcome(scenario_id, "myopic", policy.name, "infeasible")
    committed = Commitment()
    per_year: dict[int, _YearValues] = {}
    trace = trace if trace is not None else MyopicTrace()
    trace.commitment = committed
    for now in DECISION_YEARS:
        end = min(now + YEARS_PER_PHASE * lookahead, YEARS[-1])
        window = [y for y in YEARS if now <= y <= end]
        commit_years = [now]
        if now == DECISION_YEARS[0]:
            # the fixed 2020 system is operated in the first window
            window = [YEARS[0]] + window
            commit_years = [YEARS[0], now]
        view = reveal(sched, now)
        lp = build_lp(ds, view, policy, window, committed, opts)
        res = lp_solve(lp, tol=opts.tol, method=opts.method)
        trace.windows.append(window)
        if not res.optimal:
            outcome.failed_year = now
            log.debug("scenario %s myopic step %s infeasible", scenario_id, now)
            return outcome
        vals = _extract(ds, lp, res.x, commit_years)
        for y in commit_years:
            per_year[y] = vals[y]
            for t in ds.technologies:
                committed.capacities[(t.name, y)] = vals[y].F[t.name]
                if y != YEARS[0]:
                    committed.additions[(t.name, y)] = vals[y].A[t.name]
            for name, g in vals[y].G.items():
                committed.outputs[(name, y)] = g
    outcome.status = "feasible"
    outcome.total_cost = sum(year_cost(ds, sched, y, per_year[y], opts) for y in YEARS)
    _fill(outcome, ds, per_year)
    if c_base:
        outcome.normalize(c_base)
    return outcome


def no_event_cost(ds: EnergySystemDataset, opts: SolveOptions = SolveOptions()) -> float:
    """C_base: perfect-foresight optimum without events under the baseline policy."""
    out = solve_perfect_foresight(ds, identity_schedule(), "baseline", opts=opts)
    if not out.feasible:
        raise RuntimeError("no-event perfect-foresight problem is infeasible")
    return out.total_cost


def ghg_compliant(ds: EnergySystemDataset, outcome: PathwayOutcome, tol: float = REPORT_TOL) -> bool:
    return all(e <= ghg_limit(ds.ghg, y) + tol for y, e in outcome.emissions_per_year.items())


def is_close_cost(a: float, b: float, c_base: float) -> bool:
    return math.isclose(a, b, abs_tol=REPORT_TOL * c_base)


def outcome_summary(o: PathwayOutcome) -> dict[str, Any]:
    return {"scenario_id": o.scenario_id, "mode": o.mode, "policy": o.policy,
            "status": o.status, "total_cost": o.total_cost}
