"""Unexpected-event scenario space.

A scenario is a vector of 47 impact levels in [0, 1].  Indices 0-39 cover ten
groups (three import groups, five resistance groups, exchange rate, demand) for
each of the impact years 2035, 2040, 2045 and 2050, in that order.  Indices
40-45 set the arrival of the six unicorn technologies and index 46 sets the
nuclear phase-out year.
"""
from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.stats import qmc

from .energy_model import IMPORT_GROUPS, IMPACT_YEARS, RENEWABLE_CLASSES, UNICORN_CLASSES, YEARS

N_PARAMS = 47
MAX_SOBOL_DIM = 64

T_GROUPS = (
    "import_electrofuel",
    "import_biofuel",
    "import_electricity",
    "resistance_mobility",
    "resistance_lt_heating",
    "resistance_pv",
    "resistance_wind_on",
    "resistance_wind_off",
    "exchange_rate",
    "demand",
)
T_INDICES = range(0, 40)
U_INDICES = range(40, 46)
N_INDEX = 46

T_LEVELS = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)
U_LEVELS = (0.0, 1 / 3, 2 / 3, 1.0)
N_LEVELS = (0.0, 0.25, 0.5, 0.75, 1.0)

UNICORN_ARRIVALS = (2040, 2045, 2050, None)
NUCLEAR_PHASEOUTS = (None, 2050, 2045, 2040, 2035)

EXCHANGE_RATE_MAX = 0.4
DEMAND_STEP_MAX = 0.15

_RESISTANCE_TO_CLASS = {
    "resistance_pv": "pv",
    "resistance_wind_on": "wind_on",
    "resistance_wind_off": "wind_off",
}


def param_index(group: str, year: int) -> int:
    return 4 * T_GROUPS.index(group) + IMPACT_YEARS.index(year)


def _param_names() -> tuple[str, ...]:
    names = [f"{g}_{y}" for g in T_GROUPS for y in IMPACT_YEARS]
    names += [f"unicorn_{u}" for u in UNICORN_CLASSES]
    names.append("nuclear_phaseout")
    return tuple(names)


PARAMETER_NAMES = _param_names()
COLUMN_IDS = tuple(f"p{i:02d}" for i in range(N_PARAMS))


def levels_for(index: int) -> tuple[float, ...]:
    if index in T_INDICES:
        return T_LEVELS
    if index in U_INDICES:
        return U_LEVELS
    if index == N_INDEX:
        return N_LEVELS
    raise IndexError(f"parameter index {index} out of range")


def discretize(s: float, index: int) -> float:
    """Map a unit-interval sample onto the discrete level set of parameter ``index``."""
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"sample {s!r} outside [0, 1]")
    if index in T_INDICES:
        return min(math.floor(s * 6) / 5, 1.0)
    if index == N_INDEX:
        return min(math.floor(s * 5) / 4, 1.0)
    if index in U_INDICES:
        return min(math.floor(s * 4) / 3, 1.0)
    raise IndexError(f"parameter index {index} out of range")


def sobol_points(n: int, dim: int, seed_skip: int = 1) -> np.ndarray:
    """First ``n`` unscrambled Sobol points after skipping ``seed_skip`` of them."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 1 <= dim <= MAX_SOBOL_DIM:
        raise ValueError(f"dim must be in [1, {MAX_SOBOL_DIM}], got {dim}")
    if seed_skip < 0:
        raise ValueError("seed_skip must be >= 0")
    engine = qmc.Sobol(d=dim, scramble=False)
    if seed_skip:
        engine.fast_forward(seed_skip)
    with warnings.catch_warnings():
        # balance warning for non power-of-two n
        warnings.simplefilter("ignore", UserWarning)
        return engine.random(n)


@dataclass(frozen=True)
class ScenarioVector:
    scenario_id: int
    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.values) != N_PARAMS:
            raise ValueError(f"scenario needs {N_PARAMS} values, got {len(self.values)}")

    def validate(self) -> None:
        for i, v in enumerate(self.values):
            if not any(abs(v - lvl) <= 1e-9 for lvl in levels_for(i)):
                raise ValueError(
                    f"invariant violation: p{i:02d}={v} not in levels {levels_for(i)}"
                )

    def value(self, group: str, year: int) -> float:
        return self.values[param_index(group, year)]


def no_event_vector(scenario_id: int = 0) -> ScenarioVector:
    return ScenarioVector(scenario_id, (0.0,) * N_PARAMS)


def generate_scenarios(n: int, seed_skip: int = 1) -> list[ScenarioVector]:
    """Discretized Sobol scenarios; ids are the Sobol sequence indices."""
    pts = sobol_points(n, N_PARAMS, seed_skip)
    out = []
    for j, row in enumerate(pts):
        vals = tuple(discretize(float(s), i) for i, s in enumerate(row))
        out.append(ScenarioVector(seed_skip + j, vals))
    return out


def _snap(v: float, index: int) -> float:
    lv = levels_for(index)
    best = min(lv, key=lambda x: abs(x - v))
    if abs(best - v) > 5e-6:
        raise ValueError(f"p{index:02d}={v} is not a discrete level")
    return best


def format_level(v: float) -> str:
    return format(v, ".6g")


def scenarios_to_csv(vectors: Sequence[ScenarioVector]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("scenario_id",) + COLUMN_IDS)
    for v in vectors:
        w.writerow([v.scenario_id] + [format_level(x) for x in v.values])
    return buf.getvalue()


def write_scenarios(vectors: Sequence[ScenarioVector], path: str | Path) -> None:
    Path(path).write_text(scenarios_to_csv(vectors), encoding="utf-8")


def read_scenarios(path: str | Path) -> list[ScenarioVector]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != ("scenario_id",) + COLUMN_IDS:
            raise ValueError(f"{path}: unexpected scenario header")
        out = []
        for row in reader:
            vals = tuple(_snap(float(x), i) for i, x in enumerate(row[1:]))
            out.append(ScenarioVector(int(row[0]), vals))
    return out


# ----------------------------------------------------------------------------
# event schedules


def _ones() -> dict[int, float]:
    return {y: 1.0 for y in YEARS}


@dataclass(frozen=True)
class EventSchedule:
    """Concrete per-year modifications induced by a scenario.

    All per-year maps cover every representative year; years before the first
    impact year carry identity values.
    """

    import_availability: dict[str, dict[int, float]] = field(
        default_factory=lambda: {g: _ones() for g in IMPORT_GROUPS}
    )
    turnover: dict[str, dict[int, float]] = field(
        default_factory=lambda: {"lt_heating": _ones(), "mobility": _ones()}
    )
    renewable_additions: dict[str, dict[int, float]] = field(
        default_factory=lambda: {c: _ones() for c in RENEWABLE_CLASSES}
    )
    capex_multiplier: dict[int, float] = field(default_factory=_ones)
    demand_multiplier: dict[int, float] = field(default_factory=_ones)
    unicorn_arrival: dict[str, int | None] = field(
        default_factory=lambda: {u: 2040 for u in UNICORN_CLASSES}
    )
    nuclear_phaseout: int | None = None

    def nuclear_allowed(self, year: int) -> bool:
        return self.nuclear_phaseout is None or year < self.nuclear_phaseout

    def unicorn_allowed(self, unicorn_class: str, year: int) -> bool:
        arrival = self.unicorn_arrival[unicorn_class]
        return arrival is not None and year >= arrival


def identity_schedule() -> EventSchedule:
    return EventSchedule()


def build_schedule(v: ScenarioVector) -> EventSchedule:
    v.validate()
    sched = EventSchedule()
    imports = {"electrofuel": "import_electrofuel", "biofuel": "import_biofuel",
               "electricity": "import_electricity"}
    turnover = {"lt_heating": "resistance_lt_heating", "mobility": "resistance_mobility"}
    cumulative = 0.0
    for year in IMPACT_YEARS:
        for g, grp in imports.items():
            sched.import_availability[g][year] = 1.0 - v.value(grp, year)
        for k, grp in turnover.items():
            sched.turnover[k][year] = 1.0 - v.value(grp, year)
        for grp, cls in _RESISTANCE_TO_CLASS.items():
            sched.renewable_additions[cls][year] = 1.0 - v.value(grp, year)
        sched.capex_multiplier[year] = 1.0 + EXCHANGE_RATE_MAX * v.value("exchange_rate", year)
        cumulative += v.value("demand", year)
        sched.demand_multiplier[year] = 1.0 + DEMAND_STEP_MAX * cumulative
    for k, u in enumerate(UNICORN_CLASSES):
        sched.unicorn_arrival[u] = UNICORN_ARRIVALS[U_LEVELS.index(_snap(v.values[40 + k], 40 + k))]
    phase = NUCLEAR_PHASEOUTS[N_LEVELS.index(_snap(v.values[N_INDEX], N_INDEX))]
    return EventSchedule(
        import_availability=sched.import_availability,
        turnover=sched.turnover,
        renewable_additions=sched.renewable_additions,
        capex_multiplier=sched.capex_multiplier,
        demand_multiplier=sched.demand_multiplier,
        unicorn_arrival=sched.unicorn_arrival,
        nuclear_phaseout=phase,
    )


def reveal(schedule: EventSchedule, now: int) -> EventSchedule:
    """What a decision maker standing at ``now`` knows about ``schedule``.

    Years up to ``now`` carry the true values, later years the values of a
    future without further impacts: factors return to 1 and the cumulative
    demand multiplier stays at its current level.  A unicorn that has not arrived by ``now`` is expected
    in the next phase, never earlier than its nominal 2040.
    """
    if now not in YEARS:
        raise ValueError(f"{now} is not a representative year")

    def cut(m: dict[int, float]) -> dict[int, float]:
        return {y: (val if y <= now else 1.0) for y, val in m.items()}

    def hold(m: dict[int, float]) -> dict[int, float]:
        # cumulative quantities stay at their last revealed level
        last = max((y for y in m if y <= now), default=None)
        return {y: (val if y <= now else m[last] if last is not None else 1.0) for y, val in m.items()}

    arrivals = {}
    for u, arr in schedule.unicorn_arrival.items():
        if arr is not None and arr <= now:
            arrivals[u] = arr
        else:
            expected = max(2040, now + 5)
            arrivals[u] = expected if expected <= YEARS[-1] else None
    phase = schedule.nuclear_phaseout
    if phase is not None and phase > now:
        phase = None
    return EventSchedule(
        import_availability={g: cut(m) for g, m in schedule.import_availability.items()},
        turnover={k: cut(m) for k, m in schedule.turnover.items()},
        renewable_additions={c: cut(m) for c, m in schedule.renewable_additions.items()},
        capex_multiplier=cut(schedule.capex_multiplier),
        demand_multiplier=hold(schedule.demand_multiplier),
        unicorn_arrival=arrivals,
        nuclear_phaseout=phase,
    )


def derived_features(values: Sequence[float]) -> dict[str, float]:
    """Cumulative renewable resistance and demand rise over the impact years."""
    def total(group):
        return float(sum(values[param_index(group, y)] for y in IMPACT_YEARS))

    return {
        "cum_resistance_pv": total("resistance_pv"),
        "cum_resistance_wind_on": total("resistance_wind_on"),
        "cum_resistance_wind_off": total("resistance_wind_off"),
        "cum_demand": total("demand"),
    }


DERIVED_NAMES = ("cum_resistance_pv", "cum_resistance_wind_on", "cum_resistance_wind_off", "cum_demand")
