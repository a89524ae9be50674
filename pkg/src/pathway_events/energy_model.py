"""Compact multi-phase whole-energy system: domain types, loading and validation.

A dataset is a single JSON document (see ``data/dataset_schema.json`` for the
field list and units).  Loading validates the document structure against the
JSON schema first and then checks the cross-field invariants that a schema
cannot express (slice weights, layer references, lifetimes, ...).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources as importlib_resources
from pathlib import Path
from typing import Any, Mapping

import jsonschema

YEARS: tuple[int, ...] = (2020, 2025, 2030, 2035, 2040, 2045, 2050)
DECISION_YEARS: tuple[int, ...] = YEARS[1:]
IMPACT_YEARS: tuple[int, ...] = (2035, 2040, 2045, 2050)
YEARS_PER_PHASE = 5
HOURS_PER_YEAR = 8760.0

RENEWABLE_CLASSES = ("pv", "wind_on", "wind_off")
NUCLEAR_CLASSES = ("conventional", "smr")
UNICORN_CLASSES = ("nh3_ccgt", "nh3_crack", "dac", "smr", "ccs", "geothermal")
HEATING_CLASSES = ("lt_decentral", "lt_dhn", "ht")
MOBILITY_CLASSES = ("passenger", "freight")
IMPORT_GROUPS = ("electrofuel", "biofuel", "electricity")


class DatasetError(ValueError):
    """Raised when a dataset document fails schema or invariant validation."""


@dataclass(frozen=True)
class Phase:
    representative_year: int
    index: int

    @property
    def is_decision_phase(self) -> bool:
        return self.representative_year != YEARS[0]


@dataclass(frozen=True)
class TechFlags:
    imported: bool = False
    renewable_class: str = "none"
    nuclear_class: str = "none"
    unicorn_class: str = "none"
    heating_class: str = "none"
    mobility_class: str = "none"


@dataclass(frozen=True)
class Storage:
    """Intra-year storage on one layer; activity is the discharge flow."""

    layer: str
    charge_efficiency: float
    discharge_efficiency: float


@dataclass(frozen=True)
class Technology:
    name: str
    # layer -> per-slice output per unit of activity
    layer_outputs: dict[str, tuple[float, ...]]
    # layer -> input per unit of activity
    layer_inputs: dict[str, float]
    capex: float
    opex_fixed: float
    lifetime_phases: int
    potential_max: float
    addition_limit_per_phase: float
    flags: TechFlags = field(default_factory=TechFlags)
    storage: Storage | None = None


@dataclass(frozen=True)
class Resource:
    name: str
    layer: str
    price: float
    ghg_intensity: float
    availability_per_year: dict[int, float]
    import_group: str = "none"


@dataclass(frozen=True)
class Demand:
    layer: str
    baseline_per_year: dict[int, float]
    slice_profile: tuple[float, ...]


@dataclass(frozen=True)
class GhgTrajectory:
    limit_2020: float
    limit_2050: float


@dataclass(frozen=True)
class TimeSlice:
    slice_id: str
    hours: float


@dataclass(frozen=True)
class EnergySystemDataset:
    name: str
    phases: tuple[Phase, ...]
    layers: tuple[str, ...]
    slices: tuple[TimeSlice, ...]
    technologies: tuple[Technology, ...]
    resources: tuple[Resource, ...]
    demands: tuple[Demand, ...]
    ghg: GhgTrajectory
    initial_capacities: dict[str, float]
    captured_co2_layer: str | None = None
    turnover_caps: dict[str, float] = field(
        default_factory=lambda: {"lt_heating": 1.0 / 3.0, "mobility": 0.5}
    )
    policy_targets: dict[str, Any] = field(default_factory=dict)

    @property
    def years(self) -> tuple[int, ...]:
        return tuple(p.representative_year for p in self.phases)

    def technology(self, name: str) -> Technology:
        for tech in self.technologies:
            if tech.name == name:
                return tech
        raise KeyError(name)

    def resource(self, name: str) -> Resource:
        for res in self.resources:
            if res.name == name:
                return res
        raise KeyError(name)

    def techs_where(self, **flag_values: str | bool) -> list[Technology]:
        """Technologies whose flags match every ``flag=value`` given."""
        out = []
        for tech in self.technologies:
            if all(getattr(tech.flags, k) == v for k, v in flag_values.items()):
                out.append(tech)
        return out


def ghg_limit(traj: GhgTrajectory, year: int) -> float:
    """Linearly decreasing GHG cap between the 2020 and 2050 anchors."""
    if not YEARS[0] <= year <= YEARS[-1]:
        raise ValueError(f"year {year} outside {YEARS[0]}-{YEARS[-1]}")
    # multiply before dividing so grid-aligned cases are exact in floating point
    span = YEARS[-1] - YEARS[0]
    return traj.limit_2020 + (traj.limit_2050 - traj.limit_2020) * (year - YEARS[0]) / span


def _schema() -> dict:
    text = (
        importlib_resources.files("pathway_events")
        .joinpath("data/dataset_schema.json")
        .read_text()
    )
    return json.loads(text)


def shipped_dataset_path(name: str = "mini-be") -> Path:
    """Path of a dataset shipped with the package (``mini-be`` by default)."""
    fname = name.replace("-", "_") + ".json"
    return Path(str(importlib_resources.files("pathway_events").joinpath("data").joinpath(fname)))


def load_dataset(path: str | Path) -> EnergySystemDataset:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return dataset_from_dict(doc)


def dataset_from_dict(doc: Mapping[str, Any]) -> EnergySystemDataset:
    validator = jsonschema.Draft202012Validator(_schema())
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise DatasetError(f"schema violation: {where}: {err.message}")

    slices = tuple(TimeSlice(s["id"], float(s["hours"])) for s in doc["slices"])
    slice_ids = [s.slice_id for s in slices]
    _check_unique("slice", slice_ids)
    total_hours = sum(s.hours for s in slices)
    if abs(total_hours - HOURS_PER_YEAR) > 1e-6:
        raise DatasetError(
            f"invariant violation: slice weights sum to {total_hours}, expected 8760"
        )

    layers = tuple(doc["layers"])
    _check_unique("layer", layers)
    known_layers = set(layers)

    def per_slice(value: Any, where: str) -> tuple[float, ...]:
        if isinstance(value, (int, float)):
            return tuple(float(value) for _ in slices)
        if set(value) != set(slice_ids):
            raise DatasetError(f"schema violation: {where}: slice keys must be {slice_ids}")
        return tuple(float(value[sid]) for sid in slice_ids)

    def check_layer(layer: str, where: str) -> None:
        if layer not in known_layers:
            raise DatasetError(f"invariant violation: undeclared layer {layer!r} in {where}")

    techs = []
    for t in doc["technologies"]:
        name = t["name"]
        outputs = {}
        for layer, val in t["layer_outputs"].items():
            check_layer(layer, f"technologies/{name}/layer_outputs")
            outputs[layer] = per_slice(val, f"technologies/{name}/layer_outputs/{layer}")
        inputs = {}
        for layer, val in t["layer_inputs"].items():
            check_layer(layer, f"technologies/{name}/layer_inputs")
            inputs[layer] = float(val)
        storage = None
        if "storage" in t:
            st = t["storage"]
            check_layer(st["layer"], f"technologies/{name}/storage")
            storage = Storage(st["layer"], float(st["charge_efficiency"]),
                              float(st["discharge_efficiency"]))
        lifetime = int(t["lifetime_phases"])
        if not 1 <= lifetime <= len(YEARS):
            raise DatasetError(f"invariant violation: lifetime of {name} is {lifetime}, not in [1, 7]")
        for key in ("capex", "opex_fixed", "potential_max", "addition_limit_per_phase"):
            if t[key] < 0:
                raise DatasetError(f"invariant violation: {key} of {name} is negative")
        techs.append(
            Technology(
                name=name,
                layer_outputs=outputs,
                layer_inputs=inputs,
                capex=float(t["capex"]),
                opex_fixed=float(t["opex_fixed"]),
                lifetime_phases=lifetime,
                potential_max=float(t["potential_max"]),
                addition_limit_per_phase=float(t["addition_limit_per_phase"]),
                flags=TechFlags(**t.get("flags", {})),
                storage=storage,
            )
        )
    _check_unique("technology", [t.name for t in techs])

    co2_layer = doc.get("captured_co2_layer")
    if co2_layer is not None:
        check_layer(co2_layer, "captured_co2_layer")
    for tech in techs:
        if tech.flags.unicorn_class in ("dac", "ccs"):
            if co2_layer is None or set(tech.layer_outputs) != {co2_layer}:
                raise DatasetError(
                    f"invariant violation: {tech.name} must output only the captured-CO2 layer"
                )

    res_list = []
    for r in doc["resources"]:
        check_layer(r["layer"], f"resources/{r['name']}")
        avail = {int(y): float(v) for y, v in r["availability_per_year"].items()}
        if set(avail) != set(YEARS):
            raise DatasetError(
                f"schema violation: resources/{r['name']}/availability_per_year must cover {YEARS}"
            )
        if any(v < 0 for v in avail.values()):
            raise DatasetError(f"invariant violation: negative availability for {r['name']}")
        if r["ghg_intensity"] < 0:
            raise DatasetError(f"invariant violation: negative ghg_intensity for {r['name']}")
        res = Resource(
            name=r["name"],
            layer=r["layer"],
            price=float(r["price"]),
            ghg_intensity=float(r["ghg_intensity"]),
            availability_per_year=avail,
            import_group=r.get("import_group", "none"),
        )
        if res.import_group == "electrofuel":
            _check_linear_ramp(res)
        res_list.append(res)
    _check_unique("resource", [r.name for r in res_list])

    demands = []
    for d in doc["demands"]:
        check_layer(d["layer"], "demands")
        base = {int(y): float(v) for y, v in d["baseline_per_year"].items()}
        if set(base) != set(YEARS):
            raise DatasetError(f"schema violation: demands/{d['layer']}/baseline_per_year must cover {YEARS}")
        if any(v < 0 for v in base.values()):
            raise DatasetError(f"invariant violation: negative demand baseline for {d['layer']}")
        profile = per_slice(d["slice_profile"], f"demands/{d['layer']}/slice_profile")
        if any(p < 0 for p in profile) or abs(sum(profile) - 1.0) > 1e-9:
            raise DatasetError(f"invariant violation: slice profile of {d['layer']} must sum to 1")
        demands.append(Demand(d["layer"], base, profile))
    _check_unique("demand layer", [d.layer for d in demands])

    ghg = GhgTrajectory(float(doc["ghg"]["limit_2020"]), float(doc["ghg"]["limit_2050"]))
    if ghg.limit_2050 > ghg.limit_2020:
        raise DatasetError("invariant violation: ghg limit_2050 exceeds limit_2020")

    tech_by_name = {t.name: t for t in techs}
    initial = {}
    for name, cap in doc["initial_capacities"].items():
        if name not in tech_by_name:
            raise DatasetError(f"invariant violation: initial capacity for unknown technology {name!r}")
        tech = tech_by_name[name]
        if cap < 0 or cap > tech.potential_max:
            raise DatasetError(f"invariant violation: initial capacity of {name} exceeds potential_max")
        if cap > 0 and tech.flags.unicorn_class != "none":
            raise DatasetError(f"invariant violation: unicorn technology {name} has initial capacity")
        initial[name] = float(cap)

    kwargs = {}
    if "turnover_caps" in doc:
        kwargs["turnover_caps"] = {k: float(v) for k, v in doc["turnover_caps"].items()}
    if "policy_targets" in doc:
        kwargs["policy_targets"] = dict(doc["policy_targets"])

    return EnergySystemDataset(
        name=doc.get("name", "unnamed"),
        phases=tuple(Phase(y, i) for i, y in enumerate(YEARS)),
        layers=layers,
        slices=slices,
        technologies=tuple(techs),
        resources=tuple(res_list),
        demands=tuple(demands),
        ghg=ghg,
        initial_capacities=initial,
        captured_co2_layer=co2_layer,
        **kwargs,
    )


def _check_unique(kind: str, names) -> None:
    seen = set()
    for n in names:
        if n in seen:
            raise DatasetError(f"duplicate identifier: {kind} {n!r}")
        seen.add(n)


def _check_linear_ramp(res: Resource) -> None:
    a, b = res.availability_per_year[2030], res.availability_per_year[2050]
    for year in (2035, 2040, 2045):
        expected = a + (b - a) * (year - 2030) / 20.0
        got = res.availability_per_year[year]
        if not math.isclose(got, expected, rel_tol=1e-9, abs_tol=1e-9):
            raise DatasetError(
                f"invariant violation: electrofuel availability of {res.name} must rise "
                f"linearly from 2030 to 2050 (year {year}: {got} != {expected})"
            )


def dataset_to_dict(ds: EnergySystemDataset) -> dict[str, Any]:
    """Inverse of :func:`dataset_from_dict`; reloading reproduces ``ds`` exactly."""
    slice_ids = [s.slice_id for s in ds.slices]

    def slice_map(values) -> dict[str, float]:
        return dict(zip(slice_ids, values))

    techs = []
    for t in ds.technologies:
        entry: dict[str, Any] = {
            "name": t.name,
            "layer_outputs": {k: slice_map(v) for k, v in t.layer_outputs.items()},
            "layer_inputs": dict(t.layer_inputs),
            "capex": t.capex,
            "opex_fixed": t.opex_fixed,
            "lifetime_phases": t.lifetime_phases,
            "potential_max": t.potential_max,
            "addition_limit_per_phase": t.addition_limit_per_phase,
            "flags": {
                "imported": t.flags.imported,
                "renewable_class": t.flags.renewable_class,
                "nuclear_class": t.flags.nuclear_class,
                "unicorn_class": t.flags.unicorn_class,
                "heating_class": t.flags.heating_class,
                "mobility_class": t.flags.mobility_class,
            },
        }
        if t.storage is not None:
            entry["storage"] = {
                "layer": t.storage.layer,
                "charge_efficiency": t.storage.charge_efficiency,
                "discharge_efficiency": t.storage.discharge_efficiency,
            }
        techs.append(entry)
    doc: dict[str, Any] = {
        "name": ds.name,
        "layers": list(ds.layers),
        "slices": [{"id": s.slice_id, "hours": s.hours} for s in ds.slices],
        "technologies": techs,
        "resources": [
            {
                "name": r.name,
                "layer": r.layer,
                "price": r.price,
                "ghg_intensity": r.ghg_intensity,
                "availability_per_year": {str(y): v for y, v in r.availability_per_year.items()},
                "import_group": r.import_group,
            }
            for r in ds.resources
        ],
        "demands": [
            {
                "layer": d.layer,
                "baseline_per_year": {str(y): v for y, v in d.baseline_per_year.items()},
                "slice_profile": slice_map(d.slice_profile),
            }
            for d in ds.demands
        ],
        "ghg": {"limit_2020": ds.ghg.limit_2020, "limit_2050": ds.ghg.limit_2050},
        "initial_capacities": dict(ds.initial_capacities),
        "turnover_caps": dict(ds.turnover_caps),
        "policy_targets": dict(ds.policy_targets),
    }
    if ds.captured_co2_layer is not None:
        doc["captured_co2_layer"] = ds.captured_co2_layer
    return doc


def save_dataset(ds: EnergySystemDataset, path: str | Path) -> None:
    Path(path).write_text(json.dumps(dataset_to_dict(ds), indent=2) + "\n", encoding="utf-8")
