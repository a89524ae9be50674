"""Early-stage energy policy decisions injected into the pathway LP.

A policy is a list of symbolic rules; :func:`pathway_events.pathway.build_lp`
resolves them against the dataset and emits one named row per rule instance.
"""
from __future__ import annotations

from dataclasses import dataclass

from .energy_model import NUCLEAR_CLASSES, RENEWABLE_CLASSES

POLICY_NAMES = (
    "baseline",
    "accelerate_renewables",
    "delay_renewables",
    "nuclear_phaseout_2030",
    "hydrogen_route",
)


@dataclass(frozen=True)
class FixAtPotential:
    """Installed capacity equals potential_max in ``year``."""

    renewable_classes: tuple[str, ...]
    year: int


@dataclass(frozen=True)
class NoAdditions:
    """No capacity additions during the phase ending in ``year``."""

    renewable_classes: tuple[str, ...]
    year: int


@dataclass(frozen=True)
class RemoveFrom:
    """Capacity forced to zero from ``year`` onwards."""

    nuclear_classes: tuple[str, ...]
    year: int


@dataclass(frozen=True)
class MinCapacity:
    """Summed capacity of the listed technologies is at least a dataset target."""

    techs_key: str
    target_key: str
    year: int


@dataclass(frozen=True)
class MinOutputShare:
    """Listed technologies supply at least a share of their main demand layer."""

    techs_key: str
    share_key: str
    year: int


@dataclass(frozen=True)
class Policy:
    name: str
    rules: tuple = ()


def apply_policy(name: str) -> Policy:
    if name == "baseline":
        return Policy(name)
    if name == "accelerate_renewables":
        return Policy(name, (FixAtPotential(RENEWABLE_CLASSES, 2030),))
    if name == "delay_renewables":
        return Policy(name, (NoAdditions(RENEWABLE_CLASSES, 2030),))
    if name == "nuclear_phaseout_2030":
        return Policy(name, (RemoveFrom(NUCLEAR_CLASSES, 2030),))
    if name == "hydrogen_route":
        return Policy(name, (
            MinCapacity("electrolyzers", "electrolyzer_min_capacity_2030", 2030),
            MinOutputShare("hydrogen_mobility", "hydrogen_mobility_share_2030", 2030),
            MinOutputShare("hydrogen_cogeneration", "hydrogen_lt_heat_share_2030", 2030),
        ))
    raise ValueError(f"unknown policy {name!r}; expected one of {POLICY_NAMES}")
