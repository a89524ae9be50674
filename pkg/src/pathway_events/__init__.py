"""Unexpected-event scenario exploration for multi-phase energy-transition pathways."""

from .energy_model import EnergySystemDataset, ghg_limit, load_dataset, shipped_dataset_path
from .pathway import PathwayOutcome, SolveOptions, build_lp, solve_myopic, solve_perfect_foresight
from .policies import apply_policy
from .scenario_space import ScenarioVector, build_schedule, discretize, generate_scenarios, reveal

__version__ = "0.1.0"

__all__ = [
    "EnergySystemDataset", "PathwayOutcome", "ScenarioVector", "SolveOptions",
    "apply_policy", "build_lp", "build_schedule", "discretize", "generate_scenarios",
    "ghg_limit", "load_dataset", "reveal", "shipped_dataset_path",
    "solve_myopic", "solve_perfect_foresight",
]
