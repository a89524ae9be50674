"""Regenerate ``outcomes_1000.jsonl``: a synthetic 1000-outcome set.

Costs are 1000 * (1 + lognormal tail); about 15% of rows are infeasible.
The file is checked in; rerun only when the outcome format changes.

    python tests/fixtures/make_outcomes_fixture.py
"""
import json
from pathlib import Path

import numpy as np

C_BASE = 1000.0
OUT = Path(__file__).with_name("outcomes_1000.jsonl")


def rows(n=1000, seed=2024):
    rng = np.random.default_rng(seed)
    for i in range(n):
        feasible = rng.uniform() >= 0.15
        cost = float(f"{C_BASE * (1.0 + 0.05 * rng.lognormal(0.0, 0.9)):.9g}") if feasible else None
        yield {
            "scenario_id": i + 1, "mode": "perfect", "policy": "baseline",
            "status": "feasible" if feasible else "infeasible",
            "failed_year": None, "total_cost": cost, "cost_normalized": None,
            "emissions_per_year": {}, "capacities": {}, "additions": {},
            "resource_use": {}, "error": None,
        }


if __name__ == "__main__":
    with open(OUT, "w", encoding="utf-8") as fh:
        for r in rows():
            fh.write(json.dumps(r, sort_keys=True) + "\n")
    print(OUT)
