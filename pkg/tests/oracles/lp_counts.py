"""Count LP variables and rows by walking a dataset JSON file directly.

Independent of the package: reads the raw document and applies the model's
counting rules (no events, baseline policy, full 2020-2050 window).

    python tests/oracles/lp_counts.py path/to/dataset.json
"""
import json
import sys

YEARS = [2020, 2025, 2030, 2035, 2040, 2045, 2050]


def count(doc):
    n_y, n_dec = len(YEARS), len(YEARS) - 1
    techs = doc["technologies"]
    n_t = len(techs)
    n_s = len(doc["slices"])
    n_r = len(doc["resources"])
    n_storage = sum(1 for t in techs if t.get("storage"))
    lt = [t for t in techs if t["flags"].get("heating_class") in ("lt_decentral", "lt_dhn")]
    mob = [t for t in techs if t["flags"].get("mobility_class", "none") != "none"]
    groups = [g for g in (lt, mob) if g]
    n_group_techs = sum(len(g) for g in groups)
    variables = {
        "F": n_t * n_y,
        "A": n_t * n_dec,
        "D": n_t * n_dec,
        "O": n_t * n_y * n_s,
        "C": n_storage * n_y * n_s,
        "R": n_r * n_y * n_s,
        "V": n_group_techs * n_dec,
    }
    rows = {
        "balance": len(doc["layers"]) * n_y * n_s,
        "cap": n_t * n_y * n_s,
        "charge_cap": n_storage * n_y * n_s,
        "cycle": n_storage * n_y,
        "avail": n_r * n_y,
        "ghg": n_y,
        "continuity": n_t * n_dec,
        "vintage": n_t * n_dec,
        "reduction": n_group_techs * n_dec,
        "turnover": len(groups) * n_dec,
    }
    return {
        "variables": sum(variables.values()),
        "constraints": sum(rows.values()),
        "variables_by_family": variables,
        "constraints_by_family": rows,
    }


if __name__ == "__main__":
    with open(sys.argv[1], encoding="utf-8") as fh:
        print(json.dumps(count(json.load(fh)), indent=2, sort_keys=True))
