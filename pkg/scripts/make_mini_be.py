"""Regenerate src/pathway_events/data/mini_be.json (the shipped reference dataset)."""
import json
from pathlib import Path

SLICES = ["winter_day", "winter_night", "mid_day", "mid_night", "summer_day", "summer_night"]
YEARS = [2020, 2025, 2030, 2035, 2040, 2045, 2050]


def per_slice(*vals):
    return dict(zip(SLICES, vals))


def flat(v):
    return {str(y): v for y in YEARS}


def ramp(v2020, v2030, v2050):
    out = {"2020": v2020, "2025": v2020 + (v2030 - v2020) / 2}
    for y in (2030, 2035, 2040, 2045, 2050):
        out[str(y)] = v2030 + (v2050 - v2030) * (y - 2030) / 20
    return out


def tech(name, outputs, inputs, capex, opex, life, pmax, addlim, **flags):
    return {
        "name": name, "layer_outputs": outputs, "layer_inputs": inputs,
        "capex": capex, "opex_fixed": opex, "lifetime_phases": life,
        "potential_max": pmax, "addition_limit_per_phase": addlim, "flags": flags,
    }


E, LT, HT, MOB = "ELECTRICITY", "HEAT_LT", "HEAT_HT", "MOBILITY"
GAS, H2, NH3, U, CO2 = "GAS", "H2", "AMMONIA", "URANIUM", "CO2_CAPTURED"

techs = [
    tech("pv", {E: per_slice(0.07, 0.0, 0.20, 0.0, 0.30, 0.0)}, {}, 600, 12, 5, 60, 30,
         imported=True, renewable_class="pv"),
    tech("wind_onshore", {E: per_slice(0.36, 0.36, 0.26, 0.26, 0.16, 0.16)}, {}, 1300, 30, 5, 16, 8,
         renewable_class="wind_on"),
    tech("wind_offshore", {E: per_slice(0.55, 0.55, 0.45, 0.45, 0.30, 0.30)}, {}, 2600, 70, 5, 12, 6,
         renewable_class="wind_off"),
    tech("nuclear", {E: 1.0}, {U: 3.0}, 6000, 120, 7, 10, 0, nuclear_class="conventional"),
    tech("smr", {E: 1.0}, {U: 3.0}, 6500, 130, 7, 4, 2, nuclear_class="smr", unicorn_class="smr"),
    tech("ccgt", {E: 1.0}, {GAS: 1.75}, 800, 20, 6, 20, 8),
    tech("nh3_ccgt", {E: 1.0}, {NH3: 1.8}, 950, 25, 6, 16, 8, unicorn_class="nh3_ccgt"),
    tech("geothermal", {E: 1.0}, {}, 9000, 180, 7, 2, 2, unicorn_class="geothermal"),
    tech("electrolyzer", {H2: 1.0}, {E: 1.4}, 700, 20, 3, 30, 16, imported=True),
    tech("nh3_cracker", {H2: 1.0}, {NH3: 1.3}, 350, 10, 5, 16, 8, unicorn_class="nh3_crack"),
    tech("methanation", {GAS: 1.0}, {H2: 1.3, CO2: 0.2}, 500, 15, 5, 6, 3),
    tech("dac", {CO2: 1.0}, {E: 2.0}, 2500, 80, 4, 4, 2, unicorn_class="dac"),
    tech("ccs", {CO2: 1.0}, {E: 0.4}, 900, 30, 5, 2, 1, unicorn_class="ccs"),
    tech("gas_boiler", {LT: 1.0}, {GAS: 1.1}, 150, 5, 7, 60, 20, heating_class="lt_decentral"),
    tech("heat_pump", {LT: 1.0}, {E: 0.33}, 900, 15, 7, 60, 20, imported=True,
         heating_class="lt_decentral"),
    tech("h2_chp", {LT: 1.0, E: 0.8}, {H2: 2.0}, 1200, 30, 6, 12, 6, heating_class="lt_dhn"),
    tech("gas_furnace", {HT: 1.0}, {GAS: 1.1}, 200, 6, 7, 20, 8, heating_class="ht"),
    tech("electric_furnace", {HT: 1.0}, {E: 1.05}, 300, 8, 6, 20, 8, heating_class="ht"),
    tech("car_gas", {MOB: 1.0}, {GAS: 1.0}, 700, 20, 7, 20, 8, mobility_class="passenger"),
    tech("car_ev", {MOB: 1.0}, {E: 0.35}, 1100, 20, 7, 20, 8, imported=True,
         mobility_class="passenger"),
    tech("truck_gas", {MOB: 1.0}, {GAS: 1.2}, 900, 25, 7, 12, 6, mobility_class="freight"),
    tech("truck_fc", {MOB: 1.0}, {H2: 0.7}, 1600, 30, 7, 12, 6, mobility_class="freight"),
]

resources = [
    {"name": "gas_fossil", "layer": GAS, "price": 30, "ghg_intensity": 200,
     "availability_per_year": flat(10000), "import_group": "none"},
    {"name": "efuel_gas", "layer": GAS, "price": 110, "ghg_intensity": 0,
     "availability_per_year": ramp(4, 8, 90), "import_group": "electrofuel"},
    {"name": "efuel_h2", "layer": H2, "price": 100, "ghg_intensity": 0,
     "availability_per_year": ramp(2, 4, 40), "import_group": "electrofuel"},
    {"name": "ammonia", "layer": NH3, "price": 90, "ghg_intensity": 0,
     "availability_per_year": ramp(2, 4, 60), "import_group": "electrofuel"},
    {"name": "biomethane", "layer": GAS, "price": 70, "ghg_intensity": 0,
     "availability_per_year": ramp(10, 20, 40), "import_group": "biofuel"},
    {"name": "elec_import", "layer": E, "price": 85, "ghg_intensity": 0,
     "availability_per_year": flat(50), "import_group": "electricity"},
    {"name": "uranium", "layer": U, "price": 3, "ghg_intensity": 0,
     "availability_per_year": flat(1000), "import_group": "none"},
]

demands = [
    {"layer": E, "baseline_per_year": flat(80),
     "slice_profile": per_slice(0.19, 0.17, 0.17, 0.15, 0.17, 0.15)},
    {"layer": LT, "baseline_per_year": flat(100),
     "slice_profile": per_slice(0.30, 0.30, 0.12, 0.12, 0.08, 0.08)},
    {"layer": HT, "baseline_per_year": flat(50),
     "slice_profile": per_slice(0.17, 0.16, 0.17, 0.16, 0.17, 0.17)},
    {"layer": MOB, "baseline_per_year": flat(60),
     "slice_profile": per_slice(0.2, 0.14, 0.2, 0.13, 0.2, 0.13)},
]

doc = {
    "name": "mini-be",
    "layers": [E, LT, HT, MOB, GAS, H2, NH3, U, CO2],
    "captured_co2_layer": CO2,
    "slices": [{"id": s, "hours": 1460} for s in SLICES],
    "technologies": techs,
    "resources": resources,
    "demands": demands,
    "ghg": {"limit_2020": 62000, "limit_2050": 5000},
    "initial_capacities": {
        "pv": 5, "wind_onshore": 2.5, "wind_offshore": 2.2, "nuclear": 5, "ccgt": 8,
        "gas_boiler": 24, "gas_furnace": 7, "car_gas": 6.5, "truck_gas": 3.5,
    },
    "turnover_caps": {"lt_heating": 1 / 3, "mobility": 0.5},
    "policy_targets": {
        "electrolyzers": ["electrolyzer"],
        "electrolyzer_min_capacity_2030": 0.15,
        "hydrogen_mobility": ["truck_fc"],
        "hydrogen_mobility_share_2030": 0.05,
        "hydrogen_cogeneration": ["h2_chp"],
        "hydrogen_lt_heat_share_2030": 0.1,
    },
}

if __name__ == "__main__":
    out = Path(__file__).resolve().parents[1] / "src" / "pathway_events" / "data" / "mini_be.json"
    out.write_text(json.dumps(doc, indent=2) + "\n")
    print(out)
