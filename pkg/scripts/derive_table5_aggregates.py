#!/usr/bin/env python3
"""Back-solve the aggregate inputs behind the published critical-weight table.

The published table reports critical weights to two decimals but not the
aggregates.  With ``gK = 1`` the corporate tax rate cancels, so the two
published ``gK = 1`` weights of each period (low and high profit
elasticity) bound the profit-to-wage ratio PTP/PTW given IT = 0.14 PTW.
The midpoint of the intersection is used.  The weights are scale-free in
the aggregates, so PTW is set to an illustrative 1e11 dollars.

Per-capita inputs for the endogenous columns: the pre-tax statistic of
low-skill workers is 19,396.69 dollars, scaled by 1.14 into a post-tax
value; pre-tax profit per capitalist is taken as six times that post-tax
value, the upper end of the stated five-to-six range.  The script checks
that the resulting ratio lies inside the band that reproduces the three
non-zero endogenous cells and writes the bundled TOML.

Usage: python scripts/derive_table5_aggregates.py [output.toml]
"""

import sys
from pathlib import Path

from minwage import suffstats as S

EPS_U, EPS_IT = 0.017, -0.05
EPS_PI = {"low": -0.047, "high": -0.062}
IT_RATIO = 0.14
U_PRETAX = 19396.69
PROFIT_MULTIPLE = 6.0
PTW_DOLLARS = 1.0e11
PUBLISHED_GK1 = {"past": {"low": 0.98, "high": 1.52}, "today": {"low": 0.99, "high": 1.54}}
TAX = {"past": (0.35, 0.20), "today": (0.21, 0.13)}


def derive():
    periods = {}
    profit = PROFIT_MULTIPLE * U_PRETAX * (1.0 + IT_RATIO)
    for name, tg in PUBLISHED_GK1.items():
        agg = S.backsolve_aggregates(tg, EPS_U, EPS_IT, EPS_PI, IT_RATIO, PTW=1.0)
        periods[name] = {"PTW": PTW_DOLLARS, "IT": IT_RATIO * PTW_DOLLARS,
                         "PTP": agg["PTP"] * PTW_DOLLARS,
                         "profit_per_capitalist": profit,
                         "t_statutory": TAX[name][0], "t_effective": TAX[name][1]}
    past = periods["past"]
    x = S.ElasticityInputs(EPS_U, EPS_IT, EPS_PI["high"], past["PTW"], past["IT"], past["PTP"],
                           past["t_statutory"], it_to_ptw_ratio=IT_RATIO)
    lo, hi = S.omega_range({1.0: 0.12, 1.5: 0.09, 2.0: 0.08}, x)
    ratio = U_PRETAX * (1 + IT_RATIO) / ((1 - past["t_statutory"]) * profit)
    if not lo <= ratio <= hi:
        raise SystemExit(f"per-capita ratio {ratio:.4f} outside [{lo:.4f}, {hi:.4f}]")
    return periods, (lo, hi, ratio)


def render(periods, band):
    lines = ["# Aggregates back-solved from the published gK = 1 critical weights.",
             "# Generated by scripts/derive_table5_aggregates.py; weights are scale-free in PTW.",
             f"# per-capita ratio U_post/((1-t)Pi) at t=0.35: {band[2]:.6f} (valid band {band[0]:.6f}..{band[1]:.6f})",
             "", 'provenance = "back-solved from published gK=1 weights; PTW scale illustrative"',
             f"eps_U_pretax = {EPS_U}", f"eps_IT = {EPS_IT}", f"it_to_ptw_ratio = {IT_RATIO}",
             f"U_pretax_per_capita = {U_PRETAX}", "", "[eps_profit]",
             f"low = {EPS_PI['low']}", f"high = {EPS_PI['high']}"]
    for name, agg in periods.items():
        lines += ["", f"[periods.{name}]"] + [f"{k} = {v!r}" for k, v in agg.items()]
    return "\n".join(lines) + "\n"


if __name__ == "__main__":
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else (
        Path(__file__).resolve().parents[1] / "src" / "minwage" / "data" / "table5.toml")
    periods, band = derive()
    out.write_text(render(periods, band))
    print(f"wrote {out}")
