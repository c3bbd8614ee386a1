"""Command-line entry point: ``minwage {solve,calibrate,grid,suffstats,events}``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import config as C
from .errors import ConfigError, DataError, MinwageError

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_DATA, EXIT_INFEASIBLE = 0, 2, 3, 4, 5


# ---------------------------------------------------------------------------
# output

def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


class Writer:
    """Writes every output file with the same metadata header."""

    def __init__(self, out: Path, cfg: dict, command: str, seed, fmt: str):
        self.out = out
        self.fmt = fmt
        clean = {k: v for k, v in cfg.items() if not k.startswith("_")}
        self.meta = {"tool": "minwage", "version": __version__, "command": command,
                     "config_hash": C.config_hash(cfg), "seed": seed, "config": _clean(clean)}
        self.written = []
        out.mkdir(parents=True, exist_ok=True)

    def _path(self, name):
        p = self.out / name
        self.written.append(p.name)
        return p

    def json(self, name, payload):
        doc = {"metadata": self.meta, **_clean(payload)}
        self._path(name).write_text(json.dumps(doc, indent=2, sort_keys=False) + "\n")

    def table(self, stem, rows, columns=None):
        """Write ``rows`` as ``stem.csv`` or ``stem.json`` per ``--format``."""
        rows = list(rows)
        if self.fmt == "json":
            self.json(f"{stem}.json", {"rows": rows})
            return
        columns = columns or (list(rows[0]) if rows else [])
        buf = io.StringIO()
        for key in ("tool", "version", "command", "config_hash", "seed"):
            buf.write(f"# {key}: {self.meta[key]}\n")
        buf.write("# config: " + json.dumps(self.meta["config"], sort_keys=True,
                                             separators=(",", ":")) + "\n")
        w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(r.get(k)) for k in columns})
        self._path(f"{stem}.csv").write_text(buf.getvalue())


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return "" if not math.isfinite(v) else repr(float(v))
    if isinstance(v, np.generic):
        return v.item()
    return v


# ---------------------------------------------------------------------------
# commands

def cmd_solve(cfg, args, out: Writer):
    from .equilibrium import check_efficiency, close_budget, constrained_profit_derivative, to_record
    params, pol, opts = C.model_params(cfg), C.policy(cfg), C.solver_options(cfg)
    eq = close_budget(params, pol, opts)
    rec = to_record(eq, params)
    diag = {"max_foc_residual": max(rec["max_residual_S"], rec["max_residual_M"]),
            "budget_residual": eq.budget_residual}
    eff = check_efficiency(eq, params)
    diag["efficiency_residual"] = eff.residual
    diag["efficiency_note"] = "planner condition holds only at zero taxes and no minimum wage"
    if eq.services.mw_binding:
        diag["constrained_profit_derivative_S"] = constrained_profit_derivative(eq, params)
    from .calibration import compute_moments
    moments = compute_moments(params, pol, opts).to_dict()
    out.json("equilibrium.json", {"equilibrium": rec, "moments": moments, "diagnostics": diag})
    out.table("equilibrium", [{"key": k, "value": v} for k, v in rec.items()], ["key", "value"])
    # an undefined welfare level is reported, not an error; a budget that cannot close raises
    return {"y0": eq.y0_solved, "social_welfare": eq.social_welfare, "feasible": eq.feasible,
            "reason": eq.reason}


def cmd_calibrate(cfg, args, out: Writer):
    from .calibration import estimate, spec_from_config
    from .model import params_to_flat
    spec = spec_from_config(cfg, C.model_params(cfg), C.policy(cfg), C.solver_options(cfg))
    res = estimate(spec)
    tgt = spec.targets.to_dict()
    fit = [{"moment": k, "target": tgt[k], "model": v,
            "rel_error": (v - tgt[k]) / tgt[k] if tgt[k] else None}
           for k, v in res.moments.to_dict().items()]
    out.json("estimates.json", {"params": params_to_flat(res.params), "loss": res.loss,
                                "converged": res.converged, "n_evals": res.n_evals,
                                "target_set": cfg["calibration"]["target_set"], "fit": fit})
    out.table("moments", fit, ["moment", "target", "model", "rel_error"])
    from .calibration import FREE_PARAMS
    cols = ["evaluation", "loss", "best_loss", "block"] + list(FREE_PARAMS)
    out.table("trace", [dict(zip(cols, row)) for row in res.trace], cols)
    return {"loss": res.loss, "converged": res.converged}


def cmd_grid(cfg, args, out: Writer):
    from . import policy as P
    params, opts = C.model_params(cfg), C.solver_options(cfg)
    grid = P.PolicyGrid.from_config(cfg["grid"])
    surf = P.sweep(params, grid, opts, jobs=args.jobs)
    env = P.envelope(surf)
    per_tax = P.optimal_mw_per_tax(surf)
    opt = P.joint_optimum(surf)
    viol = P.monotonicity_violations(P.optimal_mw_matrix(surf))
    summary = {
        "grid_shape": list(grid.shape), "n_cells": int(np.prod(grid.shape)),
        "n_feasible": int(surf.feasible.sum()), "joint_optimum": opt,
        "market_wage_hourly_range": [float(np.nanmin(surf.market_wage_hourly)),
                                     float(np.nanmax(surf.market_wage_hourly))],
        "envelope_unimodal": P.is_unimodal([r["social_welfare"] for r in env]),
        "nonbinding_invariance": P.nonbinding_invariance(surf),
        "monotonicity_violations": viol}
    out.json("summary.json", summary)
    out.table("surface", surf.records())
    out.table("envelope", env)
    out.table("optimal_mw", per_tax)
    return {"joint_optimum": opt}


def cmd_suffstats(cfg, args, out: Writer):
    from .suffstats import table5
    agg_path = C.resolve(cfg, cfg["suffstats"]["aggregates"])
    agg = C._read(agg_path)
    rows = table5(agg)
    out.table("table5", rows)
    out.json("suffstats.json", {"aggregates": agg, "n_cells": len(rows),
                                "clamped": sum(r["clamped"] for r in rows)})
    return {"n_cells": len(rows)}


def _event_inputs(cfg, seed):
    from . import econpanel as E
    ev = cfg["events"]
    if ev["source"] == "synthetic":
        s = ev["synthetic"]
        sc = E.SynthConfig(n_states=int(s["n_states"]), years=(int(s["first_year"]), int(s["last_year"])),
                           n_events=int(s["n_events"]), effect=E.step_effect(float(s["effect"])),
                           noise=float(s["noise"]), seed=int(seed), small_prob=float(s["small_prob"]),
                           region_shock=float(s["region_shock"]), n_industries=int(s["n_industries"]),
                           base_year=int(ev["base_year"]))
        return E.synth_panel(sc)
    if ev["source"] == "files":
        return (E.read_mw_panel(C.resolve(cfg, ev["mw_panel"])),
                E.read_deflator(C.resolve(cfg, ev["deflator"])),
                E.read_outcomes(C.resolve(cfg, ev["outcomes"])))
    raise ConfigError(f"events.source must be 'synthetic' or 'files', got {ev['source']!r}")


FE_SETS = {"year": (("unit",), ("year",)),
           "region": (("unit",), ("region", "year")),
           "division": (("unit",), ("division", "year"))}


def cmd_events(cfg, args, out: Writer):
    from . import econpanel as E
    ev = cfg["events"]
    if ev["fe"] not in FE_SETS:
        raise ConfigError(f"events.fe must be one of {sorted(FE_SETS)}")
    panel, deflator, outcomes = _event_inputs(cfg, ev["synthetic"]["seed"])
    rules = E.EventRules(min_real_increase=float(ev["min_real_increase"]),
                         min_affected_share=float(ev["min_affected_share"]),
                         clean_pre_years=int(ev["clean_pre_years"]),
                         window=(-int(ev["window_pre"]), int(ev["window_post"])),
                         base_year=int(ev["base_year"]))
    weights = None if ev["weights"] == "none" else ev["weights"]
    fe = FE_SETS[ev["fe"]]
    if ev["fe"] != "year" and ev["fe"] not in outcomes.columns:
        raise DataError(f"outcomes lack a {ev['fe']!r} column for {ev['fe']}-by-year effects")
    common = dict(fe=fe, controls=ev["controls"], weights=weights,
                  preperiod_weights=bool(ev["preperiod_weights"]), level=float(ev["level"]))
    specs = {"event_study": E.FitSpec(kind="event_study", **common),
             "did": E.FitSpec(kind="did", **common)}
    res = E.run_pipeline(panel, deflator, outcomes, rules, specs, jobs=args.jobs)
    det = res.detection
    out.table("events", det.events.to_dict("records"),
              ["state", "year", "real_increase", "affected_share", "dlog_mw"])
    plot = []
    for name, rep in res.reports.items():
        out.table(f"coefficients_{name}", rep.rows(), ["tau", "beta", "se", "ci_low", "ci_high"])
        plot += [{"spec": name, "fe": ev["fe"], **r} for r in rep.rows() if name == "event_study"]
    out.table("event_study_plot", plot, ["spec", "fe", "tau", "beta", "se", "ci_low", "ci_high"])
    summary = {"n_events": len(det.events), "n_events_used": int(res.stack.events.shape[0]),
               "n_small": len(det.small), "n_federal": len(det.federal),
               "n_excluded": len(det.excluded), "stack_rows": int(len(res.stack.data)),
               "diagnostics": res.stack.diagnostics}
    for name, rep in res.reports.items():
        summary[name] = {"headline": rep.headline, "headline_se": rep.headline_se,
                         "dlog_mw": rep.dlog_mw, "elasticity": rep.elasticity,
                         "n_obs": rep.n_obs, "n_clusters": rep.n_clusters,
                         "dropped_controls": len(rep.dropped)}
    if ev["source"] == "synthetic":
        summary["planted_effect"] = float(ev["synthetic"]["effect"])
    out.json("summary.json", summary)
    return {"did": res.reports["did"].headline}


COMMANDS = {"solve": cmd_solve, "calibrate": cmd_calibrate, "grid": cmd_grid,
            "suffstats": cmd_suffstats, "events": cmd_events}


def _seed_for(cmd, cfg):
    if cmd == "calibrate":
        return cfg["calibration"]["seed"]
    if cmd == "events" and cfg["events"]["source"] == "synthetic":
        return cfg["events"]["synthetic"]["seed"]
    return None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="minwage", description=__doc__)
    ap.add_argument("--version", action="version", version=f"minwage {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=COMMANDS[name].__name__.replace("cmd_", "") + " command")
        p.add_argument("--config", type=Path, help="TOML config, or an emitted JSON/CSV output to replay")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        p.add_argument("--jobs", type=int, default=1, help="worker processes or threads")
        p.add_argument("--seed", type=int, help="overrides the command's seed")
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config value, e.g. policy.t=0.3")
        p.add_argument("--format", choices=("csv", "json"), default="csv", help="table format")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.jobs < 1:
            raise ConfigError("--jobs must be at least 1")
        cfg = C.load_config(args.config, args.overrides)
        if args.seed is not None:
            cfg["calibration"]["seed"] = args.seed
            cfg["events"]["synthetic"]["seed"] = args.seed
        if cfg["events"]["source"] == "files":
            for key in ("mw_panel", "deflator", "outcomes"):
                cfg["events"][key] = str(C.resolve(cfg, cfg["events"][key]).resolve())
        out = Writer(args.out, cfg, args.command, _seed_for(args.command, cfg), args.format)
        result = COMMANDS[args.command](cfg, args, out)
    except MinwageError as exc:
        print(f"minwage {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    print(json.dumps(_clean({"command": args.command, "out": str(args.out),
                             "files": out.written, **result})))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
