"""Policy-grid welfare sweeps, envelopes and optima."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import model as M
from .equilibrium import SolverOptions, close_budget, solve_market
from .errors import MinwageError, SolverError


def _arange(start, stop, step):
    count = int(round((stop - start) / step)) + 1
    return tuple(round(start + i * step, 10) for i in range(count))


@dataclass(frozen=True)
class PolicyGrid:
    """Tax pairs ``(tau_l, t)`` crossed with hourly minimum wages; ``tau_h`` fixed."""

    tau_l_values: tuple
    t_values: tuple
    mw_values_hourly: tuple
    tau_h: float = 0.3

    def __post_init__(self):
        for name in ("tau_l_values", "t_values", "mw_values_hourly"):
            vals = getattr(self, name)
            if len(vals) == 0 or any(b <= a for a, b in zip(vals, vals[1:])):
                raise ValueError(f"{name} must be non-empty and strictly increasing")

    @classmethod
    def default(cls):
        return cls(_arange(-1.0, 0.3, 0.1), _arange(0.0, 0.5, 0.05), _arange(4.0, 17.0, 0.25), 0.3)

    @classmethod
    def from_config(cls, g: dict):
        return cls(_arange(g["tau_l_start"], g["tau_l_stop"], g["tau_l_step"]),
                   _arange(g["t_start"], g["t_stop"], g["t_step"]),
                   _arange(g["mw_start"], g["mw_stop"], g["mw_step"]),
                   float(g["tau_h"]))

    @property
    def shape(self):
        return len(self.tau_l_values), len(self.t_values), len(self.mw_values_hourly)


@dataclass
class WelfareSurface:
    """Welfare on the grid; ``sw`` is NaN where a cell is infeasible."""

    grid: PolicyGrid
    sw: np.ndarray          # (n_tau_l, n_t, n_mw)
    feasible: np.ndarray    # bool, same shape
    binding: np.ndarray     # bool, same shape
    y0: np.ndarray          # NaN where the budget fails
    market_wage_hourly: np.ndarray  # (n_tau_l, n_t) unconstrained services wage
    reason: np.ndarray      # object, "" where feasible

    def records(self):
        """One dict per cell in grid order."""
        g = self.grid
        for i, tl in enumerate(g.tau_l_values):
            for j, t in enumerate(g.t_values):
                for m, mw in enumerate(g.mw_values_hourly):
                    yield {"tau_l": tl, "tau_h": g.tau_h, "t": t, "mw_hourly": mw,
                           "social_welfare": float(self.sw[i, j, m]) if self.feasible[i, j, m] else "",
                           "feasible": bool(self.feasible[i, j, m]),
                           "mw_binding": bool(self.binding[i, j, m]),
                           "y0": float(self.y0[i, j, m]) if np.isfinite(self.y0[i, j, m]) else "",
                           "market_wage_hourly": float(self.market_wage_hourly[i, j]),
                           "reason": self.reason[i, j, m]}


def _tax_pair_cells(args):
    """All minimum-wage cells for one tax pair.  Pure; safe in a worker process."""
    params, grid, options, i, j = args
    tl, t = grid.tau_l_values[i], grid.t_values[j]
    n = len(grid.mw_values_hourly)
    out = {"sw": [math.nan] * n, "feasible": [False] * n, "binding": [False] * n,
           "y0": [math.nan] * n, "reason": [""] * n, "market_wage": math.nan}
    try:
        mkt_M = solve_market("M", params.manufacturing, params.high, grid.tau_h, t, None, options)
        mkt_S = solve_market("S", params.services, params.low, tl, t, None, options)
    except MinwageError as exc:
        out["reason"] = [f"solver: {exc}"] * n
        return i, j, out
    w_mkt = mkt_S[0].wage
    out["market_wage"] = params.annual_to_hourly(w_mkt)
    pol0 = M.Policy(tau_l=tl, tau_h=grid.tau_h, t=t)
    for m, mw in enumerate(grid.mw_values_hourly):
        mw_a = params.hourly_to_annual(mw)
        try:
            if w_mkt < mw_a - options.bind_tol:
                mS = solve_market("S", params.services, params.low, tl, t, mw_a, options)
            else:
                mS = mkt_S
            eq = close_budget(params, pol0.with_(mw_hourly=mw), options, markets=(mS, mkt_M))
        except MinwageError as exc:
            out["reason"][m] = f"{type(exc).__name__}: {exc}"
            continue
        out["binding"][m] = eq.services.mw_binding
        out["y0"][m] = eq.y0_solved
        if eq.feasible and eq.social_welfare is not None and math.isfinite(eq.social_welfare):
            out["sw"][m] = eq.social_welfare
            out["feasible"][m] = True
        else:
            out["reason"][m] = eq.reason or "non-finite welfare"
    return i, j, out


def sweep(params: M.ModelParams, grid: PolicyGrid, options: SolverOptions = SolverOptions(),
          jobs: int = 1) -> WelfareSurface:
    """Solve every cell of ``grid``.

    Work is split by tax pair; within a pair the unconstrained markets are
    solved once and reused by every non-binding minimum wage, so those
    cells share bit-identical welfare.  Failed cells are recorded as
    infeasible with a reason.  Results are assembled by index, so they do
    not depend on ``jobs`` or completion order.
    """
    ni, nj, nm = grid.shape
    tasks = [(params, grid, options, i, j) for i in range(ni) for j in range(nj)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_tax_pair_cells, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        results = [_tax_pair_cells(t) for t in tasks]
    sw = np.full(grid.shape, np.nan)
    feas = np.zeros(grid.shape, bool)
    bind = np.zeros(grid.shape, bool)
    y0 = np.full(grid.shape, np.nan)
    reason = np.empty(grid.shape, dtype=object)
    mwage = np.full((ni, nj), np.nan)
    for i, j, out in results:
        sw[i, j] = out["sw"]
        feas[i, j] = out["feasible"]
        bind[i, j] = out["binding"]
        y0[i, j] = out["y0"]
        reason[i, j] = out["reason"]
        mwage[i, j] = out["market_wage"]
    return WelfareSurface(grid, sw, feas, bind, y0, mwage, reason)


# ---------------------------------------------------------------------------
# optima

def _tax_order(grid):
    """Tax pairs in tie-break order: smaller t, then smaller |tau_l|, then smaller tau_l."""
    pairs = [(i, j) for i in range(len(grid.tau_l_values)) for j in range(len(grid.t_values))]
    return sorted(pairs, key=lambda ij: (grid.t_values[ij[1]], abs(grid.tau_l_values[ij[0]]),
                                         grid.tau_l_values[ij[0]]))


def envelope(surface: WelfareSurface) -> list:
    """Per minimum wage, the feasible tax pair with maximal welfare.

    Returns a list of dicts with ``mw_hourly``, ``tau_l``, ``t``, ``social_welfare``
    and ``tie``; columns with no feasible cell carry ``None`` values and a
    diagnostic.
    """
    g = surface.grid
    order = _tax_order(g)
    rows = []
    for m, mw in enumerate(g.mw_values_hourly):
        best, arg, count = -math.inf, None, 0
        for i, j in order:
            if not surface.feasible[i, j, m]:
                continue
            v = surface.sw[i, j, m]
            if v > best:
                best, arg, count = v, (i, j), 1
            elif v == best:
                count += 1
        if arg is None:
            rows.append({"mw_hourly": mw, "tau_l": None, "t": None, "social_welfare": None,
                         "tie": False, "diagnostic": "no feasible tax pair"})
        else:
            rows.append({"mw_hourly": mw, "tau_l": g.tau_l_values[arg[0]], "t": g.t_values[arg[1]],
                         "social_welfare": float(best), "tie": count > 1, "diagnostic": ""})
    return rows


def optimal_mw_per_tax(surface: WelfareSurface) -> list:
    """Per tax pair, the welfare-maximizing minimum wage (ties to the lowest)."""
    g = surface.grid
    rows = []
    for i, tl in enumerate(g.tau_l_values):
        for j, t in enumerate(g.t_values):
            col = surface.sw[i, j]
            ok = surface.feasible[i, j]
            if not ok.any():
                rows.append({"tau_l": tl, "t": t, "mw_hourly": None, "social_welfare": None,
                             "tie": False, "diagnostic": "no feasible minimum wage"})
                continue
            vals = np.where(ok, col, -np.inf)
            m = int(np.argmax(vals))
            rows.append({"tau_l": tl, "t": t, "mw_hourly": g.mw_values_hourly[m],
                         "social_welfare": float(vals[m]), "tie": int(np.sum(vals == vals[m])) > 1,
                         "diagnostic": ""})
    return rows


def joint_optimum(surface: WelfareSurface) -> dict:
    """Global argmax over feasible cells with the same tie-break order as the envelope.

    Raises
    ------
    SolverError
        If no cell is feasible.
    """
    g = surface.grid
    best, arg, count = -math.inf, None, 0
    for i, j in _tax_order(g):
        for m in range(len(g.mw_values_hourly)):
            if not surface.feasible[i, j, m]:
                continue
            v = surface.sw[i, j, m]
            if v > best:
                best, arg, count = v, (i, j, m), 1
            elif v == best:
                count += 1
    if arg is None:
        raise SolverError("no feasible cell on the policy grid")
    i, j, m = arg
    return {"tau_l": g.tau_l_values[i], "tau_h": g.tau_h, "t": g.t_values[j],
            "mw_hourly": g.mw_values_hourly[m], "social_welfare": float(best), "tie": count > 1,
            "market_wage_hourly": float(surface.market_wage_hourly[i, j])}


# ---------------------------------------------------------------------------
# shape properties of a surface

def is_unimodal(path) -> bool:
    """True if the finite values rise weakly then fall weakly (one local max plateau)."""
    vals = [v for v in path if v is not None and math.isfinite(v)]
    k = 0
    while k + 1 < len(vals) and vals[k + 1] >= vals[k]:
        k += 1
    return all(vals[n + 1] <= vals[n] for n in range(k, len(vals) - 1))


def nonbinding_invariance(surface: WelfareSurface, tol: float = 1e-9) -> bool:
    """Welfare is constant across non-binding minimum wages for every tax pair."""
    ni, nj, _ = surface.grid.shape
    for i in range(ni):
        for j in range(nj):
            sel = surface.feasible[i, j] & ~surface.binding[i, j]
            vals = surface.sw[i, j][sel]
            if vals.size > 1 and np.max(np.abs(vals - vals[0])) > tol:
                return False
    return True


def optimal_mw_matrix(surface: WelfareSurface) -> np.ndarray:
    """``(n_tau_l, n_t)`` array of per-pair optimal minimum wages (NaN if none)."""
    g = surface.grid
    out = np.full((len(g.tau_l_values), len(g.t_values)), np.nan)
    for r in optimal_mw_per_tax(surface):
        if r["mw_hourly"] is not None:
            out[g.tau_l_values.index(r["tau_l"]), g.t_values.index(r["t"])] = r["mw_hourly"]
    return out


def monotonicity_violations(opt: np.ndarray) -> dict:
    """Count violations of the two comparative statics of the optimal minimum wage.

    ``t``: optimum should weakly rise as ``t`` falls at fixed ``tau_l``.
    ``tau_l``: optimum should weakly rise as ``tau_l`` falls (larger EITC) at fixed ``t``.
    """
    dt = np.diff(opt, axis=1)   # along increasing t; should be <= 0
    dtl = np.diff(opt, axis=0)  # along increasing tau_l; should be <= 0
    return {"t": int(np.sum(dt[np.isfinite(dt)] > 0)),
            "tau_l": int(np.sum(dtl[np.isfinite(dtl)] > 0)),
            "t_pairs": int(np.sum(np.isfinite(dt))), "tau_l_pairs": int(np.sum(np.isfinite(dtl)))}
