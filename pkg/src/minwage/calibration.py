"""Model moments, moment-matching loss and simplex estimation."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from . import model as M
from .equilibrium import SolverOptions, close_budget
from .errors import ConfigError, MinwageError


@dataclass(frozen=True)
class MomentSet:
    """The fourteen calibration moments (suffix ``l``/``h`` skill, ``S``/``M`` sector)."""

    unemployment_l: float
    unemployment_h: float
    job_filling_S: float
    job_filling_M: float
    emp_per_establishment_S: float
    emp_per_establishment_M: float
    earnings_l: float
    earnings_h: float
    participation_l: float
    participation_h: float
    profit_S: float
    profit_M: float
    markdown_l: float
    markdown_h: float

    @classmethod
    def keys(cls):
        return [f.name for f in fields(cls)]

    @classmethod
    def from_dict(cls, d):
        missing = set(cls.keys()) - set(d)
        extra = set(d) - set(cls.keys())
        if missing or extra:
            raise ConfigError(f"moment keys mismatch: missing {sorted(missing)}, unknown {sorted(extra)}")
        return cls(**{k: float(d[k]) for k in cls.keys()})

    def to_dict(self):
        return asdict(self)

    def array(self):
        return np.array([getattr(self, k) for k in self.keys()])


#: Moments that depend only on the services block or only on manufacturing.
BLOCK_MOMENTS = {
    "S": ["unemployment_l", "job_filling_S", "emp_per_establishment_S", "earnings_l",
          "participation_l", "profit_S", "markdown_l"],
    "M": ["unemployment_h", "job_filling_M", "emp_per_establishment_M", "earnings_h",
          "participation_h", "profit_M", "markdown_h"],
}
#: Estimated parameters, as flat config keys.
BLOCK_PARAMS = {
    "S": ["delta0_l", "delta1_l", "lambda_l", "K_S", "psi_S", "kappa0_l", "kappa1_l"],
    "M": ["delta0_h", "delta1_h", "lambda_h", "K_M", "psi_M", "kappa0_h", "kappa1_h"],
}
FREE_PARAMS = BLOCK_PARAMS["S"] + BLOCK_PARAMS["M"]


def compute_moments(params: M.ModelParams, policy: M.Policy,
                    options: SolverOptions = SolverOptions(),
                    earnings: str = "wage") -> MomentSet:
    """Solve the equilibrium at ``policy`` and return its fourteen moments.

    Parameters
    ----------
    earnings : {"wage", "expected"}
        ``"wage"`` reports the annual wage of the employed; ``"expected"``
        reports ``(1 - unemployment) * wage``.
    """
    eq = close_budget(params, policy, options, welfare=False)
    sS, sM = eq.services, eq.manufacturing
    if earnings == "wage":
        eS, eM = sS.wage, sM.wage
    elif earnings == "expected":
        eS, eM = sS.p * sS.wage, sM.p * sM.wage
    else:
        raise ConfigError(f"unknown earnings definition {earnings!r}")
    return MomentSet(
        unemployment_l=1.0 - sS.p, unemployment_h=1.0 - sM.p,
        job_filling_S=sS.q, job_filling_M=sM.q,
        emp_per_establishment_S=sS.employment / params.services.K,
        emp_per_establishment_M=sM.employment / params.manufacturing.K,
        earnings_l=eS, earnings_h=eM,
        participation_l=eq.low.participation_rate, participation_h=eq.high.participation_rate,
        profit_S=sS.profit_pre_tax, profit_M=sM.profit_pre_tax,
        markdown_l=sS.markdown, markdown_h=sM.markdown)


@dataclass
class CalibrationSpec:
    """Targets, weights, bounds and budget for :func:`estimate`."""

    targets: MomentSet
    weights: dict
    seed_params: M.ModelParams
    bounds: dict
    policy: M.Policy
    max_evals: int = 20000
    restarts: int = 5
    multistart: int = 0
    seed: int = 0
    xatol: float = 1e-10
    fatol: float = 1e-14
    options: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        keys = MomentSet.keys()
        if set(self.weights) != set(keys):
            raise ConfigError("weights must cover exactly the fourteen moments")
        if any(w < 0 for w in self.weights.values()) or not any(w > 0 for w in self.weights.values()):
            raise ConfigError("weights must be nonnegative with at least one positive")
        flat = M.params_to_flat(self.seed_params)
        for key in FREE_PARAMS:
            if key not in self.bounds:
                raise ConfigError(f"missing bounds for {key}")
            lo, hi = self.bounds[key]
            if not (0 < lo <= flat[key] <= hi):
                raise ConfigError(f"seed {key}={flat[key]} outside bounds [{lo}, {hi}]")


def loss(model: MomentSet | dict, targets: MomentSet | dict, weights: dict) -> float:
    """Weighted sum of squared relative deviations.

    Raises
    ------
    ConfigError
        If a positively weighted target is zero.
    """
    m = model.to_dict() if isinstance(model, MomentSet) else model
    tg = targets.to_dict() if isinstance(targets, MomentSet) else targets
    total = 0.0
    for key in sorted(weights):
        w = weights[key]
        if w == 0:
            continue
        if tg[key] == 0:
            raise ConfigError(f"target {key} is zero; relative deviation undefined")
        total += w * ((m[key] - tg[key]) / tg[key]) ** 2
    return total


@dataclass
class EstimateResult:
    params: M.ModelParams
    loss: float
    moments: MomentSet
    converged: bool
    trace: list  # rows (evaluation, loss, best_loss, *free params)
    n_evals: int


class _Budget(Exception):
    pass


def _block_objective(block, spec, base_flat, counter, trace):
    keys = BLOCK_PARAMS[block]
    wts = {k: (spec.weights[k] if k in BLOCK_MOMENTS[block] else 0.0) for k in MomentSet.keys()}
    tg = spec.targets.to_dict()

    def f(x):
        if counter["n"] >= counter["max"]:
            raise _Budget()
        counter["n"] += 1
        flat = dict(base_flat)
        flat.update({k: float(math.exp(v)) for k, v in zip(keys, x)})
        try:
            mom = compute_moments(M.params_from_flat(flat), spec.policy, spec.options).to_dict()
            val = loss(mom, tg, wts)
        except MinwageError:
            val = 1e10
        if not math.isfinite(val):
            val = 1e10
        best = min(val, trace[-1][2] if trace else math.inf)
        trace.append((counter["n"], val, best, block) + tuple(flat[k] for k in FREE_PARAMS))
        if val < counter["best"][0]:
            counter["best"] = (val, np.array(x, dtype=float))
        return val

    return f


def _run_block(block, spec, base_flat, x0, counter, trace):
    keys = BLOCK_PARAMS[block]
    lb = np.log([spec.bounds[k][0] for k in keys])
    ub = np.log([spec.bounds[k][1] for k in keys])
    f = _block_objective(block, spec, base_flat, counter, trace)
    counter["best"] = (math.inf, np.array(x0, dtype=float))
    x = np.clip(np.array(x0, dtype=float), lb, ub)
    prev = math.inf
    converged = False
    try:
        for _ in range(max(1, spec.restarts + 1)):
            # a fresh simplex around the incumbent is the restart on collapse
            minimize(f, x, method="Nelder-Mead", bounds=list(zip(lb, ub)),
                           options={"xatol": spec.xatol, "fatol": spec.fatol,
                                    "maxfev": counter["max"], "adaptive": True})
            x = counter["best"][1]
            cur = counter["best"][0]
            if prev - cur <= spec.fatol or cur <= spec.fatol:
                converged = True
                break
            prev = cur
    except _Budget:
        converged = False
    return counter["best"][1], counter["best"][0], converged


def estimate(spec: CalibrationSpec) -> EstimateResult:
    """Minimize :func:`loss` over the fourteen free parameters.

    The services and manufacturing blocks share no parameters or moments,
    so each is estimated separately by bounded Nelder-Mead in log
    parameters, restarted from the incumbent until the best loss stops
    improving.  With ``multistart > 0`` extra Latin-hypercube starts are
    drawn inside the bounds and the best run per block is kept.

    Returns
    -------
    EstimateResult
        Best parameters, the achieved moments, a per-evaluation trace whose
        ``best_loss`` column is non-increasing within each block, and a
        convergence flag (false when the evaluation budget ran out).
    """
    base_flat = M.params_to_flat(spec.seed_params)
    counter = {"n": 0, "max": spec.max_evals, "best": (math.inf, None)}
    trace = []
    flat = dict(base_flat)
    all_conv = True
    rng = qmc.LatinHypercube(d=len(BLOCK_PARAMS["S"]), seed=spec.seed)
    starts = rng.random(spec.multistart) if spec.multistart else np.empty((0, 7))
    for block in ("S", "M"):
        keys = BLOCK_PARAMS[block]
        lb = np.log([spec.bounds[k][0] for k in keys])
        ub = np.log([spec.bounds[k][1] for k in keys])
        block_trace = []
        candidates = [np.log([base_flat[k] for k in keys])] + [lb + u * (ub - lb) for u in starts]
        # with the budget spent, a block keeps its seed values
        best = (math.inf, candidates[0], False)
        for x0 in candidates:
            x, val, conv = _run_block(block, spec, flat, x0, counter, block_trace)
            if val < best[0]:
                best = (val, x, conv)
            if counter["n"] >= counter["max"]:
                break
        trace.extend(block_trace)
        all_conv &= best[2]
        flat.update({k: float(math.exp(v)) for k, v in zip(keys, best[1])})
    params = M.params_from_flat(flat)
    moms = compute_moments(params, spec.policy, spec.options)
    return EstimateResult(params, loss(moms, spec.targets, spec.weights), moms,
                          all_conv, trace, counter["n"])


def spec_from_config(cfg: dict, params: M.ModelParams, policy: M.Policy,
                     options: SolverOptions = SolverOptions()) -> CalibrationSpec:
    c = cfg["calibration"]
    which = c.get("target_set", "data")
    if which not in c.get("targets", {}):
        raise ConfigError(f"unknown target set {which!r}")
    return CalibrationSpec(
        targets=MomentSet.from_dict(c["targets"][which]), weights=dict(c["weights"]),
        seed_params=params, bounds={k: tuple(v) for k, v in c["bounds"].items()},
        policy=policy, max_evals=int(c["max_evals"]), restarts=int(c["restarts"]),
        multistart=int(c["multistart"]), seed=int(c["seed"]),
        xatol=float(c["xatol"]), fatol=float(c["fatol"]), options=options)
