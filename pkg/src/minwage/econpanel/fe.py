"""Weighted fixed-effects estimation of stacked event studies with CR1 errors."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd
import scipy.sparse as sp
from scipy import linalg, stats

from ..errors import DataError, SolverError
from .stack import FLAG_COLUMNS, StackedPanel, preperiod_weights

TAUS = (-3, -2, 0, 1, 2, 3, 4)
POST_TAUS = (0, 1, 2, 3, 4)


@dataclass(frozen=True)
class FitSpec:
    """Regression specification.

    Parameters
    ----------
    kind : {"event_study", "did"}
        Per-relative-time indicators (reference ``tau = -1``) or a single
        treated-by-post indicator.
    fe : tuple of tuples
        Fixed-effect groups; each is a tuple of stack columns and is always
        interacted with the event id.  ``(("unit",), ("year",))`` gives
        unit-by-event and year-by-event effects; ``(("unit",), ("region", "year"))``
        lets year effects vary by region.
    controls : {"flags_by_event", "flags", "none"}
        Small/federal increase flags, interacted with the event id or pooled.
    weights : str or None
        Weight column; ``None`` gives unweighted least squares.
    preperiod_weights : bool
        Replace weights by each unit's average pre-period weight within the
        event (industry variant).
    cluster : str
        Cluster column.
    """

    kind: str = "event_study"
    fe: tuple = (("unit",), ("year",))
    controls: str = "flags_by_event"
    weights: str | None = "weight"
    preperiod_weights: bool = False
    cluster: str = "cluster"
    tol: float = 1e-10
    max_iter: int = 10_000
    level: float = 0.95

    def __post_init__(self):
        if self.kind not in ("event_study", "did"):
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.controls not in ("flags_by_event", "flags", "none"):
            raise ValueError(f"unknown controls {self.controls!r}")


@dataclass
class EstimateReport:
    """Coefficients, CR1 errors and implied elasticity.

    ``coef`` etc. are indexed by term: ``"tau=-3"``.. for event studies (with
    ``"tau=-1"`` fixed at 0) or ``"post"`` for the pooled regression.
    ``elasticity`` divides the headline coefficient (``post``, or the mean of
    the ``tau = 0..4`` coefficients) by the mean event-year change in the log
    real minimum wage.
    """

    kind: str
    coef: dict
    se: dict
    ci_low: dict
    ci_high: dict
    headline: float
    headline_se: float
    n_obs: int
    n_clusters: int
    n_events: int
    dlog_mw: float
    elasticity: float
    dropped: list = field(default_factory=list)
    iterations: int = 0
    controls: dict = field(default_factory=dict)

    def rows(self):
        """Coefficient table rows (tau, beta, se, ci_low, ci_high)."""
        out = []
        for term in self.coef:
            tau = term.split("=")[1] if term.startswith("tau=") else term
            out.append({"tau": tau, "beta": self.coef[term], "se": self.se[term],
                        "ci_low": self.ci_low[term], "ci_high": self.ci_high[term]})
        return out


def implied_elasticity(beta: float, dlog_mw: float) -> float:
    """``beta / dlog_mw``; NaN unless ``dlog_mw > 0``."""
    return beta / dlog_mw if dlog_mw > 0 else float("nan")


# ---------------------------------------------------------------------------
# demeaning

def _group_codes(df: pd.DataFrame, cols) -> np.ndarray:
    keys = [df["event"]] + [df[c] for c in cols]
    return pd.MultiIndex.from_arrays(keys).factorize()[0] if len(keys) > 1 else pd.factorize(keys[0])[0]


class Demeaner:
    """Weighted alternating projections onto the complement of several FE groups."""

    def __init__(self, codes, w, tol=1e-10, max_iter=10_000):
        self.w = np.asarray(w, float)
        self.tol, self.max_iter = tol, max_iter
        n = len(self.w)
        self.groups = []
        for c in codes:
            g = int(c.max()) + 1
            D = sp.csr_matrix((np.ones(n), (c, np.arange(n))), shape=(g, n))
            sw = D @ self.w
            self.groups.append((c, D, sw))

    def _means(self, grp, Z):
        c, D, sw = grp
        with np.errstate(invalid="ignore", divide="ignore"):
            m = (D @ (self.w[:, None] * Z)) / sw[:, None]
        return np.nan_to_num(m)

    def max_group_mean(self, Z):
        return max(float(np.max(np.abs(self._means(g, Z)))) if Z.size else 0.0 for g in self.groups)

    def __call__(self, Z):
        """Return ``(demeaned Z, passes)``; raise SolverError if not converged."""
        Z = np.array(Z, float, copy=True)
        if Z.ndim == 1:
            Z = Z[:, None]
        for it in range(1, self.max_iter + 1):
            for grp in self.groups:
                Z -= self._means(grp, Z)[grp[0]]
            if len(self.groups) == 1 or self.max_group_mean(Z) <= self.tol:
                return Z, it
        raise SolverError(f"demeaning did not converge in {self.max_iter} passes; "
                          f"max group mean {self.max_group_mean(Z):.3e}")


# ---------------------------------------------------------------------------
# design

def design(stack: StackedPanel | pd.DataFrame, spec: FitSpec):
    """Regressor matrix and names before demeaning."""
    d = stack.data if isinstance(stack, StackedPanel) else stack
    tr = d["treated"].to_numpy(bool)
    rel = d["rel_time"].to_numpy()
    cols, names = [], []
    if spec.kind == "event_study":
        for tau in TAUS:
            cols.append((tr & (rel == tau)).astype(float))
            names.append(f"tau={tau}")
    else:
        cols.append((tr & (rel >= 0)).astype(float))
        names.append("post")
    if spec.controls != "none":
        ev_codes, ev_labels = pd.factorize(d["event"], sort=True)
        for f in FLAG_COLUMNS:
            v = d[f].to_numpy(bool)
            if not v.any():
                continue
            if spec.controls == "flags":
                cols.append(v.astype(float))
                names.append(f)
            else:
                for k in np.unique(ev_codes[v]):
                    cols.append((v & (ev_codes == k)).astype(float))
                    names.append(f"{f}:{ev_labels[k]}")
    return np.column_stack(cols), names


def _weights(stack_df, spec, stack):
    if spec.weights is None:
        return np.ones(len(stack_df))
    if spec.preperiod_weights:
        w = preperiod_weights(stack, spec.weights).to_numpy(float)
    else:
        w = stack_df[spec.weights].to_numpy(float)
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise DataError("regression weights must be positive and finite")
    return w


def _independent_columns(Xw, Xw_raw, tol=1e-9):
    """Indices of columns that are linearly independent of all earlier kept ones.

    A column is kept when its component orthogonal to the kept span exceeds
    ``tol`` times its pre-demeaning norm.
    """
    scale = np.maximum(np.linalg.norm(Xw_raw, axis=0), 1.0)
    Q = np.empty((Xw.shape[0], Xw.shape[1]))
    keep = []
    for k in range(Xw.shape[1]):
        v = Xw[:, k].copy()
        B = Q[:, :len(keep)]
        for _ in range(2):
            v -= B @ (B.T @ v)
        nv = np.linalg.norm(v)
        if nv > tol * scale[k]:
            Q[:, len(keep)] = v / nv
            keep.append(k)
    return np.array(keep, dtype=int)


def cr1_vcov(X, u, w, clusters):
    """CR1 sandwich ``c (X'WX)^-1 [sum_g s_g s_g'] (X'WX)^-1``.

    ``s_g = X_g' W_g u_g`` and ``c = G/(G-1) (N-1)/(N-K)`` with ``K`` the
    number of columns of ``X``.  Assembled as ``c B B'`` from the triangular
    factor of ``W^(1/2) X`` so the result is positive semi-definite even when
    some scores nearly cancel.
    """
    N, K = X.shape
    codes, labels = pd.factorize(pd.Series(clusters))
    G = len(labels)
    if G < 2:
        raise SolverError("cluster-robust errors need at least two clusters")
    S = np.zeros((G, K))
    np.add.at(S, codes, X * (w * u)[:, None])
    R = np.linalg.qr(np.sqrt(w)[:, None] * X, mode="r")
    B = linalg.solve_triangular(R, linalg.solve_triangular(R, S.T, trans="T"))
    c = G / (G - 1) * (N - 1) / (N - K)
    return c * (B @ B.T), G


def fit_fe(stack: StackedPanel, spec: FitSpec = FitSpec()) -> EstimateReport:
    """Weighted least squares of ``outcome`` on event indicators and controls,
    absorbing the fixed effects by alternating projections.

    Columns that are collinear after demeaning are dropped, scanning
    treatment terms before controls (reported in ``dropped``).  Confidence intervals use the t distribution with ``G - 1``
    degrees of freedom.

    Raises
    ------
    SolverError
        Demeaning fails to converge, fewer than two clusters, or a
        treatment indicator is not identified.
    """
    d = stack.data
    w = _weights(d, spec, stack)
    X, names = design(d, spec)
    y = d["outcome"].to_numpy(float)
    codes = [_group_codes(d, cols) for cols in spec.fe]
    dm = Demeaner(codes, w, spec.tol, spec.max_iter)
    Z, iters = dm(np.column_stack([y, X]))
    yt, Xt = Z[:, 0], Z[:, 1:]

    # collinearity: keep columns in order (treatment terms first) while they add rank
    sw = np.sqrt(w)
    idx = _independent_columns(sw[:, None] * Xt, sw[:, None] * X)
    dropped = [names[k] for k in range(len(names)) if k not in set(idx.tolist())]
    main = [nm for nm in names if nm.startswith("tau=") or nm == "post"]
    lost = [nm for nm in main if nm in dropped]
    if lost:
        raise SolverError(f"treatment terms not identified: {lost}")
    Xk = Xt[:, idx]
    beta, *_ = np.linalg.lstsq(sw[:, None] * Xk, sw * yt, rcond=None)
    u = yt - Xk @ beta
    V, G = cr1_vcov(Xk, u, w, d[spec.cluster].to_numpy())
    se = np.sqrt(np.diag(V))
    crit = stats.t.ppf(0.5 + spec.level / 2, G - 1)
    kept = [names[k] for k in idx]
    coef, ses, lo, hi = {}, {}, {}, {}
    pos = {nm: n for n, nm in enumerate(kept)}
    terms = [f"tau={t}" for t in (-3, -2, -1, 0, 1, 2, 3, 4)] if spec.kind == "event_study" else ["post"]
    for term in terms:
        if term == "tau=-1":
            coef[term] = ses[term] = lo[term] = hi[term] = 0.0
            continue
        n = pos[term]
        coef[term], ses[term] = float(beta[n]), float(se[n])
        lo[term], hi[term] = coef[term] - crit * ses[term], coef[term] + crit * ses[term]
    if spec.kind == "did":
        headline, head_se = coef["post"], ses["post"]
    else:
        a = np.zeros(len(kept))
        for t in POST_TAUS:
            a[pos[f"tau={t}"]] = 1.0 / len(POST_TAUS)
        headline, head_se = float(a @ beta), float(np.sqrt(a @ V @ a))
    events = stack.events
    dlog = float(events["dlog_mw"].mean()) if "dlog_mw" in events and len(events) else float("nan")
    ctrl = {nm: float(beta[pos[nm]]) for nm in kept if nm not in main}
    return EstimateReport(spec.kind, coef, ses, lo, hi, headline, head_se, len(y), G,
                          int(d["event"].nunique()), dlog, implied_elasticity(headline, dlog),
                          dropped, iters, ctrl)
