import numpy as np
import pytest

from minwage import config as C
from minwage import model as M
from minwage.calibration import (BLOCK_PARAMS, FREE_PARAMS, CalibrationSpec, MomentSet,
                                 compute_moments, estimate, loss, spec_from_config)
from minwage.errors import ConfigError

ONES = {k: 1.0 for k in MomentSet.keys()}


@pytest.fixture(scope="module")
def base_moments(params, baseline_policy):
    return compute_moments(params, baseline_policy)


def _perturbed(params, seed=4, size=0.05):
    rng = np.random.default_rng(seed)
    flat = M.params_to_flat(params)
    for k in FREE_PARAMS:
        flat[k] *= 1 + size * rng.choice([-1, 1])
    return M.params_from_flat(flat)


def test_moments_are_internally_consistent(params, baseline_policy, base_moments):
    m = base_moments
    assert m.markdown_l == pytest.approx(params.low.delta1, abs=1e-12)
    assert m.markdown_h == pytest.approx(params.high.delta1, abs=1e-12)
    assert 0 < m.unemployment_l < 1 and 0 < m.participation_h <= 1
    expected = compute_moments(params, baseline_policy, earnings="expected")
    assert expected.earnings_l == pytest.approx((1 - m.unemployment_l) * m.earnings_l, rel=1e-14)


def test_unknown_earnings_definition(params, baseline_policy):
    with pytest.raises(ConfigError):
        compute_moments(params, baseline_policy, earnings="hourly")


def test_loss_is_weighted_squared_relative_error(base_moments):
    d = base_moments.to_dict()
    assert loss(base_moments, base_moments, ONES) == 0.0
    shifted = dict(d, profit_S=d["profit_S"] * 1.1, markdown_h=d["markdown_h"] * 0.8)
    w = dict(ONES, markdown_h=2.0)
    assert loss(shifted, d, w) == pytest.approx(0.1 ** 2 + 2 * 0.2 ** 2, rel=1e-12)


def test_loss_rejects_zero_target(base_moments):
    d = dict(base_moments.to_dict(), profit_M=0.0)
    with pytest.raises(ConfigError, match="zero"):
        loss(base_moments, d, ONES)
    assert loss(base_moments, d, dict(ONES, profit_M=0.0)) >= 0.0


def test_moment_set_key_validation(base_moments):
    d = base_moments.to_dict()
    d.pop("profit_M")
    with pytest.raises(ConfigError):
        MomentSet.from_dict(d)


def _spec(cfg, seed_params, targets, **kw):
    base = spec_from_config(cfg, seed_params, C.policy(cfg))
    base.targets = targets
    for k, v in kw.items():
        setattr(base, k, v)
    return base


@pytest.fixture(scope="module")
def round_trip(cfg, params, base_moments):
    return estimate(_spec(cfg, _perturbed(params), base_moments))


def test_round_trip_recovers_moments(round_trip, base_moments):
    assert round_trip.converged
    assert round_trip.loss < 1e-12
    assert np.allclose(round_trip.moments.array(), base_moments.array(), rtol=1e-6)


def test_trace_best_loss_never_increases_within_block(round_trip):
    for block in BLOCK_PARAMS:
        best = [row[2] for row in round_trip.trace if row[3] == block]
        assert best and all(b <= a for a, b in zip(best, best[1:]))


def test_estimation_is_deterministic(cfg, params, base_moments):
    spec = _spec(cfg, _perturbed(params, seed=5), base_moments, max_evals=400)
    a, b = estimate(spec), estimate(spec)
    assert a.trace == b.trace and a.params == b.params


def test_budget_exhaustion_is_reported(cfg, params, base_moments):
    res = estimate(_spec(cfg, _perturbed(params, seed=4), base_moments, max_evals=50))
    assert not res.converged and res.n_evals <= 50


def test_spec_validation(cfg, params, base_moments, baseline_policy):
    bounds = {k: tuple(v) for k, v in cfg["calibration"]["bounds"].items()}
    with pytest.raises(ConfigError, match="weights"):
        CalibrationSpec(base_moments, {"profit_S": 1.0}, params, bounds, baseline_policy)
    with pytest.raises(ConfigError, match="outside bounds"):
        CalibrationSpec(base_moments, ONES, params, dict(bounds, psi_S=(1.0, 2.0)), baseline_policy)
    with pytest.raises(ConfigError, match="missing bounds"):
        b = dict(bounds)
        b.pop("K_M")
        CalibrationSpec(base_moments, ONES, params, b, baseline_policy)


def test_unknown_target_set(cfg, params, baseline_policy):
    bad = C.load_config(overrides=["calibration.target_set=other"])
    with pytest.raises(ConfigError):
        spec_from_config(bad, params, baseline_policy)
