"""Estimators against independent oracles and closed-form fixtures."""
import math

import numpy as np
import pytest

from mfsim.analysis import (OrderFlowRecord, ccdf_tail_fit, default_scales,
                            dfa, mfdfa, read_orderflow_csv,
                            relative_prices_from_orderflow)
from mfsim.errors import (EstimationError, OrderFlowParseError,
                          ParameterError)
from mfsim.stochastic import gen_fgn, make_rng


def _dfa_bruteforce(series, scales, order=1):
    """Window-by-window polyfit reference; deliberately naive and slow."""
    series = np.asarray(series, dtype=float)
    profile = np.cumsum(series - series.mean())
    n = profile.size
    out = []
    for s in scales:
        n_win = n // s
        msq = []
        for segment in (profile[: n_win * s], profile[n - n_win * s:]):
            for w in range(n_win):
                window = segment[w * s: (w + 1) * s]
                t = np.arange(s, dtype=float)
                coeff = np.polyfit(t, window, order)
                resid = window - np.polyval(coeff, t)
                msq.append(float(np.mean(resid ** 2)))
        out.append(math.sqrt(sum(msq) / len(msq)))
    return np.array(out)


@pytest.mark.parametrize("n", [1000, 10_000])
def test_dfa_matches_bruteforce(n):
    rng = make_rng(101)
    series = rng.standard_normal(n) + 0.3 * np.sin(np.arange(n) / 50.0)
    result = dfa(series)
    want = _dfa_bruteforce(series, result.scales)
    rel = np.abs(result.fluctuations - want) / want
    assert float(rel.max()) < 1e-10
    # slope of the reference curve over the same fit window
    lo, hi = result.fit_range
    mask = (result.scales >= lo) & (result.scales < hi)
    slope = np.polyfit(np.log(result.scales[mask]), np.log(want[mask]), 1)[0]
    assert result.hurst == pytest.approx(float(slope), abs=1e-10)


def test_dfa_affine_invariance_exact_for_power_of_two():
    rng = make_rng(103)
    series = rng.standard_normal(4096)
    base = dfa(series)
    scaled = dfa(2.0 * series)
    # doubling is exact in floats: every residual, hence every F, doubles;
    # the fitted slope only matches to rounding because logs are not exact
    assert np.array_equal(scaled.fluctuations, 2.0 * base.fluctuations)
    assert scaled.hurst == pytest.approx(base.hurst, abs=1e-12)


def test_dfa_affine_invariance_generic():
    rng = make_rng(107)
    series = rng.standard_normal(4096)
    base = dfa(series)
    moved = dfa(3.7 * series + 11.0)
    assert moved.hurst == pytest.approx(base.hurst, abs=1e-9)


def test_dfa_white_noise_exponent():
    assert dfa(make_rng(109).standard_normal(100_000)).hurst == pytest.approx(
        0.5, abs=0.02)


def test_dfa_fit_range_is_half_open():
    rng = make_rng(113)
    series = rng.standard_normal(8192)
    res = dfa(series, fit_range=(8, 512))
    assert res.scales.min() >= 8
    fitted = res.scales[(res.scales >= 8) & (res.scales < 512)]
    assert fitted.max() < 512
    assert res.fit_range == (8, 512)


def test_dfa_rejects_degenerate_input():
    with pytest.raises(EstimationError):
        dfa(np.zeros(4096))
    with pytest.raises(ParameterError):
        dfa(np.full(16, np.nan))
    with pytest.raises(ParameterError):
        dfa(np.arange(8192.0), fit_range=(8, 9))  # fewer than 2 scales


def test_default_scales_shape():
    scales = default_scales(40_000)
    assert scales[0] == 8
    assert scales[-1] == 10_000
    assert np.all(np.diff(scales) > 0)
    assert 25 <= scales.size <= 30


def test_mfdfa_mass_exponent_identities():
    rng = make_rng(127)
    series = np.abs(rng.standard_normal(20_000))
    res = mfdfa(series)
    assert np.array_equal(res.tau, res.q_grid * res.hq - 1.0)
    q0 = int(np.flatnonzero(res.q_grid == 0.0)[0])
    assert res.tau[q0] == -1.0


def test_mfdfa_q2_equals_dfa():
    rng = make_rng(131)
    series = np.abs(rng.standard_normal(20_000))
    res = mfdfa(series)
    q2 = int(np.flatnonzero(res.q_grid == 2.0)[0])
    assert res.hq[q2] == pytest.approx(dfa(series).hurst, abs=1e-12)


def test_mfdfa_monofractal_noise_is_flat():
    series = gen_fgn(100_000, 0.7, 137)
    res = mfdfa(series, q_grid=np.arange(0.0, 4.5, 0.5))
    assert float(np.ptp(res.hq)) < 0.06


def test_mfdfa_rejects_bad_q_grid():
    with pytest.raises(ParameterError):
        mfdfa(make_rng(1).standard_normal(1024), q_grid=np.array([np.inf]))


def test_ccdf_fit_recovers_analytic_pareto():
    # exact top-k order statistics of P(V >= v) = v^(-beta)
    n = 50_000
    beta = 3.0
    ranks = np.arange(1, n + 1, dtype=float)
    values = (ranks / n) ** (-1.0 / beta)
    res = ccdf_tail_fit(values, fit_fraction=0.01)
    assert res.beta == pytest.approx(beta, abs=1e-6)
    assert res.n_tail == 500


def test_ccdf_fit_recovers_sampled_pareto():
    u = make_rng(139).random(1_000_000)
    values = u ** (-1.0 / 3.0)  # inverse-CDF sampling, tail exponent 3
    res = ccdf_tail_fit(values, fit_fraction=0.01)
    assert res.beta == pytest.approx(3.0, abs=0.1)
    assert res.beta_stderr >= 0.0


def test_ccdf_fit_scale_invariant():
    u = make_rng(149).random(100_000)
    values = u ** (-1.0 / 3.0)
    a = ccdf_tail_fit(values).beta
    b = ccdf_tail_fit(1000.0 * values).beta
    assert b == pytest.approx(a, abs=1e-9)


def test_ccdf_fit_minimum_tail_floor():
    u = make_rng(151).random(30_000)
    res = ccdf_tail_fit(u ** (-1.0 / 3.0), fit_fraction=0.01)
    # 1% of 30000 is 300; the floor of 200 only binds below 20000 points
    assert res.n_tail == 300
    res_small = ccdf_tail_fit(u[:10_000] ** (-1.0 / 3.0), fit_fraction=0.01)
    assert res_small.n_tail == 200


def test_ccdf_fit_preconditions():
    with pytest.raises(EstimationError):
        ccdf_tail_fit(np.ones(1000), fit_fraction=0.01)  # 10 < 50 tail points
    with pytest.raises(ParameterError):
        ccdf_tail_fit(-np.ones(10_000))
    with pytest.raises(ParameterError):
        ccdf_tail_fit(np.ones(10_000), fit_fraction=1.5)


def test_relative_price_fixtures():
    records = [
        OrderFlowRecord(time=1, side="buy", price=100.0, best_bid=100.0,
                        best_ask=101.0),
        OrderFlowRecord(time=2, side="buy", price=101.0, best_bid=100.0,
                        best_ask=101.0),
        OrderFlowRecord(time=3, side="sell", price=99.0, best_bid=98.0,
                        best_ask=101.0),
    ]
    x = relative_prices_from_orderflow(records)
    assert x.size == 3
    assert x[0] == 0.0
    assert x[1] == pytest.approx(math.log(101.0 / 100.0), abs=1e-15)
    # the marketable boundary: distance equals the full log spread
    assert x[1] == pytest.approx(math.log(101.0) - math.log(100.0), abs=1e-15)
    assert x[2] == pytest.approx(math.log(101.0 / 99.0), abs=1e-15)


def test_relative_price_rejects_bad_records():
    bad_price = [OrderFlowRecord(1, "buy", -5.0, 100.0, 101.0)]
    with pytest.raises(OrderFlowParseError) as err:
        relative_prices_from_orderflow(bad_price)
    assert err.value.index == 0
    bad_side = [
        OrderFlowRecord(1, "buy", 100.5, 100.0, 101.0),
        OrderFlowRecord(2, "hold", 100.5, 100.0, 101.0),
    ]
    with pytest.raises(OrderFlowParseError) as err:
        relative_prices_from_orderflow(bad_side)
    assert err.value.index == 1


def test_read_orderflow_csv_round_trip(tmp_path):
    path = tmp_path / "flow.csv"
    path.write_text("time,side,price,best_bid,best_ask\n"
                    "1,B,100.5,100.0,101.0\n"
                    "2,S,100.9,100.5,101.0\n")
    records = read_orderflow_csv(path)
    assert len(records) == 2
    assert records[0].side == "buy"
    assert records[1].side == "sell"
    assert records[1].price == 100.9
    x = relative_prices_from_orderflow(records)
    assert x[0] == pytest.approx(math.log(100.5 / 100.0))
    assert x[1] == pytest.approx(math.log(101.0 / 100.9))


def test_read_orderflow_csv_rejects_garbage(tmp_path):
    bad_header = tmp_path / "h.csv"
    bad_header.write_text("t,s,p,bb,ba\n1,B,1,1,1\n")
    with pytest.raises(OrderFlowParseError):
        read_orderflow_csv(bad_header)
    bad_side = tmp_path / "s.csv"
    bad_side.write_text("time,side,price,best_bid,best_ask\n"
                        "1,B,1,0.9,1.1\n"
                        "2,X,1,0.9,1.1\n")
    with pytest.raises(OrderFlowParseError) as err:
        read_orderflow_csv(bad_side)
    assert err.value.index == 1  # data rows count from zero
    bad_float = tmp_path / "f.csv"
    bad_float.write_text("time,side,price,best_bid,best_ask\n1,B,oops,1,1\n")
    with pytest.raises(OrderFlowParseError):
        read_orderflow_csv(bad_float)
