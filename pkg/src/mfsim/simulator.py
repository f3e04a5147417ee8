"""Round driver and experiment harness.

One round pre-generates the order signs and relative prices, replays them
through a fresh book with a cancelation scan after every submission, and keeps
the last n_record log-mid returns.  An experiment runs many independent rounds
per parameter-grid point, optionally in parallel; round seeds are derived only
from the base seed and the round index, so a grid point's rounds see identical
draws regardless of worker count or grid position.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from multiprocessing import get_context

import numpy as np

from .analysis import ccdf_tail_fit, dfa, mfdfa
from .cancelation import CancelParams, cancel_scan
from .errors import EstimationError, ParameterError
from .lob import BookEvent, LimitOrderBook
from .stochastic import (derive_seed, gen_fgn, gen_sign_series, make_rng,
                         rank_remap, sample_student_t)

PRICE_MODES = ("iid", "long_memory")

# Sub-stream tags under a round seed; fixed so runs are reproducible.
_STREAM_SIGNS = 1
_STREAM_PRICES = 2
_STREAM_TEMPLATE = 3
_STREAM_CANCEL = 4

#: Default DFA fit windows (half-open scale ranges) per relative-price mode.
FIT_RANGES = {"iid": (8, 7000), "long_memory": (8, 4500)}


@dataclass(frozen=True)
class SimConfig:
    """Parameters of one simulation round.

    T submissions per round, of which the last n_record mid-price returns are
    analyzed.  H_s sets the target memory of the order-sign series.  Relative
    prices are Student-t (tail alpha_x, scale sigma_x), either iid or
    rank-remapped onto fractional noise with exponent H_x.
    """

    T: int = 200_000
    n_record: int = 40_000
    H_s: float = 0.75
    relative_price_mode: str = "iid"
    H_x: float = 0.8
    alpha_x: float = 1.3
    sigma_x: float = 0.0024
    cancel: CancelParams = field(default_factory=CancelParams)
    seed: int = 0

    def __post_init__(self):
        if self.T < 1:
            raise ParameterError(f"T must be positive, got {self.T}")
        if not 1 <= self.n_record <= self.T:
            raise ParameterError(
                f"n_record must lie in [1, T={self.T}], got {self.n_record}")
        if not 0.5 <= self.H_s < 1.0:
            raise ParameterError(f"H_s must lie in [0.5, 1), got {self.H_s}")
        if self.relative_price_mode not in PRICE_MODES:
            raise ParameterError(
                f"relative_price_mode must be one of {PRICE_MODES}, "
                f"got {self.relative_price_mode!r}")
        if not 0.0 < self.H_x < 1.0:
            raise ParameterError(f"H_x must lie in (0, 1), got {self.H_x}")
        if self.alpha_x <= 0:
            raise ParameterError(f"alpha_x must be positive, got {self.alpha_x}")
        if self.sigma_x <= 0:
            raise ParameterError(f"sigma_x must be positive, got {self.sigma_x}")
        if self.seed < 0:
            raise ParameterError(f"seed must be nonnegative, got {self.seed}")

    def replace(self, **overrides) -> "SimConfig":
        return dataclasses.replace(self, **overrides)


@dataclass(frozen=True)
class SeriesSet:
    """Output of one round: recorded returns, their magnitudes, event tallies.

    event_counts keys: submitted, rested, executed_on_arrival,
    executed_resting, canceled, resting_final (seed orders excluded from
    submitted/rested).
    """

    returns: np.ndarray
    volatility: np.ndarray
    event_counts: dict[str, int]
    events: list[BookEvent] | None = None


def _splitmix64(k: int) -> int:
    mask = (1 << 64) - 1
    z = (k + 0x9E3779B97F4A7C15) & mask
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
    return z ^ (z >> 31)


def derive_round_seed(base_seed: int, round_index: int) -> int:
    """Seed of round k: base xor a bit-mixed k, identical across grid points."""
    return (base_seed ^ _splitmix64(round_index)) & ((1 << 64) - 1)


def run_round(config: SimConfig, record_events: bool = False) -> SeriesSet:
    """Simulate one round and return the last n_record returns.

    Per step: one unit order arrives with pre-generated sign and relative
    price, then every resting order faces one cancelation draw, then the log
    mid (frozen at its last defined value while a side is empty) is recorded.
    """
    T = config.T
    x = sample_student_t(T, config.alpha_x, config.sigma_x,
                         derive_seed(config.seed, _STREAM_PRICES))
    if config.relative_price_mode == "long_memory":
        template = gen_fgn(T, config.H_x, derive_seed(config.seed, _STREAM_TEMPLATE))
        x = rank_remap(x, template)
    signs = gen_sign_series(T, config.H_s, derive_seed(config.seed, _STREAM_SIGNS))
    cancel_rng = make_rng(derive_seed(config.seed, _STREAM_CANCEL))
    book = LimitOrderBook(record_events=record_events)
    mids = np.empty(T + 1)
    mids[0] = book.quote()[3]
    side_name = ("sell", "buy")
    side_idx = ((signs.astype(np.int64) + 1) >> 1).tolist()
    xs = x.tolist()
    submit = book.submit
    cancel = book.cancel
    quote = book.quote
    params = config.cancel
    for t in range(1, T + 1):
        submit(side_name[side_idx[t - 1]], xs[t - 1], t)
        for oid in cancel_scan(book, params, t, cancel_rng):
            cancel(oid, t)
        mids[t] = quote()[3]
    returns = np.diff(mids)[T - config.n_record:]
    counts = {
        "submitted": book.n_submitted - 2,  # the two seed orders are not steps
        "rested": book.n_submitted - 2 - book.n_executed_incoming,
        "executed_on_arrival": book.n_executed_incoming,
        "executed_resting": book.n_executed_resting,
        "canceled": book.n_canceled,
        "resting_final": book.n_resting,
    }
    return SeriesSet(returns=returns, volatility=np.abs(returns),
                     event_counts=counts, events=book.event_log)


def _resolve_fit_range(config: SimConfig, fit_range):
    return tuple(fit_range) if fit_range is not None else FIT_RANGES[
        config.relative_price_mode]


def _round_task(args):
    config, round_index, fit_range, fit_fraction, keep_series = args
    series = run_round(config)
    fr = _resolve_fit_range(config, fit_range)
    h_r = dfa(series.returns, fit_range=fr).hurst
    h_v = dfa(series.volatility, fit_range=fr).hurst
    try:
        beta = ccdf_tail_fit(series.volatility, fit_fraction=fit_fraction).beta
    except EstimationError:
        beta = None  # round too short for the tail-fit minimum
    return (round_index, config.seed, h_r, h_v, beta,
            series if keep_series else None, series.volatility)


def _mean_sd(values) -> dict[str, float]:
    arr = np.asarray(values, dtype=float)
    sd = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return {"mean": float(arr.mean()), "sd": sd}


def _config_as_dict(config: SimConfig) -> dict:
    out = dataclasses.asdict(config)
    out["cancel"] = dataclasses.asdict(config.cancel)
    return out


def _point_curves(series: SeriesSet, pooled_volatility: np.ndarray,
                  fit_range, fit_fraction: float) -> dict:
    """Plot-ready curves for one grid point, from its first round."""
    curves = {}
    for name, data in (("return", series.returns), ("volatility", series.volatility)):
        res = dfa(data, fit_range=fit_range)
        curves[f"dfa_{name}"] = [[int(s), float(f)]
                                 for s, f in zip(res.scales, res.fluctuations)]
    mf = mfdfa(series.volatility, fit_range=fit_range)
    curves["tau_volatility"] = [[float(q), float(h), float(t)]
                                for q, h, t in zip(mf.q_grid, mf.hq, mf.tau)]
    n = pooled_volatility.size
    k = min(n, max(int(round(n * fit_fraction)), 200))
    top = np.sort(pooled_volatility)[::-1][:k]
    curves["ccdf_volatility"] = [[float(v), float((j + 1) / n)]
                                 for j, v in enumerate(top)]
    return curves


def run_experiment(base: SimConfig, n_rounds: int, sweep: dict | None = None, *,
                   jobs: int = 1, fit_range: tuple[int, int] | None = None,
                   fit_fraction: float = 0.01, curves: bool = False,
                   series_sink=None) -> dict:
    """Run n_rounds per grid point and aggregate the three exponents.

    sweep maps SimConfig field names to value lists; the grid is their
    cartesian product (fields in the given order).  Round k of every grid
    point uses derive_round_seed(base.seed, k), so rounds are comparable
    across points and reproducible for any `jobs`.  Per grid point the report
    carries per-round H_r, H_v, beta, their mean and sd, and a tail index
    pooled over all rounds' volatilities.  `series_sink(point_params,
    round_index, series_set)`, when given, receives every round in
    deterministic order.
    """
    if n_rounds < 1:
        raise ParameterError(f"n_rounds must be >= 1, got {n_rounds}")
    if jobs < 1:
        raise ParameterError(f"jobs must be >= 1, got {jobs}")
    points: list[dict] = []
    if sweep:
        for name in sweep:
            if name not in {f.name for f in dataclasses.fields(SimConfig)}:
                raise ParameterError(f"unknown sweep field {name!r}")
        names = list(sweep)
        grids = [list(sweep[name]) for name in names]
        combos = [{}]
        for name, values in zip(names, grids):
            combos = [{**c, name: v} for c in combos for v in values]
    else:
        combos = [{}]
    configs = [base.replace(**overrides) for overrides in combos]
    # one calibration per distinct sign target, done before any fork
    for cfg in configs:
        if cfg.H_s > 0.5:
            gen_sign_series(1, cfg.H_s, 0)
    keep = curves or series_sink is not None
    tasks = []
    for cfg in configs:
        for k in range(n_rounds):
            round_cfg = cfg.replace(seed=derive_round_seed(base.seed, k))
            tasks.append((round_cfg, k, fit_range, fit_fraction, keep))
    if jobs == 1:
        results = [_round_task(t) for t in tasks]
    else:
        with get_context("fork").Pool(processes=jobs) as pool:
            results = pool.map(_round_task, tasks, chunksize=1)
    for p, (overrides, cfg) in enumerate(zip(combos, configs)):
        fr = _resolve_fit_range(cfg, fit_range)
        chunk = results[p * n_rounds: (p + 1) * n_rounds]
        rounds = [{"round": k, "seed": seed, "H_r": h_r, "H_v": h_v, "beta": beta}
                  for k, seed, h_r, h_v, beta, _, _ in chunk]
        pooled = np.concatenate([vol for *_, vol in chunk])
        betas = [r["beta"] for r in rounds if r["beta"] is not None]
        try:
            beta_pooled = float(
                ccdf_tail_fit(pooled, fit_fraction=fit_fraction).beta)
        except EstimationError:
            beta_pooled = None
        point = {
            "params": overrides,
            "config": _config_as_dict(cfg),
            "fit_range": list(fr),
            "fit_fraction": fit_fraction,
            "rounds": rounds,
            "aggregates": {
                "H_r": _mean_sd([r["H_r"] for r in rounds]),
                "H_v": _mean_sd([r["H_v"] for r in rounds]),
                "beta": _mean_sd(betas) if betas else None,
                "beta_pooled": beta_pooled,
            },
        }
        if curves:
            point["curves"] = _point_curves(chunk[0][5], pooled, fr, fit_fraction)
        if series_sink is not None:
            for k, _, _, _, _, series, _ in chunk:
                series_sink(overrides, k, series)
        points.append(point)
    return {"n_rounds": n_rounds, "base_seed": base.seed, "points": points}
