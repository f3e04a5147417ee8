"""Simulation laboratory for unit-order limit-order-book dynamics.

The package couples an order-book matching engine with heavy-tailed order
placement, optionally long-memory order signs and placement magnitudes, and a
state-dependent cancelation law, then measures the resulting return series
with detrended fluctuation analysis (plain and multifractal) and a
log-log tail fit of the volatility distribution.
"""

from .analysis import (DfaResult, MfDfaResult, OrderFlowRecord, TailFitResult,
                       ccdf_tail_fit, default_scales, dfa, mfdfa,
                       read_orderflow_csv, relative_prices_from_orderflow)
from .cancelation import (CancelParams, cancel_probabilities, cancel_scan)
from .errors import (EstimationError, OrderFlowParseError, OrderNotFoundError,
                     ParameterError)
from .lob import BUY, SELL, BookEvent, BookSnapshot, LimitOrderBook, Order
from .simulator import (FIT_RANGES, SeriesSet, SimConfig, derive_round_seed,
                        run_experiment, run_round)
from .stochastic import (derive_seed, fgn_autocovariance, gen_fgn,
                         gen_sign_series, make_rng, rank_remap,
                         sample_student_t)

__version__ = "0.1.0"

__all__ = [
    "BUY", "SELL", "BookEvent", "BookSnapshot", "CancelParams", "DfaResult",
    "EstimationError", "FIT_RANGES", "LimitOrderBook", "MfDfaResult", "Order",
    "OrderFlowParseError", "OrderFlowRecord", "OrderNotFoundError",
    "ParameterError", "SeriesSet", "SimConfig", "TailFitResult",
    "cancel_probabilities", "cancel_scan", "ccdf_tail_fit", "default_scales",
    "derive_round_seed", "derive_seed", "dfa", "fgn_autocovariance", "gen_fgn",
    "gen_sign_series", "make_rng", "mfdfa", "rank_remap",
    "read_orderflow_csv", "relative_prices_from_orderflow", "run_experiment",
    "run_round", "sample_student_t", "__version__",
]
