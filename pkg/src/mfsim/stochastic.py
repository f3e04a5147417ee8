"""Random inputs for the simulator.

Fractional Gaussian noise via circulant embedding, a sign-series generator
calibrated so the *measured* DFA exponent of the signs hits a target, Student-t
sampling with non-integer degrees of freedom, and a rank-order remap between
series.  All generators are pure functions of (parameters, seed); streams are
counter-based (Philox) so derived seeds never collide.
"""
from __future__ import annotations

import functools
import math

import numpy as np

from .analysis import dfa
from .errors import EstimationError, ParameterError

# Calibration of the sign generator: measure on a fixed-length series with a
# fixed internal seed so the result is a deterministic function of the target.
CALIBRATION_LENGTH = 1 << 17
CALIBRATION_TOL = 0.01
CALIBRATION_MAX_ITER = 12
_CALIBRATION_SEED = 0x5F6EAB123C449D07


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Generator on the Philox counter-based stream (seed, *stream).

    Distinct stream paths give statistically independent streams for the same
    base seed.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: int, *stream: int) -> int:
    """Collision-resistant child seed for the stream path (seed, *stream)."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(s) for s in stream))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def fgn_autocovariance(hurst: float, lags) -> np.ndarray:
    """Autocovariance gamma(k) of unit-variance fractional Gaussian noise."""
    k = np.abs(np.asarray(lags, dtype=float))
    h2 = 2.0 * hurst
    return 0.5 * ((k + 1.0) ** h2 - 2.0 * k ** h2 + np.abs(k - 1.0) ** h2)


def gen_fgn(n: int, hurst: float, seed: int) -> np.ndarray:
    """Exact-covariance fractional Gaussian noise of length n.

    Circulant embedding of the fGn covariance: the eigenvalues of the length-2n
    circulant are nonnegative for any hurst in (0, 1), so a complex Gaussian
    weighted by sqrt(eigenvalue) and transformed back has exactly the target
    autocovariance.  Cost is one FFT of length 2n.
    """
    if not 0.0 < hurst < 1.0:
        raise ParameterError(f"hurst must lie in (0, 1), got {hurst}")
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    rng = make_rng(seed) if not isinstance(seed, np.random.Generator) else seed
    if n == 1:
        return rng.standard_normal(1)
    m = 2 * n
    gamma = fgn_autocovariance(hurst, np.arange(n + 1))
    row = np.concatenate([gamma, gamma[-2:0:-1]])
    lam = np.fft.rfft(row).real
    # Roundoff can push eigenvalues a hair below zero; anything materially
    # negative means the embedding failed and the sample would be biased.
    if lam.min() < -1e-8 * lam.max():
        raise EstimationError(
            f"circulant embedding has negative eigenvalue {lam.min():.3e}")
    lam = np.clip(lam, 0.0, None)
    z = rng.standard_normal(m)
    w = np.empty(n + 1, dtype=complex)
    w[0] = math.sqrt(lam[0] / m) * z[0]
    w[n] = math.sqrt(lam[n] / m) * z[1]
    w[1:n] = np.sqrt(lam[1:n] / (2.0 * m)) * (z[2::2] + 1j * z[3::2])
    return np.fft.irfft(w, n=m)[:n] * m


def sample_student_t(n: int, df: float, scale: float, seed: int) -> np.ndarray:
    """Student-t variates with (possibly non-integer) df, scaled by `scale`.

    Built as Z / sqrt(G / df) with G ~ Gamma(df / 2, 2), which is chi-square
    with df degrees of freedom for any real df > 0.
    """
    if df <= 0.0:
        raise ParameterError(f"df must be positive, got {df}")
    if scale <= 0.0:
        raise ParameterError(f"scale must be positive, got {scale}")
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    rng = make_rng(seed) if not isinstance(seed, np.random.Generator) else seed
    z = rng.standard_normal(n)
    g = rng.gamma(df / 2.0, 2.0, size=n)
    return scale * z / np.sqrt(g / df)


def rank_remap(values, template) -> np.ndarray:
    """Reorder `values` so its ranks match those of `template`.

    output[t] holds the k-th smallest element of `values`, where k is the rank
    of template[t] in `template`.  The output is an exact permutation of
    `values`; ties in the template break by position (stable sort), so
    rank_remap(v, v) == v even with duplicates.
    """
    v = np.asarray(values, dtype=float).ravel()
    t = np.asarray(template, dtype=float).ravel()
    if v.size != t.size:
        raise ParameterError(f"length mismatch: {v.size} values vs {t.size} template")
    order = np.argsort(t, kind="stable")
    ranks = np.empty(t.size, dtype=np.intp)
    ranks[order] = np.arange(t.size)
    return np.sort(v)[ranks]


def _measured_sign_exponent(input_hurst: float) -> float:
    z = gen_fgn(CALIBRATION_LENGTH, input_hurst, _CALIBRATION_SEED)
    signs = np.where(z >= 0.0, 1.0, -1.0)
    if signs.min() == signs.max():
        return math.inf  # noise never changed sign; maximally persistent
    return dfa(signs).hurst


@functools.lru_cache(maxsize=128)
def _calibrated_input_hurst(target: float) -> float:
    """Input fGn exponent whose *sign series* measures `target` under DFA.

    Taking signs destroys part of the correlation, so the measured exponent of
    sign(fgn(h)) sits below h; bisection on the measured value recovers the
    input exponent to within CALIBRATION_TOL.  The measurement uses one fixed
    noise sample across iterations, which makes the objective monotone in h.
    """
    lo, hi = target, 0.999
    best_h, best_measured = lo, _measured_sign_exponent(lo)
    if abs(best_measured - target) <= CALIBRATION_TOL:
        return lo
    m_hi = _measured_sign_exponent(hi)
    if abs(m_hi - target) < abs(best_measured - target):
        best_h, best_measured = hi, m_hi
    if m_hi < target:
        raise EstimationError(
            f"sign exponent saturates at {m_hi:.4f} below target {target}",
            best_value=m_hi)
    for _ in range(CALIBRATION_MAX_ITER):
        mid = 0.5 * (lo + hi)
        measured = _measured_sign_exponent(mid)
        if abs(measured - target) < abs(best_measured - target):
            best_h, best_measured = mid, measured
        if abs(measured - target) <= CALIBRATION_TOL:
            return mid
        if measured < target:
            lo = mid
        else:
            hi = mid
    raise EstimationError(
        f"sign calibration did not reach {target} within {CALIBRATION_MAX_ITER} "
        f"iterations; best measured exponent {best_measured:.4f} at input {best_h:.4f}",
        best_value=best_measured)


def gen_sign_series(n: int, target_hurst: float, seed: int) -> np.ndarray:
    """Series of +/-1 whose measured DFA exponent is `target_hurst`.

    target_hurst = 0.5 gives iid fair signs.  For persistent targets the signs
    come from thresholding fGn at zero, with the input exponent pre-calibrated
    (and cached) so the measured exponent of the output lands on target.
    """
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    if not 0.5 <= target_hurst < 1.0:
        raise ParameterError(f"target_hurst must lie in [0.5, 1), got {target_hurst}")
    if target_hurst == 0.5:
        rng = make_rng(seed)
        return np.where(rng.random(n) < 0.5, np.int8(-1), np.int8(1))
    input_hurst = _calibrated_input_hurst(float(target_hurst))
    z = gen_fgn(n, input_hurst, seed)
    return np.where(z >= 0.0, np.int8(1), np.int8(-1))
