"""Equidistant quantization of the scaled source and the probabilities
the decoder and the efficiency accounting are built on.

The finite range ``[-alpha, alpha)`` is cut into ``2**p`` bins of width
``delta = 2*alpha / 2**p``; the two outer bins extend to infinity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import erf, erfc, log_ndtr, logsumexp, ndtr
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .source import _check_rho, differential_entropy, mutual_information

UNDERFLOW_MASS = 1e-300


@dataclass(frozen=True)
class QuantizationGrid:
    """Partition of the real line into ``2**p`` intervals.

    Interval ``k`` is ``[a_k, b_k)`` with interior boundaries at
    ``-alpha + k*delta``, ``a_0 = -inf`` and ``b_{2^p-1} = +inf``.
    """

    alpha: float
    p: int

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"cutoff alpha must be positive, got {self.alpha}")
        if int(self.p) != self.p or self.p < 1:
            raise ValueError(f"bits per symbol p must be a positive integer, got {self.p}")
        object.__setattr__(self, "p", int(self.p))
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def n_bins(self) -> int:
        return 1 << self.p

    @property
    def delta(self) -> float:
        return 2.0 * self.alpha / self.n_bins

    @property
    def edges(self) -> np.ndarray:
        """All ``2**p + 1`` boundaries including the infinite ends."""
        k = np.arange(self.n_bins + 1)
        e = -self.alpha + k * self.delta
        e[0], e[-1] = -np.inf, np.inf
        return e

    def lower(self, k) -> np.ndarray:
        k = np.asarray(k)
        return np.where(k == 0, -np.inf, -self.alpha + k * self.delta)

    def upper(self, k) -> np.ndarray:
        k = np.asarray(k)
        return np.where(k == self.n_bins - 1, np.inf, -self.alpha + (k + 1) * self.delta)

    def centers(self, k) -> np.ndarray:
        """Midpoint of the finite part of each bin."""
        return -self.alpha + (np.asarray(k) + 0.5) * self.delta

    def approx_entropy(self) -> float:
        """Fine-grid approximation ``h(Y_A) - log2(delta)``."""
        return differential_entropy(1.0) - np.log2(self.delta)


@dataclass(frozen=True)
class SymbolSplit:
    """Split of a ``p``-bit symbol into ``q`` high bits and ``d`` low bits."""

    q: int
    d: int

    def __post_init__(self):
        if self.q < 1 or self.d < 0:
            raise ValueError(f"need q >= 1 and d >= 0, got q={self.q}, d={self.d}")

    @property
    def p(self) -> int:
        return self.q + self.d


def quantize(grid: QuantizationGrid, y):
    """Bin index of each value in ``y``. Values beyond ``±alpha`` saturate."""
    y = np.asarray(y, dtype=float)
    if np.isnan(y).any():
        raise ValueError("cannot quantize NaN")
    k = np.floor((y + grid.alpha) / grid.delta)
    k = np.clip(k, 0, grid.n_bins - 1).astype(np.int64)
    return int(k) if k.ndim == 0 else k


def split_symbol(k, split: SymbolSplit):
    """Return ``(k_hat, k_check)``: the ``q`` most and ``d`` least significant bits."""
    k = np.asarray(k, dtype=np.int64)
    if (k < 0).any() or (k >> split.p).any():
        raise ValueError(f"symbol out of range for p={split.p}")
    k_hat = k >> split.d
    k_check = k & ((1 << split.d) - 1)
    if k.ndim == 0:
        return int(k_hat), int(k_check)
    return k_hat, k_check


def recombine(k_hat, k_check, split: SymbolSplit):
    out = (np.asarray(k_hat, dtype=np.int64) << split.d) | np.asarray(k_check, dtype=np.int64)
    return int(out) if out.ndim == 0 else out


def _half_erf_diff(lo, hi):
    """``erf(hi)/2 - erf(lo)/2`` without cancellation when both are in one tail."""
    lo, hi = np.broadcast_arrays(np.asarray(lo, float), np.asarray(hi, float))
    out = 0.5 * (erf(hi) - erf(lo))
    right = lo >= 0
    left = hi <= 0
    out = np.where(right, 0.5 * (erfc(lo) - erfc(hi)), out)
    out = np.where(left, 0.5 * (erfc(-hi) - erfc(-lo)), out)
    return np.maximum(out, 0.0)


def _log_mass(zlo, zhi):
    """``log(Phi(zhi) - Phi(zlo))`` for standardized bounds, stable in both tails."""
    zlo, zhi = np.broadcast_arrays(np.asarray(zlo, float), np.asarray(zhi, float))
    flip = zlo > 0
    a = np.where(flip, -zhi, zlo)
    b = np.where(flip, -zlo, zhi)
    lb = log_ndtr(b)
    la = log_ndtr(a)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = lb + np.log1p(-np.exp(la - lb))
    return np.where(np.isnan(out), -np.inf, out)


def interval_prob(grid: QuantizationGrid, rho: float, y_b, k=None):
    """``P(Z_A = k | Y_B = y_b)``.

    With ``k=None`` the full distribution over all bins is returned along a
    new last axis. ``y_b`` and ``k`` broadcast otherwise.
    """
    rho = _check_rho(rho)
    scale = np.sqrt(2.0 * (1.0 - rho * rho))
    mean = np.asarray(y_b, dtype=float) * rho
    if k is None:
        edges = grid.edges
        z = (edges - mean[..., None]) / scale
        return _half_erf_diff(z[..., :-1], z[..., 1:])
    k = np.asarray(k)
    return _half_erf_diff((grid.lower(k) - mean) / scale, (grid.upper(k) - mean) / scale)


def apriori_vectors(grid: QuantizationGrid, split: SymbolSplit, rho: float, y_b, k_check):
    """Per-symbol distributions of the high bits given ``y_b`` and the disclosed low bits.

    Parameters
    ----------
    y_b : array of shape (n,)
    k_check : array of shape (n,) with values below ``2**d``

    Returns
    -------
    ndarray of shape (n, 2**q), rows summing to one.
    """
    if split.p != grid.p:
        raise ValueError(f"split uses p={split.p} bits but grid has p={grid.p}")
    rho = _check_rho(rho)
    y_b = np.atleast_1d(np.asarray(y_b, dtype=float))
    k_check = np.atleast_1d(np.asarray(k_check, dtype=np.int64))
    if (k_check < 0).any() or (k_check >> split.d).any():
        raise ValueError(f"disclosed bits out of range for d={split.d}")
    y_b, k_check = np.broadcast_arrays(y_b, k_check)

    k = (np.arange(1 << split.q)[None, :] << split.d) | k_check[:, None]
    sigma = np.sqrt(1.0 - rho * rho)
    mean = (y_b * rho)[:, None]
    lo = (grid.lower(k) - mean) / sigma
    hi = (grid.upper(k) - mean) / sigma
    mass = _half_erf_diff(lo / np.sqrt(2.0), hi / np.sqrt(2.0))

    peak = mass.max(axis=1)
    small = peak < UNDERFLOW_MASS
    if small.any():
        logm = _log_mass(lo[small], hi[small])
        top = logm.max(axis=1)
        finite = np.isfinite(top)
        sub = np.zeros_like(logm)
        sub[finite] = np.exp(logm[finite] - logsumexp(logm[finite], axis=1, keepdims=True))
        if (~finite).any():
            # nothing representable: put all mass on the bin nearest the conditional mean
            centers = np.clip(grid.centers(k[small][~finite]), -grid.alpha, grid.alpha)
            nearest = np.argmin(np.abs(centers - mean[small][~finite]), axis=1)
            sub[~finite] = 0.0
            sub[np.flatnonzero(~finite), nearest] = 1.0
        mass[small] = sub
    return mass / mass.sum(axis=1, keepdims=True)


def apriori_vector(grid, split, rho, y_b: float, k_check: int) -> np.ndarray:
    """Single-symbol version of :func:`apriori_vectors`."""
    return apriori_vectors(grid, split, rho, [y_b], [k_check])[0]


def marginal_probs(grid: QuantizationGrid) -> np.ndarray:
    """``P(Z_A = k)`` for a standard normal ``Y_A``."""
    e = grid.edges
    return _half_erf_diff(e[:-1] / np.sqrt(2.0), e[1:] / np.sqrt(2.0))


def _entropy_bits(probs, axis=-1):
    probs = np.asarray(probs, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(probs > 0, -probs * np.log2(probs), 0.0)
    return terms.sum(axis=axis)


def discrete_entropy(grid: QuantizationGrid, probs=None) -> float:
    """Shannon entropy ``H(Z_A)`` in bits.

    ``probs`` defaults to the Gaussian marginal of the grid's bins.
    """
    if probs is None:
        probs = marginal_probs(grid)
    return float(_entropy_bits(probs))


class MCEstimate(NamedTuple):
    value: float
    stderr: float


def conditional_entropy_mc(grid: QuantizationGrid, rho: float, num_samples: int = 20000,
                           seed=0, chunk: int = 4096) -> MCEstimate:
    """Monte-Carlo estimate of ``H(Z_A | Y_B)`` in bits, averaging over ``y_b``."""
    rho = _check_rho(rho)
    num_samples = int(num_samples)
    if num_samples < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(seed)
    y_b = rng.standard_normal(num_samples)
    values = np.empty(num_samples)
    for start in range(0, num_samples, chunk):
        stop = min(start + chunk, num_samples)
        values[start:stop] = _entropy_bits(interval_prob(grid, rho, y_b[start:stop]))
    stderr = values.std(ddof=1) / np.sqrt(num_samples) if num_samples > 1 else float("nan")
    return MCEstimate(float(values.mean()), float(stderr))


def quantized_mutual_information(grid, rho, num_samples=20000, seed=0) -> MCEstimate:
    """``I(Z_A; Y_B) = H(Z_A) - H(Z_A | Y_B)`` in bits."""
    h_cond = conditional_entropy_mc(grid, rho, num_samples, seed)
    return MCEstimate(discrete_entropy(grid) - h_cond.value, h_cond.stderr)


def quantization_efficiency(grid, rho, num_samples=20000, seed=0) -> MCEstimate:
    """Fraction of ``I(Y_A; Y_B)`` that survives quantization."""
    info = mutual_information(rho)
    if info <= 0:
        raise ValueError("quantization efficiency is undefined for rho = 0")
    iq = quantized_mutual_information(grid, rho, num_samples, seed)
    return MCEstimate(iq.value / info, iq.stderr / info)


class GridQuantizer(TransformerMixin, BaseEstimator):
    """Scale and quantize raw measurements onto an equidistant grid.

    Parameters
    ----------
    alpha : float
        Cutoff of the finite quantization range, in units of the
        scaled variable.
    p : int
        Bits per symbol; the grid has ``2**p`` bins.
    sigma : float or None
        Standard deviation of the raw measurements. ``None`` estimates it
        from the data passed to :meth:`fit`.
    """

    def __init__(self, alpha=8.0, p=8, sigma=None):
        self.alpha = alpha
        self.p = p
        self.sigma = sigma

    def fit(self, X, y=None):
        X = check_array(X, ensure_2d=False, dtype=float)
        self.grid_ = QuantizationGrid(self.alpha, self.p)
        self.sigma_ = float(np.std(X)) if self.sigma is None else float(self.sigma)
        if not self.sigma_ > 0:
            raise ValueError("cannot scale data with zero spread")
        return self

    def transform(self, X):
        check_is_fitted(self, "grid_")
        X = check_array(X, ensure_2d=False, dtype=float)
        return quantize(self.grid_, X / self.sigma_)

    def inverse_transform(self, Z):
        """Bin centres (in raw units) of the given symbols."""
        check_is_fitted(self, "grid_")
        Z = np.asarray(Z)
        return np.clip(self.grid_.centers(Z), -self.grid_.alpha, self.grid_.alpha) * self.sigma_
