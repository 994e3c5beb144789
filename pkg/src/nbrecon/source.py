"""Correlated Gaussian source: sampling and information quantities.

All quantities refer to the unit-variance pair ``(y_a, y_b)`` with
correlation ``rho``; raw measurements are brought there by
:func:`scale_frame`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LOG2_2PIE_HALF = 0.5 * np.log2(2 * np.pi * np.e)


def _check_rho(rho: float) -> float:
    rho = float(rho)
    if not abs(rho) < 1:
        raise ValueError(f"correlation must satisfy |rho| < 1, got {rho}")
    return rho


def db_to_linear(snr_db):
    return 10.0 ** (np.asarray(snr_db, dtype=float) / 10.0)


def linear_to_db(snr):
    return 10.0 * np.log10(snr)


def snr_to_rho(snr: float) -> float:
    """Correlation coefficient for a linear SNR: ``sqrt(snr / (1 + snr))``."""
    snr = float(snr)
    if not snr > 0:
        raise ValueError(f"SNR must be positive, got {snr}")
    return float(np.sqrt(snr / (1.0 + snr)))


def rho_to_snr(rho: float) -> float:
    """Linear SNR for a correlation coefficient: ``rho^2 / (1 - rho^2)``."""
    rho = _check_rho(rho)
    return rho * rho / (1.0 - rho * rho)


def mutual_information(rho: float) -> float:
    """``I(Y_A; Y_B)`` in bits per symbol for the bivariate normal pair."""
    rho = _check_rho(rho)
    return float(-0.5 * np.log2(1.0 - rho * rho))


def differential_entropy(variance: float = 1.0) -> float:
    """Differential entropy in bits of a normal variable with the given variance."""
    return float(LOG2_2PIE_HALF + 0.5 * np.log2(variance))


def conditional_differential_entropy(rho: float) -> float:
    """``h(Y_A | Y_B)`` in bits."""
    rho = _check_rho(rho)
    return differential_entropy(1.0 - rho * rho)


@dataclass(frozen=True)
class SourceModel:
    """Bivariate normal source.

    ``sigma_a`` and ``sigma_b`` are the standard deviations of the unscaled
    measurements; after scaling both marginals are standard normal and the
    covariance matrix is ``[[1, rho], [rho, 1]]``.
    """

    rho: float
    sigma_a: float = 1.0
    sigma_b: float = 1.0

    def __post_init__(self):
        _check_rho(self.rho)
        if not (self.sigma_a > 0 and self.sigma_b > 0):
            raise ValueError("marginal standard deviations must be positive")

    @classmethod
    def from_snr(cls, snr: float, **kwargs) -> "SourceModel":
        return cls(snr_to_rho(snr), **kwargs)

    @property
    def snr(self) -> float:
        return rho_to_snr(self.rho)

    @property
    def covariance(self) -> np.ndarray:
        """Covariance of the unscaled pair."""
        c = self.rho * self.sigma_a * self.sigma_b
        return np.array([[self.sigma_a**2, c], [c, self.sigma_b**2]])

    @property
    def scaled_covariance(self) -> np.ndarray:
        return np.array([[1.0, self.rho], [self.rho, 1.0]])

    @property
    def mutual_information(self) -> float:
        return mutual_information(self.rho)


def conditional_params(model: SourceModel | float, y_b):
    """Mean and variance of ``Y_A`` given ``Y_B = y_b`` (scaled variables).

    ``model`` may be a :class:`SourceModel` or a bare correlation.
    The mean broadcasts over array ``y_b``; the variance does not depend on it.
    """
    rho = model.rho if isinstance(model, SourceModel) else _check_rho(model)
    mean = np.asarray(y_b, dtype=float) * rho
    if mean.ndim == 0:
        mean = float(mean)
    return mean, 1.0 - rho * rho


@dataclass(frozen=True)
class FramePair:
    """Alice's and Bob's scaled frames of equal length."""

    y_a: np.ndarray
    y_b: np.ndarray

    def __post_init__(self):
        if self.y_a.shape != self.y_b.shape or self.y_a.ndim != 1 or self.y_a.size < 1:
            raise ValueError("frames must be non-empty 1-d arrays of equal length")

    @property
    def n(self) -> int:
        return self.y_a.size

    def swapped(self) -> "FramePair":
        """Exchange roles, turning direct into reverse reconciliation."""
        return FramePair(self.y_b, self.y_a)


def sample_frames(rho: float, n: int, seed=None) -> FramePair:
    """Draw ``n`` samples of the scaled pair.

    ``y_a = y1`` and ``y_b = rho*y1 + sqrt(1-rho^2)*y2`` with independent
    standard normals. ``seed`` is anything :func:`numpy.random.default_rng`
    accepts (including a ``SeedSequence`` or a ``Generator``).
    """
    rho = _check_rho(rho)
    n = int(n)
    if n < 1:
        raise ValueError("frame length must be at least 1")
    rng = np.random.default_rng(seed)
    y1 = rng.standard_normal(n)
    y2 = rng.standard_normal(n)
    return FramePair(y1, rho * y1 + np.sqrt(1.0 - rho * rho) * y2)


def scale_frame(x, sigma: float) -> np.ndarray:
    sigma = float(sigma)
    if not sigma > 0:
        raise ValueError(f"scale must be positive, got {sigma}")
    return np.asarray(x, dtype=float) / sigma
