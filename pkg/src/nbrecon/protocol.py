"""Three-phase reconciliation of a quantized Gaussian frame.

Alice quantizes her frame, discloses the ``d`` low bits of every symbol
and sends the syndrome of the ``q`` high bits. Bob turns his own frame and
the disclosed bits into per-symbol priors and decodes the high bits.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .decoder import DecodeResult, DecoderConfig, decode
from .ldpc import SparseParityCheck, load, make_code, syndrome
from .quantizer import (
    QuantizationGrid,
    SymbolSplit,
    apriori_vectors,
    conditional_entropy_mc,
    discrete_entropy,
    quantize,
    recombine,
    split_symbol,
)
from .source import FramePair, db_to_linear, mutual_information, snr_to_rho

MESSAGE_MAGIC = b"NBRM"
_HEADER = struct.Struct("<4sBBII")


@dataclass(frozen=True)
class ProtocolParams:
    grid: QuantizationGrid
    split: SymbolSplit
    code: SparseParityCheck
    rho: float

    def __post_init__(self):
        if self.split.q != self.code.q:
            raise ValueError(f"split keeps q={self.split.q} bits but the code is over GF(2^{self.code.q})")
        if self.split.p != self.grid.p:
            raise ValueError(f"split covers p={self.split.p} bits but the grid has p={self.grid.p}")
        if not abs(self.rho) < 1:
            raise ValueError("need |rho| < 1")

    @classmethod
    def build(cls, code: SparseParityCheck, alpha: float, d: int, rho: float) -> "ProtocolParams":
        split = SymbolSplit(code.q, d)
        return cls(QuantizationGrid(alpha, split.p), split, code, rho)

    @property
    def n(self) -> int:
        return self.code.n

    @property
    def source_rate(self) -> float:
        return source_rate(self.split.p, self.split.q, self.code.rate)


class AliceOutput(NamedTuple):
    z_check: np.ndarray
    syndrome: np.ndarray
    z_a: np.ndarray


def encode_messages(z_check, synd, q: int, d: int) -> bytes:
    """Byte layout of the public messages.

    Little-endian header ``magic(4s) q(u8) d(u8) n(u32) m(u32)`` followed by
    ``n`` disclosed low-bit values and ``m`` syndrome symbols, one unsigned
    byte each. With ``d = 0`` the disclosed block is still ``n`` zero bytes.
    """
    z_check = np.asarray(z_check, dtype=np.int64)
    synd = np.asarray(synd, dtype=np.int64)
    return (_HEADER.pack(MESSAGE_MAGIC, q, d, z_check.size, synd.size)
            + z_check.astype(np.uint8).tobytes() + synd.astype(np.uint8).tobytes())


def decode_messages(payload: bytes):
    """Inverse of :func:`encode_messages`; returns ``(z_check, syndrome, q, d)``."""
    if len(payload) < _HEADER.size:
        raise ValueError("message payload too short")
    magic, q, d, n, m = _HEADER.unpack_from(payload)
    if magic != MESSAGE_MAGIC:
        raise ValueError("not a reconciliation message payload")
    body = np.frombuffer(payload, dtype=np.uint8, offset=_HEADER.size)
    if body.size != n + m:
        raise ValueError(f"payload body has {body.size} bytes, expected {n + m}")
    return body[:n].astype(np.int64), body[n:].astype(np.int64), q, d


def alice_messages(params: ProtocolParams, y_a) -> AliceOutput:
    """Quantize, split and compute the syndrome of the high bits."""
    y_a = np.asarray(y_a, dtype=float)
    if y_a.shape != (params.n,):
        raise ValueError(f"frame must have length {params.n}")
    z_a = quantize(params.grid, y_a)
    z_hat, z_check = split_symbol(z_a, params.split)
    return AliceOutput(z_check, syndrome(params.code, z_hat), z_a)


def bob_reconcile(params: ProtocolParams, y_b, z_check, synd,
                  decoder_config: DecoderConfig | None = None):
    """Bob's estimate of Alice's quantized frame.

    Returns ``(z_b, result)``; ``z_b`` is the best estimate even when
    ``result.success`` is false.
    """
    y_b = np.asarray(y_b, dtype=float)
    z_check = np.asarray(z_check, dtype=np.int64)
    if y_b.shape != (params.n,) or z_check.shape != (params.n,):
        raise ValueError(f"frames must have length {params.n}")
    prior = apriori_vectors(params.grid, params.split, params.rho, y_b, z_check)
    result = decode(params.code, synd, prior, decoder_config)
    return recombine(result.decoded, z_check, params.split), result


def source_rate(p: int, q: int, rate: float) -> float:
    """Disclosed bits per symbol: ``d`` verbatim plus ``q (1 - R)`` syndrome bits."""
    return (p - q) + q * (1.0 - rate)


class Efficiency(NamedTuple):
    beta: float
    beta_q: float | None = None
    beta_code: float | None = None


def efficiency(r_source: float, entropy_H: float, mutual_I: float, quantized_I: float | None = None) -> Efficiency:
    """Reconciliation efficiency ``(H(Z_A) - R_source) / I(Y_A; Y_B)``.

    With ``quantized_I = I(Z_A; Y_B)`` the factors ``beta_q`` (quantization)
    and ``beta_code`` (coding) are filled in as well.
    """
    if not mutual_I > 0:
        raise ValueError("mutual information must be positive")
    beta = (entropy_H - r_source) / mutual_I
    if quantized_I is None:
        return Efficiency(beta)
    return Efficiency(beta, quantized_I / mutual_I, (entropy_H - r_source) / quantized_I)


@lru_cache(maxsize=256)
def _cond_entropy(alpha, p, rho, num_samples, seed):
    return conditional_entropy_mc(QuantizationGrid(alpha, p), rho, num_samples, seed)


class EfficiencyBreakdown(NamedTuple):
    beta: float
    beta_q: float
    beta_code: float
    beta_approx: float
    entropy: float
    entropy_approx: float
    cond_entropy: float
    cond_entropy_stderr: float
    mutual_info: float
    r_source: float


def efficiency_breakdown(grid: QuantizationGrid, split: SymbolSplit, rate: float, rho: float,
                         num_samples: int = 20000, seed: int = 0) -> EfficiencyBreakdown:
    """Efficiency with exact ``H(Z_A)`` plus its factors and the fine-grid variant.

    ``beta_approx`` uses ``h(Y_A) - log2(delta)`` in place of the exact
    discrete entropy.
    """
    r_source = source_rate(split.p, split.q, rate)
    H = discrete_entropy(grid)
    I = mutual_information(rho)
    hc = _cond_entropy(grid.alpha, grid.p, float(rho), int(num_samples), seed)
    eff = efficiency(r_source, H, I, H - hc.value)
    return EfficiencyBreakdown(eff.beta, eff.beta_q, eff.beta_code,
                               efficiency(r_source, grid.approx_entropy(), I).beta,
                               H, grid.approx_entropy(), hc.value, hc.stderr, I, r_source)


def beta_at(grid: QuantizationGrid, split: SymbolSplit, rate: float, rho: float) -> float:
    """Efficiency using the exact discrete entropy; no Monte-Carlo involved."""
    return efficiency(source_rate(split.p, split.q, rate), discrete_entropy(grid),
                      mutual_information(rho)).beta


@dataclass(frozen=True)
class ReconciliationReport:
    r_source: float
    leak_bound: float
    beta: float
    beta_q: float
    beta_code: float
    decode: DecodeResult
    symbols_match: bool
    beta_approx: float = float("nan")


def reconcile(params: ProtocolParams, frames: FramePair, decoder_config: DecoderConfig | None = None,
              num_samples: int = 20000) -> ReconciliationReport:
    """Run both sides on one frame pair and account the rates."""
    alice = alice_messages(params, frames.y_a)
    z_b, result = bob_reconcile(params, frames.y_b, alice.z_check, alice.syndrome, decoder_config)
    eff = efficiency_breakdown(params.grid, params.split, params.code.rate, params.rho, num_samples)
    return ReconciliationReport(
        r_source=params.source_rate,
        leak_bound=params.source_rate,
        beta=eff.beta,
        beta_q=eff.beta_q,
        beta_code=eff.beta_code,
        decode=result,
        symbols_match=bool(np.array_equal(z_b, alice.z_a)),
        beta_approx=eff.beta_approx,
    )


class NonBinaryReconciler(BaseEstimator):
    """Estimator-style front end to the reconciliation protocol.

    Parameters
    ----------
    q : int
        Field exponent; the high ``q`` bits of each symbol are decoded.
    d : int
        Low bits disclosed verbatim.
    alpha : float
        Quantization cutoff.
    rate : float or None
        LDPC code rate; ``None`` takes the rate of a named profile.
    profile : str
        ``"regular"`` or a named irregular profile such as ``"gf32-r09"``.
    n : int
        Frame length.
    rho, snr_db : float
        Correlation of the source, given directly or through the SNR in dB.
    code : SparseParityCheck or path, optional
        Use this code instead of constructing one.
    max_iterations, damping :
        Decoder settings.
    random_state : int
        Seed for code construction.
    """

    def __init__(self, q=5, d=3, alpha=8.0, rate=0.7, profile="regular", n=1000, rho=None,
                 snr_db=None, code=None, max_iterations=50, damping=1.0, random_state=0):
        self.q = q
        self.d = d
        self.alpha = alpha
        self.rate = rate
        self.profile = profile
        self.n = n
        self.rho = rho
        self.snr_db = snr_db
        self.code = code
        self.max_iterations = max_iterations
        self.damping = damping
        self.random_state = random_state

    def fit(self, X=None, y=None):
        if (self.rho is None) == (self.snr_db is None):
            raise ValueError("give exactly one of rho and snr_db")
        rho = self.rho if self.rho is not None else snr_to_rho(float(db_to_linear(self.snr_db)))
        if self.code is None:
            code = make_code(self.q, self.n, self.rate, self.profile, self.random_state)
        elif isinstance(self.code, SparseParityCheck):
            code = self.code
        else:
            code = load(self.code)
        if X is not None:
            X = check_array(X, ensure_2d=False)
            if X.shape[-1] != code.n:
                raise ValueError(f"frames of length {X.shape[-1]} do not match code length {code.n}")
        self.code_ = code
        self.params_ = ProtocolParams.build(code, self.alpha, self.d, rho)
        self.decoder_config_ = DecoderConfig(self.max_iterations, self.damping)
        return self

    def encode(self, y_a) -> AliceOutput:
        check_is_fitted(self, "params_")
        y_a = check_array(y_a, ensure_2d=False)
        return alice_messages(self.params_, y_a)

    def reconcile(self, y_b, z_check, synd):
        check_is_fitted(self, "params_")
        y_b = check_array(y_b, ensure_2d=False)
        return bob_reconcile(self.params_, y_b, z_check, synd, self.decoder_config_)

    def score(self, Y_a, Y_b):
        """Fraction of frame pairs (rows) reconciled without a symbol error."""
        Y_a = check_array(Y_a)
        Y_b = check_array(Y_b)
        ok = 0
        for y_a, y_b in zip(Y_a, Y_b):
            alice = self.encode(y_a)
            z_b, res = self.reconcile(y_b, alice.z_check, alice.syndrome)
            ok += bool(res.success and np.array_equal(z_b, alice.z_a))
        return ok / len(Y_a)

    @property
    def source_rate_(self) -> float:
        check_is_fitted(self, "params_")
        return self.params_.source_rate

    def efficiency(self, num_samples=20000, seed=0) -> EfficiencyBreakdown:
        check_is_fitted(self, "params_")
        p = self.params_
        return efficiency_breakdown(p.grid, p.split, p.code.rate, p.rho, num_samples, seed)
