"""Monte-Carlo frame error rate experiments.

Every frame draws its samples from a generator seeded by
``(root_seed, snr_key, frame_index)``, so results do not depend on how
frames are scheduled over workers. Points are cut at the first frame index
where the stopping rule fires; frames computed past that index are
discarded.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np
from statsmodels.stats.proportion import proportion_confint

from ..decoder import DecoderConfig
from ..ldpc import SparseParityCheck, cached_code, load
from ..protocol import ProtocolParams, alice_messages, beta_at, bob_reconcile
from ..quantizer import QuantizationGrid, SymbolSplit, discrete_entropy
from ..source import db_to_linear, linear_to_db, sample_frames, snr_to_rho

WORKERS_ENV = "NBRECON_WORKERS"


@dataclass
class ExperimentSpec:
    """One experiment configuration.

    ``frames`` caps the frames per point; a point also stops once it has
    ``max_errors`` frame errors and at least ``min_frames`` frames.
    """

    q: int = 5
    rate: float | None = 0.7
    profile: str = "regular"
    n: int = 1000
    alpha: float = 8.0
    d: int = 3
    snr_db: tuple = ()
    frames: int = 200
    min_frames: int = 100
    max_errors: int = 100
    max_iterations: int = 50
    damping: float = 1.0
    seed: int = 1
    code_seed: int = 0
    code_file: str | None = None
    snr_mismatch_db: float = 0.0
    workers: int | None = None

    def __post_init__(self):
        self.snr_db = tuple(float(s) for s in self.snr_db)
        if self.frames < 1:
            raise ValueError("frames per point must be at least 1")
        if any(b <= a for a, b in zip(self.snr_db, self.snr_db[1:])):
            raise ValueError("SNR grid must be strictly increasing")
        if self.min_frames > self.frames:
            self.min_frames = self.frames

    @property
    def p(self) -> int:
        return self.q + self.d

    def replace(self, **changes) -> "ExperimentSpec":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return asdict(self)

    def decoder_config(self) -> DecoderConfig:
        return DecoderConfig(self.max_iterations, self.damping)

    def code(self) -> SparseParityCheck:
        if self.code_file:
            code = load(self.code_file)
            if code.q != self.q or code.n != self.n:
                raise ValueError(f"code file {self.code_file} has q={code.q}, n={code.n}; "
                                 f"experiment wants q={self.q}, n={self.n}")
            return code
        return cached_code(self.q, self.n, self.rate, self.profile, self.code_seed)

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]


def wilson_interval(errors: int, frames: int, alpha: float = 0.05):
    if frames == 0:
        return 0.0, 1.0
    lo, hi = proportion_confint(errors, frames, alpha=alpha, method="wilson")
    return float(lo), float(hi)


@dataclass
class SweepPoint:
    snr_db: float
    rho: float
    frames: int
    errors: int
    undetected: int
    fer: float
    ci_lo: float
    ci_hi: float
    iters_mean: float
    beta: float

    def overlaps(self, other: "SweepPoint") -> bool:
        return self.ci_lo <= other.ci_hi and other.ci_lo <= self.ci_hi


@dataclass
class SweepResult:
    spec: ExperimentSpec
    points: list = field(default_factory=list)

    @property
    def fer(self) -> np.ndarray:
        return np.array([p.fer for p in self.points])


def resolve_workers(workers=None) -> int:
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1"))
    return max(1, int(workers))


def snr_key(snr_db: float) -> int:
    """Non-negative integer identifying an SNR value in seed derivation."""
    return int(round((float(snr_db) + 1000.0) * 1000.0))


_WORKER = {}


def _init_worker(code, alpha, d, decoder_config, root_seed):
    _WORKER.update(code=code, alpha=alpha, d=d, config=decoder_config, seed=root_seed)


def _simulate(code, alpha, d, config, root_seed, key, rho_true, rho_assumed, index):
    params = ProtocolParams.build(code, alpha, d, rho_assumed)
    frames = sample_frames(rho_true, code.n, seed=[root_seed, key, index])
    alice = alice_messages(params, frames.y_a)
    z_b, res = bob_reconcile(params, frames.y_b, alice.z_check, alice.syndrome, config)
    match = bool(np.array_equal(z_b, alice.z_a))
    return res.success, match, res.iterations_used


def _worker_frame(args):
    w = _WORKER
    return _simulate(w["code"], w["alpha"], w["d"], w["config"], w["seed"], *args)


class FrameRunner:
    """Runs frames of one (code, alpha, d) setup, serially or on a process pool."""

    def __init__(self, code, alpha, d, decoder_config, root_seed, workers=None, batch=None):
        self.code = code
        self.alpha = alpha
        self.d = d
        self.config = decoder_config
        self.seed = root_seed
        self.workers = resolve_workers(workers)
        self.batch = batch or max(16, 4 * self.workers)
        self._pool = None
        if self.workers > 1:
            self._pool = ProcessPoolExecutor(
                self.workers, initializer=_init_worker,
                initargs=(code, alpha, d, decoder_config, root_seed))

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def frames(self, key, rho_true, rho_assumed, indices):
        if self._pool is None:
            return [_simulate(self.code, self.alpha, self.d, self.config, self.seed,
                              key, rho_true, rho_assumed, i) for i in indices]
        args = [(key, rho_true, rho_assumed, i) for i in indices]
        return list(self._pool.map(_worker_frame, args, chunksize=max(1, len(args) // (4 * self.workers))))

    def point(self, snr_db, spec: ExperimentSpec, decide_against=None) -> SweepPoint:
        """Simulate one SNR point.

        With ``decide_against`` set, the point also stops as soon as (after
        ``spec.min_frames`` frames) the 95% interval excludes that FER value.
        """
        rho = snr_to_rho(float(db_to_linear(snr_db)))
        rho_assumed = snr_to_rho(float(db_to_linear(snr_db + spec.snr_mismatch_db)))
        key = snr_key(snr_db)
        outcomes = []
        errors = 0
        done = False
        start = 0
        while not done:
            stop = min(start + self.batch, spec.frames)
            for success, match, iters in self.frames(key, rho, rho_assumed, range(start, stop)):
                outcomes.append((success, match, iters))
                errors += not (success and match)
                count = len(outcomes)
                if count >= spec.frames:
                    done = True
                elif count >= spec.min_frames and errors >= spec.max_errors:
                    done = True
                elif decide_against is not None and count >= spec.min_frames:
                    lo, hi = wilson_interval(errors, count)
                    done = hi < decide_against or lo > decide_against
                if done:
                    break
            start = stop
        frames = len(outcomes)
        undetected = sum(1 for s, mt, _ in outcomes if s and not mt)
        lo, hi = wilson_interval(errors, frames)
        grid = QuantizationGrid(spec.alpha, self.code.q + self.d)
        beta = beta_at(grid, SymbolSplit(self.code.q, self.d), self.code.rate, rho)
        return SweepPoint(float(snr_db), rho, frames, errors, undetected, errors / frames, lo, hi,
                          float(np.mean([o[2] for o in outcomes])), beta)


def _runner(spec: ExperimentSpec, code=None, d=None, alpha=None) -> FrameRunner:
    code = code or spec.code()
    return FrameRunner(code, spec.alpha if alpha is None else alpha, spec.d if d is None else d,
                       spec.decoder_config(), spec.seed, spec.workers)


def fer_sweep(spec: ExperimentSpec, code: SparseParityCheck | None = None) -> SweepResult:
    """FER over the experiment's SNR grid (a frame error is a decoding failure or a symbol mismatch)."""
    if not spec.snr_db:
        raise ValueError("empty SNR grid")
    result = SweepResult(spec)
    with _runner(spec, code) as runner:
        for snr in spec.snr_db:
            result.points.append(runner.point(snr, spec))
    return result


@dataclass
class ThresholdResult:
    status: str
    snr_db: float
    rho: float
    beta: float
    point: SweepPoint | None
    probes: list

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def efficiency_at_fer(spec: ExperimentSpec, target_fer: float = 0.1, snr_range=None,
                      tolerance: float = 0.02, snr_tolerance_db: float = 0.02,
                      max_probes: int = 12, code: SparseParityCheck | None = None) -> ThresholdResult:
    """Bisect for the SNR at which the FER crosses ``target_fer``.

    The search interval defaults to the first and last entries of the experiment's
    SNR grid. A probe ends the search when its Wilson interval lies within
    ``target_fer +- tolerance`` or contains the target. The efficiency is
    evaluated at the final probe.
    """
    if snr_range is None:
        if len(spec.snr_db) < 2:
            raise ValueError("need an SNR range to search")
        snr_range = (spec.snr_db[0], spec.snr_db[-1])
    lo_db, hi_db = map(float, snr_range)
    probes = []

    def converged(pt):
        inside = pt.ci_lo >= target_fer - tolerance and pt.ci_hi <= target_fer + tolerance
        return inside or pt.ci_lo <= target_fer <= pt.ci_hi

    with _runner(spec, code) as runner:
        lo_pt = runner.point(lo_db, spec, decide_against=target_fer)
        hi_pt = runner.point(hi_db, spec, decide_against=target_fer)
        probes += [lo_pt, hi_pt]
        if not (lo_pt.fer > target_fer and hi_pt.fer <= target_fer):
            for pt in (lo_pt, hi_pt):
                if converged(pt) and pt.frames >= spec.frames:
                    return ThresholdResult("ok", pt.snr_db, pt.rho, pt.beta, pt, probes)
            return ThresholdResult("out_of_range", math.nan, math.nan, math.nan, None, probes)
        best = None
        for _ in range(max_probes):
            mid = 0.5 * (lo_db + hi_db)
            pt = runner.point(mid, spec, decide_against=target_fer)
            probes.append(pt)
            best = pt
            if converged(pt) or hi_db - lo_db < snr_tolerance_db:
                break
            if pt.fer > target_fer:
                lo_db = mid
            else:
                hi_db = mid
    return ThresholdResult("ok", best.snr_db, best.rho, best.beta, best, probes)


def snr_for_beta(q: int, d: int, alpha: float, rate: float, beta: float) -> float:
    """SNR in dB at which a code of this rate would reach efficiency ``beta``."""
    grid = QuantizationGrid(alpha, q + d)
    r_source = (grid.p - q) + q * (1.0 - rate)
    info = (discrete_entropy(grid) - r_source) / beta
    if info <= 0:
        raise ValueError("rate too high for this grid: no positive efficiency")
    return float(linear_to_db(2.0 ** (2.0 * info) - 1.0))


@dataclass
class StudyRow:
    label: str
    value: float
    point: SweepPoint


def d_saturation_study(spec: ExperimentSpec, d_values=(1, 2, 3, 4, 5)) -> list:
    """FER per number of disclosed bits over the experiment's SNR grid (same frames for every d)."""
    code = spec.code()
    rows = []
    for d in d_values:
        sub = spec.replace(d=int(d))
        with _runner(sub, code) as runner:
            for snr in spec.snr_db:
                rows.append(StudyRow("d", d, runner.point(snr, sub)))
    return rows


def alpha_sweep(spec: ExperimentSpec, alphas=(4, 6, 8, 10, 12), p: int = 9, target_fer: float = 0.1,
                beta_window=(0.8, 0.995)) -> list:
    """Efficiency at the FER threshold of one fixed-rate code for a range of cutoffs.

    The number of bins stays at ``2**p``, so ``d = p - q``. For each cutoff
    the search interval spans the SNRs at which the code would reach the
    efficiencies in ``beta_window``.
    """
    d = p - spec.q
    if d < 0:
        raise ValueError(f"p={p} is smaller than q={spec.q}")
    code = spec.code()
    out = []
    for alpha in alphas:
        sub = spec.replace(alpha=float(alpha), d=d)
        hi = snr_for_beta(spec.q, d, alpha, code.rate, beta_window[0])
        lo = snr_for_beta(spec.q, d, alpha, code.rate, beta_window[1])
        out.append((float(alpha), efficiency_at_fer(sub, target_fer, (lo, hi), code=code)))
    return out
