"""Reproduction recipes for the published frame-error-rate and efficiency plots.

Each recipe writes one CSV and returns its path. ``frames`` scales the
per-point effort; large frame lengths are opt-in through ``n_values``.
"""

from __future__ import annotations

import inspect
from pathlib import Path

import numpy as np

from ..ldpc import PROFILES
from .engine import (ExperimentSpec, alpha_sweep, d_saturation_study, efficiency_at_fer, fer_sweep,
                     snr_for_beta)
from .records import emit_csv, to_records


def waterfall_grid(q, d, alpha, rate, beta_center=0.88, half_width_db=1.5, step_db=0.5):
    """SNR grid around where the code is expected to cross into low FER."""
    center = snr_for_beta(q, d, alpha, rate, beta_center)
    center = round(center / step_db) * step_db
    k = int(round(half_width_db / step_db))
    return tuple(float(center + i * step_db) for i in range(-k, k + 1))


def search_window(q, d, alpha, rate, betas=(0.75, 0.995)):
    return (snr_for_beta(q, d, alpha, rate, betas[1]), snr_for_beta(q, d, alpha, rate, betas[0]))


def _base(frames, seed, workers, **kw):
    return ExperimentSpec(frames=frames, min_frames=min(frames, 100), seed=seed, workers=workers, **kw)


def fig1(outdir, frames=200, seed=1, workers=None, d_values=(3,), rates=(0.5, 0.6, 0.7), n=1000):
    """GF(32), alpha=8: FER against SNR for three rates (and optionally several d)."""
    records = []
    for rate in rates:
        for d in d_values:
            spec = _base(frames, seed, workers, q=5, rate=rate, n=n, alpha=8.0, d=d,
                         snr_db=waterfall_grid(5, 3, 8.0, rate))
            records += to_records(fer_sweep(spec), q=5, rate=rate, d=d, n=n)
    return emit_csv(records, Path(outdir) / "fig1.csv")


def fig2(outdir, frames=200, seed=1, workers=None, d_values=(3,), qs=(4, 5, 6), n=1000):
    """R=0.7, alpha=8: FER over GF(16), GF(32), GF(64)."""
    records = []
    for q in qs:
        for d in d_values:
            spec = _base(frames, seed, workers, q=q, rate=0.7, n=n, alpha=8.0, d=d,
                         snr_db=waterfall_grid(q, 3, 8.0, 0.7))
            records += to_records(fer_sweep(spec), q=q, rate=0.7, d=d, n=n)
    return emit_csv(records, Path(outdir) / "fig2.csv")


def fig3(outdir, frames=200, seed=1, workers=None, n_values=(1000, 2000, 4000, 10000)):
    """GF(32), R=0.7, alpha=8, d=3: FER per frame length and the efficiency at FER 0.1."""
    records = []
    grid = waterfall_grid(5, 3, 8.0, 0.7, beta_center=0.92, half_width_db=1.5, step_db=0.25)
    for n in n_values:
        spec = _base(frames, seed, workers, q=5, rate=0.7, n=n, alpha=8.0, d=3, snr_db=grid)
        records += to_records(fer_sweep(spec), n=n, kind="sweep")
        thr = efficiency_at_fer(spec, 0.1, search_window(5, 3, 8.0, 0.7))
        records += to_records(thr, n=n, kind="threshold")
    return emit_csv(records, Path(outdir) / "fig3.csv")


def _threshold_curve(outdir, name, frames, seed, workers, qs, rates, n_values, profile_for):
    records = []
    for q in qs:
        for n in n_values:
            for rate in rates:
                profile = profile_for(q)
                spec = _base(frames, seed, workers, q=q, rate=rate, n=n, alpha=8.0, d=3, profile=profile)
                thr = efficiency_at_fer(spec, 0.1, search_window(q, 3, 8.0, rate))
                records += to_records(thr, q=q, n=n, rate=rate, profile=profile)
    return emit_csv(records, Path(outdir) / f"{name}.csv")


def fig4(outdir, frames=200, seed=1, workers=None, qs=(3, 4, 5, 6),
         rates=tuple(np.round(np.arange(0.5, 0.91, 0.05), 2)), n_values=(1000,)):
    """Regular codes, alpha=8, d=3: efficiency at FER 0.1 across rates (one point per rate)."""
    return _threshold_curve(outdir, "fig4", frames, seed, workers, qs, rates, n_values,
                            lambda q: "regular")


def _table_profile(q):
    for name, (pq, _, _) in PROFILES.items():
        if pq == q:
            return name
    return "regular"


def fig5(outdir, frames=200, seed=1, workers=None, qs=(4, 5, 6),
         rates=tuple(np.round(np.arange(0.7, 0.91, 0.05), 2)), n_values=(1000, 10000)):
    """Irregular codes built from the tabulated degree distributions, used at several rates."""
    return _threshold_curve(outdir, "fig5", frames, seed, workers, qs, rates, n_values, _table_profile)


FIG6_ALPHAS = {
    "gf16-r085": (4, 6, 8, 10, 12),
    "gf32-r09": (4, 6, 8, 10, 12),
    "gf64-r09": (6, 10, 14, 18),
}


def fig6(outdir, frames=200, seed=1, workers=None, profiles=tuple(FIG6_ALPHAS), n_values=(10000,),
         max_iterations=50, name="fig6"):
    """Fixed-rate irregular codes with 2^9 bins: efficiency at FER 0.1 against the cutoff."""
    records = []
    for profile in profiles:
        q, rate, _ = PROFILES[profile]
        for n in n_values:
            spec = _base(frames, seed, workers, q=q, rate=rate, n=n, profile=profile,
                         max_iterations=max_iterations)
            for alpha, thr in alpha_sweep(spec, FIG6_ALPHAS[profile], p=9):
                records += to_records(thr, profile=profile, q=q, n=n, alpha=alpha, d=9 - q,
                                      max_iterations=max_iterations)
    return emit_csv(records, Path(outdir) / f"{name}.csv")


def table1(outdir, frames=200, seed=1, workers=None, n_values=(100000,), iterations=(50, 200)):
    """Efficiency at FER 0.1 of the irregular codes under both iteration caps."""
    paths = []
    for it in iterations:
        paths.append(fig6(outdir, frames, seed, workers, n_values=n_values, max_iterations=it,
                          name=f"table1_iter{it}"))
    return paths


def dstudy(outdir, frames=200, seed=1, workers=None, d_values=(1, 2, 3, 4, 5), n=1000, rate=0.7):
    spec = _base(frames, seed, workers, q=5, rate=rate, n=n, alpha=8.0,
                 snr_db=waterfall_grid(5, 3, 8.0, rate, half_width_db=0.5))
    return emit_csv(to_records(d_saturation_study(spec, d_values), rate=rate, n=n),
                    Path(outdir) / "dstudy.csv")


FIGURES = {
    "fig1": fig1,
    "fig2": fig2,
    "fig3": fig3,
    "fig4": fig4,
    "fig5": fig5,
    "fig6": fig6,
    "table1": table1,
    "dstudy": dstudy,
}


def reproduce(figure_id: str, outdir="results", **kwargs):
    try:
        recipe = FIGURES[figure_id]
    except KeyError:
        raise ValueError(f"unknown figure {figure_id!r}; choose from {sorted(FIGURES)}") from None
    accepted = inspect.signature(recipe).parameters
    unknown = [k for k, v in kwargs.items() if v is not None and k not in accepted]
    if unknown:
        raise ValueError(f"{figure_id} does not take {', '.join(unknown)}")
    return recipe(outdir, **{k: v for k, v in kwargs.items() if k in accepted})
