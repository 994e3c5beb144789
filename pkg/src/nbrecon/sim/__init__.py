"""Experiment engine and command line front end."""

from .engine import (ExperimentSpec, FrameRunner, StudyRow, SweepPoint, SweepResult, ThresholdResult,
                     alpha_sweep, d_saturation_study, efficiency_at_fer, fer_sweep, snr_for_beta,
                     wilson_interval)
from .figures import FIGURES, reproduce
from .records import emit_csv, load_config, parse_config, read_csv, to_records

__all__ = [
    "ExperimentSpec", "FrameRunner", "StudyRow", "SweepPoint", "SweepResult", "ThresholdResult",
    "alpha_sweep", "d_saturation_study", "efficiency_at_fer", "fer_sweep", "snr_for_beta",
    "wilson_interval", "FIGURES", "reproduce", "emit_csv", "load_config", "parse_config",
    "read_csv", "to_records",
]
