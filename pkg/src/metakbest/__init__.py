"""Adaptive-width K-best MIMO detection with meta-learned width schedules.

Baselines: zero forcing, MMSE, exhaustive ML and fixed-width K-best.
"""

from .detect import (
    DetectorStats, KSchedule, PreprocessedProblem, detect_kbest, detect_linear, detect_ml, preprocess,
)
from .errors import (
    BadCount, BudgetExceeded, ConfigInvalid, DetectionError, DimensionMismatch, EmptySample,
    LengthMismatch, ModelMissing, NonFinite, RankDeficient, Singular,
)
from .modem import Constellation, demodulate_hard, modulate, qam

__version__ = "0.1.0"

__all__ = [
    "BadCount", "BudgetExceeded", "ConfigInvalid", "Constellation", "DetectionError", "DetectorStats",
    "DimensionMismatch", "EmptySample", "KSchedule", "LengthMismatch", "ModelMissing", "NonFinite",
    "PreprocessedProblem", "RankDeficient", "Singular", "demodulate_hard", "detect_kbest", "detect_linear",
    "detect_ml", "modulate", "preprocess", "qam",
]
