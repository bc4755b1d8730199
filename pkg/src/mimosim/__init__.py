"""Link-level MIMO-OFDM simulator with LS/MMSE/PCA channel estimation."""

from .config import SimConfig, presets, resolve
from .numerics import OpCount
from .report import complexity_report, emit_results
from .sweep import BerRecord, run_sweep, theoretical_overlay

__version__ = "0.1.0"

__all__ = [
    "BerRecord",
    "OpCount",
    "SimConfig",
    "complexity_report",
    "emit_results",
    "presets",
    "resolve",
    "run_sweep",
    "theoretical_overlay",
    "__version__",
]
