"""Fast short-time Root-MUSIC: FFT Hankel products, Lanczos subspaces, companion rooting, tracking."""
from .config import ConfigError, PipelineConfig, load_config
from .diagnosis import FaultSignature, harmonic_ratios, match_fault, severity_indicator
from .errors import FstrmError, NoSignalEnergy, NumericalFailure, ValidationError
from .hankel import HankelOperator, make_hankel
from .pipeline import FrameReport, analyze_frame, bench, emit_report, run_pipeline
from .rooting import FrequencyEstimate, companion_roots, music_polynomial, roots_to_frequencies
from .signals import Frame, SignalSpec, SinusoidSpec, generate, profile_spec
from .subspace import LanczosConfig, decompose, lanczos_bidiag, select_order
from .tracking import Tracker, TrackingConfig

__version__ = "0.1.0"
__all__ = [
    "ConfigError", "PipelineConfig", "load_config", "FaultSignature", "harmonic_ratios",
    "match_fault", "severity_indicator", "FstrmError", "NoSignalEnergy", "NumericalFailure",
    "ValidationError", "HankelOperator", "make_hankel", "FrameReport", "analyze_frame", "bench",
    "emit_report", "run_pipeline", "FrequencyEstimate", "companion_roots", "music_polynomial",
    "roots_to_frequencies", "Frame", "SignalSpec", "SinusoidSpec", "generate", "profile_spec",
    "LanczosConfig", "decompose", "lanczos_bidiag", "select_order", "Tracker", "TrackingConfig",
]
