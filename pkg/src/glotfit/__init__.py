"""Glottal source + pole-zero vocal-tract modelling toolkit.

The package splits along the processing chain: LF glottal-source
synthesis (lf), vocal-tract ARMAX fitting and resonance mapping (tract),
GCI detection / inverse filtering / feature windows (frontend), the
from-scratch window regressor (nn), synthetic corpora (corpus), the
two-stage estimator with baseline and metrics (pipeline), and WAV plus
CLI plumbing (wavio, cli).
"""

__version__ = "0.1.0"

from .errors import (DegenerateGrid, DegenerateSignal, Diverged,
                     EstimationFailed, FormatError, GlotfitError,
                     InvalidParams, LengthMismatch, NoRoot, NoVoicedRegion,
                     NyquistViolation, OrderTooLarge, SingularNormalEquations,
                     UnstableFilterWarning, ZeroTruth)
from .kernels import BACKEND as KERNEL_BACKEND
from .waveform import Waveform
from .lf import (LFParams, LFDirect, solve_direct, generate_cycle,
                 generate_periodic, generate_train)
from .tract import (ArmaxModel, FitDiagnostics, ResonanceSet, arma_filter,
                    fit_armax, poles_zeros, resonance_to_model, resonances)
from .frontend import (FeatureWindow, GciTrack, detect_gci, iaif,
                       make_windows)
from .nn import (LFLabel, MlpModel, TrainConfig, clamp_outputs, forward,
                 init_model, load_model, loss, predict_lf, save_model, train)
from .corpus import (CorpusSpec, GroundTruth, SyllableSpec, TABLE2,
                     build_corpus, fixed_lf, load_external, load_manifest,
                     draw_lf, syllable_spec, synth_utterance,
                     truth_from_record, write_corpus)
from .pipeline import (EstimationResult, GridSpec, WindowEstimate, aer,
                       estimate, excitation_track, grid_abs_baseline,
                       match_resonances, mse_pair, resynthesize,
                       windows_and_labels, ErrorAccumulator)
from .wavio import read_wav, write_wav

__all__ = [
    "__version__",
    "KERNEL_BACKEND",
    "Waveform",
    "LFParams", "LFDirect", "solve_direct",
    "generate_cycle", "generate_periodic", "generate_train",
    "ArmaxModel", "FitDiagnostics", "ResonanceSet",
    "arma_filter", "fit_armax", "poles_zeros",
    "resonance_to_model", "resonances",
    "FeatureWindow", "GciTrack", "detect_gci", "iaif", "make_windows",
    "LFLabel", "MlpModel", "TrainConfig", "clamp_outputs", "forward",
    "init_model", "load_model", "loss", "predict_lf", "save_model", "train",
    "CorpusSpec", "GroundTruth", "SyllableSpec", "TABLE2",
    "build_corpus", "fixed_lf", "draw_lf", "load_external", "load_manifest",
    "syllable_spec", "synth_utterance", "truth_from_record", "write_corpus",
    "EstimationResult", "GridSpec", "WindowEstimate", "ErrorAccumulator",
    "aer", "estimate", "excitation_track", "grid_abs_baseline",
    "match_resonances", "mse_pair", "resynthesize", "windows_and_labels",
    "read_wav", "write_wav",
    "GlotfitError", "InvalidParams", "NoRoot", "DegenerateGrid",
    "SingularNormalEquations", "OrderTooLarge", "NyquistViolation",
    "NoVoicedRegion", "DegenerateSignal", "Diverged", "EstimationFailed",
    "ZeroTruth", "LengthMismatch", "FormatError", "UnstableFilterWarning",
]
