"""Heart/lung source separation with feature-based interpretation.

Pipeline: STFT -> KL-divergence NMF -> component grouping -> soft-mask
reconstruction -> feature extraction -> diagnostic-term mapping via a
pluggable backend (offline deterministic mock, or a remote endpoint).
"""

from .audio_io import Signal, read_wav, write_wav
from .errors import (
    BackendUnreachableError,
    BiosepError,
    CorruptHeaderError,
    EmptyInputError,
    EmptySignalError,
    InvalidConfigError,
    InvalidParamsError,
    SampleRateMismatchError,
    ShapeMismatchError,
    UnsupportedFormatError,
    ZeroEnergyError,
)
from .features import (
    NUMERIC_FIELDS,
    FeatureVector,
    detect_peaks,
    envelope,
    extract_features,
    periodicity,
    rr_cv,
    spectral_centroid,
)
from .interpret import (
    DEFAULT_TERMS,
    DiagnosticReport,
    LabelSet,
    MockBackend,
    MockRuleConfig,
    Prompt,
    RemoteBackend,
    format_prompt,
    interpret,
    match_term,
    mock_rules,
    parse_score_list,
)
from .nmf import NmfConfig, NmfModel, factorize, init_factors, kl_divergence, mu_step
from .separation import (
    ComponentGroup,
    GroupingConfig,
    SeparatedSources,
    group_components,
    separate,
    soft_mask,
)
from .synth import (
    HeartParams,
    LungParams,
    gain_for_snr_db,
    heart_beat_times,
    mix,
    synth_heart,
    synth_lung,
)
from .timefreq import (
    ComplexSpectrogram,
    Spectrogram,
    StftConfig,
    cola_deviation,
    hann_window,
    istft,
    magnitude,
    stft,
)

__version__ = "0.1.0"

__all__ = [
    "Signal", "read_wav", "write_wav",
    "StftConfig", "ComplexSpectrogram", "Spectrogram", "stft", "magnitude",
    "istft", "cola_deviation", "hann_window",
    "NmfConfig", "NmfModel", "init_factors", "kl_divergence", "mu_step", "factorize",
    "ComponentGroup", "GroupingConfig", "SeparatedSources",
    "group_components", "soft_mask", "separate",
    "NUMERIC_FIELDS", "FeatureVector", "spectral_centroid", "envelope",
    "periodicity", "detect_peaks", "rr_cv", "extract_features",
    "DEFAULT_TERMS", "LabelSet", "Prompt", "DiagnosticReport",
    "MockBackend", "MockRuleConfig", "RemoteBackend", "format_prompt",
    "interpret", "mock_rules", "match_term", "parse_score_list",
    "HeartParams", "LungParams", "heart_beat_times", "synth_heart",
    "synth_lung", "mix", "gain_for_snr_db",
    "BiosepError", "UnsupportedFormatError", "CorruptHeaderError",
    "EmptySignalError", "InvalidConfigError", "ShapeMismatchError",
    "EmptyInputError", "ZeroEnergyError", "InvalidParamsError",
    "SampleRateMismatchError", "BackendUnreachableError",
]
