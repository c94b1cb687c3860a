"""neurodrive: multi-modal driver-state feature extraction and classification.

Library layout:

- signals      shared time-series container and DSP primitives
- eeg          entropy features and band-power topographic images
- peripheral   PPG / GSR feature vectors and spectrogram images
- face         landmark-based geometric and deep face features
- embedding    image -> 4096-dim feature backends
- learn        scaler, PCA, ELM and LSTM models
- trends       per-interval EEG sequences for temporal classification
- synth        deterministic synthetic dataset generator
- evaluate     LOSO cross-validation, metrics and statistics
- extract      per-trial modality feature assembly
- cli          command-line front end
"""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    ConfigError,
    DataError,
    DimensionMismatchError,
    EmptyBandError,
    InsufficientPeaksError,
    InvalidBandError,
    PipelineError,
    SingleClassError,
    TooShortError,
    UndefinedMetricError,
)
from .features import FeatureVector  # noqa: F401
from .signals import SampledSeries, Spectrum, SpectrogramMatrix  # noqa: F401
