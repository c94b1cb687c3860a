"""PPG and GSR features: heart-rate variability, profile statistics, and
spectrogram images for the embedding backend.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, InsufficientPeaksError, TooShortError
from .features import FeatureVector
from .imaging import apply_colormap, load_colormap, quantize_u8, resize_bilinear
from .signals import SampledSeries, detect_peaks, minmax_scale, moving_average, stft_spectrogram

PPG_RATE_HZ = 51.2
SMOOTH_WINDOW_S = 0.25
PPG_PEAK_MIN_DISTANCE_S = 0.5
GSR_PEAK_MIN_DISTANCE_S = 1.0
HRV_MIN_DURATION_S = 10.0
PNN50_THRESHOLD_S = 0.050

PPG_SPECTRO_FMAX_HZ = 5.0
GSR_SPECTRO_FMAX_HZ = 2.0

STAT_NAMES = ("mean", "std", "mad1_raw", "mad1_std", "mad2_raw", "mad2_std")


@dataclass(frozen=True, eq=False)
class PulseTrial:
    """Single-channel PPG recording; HRV needs at least 10 s of signal."""

    ppg: SampledSeries

    def __post_init__(self):
        _ = self.ppg.single  # must be single-channel

    @property
    def hrv_available(self) -> bool:
        return self.ppg.duration_s >= HRV_MIN_DURATION_S


@dataclass(frozen=True, eq=False)
class RrSequence:
    """Successive inter-beat intervals in seconds."""

    intervals_s: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.intervals_s, dtype=np.float64)
        if np.any(v <= 0):
            raise DataError("RR intervals must be positive")
        object.__setattr__(self, "intervals_s", v)


@dataclass(frozen=True)
class StatSix:
    """Profile statistics of a signal and of its standardized form."""

    mean_raw: float
    std_raw: float
    mean_abs_d1_raw: float
    mean_abs_d1_std: float
    mean_abs_d2_raw: float
    mean_abs_d2_std: float

    def as_array(self) -> np.ndarray:
        return np.array([
            self.mean_raw, self.std_raw,
            self.mean_abs_d1_raw, self.mean_abs_d1_std,
            self.mean_abs_d2_raw, self.mean_abs_d2_std,
        ])


@dataclass(frozen=True)
class PpgFeatures:
    vector: FeatureVector
    heart_rate_bpm: float
    hrv_available: bool


def find_pulse_peaks(trial: PulseTrial) -> np.ndarray:
    """Smooth, scale to [0, 1] and detect beats at least 0.5 s apart."""
    smoothed = moving_average(trial.ppg, SMOOTH_WINDOW_S).single
    scaled, _ = minmax_scale(smoothed)
    return detect_peaks(scaled, PPG_PEAK_MIN_DISTANCE_S, trial.ppg.sampling_rate_hz)


def rr_intervals(trial: PulseTrial) -> RrSequence:
    """Inter-beat intervals from the detected PPG peaks."""
    peaks = find_pulse_peaks(trial)
    if peaks.size < 2:
        raise InsufficientPeaksError(f"need at least 2 peaks, found {peaks.size}")
    return RrSequence(np.diff(peaks) / trial.ppg.sampling_rate_hz)


def heart_rate(peaks: np.ndarray, duration_s: float) -> float:
    """Beats per minute: peak count scaled to a one-minute window."""
    if duration_s <= 0:
        raise DataError("duration must be positive")
    return len(peaks) * 60.0 / duration_s


def pnn50(rr: RrSequence) -> float:
    """Fraction of successive RR differences strictly greater than 50 ms."""
    if rr.intervals_s.size < 2:
        raise DataError("pNN50 needs at least 2 intervals")
    diffs = np.abs(np.diff(rr.intervals_s))
    return float(np.mean(diffs > PNN50_THRESHOLD_S))


def stat_six(x: np.ndarray) -> StatSix:
    """Mean, population std, and mean absolute first/second differences of the
    raw and the standardized signal. Standardized variants are 0 when the
    signal is constant.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size < 3:
        raise TooShortError("stat_six needs at least 3 samples")
    mean = float(x.mean())
    std = float(x.std())
    mad1 = float(np.mean(np.abs(np.diff(x))))
    mad2 = float(np.mean(np.abs(np.diff(x, 2))))
    if std > 0:
        z = (x - mean) / std
        mad1_std = float(np.mean(np.abs(np.diff(z))))
        mad2_std = float(np.mean(np.abs(np.diff(z, 2))))
    else:
        mad1_std = mad2_std = 0.0
    return StatSix(mean, std, mad1, mad1_std, mad2, mad2_std)


def ppg_feature_vector(trial: PulseTrial) -> PpgFeatures:
    """pNN50 plus the six profile statistics of the smoothed PPG (length 7).

    Heart rate travels as metadata, not as a feature. When HRV cannot be
    computed (short trial or too few beats) the pNN50 slot is 0 and the
    result is flagged.
    """
    smoothed = moving_average(trial.ppg, SMOOTH_WINDOW_S).single
    stats = stat_six(smoothed)
    hrv_ok = trial.hrv_available
    hrv = 0.0
    hr = 0.0
    if hrv_ok:
        try:
            rr = rr_intervals(trial)
            hrv = pnn50(rr) if rr.intervals_s.size >= 2 else 0.0
        except (InsufficientPeaksError, DataError):
            hrv_ok = False
    peaks = find_pulse_peaks(trial)
    hr = heart_rate(peaks, trial.ppg.duration_s)
    vector = FeatureVector(
        np.concatenate(([hrv], stats.as_array())), ("pnn50",) + STAT_NAMES
    )
    return PpgFeatures(vector, hr, hrv_ok)


def gsr_feature_vector(series: SampledSeries) -> FeatureVector:
    """Peak count, mean absolute peak height, and the six profile statistics
    of the smoothed GSR signal (length 8). Peaks are at least 1 s apart and
    measured on the smoothed signal in raw units.
    """
    smoothed = moving_average(series, SMOOTH_WINDOW_S).single
    peaks = detect_peaks(smoothed, GSR_PEAK_MIN_DISTANCE_S, series.sampling_rate_hz)
    mean_height = float(np.mean(np.abs(smoothed[peaks]))) if peaks.size else 0.0
    stats = stat_six(smoothed)
    values = np.concatenate(([float(peaks.size), mean_height], stats.as_array()))
    return FeatureVector(values, ("peak_count", "mean_abs_peak_height") + STAT_NAMES)


@dataclass(frozen=True, eq=False)
class SpectroImage:
    """224x224x3 colormapped spectrogram; low frequencies at the bottom row."""

    pixels: np.ndarray
    fmax_hz: float


def spectrogram_image(
    series: SampledSeries,
    fmax_hz: float,
    colormap: np.ndarray | None = None,
) -> SpectroImage:
    """STFT log-power, normalized over the matrix, colormapped and resized.

    The dB matrix is already relative to its peak, so the image is invariant
    to input amplitude scaling for nonzero signals.
    """
    if colormap is None:
        colormap = load_colormap()
    sg = stft_spectrogram(series, fmax_hz)
    lo, hi = sg.log_power.min(), sg.log_power.max()
    norm = np.zeros_like(sg.log_power) if hi == lo else (sg.log_power - lo) / (hi - lo)
    rgb = apply_colormap(norm[::-1], colormap)  # flip: low freq to image bottom
    resized = resize_bilinear(rgb)
    return SpectroImage(quantize_u8(resized / 255.0), fmax_hz)
