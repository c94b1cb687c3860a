"""Uniformly sampled time series and the DSP primitives shared by all modalities.

All operations are pure functions of their inputs; a SampledSeries is never
mutated in place.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy import signal as sps

from .errors import (
    DataError,
    EmptyBandError,
    InvalidBandError,
    TooShortError,
)

# Welch settings used for EEG band powers: 2 s Hann windows, 50 % overlap.
WELCH_WINDOW_S = 2.0

# STFT settings used for spectrogram images.
STFT_WINDOW = 128
STFT_HOP = 32
STFT_NFFT = 512
STFT_FLOOR_DB = -80.0


@dataclass(frozen=True, eq=False)
class SampledSeries:
    """Multi-channel signal sampled uniformly at ``sampling_rate_hz``.

    ``data`` is a (n_channels, n_samples) float array; ``labels`` names the
    rows. All channels share one length and must be finite.
    """

    sampling_rate_hz: float
    labels: tuple[str, ...]
    data: np.ndarray

    def __post_init__(self):
        if not self.sampling_rate_hz > 0:
            raise DataError(f"sampling rate must be positive, got {self.sampling_rate_hz}")
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2:
            raise DataError(f"data must be 2-D (channels, samples), got ndim={data.ndim}")
        if len(self.labels) != data.shape[0]:
            raise DataError(f"{len(self.labels)} labels for {data.shape[0]} channels")
        if not np.all(np.isfinite(data)):
            raise DataError("series contains NaN or Inf samples")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "labels", tuple(str(l) for l in self.labels))

    @property
    def n_channels(self) -> int:
        return self.data.shape[0]

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.sampling_rate_hz

    @property
    def single(self) -> np.ndarray:
        """The one channel of a single-channel series."""
        if self.n_channels != 1:
            raise DataError(f"expected single-channel series, got {self.n_channels} channels")
        return self.data[0]

    def channel(self, label: str) -> np.ndarray:
        try:
            return self.data[self.labels.index(label)]
        except ValueError:
            raise DataError(f"no channel labelled {label!r}") from None

    def with_data(self, data: np.ndarray) -> "SampledSeries":
        return SampledSeries(self.sampling_rate_hz, self.labels, data)

    def slice_samples(self, start: int, stop: int) -> "SampledSeries":
        return SampledSeries(self.sampling_rate_hz, self.labels, self.data[:, start:stop].copy())


@dataclass(frozen=True, eq=False)
class Spectrum:
    """One-sided power spectral density (units^2/Hz) on an ascending frequency axis."""

    freqs_hz: np.ndarray
    power: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.freqs_hz, dtype=np.float64)
        p = np.asarray(self.power, dtype=np.float64)
        if f.shape != p.shape or f.ndim != 1:
            raise DataError("freqs and power must be 1-D arrays of equal length")
        if np.any(np.diff(f) <= 0):
            raise DataError("frequency axis must be strictly increasing")
        if np.any(p < 0):
            raise DataError("power must be non-negative")
        object.__setattr__(self, "freqs_hz", f)
        object.__setattr__(self, "power", p)


@dataclass(frozen=True, eq=False)
class SpectrogramMatrix:
    """Log-power STFT matrix; rows are frequencies, columns time frames.

    log_power is in dB relative to the strongest bin, floored at
    ``STFT_FLOOR_DB`` so the range is bounded for colormap mapping.
    """

    time_bins_s: np.ndarray
    freq_bins_hz: np.ndarray
    log_power: np.ndarray

    def __post_init__(self):
        lp = np.asarray(self.log_power, dtype=np.float64)
        if lp.shape != (len(self.freq_bins_hz), len(self.time_bins_s)):
            raise DataError("log_power shape must be (n_freqs, n_times)")
        object.__setattr__(self, "log_power", lp)


def bandpass_filter(series: SampledSeries, low_hz: float, high_hz: float) -> SampledSeries:
    """Zero-phase band-pass: 4th-order Butterworth run forward then backward.

    Raises InvalidBandError unless 0 < low < high < Nyquist, and
    TooShortError when the series cannot support the filtfilt edge padding.
    """
    nyq = series.sampling_rate_hz / 2.0
    if not (0 < low_hz < high_hz < nyq):
        raise InvalidBandError(
            f"band ({low_hz}, {high_hz}) Hz must satisfy 0 < low < high < {nyq} Hz"
        )
    b, a = sps.butter(4, [low_hz, high_hz], btype="band", fs=series.sampling_rate_hz)
    padlen = 3 * max(len(a), len(b))
    if series.n_samples <= padlen:
        raise TooShortError(f"need more than {padlen} samples, got {series.n_samples}")
    filtered = sps.filtfilt(b, a, series.data, axis=1)
    return series.with_data(filtered)


def _odd_window_samples(window_s: float, rate_hz: float) -> int:
    # Nearest odd integer to window_s * rate, minimum 1.
    return max(1, 2 * int(round((window_s * rate_hz - 1) / 2)) + 1)


def moving_average(series: SampledSeries, window_s: float) -> SampledSeries:
    """Centered moving average; edge samples average over the truncated window."""
    if not window_s > 0:
        raise DataError(f"window must be positive, got {window_s}")
    w = _odd_window_samples(window_s, series.sampling_rate_hz)
    n = series.n_samples
    if w > n:
        raise TooShortError(f"window of {w} samples exceeds series length {n}")
    if w == 1:
        return series.with_data(series.data.copy())
    half = w // 2
    out = np.empty_like(series.data)
    for c in range(series.n_channels):
        csum = np.concatenate(([0.0], np.cumsum(series.data[c])))
        idx = np.arange(n)
        lo = np.maximum(idx - half, 0)
        hi = np.minimum(idx + half + 1, n)
        out[c] = (csum[hi] - csum[lo]) / (hi - lo)
    return series.with_data(out)


def minmax_scale(x: np.ndarray) -> tuple[np.ndarray, bool]:
    """Scale a 1-D array to [0, 1]; a constant input maps to zeros.

    Returns (scaled, degenerate) where degenerate flags zero-range input.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        raise DataError("cannot scale an empty array")
    lo, hi = x.min(), x.max()
    if hi == lo:
        return np.zeros_like(x), True
    return (x - lo) / (hi - lo), False


def detect_peaks(x: np.ndarray, min_distance_s: float, sampling_rate_hz: float) -> np.ndarray:
    """Strict local maxima, selected greedily by height with a spacing floor.

    Candidates are interior samples strictly greater than both neighbours.
    They are accepted in order of descending height (ties: earliest index
    first) and rejected when closer than ``min_distance_s`` to an accepted
    peak. Returns a sorted array of sample indices.
    """
    if min_distance_s < 0:
        raise DataError("min distance must be >= 0")
    x = np.asarray(x, dtype=np.float64)
    if x.size < 3:
        return np.array([], dtype=np.intp)
    interior = np.arange(1, x.size - 1)
    cand = interior[(x[1:-1] > x[:-2]) & (x[1:-1] > x[2:])]
    if cand.size == 0:
        return np.array([], dtype=np.intp)
    order = cand[np.lexsort((cand, -x[cand]))]
    min_gap = min_distance_s * sampling_rate_hz
    kept: list[int] = []
    for i in order:
        if all(abs(int(i) - j) >= min_gap for j in kept):
            kept.append(int(i))
    return np.array(sorted(kept), dtype=np.intp)


def welch_psd(series: SampledSeries, window_s: float = WELCH_WINDOW_S) -> Spectrum:
    """Welch PSD of a single-channel series (Hann windows, 50 % overlap)."""
    x = series.single
    nperseg = int(round(window_s * series.sampling_rate_hz))
    if x.size < nperseg:
        raise TooShortError(f"need at least one {nperseg}-sample window, got {x.size}")
    freqs, psd = sps.welch(
        x,
        fs=series.sampling_rate_hz,
        window="hann",
        nperseg=nperseg,
        noverlap=nperseg // 2,
        detrend="constant",
    )
    return Spectrum(freqs, np.maximum(psd, 0.0))


def periodogram_psd(series: SampledSeries, nfft: int = 512) -> Spectrum:
    """Single boxcar periodogram of the mean-removed, zero-padded series.

    Used for slices too short to hold a Welch window; nfft fixes the bin grid.
    """
    x = series.single
    if x.size < 2:
        raise TooShortError("periodogram needs at least 2 samples")
    freqs, psd = sps.periodogram(
        x,
        fs=series.sampling_rate_hz,
        window="boxcar",
        nfft=max(nfft, x.size),
        detrend="constant",
    )
    return Spectrum(freqs, np.maximum(psd, 0.0))


def band_mean_power(spectrum: Spectrum, band: tuple[float, float]) -> float:
    """Mean PSD over bins with low <= f < high (half-open band membership)."""
    low, high = band
    mask = (spectrum.freqs_hz >= low) & (spectrum.freqs_hz < high)
    if not mask.any():
        raise EmptyBandError(f"no spectral bins in [{low}, {high}) Hz")
    return float(spectrum.power[mask].mean())


def welch_band_power(series: SampledSeries, band: tuple[float, float]) -> float:
    """Mean Welch PSD over the half-open band [low, high)."""
    low, high = band
    nyq = series.sampling_rate_hz / 2.0
    if not (0 <= low < high <= nyq):
        raise InvalidBandError(f"band ({low}, {high}) Hz outside (0, {nyq}) Hz")
    return band_mean_power(welch_psd(series), band)


def stft_spectrogram(series: SampledSeries, fmax_hz: float) -> SpectrogramMatrix:
    """Hann-windowed STFT (128-sample window, 32-sample hop, 512-point FFT).

    log_power is magnitude squared in dB relative to the strongest bin,
    floored at -80 dB; rows are cropped to frequencies <= fmax_hz.
    """
    x = series.single
    fs = series.sampling_rate_hz
    if not fmax_hz < fs / 2.0:
        raise InvalidBandError(f"fmax {fmax_hz} Hz must be below Nyquist {fs / 2.0} Hz")
    if x.size < STFT_WINDOW:
        raise TooShortError(f"need at least {STFT_WINDOW} samples, got {x.size}")
    win = sps.get_window("hann", STFT_WINDOW)
    n_frames = 1 + (x.size - STFT_WINDOW) // STFT_HOP
    starts = np.arange(n_frames) * STFT_HOP
    frames = np.stack([x[s : s + STFT_WINDOW] * win for s in starts])
    mag2 = np.abs(np.fft.rfft(frames, n=STFT_NFFT, axis=1)) ** 2

    freqs = np.fft.rfftfreq(STFT_NFFT, 1.0 / fs)
    keep = freqs <= fmax_hz + freqs[1] * 1e-9
    mag2 = mag2[:, keep].T  # rows = freq, cols = time

    peak = mag2.max()
    with np.errstate(divide="ignore"):
        if peak > 0:
            db = 10.0 * np.log10(mag2 / peak)
        else:
            db = np.full_like(mag2, -np.inf)
    db = np.maximum(db, STFT_FLOOR_DB)
    times = (starts + STFT_WINDOW / 2.0) / fs
    return SpectrogramMatrix(times, freqs[keep], db)


def read_signal_csv(path) -> SampledSeries:
    """Load a signal CSV: column ``t_s`` plus one column per channel.

    The sampling rate is inferred from the first two timestamps; every step
    must match it within 1e-6 s.
    """
    df = pd.read_csv(path)
    if df.shape[1] < 2 or df.columns[0] != "t_s":
        raise DataError(f"{path}: first column must be t_s followed by channel columns")
    if len(df) < 2:
        raise DataError(f"{path}: need at least 2 rows to infer the sampling rate")
    t = df["t_s"].to_numpy(dtype=np.float64)
    dt = t[1] - t[0]
    if dt <= 0:
        raise DataError(f"{path}: timestamps must be ascending")
    if np.any(np.abs(np.diff(t) - dt) > 1e-6):
        raise DataError(f"{path}: timestamps not uniform within 1e-6 s")
    labels = tuple(df.columns[1:])
    data = df.iloc[:, 1:].to_numpy(dtype=np.float64).T
    return SampledSeries(1.0 / dt, labels, data)


def write_signal_csv(path, series: SampledSeries) -> None:
    """Write the CSV format read_signal_csv understands (deterministic bytes)."""
    t = np.arange(series.n_samples) / series.sampling_rate_hz
    df = pd.DataFrame({"t_s": t})
    for label, row in zip(series.labels, series.data):
        df[label] = row
    df.to_csv(path, index=False, float_format="%.10g", lineterminator="\n")
