"""EEG feature extraction: pairwise conditional-entropy features and
band-power topographic RGB images.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import DataError, TooShortError
from .features import FeatureVector
from .imaging import IMAGE_SIDE, _asset_path, disc_mask, idw_grid, quantize_u8, zoom_bicubic
from .signals import SampledSeries, periodogram_psd, welch_psd, band_mean_power

CANONICAL_CHANNELS = (
    "AF3", "AF4", "F3", "F4", "F7", "F8", "FC5", "FC6",
    "T7", "T8", "P7", "P8", "O1", "O2",
)

BANDS = {"theta": (4.0, 7.0), "alpha": (7.0, 13.0), "beta": (13.0, 30.0)}

DEFAULT_MI_BINS = 16

# Channels the pairwise feature layout iterates over: i < j in canonical order.
CHANNEL_PAIRS = tuple(combinations(range(len(CANONICAL_CHANNELS)), 2))

FRONTAL_CHANNELS = ("AF3", "AF4", "F3", "F4", "F7", "F8")


@dataclass(frozen=True, eq=False)
class EegTrial:
    """A 14-channel EEG recording with channels in canonical order."""

    series: SampledSeries

    def __post_init__(self):
        s = self.series
        if sorted(s.labels) != sorted(CANONICAL_CHANNELS):
            raise DataError(
                f"EEG trial channels must be a permutation of the canonical 14, got {s.labels}"
            )
        if s.labels != CANONICAL_CHANNELS:
            order = [s.labels.index(ch) for ch in CANONICAL_CHANNELS]
            s = SampledSeries(s.sampling_rate_hz, CANONICAL_CHANNELS, s.data[order])
        object.__setattr__(self, "series", s)

    @property
    def data(self) -> np.ndarray:
        return self.series.data

    def slice_samples(self, start: int, stop: int) -> "EegTrial":
        return EegTrial(self.series.slice_samples(start, stop))


@dataclass(frozen=True, eq=False)
class BandPowerMap:
    """Per-channel mean PSD (units^2/Hz) for one EEG band."""

    band: str
    power_per_channel: np.ndarray

    def __post_init__(self):
        if self.band not in BANDS:
            raise DataError(f"unknown band {self.band!r}")
        p = np.asarray(self.power_per_channel, dtype=np.float64)
        if p.shape != (len(CANONICAL_CHANNELS),):
            raise DataError(f"expected {len(CANONICAL_CHANNELS)} powers, got shape {p.shape}")
        if np.any(p < 0):
            raise DataError("band power must be non-negative")
        object.__setattr__(self, "power_per_channel", p)


@dataclass(frozen=True, eq=False)
class TopoImage:
    """224x224x3 scalp image; black outside the inscribed disc."""

    pixels: np.ndarray
    band_maxima: tuple[float, float, float]
    degenerate: bool = False


class ElectrodeLayout:
    """2-D electrode positions in unit-disc coordinates (+y toward nose)."""

    def __init__(self, coords: dict[str, tuple[float, float]]):
        missing = set(CANONICAL_CHANNELS) - set(coords)
        if missing:
            raise DataError(f"layout missing channels: {sorted(missing)}")
        pts = np.array([coords[ch] for ch in CANONICAL_CHANNELS], dtype=np.float64)
        if np.any(np.hypot(pts[:, 0], pts[:, 1]) >= 1.0):
            raise DataError("all electrode positions must lie strictly inside the unit disc")
        self.points = pts

    @classmethod
    def bundled(cls) -> "ElectrodeLayout":
        with open(_asset_path("electrode_layout_v1.json")) as f:
            raw = json.load(f)
        return cls({ch: tuple(xy) for ch, xy in raw["channels"].items()})


def _bin_indices(x: np.ndarray, bins: int) -> tuple[np.ndarray, int]:
    """Equal-width bin index per sample over [min, max]; constant -> one bin."""
    lo, hi = x.min(), x.max()
    if hi == lo:
        return np.zeros(x.size, dtype=np.intp), 1
    idx = np.minimum((((x - lo) / (hi - lo)) * bins).astype(np.intp), bins - 1)
    return idx, bins


def _joint_counts(x: np.ndarray, y: np.ndarray, bins: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.size != y.size:
        raise DataError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < 2:
        raise DataError("need at least 2 samples")
    if bins < 2:
        raise DataError("need at least 2 bins")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise DataError("inputs must be finite")
    ix, nx = _bin_indices(x, bins)
    iy, ny = _bin_indices(y, bins)
    return np.bincount(ix * ny + iy, minlength=nx * ny).reshape(nx, ny)


def mutual_information_from_counts(counts: np.ndarray) -> float:
    """Plug-in mutual information (bits) of a joint count table."""
    n = counts.sum()
    p = counts / n
    px = p.sum(axis=1, keepdims=True)
    py = p.sum(axis=0, keepdims=True)
    nz = p > 0
    mi = float(np.sum(p[nz] * np.log2(p[nz] / (px @ py)[nz])))
    return max(mi, 0.0)


def entropy_from_counts(counts_1d: np.ndarray) -> float:
    """Plug-in entropy (bits) of a marginal count vector."""
    p = counts_1d / counts_1d.sum()
    nz = p > 0
    return float(-np.sum(p[nz] * np.log2(p[nz])))


def mutual_information(x: np.ndarray, y: np.ndarray, bins: int = DEFAULT_MI_BINS) -> float:
    """Histogram mutual information I(X;Y) in bits.

    Each variable is discretised into ``bins`` equal-width bins over its own
    range; a constant variable collapses to a single bin (MI = 0).
    """
    return mutual_information_from_counts(_joint_counts(x, y, bins))


def conditional_entropy(x: np.ndarray, y: np.ndarray, bins: int = DEFAULT_MI_BINS) -> float:
    """H(Y|X) = H(Y) - I(X;Y) in bits, clamped to be non-negative."""
    counts = _joint_counts(x, y, bins)
    h_y = entropy_from_counts(counts.sum(axis=0))
    return max(h_y - mutual_information_from_counts(counts), 0.0)


def pairwise_entropy_features(trial: EegTrial, bins: int = DEFAULT_MI_BINS) -> FeatureVector:
    """Conditional entropy for the 91 channel pairs, lexicographic pair order."""
    data = trial.data
    values = np.empty(len(CHANNEL_PAIRS))
    names = []
    for k, (i, j) in enumerate(CHANNEL_PAIRS):
        try:
            values[k] = conditional_entropy(data[i], data[j], bins)
        except DataError as exc:
            pair = f"{CANONICAL_CHANNELS[i]}-{CANONICAL_CHANNELS[j]}"
            raise DataError(f"entropy feature failed for pair {pair}: {exc}") from exc
        names.append(f"ce_{CANONICAL_CHANNELS[i]}_{CANONICAL_CHANNELS[j]}")
    return FeatureVector(values, tuple(names))


def band_power_maps(
    trial: EegTrial, use_welch: bool | None = None
) -> tuple[BandPowerMap, BandPowerMap, BandPowerMap]:
    """Theta/alpha/beta mean band power per channel, averaged over the trial.

    Welch PSD when the trial holds at least one 2 s window; shorter slices
    (the trend pipeline) fall back to a single zero-padded periodogram.
    """
    s = trial.series
    nperseg = int(round(2.0 * s.sampling_rate_hz))
    if use_welch is None:
        use_welch = s.n_samples >= nperseg
    if use_welch and s.n_samples < nperseg:
        raise TooShortError(f"trial of {s.n_samples} samples is shorter than one Welch window")
    maps = []
    for band_name, band in BANDS.items():
        powers = np.empty(len(CANONICAL_CHANNELS))
        for c in range(len(CANONICAL_CHANNELS)):
            ch = SampledSeries(s.sampling_rate_hz, ("x",), s.data[c : c + 1])
            spec = welch_psd(ch) if use_welch else periodogram_psd(ch)
            powers[c] = band_mean_power(spec, band)
        maps.append(BandPowerMap(band_name, powers))
    return tuple(maps)


def render_topo_image(
    theta: BandPowerMap,
    alpha: BandPowerMap,
    beta: BandPowerMap,
    layout: ElectrodeLayout | None = None,
) -> TopoImage:
    """Render the three band maps as one RGB scalp image.

    Per band: IDW interpolation onto a 32x32 grid, bicubic upsample to
    224x224, clamp to [0, 1]. The three maps share a single normaliser (the
    largest value across all of them) so their relative weighting survives;
    normalising the raw values first keeps the image exactly invariant when
    one constant rescales all three maps. theta->red, alpha->green,
    beta->blue; pixels outside the inscribed disc are black.
    """
    if layout is None:
        layout = ElectrodeLayout.bundled()
    stack = np.stack(
        [theta.power_per_channel, alpha.power_per_channel, beta.power_per_channel]
    )
    band_maxima = tuple(float(m) for m in stack.max(axis=1))
    global_max = stack.max()
    degenerate = global_max <= 0.0
    if not degenerate:
        stack = stack / global_max
    img = np.zeros((IMAGE_SIDE, IMAGE_SIDE, 3))
    for plane in range(3):
        grid = idw_grid(layout.points, stack[plane])
        img[:, :, plane] = np.clip(zoom_bicubic(grid), 0.0, None)
    pixels = quantize_u8(img)
    pixels[~disc_mask()] = 0
    return TopoImage(pixels, band_maxima, degenerate)


def electrode_pixel(layout: ElectrodeLayout, channel: str) -> tuple[float, float]:
    """(row, col) pixel position of an electrode in the rendered 224x224 image."""
    x, y = layout.points[CANONICAL_CHANNELS.index(channel)]
    col = (x + 1.0) / 2.0 * IMAGE_SIDE - 0.5
    row = (1.0 - y) / 2.0 * IMAGE_SIDE - 0.5
    return row, col


def amplitude_artifact_fraction(trial: EegTrial, threshold: float = 100.0) -> np.ndarray:
    """Fraction of samples per channel exceeding ``threshold`` in magnitude.

    Stand-in for an external artifact-removal stage: callers can flag or drop
    trials whose fractions are high.
    """
    return (np.abs(trial.data) > threshold).mean(axis=1)
