"""Per-interval EEG features for temporal (LSTM) classification.

A trial is cut into consecutive non-overlapping intervals; each interval
yields a topographic image embedding (4096) concatenated with the interval's
91 pairwise-entropy features. PCA (fit on pooled training-split intervals
elsewhere) reduces each row to width 60.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .eeg import EegTrial, band_power_maps, pairwise_entropy_features, render_topo_image
from .embedding import embed
from .errors import DataError, TooShortError
from .face import FaceTrial, geometric_features
from .learn import PcaModel, pca_transform

TREND_WIDTH = 60
SLICE_FEATURE_SIZE = 4096 + 91

# 1/30 s mirrors the incident pipeline's densest setting; 0.25 s gives each
# interval enough samples for a usable periodogram and is the default.
DEFAULT_INCIDENT_INTERVAL_S = 0.25


@dataclass(frozen=True, eq=False)
class TrendSequence:
    """T x 60 timestep features for one trial."""

    trial_id: str
    matrix: np.ndarray
    interval_s: float

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.ndim != 2 or m.shape[1] != TREND_WIDTH:
            raise DataError(f"trend matrix must be (T, {TREND_WIDTH}), got {m.shape}")
        object.__setattr__(self, "matrix", m)


def interval_slices(trial: EegTrial, interval_s: float) -> list[EegTrial]:
    """Consecutive non-overlapping slices of ``interval_s``; the trailing
    remainder shorter than one interval is dropped.

    Boundaries are computed in time so fractional samples-per-interval (for
    example 1/30 s at 128 Hz) still yield floor(duration / interval) slices.
    """
    if interval_s <= 0:
        raise DataError("interval must be positive")
    s = trial.series
    n_slices = int(np.floor(s.duration_s / interval_s + 1e-9))
    if n_slices < 1:
        raise TooShortError(
            f"trial of {s.duration_s:.3f} s is shorter than one {interval_s:.3f} s interval"
        )
    fs = s.sampling_rate_hz
    slices = []
    for k in range(n_slices):
        start = int(np.ceil(k * interval_s * fs - 1e-9))
        stop = int(np.ceil((k + 1) * interval_s * fs - 1e-9))
        slices.append(trial.slice_samples(start, min(stop, s.n_samples)))
    return slices


def slice_features(trial_slice: EegTrial, embedder, bins: int = 16) -> np.ndarray:
    """One interval's 4187 features: topo-image embedding ++ entropy vector.

    The concatenation order is fixed and versioned; permuting it would change
    every downstream PCA input.
    """
    theta, alpha, beta = band_power_maps(trial_slice)
    image = render_topo_image(theta, alpha, beta)
    deep = embed(embedder, image.pixels)
    entropy = pairwise_entropy_features(trial_slice, bins).values
    return np.concatenate([deep, entropy])


def slice_feature_matrix(
    trial: EegTrial, embedder, interval_s: float, bins: int = 16
) -> np.ndarray:
    """(T, 4187) pre-PCA features for every interval of a trial."""
    rows = []
    for idx, tslice in enumerate(interval_slices(trial, interval_s)):
        try:
            rows.append(slice_features(tslice, embedder, bins))
        except DataError as exc:
            raise DataError(f"slice {idx} failed: {exc}") from exc
    return np.stack(rows)


def face_interval_features(trial: FaceTrial, n_intervals: int) -> np.ndarray:
    """(n_intervals, 30) per-interval means of the per-frame geometric features.

    Frames are split into consecutive groups of near-equal size; the trial
    must hold at least one frame per interval.
    """
    if len(trial.frames) < n_intervals:
        raise TooShortError(
            f"{len(trial.frames)} frames cannot fill {n_intervals} intervals"
        )
    per_frame = np.stack([geometric_features(f).values for f in trial.frames])
    groups = np.array_split(per_frame, n_intervals, axis=0)
    return np.stack([g.mean(axis=0) for g in groups])


def trend_sequence(
    trial: EegTrial,
    embedder,
    pca: PcaModel,
    interval_s: float,
    trial_id: str = "",
) -> TrendSequence:
    """Project every interval's features through the fitted PCA -> T x 60."""
    if pca.components.shape[0] != TREND_WIDTH:
        raise DataError(f"PCA model must output width {TREND_WIDTH}")
    matrix = pca_transform(pca, slice_feature_matrix(trial, embedder, interval_s))
    return TrendSequence(trial_id, matrix, interval_s)


def write_sequence_cache(path, seq: TrendSequence) -> None:
    payload = {
        "version": 1,
        "trial_id": seq.trial_id,
        "n_steps": int(seq.matrix.shape[0]),
        "width": TREND_WIDTH,
        "interval_s": seq.interval_s,
        "rows": seq.matrix.ravel().tolist(),
    }
    with open(path, "w") as f:
        json.dump(payload, f, sort_keys=True)
        f.write("\n")


def read_sequence_cache(path) -> TrendSequence:
    with open(path) as f:
        d = json.load(f)
    matrix = np.asarray(d["rows"], dtype=np.float64).reshape(d["n_steps"], d["width"])
    return TrendSequence(d["trial_id"], matrix, float(d["interval_s"]))
