"""Geometric features from 49 precomputed face landmarks, per-frame deep
features, and trial-level aggregation.

Landmark detection happens offline; this module only consumes landmark CSVs
(and optional face crops for the deep path).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .errors import DataError
from .features import FeatureVector
from .imaging import _asset_path

N_LANDMARKS = 49
GEOMETRIC_SIZE = 30

# Indices of the upper and lower eyelid landmarks in the 49-point convention
# (see the feature-table asset); the synthetic generator nudges these.
LEFT_EYE_TOP, LEFT_EYE_BOTTOM = (20, 21), (23, 24)
RIGHT_EYE_TOP, RIGHT_EYE_BOTTOM = (26, 27), (29, 30)


@dataclass(frozen=True, eq=False)
class LandmarkFrame:
    """49 (x, y) landmark pixels plus the detected face box for one frame."""

    frame_index: int
    points: np.ndarray
    face_box: tuple[float, float, float, float]

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.shape != (N_LANDMARKS, 2):
            raise DataError(f"expected ({N_LANDMARKS}, 2) points, got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise DataError("landmark points must be finite")
        x, y, w, h = self.face_box
        if w <= 0 or h <= 0:
            raise DataError(f"face box must have positive area, got w={w}, h={h}")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "face_box", (float(x), float(y), float(w), float(h)))


@dataclass(frozen=True, eq=False)
class FaceTrial:
    """Ordered landmark frames; face crops are optional (deep path only)."""

    frames: tuple[LandmarkFrame, ...]
    face_images: tuple[np.ndarray, ...] | None = None

    def __post_init__(self):
        if len(self.frames) < 1:
            raise DataError("a face trial needs at least one frame")
        idx = [f.frame_index for f in self.frames]
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise DataError("frame indices must be strictly increasing")
        object.__setattr__(self, "frames", tuple(self.frames))


class FeatureTable:
    """The fixed 20-distance / 10-angle landmark feature definition."""

    def __init__(self, spec: dict):
        self.version = spec["version"]
        self.distances = spec["distances"]
        self.angles = spec["angles"]
        if len(self.distances) + len(self.angles) != GEOMETRIC_SIZE:
            raise DataError("feature table must define exactly 30 features")
        self.names = tuple(
            [d["name"] for d in self.distances] + [a["name"] for a in self.angles]
        )

    @classmethod
    def bundled(cls) -> "FeatureTable":
        with open(_asset_path("face_feature_table_v1.json")) as f:
            return cls(json.load(f))


_BUNDLED_TABLE: FeatureTable | None = None


def _table(table: FeatureTable | None) -> FeatureTable:
    global _BUNDLED_TABLE
    if table is not None:
        return table
    if _BUNDLED_TABLE is None:
        _BUNDLED_TABLE = FeatureTable.bundled()
    return _BUNDLED_TABLE


def _centroid(points: np.ndarray, idx: list[int]) -> np.ndarray:
    return points[idx].mean(axis=0)


def geometric_features(frame: LandmarkFrame, table: FeatureTable | None = None) -> FeatureVector:
    """30 features: 20 landmark distances over the face diagonal, 10 segment
    angles in radians.
    """
    table = _table(table)
    pts = frame.points
    _, _, w, h = frame.face_box
    if w <= 0 or h <= 0:
        raise DataError("face box must have positive area")
    diag = np.sqrt(w * w + h * h)
    values = np.empty(GEOMETRIC_SIZE)
    for k, d in enumerate(table.distances):
        delta = _centroid(pts, d["a"]) - _centroid(pts, d["b"])
        values[k] = np.hypot(delta[0], delta[1]) / diag
    for k, a in enumerate(table.angles):
        u = _centroid(pts, a["seg1"][1]) - _centroid(pts, a["seg1"][0])
        v = _centroid(pts, a["seg2"][1]) - _centroid(pts, a["seg2"][0])
        nu, nv = np.hypot(*u), np.hypot(*v)
        if nu == 0 or nv == 0:
            raise DataError(f"degenerate segment in angle feature {a['name']!r}")
        cos = np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0)
        values[len(table.distances) + k] = np.arccos(cos)
    return FeatureVector(values, table.names)


def aggregate_trial(per_frame: np.ndarray) -> FeatureVector:
    """Stack per-frame features into [means, 95th percentiles, stds].

    p95 interpolates linearly between order statistics; std is the
    population (1/N) standard deviation.
    """
    m = np.asarray(per_frame, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] < 1:
        raise DataError("need a non-empty (frames, features) matrix")
    return FeatureVector(
        np.concatenate([
            m.mean(axis=0),
            np.percentile(m, 95, axis=0, method="linear"),
            m.std(axis=0),
        ])
    )


def face_geometric_trial_features(
    trial: FaceTrial, table: FeatureTable | None = None
) -> FeatureVector:
    """Per-frame geometric features aggregated over the trial (length 90)."""
    table = _table(table)
    per_frame = np.stack([geometric_features(f, table).values for f in trial.frames])
    agg = aggregate_trial(per_frame)
    names = tuple(
        f"{stat}_{name}" for stat in ("mean", "p95", "std") for name in table.names
    )
    return FeatureVector(agg.values, names)


def face_deep_trial_features(trial: FaceTrial, embedder) -> FeatureVector:
    """Per-frame 4096-dim embeddings aggregated over the trial (length 12288)."""
    if trial.face_images is None:
        raise DataError("trial has no face images; deep features need crops")
    from .embedding import embed, prepare_image

    per_frame = np.stack(
        [embed(embedder, prepare_image(img)) for img in trial.face_images]
    )
    return aggregate_trial(per_frame)


def read_landmarks_csv(path) -> FaceTrial:
    """Load a landmarks CSV: frame,box_x,box_y,box_w,box_h,x1,y1,...,x49,y49."""
    df = pd.read_csv(path)
    expected = landmark_csv_columns()
    if list(df.columns) != expected:
        raise DataError(f"{path}: expected columns {expected[:6]}..._x49,y49")
    frames = []
    for row in df.itertuples(index=False):
        vals = np.asarray(row, dtype=np.float64)
        frames.append(
            LandmarkFrame(
                frame_index=int(vals[0]),
                points=vals[5:].reshape(N_LANDMARKS, 2),
                face_box=tuple(vals[1:5]),
            )
        )
    return FaceTrial(tuple(frames))


def write_landmarks_csv(path, trial: FaceTrial) -> None:
    rows = []
    for f in trial.frames:
        rows.append(
            [f.frame_index, *f.face_box, *f.points.ravel()]
        )
    df = pd.DataFrame(rows, columns=landmark_csv_columns())
    df["frame"] = df["frame"].astype(int)
    df.to_csv(path, index=False, float_format="%.10g", lineterminator="\n")


def landmark_csv_columns() -> list[str]:
    cols = ["frame", "box_x", "box_y", "box_w", "box_h"]
    for i in range(1, N_LANDMARKS + 1):
        cols += [f"x{i}", f"y{i}"]
    return cols
