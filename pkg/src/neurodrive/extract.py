"""Per-trial feature assembly: reads trial payload files and produces named
feature blocks per modality.

Block sizes: eeg_entropy 91, eeg_deep 4096, ppg_stats 7, ppg_deep 4096,
gsr_stats 8, gsr_deep 4096, face_geometric 90, face_deep 12288.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .dataset import Dataset, TrialRecord
from .eeg import EegTrial, band_power_maps, pairwise_entropy_features, render_topo_image
from .embedding import embed
from .errors import ConfigError, DataError
from .face import face_geometric_trial_features, read_landmarks_csv
from .peripheral import (
    GSR_SPECTRO_FMAX_HZ,
    PPG_SPECTRO_FMAX_HZ,
    PulseTrial,
    gsr_feature_vector,
    ppg_feature_vector,
    spectrogram_image,
)
from .signals import bandpass_filter, read_signal_csv

MODALITIES = ("eeg", "ppg", "gsr", "face")

EEG_BAND_LOW_HZ = 4.0
EEG_BAND_HIGH_HZ = 45.0

# feature blocks each modality contributes to classification
MODALITY_BLOCKS = {
    "eeg": ("eeg_entropy", "eeg_deep"),
    "ppg": ("ppg_stats", "ppg_deep"),
    "gsr": ("gsr_stats", "gsr_deep"),
    "face": ("face_geometric",),
}

# what `extract` writes per modality by default (traditional feature sets;
# deep blocks are added on request)
EXTRACT_DEFAULT_BLOCKS = {
    "eeg": ("eeg_entropy", "eeg_deep"),
    "ppg": ("ppg_stats",),
    "gsr": ("gsr_stats",),
    "face": ("face_geometric",),
}


def load_eeg_trial(dataset: Dataset, trial: TrialRecord) -> EegTrial:
    series = read_signal_csv(dataset.path(trial, "eeg"))
    return EegTrial(bandpass_filter(series, EEG_BAND_LOW_HZ, EEG_BAND_HIGH_HZ))


def eeg_blocks(dataset: Dataset, trial: TrialRecord, backend, wanted) -> dict[str, np.ndarray]:
    eeg = load_eeg_trial(dataset, trial)
    blocks = {}
    if "eeg_entropy" in wanted:
        blocks["eeg_entropy"] = pairwise_entropy_features(eeg).values
    if "eeg_deep" in wanted:
        theta, alpha, beta = band_power_maps(eeg)
        image = render_topo_image(theta, alpha, beta)
        blocks["eeg_deep"] = embed(backend, image.pixels)
    return blocks


def ppg_blocks(dataset: Dataset, trial: TrialRecord, backend, wanted) -> dict[str, np.ndarray]:
    series = read_signal_csv(dataset.path(trial, "ppg"))
    out = ppg_feature_vector(PulseTrial(series))
    blocks = {
        "ppg_stats": out.vector.values,
        "_ppg_meta": np.array([out.heart_rate_bpm, float(out.hrv_available)]),
    }
    if "ppg_deep" in wanted:
        image = spectrogram_image(series, PPG_SPECTRO_FMAX_HZ)
        blocks["ppg_deep"] = embed(backend, image.pixels)
    return blocks


def gsr_blocks(dataset: Dataset, trial: TrialRecord, backend, wanted) -> dict[str, np.ndarray]:
    series = read_signal_csv(dataset.path(trial, "gsr"))
    blocks = {"gsr_stats": gsr_feature_vector(series).values}
    if "gsr_deep" in wanted:
        image = spectrogram_image(series, GSR_SPECTRO_FMAX_HZ)
        blocks["gsr_deep"] = embed(backend, image.pixels)
    return blocks


def face_blocks(dataset: Dataset, trial: TrialRecord, backend, wanted) -> dict[str, np.ndarray]:
    face = read_landmarks_csv(dataset.path(trial, "landmarks"))
    return {"face_geometric": face_geometric_trial_features(face).values}


_BLOCK_FNS = {"eeg": eeg_blocks, "ppg": ppg_blocks, "gsr": gsr_blocks, "face": face_blocks}


def check_modalities(modalities) -> tuple[str, ...]:
    modalities = tuple(modalities)
    unknown = [m for m in modalities if m not in MODALITIES]
    if unknown:
        raise ConfigError(f"unknown modalities {unknown}; choose from {MODALITIES}")
    if not modalities:
        raise ConfigError("at least one modality required")
    return modalities


def worker_count() -> int:
    """Worker cap from NEURODRIVE_THREADS (default 1: fully serial)."""
    raw = os.environ.get("NEURODRIVE_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"NEURODRIVE_THREADS must be an integer, got {raw!r}") from None


def trial_blocks(
    dataset: Dataset, trial: TrialRecord, modalities, backend, wanted=None
) -> dict:
    """Feature blocks for one trial across the requested modalities.

    ``wanted`` limits which blocks are computed (default: every block the
    modality offers); expensive deep blocks are skipped when not asked for.
    """
    blocks: dict[str, np.ndarray] = {}
    for m in check_modalities(modalities):
        want = set(MODALITY_BLOCKS[m]) if wanted is None else set(wanted)
        path = dataset.path(trial, "landmarks" if m == "face" else m)
        if not path.exists():
            raise DataError(f"trial {trial.trial_id}: missing {m} payload {path}")
        blocks.update(_BLOCK_FNS[m](dataset, trial, backend, want))
    return blocks


def collect_feature_matrix(
    dataset: Dataset, trials, modalities, backend
) -> tuple[np.ndarray, list[str]]:
    """(n_trials, D) matrix of concatenated modality blocks, trial order kept.

    Extraction is label-free and per-trial, so computing it once for all
    trials cannot leak fold information.
    """
    modalities = check_modalities(modalities)
    order = [b for m in modalities for b in MODALITY_BLOCKS[m]]

    def one(trial):
        blocks = trial_blocks(dataset, trial, modalities, backend)
        return np.concatenate([blocks[b] for b in order])

    workers = worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, trials))
    else:
        rows = [one(t) for t in trials]
    return np.stack(rows), [t.trial_id for t in trials]


def write_feature_file(path, trial: TrialRecord, modality: str, blocks: dict) -> None:
    payload = {
        "version": 1,
        "trial_id": trial.trial_id,
        "subject_id": trial.subject_id,
        "modality": modality,
        "blocks": [
            {"name": name, "size": int(values.size), "values": values.tolist()}
            for name, values in blocks.items()
            if not name.startswith("_")
        ],
    }
    with open(path, "w") as f:
        json.dump(payload, f, sort_keys=True)
        f.write("\n")


def read_feature_file(path) -> dict[str, np.ndarray]:
    with open(path) as f:
        payload = json.load(f)
    return {b["name"]: np.asarray(b["values"], dtype=np.float64) for b in payload["blocks"]}
