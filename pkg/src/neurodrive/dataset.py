"""Dataset model and manifest io.

A manifest is a JSON file listing subjects and trials; trial payload paths
are relative to the manifest's directory.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import DataError

ATTENTION_LABELS = ("low", "high")
INCIDENT_LABELS = ("hazardous", "non-hazardous", "none")
INCIDENT_DURATION_S = 2.0


@dataclass(frozen=True)
class TrialRecord:
    trial_id: str
    subject_id: str
    attention_label: str
    incident_label: str
    duration_s: float
    files: dict

    def __post_init__(self):
        if self.attention_label not in ATTENTION_LABELS:
            raise DataError(f"bad attention label {self.attention_label!r}")
        if self.incident_label not in INCIDENT_LABELS:
            raise DataError(f"bad incident label {self.incident_label!r}")

    @property
    def is_incident(self) -> bool:
        return self.incident_label != "none"


@dataclass(frozen=True, eq=False)
class Dataset:
    root: Path
    subjects: tuple[str, ...]
    trials: tuple[TrialRecord, ...]
    seed: int | None = None
    effect_size: float | None = None

    def __post_init__(self):
        ids = [t.trial_id for t in self.trials]
        if len(set(ids)) != len(ids):
            raise DataError("trial ids must be unique")
        known = set(self.subjects)
        for t in self.trials:
            if t.subject_id not in known:
                raise DataError(f"trial {t.trial_id} references unknown subject {t.subject_id}")
            if t.is_incident and abs(t.duration_s - INCIDENT_DURATION_S) > 1e-9:
                raise DataError(
                    f"incident trial {t.trial_id} must last {INCIDENT_DURATION_S} s, "
                    f"got {t.duration_s}"
                )

    def path(self, trial: TrialRecord, modality: str) -> Path:
        try:
            rel = trial.files[modality]
        except KeyError:
            raise DataError(f"trial {trial.trial_id} has no {modality!r} payload") from None
        return Path(self.root) / rel

    def trial(self, trial_id: str) -> TrialRecord:
        for t in self.trials:
            if t.trial_id == trial_id:
                return t
        raise DataError(f"unknown trial {trial_id!r}")


def write_manifest(path, dataset: Dataset) -> None:
    payload = {
        "version": 1,
        "seed": dataset.seed,
        "effect_size": dataset.effect_size,
        "subjects": list(dataset.subjects),
        "trials": [
            {
                "trial_id": t.trial_id,
                "subject_id": t.subject_id,
                "attention_label": t.attention_label,
                "incident_label": t.incident_label,
                "duration_s": t.duration_s,
                "files": t.files,
            }
            for t in dataset.trials
        ],
    }
    with open(path, "w") as f:
        json.dump(payload, f, sort_keys=True, indent=1)
        f.write("\n")


def load_manifest(path) -> Dataset:
    path = Path(path)
    try:
        with open(path) as f:
            raw = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read manifest {path}: {exc}") from exc
    try:
        trials = tuple(
            TrialRecord(
                trial_id=t["trial_id"],
                subject_id=t["subject_id"],
                attention_label=t["attention_label"],
                incident_label=t["incident_label"],
                duration_s=float(t["duration_s"]),
                files=dict(t["files"]),
            )
            for t in raw["trials"]
        )
        return Dataset(
            root=path.parent,
            subjects=tuple(raw["subjects"]),
            trials=trials,
            seed=raw.get("seed"),
            effect_size=raw.get("effect_size"),
        )
    except KeyError as exc:
        raise DataError(f"manifest {path} missing field {exc}") from exc
