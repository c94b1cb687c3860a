"""Deterministic synthetic dataset generator.

Signals carry class-dependent structure so the end-to-end pipeline has
something to find:

- EEG: pink noise per channel; the attention label adds a 20 Hz (beta) tone
  on the frontal channels, the incident label a 6 Hz (theta) tone on the
  posterior channels. Tone amplitude is the effect size, so effect 0 makes
  the class-conditional distributions identical by construction.
- PPG: a beat train whose inter-beat jitter grows with the positive class.
- GSR: slow drift plus class-dependent numbers of SCR bumps.
- Face: a neutral 49-landmark template with a class-dependent eye-openness
  offset and per-frame wobble.

Everything derives from one seed through spawned generators, so repeated
runs produce byte-identical files.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import Dataset, TrialRecord, write_manifest
from .errors import ConfigError
from .eeg import CANONICAL_CHANNELS, FRONTAL_CHANNELS
from .face import FaceTrial, LandmarkFrame, write_landmarks_csv
from .signals import SampledSeries, write_signal_csv

EEG_RATE_HZ = 128.0
PERIPHERAL_RATE_HZ = 51.2
POSTERIOR_CHANNELS = ("P7", "P8", "O1", "O2")


@dataclass(frozen=True)
class SynthConfig:
    n_subjects: int = 12
    trials_per_subject: int = 35
    effect_size: float = 1.0
    seed: int = 0
    face_fps: float = 10.0
    attention_duration_range: tuple[float, float] = (10.0, 14.0)
    incident_duration_s: float = 2.0

    @property
    def n_incident(self) -> int:
        n = round(self.trials_per_subject * 10 / 35)
        return min(max(n, 2), self.trials_per_subject - 2)

    @property
    def n_hazardous(self) -> int:
        return max(1, round(self.n_incident * 0.4))

    @property
    def n_high_attention(self) -> int:
        # mirrors the 15-of-35 high-attention share, applied to the
        # long (non-incident) trials so every subject has both classes
        n_long = self.trials_per_subject - self.n_incident
        return min(max(1, round(n_long * 15 / 35)), n_long - 1)


def pink_noise(rng: np.random.Generator, n: int) -> np.ndarray:
    """Unit-variance 1/f-shaped noise."""
    white = rng.standard_normal(n)
    spec = np.fft.rfft(white)
    f = np.fft.rfftfreq(n)
    f[0] = f[1]
    spec /= np.sqrt(f)
    x = np.fft.irfft(spec, n)
    return x / x.std()


def neutral_landmarks() -> np.ndarray:
    """Neutral 49-point template in a 200x200 face box at (100, 100)."""
    pts = np.zeros((49, 2))
    pts[0:5] = [(125, 152), (136, 148), (147.5, 146), (159, 148), (170, 150)]
    pts[5:10] = [(230, 150), (241, 148), (252.5, 146), (264, 148), (275, 152)]
    pts[10:14] = [(200, 170), (200, 182), (200, 194), (200, 206)]
    pts[14:19] = [(180, 215), (190, 217), (200, 218), (210, 217), (220, 215)]
    pts[19:25] = [(130, 175), (142, 170), (156, 170), (168, 175), (156, 180), (142, 180)]
    pts[25:31] = [(270, 175), (258, 170), (244, 170), (232, 175), (244, 180), (258, 180)]
    pts[31:43] = [
        (160, 245), (172, 238), (185, 234), (200, 232), (215, 234), (228, 238),
        (240, 245), (228, 252), (215, 256), (200, 258), (185, 256), (172, 252),
    ]
    pts[43:49] = [(170, 245), (185, 242), (215, 242), (230, 245), (215, 248), (185, 248)]
    return pts


EYE_TOP_POINTS = (20, 21, 26, 27)
EYE_BOTTOM_POINTS = (23, 24, 29, 30)


def _synth_eeg(rng, duration_s, effect, attention_high, incident_label, subject_gain):
    n = int(round(duration_s * EEG_RATE_HZ))
    t = np.arange(n) / EEG_RATE_HZ
    data = np.empty((len(CANONICAL_CHANNELS), n))
    beta_amp = effect if attention_high else 0.0
    theta_amp = effect if incident_label == "hazardous" else 0.0
    beta_phase = rng.uniform(0, 2 * np.pi)
    theta_phase = rng.uniform(0, 2 * np.pi)
    beta = beta_amp * np.sin(2 * np.pi * 20.0 * t + beta_phase)
    theta = theta_amp * np.sin(2 * np.pi * 6.0 * t + theta_phase)
    for c, ch in enumerate(CANONICAL_CHANNELS):
        x = pink_noise(rng, n)
        if ch in FRONTAL_CHANNELS:
            x = x + beta
        if ch in POSTERIOR_CHANNELS:
            x = x + theta
        data[c] = subject_gain * x
    return SampledSeries(EEG_RATE_HZ, CANONICAL_CHANNELS, data)


def _synth_ppg(rng, duration_s, effect, positive):
    n = int(round(duration_s * PERIPHERAL_RATE_HZ))
    t = np.arange(n) / PERIPHERAL_RATE_HZ
    base_interval = 60.0 / rng.uniform(65.0, 80.0)
    jitter = 0.01 + (0.06 * effect if positive else 0.0)
    x = 0.02 * rng.standard_normal(n)
    beat = base_interval / 2.0
    while beat < duration_s:
        height = rng.uniform(0.9, 1.1)
        x += height * np.exp(-((t - beat) ** 2) / (2 * 0.05**2))
        beat += max(0.55, base_interval + jitter * rng.standard_normal())
    return SampledSeries(PERIPHERAL_RATE_HZ, ("ppg",), x[None, :])


def _synth_gsr(rng, duration_s, effect, positive):
    n = int(round(duration_s * PERIPHERAL_RATE_HZ))
    t = np.arange(n) / PERIPHERAL_RATE_HZ
    drift = np.cumsum(0.002 * rng.standard_normal(n))
    x = 2.0 + drift - drift.mean() + 0.01 * rng.standard_normal(n)
    rate_per_10s = 1.0 + (2.0 * effect if positive else 0.0)
    n_bumps = rng.poisson(rate_per_10s * duration_s / 10.0)
    for _ in range(n_bumps):
        onset = rng.uniform(0.0, max(duration_s - 2.0, 0.1))
        amp = rng.uniform(0.2, 0.8)
        rise = np.clip(t - onset, 0.0, None)
        x += amp * (rise / 0.7) * np.exp(1.0 - rise / 0.7) * (t >= onset)
    return SampledSeries(PERIPHERAL_RATE_HZ, ("gsr",), x[None, :])


def _synth_landmarks(rng, duration_s, fps, effect, positive):
    n_frames = max(2, int(round(duration_s * fps)))
    frames = []
    offset = 2.0 * effect if positive else 0.0
    for i in range(n_frames):
        pts = neutral_landmarks()
        pts[list(EYE_TOP_POINTS), 1] -= offset
        pts[list(EYE_BOTTOM_POINTS), 1] += offset
        pts += rng.normal(0.0, 0.5, (49, 2))
        frames.append(LandmarkFrame(i, pts, (100.0, 100.0, 200.0, 200.0)))
    return FaceTrial(tuple(frames))


def synth_dataset(config: SynthConfig, out_dir) -> Dataset:
    """Generate signal, landmark, and manifest files under ``out_dir``."""
    if config.n_subjects < 2:
        raise ConfigError("LOSO evaluation needs at least 2 subjects")
    if config.trials_per_subject < 4:
        raise ConfigError("need at least 4 trials per subject")
    out = Path(out_dir)
    (out / "signals").mkdir(parents=True, exist_ok=True)
    (out / "landmarks").mkdir(parents=True, exist_ok=True)

    master = np.random.SeedSequence(config.seed)
    subject_seeds = master.spawn(config.n_subjects)
    subjects = [f"S{i + 1:02d}" for i in range(config.n_subjects)]
    trials: list[TrialRecord] = []

    for s_idx, subject in enumerate(subjects):
        s_master = subject_seeds[s_idx]
        label_rng = np.random.default_rng(s_master.spawn(1)[0])
        gain = label_rng.uniform(0.8, 1.25)

        m = config.trials_per_subject
        incident = np.array(["none"] * m, dtype=object)
        inc_idx = label_rng.choice(m, config.n_incident, replace=False)
        hazard = label_rng.choice(inc_idx, config.n_hazardous, replace=False)
        incident[inc_idx] = "non-hazardous"
        incident[hazard] = "hazardous"
        # attention classes are balanced within the long trials; incident
        # trials still carry a (cosmetic) attention label
        attention = np.array(["low"] * m, dtype=object)
        long_idx = np.setdiff1d(np.arange(m), inc_idx)
        attention[label_rng.choice(long_idx, config.n_high_attention, replace=False)] = "high"
        attention[label_rng.choice(inc_idx, max(1, config.n_incident // 2), replace=False)] = "high"

        trial_seeds = s_master.spawn(m)
        for t_idx in range(m):
            rng = np.random.default_rng(trial_seeds[t_idx])
            att = str(attention[t_idx])
            inc = str(incident[t_idx])
            is_incident = inc != "none"
            if is_incident:
                duration = config.incident_duration_s
            else:
                lo, hi = config.attention_duration_range
                duration = round(rng.uniform(lo, hi), 2)
            # the positive class drives each modality's signature; incident
            # trials use the incident label for face/peripheral signatures
            positive = (inc == "hazardous") if is_incident else (att == "high")

            tid = f"{subject}T{t_idx + 1:03d}"
            files = {
                "eeg": f"signals/{tid}_eeg.csv",
                "ppg": f"signals/{tid}_ppg.csv",
                "gsr": f"signals/{tid}_gsr.csv",
                "landmarks": f"landmarks/{tid}_landmarks.csv",
            }
            eeg = _synth_eeg(rng, duration, config.effect_size, att == "high", inc, gain)
            write_signal_csv(out / files["eeg"], eeg)
            write_signal_csv(out / files["ppg"], _synth_ppg(rng, duration, config.effect_size, positive))
            write_signal_csv(out / files["gsr"], _synth_gsr(rng, duration, config.effect_size, positive))
            write_landmarks_csv(
                out / files["landmarks"],
                _synth_landmarks(rng, duration, config.face_fps, config.effect_size, positive),
            )
            trials.append(TrialRecord(tid, subject, att, inc, duration, files))

    dataset = Dataset(
        root=out,
        subjects=tuple(subjects),
        trials=tuple(trials),
        seed=config.seed,
        effect_size=config.effect_size,
    )
    write_manifest(out / "manifest.json", dataset)
    return dataset
