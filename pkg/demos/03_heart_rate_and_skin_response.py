"""PPG and GSR feature extraction plus spectrogram images.

Builds a pulse wave with irregular beat timing, extracts heart rate and
pNN50, then computes the 8 GSR features and writes both spectrogram PNGs.
"""

from pathlib import Path

import numpy as np

from neurodrive.imaging import write_png
from neurodrive.peripheral import (
    GSR_SPECTRO_FMAX_HZ,
    PPG_SPECTRO_FMAX_HZ,
    PulseTrial,
    find_pulse_peaks,
    gsr_feature_vector,
    heart_rate,
    pnn50,
    ppg_feature_vector,
    rr_intervals,
    spectrogram_image,
)
from neurodrive.signals import SampledSeries

OUT = Path(__file__).parent / "demo_output"
OUT.mkdir(exist_ok=True)

fs = 51.2
rng = np.random.default_rng(3)
duration = 60.0
t = np.arange(int(duration * fs)) / fs

# beats ~72 bpm with visible beat-to-beat jitter
beat = 0.4
ppg = 0.02 * rng.standard_normal(t.size)
while beat < duration:
    ppg += np.exp(-((t - beat) ** 2) / (2 * 0.05**2))
    beat += 60.0 / 72.0 + 0.08 * rng.standard_normal()

trial = PulseTrial(SampledSeries(fs, ("ppg",), ppg[None, :]))
peaks = find_pulse_peaks(trial)
rr = rr_intervals(trial)
print(f"beats detected : {len(peaks)}")
print(f"heart rate     : {heart_rate(peaks, duration):.1f} bpm")
print(f"pNN50          : {pnn50(rr):.2f} (fraction of successive RR diffs > 50 ms)")

out = ppg_feature_vector(trial)
print("\nPPG feature vector (pNN50 + six profile statistics):")
for name, value in zip(out.vector.names, out.vector.values):
    print(f"  {name:>9}: {value: .4f}")

# a drifting skin-conductance trace with three response bumps
gsr = 2.0 + 0.002 * np.cumsum(rng.standard_normal(t.size))
for onset, amp in ((12.0, 0.6), (28.0, 0.4), (47.0, 0.8)):
    rise = np.clip(t - onset, 0.0, None)
    gsr += amp * (rise / 0.7) * np.exp(1.0 - rise / 0.7) * (t >= onset)
series = SampledSeries(fs, ("gsr",), gsr[None, :])
fv = gsr_feature_vector(series)
print("\nGSR feature vector (peaks + profile statistics):")
for name, value in zip(fv.names, fv.values):
    print(f"  {name:>20}: {value: .4f}")

for label, sig, fmax in (("ppg", trial.ppg, PPG_SPECTRO_FMAX_HZ), ("gsr", series, GSR_SPECTRO_FMAX_HZ)):
    img = spectrogram_image(sig, fmax)
    path = OUT / f"{label}_spectrogram.png"
    write_png(path, img.pixels)
    print(f"wrote {path} (0..{fmax} Hz, low frequencies at the bottom)")
