"""Render an EEG band-power topography as an RGB image.

Builds a 14-channel trial with a strong beta rhythm on the frontal
electrodes, computes theta/alpha/beta band powers per channel, and renders
the combined scalp image (theta->red, alpha->green, beta->blue).
"""

from pathlib import Path

import numpy as np

from neurodrive.eeg import (
    CANONICAL_CHANNELS,
    FRONTAL_CHANNELS,
    EegTrial,
    band_power_maps,
    render_topo_image,
)
from neurodrive.imaging import write_png
from neurodrive.signals import SampledSeries, bandpass_filter

OUT = Path(__file__).parent / "demo_output"
OUT.mkdir(exist_ok=True)

fs = 128.0
rng = np.random.default_rng(1)
t = np.arange(int(12 * fs)) / fs

data = rng.standard_normal((14, t.size))
beta = 2.5 * np.sin(2 * np.pi * 20.0 * t)
for ch in FRONTAL_CHANNELS:
    data[CANONICAL_CHANNELS.index(ch)] += beta

trial = EegTrial(bandpass_filter(SampledSeries(fs, CANONICAL_CHANNELS, data), 4.0, 45.0))
theta, alpha, betam = band_power_maps(trial)

print("mean band power per channel (units^2/Hz):")
for i, ch in enumerate(CANONICAL_CHANNELS):
    marker = " <- frontal beta source" if ch in FRONTAL_CHANNELS else ""
    print(f"  {ch:>3}: theta {theta.power_per_channel[i]:7.4f}  "
          f"alpha {alpha.power_per_channel[i]:7.4f}  "
          f"beta {betam.power_per_channel[i]:7.4f}{marker}")

image = render_topo_image(theta, alpha, betam)
path = OUT / "topo_beta_frontal.png"
write_png(path, image.pixels)
print(f"\nband maxima used for normalization: {image.band_maxima}")
print(f"wrote {path} (blue = beta; the frontal crescent should glow)")
