"""Look at the synthetic gesture generator.

Each gesture drives its own electrode channel with band-limited noise, so
windows become separable by their per-channel energy profile; the additive
noise level is what the accuracy calibration later tunes.
"""

import pathlib

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from neuromanip.harness.datagen import synth_window
from neuromanip.signal import GestureLabel, extract_features

out = pathlib.Path(__file__).parent / "out"
out.mkdir(exist_ok=True)

fig, axes = plt.subplots(6, 1, figsize=(7, 9), sharex=True, sharey=True)
for gesture, ax in zip(GestureLabel, axes):
    window = synth_window(gesture, sigma=0.002, mains_amp=0.02, sample_seed=3)
    for ch in range(8):
        ax.plot(window.samples[ch] + 0.02 * ch, lw=0.5)
    ax.set_ylabel(gesture.name.lower(), rotation=0, ha="right", fontsize=7)
axes[-1].set_xlabel("sample (200 ms window)")
fig.suptitle("conditioned windows, one gesture per row (channels offset)")
fig.tight_layout()
fig.savefig(out / "gesture_windows.png", dpi=120)

# feature summary: per-gesture mean RMS per channel
print("mean per-channel RMS by gesture (x1000):")
print("gesture            " + " ".join(f"ch{c+1:>2}" for c in range(8)))
for gesture in GestureLabel:
    rms = np.zeros(8)
    for seed in range(20):
        feats = extract_features(synth_window(gesture, 0.002, 0.02, 100 + seed))
        rms += feats.reshape(8, 4)[:, 1]
    rms /= 20
    cells = " ".join(f"{1000 * v:4.1f}" for v in rms)
    print(f"{gesture.name:<18} {cells}")
print(f"figure in {out}")
