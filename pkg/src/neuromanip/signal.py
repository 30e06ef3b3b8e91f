"""Surface-EMG front end: synthesis, conditioning, windowing, features.

The conditioning chain is a 4th-order Butterworth band-pass (2-40 Hz)
realized as two second-order sections plus a 50 Hz notch biquad (Q=30),
all run causally per channel at a fixed 200 Hz sample rate.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import signal as sps

from .errors import (
    DurationTooShort,
    NonMonotonicTimestamps,
    StreamTooShort,
    UnsupportedSampleRate,
)

SAMPLE_RATE_HZ = 200.0
FRAME_PERIOD_US = 5000
NUM_CHANNELS = 8

WINDOW_SAMPLES = 40   # 200 ms at 200 Hz
WINDOW_STRIDE = 10    # 50 ms hop

BANDPASS_LOW_HZ = 2.0
BANDPASS_HIGH_HZ = 40.0
NOTCH_HZ = 50.0
NOTCH_Q = 30.0

ZC_DEADBAND = 0.01
FEATURES_PER_CHANNEL = 4  # MAV, RMS, WL, ZC
NUM_FEATURES = NUM_CHANNELS * FEATURES_PER_CHANNEL


class GestureLabel(IntEnum):
    REST = 0
    CYLINDRICAL_GRIP = 1
    LATERAL_PINCH = 2
    TRIPOD_PINCH = 3
    OPEN_HAND = 4
    INDEX_POINT = 5


@dataclass(frozen=True)
class EmgFrame:
    """One 8-channel sample; amplitudes are dimensionless, nominally [-1, 1]."""
    timestamp_us: int
    channels: tuple[float, ...]

    def __post_init__(self):
        if len(self.channels) != NUM_CHANNELS:
            raise ValueError(f"expected {NUM_CHANNELS} channels, got {len(self.channels)}")


@dataclass(frozen=True)
class EmgWindow:
    """A 200 ms slice: samples has shape (channels, WINDOW_SAMPLES)."""
    start_us: int
    samples: np.ndarray

    def __post_init__(self):
        if self.samples.shape != (NUM_CHANNELS, WINDOW_SAMPLES):
            raise ValueError(f"bad window shape {self.samples.shape}")


class FilterChain:
    """Causal per-channel IIR cascade (band-pass SOS pair + notch biquad)."""

    def __init__(self, sos: np.ndarray, fs: float):
        self.sos = np.asarray(sos, dtype=float)
        self.fs = fs
        self._zi = np.zeros((self.sos.shape[0], 2, NUM_CHANNELS))

    def reset(self) -> None:
        self._zi[:] = 0.0

    def is_stable(self) -> bool:
        for section in self.sos:
            poles = np.roots(section[3:6])
            if np.any(np.abs(poles) >= 1.0):
                return False
        return True

    def response_at(self, freq_hz: float) -> complex:
        """Transfer function on the unit circle, evaluated section by section."""
        z = np.exp(2j * np.pi * freq_hz / self.fs)
        h = 1.0 + 0.0j
        for b0, b1, b2, a0, a1, a2 in self.sos:
            h *= (b0 + b1 / z + b2 / z**2) / (a0 + a1 / z + a2 / z**2)
        return h

    def apply(self, samples: np.ndarray) -> np.ndarray:
        """Filter a (n, channels) block in place of the running stream state."""
        out, self._zi = sps.sosfilt(self.sos, samples, axis=0, zi=self._zi)
        return out


def design_filter_chain(fs: float = SAMPLE_RATE_HZ) -> FilterChain:
    """Build the conditioning chain; only fs=200 is supported in v1."""
    if fs != SAMPLE_RATE_HZ:
        raise UnsupportedSampleRate(f"unsupported sample rate {fs} Hz (need {SAMPLE_RATE_HZ})")
    bandpass = sps.butter(2, [BANDPASS_LOW_HZ, BANDPASS_HIGH_HZ],
                          btype="bandpass", fs=fs, output="sos")
    notch = sps.tf2sos(*sps.iirnotch(NOTCH_HZ, NOTCH_Q, fs=fs))
    return FilterChain(np.vstack([bandpass, notch]), fs)


def _check_timestamps(frames: Sequence[EmgFrame]) -> None:
    for a, b in zip(frames, frames[1:]):
        if b.timestamp_us <= a.timestamp_us:
            raise NonMonotonicTimestamps(
                f"timestamp {b.timestamp_us} follows {a.timestamp_us}")


def frames_to_array(frames: Sequence[EmgFrame]) -> np.ndarray:
    """Stack frames into an (n, channels) float array."""
    return np.array([f.channels for f in frames], dtype=float)


def array_to_frames(samples: np.ndarray, start_us: int = 0,
                    period_us: int = FRAME_PERIOD_US) -> list[EmgFrame]:
    return [EmgFrame(start_us + i * period_us, tuple(float(v) for v in row))
            for i, row in enumerate(np.asarray(samples, dtype=float))]


def filter_stream(chain: FilterChain, frames: Sequence[EmgFrame]) -> list[EmgFrame]:
    """Run the causal chain over a timestamp-ordered stream."""
    _check_timestamps(frames)
    if not frames:
        return []
    filtered = chain.apply(frames_to_array(frames))
    return [EmgFrame(f.timestamp_us, tuple(float(v) for v in row))
            for f, row in zip(frames, filtered)]


def window_stream(frames: Sequence[EmgFrame]) -> list[EmgWindow]:
    """Slice a stream into overlapping windows (stride WINDOW_STRIDE)."""
    _check_timestamps(frames)
    n = len(frames)
    if n < WINDOW_SAMPLES:
        raise StreamTooShort(f"need at least {WINDOW_SAMPLES} frames, got {n}")
    data = frames_to_array(frames)
    windows = []
    for start in range(0, n - WINDOW_SAMPLES + 1, WINDOW_STRIDE):
        block = data[start:start + WINDOW_SAMPLES].T.copy()
        windows.append(EmgWindow(frames[start].timestamp_us, block))
    return windows


def extract_features(window: EmgWindow) -> np.ndarray:
    """Per-channel MAV, RMS, waveform length, zero crossings, channel-major.

    Zero crossings are counted only where both neighbouring samples exceed
    the ZC_DEADBAND in magnitude.
    """
    x = window.samples  # (channels, W)
    mav = np.mean(np.abs(x), axis=1)
    rms = np.sqrt(np.mean(x**2, axis=1))
    wl = np.sum(np.abs(np.diff(x, axis=1)), axis=1)
    a, b = x[:, :-1], x[:, 1:]
    zc = np.sum((a * b < 0) & (np.abs(a) > ZC_DEADBAND) & (np.abs(b) > ZC_DEADBAND),
                axis=1).astype(float)
    return np.stack([mav, rms, wl, zc], axis=1).reshape(-1)


# --- synthetic generator -----------------------------------------------------

# Amplitude of the band-limited carrier at activation 1.0 is BAND_SCALE times
# the unit-variance white source (about 0.62 of it survives the 2-40 Hz band).
BAND_SCALE = 0.0132


def default_activation_matrix() -> np.ndarray:
    """Rest is silent; each of the five active gestures drives its own channel."""
    act = np.zeros((len(GestureLabel), NUM_CHANNELS))
    for g in range(1, 6):
        act[g, g - 1] = 0.9
    return act


@dataclass(frozen=True)
class SynthEmgModel:
    """Stand-in for recorded EMG: per-gesture channel gains shaping band noise."""
    activation: np.ndarray = field(default_factory=default_activation_matrix)
    noise_sigma: float = 0.0075
    mains_amp: float = 0.02
    seed: int = 7

    def __post_init__(self):
        act = np.asarray(self.activation, dtype=float)
        if act.shape != (len(GestureLabel), NUM_CHANNELS):
            raise ValueError(f"activation must be {len(GestureLabel)}x{NUM_CHANNELS}")
        if np.any(act < 0.0) or np.any(act > 1.0):
            raise ValueError("activation gains must lie in [0, 1]")
        for i in range(act.shape[0]):
            for j in range(i + 1, act.shape[0]):
                if np.array_equal(act[i], act[j]):
                    raise ValueError(f"activation rows {i} and {j} are identical")
        if self.noise_sigma < 0 or self.mains_amp < 0:
            raise ValueError("noise_sigma and mains_amp must be nonnegative")
        object.__setattr__(self, "activation", act)


_BAND_SOS = sps.butter(2, [BANDPASS_LOW_HZ, BANDPASS_HIGH_HZ],
                       btype="bandpass", fs=SAMPLE_RATE_HZ, output="sos")


def synth_emg(model: SynthEmgModel, gesture: GestureLabel, duration_ms: int,
              start_us: int = 0) -> list[EmgFrame]:
    """Deterministic synthetic stream for one gesture.

    Each channel is gain-shaped band-limited noise plus a mains sinusoid and
    white measurement noise; identical model/arguments reproduce the stream.
    """
    if duration_ms < 200:
        raise DurationTooShort(f"duration {duration_ms} ms below 200 ms minimum")
    n = int(round(duration_ms * SAMPLE_RATE_HZ / 1000.0))
    rng = np.random.default_rng(np.random.SeedSequence([int(model.seed) & (2**64 - 1),
                                                        int(gesture)]))
    white = rng.normal(0.0, 1.0, (n, NUM_CHANNELS))
    band = sps.sosfilt(_BAND_SOS, white, axis=0) * BAND_SCALE
    t = (start_us / 1e6) + np.arange(n) / SAMPLE_RATE_HZ
    x = model.activation[int(gesture)][None, :] * band
    x = x + model.mains_amp * np.sin(2 * np.pi * NOTCH_HZ * t)[:, None]
    if model.noise_sigma > 0:
        x = x + rng.normal(0.0, model.noise_sigma, (n, NUM_CHANNELS))
    return array_to_frames(x, start_us=start_us)


# --- recording files ---------------------------------------------------------

CSV_HEADER = ["t_us"] + [f"ch{i}" for i in range(1, NUM_CHANNELS + 1)]


def write_recording(path: str | Path, frames: Sequence[EmgFrame]) -> None:
    """CSV with header t_us,ch1..ch8, LF line endings."""
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for f in frames:
            writer.writerow([f.timestamp_us] + [repr(float(c)) for c in f.channels])


def read_recording(path: str | Path) -> list[EmgFrame]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != CSV_HEADER:
            raise ValueError(f"unexpected recording header {header}")
        frames = [EmgFrame(int(row[0]), tuple(float(v) for v in row[1:]))
                  for row in reader if row]
    _check_timestamps(frames)
    return frames


def write_manifest(path: str | Path, entries: Iterable[dict]) -> None:
    """Dataset manifest: JSON list of {file, gesture, ...} records."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(list(entries), fh, indent=2)
        fh.write("\n")


def read_manifest(path: str | Path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
