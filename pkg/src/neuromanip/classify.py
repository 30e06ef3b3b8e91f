"""Gesture classifier: a small dense reference net and its spiking twin.

The dense net (32-64-64-6, rectifier hidden units) is trained on
standardized window features. Conversion reuses the trained weights in an
integrate-and-fire network: layer thresholds are set from activation
statistics on a calibration set, inputs are rate-coded deterministically,
and inference counts synaptic events as its energy proxy.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    DivergedLoss,
    EmptyCalibration,
    InsufficientData,
    ModelNotLoaded,
    ShapeMismatch,
)
from .signal import NUM_FEATURES, EmgWindow, GestureLabel, extract_features

DEFAULT_LAYER_SIZES = (NUM_FEATURES, 64, 64, len(GestureLabel))
DEFAULT_TIMESTEPS = 64
THRESHOLD_PERCENTILE = 99.9

MODEL_FORMAT_VERSION = "nmv1"


def dense_mac_count(layer_sizes: Sequence[int] = DEFAULT_LAYER_SIZES) -> int:
    """Multiply-accumulates of one dense forward pass (6528 for the default)."""
    return int(sum(a * b for a, b in zip(layer_sizes[:-1], layer_sizes[1:])))


@dataclass
class DenseNet:
    """Trained reference net plus the normalization statistics it was fit with."""
    layer_sizes: tuple[int, ...]
    weights: list[np.ndarray]          # weights[i]: (out, in)
    biases: list[np.ndarray]
    feature_mean: np.ndarray
    feature_std: np.ndarray
    feature_min: np.ndarray            # of standardized training features
    feature_max: np.ndarray

    def standardize(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.feature_mean) / self.feature_std


@dataclass(frozen=True)
class LifParams:
    """Integrate-and-fire step: v <- v*decay + input; spike and reset to zero at threshold."""
    decay: float
    threshold: float

    def __post_init__(self):
        if not (0.0 < self.decay <= 1.0):
            raise ValueError("decay must be in (0, 1]")
        if self.threshold <= 0.0:
            raise ValueError("threshold must be positive")


@dataclass
class SpikingNetwork:
    """Converted event-driven classifier.

    Weight matrices match the source net (the input rescale is folded into
    the first layer); bias_total[i] is the charge a constant bias current
    injects over the full run, so each step adds bias_total/T.
    """
    layer_sizes: tuple[int, ...]
    weights: list[np.ndarray]
    bias_total: list[np.ndarray]
    lif: list[LifParams]
    timesteps: int
    feature_min: np.ndarray
    feature_max: np.ndarray

    @property
    def thresholds(self) -> list[float]:
        return [p.threshold for p in self.lif]

    def rescale_input(self, x_std: np.ndarray) -> np.ndarray:
        """Affine rescale of standardized features into [0, 1] rates."""
        span = np.maximum(self.feature_max - self.feature_min, 1e-12)
        return np.clip((np.asarray(x_std, dtype=float) - self.feature_min) / span, 0.0, 1.0)


@dataclass(frozen=True)
class EnergyReport:
    """Event-count proxy for inference cost.

    synaptic_events counts every weight lookup triggered by a presynaptic
    spike over the whole run; event_ratio relates the per-timestep average
    of that count to the MACs of one dense forward pass.
    """
    synaptic_events: int
    dense_macs: int
    timesteps: int

    @property
    def event_ratio(self) -> float:
        return self.synaptic_events / (self.dense_macs * self.timesteps)


# --- training -----------------------------------------------------------------

MIN_SAMPLES_PER_CLASS = 60
WEIGHT_DECAY = 1e-4
ACTIVITY_PENALTY = 0.08   # L1 pull on hidden activations; keeps the converted net sparse
BATCH_SIZE = 64


def train_dense(features: np.ndarray, labels: np.ndarray, epochs: int = 80,
                lr: float = 3e-3, seed: int = 0,
                layer_sizes: Sequence[int] = DEFAULT_LAYER_SIZES) -> DenseNet:
    """Fit the reference net with Adam on softmax cross-entropy.

    Raises InsufficientData unless every class present has at least
    MIN_SAMPLES_PER_CLASS samples (and at least two classes appear).
    """
    X = np.asarray(features, dtype=float)
    y = np.asarray(labels, dtype=int)
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[0] != y.shape[0]:
        raise InsufficientData(f"bad dataset shapes {X.shape} / {y.shape}")
    if X.shape[1] != layer_sizes[0]:
        raise DimensionMismatch(f"feature dim {X.shape[1]} != {layer_sizes[0]}")
    present, counts = np.unique(y, return_counts=True)
    if len(present) < 2:
        raise InsufficientData("need at least two classes")
    if counts.min() < MIN_SAMPLES_PER_CLASS:
        raise InsufficientData(
            f"class {present[counts.argmin()]} has {counts.min()} samples "
            f"(minimum {MIN_SAMPLES_PER_CLASS})")

    mean = X.mean(axis=0)
    std = X.std(axis=0) + 1e-8
    Xs = (X - mean) / std

    rng = np.random.default_rng(seed)
    Ws, bs = [], []
    for n_in, n_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        Ws.append(rng.normal(0.0, np.sqrt(2.0 / n_in), (n_out, n_in)))
        bs.append(np.zeros(n_out))

    mW = [np.zeros_like(w) for w in Ws]
    vW = [np.zeros_like(w) for w in Ws]
    mb = [np.zeros_like(b) for b in bs]
    vb = [np.zeros_like(b) for b in bs]
    b1, b2, eps = 0.9, 0.999, 1e-8
    step = 0
    n = Xs.shape[0]

    for _ in range(epochs):
        order = rng.permutation(n)
        for lo in range(0, n, BATCH_SIZE):
            sel = order[lo:lo + BATCH_SIZE]
            xb, yb = Xs[sel], y[sel]
            hs = [xb]
            h = xb
            for i in range(len(Ws) - 1):
                h = np.maximum(0.0, h @ Ws[i].T + bs[i])
                hs.append(h)
            logits = h @ Ws[-1].T + bs[-1]
            shifted = logits - logits.max(axis=1, keepdims=True)
            expz = np.exp(shifted)
            probs = expz / expz.sum(axis=1, keepdims=True)
            loss = -np.mean(shifted[np.arange(len(yb)), yb]
                            - np.log(expz.sum(axis=1)))
            if not np.isfinite(loss):
                raise DivergedLoss(f"non-finite loss at step {step}")

            grad = probs
            grad[np.arange(len(yb)), yb] -= 1.0
            grad /= len(yb)
            gWs = [np.empty(0)] * len(Ws)
            gbs = [np.empty(0)] * len(Ws)
            delta = grad
            for i in range(len(Ws) - 1, -1, -1):
                gWs[i] = delta.T @ hs[i] + WEIGHT_DECAY * Ws[i]
                gbs[i] = delta.sum(axis=0)
                if i > 0:
                    delta = (delta @ Ws[i]) * (hs[i] > 0)
                    delta = delta + (ACTIVITY_PENALTY / (len(yb) * hs[i].shape[1])) * (hs[i] > 0)

            step += 1
            for i in range(len(Ws)):
                mW[i] = b1 * mW[i] + (1 - b1) * gWs[i]
                vW[i] = b2 * vW[i] + (1 - b2) * gWs[i] ** 2
                mb[i] = b1 * mb[i] + (1 - b1) * gbs[i]
                vb[i] = b2 * vb[i] + (1 - b2) * gbs[i] ** 2
                Ws[i] -= lr * (mW[i] / (1 - b1 ** step)) / (np.sqrt(vW[i] / (1 - b2 ** step)) + eps)
                bs[i] -= lr * (mb[i] / (1 - b1 ** step)) / (np.sqrt(vb[i] / (1 - b2 ** step)) + eps)

    Xstd = (X - mean) / std
    return DenseNet(tuple(layer_sizes), Ws, bs, mean, std,
                    Xstd.min(axis=0), Xstd.max(axis=0))


def dense_forward(net: DenseNet, x: np.ndarray) -> np.ndarray:
    """Logits for one standardized feature vector."""
    x = np.asarray(x, dtype=float)
    if x.shape != (net.layer_sizes[0],):
        raise DimensionMismatch(f"expected ({net.layer_sizes[0]},), got {x.shape}")
    return dense_forward_batch(net, x[None, :])[0]


def dense_forward_batch(net: DenseNet, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != net.layer_sizes[0]:
        raise DimensionMismatch(f"expected (n, {net.layer_sizes[0]}), got {X.shape}")
    h = X
    for i in range(len(net.weights) - 1):
        h = np.maximum(0.0, h @ net.weights[i].T + net.biases[i])
    return h @ net.weights[-1].T + net.biases[-1]


# --- conversion ---------------------------------------------------------------

def convert_to_snn(net: DenseNet, calib: np.ndarray,
                   timesteps: int = DEFAULT_TIMESTEPS) -> SpikingNetwork:
    """Reuse the dense weights in an integrate-and-fire net.

    Layer thresholds are the 99.9th percentile of that layer's pre-activation
    over the calibration set, computed layer by layer with earlier layers
    already normalized, so each layer's spike rate approximates its rescaled
    activation. The input affine rescale is folded into the first layer, and
    biases become constant currents matching the normalized-net bias.
    """
    calib = np.asarray(calib, dtype=float)
    if calib.size == 0:
        raise EmptyCalibration("calibration set is empty")
    if calib.ndim == 1:
        calib = calib[None, :]
    if calib.shape[1] != net.layer_sizes[0]:
        raise DimensionMismatch(f"calibration dim {calib.shape[1]}")

    Xs = net.standardize(calib)
    fmin, fmax = net.feature_min, net.feature_max
    span = np.maximum(fmax - fmin, 1e-12)

    weights = [net.weights[0] * span[None, :]] + [w.copy() for w in net.weights[1:]]
    raw_bias = [net.biases[0] + net.weights[0] @ fmin] + [b.copy() for b in net.biases[1:]]

    x01 = np.clip((Xs - fmin) / span, 0.0, 1.0)
    rates = x01
    cumulative = 1.0
    lif, bias_total = [], []
    for i in range(len(weights)):
        bias_step = raw_bias[i] / cumulative
        pre = rates @ weights[i].T + bias_step
        theta = float(np.percentile(pre, THRESHOLD_PERCENTILE, method="higher"))
        theta = max(theta, 1e-6)
        lif.append(LifParams(decay=1.0, threshold=theta))
        bias_total.append(timesteps * bias_step)
        rates = np.maximum(0.0, pre) / theta
        cumulative *= theta

    return SpikingNetwork(net.layer_sizes, weights, bias_total, lif,
                          timesteps, fmin.copy(), fmax.copy())


def encode_rate(x: np.ndarray, timesteps: int = DEFAULT_TIMESTEPS) -> np.ndarray:
    """Deterministic accumulator coding of rates in [0, 1].

    Neuron i spikes at step t (1-based) iff floor(t*x_i) > floor((t-1)*x_i),
    so its total spike count is exactly floor(T*x_i).
    """
    x = np.asarray(x, dtype=float)
    steps = np.arange(1, timesteps + 1)[:, None]
    marks = np.floor(steps * x[None, :])
    prev = np.vstack([np.zeros((1, x.size)), marks[:-1]])
    return (marks > prev).astype(np.uint8)


def snn_infer(snn: SpikingNetwork, spikes: np.ndarray) -> tuple[np.ndarray, EnergyReport]:
    """Step the integrate-and-fire layers over an input spike train.

    Returns per-class output spike counts and the event accounting. Each
    presynaptic spike costs one weight lookup per fan-out connection.
    """
    spikes = np.asarray(spikes)
    if spikes.ndim != 2 or spikes.shape != (snn.timesteps, snn.layer_sizes[0]):
        raise ShapeMismatch(
            f"expected ({snn.timesteps}, {snn.layer_sizes[0]}), got {spikes.shape}")

    v = [np.zeros(s) for s in snn.layer_sizes[1:]]
    counts = np.zeros(snn.layer_sizes[-1])
    events = 0
    for t in range(snn.timesteps):
        s = spikes[t].astype(float)
        for i, w in enumerate(snn.weights):
            events += int(s.sum()) * w.shape[0]
            v[i] = v[i] * snn.lif[i].decay + w @ s + snn.bias_total[i] / snn.timesteps
            fired = v[i] >= snn.lif[i].threshold
            v[i][fired] = 0.0
            s = fired.astype(float)
        counts += s
    report = EnergyReport(events, dense_mac_count(snn.layer_sizes), snn.timesteps)
    return counts, report


def snn_infer_batch(snn: SpikingNetwork, x01: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized inference over many rate vectors (same math as snn_infer).

    Returns (output spike counts (n, classes), synaptic event counts (n,)).
    """
    x01 = np.asarray(x01, dtype=float)
    if x01.ndim != 2 or x01.shape[1] != snn.layer_sizes[0]:
        raise ShapeMismatch(f"expected (n, {snn.layer_sizes[0]}), got {x01.shape}")
    n = x01.shape[0]
    T = snn.timesteps
    v = [np.zeros((n, s)) for s in snn.layer_sizes[1:]]
    counts = np.zeros((n, snn.layer_sizes[-1]))
    events = np.zeros(n)
    prev = np.zeros_like(x01)
    for t in range(1, T + 1):
        marks = np.floor(t * x01)
        s = marks - prev
        prev = marks
        for i, w in enumerate(snn.weights):
            events += s.sum(axis=1) * w.shape[0]
            v[i] = v[i] * snn.lif[i].decay + s @ w.T + snn.bias_total[i] / T
            fired = v[i] >= snn.lif[i].threshold
            v[i][fired] = 0.0
            s = fired.astype(float)
        counts += s
    return counts, events


# --- window-level classification ----------------------------------------------

@dataclass
class GesturePipeline:
    """Bundle of the trained dense net and (optionally) its spiking twin."""
    dense: Optional[DenseNet] = None
    snn: Optional[SpikingNetwork] = None


@dataclass(frozen=True)
class ClassifyResult:
    label: GestureLabel
    confidence: float
    latency_us: float
    energy: Optional[EnergyReport] = None
    logits: np.ndarray = field(default=None, repr=False)


def softmax(scores: np.ndarray) -> np.ndarray:
    z = scores - np.max(scores)
    e = np.exp(z)
    return e / e.sum()


def classify_window(pipeline: GesturePipeline, window: EmgWindow,
                    backend: str = "dense") -> ClassifyResult:
    """Label one conditioned window; ties break to the lowest label code."""
    if pipeline.dense is None:
        raise ModelNotLoaded("dense model missing")
    x = extract_features(window)
    x_std = pipeline.dense.standardize(x)
    if backend == "dense":
        t0 = time.perf_counter_ns()
        logits = dense_forward(pipeline.dense, x_std)
        latency_us = (time.perf_counter_ns() - t0) / 1000.0
        energy = None
        scores = logits
    elif backend == "spiking":
        if pipeline.snn is None:
            raise ModelNotLoaded("spiking model missing (run conversion first)")
        t0 = time.perf_counter_ns()
        x01 = pipeline.snn.rescale_input(x_std)
        spikes = encode_rate(x01, pipeline.snn.timesteps)
        scores, energy = snn_infer(pipeline.snn, spikes)
        latency_us = (time.perf_counter_ns() - t0) / 1000.0
        logits = scores
    else:
        raise ValueError(f"unknown backend {backend!r}")
    label = GestureLabel(int(np.argmax(scores)))
    confidence = float(softmax(scores)[label])
    return ClassifyResult(label, confidence, latency_us, energy, logits)


# --- model file ("nmv1") -------------------------------------------------------

def save_model(path: str | Path, net: DenseNet, snn: Optional[SpikingNetwork] = None) -> None:
    doc = {
        "version": MODEL_FORMAT_VERSION,
        "layer_sizes": list(net.layer_sizes),
        "weights": [w.reshape(-1).tolist() for w in net.weights],
        "biases": [b.tolist() for b in net.biases],
        "feature_mean": net.feature_mean.tolist(),
        "feature_std": net.feature_std.tolist(),
        "feature_min": net.feature_min.tolist(),
        "feature_max": net.feature_max.tolist(),
        "thresholds": snn.thresholds if snn is not None else None,
        "timesteps": snn.timesteps if snn is not None else None,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_model(path: str | Path) -> GesturePipeline:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("version") != MODEL_FORMAT_VERSION:
        raise ModelNotLoaded(f"unsupported model version {doc.get('version')!r}")
    sizes = tuple(doc["layer_sizes"])
    weights = [np.array(flat, dtype=float).reshape(n_out, n_in)
               for flat, n_in, n_out in zip(doc["weights"], sizes[:-1], sizes[1:])]
    biases = [np.array(b, dtype=float) for b in doc["biases"]]
    net = DenseNet(sizes, weights, biases,
                   np.array(doc["feature_mean"]), np.array(doc["feature_std"]),
                   np.array(doc["feature_min"]), np.array(doc["feature_max"]))
    snn = None
    if doc.get("thresholds"):
        snn = convert_from_thresholds(net, doc["thresholds"], doc["timesteps"])
    return GesturePipeline(dense=net, snn=snn)


def convert_from_thresholds(net: DenseNet, thresholds: Sequence[float],
                            timesteps: int) -> SpikingNetwork:
    """Rebuild the spiking net from stored thresholds (no calibration pass)."""
    fmin, fmax = net.feature_min, net.feature_max
    span = np.maximum(fmax - fmin, 1e-12)
    weights = [net.weights[0] * span[None, :]] + [w.copy() for w in net.weights[1:]]
    raw_bias = [net.biases[0] + net.weights[0] @ fmin] + [b.copy() for b in net.biases[1:]]
    lif, bias_total = [], []
    cumulative = 1.0
    for i, theta in enumerate(thresholds):
        lif.append(LifParams(decay=1.0, threshold=float(theta)))
        bias_total.append(timesteps * raw_bias[i] / cumulative)
        cumulative *= float(theta)
    return SpikingNetwork(net.layer_sizes, weights, bias_total, lif,
                          timesteps, fmin.copy(), fmax.copy())
