"""Compare the dense classifier with its event-driven twin.

Loads the packaged model, scores a fresh test set on both backends, and
prints agreement, spike activity, and the synaptic-event energy proxy.
"""

import numpy as np

from neuromanip.classify import dense_forward_batch, snn_infer_batch
from neuromanip.harness.config import RunConfig, resolve_library, resolve_model, resolve_scene
from neuromanip.harness.datagen import make_eval_set
from neuromanip.harness.evaluate import bench_latency

config = RunConfig()
pipeline = resolve_model(config)
scene, lib = resolve_scene(config), resolve_library(config)

print(f"layer sizes: {pipeline.dense.layer_sizes}")
print(f"conversion thresholds: {[round(t, 3) for t in pipeline.snn.thresholds]}")
print(f"timesteps: {pipeline.snn.timesteps}")

samples = make_eval_set(1500, config.noise_sigma, scene, lib, config.seed)
feats = np.array([s.features for s in samples])
truth = np.array([int(s.label) for s in samples])

X = pipeline.dense.standardize(feats)
dense_pred = np.argmax(dense_forward_batch(pipeline.dense, X), axis=1)
counts, events = snn_infer_batch(pipeline.snn, pipeline.snn.rescale_input(X))
snn_pred = np.argmax(counts, axis=1)

macs = 32 * 64 + 64 * 64 + 64 * 6
print(f"\ndense accuracy:    {np.mean(dense_pred == truth):.4f}")
print(f"spiking accuracy:  {np.mean(snn_pred == truth):.4f}")
print(f"top-1 agreement:   {np.mean(snn_pred == dense_pred):.4f}")
print(f"output spikes per window: {counts.sum(axis=1).mean():.1f}")
print(f"synaptic events per window: {events.mean():.0f} "
      f"(dense does {macs} MACs per pass)")
print(f"events per timestep / dense MACs: {events.mean() / (macs * 64):.4f}")

for backend in ("dense", "spiking"):
    rep = bench_latency(pipeline, backend, n=300, warmup=50,
                        sigma=config.noise_sigma, seed=config.seed)
    print(f"{backend:>8} latency: mean {rep.mean_us:7.1f} us, "
          f"p99 {rep.p99_us:7.1f} us")
