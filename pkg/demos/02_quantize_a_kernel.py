#!/usr/bin/env python3
"""Bin a trained kernel into a small shared-weight dictionary.

Weights from a trained network cluster tightly around a few values, so
k-means with a handful of bins loses very little. The encoded kernel
stores only the bin index per position (ceil(log2 B) bits instead of a
full word).
"""

import numpy as np

from pasmconv import (
    KMeansOptions,
    QTensor,
    WordSpec,
    decode_kernel,
    encode_kernel,
    kmeans_iterate,
    quantization_sse,
)

rng = np.random.default_rng(11)
word = WordSpec(16)

# synthesize "trained" weights: three value clusters plus noise, scale 100
clusters = rng.choice([-150, 20, 240], size=(2, 3, 3, 3))
noise = rng.integers(-12, 12, size=clusters.shape)
kernel = QTensor(clusters.shape, word, clusters + noise)
print(f"kernel: shape {kernel.shape}, {kernel.n_elements} weights, "
      f"{np.unique(kernel.flat()).size} distinct values")

for n_bins in (2, 4, 8, 16):
    run = kmeans_iterate(kernel.flat(), n_bins, KMeansOptions(restarts=8))
    print(f"B={n_bins:3d}: centroids {run.dictionary.centroids.tolist()} "
          f"SSE={run.sse} ({len(run.sse_history)} iterations)")

run = kmeans_iterate(kernel.flat(), 4, KMeansOptions(restarts=8))
ek = encode_kernel(kernel, run.dictionary)
decoded = decode_kernel(ek)

print(f"\nindex width: {run.dictionary.wci} bits per position "
      f"(was {word.width} bits per weight)")
print(f"first kernel slice indices:\n{ek.indices[0, 0]}")
print(f"decoded slice:\n{decoded.data[0, 0]}")
print(f"original slice:\n{kernel.data[0, 0]}")
print(f"reconstruction SSE: "
      f"{quantization_sse(kernel.flat(), run.dictionary, run.assignments)}")
