# %% [markdown]
# # From feature maps to a similarity matrix
#
# Convolutional activations (frames x channels x height x width) are
# average-pooled over space, decimated in time, written as RSAM files with a
# manifest, and compared layer by layer.

# %%
import tempfile
from pathlib import Path

import numpy as np

from repsim import (
    ActivationSet, decimate, global_average_pool, load_activation_set,
    pairwise_similarity, write_activation_set,
)
from repsim.heatmap import HeatmapStyle, write_heatmap_svg

rng = np.random.default_rng(2)
frames = 4000
signal = rng.standard_normal((frames, 16))


def fake_layer(depth, channels, size):
    mix = rng.standard_normal((16, channels)) / (1 + depth)
    base = np.maximum(signal @ mix, 0)
    maps = base[:, :, None, None] + 0.3 * rng.standard_normal((frames, channels, size, size))
    return maps


def network(offset):
    layers = []
    for depth, (name, channels, size) in enumerate(
        [("c1", 8, 6), ("c2", 12, 4), ("c3", 16, 2), ("fc1", 32, 1), ("fc2", 10, 1)]
    ):
        pooled = global_average_pool(fake_layer(depth + offset, channels, size))
        layers.append((name, decimate(pooled, 40)))
    return ActivationSet.from_arrays("toy-probe", layers)


# %%
out = Path(tempfile.mkdtemp())
ma = write_activation_set(out / "net_a", network(0))
mb = write_activation_set(out / "net_b", network(0.5))
a, b = load_activation_set(ma), load_activation_set(mb)
print("rows per layer after pooling + decimation:", a.n_obs)

sim = pairwise_similarity(a, b, "rv2")
print(sim.to_csv())
write_heatmap_svg(out / "rv2.svg", sim, HeatmapStyle(title="net_a vs net_b"))
print("heatmap written to", out / "rv2.svg")
