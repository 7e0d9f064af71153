# %% [markdown]
# # Random lower layers
#
# random_above(n) leaves layers 1..n at their initialization and trains the
# rest. If the trained layers shared out the standard network's work
# evenly, the similarity to the standard network would follow the
# stretched diagonal in the hypothesis matrices. Compare with what is
# measured.

# %%
import tempfile

import numpy as np

from repsim.demo import diagonal_stats, run_demo

out = tempfile.mkdtemp()
sims = run_demo("random_features", out)

# %%
L = 6
for n in range(1, L):
    measured = sims[f"random_{n}_vs_standard_a"]
    best = np.nanargmax(measured.scores, axis=1) + 1
    ideal = np.argmax(sims[f"hypothesis_{n}"].scores, axis=1) + 1
    print(f"random net {n}: best standard layer per layer {best.tolist()}  "
          f"hypothesis {ideal.tolist()}  within-1 {diagonal_stats(measured)['within_1']:.2f}")

# %%
print(open(f"{out}/report.md").read().split("## Accuracy", 1)[1])
