# %% [markdown]
# # Transfer freeze training at desk scale
#
# A network trained on task b is copied and freeze-trained on task a. Its
# early layers freeze almost immediately, so they should stay closest to the
# source network even though the network is evaluated on task a.

# %%
import tempfile

import numpy as np

from repsim.demo import run_demo

out = tempfile.mkdtemp()
sims = run_demo("transfer_freeze", out)

# %%
src = sims["transfer_freeze_vs_standard_b"].scores
tgt = sims["transfer_freeze_vs_standard_a"].scores
for i, name in enumerate(sims["transfer_freeze_vs_standard_b"].row_labels):
    print(f"{name}: to source {src[i, i]:.3f}   to target {tgt[i, i]:.3f}")

# %%
print(open(f"{out}/report.md").read())
