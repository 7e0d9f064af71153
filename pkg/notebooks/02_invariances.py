# %% [markdown]
# # What the metrics ignore and what they notice
#
# RV, RV2 and linear CKA do not change under orthogonal rotations of the
# feature axes or under isotropic rescaling. A general invertible linear map
# does change them.

# %%
import numpy as np

from repsim import linear_cka, rv, rv2

rng = np.random.default_rng(1)
x = rng.standard_normal((100, 8))
y = np.tanh(x @ rng.standard_normal((8, 6))) + 0.2 * rng.standard_normal((100, 6))

q, _ = np.linalg.qr(rng.standard_normal((8, 8)))
a = np.diag(np.geomspace(10, 0.1, 8)) + np.triu(rng.standard_normal((8, 8)), 1)

# %%
for name, f in (("RV", rv), ("RV2", rv2), ("CKA", linear_cka)):
    print(f"{name:>4}: base {f(x, y):.4f}  rotated {f(x @ q, y):.4f}  "
          f"scaled {f(1e3 * x, y):.4f}  linear map {f(x @ a, y):.4f}")

# %% [markdown]
# ## Two ways to compute the same trace statistics
#
# When observations outnumber features, tr(XX'YY') = ||X'Y||^2 avoids ever
# building an n x n Gram matrix.

# %%
import time

from repsim import cross_gram_stats

x = rng.standard_normal((8000, 64))
y = rng.standard_normal((8000, 32))
for path in ("feature_space", "gram_space"):
    t0 = time.perf_counter()
    s = cross_gram_stats(x, y, path)
    print(f"{path:>13}: t_cross={s.t_cross:.6e}  {time.perf_counter() - t0:.3f}s")
