"""Brute-force reference implementations, independent of the fast paths."""
import numpy as np

WORKED_X = np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
WORKED_Y = np.array([[1.0], [0.0], [2.0]])


def grams(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    return x @ x.T, y @ y.T


def rv_oracle(x, y):
    k, l = grams(x, y)
    return np.trace(k @ l) / np.sqrt(np.trace(k @ k) * np.trace(l @ l))


def rv2_oracle(x, y):
    k, l = grams(x, y)
    k = k - np.diag(np.diag(k))
    l = l - np.diag(np.diag(l))
    vk, vl = k.ravel(), l.ravel()
    return vk @ vl / np.sqrt((vk @ vk) * (vl @ vl))


def cka_oracle(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = x.shape[0]
    h = np.eye(n) - np.ones((n, n)) / n
    k, l = grams(x, y)
    k, l = h @ k @ h, h @ l @ h
    return np.trace(k @ l) / np.sqrt(np.trace(k @ k) * np.trace(l @ l))


def stats_oracle(x, y):
    k, l = grams(x, y)
    dk, dl = np.diag(k), np.diag(l)
    return dict(
        t_cross=np.trace(k @ l), d_diag=dk @ dl,
        sxx=np.trace(k @ k), dxx=dk @ dk,
        syy=np.trace(l @ l), dyy=dl @ dl,
    )


def random_orthogonal(p, rng):
    q, r = np.linalg.qr(rng.standard_normal((p, p)))
    return q * np.sign(np.diag(r))


def finite_difference(f, arr, h=1e-5):
    """Central differences of scalar f() w.r.t. every entry of arr (mutated in place)."""
    g = np.zeros_like(arr)
    it = np.nditer(arr, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        orig = arr[idx]
        arr[idx] = orig + h
        up = f()
        arr[idx] = orig - h
        down = f()
        arr[idx] = orig
        g[idx] = (up - down) / (2 * h)
    return g
