"""RV, modified RV (RV2) and linear CKA between activation matrices.

All three metrics reduce to six trace statistics of the observation Gram
matrices ``XX'`` and ``YY'``.  They can be evaluated either from the Grams
themselves (cost O(n^2 (p + q))) or, using

    tr(XX'YY')  = ||X'Y||_F^2
    tr[(XX')^2] = ||X'X||_F^2
    (XX')_ii    = ||x_i||^2

from p x q cross products (cost O(n p q)), which never builds an n x n array.
"""
from __future__ import annotations

import csv
import io
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .errors import DegenerateInput, ShapeMismatch

logger = logging.getLogger(__name__)

METRICS = ("rv", "rv2", "linear_cka")
Path = Literal["auto", "feature_space", "gram_space"]

# Row block used by the Gram-space path so that n x n Grams are never held whole.
_GRAM_BLOCK_ROWS = 1024
# Relative size below which the off-diagonal Gram mass counts as zero.
_OFFDIAG_RTOL = 64 * np.finfo(np.float64).eps


@dataclass(frozen=True, eq=False)
class DataMatrix:
    """An n_obs x n_feat activation matrix, optionally tagged with a layer name."""

    values: np.ndarray
    label: str | None = None

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise ValueError(f"expected a 2-D matrix, got {v.ndim} dimension(s)")
        if v.shape[0] < 2 or v.shape[1] < 1:
            raise ValueError(f"need n_obs >= 2 and n_feat >= 1, got shape {v.shape}")
        if not np.isfinite(v).all():
            raise ValueError("matrix contains NaN or Inf")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def n_obs(self) -> int:
        return self.values.shape[0]

    @property
    def n_feat(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def __repr__(self):
        return f"DataMatrix(label={self.label!r}, shape={self.shape})"


def as_matrix(m, label: str | None = None) -> DataMatrix:
    if isinstance(m, DataMatrix):
        return m
    return DataMatrix(np.asarray(m), label)


@dataclass(frozen=True)
class CrossStats:
    """Trace statistics of a pair of Gram matrices K = XX', L = YY'.

    ``t_cross`` is tr(KL), ``d_diag`` is sum_i K_ii L_ii, ``sxx``/``syy`` are
    tr(K^2)/tr(L^2) and ``dxx``/``dyy`` the sums of squared diagonal entries.
    """

    t_cross: float
    d_diag: float
    sxx: float
    dxx: float
    syy: float
    dyy: float

    def swapped(self) -> CrossStats:
        return CrossStats(self.t_cross, self.d_diag, self.syy, self.dyy, self.sxx, self.dxx)


def center_columns(m) -> DataMatrix:
    """Subtract each column's mean."""
    m = as_matrix(m)
    return DataMatrix(m.values - m.values.mean(axis=0), m.label)


def _check_rows(x: DataMatrix, y: DataMatrix):
    if x.n_obs != y.n_obs:
        raise ShapeMismatch(
            f"row counts differ: {x.n_obs} (x) vs {y.n_obs} (y)"
        )


def _sumsq(a: np.ndarray) -> float:
    # np.sum reduces contiguous data pairwise, which keeps error at O(log n) eps
    a = np.ascontiguousarray(a).ravel()
    return float(np.sum(a * a))


def _feature_space(x: np.ndarray, y: np.ndarray) -> CrossStats:
    rx = np.sum(x * x, axis=1)
    ry = np.sum(y * y, axis=1)
    return CrossStats(
        t_cross=_sumsq(x.T @ y),
        d_diag=float(np.sum(rx * ry)),
        sxx=_sumsq(x.T @ x),
        dxx=float(np.sum(rx * rx)),
        syy=_sumsq(y.T @ y),
        dyy=float(np.sum(ry * ry)),
    )


def _gram_space(x: np.ndarray, y: np.ndarray) -> CrossStats:
    n = x.shape[0]
    t, sxx, syy = [], [], []
    kd = np.empty(n)
    ld = np.empty(n)
    for start in range(0, n, _GRAM_BLOCK_ROWS):
        stop = min(start + _GRAM_BLOCK_ROWS, n)
        k = x[start:stop] @ x.T
        l = y[start:stop] @ y.T
        t.append(float(np.sum(k * l)))
        sxx.append(_sumsq(k))
        syy.append(_sumsq(l))
        rows = np.arange(stop - start)
        kd[start:stop] = k[rows, rows + start]
        ld[start:stop] = l[rows, rows + start]
    return CrossStats(
        t_cross=float(np.sum(t)),
        d_diag=float(np.sum(kd * ld)),
        sxx=float(np.sum(sxx)),
        dxx=float(np.sum(kd * kd)),
        syy=float(np.sum(syy)),
        dyy=float(np.sum(ld * ld)),
    )


def cross_gram_stats(x, y, path: Path = "auto") -> CrossStats:
    """Compute the six Gram trace statistics for ``x`` and ``y``.

    ``auto`` uses the feature-space identities when n_obs exceeds both
    feature counts and the blocked Gram-space evaluation otherwise.
    """
    x, y = as_matrix(x), as_matrix(y)
    _check_rows(x, y)
    if path == "auto":
        path = "feature_space" if x.n_obs > max(x.n_feat, y.n_feat) else "gram_space"
    if path == "feature_space":
        return _feature_space(x.values, y.values)
    if path == "gram_space":
        return _gram_space(x.values, y.values)
    raise ValueError(f"unknown path {path!r}")


def _order_key(m: DataMatrix):
    v = m.values
    return (m.n_feat, float(v.sum()), float(np.sum(v * v)))


def _symmetric_stats(x: DataMatrix, y: DataMatrix) -> CrossStats:
    """Stats evaluated in a canonical argument order, so metric(x, y) == metric(y, x) bitwise."""
    _check_rows(x, y)
    if x is y:
        return cross_gram_stats(x, y)
    kx, ky = _order_key(x), _order_key(y)
    if kx > ky or (kx == ky and x.values.tobytes() > y.values.tobytes()):
        return cross_gram_stats(y, x).swapped()
    return cross_gram_stats(x, y)


def rv(x, y) -> float:
    """RV coefficient tr(XX'YY') / sqrt(tr[(XX')^2] tr[(YY')^2])."""
    s = _symmetric_stats(as_matrix(x), as_matrix(y))
    denom = s.sxx * s.syy
    if denom <= 0.0:
        raise DegenerateInput("RV undefined: an input matrix is all zeros")
    return float(np.clip(s.t_cross / np.sqrt(denom), 0.0, 1.0))


def rv2(x, y) -> float:
    """Modified RV coefficient: RV with the Gram diagonals deleted."""
    s = _symmetric_stats(as_matrix(x), as_matrix(y))
    off_x = s.sxx - s.dxx
    off_y = s.syy - s.dyy
    if off_x <= _OFFDIAG_RTOL * s.sxx or off_y <= _OFFDIAG_RTOL * s.syy:
        raise DegenerateInput(
            "RV2 undefined: a Gram matrix has no off-diagonal mass "
            "(observations are mutually orthogonal)"
        )
    return float(np.clip((s.t_cross - s.d_diag) / np.sqrt(off_x * off_y), -1.0, 1.0))


def linear_cka(x, y) -> float:
    """Linear CKA, i.e. the RV coefficient of column-centered inputs."""
    x, y = as_matrix(x), as_matrix(y)
    _check_rows(x, y)
    for name, m in (("x", x), ("y", y)):
        if not np.any(m.values != m.values[0]):
            raise DegenerateInput(f"linear CKA undefined: every column of {name} is constant")
    return rv(center_columns(x), center_columns(y))


_METRIC_FUNCS = {"rv": rv, "rv2": rv2, "linear_cka": linear_cka}


def get_metric(metric: str):
    if metric == "cka":
        metric = "linear_cka"
    try:
        return _METRIC_FUNCS[metric]
    except KeyError:
        raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}") from None


@dataclass
class SimilarityMatrix:
    scores: np.ndarray
    row_labels: list[str]
    col_labels: list[str]
    metric: str
    n_degenerate: int = 0

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=np.float64)
        if self.scores.shape != (len(self.row_labels), len(self.col_labels)):
            raise ShapeMismatch(
                f"scores shape {self.scores.shape} does not match "
                f"{len(self.row_labels)} x {len(self.col_labels)} labels"
            )

    @property
    def shape(self):
        return self.scores.shape

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"metric={self.metric}", *self.col_labels])
        for label, row in zip(self.row_labels, self.scores):
            w.writerow([label, *(format_score(v) for v in row)])
        return buf.getvalue()

    def write_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(self.to_csv())

    @classmethod
    def from_csv(cls, text: str) -> SimilarityMatrix:
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or not rows[0] or not rows[0][0].startswith("metric="):
            raise ValueError("similarity CSV must start with a 'metric=<id>' cell")
        metric = rows[0][0][len("metric="):]
        col_labels = rows[0][1:]
        row_labels = [r[0] for r in rows[1:]]
        scores = np.array([[float(v) for v in r[1:]] for r in rows[1:]], dtype=np.float64)
        return cls(scores.reshape(len(row_labels), len(col_labels)), row_labels, col_labels, metric)

    @classmethod
    def read_csv(cls, path) -> SimilarityMatrix:
        with open(path, encoding="utf-8", newline="") as f:
            return cls.from_csv(f.read())


def format_score(v: float) -> str:
    return "nan" if np.isnan(v) else "%.9g" % v


def _layers(s) -> list[DataMatrix]:
    layers = getattr(s, "layers", s)
    return [as_matrix(m, f"layer{i + 1}") for i, m in enumerate(layers)]


def pairwise_similarity(a, b, metric: str = "rv2", *, center: bool = False,
                        jobs: int = 1) -> SimilarityMatrix:
    """Score every layer of ``a`` against every layer of ``b``.

    ``a`` and ``b`` are ActivationSets or plain sequences of matrices.  Cells
    where the metric is undefined are stored as NaN and counted in
    ``n_degenerate``.  ``center`` column-centers inputs first (a no-op for
    linear CKA, which always centers).
    """
    func = get_metric(metric)
    metric = "linear_cka" if metric == "cka" else metric
    la, lb = _layers(a), _layers(b)
    sizes = {m.n_obs for m in la} | {m.n_obs for m in lb}
    if len(sizes) > 1:
        raise ShapeMismatch(f"layers have differing n_obs: {sorted(sizes)}")
    if center and metric != "linear_cka":
        centered = {id(m): center_columns(m) for m in la + lb}
        la = [centered[id(m)] for m in la]
        lb = [centered[id(m)] for m in lb]

    def cell(ij):
        i, j = ij
        try:
            return func(la[i], lb[j])
        except DegenerateInput:
            return np.nan

    cells = [(i, j) for i in range(len(la)) for j in range(len(lb))]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            values = list(pool.map(cell, cells))
    else:
        values = [cell(ij) for ij in cells]
    scores = np.array(values, dtype=np.float64).reshape(len(la), len(lb))
    n_bad = int(np.isnan(scores).sum())
    if n_bad:
        logger.warning("%d of %d cells undefined for %s", n_bad, scores.size, metric)
    return SimilarityMatrix(
        scores,
        [m.label or f"layer{i + 1}" for i, m in enumerate(la)],
        [m.label or f"layer{j + 1}" for j, m in enumerate(lb)],
        metric,
        n_bad,
    )


def argmax_diagonal_offsets(sim: SimilarityMatrix) -> np.ndarray:
    """Column index of each row's maximum minus the row index (NaN rows give NaN)."""
    out = np.full(sim.shape[0], np.nan)
    for i, row in enumerate(sim.scores):
        if not np.all(np.isnan(row)):
            out[i] = int(np.nanargmax(row)) - i
    return out


__all__: Sequence[str] = [
    "DataMatrix", "CrossStats", "SimilarityMatrix", "as_matrix", "center_columns",
    "cross_gram_stats", "rv", "rv2", "linear_cka", "get_metric",
    "pairwise_similarity", "format_score", "argmax_diagonal_offsets", "METRICS",
]
