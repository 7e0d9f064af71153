"""End-to-end demo: train a suite, compare layers, render heatmaps, write a report."""
from __future__ import annotations

import logging
import math
import traceback
from pathlib import Path

import numpy as np

from .experiments import Lab, ExperimentConfig, SUITES, run_experiment
from .heatmap import HeatmapStyle, write_heatmap_svg
from .metrics import SimilarityMatrix, argmax_diagonal_offsets, format_score, pairwise_similarity

logger = logging.getLogger(__name__)

FAILED_MARKER = "STAGE_FAILED"


class StageFailed(RuntimeError):
    def __init__(self, stage, cause):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage


def hypothesis_matrix(n_layers: int, n_random: int, labels=None) -> SimilarityMatrix:
    """Idealized random-net vs standard similarity if trained layers shared the work evenly.

    Random layers count as projections of the input (depth 0); trained layer
    ``i > n_random`` is placed at standard depth ``(i - n) * L / (L - n)``.
    """
    labels = labels or [f"l{i}" for i in range(1, n_layers + 1)]
    scores = np.zeros((n_layers, n_layers))
    for i in range(1, n_layers + 1):
        depth = 0.0 if i <= n_random else (i - n_random) * n_layers / (n_layers - n_random)
        for j in range(1, n_layers + 1):
            scores[i - 1, j - 1] = max(0.0, 1.0 - abs(depth - j) / 2.0)
    return SimilarityMatrix(scores, list(labels), list(labels), "hypothesis")


def diagonal_stats(sim: SimilarityMatrix) -> dict:
    off = argmax_diagonal_offsets(sim)
    ok = off[~np.isnan(off)]
    return {
        "mean_abs_offset": float(np.mean(np.abs(ok))) if ok.size else math.nan,
        "within_1": float(np.mean(np.abs(ok) <= 1)) if ok.size else math.nan,
        "offsets": off,
    }


def _comparisons(suite, result, L):
    s = result.sets
    if suite == "untrained_vs_trained":
        return [
            ("untrained_vs_untrained", s["untrained"], s["untrained"]),
            ("untrained_vs_standard_a", s["untrained"], s["standard_a"]),
            ("untrained_vs_transfer_freeze", s["untrained"], s["transfer_freeze_b_to_a"]),
        ]
    if suite == "transfer_freeze":
        return [
            ("standard_a_vs_standard_b", s["standard_a"], s["standard_b"]),
            ("transfer_freeze_vs_standard_b", s["transfer_freeze_b_to_a"], s["standard_b"]),
            ("transfer_freeze_vs_standard_a", s["transfer_freeze_b_to_a"], s["standard_a"]),
        ]
    pairs = [("standard_a_vs_standard_a", s["standard_a"], s["standard_a"])]
    pairs += [(f"random_{n}_vs_standard_a", s[f"random_{n}"], s["standard_a"]) for n in range(1, L)]
    return pairs


def _table(header, rows):
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    lines += ["| " + " | ".join(str(c) for c in row) + " |" for row in rows]
    return lines


def _report(suite, result, sims, metric):
    L = result.config.spec.n_layers
    names = result.config.spec.layer_names
    lines = [f"# Demo report: {suite}", "", f"metric: {metric}", f"probe set: {result.config.probe_id}", ""]

    lines += ["## Top-1 accuracy", ""]
    lines += _table(["network", "recipe", "top1"],
                    [(n.name, n.recipe.variant, f"{n.top1:.4f}") for n in result.networks.values()])
    lines.append("")

    lines += ["## Row argmax distance to diagonal", ""]
    rows = []
    for name, sim in sims.items():
        if sim.metric == "hypothesis":
            continue
        st = diagonal_stats(sim)
        offs = " ".join("nan" if np.isnan(o) else f"{int(o):+d}" for o in st["offsets"])
        rows.append((name, f"{st['mean_abs_offset']:.3f}", f"{st['within_1']:.3f}", offs))
    lines += _table(["comparison", "mean abs offset", "fraction within 1", "offsets"], rows)
    lines.append("")

    cross = {k: v for k, v in sims.items() if v.metric != "hypothesis" and not _is_self(k)}
    if cross:
        diag = np.array([np.diag(sim.scores) for sim in cross.values()])
        worst = int(np.nanargmin(np.nanmean(diag, axis=0)))
        lines += ["## Largest cross-network dissimilarity", ""]
        lines.append(f"layer with the lowest mean corresponding-layer similarity: {names[worst]} "
                     f"(mean {format_score(float(np.nanmean(diag[:, worst])))})")
        for k, sim in cross.items():
            j = int(np.nanargmin(np.diag(sim.scores)))
            lines.append(f"- {k}: least similar corresponding layer {names[j]} "
                         f"({format_score(sim.scores[j, j])})")
        lines.append("")

    if suite == "transfer_freeze":
        src = sims["transfer_freeze_vs_standard_b"].scores
        tgt = sims["transfer_freeze_vs_standard_a"].scores
        lines += ["## Transfer-freeze early layers: source vs target", ""]
        rows = []
        for i in range(math.ceil(L / 2)):
            verdict = "source" if src[i, i] > tgt[i, i] else "target"
            rows.append((names[i], format_score(src[i, i]), format_score(tgt[i, i]), verdict))
        lines += _table(["layer", f"{metric}(transfer, source)", f"{metric}(transfer, target)", "closer to"], rows)
        lines.append("")

    if suite == "random_features":
        lines += ["## Accuracy vs number of random layers", ""]
        rows = [(0, f"{result.networks['standard_a'].top1:.4f}")]
        rows += [(n, f"{result.networks[f'random_{n}'].top1:.4f}") for n in range(1, L)]
        lines += _table(["n random layers", "top1"], rows)
        lines.append("")
    return "\n".join(lines) + "\n"


def _is_self(name):
    a, _, b = name.partition("_vs_")
    return a == b


def run_demo(suite: str, out_dir, *, config: ExperimentConfig | None = None, metric="rv2",
             center=False, jobs=1, value_range=(0.0, 1.0)) -> dict:
    """Run one suite end to end; returns the similarity matrices by name.

    On failure a ``STAGE_FAILED`` file naming the stage is left in
    ``out_dir`` next to whatever was already written.
    """
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; expected one of {SUITES}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    marker = out_dir / FAILED_MARKER
    if marker.exists():
        marker.unlink()
    stage = "simulate"
    try:
        lab = Lab(config)
        result = run_experiment(suite, out_dir / "networks", lab=lab)
        L = lab.spec.n_layers

        stage = "compare"
        sims = {name: pairwise_similarity(a, b, metric, center=center, jobs=jobs)
                for name, a, b in _comparisons(suite, result, L)}
        if suite == "random_features":
            for n in range(1, L):
                sims[f"hypothesis_{n}"] = hypothesis_matrix(L, n, lab.spec.layer_names)

        stage = "render"
        sim_dir = out_dir / "similarity"
        sim_dir.mkdir(exist_ok=True)
        for name, sim in sims.items():
            sim.write_csv(sim_dir / f"{name}.csv")
            style = HeatmapStyle(value_range=(0.0, 1.0) if sim.metric == "hypothesis" else value_range,
                                 title=name)
            write_heatmap_svg(sim_dir / f"{name}.svg", sim, style)

        stage = "report"
        (out_dir / "report.md").write_text(_report(suite, result, sims, metric), encoding="utf-8")
    except Exception as e:
        marker.write_text(f"{stage}\n{traceback.format_exc()}", encoding="utf-8")
        raise StageFailed(stage, e) from e
    return sims
