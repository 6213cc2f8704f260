"""Report rendering: canonical JSON plus CSV and markdown display tables.

The JSON report is the authoritative artifact and stores metric values at
full float precision. CSV and markdown mirror the familiar evaluation
table layout (P@k, R@k, mAP@k columns, then timing) with percentages
rounded to two decimals for display only.
"""
from __future__ import annotations

import csv
import io
import json
from typing import Mapping, Sequence

from .errors import ConfigurationError
from .geometry import GeometryConfig
from .groundtruth import GroundTruthMatrix, config_fingerprint
from .metrics import DatasetMetrics, SceneMetrics
from .retrieval import PairRanking
from .scene import SceneManifest

REPORT_KIND = "pair-retrieval-evaluation"

# Ranking wall time only; descriptor extraction happens upstream of this
# harness and never contributes to mu_t / sigma_t.
TIMING_SCOPE = "ranking_only"


def _percent(value: float | None) -> str:
    return "n/a" if value is None else f"{100.0 * value:.2f}"


def _seconds(value: float) -> str:
    return f"{value:.4f}"


def _metric_columns(k_values: Sequence[int]) -> list[tuple[str, str, int]]:
    """Display column plan: (header, metric family, k).

    mAP@1 is omitted from display because it always equals R@1; the JSON
    report still carries it.
    """
    cols = [(f"P@{k}", "p", k) for k in k_values]
    cols += [(f"R@{k}", "r", k) for k in k_values]
    cols += [(f"mAP@{k}", "map", k) for k in k_values if k != 1]
    return cols


def _metric_value(
    family: str, k: int, p: Mapping[int, float], r: Mapping[int, float], ap: Mapping[int, float | None]
) -> float | None:
    return {"p": p, "r": r, "map": ap}[family][k]


# ---------------------------------------------------------------------------
# Canonical JSON


def _k_map(values: Mapping[int, float | None]) -> dict[str, float | None]:
    return {str(k): values[k] for k in sorted(values)}


def scene_metrics_to_dict(scene: SceneMetrics, dataset_tag: str) -> dict:
    return {
        "scene_id": scene.scene_id,
        "dataset_tag": dataset_tag,
        "p_at_k": _k_map(scene.p_at_k),
        "r_at_k": _k_map(scene.r_at_k),
        "ap_at_k": _k_map(scene.ap_at_k),
        "total_positives": scene.total_positives,
        "ap_excluded": scene.ap_excluded,
        "elapsed_seconds": scene.elapsed_seconds,
    }


def dataset_metrics_to_dict(dataset: DatasetMetrics) -> dict:
    return {
        "dataset_tag": dataset.dataset_tag,
        "method_tag": dataset.method_tag,
        "scene_count": dataset.scene_count,
        "ap_included_count": dataset.ap_included_count,
        "ap_excluded_count": dataset.ap_excluded_count,
        "p_at_k": _k_map(dataset.p_at_k),
        "r_at_k": _k_map(dataset.r_at_k),
        "map_at_k": _k_map(dataset.map_at_k),
        "mu_t": dataset.mu_t,
        "sigma_t": dataset.sigma_t,
    }


def render_report_json(
    method_tag: str,
    config: GeometryConfig,
    seed: int,
    k_values: Sequence[int],
    datasets: Sequence[DatasetMetrics],
    scenes: Sequence[tuple[str, SceneMetrics]],
) -> str:
    """Full-precision report document. ``scenes`` pairs each SceneMetrics
    with its dataset_tag."""
    doc = {
        "kind": REPORT_KIND,
        "method_tag": method_tag,
        "k_values": [int(k) for k in k_values],
        "timing_scope": TIMING_SCOPE,
        "config": {
            "tau_view_deg": config.tau_view_deg,
            "tau_dev_deg": config.tau_dev_deg,
            "tau_in": config.tau_in,
            "ransac_max_iters": config.ransac_max_iters,
            "ransac_confidence": config.ransac_confidence,
            "min_correspondences": config.min_correspondences,
            "seed": seed,
            "ground_truth_fingerprint": config_fingerprint(config, seed),
        },
        "datasets": [dataset_metrics_to_dict(d) for d in datasets],
        "scenes": [scene_metrics_to_dict(s, tag) for tag, s in scenes],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# CSV display


def render_datasets_csv(datasets: Sequence[DatasetMetrics], k_values: Sequence[int]) -> str:
    cols = _metric_columns(k_values)
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(
        ["method", "dataset", "scenes", "ap_excluded"]
        + [h for h, _, _ in cols]
        + ["mu_t_s", "sigma_t_s"]
    )
    for d in datasets:
        row = [d.method_tag, d.dataset_tag, d.scene_count, d.ap_excluded_count]
        row += [
            _percent(_metric_value(fam, k, d.p_at_k, d.r_at_k, d.map_at_k))
            for _, fam, k in cols
        ]
        row += [_seconds(d.mu_t), _seconds(d.sigma_t)]
        writer.writerow(row)
    return out.getvalue()


def render_scenes_csv(
    scenes: Sequence[tuple[str, SceneMetrics]], k_values: Sequence[int]
) -> str:
    cols = _metric_columns(k_values)
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(
        ["scene", "dataset", "positives", "ap_excluded"]
        + [h for h, _, _ in cols]
        + ["elapsed_s"]
    )
    for tag, s in scenes:
        row = [s.scene_id, tag, s.total_positives, "yes" if s.ap_excluded else "no"]
        row += [
            _percent(_metric_value(fam, k, s.p_at_k, s.r_at_k, s.ap_at_k))
            for _, fam, k in cols
        ]
        row.append(_seconds(s.elapsed_seconds))
        writer.writerow(row)
    return out.getvalue()


# ---------------------------------------------------------------------------
# Markdown display


def _markdown_table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    lines = ["| " + " | ".join(header) + " |"]
    lines.append("|" + "|".join(" --- " for _ in header) + "|")
    for row in rows:
        lines.append("| " + " | ".join(str(c) for c in row) + " |")
    return "\n".join(lines) + "\n"


def render_report_markdown(
    method_tag: str,
    datasets: Sequence[DatasetMetrics],
    scenes: Sequence[tuple[str, SceneMetrics]],
    k_values: Sequence[int],
) -> str:
    cols = _metric_columns(k_values)
    parts = [f"# Pair retrieval evaluation: {method_tag}\n"]
    parts.append("Metric values are percentages; times are seconds (ranking only).\n")

    header = ["dataset", "scenes", "ap-excluded"] + [h for h, _, _ in cols] + ["mu_t", "sigma_t"]
    rows = []
    for d in datasets:
        row = [d.dataset_tag, d.scene_count, d.ap_excluded_count]
        row += [
            _percent(_metric_value(fam, k, d.p_at_k, d.r_at_k, d.map_at_k))
            for _, fam, k in cols
        ]
        row += [_seconds(d.mu_t), _seconds(d.sigma_t)]
        rows.append(row)
    parts.append("## Datasets\n")
    parts.append(_markdown_table(header, rows))

    header = ["scene", "dataset", "positives"] + [h for h, _, _ in cols] + ["elapsed"]
    rows = []
    for tag, s in scenes:
        row = [s.scene_id, tag, s.total_positives]
        row += [
            _percent(_metric_value(fam, k, s.p_at_k, s.r_at_k, s.ap_at_k))
            for _, fam, k in cols
        ]
        row.append(_seconds(s.elapsed_seconds))
        rows.append(row)
    parts.append("\n## Scenes\n")
    parts.append(_markdown_table(header, rows))
    return "\n".join(parts)


# ---------------------------------------------------------------------------
# Qualitative listing (top-k pairs with ground-truth verdicts)


def qualitative_listing(
    manifest: SceneManifest,
    ranking: PairRanking,
    gt: GroundTruthMatrix,
    k: int,
) -> list[dict]:
    if k < 1 or k > len(ranking.entries):
        raise ConfigurationError(
            f"k must be within [1, {len(ranking.entries)}], got {k}"
        )
    paths = {r.image_id: r.file_path for r in manifest.images}
    rows = []
    for rank, (i, j, sim) in enumerate(ranking.entries[:k], start=1):
        label = gt.label_at(i, j)
        rows.append(
            {
                "rank": rank,
                "image_id_a": label.image_id_a,
                "file_path_a": paths[label.image_id_a],
                "image_id_b": label.image_id_b,
                "file_path_b": paths[label.image_id_b],
                "similarity": sim,
                "status": label.status.value,
                "is_match": label.is_match,
            }
        )
    return rows


def render_qualitative_json(scene_id: str, method_tag: str, rows: Sequence[dict]) -> str:
    doc = {"scene_id": scene_id, "method_tag": method_tag, "pairs": list(rows)}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def render_qualitative_markdown(
    scene_id: str, method_tag: str, rows: Sequence[dict]
) -> str:
    header = ["rank", "query (A)", "retrieved (B)", "similarity", "ground truth"]
    body = [
        [
            row["rank"],
            row["file_path_a"],
            row["file_path_b"],
            f"{row['similarity']:.4f}",
            ("MATCH" if row["is_match"] else "no match") + f" ({row['status']})",
        ]
        for row in rows
    ]
    title = f"# Top-{len(body)} pairs, scene {scene_id}, method {method_tag}\n"
    return title + "\n" + _markdown_table(header, body)


# ---------------------------------------------------------------------------
# Plot data (per-dataset method comparison)


def render_plotdata_csv(rows: Sequence[tuple[str, float, float]]) -> str:
    """CSV of (method_tag, p_at_10, r_at_10), full precision."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["method_tag", "p_at_10", "r_at_10"])
    for method_tag, p10, r10 in rows:
        writer.writerow([method_tag, repr(float(p10)), repr(float(r10))])
    return out.getvalue()
