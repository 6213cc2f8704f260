"""Command-line front end.

Subcommands:

* ``split``         assign images to subsets A and B in manifest files
* ``ground-truth``  label every A x B pair per scene and cache the labels
* ``evaluate``      rank pairs from descriptor files and report metrics
* ``qualitative``   dump the top pairs of one scene with their verdicts
* ``plotdata``      per-dataset CSV of P@10 / R@10 across methods

All artifacts live under one output directory:

    <out>/ground_truth/<scene>.jsonl
    <out>/rankings/<method>/<scene>.jsonl
    <out>/reports/evaluate_<method>.{json,csv,md}
    <out>/qualitative/<method>_<scene>.{json,md}
    <out>/plots/plot_<dataset>.csv

Exit codes: 0 success, 2 configuration error, 3 data integrity error,
4 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ._io import atomic_write_text, safe_file_stem
from .codecs import DescriptorSet, read_descriptor_file
from .errors import ConfigurationError, DataIntegrityError, HarnessError, NumericalError
from .geometry import GeometryConfig
from .groundtruth import (
    GroundTruthMatrix,
    cache_path_for,
    config_fingerprint,
    directory_correspondence_lookup,
    load_or_compute_scene,
    read_ground_truth_cache,
)
from .metrics import aggregate_dataset, compute_scene_metrics
from .reports import (
    qualitative_listing,
    render_datasets_csv,
    render_plotdata_csv,
    render_qualitative_json,
    render_qualitative_markdown,
    render_report_json,
    render_report_markdown,
    render_scenes_csv,
)
from .retrieval import top_k_pairs, write_ranking_dump
from .scene import (
    ContiguousHalves,
    ExplicitRanges,
    SceneManifest,
    load_manifest,
    load_manifest_dir,
    split_scene,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INTEGRITY = 3
EXIT_NUMERICAL = 4

FORMATS = ("csv", "json", "markdown")


# ---------------------------------------------------------------------------
# Flag parsing helpers


def _parse_k_list(text: str) -> tuple[int, ...]:
    try:
        values = sorted({int(part) for part in text.split(",") if part.strip()})
    except ValueError:
        raise ConfigurationError(f"--k expects comma-separated integers, got {text!r}")
    if not values or values[0] < 1:
        raise ConfigurationError(f"--k values must be >= 1, got {text!r}")
    return tuple(values)


def _parse_formats(text: str) -> tuple[str, ...]:
    requested = [part.strip() for part in text.split(",") if part.strip()]
    unknown = [f for f in requested if f not in FORMATS]
    if unknown or not requested:
        raise ConfigurationError(
            f"--format accepts a subset of {','.join(FORMATS)}, got {text!r}"
        )
    return tuple(dict.fromkeys(requested))


def _parse_seed(text: str) -> int:
    try:
        seed = int(text)
    except ValueError:
        raise ConfigurationError(f"--seed must be an integer, got {text!r}")
    if not (0 <= seed < 2**64):
        raise ConfigurationError(f"--seed must fit in an unsigned 64-bit value, got {seed}")
    return seed


def _parse_descriptor_specs(specs: list[str] | None) -> dict[str, Path]:
    if not specs:
        raise ConfigurationError(
            "at least one --descriptors <method_tag>=<dir> is required"
        )
    table: dict[str, Path] = {}
    for spec in specs:
        tag, sep, directory = spec.partition("=")
        if not sep or not tag or not directory:
            raise ConfigurationError(
                f"--descriptors expects <method_tag>=<dir>, got {spec!r}"
            )
        if tag in table:
            raise ConfigurationError(f"method tag {tag!r} given twice")
        table[tag] = Path(directory)
    return table


def _parse_ranges(text: str, flag: str) -> tuple[tuple[int, int], ...]:
    ranges = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        lo, sep, hi = chunk.partition("-")
        try:
            lo_i = int(lo)
            hi_i = int(hi) if sep else lo_i
        except ValueError:
            raise ConfigurationError(
                f"{flag} expects comma-separated index ranges like 0-29, got {text!r}"
            )
        ranges.append((lo_i, hi_i))
    if not ranges:
        raise ConfigurationError(f"{flag} is empty")
    return tuple(ranges)


def _geometry_config(args: argparse.Namespace) -> GeometryConfig:
    return GeometryConfig(
        tau_view_deg=args.tau_view,
        tau_dev_deg=args.tau_dev,
        tau_in=args.tau_in,
        ransac_max_iters=args.ransac_iters,
    )


# ---------------------------------------------------------------------------
# Shared pipeline pieces


def _gt_dir(out: Path) -> Path:
    return out / "ground_truth"


def _load_ground_truth(
    manifest: SceneManifest, out: Path, config: GeometryConfig, seed: int
) -> GroundTruthMatrix:
    path = cache_path_for(_gt_dir(out), manifest.scene_id)
    if not path.exists():
        raise ConfigurationError(
            f"no ground-truth cache for scene {manifest.scene_id!r} under {path.parent}; "
            f"run the ground-truth subcommand first"
        )
    gt = read_ground_truth_cache(path)
    wanted = config_fingerprint(config, seed)
    if gt.fingerprint != wanted:
        raise ConfigurationError(
            f"{path}: ground truth was built with a different configuration "
            f"(fingerprint {gt.fingerprint[:12]}.. vs expected {wanted[:12]}..); "
            f"re-run the ground-truth subcommand with the current flags"
        )
    ids_a = tuple(r.image_id for r in manifest.subset_a)
    ids_b = tuple(r.image_id for r in manifest.subset_b)
    if gt.ids_a != ids_a or gt.ids_b != ids_b:
        raise DataIntegrityError(
            f"{path}: cached subsets disagree with the manifest for scene "
            f"{manifest.scene_id!r}; re-run the ground-truth subcommand"
        )
    return gt


def _load_descriptors(
    directory: Path, manifest: SceneManifest, method_tag: str
) -> tuple[DescriptorSet, DescriptorSet]:
    stem = safe_file_stem(manifest.scene_id)
    sets = []
    for subset, records in (("A", manifest.subset_a), ("B", manifest.subset_b)):
        path = directory / f"{stem}_{subset}.vprd"
        if not path.exists():
            raise ConfigurationError(
                f"descriptor file {path} not found for method {method_tag!r}"
            )
        dset = read_descriptor_file(path)
        if dset.subset != subset:
            raise DataIntegrityError(
                f"{path}: file claims subset {dset.subset!r}, expected {subset!r}"
            )
        if dset.method_tag != method_tag:
            raise DataIntegrityError(
                f"{path}: file claims method {dset.method_tag!r}, expected {method_tag!r}"
            )
        expected = tuple(r.image_id for r in records)
        if dset.image_ids != expected:
            extra = sorted(set(dset.image_ids) - set(expected))[:10]
            missing = sorted(set(expected) - set(dset.image_ids))[:10]
            raise DataIntegrityError(
                f"{path}: image ids disagree with the manifest "
                f"(unexpected: {extra}, missing: {missing}; order must match too)"
            )
        sets.append(dset)
    return sets[0], sets[1]


# ---------------------------------------------------------------------------
# Subcommands


def cmd_split(args: argparse.Namespace) -> int:
    in_dir = Path(args.manifest_dir)
    out_dir = Path(args.out)
    if not in_dir.is_dir():
        raise ConfigurationError(f"manifest directory {in_dir} does not exist")
    paths = sorted(in_dir.glob("*.json"))
    if not paths:
        raise ConfigurationError(f"no manifest files (*.json) under {in_dir}")

    if (args.ranges_a is None) != (args.ranges_b is None):
        raise ConfigurationError("--ranges-a and --ranges-b must be given together")
    if args.ranges_a is not None:
        policy = ExplicitRanges(
            _parse_ranges(args.ranges_a, "--ranges-a"),
            _parse_ranges(args.ranges_b, "--ranges-b"),
        )
    else:
        policy = ContiguousHalves(cap=args.cap)

    out_dir.mkdir(parents=True, exist_ok=True)
    for path in paths:
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"cannot read manifest {path}: {exc}") from exc
        images = doc.get("images")
        if not isinstance(images, list):
            raise ConfigurationError(f"{path}: manifest has no image list")
        idx_a, idx_b = split_scene(list(range(len(images))), policy)
        chosen_a, chosen_b = set(idx_a), set(idx_b)
        rewritten = []
        for i, entry in enumerate(images):
            if i in chosen_a:
                entry = dict(entry, subset="A")
            elif i in chosen_b:
                entry = dict(entry, subset="B")
            else:
                continue  # dropped by the subset cap
            rewritten.append(entry)
        doc["images"] = rewritten
        # Pose source paths are relative to the manifest's directory, so
        # they must be re-anchored when the split is written elsewhere.
        if out_dir.resolve() != in_dir.resolve() and isinstance(doc.get("pose_source"), dict):
            for key, value in list(doc["pose_source"].items()):
                if key.endswith("_path") and not Path(str(value)).is_absolute():
                    doc["pose_source"][key] = str((in_dir / str(value)).resolve())
        out_path = out_dir / path.name
        atomic_write_text(out_path, json.dumps(doc, indent=2, sort_keys=True) + "\n")
        manifest = load_manifest(out_path)
        print(
            f"{manifest.scene_id}: |A| = {len(manifest.subset_a)}, "
            f"|B| = {len(manifest.subset_b)} -> {out_path}"
        )
    return EXIT_OK


def cmd_ground_truth(args: argparse.Namespace) -> int:
    config = _geometry_config(args)
    seed = args.seed
    out = Path(args.out)
    manifests = load_manifest_dir(args.manifest_dir)
    if args.correspondences is None:
        print(
            "warning: no --correspondences directory given; every pair will be "
            "labeled INSUFFICIENT_MATCHES",
            file=sys.stderr,
        )
    _gt_dir(out).mkdir(parents=True, exist_ok=True)
    print(f"config fingerprint: {config_fingerprint(config, seed)}")
    for manifest in manifests:
        lookup = None
        if args.correspondences is not None:
            lookup = directory_correspondence_lookup(args.correspondences, manifest.scene_id)
        matrix, cached = load_or_compute_scene(manifest, lookup, config, seed, _gt_dir(out))
        counts = {k: v for k, v in matrix.status_counts().items() if v}
        origin = "cache" if cached else "computed"
        print(f"{manifest.scene_id} ({origin}): {counts}")
    return EXIT_OK


def _write_reports(
    out: Path,
    method_tag: str,
    config: GeometryConfig,
    seed: int,
    k_values: tuple[int, ...],
    formats: tuple[str, ...],
    datasets,
    scenes,
) -> list[Path]:
    reports_dir = out / "reports"
    reports_dir.mkdir(parents=True, exist_ok=True)
    stem = f"evaluate_{safe_file_stem(method_tag)}"
    written = []
    if "json" in formats:
        path = reports_dir / f"{stem}.json"
        atomic_write_text(
            path, render_report_json(method_tag, config, seed, k_values, datasets, scenes)
        )
        written.append(path)
    if "csv" in formats:
        path = reports_dir / f"{stem}_datasets.csv"
        atomic_write_text(path, render_datasets_csv(datasets, k_values))
        written.append(path)
        path = reports_dir / f"{stem}_scenes.csv"
        atomic_write_text(path, render_scenes_csv(scenes, k_values))
        written.append(path)
    if "markdown" in formats:
        path = reports_dir / f"{stem}.md"
        atomic_write_text(
            path, render_report_markdown(method_tag, datasets, scenes, k_values)
        )
        written.append(path)
    return written


def cmd_evaluate(args: argparse.Namespace) -> int:
    config = _geometry_config(args)
    seed = args.seed
    k_values = args.k
    formats = args.format
    out = Path(args.out)
    methods = _parse_descriptor_specs(args.descriptors)
    manifests = load_manifest_dir(args.manifest_dir)

    for method_tag, desc_dir in methods.items():
        scenes = []
        for manifest in manifests:
            gt = _load_ground_truth(manifest, out, config, seed)
            desc_a, desc_b = _load_descriptors(desc_dir, manifest, method_tag)
            total_pairs = desc_a.count * desc_b.count
            if k_values[-1] > total_pairs:
                raise ConfigurationError(
                    f"scene {manifest.scene_id!r} has only {total_pairs} pairs, "
                    f"cannot evaluate at k={k_values[-1]}"
                )
            ranking = top_k_pairs(desc_a, desc_b, k_values[-1], manifest.scene_id)
            dump_dir = out / "rankings" / safe_file_stem(method_tag)
            dump_dir.mkdir(parents=True, exist_ok=True)
            write_ranking_dump(
                ranking,
                [r.image_id for r in manifest.subset_a],
                [r.image_id for r in manifest.subset_b],
                dump_dir / f"{safe_file_stem(manifest.scene_id)}.jsonl",
            )
            scenes.append((manifest.dataset_tag, compute_scene_metrics(ranking, gt, k_values)))

        datasets = []
        for tag in sorted({tag for tag, _ in scenes}):
            members = [sm for t, sm in scenes if t == tag]
            datasets.append(aggregate_dataset(members, tag, method_tag))

        written = _write_reports(
            out, method_tag, config, seed, k_values, formats, datasets, scenes
        )
        print(f"method {method_tag}: {len(scenes)} scenes, {len(datasets)} datasets")
        print(render_datasets_csv(datasets, k_values), end="")
        for path in written:
            print(f"  wrote {path}")
    return EXIT_OK


def cmd_qualitative(args: argparse.Namespace) -> int:
    config = _geometry_config(args)
    out = Path(args.out)
    methods = _parse_descriptor_specs(args.descriptors)
    if len(methods) != 1:
        raise ConfigurationError("qualitative takes exactly one --descriptors entry")
    (method_tag, desc_dir), = methods.items()
    manifests = load_manifest_dir(args.manifest_dir)
    by_id = {m.scene_id: m for m in manifests}
    if args.scene not in by_id:
        raise ConfigurationError(
            f"unknown scene {args.scene!r}; manifests define {sorted(by_id)}"
        )
    manifest = by_id[args.scene]
    gt = _load_ground_truth(manifest, out, config, args.seed)
    desc_a, desc_b = _load_descriptors(desc_dir, manifest, method_tag)
    total_pairs = desc_a.count * desc_b.count
    if args.top > total_pairs:
        raise ConfigurationError(
            f"scene {manifest.scene_id!r} has only {total_pairs} pairs, "
            f"cannot list top {args.top}"
        )
    ranking = top_k_pairs(desc_a, desc_b, args.top, manifest.scene_id)
    rows = qualitative_listing(manifest, ranking, gt, args.top)

    qual_dir = out / "qualitative"
    qual_dir.mkdir(parents=True, exist_ok=True)
    stem = f"{safe_file_stem(method_tag)}_{safe_file_stem(manifest.scene_id)}"
    markdown = render_qualitative_markdown(manifest.scene_id, method_tag, rows)
    atomic_write_text(
        qual_dir / f"{stem}.json",
        render_qualitative_json(manifest.scene_id, method_tag, rows),
    )
    atomic_write_text(qual_dir / f"{stem}.md", markdown)
    print(markdown, end="")
    return EXIT_OK


def cmd_plotdata(args: argparse.Namespace) -> int:
    out = Path(args.out)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    if not methods:
        raise ConfigurationError("--methods must name at least one evaluated method")
    per_dataset: dict[str, list[tuple[str, float, float]]] = {}
    for method_tag in methods:
        path = out / "reports" / f"evaluate_{safe_file_stem(method_tag)}.json"
        if not path.exists():
            raise ConfigurationError(
                f"no evaluation report for method {method_tag!r} at {path}; "
                f"run the evaluate subcommand for it first"
            )
        doc = json.loads(path.read_text(encoding="utf-8"))
        for dataset in doc["datasets"]:
            p = dataset["p_at_k"].get("10")
            r = dataset["r_at_k"].get("10")
            if p is None or r is None:
                raise ConfigurationError(
                    f"{path}: method {method_tag!r} was not evaluated at k=10"
                )
            per_dataset.setdefault(dataset["dataset_tag"], []).append((method_tag, p, r))

    plots_dir = out / "plots"
    plots_dir.mkdir(parents=True, exist_ok=True)
    for tag in sorted(per_dataset):
        path = plots_dir / f"plot_{safe_file_stem(tag)}.csv"
        atomic_write_text(path, render_plotdata_csv(per_dataset[tag]))
        print(f"wrote {path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser assembly


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pairbench",
        description="Image pair retrieval evaluation with geometric ground truth.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser, manifests: bool = True) -> None:
        if manifests:
            p.add_argument("--manifest-dir", required=True, help="directory of scene manifests")
        p.add_argument("--out", required=True, help="output directory for all artifacts")

    def add_geometry(p: argparse.ArgumentParser) -> None:
        p.add_argument("--tau-view", type=float, default=75.0, help="view angle threshold, degrees")
        p.add_argument("--tau-dev", type=float, default=10.0, help="rotation deviation threshold, degrees")
        p.add_argument("--tau-in", type=float, default=0.25, help="inlier threshold, pixels")
        p.add_argument("--ransac-iters", type=int, default=1000, help="RANSAC iteration cap")
        p.add_argument("--seed", type=_parse_seed, default=0, help="base seed (u64)")

    p = sub.add_parser("split", help="assign images to subsets A and B")
    add_common(p)
    p.add_argument("--cap", type=int, default=None, help="per-subset size cap for halves splitting")
    p.add_argument("--ranges-a", default=None, help="explicit index ranges for A, e.g. 0-29")
    p.add_argument("--ranges-b", default=None, help="explicit index ranges for B, e.g. 30-59")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("ground-truth", help="label all pairs and cache the labels")
    add_common(p)
    add_geometry(p)
    p.add_argument("--correspondences", default=None, help="directory of correspondence files")
    p.set_defaults(func=cmd_ground_truth)

    p = sub.add_parser("evaluate", help="rank pairs and report metrics")
    add_common(p)
    add_geometry(p)
    p.add_argument(
        "--descriptors",
        action="append",
        metavar="TAG=DIR",
        help="method tag and its descriptor-file directory (repeatable)",
    )
    p.add_argument("--k", type=_parse_k_list, default=(1, 5, 10), help="retrieval set sizes")
    p.add_argument("--format", type=_parse_formats, default=FORMATS, help="report formats")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("qualitative", help="top pairs of one scene with verdicts")
    add_common(p)
    add_geometry(p)
    p.add_argument("--descriptors", action="append", metavar="TAG=DIR")
    p.add_argument("--scene", required=True, help="scene_id to inspect")
    p.add_argument("--top", type=int, default=5, help="number of pairs to list")
    p.set_defaults(func=cmd_qualitative)

    p = sub.add_parser("plotdata", help="per-dataset P@10 / R@10 CSV across methods")
    add_common(p, manifests=False)
    p.add_argument("--methods", required=True, help="comma-separated evaluated method tags")
    p.set_defaults(func=cmd_plotdata)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        # Flag value parsers raise ConfigurationError, so parse_args belongs
        # inside the handler; argparse's own usage failures still SystemExit.
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataIntegrityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTEGRITY
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except HarnessError as exc:  # base-class fallback, treated as configuration
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
