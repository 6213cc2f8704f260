"""
The command-line pipeline end to end
====================================

Everything the library does is also reachable through subcommands, which
is how a real evaluation run looks: pose files and descriptor files on
disk in, report files out. This script fabricates a small workspace
(two ring scenes, two descriptor methods, correspondence files), then
drives ground-truth -> evaluate -> qualitative -> plotdata through the
same main() the console script uses, printing the artifacts as it goes.

Nothing here touches the library internals except the synthetic data
generators; every result is read back from the files the commands wrote.
"""
import json
import tempfile
import warnings
import zlib
from pathlib import Path

import numpy as np

from pairbench.cli import main
from pairbench.codecs import write_correspondence_file, write_descriptor_file
from pairbench.groundtruth import correspondence_file_path
from pairbench.synthetic import (
    correspondences_for_pose_pair,
    export_scene_colmap,
    make_ring_scene,
    view_direction_descriptors,
)

warnings.filterwarnings("ignore", message=".*outside the target range.*")
root = Path(tempfile.mkdtemp(prefix="cli_demo_"))
manifest_dir = root / "manifests"
corr_dir = root / "correspondences"
out = root / "out"
manifest_dir.mkdir()

# --- fabricate the inputs ----------------------------------------------
rng = np.random.default_rng(3)
scenes = [
    make_ring_scene(scene_id="ring_wide", n_per_subset=12),
    make_ring_scene(scene_id="ring_tight", n_per_subset=12,
                    arc_a=(0.0, 150.0), arc_b=(97.5, 247.5)),
]

for ring in scenes:
    export_scene_colmap(ring.manifest, manifest_dir)

    # Two descriptor methods per scene: one informative, one noisier.
    for tag, noise in (("viewdir", 0.02), ("noisy", 0.6)):
        method_dir = root / "descriptors" / tag
        method_dir.mkdir(parents=True, exist_ok=True)
        for subset in "AB":
            dset = view_direction_descriptors(
                ring.manifest, subset, rng,
                method_tag=tag, dimension=16, noise=noise,
            )
            write_descriptor_file(
                dset, method_dir / f"{ring.manifest.scene_id}_{subset}.vprd"
            )

    # Correspondence files for every pair that plausibly shares content.
    # Pairs looking away from each other get no file, exactly like a
    # matcher that found nothing.
    m = ring.manifest
    from pairbench import view_angle

    for rec_a in m.subset_a:
        for rec_b in m.subset_b:
            if view_angle(m.pose_of(rec_a.image_id), m.pose_of(rec_b.image_id)) > 80.0:
                continue
            corr = correspondences_for_pose_pair(
                np.random.default_rng(zlib.crc32(
                    f"{rec_a.image_id}|{rec_b.image_id}".encode())),
                m.pose_of(rec_a.image_id), m.pose_of(rec_b.image_id),
                m.intrinsics_of(rec_a.image_id), m.intrinsics_of(rec_b.image_id),
                rec_a.image_id, rec_b.image_id, n_points=40,
            )
            path = correspondence_file_path(
                corr_dir, m.scene_id, rec_a.image_id, rec_b.image_id)
            path.parent.mkdir(parents=True, exist_ok=True)
            write_correspondence_file(corr, path)

print("workspace:", root)


def run(*argv):
    print()
    print("$ pairbench", " ".join(argv))
    code = main(list(argv))
    assert code == 0, f"exit code {code}"


# --- ground truth -------------------------------------------------------
# Labels every A x B pair of every scene and caches the result; a second
# identical invocation would be served from the cache.
run("ground-truth",
    "--manifest-dir", str(manifest_dir), "--out", str(out),
    "--correspondences", str(corr_dir), "--seed", "0")

# --- evaluate both methods ----------------------------------------------
# Evaluation consumes the cached labels, so the correspondence directory
# is no longer needed; pointing at a differently-configured cache would
# be refused.
for tag in ("viewdir", "noisy"):
    run("evaluate",
        "--manifest-dir", str(manifest_dir), "--out", str(out),
        "--seed", "0",
        "--descriptors", f"{tag}={root / 'descriptors' / tag}",
        "--k", "1,5,10")

# --- qualitative listing for one scene -----------------------------------
run("qualitative",
    "--manifest-dir", str(manifest_dir), "--out", str(out),
    "--seed", "0",
    "--descriptors", f"viewdir={root / 'descriptors' / 'viewdir'}",
    "--scene", "ring_wide", "--top", "3")

# --- cross-method plot data ----------------------------------------------
run("plotdata", "--out", str(out), "--methods", "viewdir,noisy")

# --- what ended up on disk ------------------------------------------------
print()
print("artifacts under", out)
for path in sorted(out.rglob("*")):
    if path.is_file():
        print(" ", path.relative_to(out))

# The JSON report is the machine-readable artifact; the .md sibling says
# the same thing for humans, and plotdata collates methods per dataset.
report = json.loads((out / "reports" / "evaluate_noisy.json").read_text())
dataset = report["datasets"][0]
print()
print("noisy method on", dataset["dataset_tag"], "->",
      "P@10", round(dataset["p_at_k"]["10"], 3),
      "R@10", round(dataset["r_at_k"]["10"], 3))
print()
print((out / "plots" / "plot_CUSTOM.csv").read_text())
