"""
Scenes, pose files, and subset splits
=====================================

A scene enters the harness as a manifest JSON pointing at a pose file in
one of the supported reconstruction formats. This script builds a small
synthetic ring of cameras, writes it out in the COLMAP text layout,
loads it back through the manifest reader, and then shows the two split
policies that partition an ordered image list into subsets A and B.
"""
import json
import tempfile
from pathlib import Path

import numpy as np

from pairbench import (
    ContiguousHalves,
    ExplicitRanges,
    load_manifest,
    split_scene,
    view_angle,
)
from pairbench.synthetic import export_scene_colmap, make_ring_scene

workdir = Path(tempfile.mkdtemp(prefix="scenes_demo_"))

# Twelve cameras per subset on one circle, all looking at the center.
# The two arcs overlap, so some A-B pairs see the same content and some
# face nearly opposite directions. Subsets this small sit below the
# recommended 30-60 range; the scene constructor warns about that but
# carries on, which is the right behavior for a toy example, so the
# warning is silenced for the whole script.
import warnings

warnings.filterwarnings("ignore", message=".*outside the target range.*")

ring = make_ring_scene(scene_id="ring_demo", n_per_subset=12)
manifest_path = export_scene_colmap(ring.manifest, workdir)
print("wrote", manifest_path)

# The export produced three files: the manifest itself plus the COLMAP
# images.txt / cameras.txt pair it points at.
doc = json.loads(manifest_path.read_text())
print("pose source:", doc["pose_source"]["kind"])
for key in ("images_path", "cameras_path"):
    print(" ", key, "->", doc["pose_source"][key])

# Loading resolves every image to a pose and intrinsics. COLMAP stores
# world-to-camera quaternions; the reader converts and re-orthonormalizes.
manifest = load_manifest(manifest_path)
print()
print(f"scene {manifest.scene_id}: {len(manifest.images)} images,",
      f"{len(manifest.subset_a)} in A, {len(manifest.subset_b)} in B")

first = manifest.images[0]
pose = manifest.pose_of(first.image_id)
print("first image:", first.image_id, "subset", first.subset)
print("rotation row 0:", np.round(pose.rotation[0], 4))
# x_cam = R x_world + t, so the camera center in world coordinates
# is -R^T t. Every ring camera sits at radius 10 from the origin.
center = -pose.rotation.T @ pose.translation
print("camera center:", np.round(center, 3), " |c| =", round(float(np.linalg.norm(center)), 3))

# The pairwise view angle (returned in degrees) is the angle between the
# two optical axes in world coordinates. On the ring it equals the
# angular separation of the cameras along the circle, folded into
# [0, 180], which makes it easy to sanity-check: subset B starts at
# 142.5 degrees and its arc advances by 210/11 degrees per camera.
ids_a = [r.image_id for r in manifest.subset_a]
ids_b = [r.image_id for r in manifest.subset_b]
print()
print("view angles from", ids_a[0], "to the first four B images:")
for idb in ids_b[:4]:
    phi = view_angle(manifest.pose_of(ids_a[0]), manifest.pose_of(idb))
    print(f"  {idb}: {phi:7.2f} deg")

# split_scene works on any ordered list. ContiguousHalves sends the first
# half to A and the second to B; an optional cap shrinks each subset to
# that size by sampling it at an even stride, keeping the spatial spread.
names = [f"frame_{i:03d}" for i in range(10)]
half_a, half_b = split_scene(names, ContiguousHalves())
print()
print("contiguous halves of 10 frames:")
print("  A:", half_a)
print("  B:", half_b)

capped_a, capped_b = split_scene(names, ContiguousHalves(cap=3))
print("with cap=3:")
print("  A:", capped_a)
print("  B:", capped_b)

# ExplicitRanges takes inclusive index ranges per subset; they must not
# overlap, so the same frame can never appear on both sides.
ranges = ExplicitRanges(ranges_a=[(0, 2), (8, 9)], ranges_b=[(4, 6)])
ex_a, ex_b = split_scene(names, ranges)
print("explicit ranges A=[0..2, 8..9], B=[4..6]:")
print("  A:", ex_a)
print("  B:", ex_b)
