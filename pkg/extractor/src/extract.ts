/**
 * The two extraction operations: global descriptors per subset and
 * keypoint correspondences per image pair. Both read a scene manifest,
 * write the binary artifacts the harness consumes, and leave a JSON
 * sidecar describing how the numbers were produced.
 */
import * as fs from "node:fs";
import * as path from "node:path";

import { ImageReadError, readPng, readPngGray, toGray } from "./image.js";
import type { Manifest, ManifestImage } from "./manifest.js";
import { correspondencePath, loadManifest, safeFileStem } from "./manifest.js";
import { inferDescriptor, loadMethodModel, preprocess } from "./model.js";
import { lookupMethod } from "./registry.js";
import type { SiftParams } from "./sift.js";
import { DEFAULT_SIFT_PARAMS, detectAndDescribe, type SiftFeatures } from "./sift.js";
import { DEFAULT_MATCH_PARAMS, matchFeatures } from "./match.js";
import { encodeCorrespondenceSet, encodeDescriptorSet } from "./wire.js";

export interface ExtractSummary {
  sceneId: string;
  /** Files written, keyed by subset. */
  descriptorFiles: Record<string, string>;
  timingFiles: Record<string, string>;
  /** Image ids skipped because their file could not be read. */
  skipped: string[];
}

function writeFileAtomic(target: string, payload: Buffer | string): void {
  fs.mkdirSync(path.dirname(target), { recursive: true });
  const tmp = `${target}.${process.pid}.tmp`;
  fs.writeFileSync(tmp, payload);
  fs.renameSync(tmp, target);
}

const warn = (message: string) => process.stderr.write(`warning: ${message}\n`);

/**
 * Run one descriptor model over every image of a manifest and write one
 * .vprd file per subset, rows in manifest order, plus a timing sidecar
 * with per-image inference seconds. Unreadable images are skipped with
 * a warning and simply have no row.
 */
export async function extractDescriptors(
  methodTag: string,
  manifestPath: string,
  outDir: string,
  weightsDir: string,
): Promise<ExtractSummary> {
  const entry = lookupMethod(methodTag);
  const manifest = loadManifest(manifestPath);
  const model = await loadMethodModel(entry, weightsDir);
  const stem = safeFileStem(manifest.sceneId);

  const summary: ExtractSummary = {
    sceneId: manifest.sceneId,
    descriptorFiles: {},
    timingFiles: {},
    skipped: [],
  };

  for (const subset of ["A", "B"] as const) {
    const records = manifest.images.filter((r) => r.subset === subset);
    const imageIds: string[] = [];
    const rows: Float32Array[] = [];
    const seconds: Record<string, number> = {};
    for (const record of records) {
      let image;
      try {
        image = readPng(record.filePath);
      } catch (err) {
        if (err instanceof ImageReadError) {
          warn(`skipping ${record.imageId}: ${err.message}`);
          summary.skipped.push(record.imageId);
          continue;
        }
        throw err;
      }
      const started = process.hrtime.bigint();
      const input = preprocess(image, entry);
      const descriptor = inferDescriptor(model, input, entry);
      input.dispose();
      seconds[record.imageId] = Number(process.hrtime.bigint() - started) / 1e9;
      imageIds.push(record.imageId);
      rows.push(descriptor);
    }

    const data = new Float32Array(rows.length * entry.dimension);
    rows.forEach((row, i) => data.set(row, i * entry.dimension));
    const filePath = path.join(outDir, `${stem}_${subset}.vprd`);
    writeFileAtomic(
      filePath,
      encodeDescriptorSet({
        subset,
        methodTag: entry.methodTag,
        imageIds,
        data,
        dimension: entry.dimension,
      }),
    );
    const timingPath = path.join(outDir, `${stem}_${subset}_timing.json`);
    writeFileAtomic(
      timingPath,
      JSON.stringify(
        {
          method_tag: entry.methodTag,
          scene_id: manifest.sceneId,
          subset,
          seconds_per_image: seconds,
        },
        null,
        2,
      ) + "\n",
    );
    summary.descriptorFiles[subset] = filePath;
    summary.timingFiles[subset] = timingPath;
  }
  return summary;
}

export interface CorrSummary {
  sceneId: string;
  pairsWritten: number;
  pairsSkipped: number;
  paramsFile: string;
}

/**
 * Detect keypoints once per image, then match every ordered (A, B)
 * pair and write one .vprc file each, in the directory layout the
 * harness's ground-truth step expects. A pair is skipped, with a
 * warning, when either image cannot be read.
 */
export function extractCorrespondences(
  manifestPath: string,
  outDir: string,
  siftParams: SiftParams = DEFAULT_SIFT_PARAMS,
): CorrSummary {
  const manifest = loadManifest(manifestPath);
  const features = new Map<string, SiftFeatures | null>();
  for (const record of manifest.images) {
    try {
      features.set(record.imageId, detectAndDescribe(readPngGray(record.filePath), siftParams));
    } catch (err) {
      if (err instanceof ImageReadError) {
        warn(`cannot read ${record.imageId}: ${err.message}`);
        features.set(record.imageId, null);
        continue;
      }
      throw err;
    }
  }

  const subsetA = manifest.images.filter((r) => r.subset === "A");
  const subsetB = manifest.images.filter((r) => r.subset === "B");
  let written = 0;
  let skipped = 0;
  for (const a of subsetA) {
    for (const b of subsetB) {
      const featA = features.get(a.imageId);
      const featB = features.get(b.imageId);
      if (!featA || !featB) {
        warn(`skipping pair (${a.imageId}, ${b.imageId}): unreadable image`);
        skipped += 1;
        continue;
      }
      const points = matchFeatures(featA, featB, DEFAULT_MATCH_PARAMS);
      const target = correspondencePath(outDir, manifest.sceneId, a.imageId, b.imageId);
      writeFileAtomic(
        target,
        encodeCorrespondenceSet({
          imageIdA: a.imageId,
          imageIdB: b.imageId,
          points,
        }),
      );
      written += 1;
    }
  }

  const paramsFile = path.join(outDir, safeFileStem(manifest.sceneId), "extraction_params.json");
  writeFileAtomic(
    paramsFile,
    JSON.stringify(
      {
        scene_id: manifest.sceneId,
        detector: { kind: "dog-sift", ...siftParams },
        matcher: {
          kind: "mutual-nearest-neighbor",
          ratio_threshold: DEFAULT_MATCH_PARAMS.ratioThreshold,
        },
      },
      null,
      2,
    ) + "\n",
  );
  return { sceneId: manifest.sceneId, pairsWritten: written, pairsSkipped: skipped, paramsFile };
}

export type { Manifest, ManifestImage };
