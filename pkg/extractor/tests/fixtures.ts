/**
 * Shared test fixtures: deterministic PNG generation, a tiny seeded
 * descriptor model saved in the converted-weights layout, and a helper
 * that reads our binary files back through the Python harness so the
 * cross-language contract is checked against the real consumer.
 */
import { execFileSync } from "node:child_process";
import * as fs from "node:fs";
import * as path from "node:path";
import * as tf from "@tensorflow/tfjs";
import { PNG } from "pngjs";

import { lookupMethod } from "../src/registry.js";

/** Small deterministic PRNG; good enough for test textures. */
export function mulberry32(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

/** Gray values in [0, 1], row-major. */
export type Texture = { width: number; height: number; values: Float64Array };

/**
 * Mid-gray canvas with randomly placed bright and dark Gaussian blobs:
 * plenty of well-localized blob extrema for the detector to find.
 */
export function blobTexture(width: number, height: number, seed: number, blobs = 40): Texture {
  const rand = mulberry32(seed);
  const values = new Float64Array(width * height).fill(0.5);
  for (let b = 0; b < blobs; b++) {
    const cx = 6 + rand() * (width - 12);
    const cy = 6 + rand() * (height - 12);
    const radius = 1.5 + rand() * 2.5;
    const amp = (rand() < 0.5 ? -1 : 1) * (0.3 + 0.4 * rand());
    const reach = Math.ceil(radius * 3);
    for (let dy = -reach; dy <= reach; dy++) {
      for (let dx = -reach; dx <= reach; dx++) {
        const x = Math.round(cx) + dx;
        const y = Math.round(cy) + dy;
        if (x < 0 || x >= width || y < 0 || y >= height) continue;
        values[y * width + x] += amp * Math.exp(-(dx * dx + dy * dy) / (2 * radius * radius));
      }
    }
  }
  for (let i = 0; i < values.length; i++) {
    values[i] = Math.min(1, Math.max(0, values[i]));
  }
  return { width, height, values };
}

export function shiftTexture(src: Texture, dx: number, dy: number): Texture {
  const { width, height } = src;
  const values = new Float64Array(width * height);
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      const sx = Math.min(width - 1, Math.max(0, x - dx));
      const sy = Math.min(height - 1, Math.max(0, y - dy));
      values[y * width + x] = src.values[sy * width + sx];
    }
  }
  return { width, height, values };
}

export function writeTexturePng(texture: Texture, filePath: string): void {
  const png = new PNG({ width: texture.width, height: texture.height });
  for (let px = 0; px < texture.width * texture.height; px++) {
    const v = Math.round(texture.values[px] * 255);
    png.data[px * 4] = v;
    png.data[px * 4 + 1] = v;
    png.data[px * 4 + 2] = v;
    png.data[px * 4 + 3] = 255;
  }
  fs.mkdirSync(path.dirname(filePath), { recursive: true });
  fs.writeFileSync(filePath, PNG.sync.write(png));
}

export function writeBlackPng(width: number, height: number, filePath: string): void {
  writeTexturePng({ width, height, values: new Float64Array(width * height) }, filePath);
}

export interface SceneSpec {
  sceneId: string;
  /** [imageId, subset, texture or null for a corrupt file] */
  images: Array<[string, "A" | "B", Texture | null]>;
}

/** Write PNGs plus the manifest JSON the harness and extractor share. */
export function writeScene(dir: string, spec: SceneSpec): string {
  fs.mkdirSync(dir, { recursive: true });
  const images = spec.images.map(([imageId, subset, texture]) => {
    const fileName = `${imageId}.png`;
    if (texture === null) {
      fs.writeFileSync(path.join(dir, fileName), Buffer.from("not a png at all"));
    } else {
      writeTexturePng(texture, path.join(dir, fileName));
    }
    return { image_id: imageId, file_path: fileName, subset };
  });
  const manifestPath = path.join(dir, `${spec.sceneId}.json`);
  fs.writeFileSync(
    manifestPath,
    JSON.stringify({
      scene_id: spec.sceneId,
      dataset_tag: "CUSTOM",
      pose_source: { kind: "none" },
      images,
    }),
  );
  return manifestPath;
}

/**
 * Save a tiny seeded model for one registry method in the layout the
 * loader expects: channel means through a dense projection up to the
 * method's dimensionality. Deterministic weights, deterministic output.
 */
export async function writeFixtureModel(weightsDir: string, methodTag: string): Promise<void> {
  const entry = lookupMethod(methodTag);
  const [h, w] = entry.preprocessing.inputSize;
  const model = tf.sequential();
  model.add(
    tf.layers.globalAveragePooling2d({ inputShape: [h, w, 3], dataFormat: "channelsLast" }),
  );
  model.add(
    tf.layers.dense({
      units: entry.dimension,
      activation: "tanh",
      kernelInitializer: tf.initializers.randomNormal({ seed: 7, stddev: 1.0 }),
      biasInitializer: tf.initializers.constant({ value: 0.05 }),
    }),
  );
  const dir = path.join(weightsDir, methodTag);
  fs.mkdirSync(dir, { recursive: true });
  await model.save(
    tf.io.withSaveHandler(async (artifacts) => {
      fs.writeFileSync(
        path.join(dir, "weights.bin"),
        Buffer.from(artifacts.weightData as ArrayBuffer),
      );
      fs.writeFileSync(
        path.join(dir, "model.json"),
        JSON.stringify({
          modelTopology: artifacts.modelTopology,
          format: "layers-model",
          generatedBy: "test-fixture",
          weightsManifest: [{ paths: ["weights.bin"], weights: artifacts.weightSpecs }],
        }),
      );
      return {
        modelArtifactsInfo: { dateSaved: new Date(), modelTopologyType: "JSON" },
      };
    }),
  );
}

/**
 * Parse one of our binary files with the Python package that consumes
 * them and return its view of the contents.
 */
export function pythonReadback(kind: "descriptor" | "correspondence", filePath: string): any {
  const script = `
import json, sys
import numpy as np
from pairbench.codecs import read_correspondence_file, read_descriptor_file

kind, path = sys.argv[1], sys.argv[2]
if kind == "descriptor":
    d = read_descriptor_file(path)
    print(json.dumps({
        "subset": d.subset,
        "method_tag": d.method_tag,
        "image_ids": list(d.image_ids),
        "count": d.count,
        "dimension": d.dimension,
        "row0_head": [float(v) for v in d.data[0, :4]] if d.count else [],
    }))
else:
    c = read_correspondence_file(path)
    print(json.dumps({
        "image_id_a": c.image_id_a,
        "image_id_b": c.image_id_b,
        "rows": int(len(c)),
        "row0": [float(v) for v in c.points[0]] if len(c) else [],
    }))
`;
  const stdout = execFileSync("python3", ["-c", script, kind, filePath], {
    encoding: "utf-8",
  });
  return JSON.parse(stdout);
}
