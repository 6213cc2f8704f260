/**
 * Pretrained-model loading and descriptor inference.
 *
 * Weights live outside the repository: under a weights directory, each
 * method gets a subdirectory holding a converted tfjs layers model
 * (model.json plus binary shards). The loader reads those files through
 * a small IO handler, so no network access ever happens at run time.
 */
import * as fs from "node:fs";
import * as path from "node:path";
import * as tf from "@tensorflow/tfjs";

import type { RgbImage } from "./image.js";
import { resizeBilinearRgb } from "./image.js";
import type { ModelRegistryEntry } from "./registry.js";

export class WeightsMissingError extends Error {}
export class ModelContractError extends Error {}

interface WeightsManifestGroup {
  paths: string[];
  weights: tf.io.WeightsManifestEntry[];
}

/** IO handler that reads a layers-model directory from local disk. */
function diskIoHandler(modelDir: string): tf.io.IOHandler {
  return {
    async load(): Promise<tf.io.ModelArtifacts> {
      const doc = JSON.parse(
        fs.readFileSync(path.join(modelDir, "model.json"), "utf-8"),
      );
      const groups: WeightsManifestGroup[] = doc.weightsManifest ?? [];
      const specs: tf.io.WeightsManifestEntry[] = [];
      const shards: Buffer[] = [];
      for (const group of groups) {
        specs.push(...group.weights);
        for (const rel of group.paths) {
          shards.push(fs.readFileSync(path.join(modelDir, rel)));
        }
      }
      const weightData = Buffer.concat(shards);
      return {
        modelTopology: doc.modelTopology,
        format: doc.format,
        generatedBy: doc.generatedBy,
        convertedBy: doc.convertedBy,
        weightSpecs: specs,
        weightData: weightData.buffer.slice(
          weightData.byteOffset,
          weightData.byteOffset + weightData.byteLength,
        ),
      };
    },
  };
}

/**
 * Load the converted model for a registry entry, or explain exactly how
 * to obtain it. The error text is the install instruction.
 */
export async function loadMethodModel(
  entry: ModelRegistryEntry,
  weightsDir: string,
): Promise<tf.LayersModel> {
  const modelDir = path.join(weightsDir, entry.methodTag);
  if (!fs.existsSync(path.join(modelDir, "model.json"))) {
    throw new WeightsMissingError(
      `no weights for '${entry.methodTag}' under ${modelDir}. ` +
        `Download the pretrained ${entry.backbone} weights from ` +
        `${entry.weightsSource}, convert them to a tfjs layers model ` +
        `(tensorflowjs_converter --output_format=tfjs_layers_model), and ` +
        `place model.json plus its shard files in that directory.`,
    );
  }
  try {
    return await tf.loadLayersModel(diskIoHandler(modelDir));
  } catch (err) {
    throw new ModelContractError(
      `failed to load model for '${entry.methodTag}' from ${modelDir}: ` +
        (err as Error).message,
    );
  }
}

/**
 * Resize and normalize into the NHWC float tensor the model expects.
 * The resize is this package's own bilinear (not the tf op) so the
 * bytes fed to the network never depend on backend kernel choices.
 */
export function preprocess(img: RgbImage, entry: ModelRegistryEntry): tf.Tensor4D {
  const [h, w] = entry.preprocessing.inputSize;
  const resized = img.height === h && img.width === w ? img : resizeBilinearRgb(img, h, w);
  const { mean, std } = entry.preprocessing;
  const data = new Float32Array(resized.data.length);
  for (let px = 0; px < h * w; px++) {
    for (let c = 0; c < 3; c++) {
      data[px * 3 + c] = (resized.data[px * 3 + c] - mean[c]) / std[c];
    }
  }
  return tf.tensor4d(data, [1, h, w, 3]);
}

/** Run one image through the model and return its descriptor row. */
export function inferDescriptor(
  model: tf.LayersModel,
  input: tf.Tensor4D,
  entry: ModelRegistryEntry,
): Float32Array {
  const out = tf.tidy(() => {
    const pred = model.predict(input) as tf.Tensor;
    return pred.reshape([-1]);
  });
  try {
    const values = out.dataSync() as Float32Array;
    if (values.length !== entry.dimension) {
      throw new ModelContractError(
        `model for '${entry.methodTag}' produced ${values.length} values, ` +
          `registry says ${entry.dimension}`,
      );
    }
    for (let i = 0; i < values.length; i++) {
      if (!Number.isFinite(values[i])) {
        throw new ModelContractError(
          `model for '${entry.methodTag}' produced a non-finite value`,
        );
      }
    }
    return Float32Array.from(values);
  } finally {
    out.dispose();
  }
}
