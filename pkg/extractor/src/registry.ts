/**
 * Catalog of the place-recognition descriptor models this front end can
 * run. Each entry records the output dimensionality the harness should
 * expect, the backbone the weights were trained on, how to preprocess
 * images, and where pretrained weights can be obtained.
 *
 * Weights are not bundled; they are looked up per method under a local
 * weights directory as converted tfjs layers-model artifacts.
 */

export interface Preprocessing {
  /** Inference resolution as [height, width]. */
  inputSize: [number, number];
  /** Per-channel RGB mean in [0, 1] units, subtracted after scaling. */
  mean: [number, number, number];
  /** Per-channel RGB standard deviation in [0, 1] units. */
  std: [number, number, number];
}

export interface ModelRegistryEntry {
  methodTag: string;
  backbone: string;
  /** Length of the global descriptor this model emits. */
  dimension: number;
  /**
   * Whether the dimensionality is a configuration knob of the method
   * (projection size chosen at training time) or fixed by its design.
   */
  configurableDimension: boolean;
  preprocessing: Preprocessing;
  /** Where to obtain pretrained weights for conversion. */
  weightsSource: string;
}

const IMAGENET_MEAN: [number, number, number] = [0.485, 0.456, 0.406];
const IMAGENET_STD: [number, number, number] = [0.229, 0.224, 0.225];

function entry(
  methodTag: string,
  backbone: string,
  dimension: number,
  configurableDimension: boolean,
  inputSize: [number, number],
  weightsSource: string,
): ModelRegistryEntry {
  return {
    methodTag,
    backbone,
    dimension,
    configurableDimension,
    preprocessing: { inputSize, mean: IMAGENET_MEAN, std: IMAGENET_STD },
    weightsSource,
  };
}

/**
 * The catalog. Resolutions follow each method's published evaluation
 * settings; the ViT-based entries need side lengths divisible by the
 * 14-pixel patch size.
 */
export const REGISTRY: readonly ModelRegistryEntry[] = [
  entry("cosplace512", "ResNet18", 512, true, [512, 512],
    "https://github.com/gmberton/CosPlace"),
  entry("cosplace2048", "ResNet101", 2048, true, [512, 512],
    "https://github.com/gmberton/CosPlace"),
  entry("eigenplaces512", "ResNet18", 512, true, [512, 512],
    "https://github.com/gmberton/EigenPlaces"),
  entry("eigenplaces2048", "ResNet101", 2048, true, [512, 512],
    "https://github.com/gmberton/EigenPlaces"),
  entry("mixvpr512", "ResNet50", 512, true, [320, 320],
    "https://github.com/amaralibey/MixVPR"),
  entry("mixvpr4096", "ResNet50", 4096, true, [320, 320],
    "https://github.com/amaralibey/MixVPR"),
  entry("salad2048", "DINOv2-B/14", 2048, true, [322, 322],
    "https://github.com/serizba/salad"),
  entry("salad8192", "DINOv2-B/14", 8192, true, [322, 322],
    "https://github.com/serizba/salad"),
  // Methods whose descriptor length is fixed by their aggregation design.
  entry("patchnetvlad", "VGG16", 4096, false, [480, 640],
    "https://github.com/QVPR/Patch-NetVLAD"),
  entry("anyloc", "DINOv2-G/14", 49152, false, [322, 322],
    "https://github.com/AnyLoc/AnyLoc"),
  entry("megaloc", "DINOv2-B/14", 8448, false, [322, 322],
    "https://github.com/gmberton/MegaLoc"),
];

export class UnknownMethodError extends Error {}

export function lookupMethod(methodTag: string): ModelRegistryEntry {
  const found = REGISTRY.find((e) => e.methodTag === methodTag);
  if (!found) {
    const known = REGISTRY.map((e) => e.methodTag).join(", ");
    throw new UnknownMethodError(
      `unknown method '${methodTag}'; known methods: ${known}`,
    );
  }
  return found;
}

/** Rows for the `models` listing, aligned for terminal output. */
export function formatModelTable(): string {
  const header = ["method", "backbone", "dim", "weights"];
  const rows = REGISTRY.map((e) => [
    e.methodTag,
    e.backbone,
    String(e.dimension),
    e.weightsSource,
  ]);
  const widths = header.map((h, c) =>
    Math.max(h.length, ...rows.map((r) => r[c].length)),
  );
  const fmt = (r: string[]) =>
    r.map((cell, c) => cell.padEnd(widths[c])).join("  ").trimEnd();
  return [fmt(header), ...rows.map(fmt)].join("\n");
}
