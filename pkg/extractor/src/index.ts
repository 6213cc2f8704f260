export { REGISTRY, lookupMethod, formatModelTable, UnknownMethodError } from "./registry.js";
export type { ModelRegistryEntry, Preprocessing } from "./registry.js";
export {
  encodeDescriptorSet,
  encodeCorrespondenceSet,
  decodeDescriptorSet,
  decodeCorrespondenceSet,
  WireFormatError,
} from "./wire.js";
export type { DescriptorSet, CorrespondenceSet } from "./wire.js";
export { loadManifest, safeFileStem, correspondencePath, ManifestError } from "./manifest.js";
export type { Manifest, ManifestImage } from "./manifest.js";
export { readPng, readPngGray, toGray, resizeBilinearRgb, ImageReadError } from "./image.js";
export { detectAndDescribe, DEFAULT_SIFT_PARAMS } from "./sift.js";
export type { Keypoint, SiftFeatures, SiftParams } from "./sift.js";
export { matchFeatures, DEFAULT_MATCH_PARAMS, RATIO_THRESHOLD } from "./match.js";
export { loadMethodModel, preprocess, inferDescriptor, WeightsMissingError, ModelContractError } from "./model.js";
export { extractDescriptors, extractCorrespondences } from "./extract.js";
export type { ExtractSummary, CorrSummary } from "./extract.js";
export { main } from "./cli.js";
