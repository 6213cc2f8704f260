/**
 * Scene manifest loading, limited to what extraction needs: the ordered
 * image list with subset assignments and file paths. Pose sources are
 * left untouched; geometry is the harness's business.
 */
import * as fs from "node:fs";
import * as path from "node:path";

export interface ManifestImage {
  imageId: string;
  /** Resolved absolute path to the image file. */
  filePath: string;
  subset: "A" | "B";
}

export interface Manifest {
  sceneId: string;
  datasetTag: string;
  images: ManifestImage[];
}

export class ManifestError extends Error {}

export function loadManifest(manifestPath: string): Manifest {
  let doc: any;
  try {
    doc = JSON.parse(fs.readFileSync(manifestPath, "utf-8"));
  } catch (err) {
    throw new ManifestError(`${manifestPath}: ${(err as Error).message}`);
  }
  if (typeof doc.scene_id !== "string" || !Array.isArray(doc.images)) {
    throw new ManifestError(
      `${manifestPath}: expected an object with scene_id and images`,
    );
  }
  const base = path.dirname(path.resolve(manifestPath));
  const seen = new Set<string>();
  const images: ManifestImage[] = doc.images.map((entry: any, i: number) => {
    const id = entry?.image_id;
    const file = entry?.file_path;
    const subset = entry?.subset;
    if (typeof id !== "string" || typeof file !== "string") {
      throw new ManifestError(`${manifestPath}: images[${i}] is malformed`);
    }
    if (subset !== "A" && subset !== "B") {
      throw new ManifestError(
        `${manifestPath}: images[${i}] subset must be 'A' or 'B', got ${JSON.stringify(subset)}`,
      );
    }
    if (seen.has(id)) {
      throw new ManifestError(`${manifestPath}: duplicate image id '${id}'`);
    }
    seen.add(id);
    return {
      imageId: id,
      filePath: path.isAbsolute(file) ? file : path.join(base, file),
      subset,
    };
  });
  return {
    sceneId: doc.scene_id,
    datasetTag: typeof doc.dataset_tag === "string" ? doc.dataset_tag : "CUSTOM",
    images,
  };
}

/**
 * Filesystem-safe stem for an arbitrary id; mirrors the harness rule
 * (keep letters, digits, '.', '_', '-'; replace everything else) so both
 * sides agree on artifact names.
 */
export function safeFileStem(identifier: string): string {
  let out = "";
  for (const ch of identifier) {
    out += /[\p{L}\p{N}._-]/u.test(ch) ? ch : "_";
  }
  return out;
}

/** Canonical correspondence file location, matching the harness layout. */
export function correspondencePath(
  outDir: string,
  sceneId: string,
  imageIdA: string,
  imageIdB: string,
): string {
  return path.join(
    outDir,
    safeFileStem(sceneId),
    `${safeFileStem(imageIdA)}__${safeFileStem(imageIdB)}.vprc`,
  );
}
