/**
 * Descriptor matching between two keypoint sets: mutual nearest
 * neighbors surviving the 0.8 distance-ratio test, emitted as pixel
 * correspondences in the (x_a, y_a, x_b, y_b) row layout the harness
 * consumes. Duplicate rows are collapsed before writing because the
 * harness treats repeated rows as file corruption.
 */
import type { SiftFeatures } from "./sift.js";

export const RATIO_THRESHOLD = 0.8;

export interface MatchParams {
  ratioThreshold: number;
  mutual: boolean;
}

export const DEFAULT_MATCH_PARAMS: MatchParams = {
  ratioThreshold: RATIO_THRESHOLD,
  mutual: true,
};

interface NearestTwo {
  best: number;
  bestDist: number;
  secondDist: number;
}

function nearestTwo(
  query: Float32Array,
  qi: number,
  target: Float32Array,
  targetCount: number,
): NearestTwo {
  let best = -1;
  let bestDist = Infinity;
  let secondDist = Infinity;
  const qOff = qi * 128;
  for (let t = 0; t < targetCount; t++) {
    const tOff = t * 128;
    let d = 0;
    for (let i = 0; i < 128; i++) {
      const diff = query[qOff + i] - target[tOff + i];
      d += diff * diff;
    }
    if (d < bestDist) {
      secondDist = bestDist;
      bestDist = d;
      best = t;
    } else if (d < secondDist) {
      secondDist = d;
    }
  }
  return { best, bestDist, secondDist };
}

/**
 * Match two feature sets and return M x 4 pixel rows (flattened).
 * Distances are squared L2, so the ratio test compares against the
 * squared threshold.
 */
export function matchFeatures(
  featA: SiftFeatures,
  featB: SiftFeatures,
  params: MatchParams = DEFAULT_MATCH_PARAMS,
): Float32Array {
  const nA = featA.keypoints.length;
  const nB = featB.keypoints.length;
  if (nA === 0 || nB === 0) return new Float32Array(0);

  const ratioSq = params.ratioThreshold * params.ratioThreshold;
  const backBest = new Int32Array(nB).fill(-1);
  if (params.mutual) {
    for (let b = 0; b < nB; b++) {
      backBest[b] = nearestTwo(featB.descriptors, b, featA.descriptors, nA).best;
    }
  }

  const rows: number[] = [];
  const seen = new Set<string>();
  for (let a = 0; a < nA; a++) {
    const { best, bestDist, secondDist } = nearestTwo(
      featA.descriptors, a, featB.descriptors, nB,
    );
    if (best < 0) continue;
    if (secondDist < Infinity && bestDist >= ratioSq * secondDist) continue;
    if (params.mutual && backBest[best] !== a) continue;
    const ka = featA.keypoints[a];
    const kb = featB.keypoints[best];
    // Float32 rounding first so deduplication sees the wire values.
    const row = Float32Array.from([ka.x, ka.y, kb.x, kb.y]);
    const key = Array.from(row).join(",");
    if (seen.has(key)) continue;
    seen.add(key);
    rows.push(row[0], row[1], row[2], row[3]);
  }
  return Float32Array.from(rows);
}
