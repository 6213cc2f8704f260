/**
 * A compact difference-of-Gaussians keypoint detector with 128-byte
 * gradient-histogram descriptors. It is not a tuned reimplementation of
 * any particular library, just the classic recipe small enough to audit:
 * Gaussian scale space, 26-neighbor extrema with contrast and edge
 * rejection, one quadratic localization step, dominant-orientation
 * assignment, and 4x4x8 descriptors with the usual clamp-renormalize.
 *
 * Everything is pure float arithmetic in a fixed order, so the same
 * image always yields bit-identical keypoints and descriptors.
 */
import type { GrayImage } from "./image.js";

export interface Keypoint {
  /** Pixel position in the original image, subpixel. */
  x: number;
  y: number;
  /** Characteristic scale in original-image pixels. */
  sigma: number;
  /** Dominant gradient direction, radians in (-pi, pi]. */
  orientation: number;
  /** Absolute DoG response; larger is more salient. */
  response: number;
}

export interface SiftFeatures {
  keypoints: Keypoint[];
  /** Row-major keypoints.length x 128. */
  descriptors: Float32Array;
}

export interface SiftParams {
  scalesPerOctave: number;
  baseSigma: number;
  contrastThreshold: number;
  edgeRatio: number;
  maxFeatures: number;
}

export const DEFAULT_SIFT_PARAMS: SiftParams = {
  scalesPerOctave: 3,
  baseSigma: 1.6,
  contrastThreshold: 0.03,
  edgeRatio: 10,
  maxFeatures: 1500,
};

// --- scale space -----------------------------------------------------------

function gaussianKernel(sigma: number): Float32Array {
  const radius = Math.max(1, Math.ceil(3 * sigma));
  const kernel = new Float32Array(2 * radius + 1);
  let sum = 0;
  for (let i = -radius; i <= radius; i++) {
    const v = Math.exp(-(i * i) / (2 * sigma * sigma));
    kernel[i + radius] = v;
    sum += v;
  }
  for (let i = 0; i < kernel.length; i++) kernel[i] /= sum;
  return kernel;
}

/** Separable convolution with reflected borders. */
function blur(img: GrayImage, sigma: number): GrayImage {
  const kernel = gaussianKernel(sigma);
  const radius = (kernel.length - 1) / 2;
  const { width, height } = img;
  const tmp = new Float32Array(width * height);
  const out = new Float32Array(width * height);
  const reflect = (i: number, n: number) => {
    if (i < 0) return -i;
    if (i >= n) return 2 * n - 2 - i;
    return i;
  };
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      let acc = 0;
      for (let k = -radius; k <= radius; k++) {
        acc += kernel[k + radius] * img.data[y * width + reflect(x + k, width)];
      }
      tmp[y * width + x] = acc;
    }
  }
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      let acc = 0;
      for (let k = -radius; k <= radius; k++) {
        acc += kernel[k + radius] * tmp[reflect(y + k, height) * width + x];
      }
      out[y * width + x] = acc;
    }
  }
  return { width, height, data: out };
}

function downsample(img: GrayImage): GrayImage {
  const width = Math.floor(img.width / 2);
  const height = Math.floor(img.height / 2);
  const out = new Float32Array(width * height);
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      out[y * width + x] = img.data[2 * y * img.width + 2 * x];
    }
  }
  return { width, height, data: out };
}

interface Octave {
  /** scalesPerOctave + 3 progressively blurred images. */
  gaussians: GrayImage[];
  /** Adjacent differences, one fewer than gaussians. */
  dogs: GrayImage[];
  /** Scale factor back to original image coordinates. */
  stride: number;
}

function buildOctaves(image: GrayImage, params: SiftParams): Octave[] {
  const octaves: Octave[] = [];
  const k = Math.pow(2, 1 / params.scalesPerOctave);
  let base = blur(image, params.baseSigma);
  let stride = 1;
  while (Math.min(base.width, base.height) >= 16) {
    const gaussians = [base];
    let sigma = params.baseSigma;
    for (let s = 1; s < params.scalesPerOctave + 3; s++) {
      // Incremental blur: combining sigma_prev with the increment gives
      // sigma_prev * k overall.
      const increment = sigma * Math.sqrt(k * k - 1);
      gaussians.push(blur(gaussians[s - 1], increment));
      sigma *= k;
    }
    const dogs = [];
    for (let s = 0; s + 1 < gaussians.length; s++) {
      const a = gaussians[s].data;
      const b = gaussians[s + 1].data;
      const diff = new Float32Array(a.length);
      for (let i = 0; i < a.length; i++) diff[i] = b[i] - a[i];
      dogs.push({ width: base.width, height: base.height, data: diff });
    }
    octaves.push({ gaussians, dogs, stride });
    base = downsample(gaussians[params.scalesPerOctave]);
    stride *= 2;
  }
  return octaves;
}

// --- keypoint detection ------------------------------------------------------

function isExtremum(dogs: GrayImage[], s: number, x: number, y: number): boolean {
  const w = dogs[s].width;
  const v = dogs[s].data[y * w + x];
  const sign = v > 0 ? 1 : -1;
  for (let ds = -1; ds <= 1; ds++) {
    const layer = dogs[s + ds].data;
    for (let dy = -1; dy <= 1; dy++) {
      for (let dx = -1; dx <= 1; dx++) {
        if (ds === 0 && dy === 0 && dx === 0) continue;
        if (sign * (v - layer[(y + dy) * w + x + dx]) <= 0) return false;
      }
    }
  }
  return true;
}

function passesEdgeTest(dog: GrayImage, x: number, y: number, edgeRatio: number): boolean {
  const w = dog.width;
  const d = dog.data;
  const dxx = d[y * w + x + 1] + d[y * w + x - 1] - 2 * d[y * w + x];
  const dyy = d[(y + 1) * w + x] + d[(y - 1) * w + x] - 2 * d[y * w + x];
  const dxy =
    (d[(y + 1) * w + x + 1] - d[(y + 1) * w + x - 1] -
      d[(y - 1) * w + x + 1] + d[(y - 1) * w + x - 1]) / 4;
  const trace = dxx + dyy;
  const det = dxx * dyy - dxy * dxy;
  if (det <= 0) return false;
  const r = edgeRatio;
  return trace * trace / det < (r + 1) * (r + 1) / r;
}

/** One clamped Newton step in (x, y) from the discrete extremum. */
function refineXY(dog: GrayImage, x: number, y: number): [number, number] {
  const w = dog.width;
  const d = dog.data;
  const dx = (d[y * w + x + 1] - d[y * w + x - 1]) / 2;
  const dy = (d[(y + 1) * w + x] - d[(y - 1) * w + x]) / 2;
  const dxx = d[y * w + x + 1] + d[y * w + x - 1] - 2 * d[y * w + x];
  const dyy = d[(y + 1) * w + x] + d[(y - 1) * w + x] - 2 * d[y * w + x];
  const dxy =
    (d[(y + 1) * w + x + 1] - d[(y + 1) * w + x - 1] -
      d[(y - 1) * w + x + 1] + d[(y - 1) * w + x - 1]) / 4;
  const det = dxx * dyy - dxy * dxy;
  if (Math.abs(det) < 1e-12) return [x, y];
  let ox = -(dyy * dx - dxy * dy) / det;
  let oy = -(dxx * dy - dxy * dx) / det;
  ox = Math.max(-0.5, Math.min(0.5, ox));
  oy = Math.max(-0.5, Math.min(0.5, oy));
  return [x + ox, y + oy];
}

// --- orientation and descriptor ----------------------------------------------

function gradientAt(img: GrayImage, x: number, y: number): [number, number] {
  const w = img.width;
  const mag = Math.hypot(
    img.data[y * w + x + 1] - img.data[y * w + x - 1],
    img.data[(y + 1) * w + x] - img.data[(y - 1) * w + x],
  );
  const angle = Math.atan2(
    img.data[(y + 1) * w + x] - img.data[(y - 1) * w + x],
    img.data[y * w + x + 1] - img.data[y * w + x - 1],
  );
  return [mag, angle];
}

function dominantOrientations(
  gauss: GrayImage,
  x: number,
  y: number,
  sigma: number,
): number[] {
  const bins = new Float64Array(36);
  const radius = Math.round(4.5 * sigma);
  const weightSigma = 1.5 * sigma;
  for (let dy = -radius; dy <= radius; dy++) {
    for (let dx = -radius; dx <= radius; dx++) {
      const px = x + dx;
      const py = y + dy;
      if (px < 1 || px >= gauss.width - 1 || py < 1 || py >= gauss.height - 1) continue;
      const [mag, angle] = gradientAt(gauss, px, py);
      const weight = Math.exp(-(dx * dx + dy * dy) / (2 * weightSigma * weightSigma));
      let bin = Math.floor(((angle + Math.PI) / (2 * Math.PI)) * 36);
      if (bin >= 36) bin = 0;
      bins[bin] += weight * mag;
    }
  }
  // Circular smoothing steadies the peaks against bin-edge jitter.
  const smooth = new Float64Array(36);
  for (let i = 0; i < 36; i++) {
    smooth[i] = (bins[(i + 35) % 36] + bins[i] + bins[(i + 1) % 36]) / 3;
  }
  const peak = Math.max(...smooth);
  if (peak <= 0) return [];
  const result: number[] = [];
  for (let i = 0; i < 36 && result.length < 2; i++) {
    const prev = smooth[(i + 35) % 36];
    const next = smooth[(i + 1) % 36];
    if (smooth[i] >= 0.8 * peak && smooth[i] > prev && smooth[i] > next) {
      // Parabolic interpolation of the peak bin.
      const offset = (prev - next) / (2 * (prev - 2 * smooth[i] + next));
      const angle = ((i + 0.5 + offset) / 36) * 2 * Math.PI - Math.PI;
      result.push(angle);
    }
  }
  return result;
}

function computeDescriptor(
  gauss: GrayImage,
  x: number,
  y: number,
  sigma: number,
  orientation: number,
): Float32Array {
  const desc = new Float64Array(128);
  const binWidth = 3 * sigma;
  const radius = Math.round(binWidth * 2.5);
  const cos = Math.cos(-orientation);
  const sin = Math.sin(-orientation);
  for (let dy = -radius; dy <= radius; dy++) {
    for (let dx = -radius; dx <= radius; dx++) {
      const px = Math.round(x) + dx;
      const py = Math.round(y) + dy;
      if (px < 1 || px >= gauss.width - 1 || py < 1 || py >= gauss.height - 1) continue;
      // Rotate the offset into the keypoint frame.
      const rx = (cos * dx - sin * dy) / binWidth + 2;
      const ry = (sin * dx + cos * dy) / binWidth + 2;
      if (rx <= -0.5 || rx >= 4.5 || ry <= -0.5 || ry >= 4.5) continue;
      const [mag, angle] = gradientAt(gauss, px, py);
      let theta = angle - orientation;
      while (theta < 0) theta += 2 * Math.PI;
      while (theta >= 2 * Math.PI) theta -= 2 * Math.PI;
      const ob = (theta / (2 * Math.PI)) * 8;
      const weight = mag * Math.exp(-(dx * dx + dy * dy) / (2 * (2 * binWidth) ** 2));
      // Trilinear spread over the two nearest bins along each axis.
      const x0 = Math.floor(rx - 0.5);
      const y0 = Math.floor(ry - 0.5);
      const o0 = Math.floor(ob);
      const fx = rx - 0.5 - x0;
      const fy = ry - 0.5 - y0;
      const fo = ob - o0;
      for (let by = 0; by <= 1; by++) {
        const yy = y0 + by;
        if (yy < 0 || yy > 3) continue;
        for (let bx = 0; bx <= 1; bx++) {
          const xx = x0 + bx;
          if (xx < 0 || xx > 3) continue;
          for (let bo = 0; bo <= 1; bo++) {
            const oo = (o0 + bo) % 8;
            const share =
              (bx ? fx : 1 - fx) * (by ? fy : 1 - fy) * (bo ? fo : 1 - fo);
            desc[(yy * 4 + xx) * 8 + oo] += weight * share;
          }
        }
      }
    }
  }
  // Normalize, clamp the big components, renormalize: the standard
  // defense against illumination changes.
  let norm = Math.sqrt(desc.reduce((acc, v) => acc + v * v, 0));
  if (norm > 0) {
    for (let i = 0; i < 128; i++) desc[i] = Math.min(desc[i] / norm, 0.2);
    norm = Math.sqrt(desc.reduce((acc, v) => acc + v * v, 0));
    for (let i = 0; i < 128; i++) desc[i] /= norm;
  }
  return Float32Array.from(desc);
}

// --- the public operation ------------------------------------------------------

export function detectAndDescribe(
  image: GrayImage,
  params: SiftParams = DEFAULT_SIFT_PARAMS,
): SiftFeatures {
  const octaves = buildOctaves(image, params);
  const k = Math.pow(2, 1 / params.scalesPerOctave);

  interface Candidate extends Keypoint {
    octave: number;
    scale: number;
    localX: number;
    localY: number;
  }
  const candidates: Candidate[] = [];
  for (let o = 0; o < octaves.length; o++) {
    const { dogs, stride } = octaves[o];
    for (let s = 1; s + 1 < dogs.length; s++) {
      const { width, height, data } = dogs[s];
      for (let y = 1; y < height - 1; y++) {
        for (let x = 1; x < width - 1; x++) {
          const v = data[y * width + x];
          if (Math.abs(v) < params.contrastThreshold) continue;
          if (!isExtremum(dogs, s, x, y)) continue;
          if (!passesEdgeTest(dogs[s], x, y, params.edgeRatio)) continue;
          const [rx, ry] = refineXY(dogs[s], x, y);
          const sigma = params.baseSigma * Math.pow(k, s);
          candidates.push({
            x: rx * stride,
            y: ry * stride,
            sigma: sigma * stride,
            orientation: 0,
            response: Math.abs(v),
            octave: o,
            scale: s,
            localX: x,
            localY: y,
          });
        }
      }
    }
  }

  // Strongest first; ties broken spatially so the cut is reproducible.
  candidates.sort(
    (a, b) =>
      b.response - a.response || a.y - b.y || a.x - b.x || a.sigma - b.sigma,
  );
  const kept = candidates.slice(0, params.maxFeatures);

  const keypoints: Keypoint[] = [];
  const descriptorRows: Float32Array[] = [];
  for (const c of kept) {
    const gauss = octaves[c.octave].gaussians[c.scale];
    const localSigma = params.baseSigma * Math.pow(k, c.scale);
    for (const orientation of dominantOrientations(gauss, c.localX, c.localY, localSigma)) {
      keypoints.push({
        x: c.x,
        y: c.y,
        sigma: c.sigma,
        orientation,
        response: c.response,
      });
      descriptorRows.push(
        computeDescriptor(gauss, c.localX, c.localY, localSigma, orientation),
      );
    }
  }

  const descriptors = new Float32Array(descriptorRows.length * 128);
  descriptorRows.forEach((row, i) => descriptors.set(row, i * 128));
  return { keypoints, descriptors };
}
