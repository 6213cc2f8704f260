/**
 * Image loading and the two pixel-level operations everything else
 * needs: planar float conversion and bilinear resizing. Images arrive
 * as PNG files; decoding failures surface as ImageReadError so callers
 * can skip the offending image with a warning instead of dying.
 */
import * as fs from "node:fs";
import { PNG } from "pngjs";

export class ImageReadError extends Error {}

export interface RgbImage {
  width: number;
  height: number;
  /** Interleaved RGB in [0, 1], length = width * height * 3. */
  data: Float32Array;
}

export interface GrayImage {
  width: number;
  height: number;
  /** Row-major luma in [0, 1]. */
  data: Float32Array;
}

export function readPng(filePath: string): RgbImage {
  let png: PNG;
  try {
    png = PNG.sync.read(fs.readFileSync(filePath));
  } catch (err) {
    throw new ImageReadError(`${filePath}: ${(err as Error).message}`);
  }
  const { width, height } = png;
  const out = new Float32Array(width * height * 3);
  for (let i = 0, px = 0; px < width * height; px++, i += 4) {
    out[px * 3] = png.data[i] / 255;
    out[px * 3 + 1] = png.data[i + 1] / 255;
    out[px * 3 + 2] = png.data[i + 2] / 255;
  }
  return { width, height, data: out };
}

/** ITU-R BT.601 luma, the usual choice for feature detection. */
export function toGray(img: RgbImage): GrayImage {
  const n = img.width * img.height;
  const out = new Float32Array(n);
  for (let px = 0; px < n; px++) {
    out[px] =
      0.299 * img.data[px * 3] +
      0.587 * img.data[px * 3 + 1] +
      0.114 * img.data[px * 3 + 2];
  }
  return { width: img.width, height: img.height, data: out };
}

export function readPngGray(filePath: string): GrayImage {
  return toGray(readPng(filePath));
}

/**
 * Bilinear resize with half-pixel centers (align_corners = false), the
 * convention the descriptor models were trained with.
 */
export function resizeBilinearRgb(
  img: RgbImage,
  outHeight: number,
  outWidth: number,
): RgbImage {
  const out = new Float32Array(outWidth * outHeight * 3);
  const scaleY = img.height / outHeight;
  const scaleX = img.width / outWidth;
  for (let oy = 0; oy < outHeight; oy++) {
    const sy = Math.min(Math.max((oy + 0.5) * scaleY - 0.5, 0), img.height - 1);
    const y0 = Math.floor(sy);
    const y1 = Math.min(y0 + 1, img.height - 1);
    const fy = sy - y0;
    for (let ox = 0; ox < outWidth; ox++) {
      const sx = Math.min(Math.max((ox + 0.5) * scaleX - 0.5, 0), img.width - 1);
      const x0 = Math.floor(sx);
      const x1 = Math.min(x0 + 1, img.width - 1);
      const fx = sx - x0;
      for (let c = 0; c < 3; c++) {
        const v00 = img.data[(y0 * img.width + x0) * 3 + c];
        const v01 = img.data[(y0 * img.width + x1) * 3 + c];
        const v10 = img.data[(y1 * img.width + x0) * 3 + c];
        const v11 = img.data[(y1 * img.width + x1) * 3 + c];
        const top = v00 + (v01 - v00) * fx;
        const bottom = v10 + (v11 - v10) * fx;
        out[(oy * outWidth + ox) * 3 + c] = top + (bottom - top) * fy;
      }
    }
  }
  return { width: outWidth, height: outHeight, data: out };
}
