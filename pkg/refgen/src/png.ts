/** Base64 PNG encode/decode helpers over pngjs. */

import { PNG } from "pngjs";
import { GrayImage, RgbImage } from "./types";

export class PngDecodeError extends Error {}

function decode(b64: string): PNG {
  let buf: Buffer;
  try {
    buf = Buffer.from(b64, "base64");
  } catch (err) {
    throw new PngDecodeError(`bad base64: ${err}`);
  }
  if (buf.length === 0) {
    throw new PngDecodeError("empty image payload");
  }
  try {
    return PNG.sync.read(buf);
  } catch (err) {
    throw new PngDecodeError(`bad png: ${err}`);
  }
}

/** Decode to grayscale by averaging channels (inputs are gray already). */
export function decodeGrayB64(b64: string): GrayImage {
  const png = decode(b64);
  const out = new Float64Array(png.width * png.height);
  for (let i = 0; i < out.length; i++) {
    const o = i * 4;
    out[i] = (png.data[o] + png.data[o + 1] + png.data[o + 2]) / 3 / 255;
  }
  return { width: png.width, height: png.height, data: out };
}

export function decodeRgbB64(b64: string): RgbImage {
  const png = decode(b64);
  const out = new Float64Array(png.width * png.height * 3);
  for (let i = 0; i < png.width * png.height; i++) {
    out[i * 3] = png.data[i * 4] / 255;
    out[i * 3 + 1] = png.data[i * 4 + 1] / 255;
    out[i * 3 + 2] = png.data[i * 4 + 2] / 255;
  }
  return { width: png.width, height: png.height, data: out };
}

export function encodeGrayB64(img: GrayImage): string {
  const png = new PNG({ width: img.width, height: img.height });
  for (let i = 0; i < img.width * img.height; i++) {
    const v = Math.round(Math.min(1, Math.max(0, img.data[i])) * 255);
    png.data[i * 4] = png.data[i * 4 + 1] = png.data[i * 4 + 2] = v;
    png.data[i * 4 + 3] = 255;
  }
  return PNG.sync.write(png).toString("base64");
}

export function encodeRgbB64(img: RgbImage): string {
  const png = new PNG({ width: img.width, height: img.height });
  for (let i = 0; i < img.width * img.height; i++) {
    for (let c = 0; c < 3; c++) {
      const v = Math.min(1, Math.max(0, img.data[i * 3 + c]));
      png.data[i * 4 + c] = Math.round(v * 255);
    }
    png.data[i * 4 + 3] = 255;
  }
  return PNG.sync.write(png).toString("base64");
}
