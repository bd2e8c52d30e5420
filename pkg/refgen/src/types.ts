/** Wire-level and in-process types for the generator protocol. */

/** JSON body of POST /v1/generate. */
export interface GenerateRequestBody {
  prompt: string;
  seed: number;
  /** Regeneration strength in [0, 1]; 1 generates from scratch. */
  strength: number;
  /** Depth conditioning weight in [0, 2]. */
  w_depth: number;
  /** Inpainting conditioning weight in [0, 2]. */
  w_inpaint: number;
  /** Image height in pixels; width may be a multiple (horizontal grid). */
  size: number;
  /** 8-bit grayscale PNG, normalized depth, near bright, background 0. */
  depth_png_b64: string;
  /** 8-bit grayscale PNG, 255 = regenerate this pixel. */
  mask_png_b64: string;
  /** 8-bit RGB PNG of the current render. */
  init_png_b64: string;
}

export interface GenerateResponseBody {
  rgb_png_b64: string;
  generator_id: string;
}

/** Planar float image in [0, 1]. */
export interface GrayImage {
  width: number;
  height: number;
  data: Float64Array;
}

/** Interleaved RGB float image in [0, 1]. */
export interface RgbImage {
  width: number;
  height: number;
  data: Float64Array; // length = width * height * 3
}

/** A decoded, validated generation job. */
export interface GenerateJob {
  prompt: string;
  seed: number;
  strength: number;
  wDepth: number;
  wInpaint: number;
  size: number;
  depth: GrayImage;
  mask: GrayImage;
  init: RgbImage;
}

export interface Backend {
  readonly id: string;
  /** False while still loading; the server answers 503 until then. */
  ready(): boolean;
  generate(job: GenerateJob): Promise<RgbImage>;
}

export interface ServerConfig {
  port: number;
  /** Diffusion step count passed through to real backends. */
  steps: number;
  /** Device hint passed through to real backends. */
  device: string;
}
