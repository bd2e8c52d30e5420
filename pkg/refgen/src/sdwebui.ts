/** Backend that bridges the wire protocol onto an SD-webui-style API.
 *
 * Maps one generate job to a single img2img call: the init render becomes the
 * init image, the regenerate mask becomes the inpainting mask (white =
 * inpaint, same convention), `strength` maps to denoising_strength, and the
 * depth image rides along as a ControlNet depth unit whose weight is w_depth.
 * w_inpaint scales the inpainting mask blur/fill behavior only coarsely
 * (full preservation at >= 1 via inpainting_fill=1, original content).
 */

import { Backend, GenerateJob, RgbImage } from "./types";
import { decodeRgbB64, encodeGrayB64, encodeRgbB64 } from "./png";

export class UpstreamError extends Error {}

interface SdWebuiOptions {
  upstreamUrl: string;
  steps: number;
  device: string;
  controlnetDepthModel: string;
  fetchImpl?: typeof fetch;
}

export class SdWebuiBackend implements Backend {
  readonly id: string;
  private readonly opts: SdWebuiOptions;
  private readonly fetchImpl: typeof fetch;
  private isReady = false;

  constructor(opts: SdWebuiOptions) {
    this.opts = opts;
    this.fetchImpl = opts.fetchImpl ?? fetch;
    this.id = `refgen:sdwebui(${opts.upstreamUrl})`;
  }

  ready(): boolean {
    return this.isReady;
  }

  /** Probe the upstream once; the server polls this during startup. */
  async probe(): Promise<boolean> {
    try {
      const resp = await this.fetchImpl(`${this.opts.upstreamUrl}/sdapi/v1/options`);
      this.isReady = resp.ok;
    } catch {
      this.isReady = false;
    }
    return this.isReady;
  }

  buildPayload(job: GenerateJob): Record<string, unknown> {
    return {
      prompt: job.prompt,
      negative_prompt: "blurry, low quality, watermark",
      init_images: [encodeRgbB64(job.init)],
      mask: encodeGrayB64(job.mask),
      inpainting_mask_invert: 0, // white = inpaint
      inpainting_fill: job.wInpaint >= 1 ? 1 : 0, // 1 = keep original content
      denoising_strength: job.strength,
      seed: job.seed,
      steps: this.opts.steps,
      sampler_name: "DPM++ 2M",
      cfg_scale: 7,
      width: job.depth.width,
      height: job.depth.height,
      alwayson_scripts: {
        controlnet: {
          args: [
            {
              enabled: true,
              module: "none", // depth map is supplied directly
              model: this.opts.controlnetDepthModel,
              image: encodeGrayB64(job.depth),
              weight: job.wDepth,
              resize_mode: "Just Resize",
              control_mode: "Balanced",
            },
          ],
        },
      },
    };
  }

  async generate(job: GenerateJob): Promise<RgbImage> {
    let resp: Response;
    try {
      resp = await this.fetchImpl(`${this.opts.upstreamUrl}/sdapi/v1/img2img`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(this.buildPayload(job)),
      });
    } catch (err) {
      throw new UpstreamError(`upstream unreachable: ${err}`);
    }
    if (!resp.ok) {
      throw new UpstreamError(`upstream answered ${resp.status}`);
    }
    const payload = (await resp.json()) as { images?: string[] };
    if (!payload.images || payload.images.length === 0) {
      throw new UpstreamError("upstream returned no images");
    }
    const rgb = decodeRgbB64(payload.images[0]);
    if (rgb.width !== job.depth.width || rgb.height !== job.depth.height) {
      throw new UpstreamError(
        `upstream returned ${rgb.width}x${rgb.height}, expected ${job.depth.width}x${job.depth.height}`,
      );
    }
    return rgb;
  }
}
