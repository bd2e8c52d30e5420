/** Deterministic procedural backend: depth-shaded, prompt-colored output.
 *
 * Stands in for a diffusion model so the server (and everything upstream of
 * it) can run fully offline. The conditioning semantics match the protocol:
 * output preserves init outside the regenerate mask when w_inpaint >= 1,
 * blends by w_inpaint below 1, and mixes pattern/init by `strength` inside
 * the mask. w_depth scales how strongly depth modulates the shading.
 */

import { Backend, GenerateJob, RgbImage } from "./types";

/** Small fast seeded PRNG (mulberry32). */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a |= 0;
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function fnv1a(text: string): number {
  let h = 0x811c9dc5;
  for (let i = 0; i < text.length; i++) {
    h ^= text.charCodeAt(i);
    h = Math.imul(h, 0x01000193);
  }
  return h >>> 0;
}

function hsvToRgb(h: number, s: number, v: number): [number, number, number] {
  const i = Math.floor(h * 6);
  const f = h * 6 - i;
  const p = v * (1 - s);
  const q = v * (1 - f * s);
  const t = v * (1 - (1 - f) * s);
  switch (i % 6) {
    case 0: return [v, t, p];
    case 1: return [q, v, p];
    case 2: return [p, v, t];
    case 3: return [p, q, v];
    case 4: return [t, p, v];
    default: return [v, p, q];
  }
}

/** Smooth value noise on a coarse lattice, bilinearly interpolated. */
function valueNoise(width: number, height: number, cell: number, rand: () => number): Float64Array {
  const gw = Math.ceil(width / cell) + 1;
  const gh = Math.ceil(height / cell) + 1;
  const grid = new Float64Array(gw * gh);
  for (let i = 0; i < grid.length; i++) grid[i] = rand();
  const out = new Float64Array(width * height);
  for (let y = 0; y < height; y++) {
    const gy = y / cell;
    const y0 = Math.floor(gy);
    const fy = gy - y0;
    for (let x = 0; x < width; x++) {
      const gx = x / cell;
      const x0 = Math.floor(gx);
      const fx = gx - x0;
      const i00 = grid[y0 * gw + x0];
      const i10 = grid[y0 * gw + x0 + 1];
      const i01 = grid[(y0 + 1) * gw + x0];
      const i11 = grid[(y0 + 1) * gw + x0 + 1];
      out[y * width + x] =
        i00 * (1 - fx) * (1 - fy) + i10 * fx * (1 - fy) + i01 * (1 - fx) * fy + i11 * fx * fy;
    }
  }
  return out;
}

export class ProceduralBackend implements Backend {
  readonly id = "refgen:procedural";

  ready(): boolean {
    return true;
  }

  async generate(job: GenerateJob): Promise<RgbImage> {
    const { width, height } = job.depth;
    const rand = mulberry32((job.seed ^ fnv1a(job.prompt)) >>> 0);
    const hue = fnv1a(job.prompt) / 4294967296;
    const [br, bg, bb] = hsvToRgb(hue, 0.6, 1.0);
    const noise = valueNoise(width, height, Math.max(8, job.size / 32), rand);
    const wd = Math.min(1, Math.max(0, job.wDepth));
    const wi = Math.min(1, Math.max(0, job.wInpaint));
    const s = job.strength;

    const out = new Float64Array(width * height * 3);
    for (let i = 0; i < width * height; i++) {
      const d = job.depth.data[i];
      const fg = d > 0;
      // Shading: flat base color, modulated toward depth-shaded by w_depth,
      // with a gentle noise grain so output is visibly non-uniform.
      const shade = fg ? (1 - wd) * 0.75 + wd * (0.35 + 0.55 * d) : 0;
      const grain = fg ? 0.85 + 0.3 * noise[i] : 0;
      const pattern = [br * shade * grain, bg * shade * grain, bb * shade * grain];
      const regen = job.mask.data[i] > 0.5;
      for (let c = 0; c < 3; c++) {
        const init = job.init.data[i * 3 + c];
        const blended = s * pattern[c] + (1 - s) * init;
        let v: number;
        if (regen) {
          v = blended;
        } else if (job.wInpaint >= 1) {
          v = init;
        } else {
          v = wi * init + (1 - wi) * blended;
        }
        out[i * 3 + c] = Math.min(1, Math.max(0, v));
      }
    }
    return { width, height, data: out };
  }
}
