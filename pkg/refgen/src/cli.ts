/** Entry point: refgen [--port N] [--steps N] [--device D]
 *                      [--backend procedural|sdwebui] [--upstream URL]
 *                      [--depth-model NAME]
 *
 * REFGEN_UPSTREAM_URL supplies --upstream when unset.
 */

import { ProceduralBackend } from "./backend";
import { SdWebuiBackend } from "./sdwebui";
import { createApp } from "./server";
import { Backend, ServerConfig } from "./types";

interface CliOptions extends ServerConfig {
  backend: string;
  upstream: string;
  depthModel: string;
}

export function parseArgs(argv: string[]): CliOptions {
  const opts: CliOptions = {
    port: 8194,
    steps: 20,
    device: "cuda",
    backend: "procedural",
    upstream: process.env.REFGEN_UPSTREAM_URL ?? "",
    depthModel: "control_v11f1p_sd15_depth",
  };
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    const next = () => {
      if (i + 1 >= argv.length) throw new Error(`${arg} needs a value`);
      return argv[++i];
    };
    switch (arg) {
      case "--port":
        opts.port = parseInt(next(), 10);
        break;
      case "--steps":
        opts.steps = parseInt(next(), 10);
        break;
      case "--device":
        opts.device = next();
        break;
      case "--backend":
        opts.backend = next();
        break;
      case "--upstream":
        opts.upstream = next();
        break;
      case "--depth-model":
        opts.depthModel = next();
        break;
      default:
        throw new Error(`unknown flag ${arg}`);
    }
  }
  if (!Number.isFinite(opts.port) || opts.port < 0 || opts.port > 65535) {
    throw new Error("--port must be a valid port number");
  }
  if (!Number.isFinite(opts.steps) || opts.steps < 1) {
    throw new Error("--steps must be >= 1");
  }
  return opts;
}

function buildBackend(opts: CliOptions): Backend {
  if (opts.backend === "procedural") {
    return new ProceduralBackend();
  }
  if (opts.backend === "sdwebui") {
    if (!opts.upstream) {
      throw new Error("--backend sdwebui needs --upstream or REFGEN_UPSTREAM_URL");
    }
    const backend = new SdWebuiBackend({
      upstreamUrl: opts.upstream,
      steps: opts.steps,
      device: opts.device,
      controlnetDepthModel: opts.depthModel,
    });
    const poll = setInterval(() => {
      void backend.probe().then((ok) => {
        if (ok) clearInterval(poll);
      });
    }, 2000);
    void backend.probe();
    return backend;
  }
  throw new Error(`unknown backend ${opts.backend}; use procedural or sdwebui`);
}

function main(): void {
  let opts: CliOptions;
  try {
    opts = parseArgs(process.argv.slice(2));
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    process.exit(1);
  }
  const backend = buildBackend(opts);
  const app = createApp(backend);
  app.listen(opts.port, () => {
    console.log(`refgen listening on :${opts.port} (backend ${backend.id}, steps ${opts.steps})`);
  });
}

if (require.main === module) {
  main();
}
