/**
 * Drives the dashboard core (client + view model, exactly what the DOM
 * binds to) against a real serve-mode simulation over HTTP.
 */

import { spawn, ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiError, TelemetryClient } from "../src/api.js";
import { DashboardModel } from "../src/model.js";

const PORT = 19000 + Math.floor(Math.random() * 900);
const BASE = `http://127.0.0.1:${PORT}`;
const TOKEN = "demo-token";
const POLL_MS = 200;           // one poll ~= 30 virtual seconds at rate 150

let child: ChildProcess;
let outDir: string;
const client = new TelemetryClient(BASE, TOKEN);
const model = new DashboardModel();

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

/** One dashboard poll: exactly what the render loop does. */
async function poll(): Promise<void> {
  try {
    model.applySnapshot(await client.snapshot());
  } catch {
    model.pollFailed();
  }
}

async function pollUntil(predicate: () => boolean,
                         deadlineMs: number): Promise<boolean> {
  const deadline = Date.now() + deadlineMs;
  while (Date.now() < deadline) {
    await poll();
    if (predicate()) return true;
    await sleep(POLL_MS);
  }
  return false;
}

beforeAll(async () => {
  outDir = mkdtempSync(join(tmpdir(), "dash-it-"));
  child = spawn("python3", [
    "-m", "broilersim", "run", "lowfeed-9",
    "--serve", "--port", String(PORT), "--rate", "150",
    "--out", outDir, "--no-figures",
  ], { stdio: ["ignore", "pipe", "pipe"] });

  const deadline = Date.now() + 20_000;
  for (;;) {
    try {
      const response = await fetch(`${BASE}/`);
      if (response.ok) break;
    } catch {
      /* not up yet */
    }
    if (Date.now() > deadline) throw new Error("service never came up");
    await sleep(100);
  }
}, 30_000);

afterAll(() => {
  child?.kill("SIGTERM");
  rmSync(outDir, { recursive: true, force: true });
});

describe("dashboard against a live lowfeed-9 run", () => {
  it("shows the latest snapshot value within two poll intervals", async () => {
    await poll();
    if (model.lastValue("temperature") === null) await poll();
    expect(model.lastValue("temperature")).not.toBeNull();
    // rendered verbatim from the service: the house sits at the setpoint
    expect(model.lastValue("temperature")).toBe("39.10");
  });

  it("refill clears the alarm banner and steps the load chart to 50.00",
     async () => {
    // feed drains below the alert threshold around virtual t=316
    const latched = await pollUntil(() => model.alarmBanner() !== null, 30_000);
    expect(latched).toBe(true);
    expect(model.alarmBanner()).toContain("low-feed");

    // the refill button's exact code path
    expect(model.commandSent("refill", null, "refill feeder")).toBe(true);
    await client.sendCommand("refill", null);

    const cleared = await pollUntil(
      () => model.alarmBanner() === null && model.lastValue("load") === "50.00",
      10_000);
    expect(cleared).toBe(true);
    expect(model.pending).toBeNull();
    expect(model.commandNote).toBe("refill feeder: confirmed");
    const loadPoints = model.series.get("load")!;
    expect(loadPoints[loadPoints.length - 1]!.value).toBe(50.0);
  });

  it("rejects an out-of-range setpoint inline without touching state",
     async () => {
    await poll();
    const before = model.latest!.config["t_ideal"];

    model.commandSent("set_ideal_temp", 500, "set ideal temperature");
    try {
      await client.sendCommand("set_ideal_temp", 500);
      throw new Error("service accepted an out-of-range setpoint");
    } catch (err) {
      if (!(err instanceof ApiError)) throw err;
      model.commandRejected(err.message);
    }
    expect(model.commandError).toContain("[20.0, 45.0]");
    expect(model.pending).toBeNull();

    // service state unchanged: the next snapshots still carry the old value
    await poll();
    await sleep(POLL_MS);
    await poll();
    expect(model.latest!.config["t_ideal"]).toBe(before);
  });
});
