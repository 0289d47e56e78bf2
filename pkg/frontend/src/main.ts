/**
 * DOM bootstrap: binds the poll loop, charts, indicators, and command
 * forms to the view model. All logic worth testing lives in model.ts /
 * api.ts / chart.ts; this file is wiring only.
 */

import { ApiError, TelemetryClient } from "./api.js";
import { drawChart } from "./chart.js";
import { DashboardModel, DEFAULT_POLL_MS, formatValue } from "./model.js";
import type { CommandKind, CommandPayload, DisturbancePayload } from "./types.js";

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

let client: TelemetryClient | null = null;
let model = new DashboardModel();
let pollTimer: number | undefined;
let pollMs = DEFAULT_POLL_MS;
let commandInFlight = false;

function connect(): void {
  const url = ($("service-url") as HTMLInputElement).value.trim();
  const token = ($("token") as HTMLInputElement).value.trim();
  pollMs = Number(($("poll-ms") as HTMLInputElement).value) || DEFAULT_POLL_MS;
  client = new TelemetryClient(url, token);
  model = new DashboardModel();
  if (pollTimer !== undefined) window.clearTimeout(pollTimer);
  void pollLoop();
}

/** Single rendering loop; at most one poll in flight by construction. */
async function pollLoop(): Promise<void> {
  if (!client) return;
  try {
    model.applySnapshot(await client.snapshot());
  } catch (err) {
    model.pollFailed();
    if (err instanceof ApiError && err.status === 401) {
      model.commandError = `auth failed: ${err.message}`;
    }
  }
  render();
  pollTimer = window.setTimeout(() => void pollLoop(), pollMs);
}

async function issue(kind: CommandKind, payload: CommandPayload,
                     label: string): Promise<void> {
  if (!client || commandInFlight) return;
  if (!model.commandSent(kind, payload, label)) return;
  commandInFlight = true;
  render();
  try {
    await client.sendCommand(kind, payload);
  } catch (err) {
    model.commandRejected(err instanceof Error ? err.message : String(err));
  } finally {
    commandInFlight = false;
    render();
  }
}

function render(): void {
  const snap = model.latest;
  $("status-dot").className = model.connected ? "dot live" : "dot dead";
  $("clock").textContent = snap ? `t=${snap.clock}s` : "–";

  for (const id of ["temperature", "load"]) {
    const reading = snap?.variables[id];
    $(`${id}-value`).textContent = reading
      ? `${formatValue(reading.value)} ${reading.unit}`
      : "–";
    const points = model.series.get(id) ?? [];
    drawChart($(`${id}-chart`) as HTMLCanvasElement, points,
              id === "temperature" ? "#e3b341" : "#58a6ff");
  }

  const act = snap?.actuators ?? {};
  $("lamp-state").textContent = act.lamp ? "ON" : "off";
  $("lamp-state").className = `state ${act.lamp ? "active" : ""}`;
  $("fan-state").textContent = act.fan_rpm
    ? `${formatValue(act.fan_rpm)} RPM` : "0 RPM";
  $("fan-state").className = `state ${act.fan_rpm ? "active" : ""}`;
  $("buzzer-state").textContent = act.buzzer_on ? "SOUNDING" : "quiet";
  $("buzzer-state").className = `state ${act.buzzer_on ? "alarm" : ""}`;

  const banner = model.alarmBanner();
  const bannerEl = $("alarm-banner");
  bannerEl.textContent = banner ?? "";
  bannerEl.style.display = banner ? "block" : "none";

  const setpoint = snap?.config["t_ideal"];
  $("setpoint-readout").textContent =
    setpoint === undefined ? "–" : `${setpoint} °C`;
  const alert = snap?.config["feed_alert"];
  $("feed-alert-readout").textContent =
    alert === undefined ? "–" : `${alert} kg`;

  $("command-note").textContent = model.commandNote;
  $("command-error").textContent = model.commandError;
  document.querySelectorAll<HTMLButtonElement>("button[data-cmd]")
    .forEach((b) => { b.disabled = model.pending !== null; });
}

async function downloadCsv(variableId: string): Promise<void> {
  if (!client) return;
  try {
    const text = await client.exportCsv(variableId);
    const blob = new Blob([text], { type: "text/csv" });
    const link = document.createElement("a");
    link.href = URL.createObjectURL(blob);
    link.download = `${variableId}.csv`;
    link.click();
    URL.revokeObjectURL(link.href);
  } catch (err) {
    model.commandError = err instanceof Error ? err.message : String(err);
    render();
  }
}

function numberFrom(id: string): number {
  return Number(($(id) as HTMLInputElement).value);
}

function bind(): void {
  $("connect").addEventListener("click", connect);
  $("refill").addEventListener("click",
    () => void issue("refill", null, "refill feeder"));
  $("ack").addEventListener("click",
    () => void issue("ack_alarm", null, "acknowledge alarm"));
  $("apply-setpoint").addEventListener("click", () => {
    void issue("set_ideal_temp", numberFrom("setpoint-input"),
               "set ideal temperature");
  });
  $("apply-feed-alert").addEventListener("click", () => {
    void issue("set_feed_alert", numberFrom("feed-alert-input"),
               "set feed alert");
  });
  $("inject").addEventListener("click", () => {
    const payload: DisturbancePayload = {
      kind: ($("disturbance-kind") as HTMLSelectElement)
        .value as DisturbancePayload["kind"],
      magnitude: numberFrom("disturbance-magnitude"),
      duration: numberFrom("disturbance-duration") || 0,
    };
    void issue("inject_disturbance", payload, "inject disturbance");
  });
  $("download-temperature").addEventListener("click",
    () => void downloadCsv("temperature"));
  $("download-load").addEventListener("click",
    () => void downloadCsv("load"));
}

bind();
