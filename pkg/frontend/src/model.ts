/**
 * Dashboard view model: rolling chart windows, indicator state, alarm
 * banner, and the single-slot pending-command lifecycle.
 *
 * Holds no authority and runs no control logic — every displayed
 * decision (lamp/fan/buzzer/alarm) comes from the node by way of the
 * service snapshot, and every mutation goes through /v1/commands. A
 * command stays "pending" until a later snapshot visibly reflects its
 * effect, or the service rejects it (rejection text is shown verbatim,
 * including the legal range).
 */

import type {
  CommandKind,
  CommandPayload,
  SeriesPoint,
  Snapshot,
} from "./types.js";

export const DEFAULT_WINDOW = 600;
export const DEFAULT_POLL_MS = 1000;

export interface PendingCommand {
  kind: CommandKind;
  payload: CommandPayload;
  label: string;
  sentAtClock: number;
}

/** Render a reading exactly as the service reported it, 2 decimals. */
export function formatValue(value: number): string {
  return value.toFixed(2);
}

export class DashboardModel {
  readonly series = new Map<string, SeriesPoint[]>();
  latest: Snapshot | null = null;
  pending: PendingCommand | null = null;
  commandNote = "";
  commandError = "";
  pollFailures = 0;

  constructor(readonly window: number = DEFAULT_WINDOW) {}

  get connected(): boolean {
    return this.latest !== null && this.pollFailures < 3;
  }

  applySnapshot(snap: Snapshot): void {
    this.latest = snap;
    this.pollFailures = 0;
    for (const [id, reading] of Object.entries(snap.variables)) {
      if (!reading) continue;
      let points = this.series.get(id);
      if (!points) {
        points = [];
        this.series.set(id, points);
      }
      const last = points[points.length - 1];
      if (!last || last.ts !== reading.ts || last.value !== reading.value) {
        points.push({ ts: reading.ts, value: reading.value });
        if (points.length > this.window) {
          points.splice(0, points.length - this.window);
        }
      }
    }
    if (this.pending && this.reflects(this.pending, snap)) {
      this.commandNote = `${this.pending.label}: confirmed`;
      this.pending = null;
    }
  }

  pollFailed(): void {
    this.pollFailures += 1;
  }

  /** One in-flight command at a time; callers disable controls on false. */
  commandSent(kind: CommandKind, payload: CommandPayload,
              label: string): boolean {
    if (this.pending) return false;
    this.pending = {
      kind,
      payload,
      label,
      sentAtClock: this.latest?.clock ?? 0,
    };
    this.commandError = "";
    this.commandNote = `${label}: pending`;
    return true;
  }

  commandRejected(message: string): void {
    this.pending = null;
    this.commandNote = "";
    this.commandError = message;
  }

  /** Alarm banner text, or null when no alarm is latched. */
  alarmBanner(): string | null {
    const alarm = this.latest?.alarms[0];
    if (!alarm) return null;
    const since = alarm.latched_at === null ? "" : ` since t=${alarm.latched_at}s`;
    const acked = alarm.acked ? " (acknowledged)" : "";
    return `${alarm.kind} alarm latched${since}${acked}`;
  }

  lastValue(variableId: string): string | null {
    const reading = this.latest?.variables[variableId];
    return reading ? formatValue(reading.value) : null;
  }

  /** Did this snapshot make the pending command's effect visible? */
  private reflects(cmd: PendingCommand, snap: Snapshot): boolean {
    switch (cmd.kind) {
      case "refill": {
        const load = snap.variables["load"];
        const clear = snap.config["feed_clear"] ?? 12;
        return load !== null && load !== undefined && load.value >= clear;
      }
      case "set_ideal_temp":
        return snap.config["t_ideal"] === cmd.payload;
      case "set_feed_alert":
        return snap.config["feed_alert"] === cmd.payload;
      case "ack_alarm": {
        const alarm = snap.alarms[0];
        return alarm === undefined || alarm.acked;
      }
      case "inject_disturbance":
        // no direct observable; confirmed once the sim ticked past it
        return snap.clock > cmd.sentAtClock;
    }
  }
}
