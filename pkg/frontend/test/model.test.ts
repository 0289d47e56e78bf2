import { describe, expect, it } from "vitest";

import { DashboardModel, formatValue } from "../src/model.js";
import type { Snapshot } from "../src/types.js";

function snap(overrides: Partial<Snapshot> = {}): Snapshot {
  return {
    clock: 0,
    variables: {
      temperature: { value: 39.1, ts: 0, unit: "°C", name: "temperature" },
      load: { value: 24.93, ts: 0, unit: "kg", name: "load" },
    },
    actuators: {
      lamp: false, fan_rpm: 0, alarm: "idle", buzzer_on: false,
      latched_at: null, acked: false,
    },
    alarms: [],
    config: { t_ideal: 39.0, feed_alert: 10.0, feed_clear: 12.0 },
    ...overrides,
  };
}

function at(base: Snapshot, clock: number, temp: number, load: number): Snapshot {
  return {
    ...base,
    clock,
    variables: {
      temperature: { value: temp, ts: clock, unit: "°C", name: "temperature" },
      load: { value: load, ts: clock, unit: "kg", name: "load" },
    },
  };
}

describe("rolling chart windows", () => {
  it("appends one point per new reading and keeps at most `window`", () => {
    const model = new DashboardModel(5);
    for (let t = 0; t < 12; t++) {
      model.applySnapshot(at(snap(), t, 39 + t * 0.01, 24.9));
    }
    const points = model.series.get("temperature")!;
    expect(points).toHaveLength(5);
    expect(points[0]!.ts).toBe(7);
    expect(points[4]!.ts).toBe(11);
  });

  it("does not duplicate a point when polls outpace the sim", () => {
    const model = new DashboardModel();
    const s = snap();
    model.applySnapshot(s);
    model.applySnapshot(s);
    expect(model.series.get("temperature")).toHaveLength(1);
  });

  it("skips variables with no reading yet", () => {
    const model = new DashboardModel();
    model.applySnapshot(snap({ variables: { temperature: null, load: null } }));
    expect(model.series.size).toBe(0);
  });
});

describe("verbatim rendering", () => {
  it("formats exactly what the service reported, two decimals", () => {
    expect(formatValue(39.1)).toBe("39.10");
    expect(formatValue(50)).toBe("50.00");
    expect(formatValue(9.090909090909092)).toBe("9.09");
  });

  it("lastValue comes straight from the snapshot", () => {
    const model = new DashboardModel();
    model.applySnapshot(snap());
    expect(model.lastValue("load")).toBe("24.93");
    expect(model.lastValue("humidity")).toBeNull();
  });
});

describe("alarm banner", () => {
  it("is hidden when no alarm is latched", () => {
    const model = new DashboardModel();
    model.applySnapshot(snap());
    expect(model.alarmBanner()).toBeNull();
  });

  it("shows kind, latch time, and ack state", () => {
    const model = new DashboardModel();
    model.applySnapshot(snap({
      alarms: [{ kind: "low-feed", latched_at: 316, acked: false }],
    }));
    expect(model.alarmBanner()).toBe("low-feed alarm latched since t=316s");
    model.applySnapshot(snap({
      alarms: [{ kind: "low-feed", latched_at: 316, acked: true }],
    }));
    expect(model.alarmBanner()).toContain("(acknowledged)");
  });
});

describe("pending command lifecycle", () => {
  it("allows only one in-flight command", () => {
    const model = new DashboardModel();
    model.applySnapshot(snap());
    expect(model.commandSent("refill", null, "refill feeder")).toBe(true);
    expect(model.commandSent("ack_alarm", null, "ack")).toBe(false);
    expect(model.commandNote).toBe("refill feeder: pending");
  });

  it("refill stays pending until the load reading recovers", () => {
    const model = new DashboardModel();
    model.applySnapshot(at(snap(), 100, 39.1, 9.09));
    model.commandSent("refill", null, "refill feeder");
    model.applySnapshot(at(snap(), 101, 39.1, 9.09)); // not reflected yet
    expect(model.pending).not.toBeNull();
    model.applySnapshot(at(snap(), 102, 39.1, 50.0));
    expect(model.pending).toBeNull();
    expect(model.commandNote).toBe("refill feeder: confirmed");
  });

  it("setpoint change confirms when the config echoes it", () => {
    const model = new DashboardModel();
    model.applySnapshot(snap());
    model.commandSent("set_ideal_temp", 32.0, "set ideal temperature");
    model.applySnapshot(snap());
    expect(model.pending).not.toBeNull();
    model.applySnapshot(snap({
      config: { t_ideal: 32.0, feed_alert: 10.0, feed_clear: 12.0 },
    }));
    expect(model.pending).toBeNull();
  });

  it("a rejection clears pending and surfaces the message inline", () => {
    const model = new DashboardModel();
    model.applySnapshot(snap());
    model.commandSent("set_ideal_temp", 500, "set ideal temperature");
    model.commandRejected(
      "set_ideal_temp payload must be a number in [20.0, 45.0], got 500");
    expect(model.pending).toBeNull();
    expect(model.commandError).toContain("[20.0, 45.0]");
    // a fresh command clears the stale error
    model.commandSent("set_ideal_temp", 32.0, "set ideal temperature");
    expect(model.commandError).toBe("");
  });

  it("ack confirms when the snapshot shows the alarm acknowledged", () => {
    const model = new DashboardModel();
    model.applySnapshot(snap({
      alarms: [{ kind: "low-feed", latched_at: 10, acked: false }],
    }));
    model.commandSent("ack_alarm", null, "acknowledge alarm");
    model.applySnapshot(snap({
      alarms: [{ kind: "low-feed", latched_at: 10, acked: true }],
    }));
    expect(model.pending).toBeNull();
  });
});

describe("connection state", () => {
  it("drops to disconnected after three straight poll failures", () => {
    const model = new DashboardModel();
    model.applySnapshot(snap());
    expect(model.connected).toBe(true);
    model.pollFailed();
    model.pollFailed();
    expect(model.connected).toBe(true);
    model.pollFailed();
    expect(model.connected).toBe(false);
    model.applySnapshot(snap());
    expect(model.connected).toBe(true);
  });
});
