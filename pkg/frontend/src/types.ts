/**
 * Wire types for the telemetry service JSON, mirrored verbatim.
 * The dashboard never derives or converts values: what the service
 * reports is what gets rendered.
 */

export interface VariableReading {
  value: number;
  ts: number;
  unit: string;
  name: string;
}

export interface ActuatorView {
  lamp: boolean;
  fan_rpm: number;
  alarm: "idle" | "latched";
  buzzer_on: boolean;
  latched_at: number | null;
  acked: boolean;
}

export interface AlarmView {
  kind: string;
  latched_at: number | null;
  acked: boolean;
}

export interface Snapshot {
  clock: number;
  variables: Record<string, VariableReading | null>;
  actuators: Partial<ActuatorView>;
  alarms: AlarmView[];
  config: Record<string, number>;
}

export type CommandKind =
  | "refill"
  | "set_ideal_temp"
  | "set_feed_alert"
  | "inject_disturbance"
  | "ack_alarm";

export interface DisturbancePayload {
  kind: "ambient_step" | "ambient_ramp" | "feed_dump";
  magnitude: number;
  start?: number;
  duration?: number;
}

export type CommandPayload = number | DisturbancePayload | null;

export interface SeriesPoint {
  ts: number;
  value: number;
}
