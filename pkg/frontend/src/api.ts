/**
 * Thin fetch client for the telemetry service.
 *
 * Auth rides in the X-Auth-Token header on every call. Service-side
 * rejections surface as ApiError with the HTTP status and the service's
 * own message (validation errors include the legal range), so the UI
 * can show them inline without interpreting anything.
 */

import type { CommandKind, CommandPayload, Snapshot } from "./types.js";

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

async function errorOf(response: Response): Promise<ApiError> {
  let message = `HTTP ${response.status}`;
  try {
    const body = (await response.json()) as { error?: string };
    if (body.error) message = body.error;
  } catch {
    /* non-JSON error body: keep the status text */
  }
  return new ApiError(response.status, message);
}

export class TelemetryClient {
  constructor(
    readonly baseUrl: string,
    readonly token: string,
    private readonly fetchFn: typeof fetch = (...args) => fetch(...args),
  ) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
  }

  private headers(): Record<string, string> {
    return { "X-Auth-Token": this.token, "Content-Type": "application/json" };
  }

  async snapshot(): Promise<Snapshot> {
    const response = await this.fetchFn(`${this.baseUrl}/v1/snapshot`, {
      headers: this.headers(),
    });
    if (!response.ok) throw await errorOf(response);
    return (await response.json()) as Snapshot;
  }

  async sendCommand(kind: CommandKind, payload: CommandPayload): Promise<void> {
    const response = await this.fetchFn(`${this.baseUrl}/v1/commands`, {
      method: "POST",
      headers: this.headers(),
      body: JSON.stringify({ kind, payload }),
    });
    if (!response.ok) throw await errorOf(response);
  }

  exportUrl(variableId: string, start?: number, end?: number): string {
    const query = new URLSearchParams();
    if (start !== undefined) query.set("start", String(start));
    if (end !== undefined) query.set("end", String(end));
    const suffix = query.toString() ? `?${query}` : "";
    return `${this.baseUrl}/v1/variables/${variableId}/export.csv${suffix}`;
  }

  /** Fetch a CSV export (the download button turns this into a blob). */
  async exportCsv(variableId: string, start?: number, end?: number):
      Promise<string> {
    const response = await this.fetchFn(this.exportUrl(variableId, start, end), {
      headers: { "X-Auth-Token": this.token },
    });
    if (!response.ok) throw await errorOf(response);
    return response.text();
  }
}
