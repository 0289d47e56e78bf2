"""Full-pipeline execution on a shared virtual clock.

One tick is one virtual second. The tick order is fixed and is the whole
determinism story:

    1. submit scheduled scenario commands due now, then drain and apply
       every queued operator command (commands land only on tick
       boundaries, never mid-tick),
    2. apply one second of every active disturbance,
    3. sense, run the controller, log actuator transitions,
    4. push the encoded frame onto the serial link,
    5. pump the gateway (decode + uplink) and report node state,
    6. step the plant.

Headless mode runs the loop flat out; serve mode paces it against the
wall clock and lets the HTTP service feed commands in live. Both use
this same loop.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import envsim, sensornode
from .envsim import Disturbance, EnvState
from .gateway import (DecodeStats, FlakyTransport, Gateway, InProcessTransport,
                      SerialLink, Uplink, UplinkStats)
from .scenario import Scenario
from .sensornode import ActuatorState, ALARM_LATCHED
from .service import (CMD_ACK_ALARM, CMD_INJECT_DISTURBANCE, CMD_REFILL,
                      CMD_SET_FEED_ALERT, CMD_SET_IDEAL_TEMP, OperatorCommand,
                      TelemetryStore, default_store)


@dataclass(frozen=True)
class Event:
    """One actuator transition, as written to the event log."""

    ts: int
    name: str     # lamp | fan | alarm | buzzer
    old: str
    new: str

    def line(self) -> str:
        return f"{self.ts},{self.name},{self.old},{self.new}"


@dataclass
class RunResult:
    scenario: Scenario
    store: TelemetryStore
    events: list[Event]
    decode_stats: DecodeStats
    uplink_stats: UplinkStats
    final_env: EnvState
    ticks: int
    wall_seconds: float
    frames_sent: int
    spill_records: list[str]
    history: list[tuple] = field(default_factory=list)  # (sample, actuators)

    def stats_dict(self) -> dict:
        return {
            "ticks": self.ticks,
            "wall_seconds": round(self.wall_seconds, 3),
            "frames_sent": self.frames_sent,
            "decode": {
                "frames_ok": self.decode_stats.frames_ok,
                "lines_malformed": self.decode_stats.lines_malformed,
                "resyncs": self.decode_stats.resyncs,
            },
            "uplink": {
                "delivered_pairs": self.uplink_stats.delivered_pairs,
                "posts_ok": self.uplink_stats.posts_ok,
                "post_failures": self.uplink_stats.post_failures,
                "parked": self.uplink_stats.parked,
                "evicted": self.uplink_stats.evicted,
                "spilled": len(self.spill_records),
            },
            "events": len(self.events),
            "final_env": {
                "t_true": self.final_env.t_true,
                "feed_mass": self.final_env.feed_mass,
                "ambient": self.final_env.ambient,
                "clock": self.final_env.clock,
            },
        }


class SimulationRun:
    """Owns every component of one scenario execution."""

    def __init__(self, scenario: Scenario, store: TelemetryStore | None = None,
                 keep_history: bool = False):
        self.scenario = scenario
        self.env = replace(scenario.initial, clock=0)
        self.params = scenario.env
        # Copies: commands may mutate the live config, and the same
        # scenario object must stay reusable for same-seed replays.
        self.cfg = replace(scenario.control)
        self.cfg.validate()
        self.store = store or default_store(
            token=scenario.credentials.token,
            temp_variable_id=scenario.credentials.temp_variable_id,
            load_variable_id=scenario.credentials.load_variable_id,
        )
        self.link = SerialLink(replace(scenario.link, rng_seed=scenario.seed))
        transport = InProcessTransport(self.store)
        self.transport = FlakyTransport(transport,
                                        reset_prob=scenario.uplink.reset_prob,
                                        seed=scenario.seed)
        self.uplink = Uplink(self.transport, scenario.credentials)
        self.gateway = Gateway(self.link, self.uplink)

        self.actuators = ActuatorState()
        self.disturbances: list[Disturbance] = list(scenario.disturbances)
        self.events: list[Event] = []
        self.history: list[tuple] = []
        self.keep_history = keep_history
        self.frames_sent = 0
        self._acked = False
        self._scheduled = sorted(scenario.commands, key=lambda c: c.at)
        self._next_scheduled = 0
        self._seq = 0

    # -- command application -------------------------------------------------

    def _apply_command(self, cmd: OperatorCommand, now: int) -> None:
        if cmd.kind == CMD_REFILL:
            self.env = envsim.refill_feeder(self.env,
                                            self.params.feeder_capacity)
        elif cmd.kind == CMD_SET_IDEAL_TEMP:
            self.cfg.t_ideal = float(cmd.payload)
        elif cmd.kind == CMD_SET_FEED_ALERT:
            self.cfg.feed_alert = float(cmd.payload)
            # Preserve the hysteresis gap whatever the operator picks.
            self.cfg.feed_clear = min(self.cfg.feed_alert + 2.0,
                                      self.params.feeder_capacity)
        elif cmd.kind == CMD_INJECT_DISTURBANCE:
            payload = dict(cmd.payload)
            self.disturbances.append(Disturbance(
                kind=payload["kind"],
                magnitude=float(payload["magnitude"]),
                start=int(payload.get("start") or now),
                duration=int(payload.get("duration", 0)),
            ))
        elif cmd.kind == CMD_ACK_ALARM:
            if self.actuators.alarm == ALARM_LATCHED:
                self._acked = True

    def _submit_scheduled(self, now: int) -> None:
        while (self._next_scheduled < len(self._scheduled)
               and self._scheduled[self._next_scheduled].at <= now):
            cmd = self._scheduled[self._next_scheduled]
            self._next_scheduled += 1
            self.store.submit_command(
                self.scenario.credentials.token,
                OperatorCommand(kind=cmd.kind, payload=cmd.payload,
                                issued_at=now))

    # -- event log -------------------------------------------------------------

    def _log_transitions(self, prev: ActuatorState, new: ActuatorState,
                         now: int) -> None:
        if prev.lamp != new.lamp:
            self.events.append(Event(now, "lamp", _onoff(prev.lamp),
                                     _onoff(new.lamp)))
        if (prev.fan_rpm > 0) != (new.fan_rpm > 0):
            self.events.append(Event(now, "fan", _rpm(prev.fan_rpm),
                                     _rpm(new.fan_rpm)))
        if prev.alarm != new.alarm:
            self.events.append(Event(now, "alarm", prev.alarm, new.alarm))
        if prev.buzzer_on != new.buzzer_on:
            self.events.append(Event(now, "buzzer", _onoff(prev.buzzer_on),
                                     _onoff(new.buzzer_on)))

    # -- the loop -------------------------------------------------------------

    def tick(self, now: int) -> None:
        self._submit_scheduled(now)
        for cmd in self.store.drain_commands():
            self._apply_command(cmd, now)

        for d in self.disturbances:
            self.env = envsim.apply_disturbance(self.env, d,
                                                self.params.feeder_capacity)

        sample = sensornode.sense(self.env.t_true, self.env.feed_mass,
                                  seq=self._seq, ts=now)
        self._seq += 1
        new_actuators = sensornode.control_step(sample, self.cfg,
                                                self.actuators, now)
        if new_actuators.alarm != ALARM_LATCHED:
            self._acked = False
        elif self._acked and new_actuators.buzzer_on:
            new_actuators = replace(new_actuators, buzzer_on=False)
        self._log_transitions(self.actuators, new_actuators, now)
        self.actuators = new_actuators
        if self.keep_history:
            self.history.append((sample, new_actuators))

        self.link.write(sensornode.encode_frame(sample))
        self.frames_sent += 1

        self.transport.clock = now
        self.gateway.pump(now)

        self.store.report_node_state({
            "lamp": new_actuators.lamp,
            "fan_rpm": new_actuators.fan_rpm,
            "alarm": new_actuators.alarm,
            "buzzer_on": new_actuators.buzzer_on,
            "latched_at": new_actuators.latched_at,
            "acked": self._acked,
        }, clock=now)
        self.store.report_control_view({
            "t_ideal": self.cfg.t_ideal,
            "t_deadband": self.cfg.t_deadband,
            "feed_alert": self.cfg.feed_alert,
            "feed_clear": self.cfg.feed_clear,
            "rpm_max": self.cfg.rpm_max,
            "rpm_span": self.cfg.rpm_span,
            "buzzer_period": self.cfg.buzzer_period,
        })

        self.env = envsim.step_env(self.env, self.params, new_actuators,
                                   dt=1.0, rpm_max=self.cfg.rpm_max)

    def run(self, rate: float | None = None,
            checkpoint_dir: str | Path | None = None,
            checkpoint_every: int = 300) -> RunResult:
        """Execute the whole scenario; ``rate`` paces virtual vs wall time.

        With ``checkpoint_dir`` set, the store is persisted every
        ``checkpoint_every`` virtual seconds — durability for long paced
        runs. Headless runs persist once at the end instead (rewriting
        growing logs every few hundred ticks would dominate the run).
        """
        started = time.monotonic()
        period = (1.0 / rate) if rate else 0.0
        next_deadline = time.monotonic()
        for now in range(self.scenario.duration):
            self.tick(now)
            if checkpoint_dir and now and now % checkpoint_every == 0:
                self.store.save(checkpoint_dir)
            if period:
                next_deadline += period
                delay = next_deadline - time.monotonic()
                if delay > 0:
                    time.sleep(delay)
        self.link.close()
        self.gateway.drain(self.scenario.duration)
        spill = self.uplink.spill_records()
        return RunResult(
            scenario=self.scenario,
            store=self.store,
            events=self.events,
            decode_stats=self.gateway.stats,
            uplink_stats=self.uplink.stats,
            final_env=self.env,
            ticks=self.scenario.duration,
            wall_seconds=time.monotonic() - started,
            frames_sent=self.frames_sent,
            spill_records=spill,
            history=self.history,
        )


def _onoff(flag: bool) -> str:
    return "on" if flag else "off"


def _rpm(rpm: float) -> str:
    return "0" if rpm == 0 else f"{rpm:.2f}"


def execute(scenario: Scenario, keep_history: bool = False,
            store: TelemetryStore | None = None) -> RunResult:
    """Headless end-to-end run of a scenario."""
    return SimulationRun(scenario, store=store,
                         keep_history=keep_history).run()


def write_artifacts(result: RunResult, out_dir: str | Path,
                    figures: bool = True) -> dict[str, Path]:
    """Persist a run: store logs, CSV exports, event log, stats, figures."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths: dict[str, Path] = {}

    store_dir = out_dir / "store"
    result.store.save(store_dir)
    paths["store"] = store_dir

    events_path = out_dir / "events.log"
    events_path.write_text(
        "".join(e.line() + "\n" for e in result.events), encoding="utf-8")
    paths["events"] = events_path

    stats_path = out_dir / "stats.json"
    stats_path.write_text(json.dumps(result.stats_dict(), indent=2) + "\n",
                          encoding="utf-8")
    paths["stats"] = stats_path

    if result.spill_records:
        spill_path = out_dir / "spill.log"
        spill_path.write_text(
            "".join(line + "\n" for line in result.spill_records),
            encoding="utf-8")
        paths["spill"] = spill_path

    for vid in result.store.variables():
        csv_path = out_dir / f"export_{vid}.csv"
        csv_path.write_bytes(result.store.export_csv(vid))
        paths[f"export_{vid}"] = csv_path

    if figures:
        from . import report

        for vid in result.store.variables():
            points = result.store.query_series(vid)
            if not points:
                continue
            name, unit = result.store.series_info(vid)
            fig_path = out_dir / f"{vid}.png"
            report.plot_series(points, unit, name, fig_path)
            paths[f"figure_{vid}"] = fig_path

    return paths


def replay_diff(result_a_csv: bytes, result_b_csv: bytes) -> str | None:
    """First differing line between two exports, or None when identical."""
    if result_a_csv == result_b_csv:
        return None
    a_lines = result_a_csv.decode("utf-8", "replace").splitlines()
    b_lines = result_b_csv.decode("utf-8", "replace").splitlines()
    for i, (a, b) in enumerate(zip(a_lines, b_lines), start=1):
        if a != b:
            return f"line {i}: {a!r} != {b!r}"
    return (f"line {min(len(a_lines), len(b_lines)) + 1}: "
            f"lengths differ ({len(a_lines)} vs {len(b_lines)} lines)")
