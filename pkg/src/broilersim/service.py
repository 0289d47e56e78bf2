"""Token-authenticated time-series store with operator command queue.

Storage is an in-process append-only log per variable; nothing ever
mutates or deletes a stored point. Virtual second 0 maps to the Unix
epoch when rendering CSV timestamps, which keeps exports byte-stable and
timezone-free. Operator commands are validated on submission and
enqueued; the simulation runner drains the queue at the start of each
virtual tick, so a command never lands mid-tick and replays stay
deterministic.

A single re-entrant lock serializes writes (one writer per series is the
contract; one writer overall satisfies it) while readers always see a
consistent prefix of each append-only series.
"""

from __future__ import annotations

import json
import math
import threading
from bisect import bisect_left, bisect_right
from collections import deque
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

TEMP_UNIT = "°C"
LOAD_UNIT = "kg"

CMD_REFILL = "refill"
CMD_SET_IDEAL_TEMP = "set_ideal_temp"
CMD_SET_FEED_ALERT = "set_feed_alert"
CMD_INJECT_DISTURBANCE = "inject_disturbance"
CMD_ACK_ALARM = "ack_alarm"
COMMAND_KINDS = (CMD_REFILL, CMD_SET_IDEAL_TEMP, CMD_SET_FEED_ALERT,
                 CMD_INJECT_DISTURBANCE, CMD_ACK_ALARM)

# Legal payload ranges for scalar commands, surfaced in validation errors.
COMMAND_RANGES = {
    CMD_SET_IDEAL_TEMP: (20.0, 45.0),
    CMD_SET_FEED_ALERT: (0.0, 48.0),
}
DISTURBANCE_MAGNITUDE_RANGES = {
    "ambient_step": (-30.0, 30.0),
    "ambient_ramp": (-30.0, 30.0),
    "feed_dump": (-50.0, 50.0),
}


class ServiceError(Exception):
    """Base for service-level failures."""


class AuthError(ServiceError):
    """Missing or invalid token."""


class NotFoundError(ServiceError):
    """Unknown variable id."""


class ValidationError(ServiceError):
    """Payload outside its legal range or otherwise unusable."""


@dataclass(frozen=True)
class TelemetryPoint:
    variable_id: str
    ts: int
    value: float
    seq: int = 0    # insertion sequence, disambiguates equal timestamps


@dataclass
class VariableSeries:
    variable_id: str
    display_name: str
    unit: str
    _ts: list[int] = field(default_factory=list)
    _values: list[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self._ts)

    def append(self, ts: int, value: float, seq: int) -> TelemetryPoint:
        self._ts.append(ts)
        self._values.append(value)
        return TelemetryPoint(self.variable_id, ts, value, seq)

    def last(self) -> TelemetryPoint | None:
        if not self._ts:
            return None
        return TelemetryPoint(self.variable_id, self._ts[-1], self._values[-1],
                              len(self._ts) - 1)

    def range(self, t1: float, t2: float) -> list[TelemetryPoint]:
        lo = bisect_left(self._ts, t1)
        hi = bisect_right(self._ts, t2)
        return [TelemetryPoint(self.variable_id, self._ts[i], self._values[i], i)
                for i in range(lo, hi)]


@dataclass(frozen=True)
class OperatorCommand:
    kind: str
    payload: object = None
    issued_at: int = 0


def virtual_ts_to_iso(ts: int) -> str:
    """Render a virtual second as ISO-8601 UTC anchored at the Unix epoch."""
    return datetime.fromtimestamp(ts, tz=timezone.utc).strftime(
        "%Y-%m-%dT%H:%M:%SZ")


def iso_to_virtual_ts(text: str) -> int:
    dt = datetime.strptime(text, "%Y-%m-%dT%H:%M:%SZ").replace(
        tzinfo=timezone.utc)
    return int(dt.timestamp())


class TelemetryStore:
    """The service state: variables, points, node snapshot, command queue."""

    def __init__(self, token: str = "demo-token"):
        if not token:
            raise ValueError("token must be non-empty")
        self.token = token
        self._lock = threading.RLock()
        self._variables: dict[str, VariableSeries] = {}
        self._seq = 0
        self._commands: deque[OperatorCommand] = deque()
        self.node_state: dict = {}
        self.control_view: dict = {}
        self.clock = 0

    # -- setup -------------------------------------------------------------

    def create_variable(self, variable_id: str, display_name: str,
                        unit: str) -> VariableSeries:
        with self._lock:
            if variable_id in self._variables:
                raise ValueError(f"variable {variable_id!r} already exists")
            series = VariableSeries(variable_id, display_name, unit)
            self._variables[variable_id] = series
            return series

    def variables(self) -> list[str]:
        with self._lock:
            return list(self._variables)

    def series_info(self, variable_id: str) -> tuple[str, str]:
        """(display_name, unit) for a variable."""
        with self._lock:
            series = self._series(variable_id)
            return series.display_name, series.unit

    def _check_token(self, token: str) -> None:
        if token != self.token:
            raise AuthError("invalid token")

    def _series(self, variable_id: str) -> VariableSeries:
        try:
            return self._variables[variable_id]
        except KeyError:
            raise NotFoundError(f"unknown variable {variable_id!r}") from None

    # -- ingestion ---------------------------------------------------------

    def post_value(self, token: str, variable_id: str, value: float,
                   ts: int) -> TelemetryPoint:
        """Append one point. Auth is checked before anything else."""
        self._check_token(token)
        with self._lock:
            series = self._series(variable_id)
            if not isinstance(value, (int, float)) or isinstance(value, bool) \
                    or not math.isfinite(value):
                raise ValidationError(f"value must be finite, got {value!r}")
            ts = int(ts)
            last = series.last()
            if last is not None and ts < last.ts:
                raise ValidationError(
                    f"ts {ts} is earlier than the series head {last.ts}")
            point = series.append(ts, float(value), self._seq)
            self._seq += 1
            return point

    # -- queries -----------------------------------------------------------

    def query_series(self, variable_id: str, t1: float = -math.inf,
                     t2: float = math.inf) -> list[TelemetryPoint]:
        """Points with t1 <= ts <= t2, both ends inclusive, in ts order."""
        if t1 > t2:
            raise ValidationError(f"start {t1} is after end {t2}")
        with self._lock:
            return self._series(variable_id).range(t1, t2)

    def export_csv(self, variable_id: str, t1: float = -math.inf,
                   t2: float = math.inf) -> bytes:
        """Byte-stable CSV: header plus one row per point, 2-digit values."""
        with self._lock:
            series = self._series(variable_id)
            points = self.query_series(variable_id, t1, t2)
            name = series.display_name
        lines = ["timestamp,variable,value"]
        lines.extend(
            f"{virtual_ts_to_iso(p.ts)},{name},{p.value:.2f}" for p in points)
        return ("\n".join(lines) + "\n").encode("utf-8")

    def latest_snapshot(self, token: str) -> dict:
        """Most recent point per variable plus node/actuator/alarm state."""
        self._check_token(token)
        with self._lock:
            variables = {}
            for vid, series in self._variables.items():
                last = series.last()
                variables[vid] = None if last is None else {
                    "value": last.value,
                    "ts": last.ts,
                    "unit": series.unit,
                    "name": series.display_name,
                }
            alarms = []
            if self.node_state.get("alarm") == "latched":
                alarms.append({
                    "kind": "low-feed",
                    "latched_at": self.node_state.get("latched_at"),
                    "acked": bool(self.node_state.get("acked", False)),
                })
            return {
                "clock": self.clock,
                "variables": variables,
                "actuators": dict(self.node_state),
                "alarms": alarms,
                "config": dict(self.control_view),
            }

    # -- operator commands ---------------------------------------------------

    def submit_command(self, token: str, cmd: OperatorCommand) -> dict:
        """Validate and enqueue; the runner applies queued commands at the
        start of the next virtual tick."""
        self._check_token(token)
        if cmd.kind not in COMMAND_KINDS:
            raise ValidationError(
                f"unknown command {cmd.kind!r}; legal kinds: {COMMAND_KINDS}")
        if cmd.kind in COMMAND_RANGES:
            lo, hi = COMMAND_RANGES[cmd.kind]
            value = cmd.payload
            if not isinstance(value, (int, float)) or isinstance(value, bool) \
                    or not math.isfinite(value) or not lo <= value <= hi:
                raise ValidationError(
                    f"{cmd.kind} payload must be a number in [{lo}, {hi}], "
                    f"got {value!r}")
        elif cmd.kind == CMD_INJECT_DISTURBANCE:
            self._validate_disturbance(cmd.payload)
        with self._lock:
            self._commands.append(cmd)
            return {"accepted": True, "kind": cmd.kind,
                    "queued_at": cmd.issued_at}

    @staticmethod
    def _validate_disturbance(payload) -> None:
        if not isinstance(payload, dict):
            raise ValidationError(
                "inject_disturbance payload must be an object with "
                "kind/magnitude and optional start/duration")
        kind = payload.get("kind")
        if kind not in DISTURBANCE_MAGNITUDE_RANGES:
            raise ValidationError(
                f"disturbance kind must be one of "
                f"{tuple(DISTURBANCE_MAGNITUDE_RANGES)}, got {kind!r}")
        lo, hi = DISTURBANCE_MAGNITUDE_RANGES[kind]
        magnitude = payload.get("magnitude")
        if not isinstance(magnitude, (int, float)) or isinstance(magnitude, bool) \
                or not math.isfinite(magnitude) or not lo <= magnitude <= hi:
            raise ValidationError(
                f"{kind} magnitude must be a number in [{lo}, {hi}], "
                f"got {magnitude!r}")
        duration = payload.get("duration", 0)
        if not isinstance(duration, int) or duration < 0:
            raise ValidationError("duration must be a non-negative integer")
        start = payload.get("start")
        if start is not None and (not isinstance(start, int) or start < 0):
            raise ValidationError("start must be a non-negative integer")

    def drain_commands(self) -> list[OperatorCommand]:
        with self._lock:
            drained = list(self._commands)
            self._commands.clear()
            return drained

    # -- node feedback -------------------------------------------------------

    def report_node_state(self, state: dict, clock: int) -> None:
        with self._lock:
            self.node_state = state
            self.clock = clock

    def report_control_view(self, view: dict) -> None:
        with self._lock:
            self.control_view = view

    # -- persistence -----------------------------------------------------------

    def save(self, directory: str | Path) -> None:
        """Snapshot every series to ``<dir>/<variable_id>.log``.

        Records are ``<ts>,<variable_id>,<value>`` with the value in
        shortest round-trip float form, so a load reproduces the store
        bit-exactly.
        """
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        with self._lock:
            meta = {}
            for vid, series in self._variables.items():
                meta[vid] = {"display_name": series.display_name,
                             "unit": series.unit}
                lines = [f"{ts},{vid},{value!r}"
                         for ts, value in zip(series._ts, series._values)]
                path = directory / f"{vid}.log"
                path.write_text("\n".join(lines) + ("\n" if lines else ""),
                                encoding="utf-8")
            (directory / "meta.json").write_text(
                json.dumps(meta, indent=2) + "\n", encoding="utf-8")

    def load(self, directory: str | Path) -> None:
        """Restore series previously written by :meth:`save`."""
        directory = Path(directory)
        meta_path = directory / "meta.json"
        meta = (json.loads(meta_path.read_text(encoding="utf-8"))
                if meta_path.exists() else {})
        for path in sorted(directory.glob("*.log")):
            vid = path.stem
            info = meta.get(vid, {})
            with self._lock:
                if vid not in self._variables:
                    unit = info.get("unit",
                                    TEMP_UNIT if "temp" in vid else LOAD_UNIT)
                    self.create_variable(vid, info.get("display_name", vid),
                                         unit)
                series = self._variables[vid]
                for line in path.read_text(encoding="utf-8").splitlines():
                    ts_text, _, value_text = line.split(",", 2)
                    series.append(int(ts_text), float(value_text), self._seq)
                    self._seq += 1


def default_store(token: str = "demo-token",
                  temp_variable_id: str = "temperature",
                  load_variable_id: str = "load") -> TelemetryStore:
    """A store with the two standard variables registered."""
    store = TelemetryStore(token=token)
    store.create_variable(temp_variable_id, "temperature", TEMP_UNIT)
    store.create_variable(load_variable_id, "load", LOAD_UNIT)
    return store
