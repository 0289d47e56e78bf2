"""Gateway between the node's serial byte stream and the telemetry service.

Decoding follows the node's two-line protocol: lines alternate roles,
temperature first. Any line that fails to parse as a finite decimal, or
whose value falls outside the physical range of its expected role
([0, 100] degC / [0, 50] kg), is discarded and the role alternation
resets to "expect temperature". The range check doubles as a
role-desync detector. Failures are counted, never raised.

Uplink delivery is strict FIFO with per-pair two-leg tracking
(temperature posts before load, a retried pair never re-posts a leg that
already succeeded), exponential backoff, and a bounded queue that evicts
oldest-first on overflow. After the active retry budget a pair is
"parked" but stays in line and keeps being retried at a slow cadence, so
a recovering service eventually receives everything, in order.
"""

from __future__ import annotations

import math
import random
import urllib.error
import urllib.request
import json as _json
from collections import deque
from dataclasses import dataclass

TEMP_RANGE = (0.0, 100.0)
LOAD_RANGE = (0.0, 50.0)
MAX_LINE_BYTES = 64        # protocol lines are <= 6 chars; longer is garbage

RETRY_BASE_S = 1.0
RETRY_FACTOR = 2.0
RETRY_MAX_ATTEMPTS = 5
PARKED_RETRY_S = 16.0      # cadence once the active budget is spent
BUFFER_CAPACITY = 10_000


class GatewayAuthError(Exception):
    """The service rejected our token; retrying cannot help."""


class TransportError(Exception):
    """Transient delivery failure (connection reset, service down)."""


@dataclass
class LinkConfig:
    baud: int = 9600
    loss_prob: float = 0.0     # probability a written frame is dropped whole
    corrupt_prob: float = 0.0  # per-byte probability of a flipped bit
    rng_seed: int = 0

    def validate(self) -> None:
        for name in ("loss_prob", "corrupt_prob"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {p}")


@dataclass
class CloudCredentials:
    token: str = "demo-token"
    temp_variable_id: str = "temperature"
    load_variable_id: str = "load"
    endpoint: str = "inproc"

    def validate(self) -> None:
        if not self.temp_variable_id or not self.load_variable_id:
            raise ValueError("variable ids must be non-empty")
        if self.temp_variable_id == self.load_variable_id:
            raise ValueError("variable ids must be distinct")


@dataclass
class DecodeStats:
    frames_ok: int = 0
    lines_malformed: int = 0   # lines discarded without contributing to a pair
    resyncs: int = 0

    def add(self, other: "DecodeStats") -> None:
        self.frames_ok += other.frames_ok
        self.lines_malformed += other.lines_malformed
        self.resyncs += other.resyncs


@dataclass(frozen=True)
class DecodeCarry:
    """Partial-line buffer plus the role state between decode calls."""

    buf: bytes = b""
    pending_temp: float | None = None   # parsed temp waiting for its load line
    discarding: bool = False            # skipping the tail of an oversized line


class SerialLink:
    """In-process ordered byte channel with optional loss and corruption.

    Baud paces virtual time only: each virtual second the reader may pull
    at most baud/10 bytes (8N1 framing). Loss drops a whole written frame;
    corruption flips one random bit per affected byte. Both draw from the
    seeded RNG, so a fixed seed gives an identical byte stream.
    """

    def __init__(self, config: LinkConfig | None = None):
        self.config = config or LinkConfig()
        self.config.validate()
        self._rng = random.Random(f"{self.config.rng_seed}:link")
        self._queue = bytearray()
        self.closed = False

    def write(self, data: bytes) -> None:
        if self.closed:
            raise ValueError("write to closed link")
        cfg = self.config
        if cfg.loss_prob and self._rng.random() < cfg.loss_prob:
            return
        if cfg.corrupt_prob:
            data = bytes(
                b ^ (1 << self._rng.randrange(8))
                if self._rng.random() < cfg.corrupt_prob else b
                for b in data
            )
        self._queue.extend(data)

    def read(self, seconds: float = 1.0) -> bytes:
        """Drain up to ``seconds`` worth of bytes at the configured baud."""
        budget = max(1, int(self.config.baud / 10 * seconds))
        out = bytes(self._queue[:budget])
        del self._queue[:budget]
        return out

    def close(self) -> None:
        self.closed = True

    def drained(self) -> bool:
        return len(self._queue) == 0


def _parse_line(line: bytes, lo: float, hi: float) -> float | None:
    if len(line) > MAX_LINE_BYTES:
        return None
    try:
        value = float(line.decode("ascii").strip())
    except (UnicodeDecodeError, ValueError):
        return None
    if not math.isfinite(value) or not lo <= value <= hi:
        return None
    return value


def decode_stream(
    data: bytes, carry: DecodeCarry | None = None
) -> tuple[list[tuple[float, float]], DecodeCarry, DecodeStats]:
    """Decode any byte chunk into (temperature, load) pairs.

    Returns the completed pairs, the new carry (partial line + role
    state), and this call's stats delta. Never raises on input content.
    """
    carry = carry or DecodeCarry()
    stats = DecodeStats()
    pairs: list[tuple[float, float]] = []

    buf = carry.buf + data
    pending = carry.pending_temp
    discarding = carry.discarding

    while True:
        nl = buf.find(b"\n")
        if nl < 0:
            if discarding:
                buf = b""
            elif len(buf) > MAX_LINE_BYTES:
                # Oversized fragment cannot become a valid line; drop it
                # now (bounding the carry) and skip to the next terminator.
                stats.lines_malformed += 1
                if pending is not None:
                    stats.lines_malformed += 1
                    stats.resyncs += 1
                    pending = None
                discarding = True
                buf = b""
            break
        line, buf = buf[:nl], buf[nl + 1:]
        if discarding:
            discarding = False  # terminator ends the oversized line
            continue

        if pending is None:
            value = _parse_line(line, *TEMP_RANGE)
            if value is None:
                stats.lines_malformed += 1  # already expecting temperature
            else:
                pending = value
        else:
            value = _parse_line(line, *LOAD_RANGE)
            if value is None:
                # Bad load line orphans its temperature; both are lost.
                stats.lines_malformed += 2
                stats.resyncs += 1
                pending = None
            else:
                pairs.append((pending, value))
                stats.frames_ok += 1
                pending = None

    return pairs, DecodeCarry(buf=buf, pending_temp=pending,
                              discarding=discarding), stats


@dataclass
class PendingPair:
    ts: int
    temp: float
    load: float
    temp_done: bool = False
    attempts: int = 0
    next_attempt: float = 0.0
    parked: bool = False


@dataclass
class UplinkStats:
    delivered_pairs: int = 0
    posts_ok: int = 0
    post_failures: int = 0
    parked: int = 0
    evicted: int = 0


class Uplink:
    """FIFO store-and-forward path from decoded pairs to the service.

    ``transport`` must expose ``post(token, variable_id, value, ts)`` and
    raise :class:`TransportError` on transient failure or
    :class:`GatewayAuthError` on token rejection.
    """

    def __init__(self, transport, creds: CloudCredentials,
                 capacity: int = BUFFER_CAPACITY):
        creds.validate()
        self.transport = transport
        self.creds = creds
        self.capacity = capacity
        self.queue: deque[PendingPair] = deque()
        self.stats = UplinkStats()

    def enqueue(self, ts: int, temp: float, load: float, now: int) -> None:
        self.queue.append(PendingPair(ts=ts, temp=temp, load=load,
                                      next_attempt=float(now)))
        if len(self.queue) > self.capacity:
            self.queue.popleft()  # oldest-first eviction
            self.stats.evicted += 1

    @property
    def pending(self) -> int:
        return len(self.queue)

    def tick(self, now: int) -> None:
        """Attempt head-of-line delivery; drain as far as the service allows.

        Head-of-line blocking is deliberate: it preserves per-variable
        delivery order across retries.
        """
        while self.queue:
            head = self.queue[0]
            if now < head.next_attempt:
                return
            if self._try_deliver(head, now):
                self.queue.popleft()
                self.stats.delivered_pairs += 1
            else:
                return

    def _try_deliver(self, pair: PendingPair, now: int) -> bool:
        try:
            if not pair.temp_done:
                self.transport.post(self.creds.token,
                                    self.creds.temp_variable_id,
                                    pair.temp, pair.ts)
                pair.temp_done = True
                self.stats.posts_ok += 1
            self.transport.post(self.creds.token,
                                self.creds.load_variable_id,
                                pair.load, pair.ts)
            self.stats.posts_ok += 1
            return True
        except TransportError:
            self.stats.post_failures += 1
            pair.attempts += 1
            if pair.attempts >= RETRY_MAX_ATTEMPTS:
                if not pair.parked:
                    pair.parked = True
                    self.stats.parked += 1
                delay = PARKED_RETRY_S
            else:
                delay = RETRY_BASE_S * RETRY_FACTOR ** (pair.attempts - 1)
            pair.next_attempt = now + delay
            return False

    def spill_records(self) -> list[str]:
        """Undelivered legs as ``<ts>,<variable_id>,<value>`` lines."""
        records = []
        for pair in self.queue:
            if not pair.temp_done:
                records.append(f"{pair.ts},{self.creds.temp_variable_id},{pair.temp!r}")
            records.append(f"{pair.ts},{self.creds.load_variable_id},{pair.load!r}")
        return records


class InProcessTransport:
    """Direct calls into a :class:`~broilersim.service.TelemetryStore`."""

    def __init__(self, store):
        self.store = store

    def post(self, token: str, variable_id: str, value: float, ts: int) -> None:
        from . import service

        try:
            self.store.post_value(token, variable_id, value, ts)
        except service.AuthError as exc:
            raise GatewayAuthError(str(exc)) from exc


class FlakyTransport:
    """Wraps a transport with seeded connection resets, dropped pre-delivery.

    Resets happen before the inner call, so a failed post never reaches
    the store and retries cannot duplicate points.
    """

    def __init__(self, inner, reset_prob: float = 0.0, seed: int = 0,
                 down_until: float | None = None):
        self.inner = inner
        self.reset_prob = reset_prob
        self.down_until = down_until
        self._rng = random.Random(f"{seed}:transport")
        self.clock = 0.0   # advanced by the runner for down-window checks

    def post(self, token: str, variable_id: str, value: float, ts: int) -> None:
        if self.down_until is not None and self.clock < self.down_until:
            raise TransportError("service unreachable")
        if self.reset_prob and self._rng.random() < self.reset_prob:
            raise TransportError("connection reset")
        self.inner.post(token, variable_id, value, ts)


class HttpTransport:
    """Posts over the service's HTTP API; same contract as in-process."""

    def __init__(self, base_url: str, timeout: float = 5.0):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout

    def post(self, token: str, variable_id: str, value: float, ts: int) -> None:
        url = f"{self.base_url}/v1/variables/{variable_id}/values"
        body = _json.dumps({"value": value, "ts": ts}).encode()
        req = urllib.request.Request(
            url, data=body, method="POST",
            headers={"Content-Type": "application/json", "X-Auth-Token": token},
        )
        try:
            with urllib.request.urlopen(req, timeout=self.timeout):
                pass
        except urllib.error.HTTPError as exc:
            if exc.code == 401:
                raise GatewayAuthError("token rejected") from exc
            raise TransportError(f"HTTP {exc.code}") from exc
        except urllib.error.URLError as exc:
            raise TransportError(str(exc)) from exc


class Gateway:
    """Pump loop: link bytes -> decoder -> uplink, one call per tick."""

    def __init__(self, link: SerialLink, uplink: Uplink):
        self.link = link
        self.uplink = uplink
        self.carry = DecodeCarry()
        self.stats = DecodeStats()

    def pump(self, now: int) -> int:
        """Move this second's bytes toward the service; returns pairs decoded."""
        data = self.link.read(1.0)
        pairs, self.carry, delta = decode_stream(data, self.carry)
        self.stats.add(delta)
        for temp, load in pairs:
            # The wire carries no timestamp; arrival time stamps the pair.
            self.uplink.enqueue(ts=now, temp=temp, load=load, now=now)
        self.uplink.tick(now)
        return len(pairs)

    def drain(self, now: int, max_extra_ticks: int = 20_000) -> int:
        """Post-shutdown flush: keep retrying until the queue empties.

        Returns the virtual time after draining. Gives up after
        ``max_extra_ticks`` so a dead service cannot hang shutdown; the
        leftovers go to the spill file.
        """
        transport = self.uplink.transport
        while not self.link.drained():
            now += 1
            if hasattr(transport, "clock"):
                transport.clock = now
            self.pump(now)
        ticks = 0
        while self.uplink.pending and ticks < max_extra_ticks:
            now += 1
            ticks += 1
            if hasattr(transport, "clock"):
                transport.clock = now
            self.uplink.tick(now)
        return now
