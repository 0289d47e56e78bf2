"""Ground-truth model of the broiler house.

Single-node thermal plant plus a feed reservoir, advanced on a virtual
clock with fixed-step forward Euler:

    dT/dt = k_loss * (ambient - T)
          + q_lamp * [lamp on]
          - k_fan  * (fan_rpm / rpm_max) * (T - ambient)

The fan exchanges house air with ambient air, so it drives the house
temperature toward ambient from either side and can never cool below it.
Feed depletes linearly with the flock size and is clamped to the
[0, feeder capacity] range by every mutator, so the reservoir invariant
holds for any actuator/disturbance/command sequence.

All transition functions are pure: they take a state and return a new
one, which keeps replays deterministic and instances trivially parallel.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

FEEDER_CAPACITY_KG = 50.0
DEFAULT_RPM_MAX = 3000.0

AMBIENT_STEP = "ambient_step"
AMBIENT_RAMP = "ambient_ramp"
FEED_DUMP = "feed_dump"
DISTURBANCE_KINDS = (AMBIENT_STEP, AMBIENT_RAMP, FEED_DUMP)


@dataclass(frozen=True)
class EnvState:
    """Snapshot of the house at one virtual instant."""

    t_true: float = 39.0        # house temperature, degC
    feed_mass: float = 50.0     # feed in the dispenser, kg
    flock_size: int = 100       # birds drawing feed
    ambient: float = 39.0       # outside air temperature, degC
    clock: int = 0              # virtual seconds since scenario start


@dataclass
class EnvParams:
    """Plant rates. Defaults land scenario temperatures in the 27-48 degC
    band within minutes of virtual time."""

    k_loss: float = 3.3e-4          # 1/s, heat exchange with ambient
    q_lamp: float = 8.3e-3          # degC/s when the heat lamp is on (~0.5 degC/min)
    k_fan: float = 1.3e-3           # 1/s extra exchange at full fan speed
    per_bird_rate: float = 1.74e-6  # kg/s feed intake per bird (~0.15 kg/bird/day)
    feeder_capacity: float = FEEDER_CAPACITY_KG


@dataclass(frozen=True)
class Disturbance:
    """Operator- or scenario-injected change of the surroundings.

    ``ambient_step`` and ``feed_dump`` fire once, on the first virtual
    second of their window.  ``ambient_ramp`` spreads its magnitude
    linearly over ``duration`` seconds.  Out-of-window application is a
    no-op, so callers may apply every disturbance every tick.
    """

    kind: str
    magnitude: float            # degC for ambient kinds, kg for feed_dump
    start: int = 0              # virtual s
    duration: int = 0           # virtual s; 0 means instantaneous

    def __post_init__(self):
        if self.kind not in DISTURBANCE_KINDS:
            raise ValueError(f"unknown disturbance kind {self.kind!r}")
        if self.duration < 0:
            raise ValueError("disturbance duration must be >= 0")

    def active_at(self, clock: int) -> bool:
        return self.start <= clock < self.start + max(self.duration, 1)


def step_env(
    state: EnvState,
    params: EnvParams,
    actuators,
    dt: float,
    rpm_max: float = DEFAULT_RPM_MAX,
) -> EnvState:
    """Advance the plant by one forward-Euler step of ``dt`` virtual seconds.

    ``actuators`` only needs ``lamp`` (bool) and ``fan_rpm`` (float)
    attributes; ``rpm_max`` normalises the fan term.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")

    fan_frac = min(1.0, max(0.0, actuators.fan_rpm / rpm_max))
    dtemp = params.k_loss * (state.ambient - state.t_true)
    if actuators.lamp:
        dtemp += params.q_lamp
    # Fan pulls the house toward ambient; it cannot cool below it.
    dtemp -= params.k_fan * fan_frac * (state.t_true - state.ambient)

    feed = state.feed_mass - dt * params.per_bird_rate * state.flock_size
    feed = min(max(feed, 0.0), params.feeder_capacity)

    return replace(
        state,
        t_true=state.t_true + dt * dtemp,
        feed_mass=feed,
        clock=state.clock + int(dt),
    )


def apply_disturbance(
    state: EnvState,
    d: Disturbance,
    capacity: float = FEEDER_CAPACITY_KG,
) -> EnvState:
    """Apply one virtual second of ``d`` to ``state``.

    No-op outside the disturbance window; the caller keeps its own clock
    and is expected to call once per tick.
    """
    if not d.active_at(state.clock):
        return state
    if d.magnitude == 0.0:
        return state

    if d.kind == AMBIENT_STEP:
        # One-shot: only the first second of the window fires.
        if state.clock >= d.start + 1:
            return state
        return replace(state, ambient=state.ambient + d.magnitude)
    if d.kind == AMBIENT_RAMP:
        per_second = d.magnitude / max(d.duration, 1)
        return replace(state, ambient=state.ambient + per_second)
    # feed_dump: one-shot, clamped to the reservoir range.
    if state.clock >= d.start + 1:
        return state
    feed = min(max(state.feed_mass + d.magnitude, 0.0), capacity)
    return replace(state, feed_mass=feed)


def refill_feeder(state: EnvState, capacity: float = FEEDER_CAPACITY_KG) -> EnvState:
    """Reload the dispenser to capacity. Idempotent."""
    return replace(state, feed_mass=capacity)
