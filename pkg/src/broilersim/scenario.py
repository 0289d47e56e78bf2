"""Scenario files: everything a reproducible run needs, in one JSON doc.

A scenario pins the plant parameters, initial conditions, controller
thresholds, link/transport fault knobs, disturbance schedule, scripted
operator commands, and the RNG seed. ``schema_version`` guards against
stale files. Validation collects every problem with its field path
instead of stopping at the first.

Presets ship with the package: ``hot-47`` (hot day, fan case),
``cold-27`` (cold house, lamp case), ``lowfeed-9`` (feed drains below
the alert threshold, buzzer and refill case) and ``twoday`` (two virtual
days with a warmer second day, the analytics demo).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

from .envsim import DISTURBANCE_KINDS, Disturbance, EnvParams, EnvState
from .gateway import CloudCredentials, LinkConfig
from .sensornode import ControlConfig
from .service import COMMAND_KINDS

SCHEMA_VERSION = 1
PRESET_NAMES = ("hot-47", "cold-27", "lowfeed-9", "twoday")


class ScenarioError(ValueError):
    """Scenario file failed validation; message lists field paths."""


@dataclass
class ScheduledCommand:
    at: int          # virtual s at which the command is submitted
    kind: str
    payload: object = None


@dataclass
class UplinkConfig:
    reset_prob: float = 0.0   # per-post probability of a connection reset


@dataclass
class Scenario:
    name: str
    duration: int
    seed: int = 0
    env: EnvParams = field(default_factory=EnvParams)
    initial: EnvState = field(default_factory=EnvState)
    control: ControlConfig = field(default_factory=ControlConfig)
    link: LinkConfig = field(default_factory=LinkConfig)
    uplink: UplinkConfig = field(default_factory=UplinkConfig)
    credentials: CloudCredentials = field(default_factory=CloudCredentials)
    disturbances: list[Disturbance] = field(default_factory=list)
    commands: list[ScheduledCommand] = field(default_factory=list)


def _build(data: dict, source: str) -> Scenario:
    errors: list[str] = []

    def number(path: str, value, lo=None, hi=None, required=False, default=None):
        if value is None:
            if required:
                errors.append(f"{path}: required")
            return default
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            errors.append(f"{path}: must be a number, got {value!r}")
            return default
        if lo is not None and value < lo:
            errors.append(f"{path}: must be >= {lo}, got {value}")
        if hi is not None and value > hi:
            errors.append(f"{path}: must be <= {hi}, got {value}")
        return value

    def section(path: str) -> dict:
        sub = data.get(path, {})
        if not isinstance(sub, dict):
            errors.append(f"{path}: must be an object")
            return {}
        return sub

    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        errors.append(f"schema_version: expected {SCHEMA_VERSION}, got {version!r}")

    name = data.get("name") or Path(source).stem
    duration = number("duration_s", data.get("duration_s"), lo=1, required=True,
                      default=1)
    seed = data.get("seed", 0)
    if not isinstance(seed, int):
        errors.append(f"seed: must be an integer, got {seed!r}")
        seed = 0

    env_d = section("env")
    env = EnvParams(
        k_loss=number("env.k_loss", env_d.get("k_loss"), lo=0.0,
                      default=EnvParams.k_loss),
        q_lamp=number("env.q_lamp", env_d.get("q_lamp"), lo=0.0,
                      default=EnvParams.q_lamp),
        k_fan=number("env.k_fan", env_d.get("k_fan"), lo=0.0,
                     default=EnvParams.k_fan),
        per_bird_rate=number("env.per_bird_rate", env_d.get("per_bird_rate"),
                             lo=0.0, default=EnvParams.per_bird_rate),
        feeder_capacity=number("env.feeder_capacity",
                               env_d.get("feeder_capacity"), lo=1e-9,
                               default=EnvParams.feeder_capacity),
    )

    init_d = section("initial")
    flock = init_d.get("flock_size", 100)
    if not isinstance(flock, int) or flock < 0:
        errors.append(f"initial.flock_size: must be a non-negative integer, "
                      f"got {flock!r}")
        flock = 0
    initial = EnvState(
        t_true=number("initial.t_true", init_d.get("t_true"), lo=-50.0, hi=150.0,
                      default=39.0),
        feed_mass=number("initial.feed_mass", init_d.get("feed_mass"), lo=0.0,
                         hi=env.feeder_capacity, default=50.0),
        flock_size=flock,
        ambient=number("initial.ambient", init_d.get("ambient"), lo=-50.0,
                       hi=150.0, default=39.0),
    )

    ctrl_d = section("control")
    control = ControlConfig(
        t_ideal=number("control.t_ideal", ctrl_d.get("t_ideal"), lo=0.0,
                       hi=100.0, default=39.0),
        t_deadband=number("control.t_deadband", ctrl_d.get("t_deadband"),
                          lo=0.0, default=0.25),
        feed_alert=number("control.feed_alert", ctrl_d.get("feed_alert"),
                          lo=0.0, hi=50.0, default=10.0),
        feed_clear=number("control.feed_clear", ctrl_d.get("feed_clear"),
                          lo=0.0, hi=50.0, default=12.0),
        rpm_max=number("control.rpm_max", ctrl_d.get("rpm_max"), lo=1.0,
                       default=3000.0),
        rpm_span=number("control.rpm_span", ctrl_d.get("rpm_span"), lo=1e-9,
                        default=10.0),
        buzzer_period=number("control.buzzer_period",
                             ctrl_d.get("buzzer_period"), lo=1e-9, default=2.0),
    )
    if control.feed_clear < control.feed_alert:
        errors.append("control.feed_clear: must be >= control.feed_alert")

    link_d = section("link")
    link = LinkConfig(
        baud=int(number("link.baud", link_d.get("baud"), lo=300, default=9600)),
        loss_prob=number("link.loss_prob", link_d.get("loss_prob"), lo=0.0,
                         hi=1.0, default=0.0),
        corrupt_prob=number("link.corrupt_prob", link_d.get("corrupt_prob"),
                            lo=0.0, hi=1.0, default=0.0),
        rng_seed=seed,
    )

    uplink_d = section("uplink")
    uplink = UplinkConfig(
        reset_prob=number("uplink.reset_prob", uplink_d.get("reset_prob"),
                          lo=0.0, hi=1.0, default=0.0),
    )

    creds_d = section("credentials")
    credentials = CloudCredentials(
        token=str(creds_d.get("token", "demo-token")),
        temp_variable_id=str(creds_d.get("temp_variable_id", "temperature")),
        load_variable_id=str(creds_d.get("load_variable_id", "load")),
    )
    try:
        credentials.validate()
    except ValueError as exc:
        errors.append(f"credentials: {exc}")

    disturbances: list[Disturbance] = []
    raw_list = data.get("disturbances", [])
    if not isinstance(raw_list, list):
        errors.append("disturbances: must be a list")
        raw_list = []
    for i, raw in enumerate(raw_list):
        path = f"disturbances[{i}]"
        if not isinstance(raw, dict):
            errors.append(f"{path}: must be an object")
            continue
        kind = raw.get("kind")
        if kind not in DISTURBANCE_KINDS:
            errors.append(f"{path}.kind: must be one of {DISTURBANCE_KINDS}, "
                          f"got {kind!r}")
            continue
        magnitude = number(f"{path}.magnitude", raw.get("magnitude"),
                           required=True, default=0.0)
        start = int(number(f"{path}.start", raw.get("start", 0), lo=0, default=0))
        duration_s = int(number(f"{path}.duration", raw.get("duration", 0),
                                lo=0, default=0))
        disturbances.append(Disturbance(kind=kind, magnitude=magnitude,
                                        start=start, duration=duration_s))

    commands: list[ScheduledCommand] = []
    raw_list = data.get("commands", [])
    if not isinstance(raw_list, list):
        errors.append("commands: must be a list")
        raw_list = []
    for i, raw in enumerate(raw_list):
        path = f"commands[{i}]"
        if not isinstance(raw, dict):
            errors.append(f"{path}: must be an object")
            continue
        kind = raw.get("kind")
        if kind not in COMMAND_KINDS:
            errors.append(f"{path}.kind: must be one of {COMMAND_KINDS}, "
                          f"got {kind!r}")
            continue
        at = int(number(f"{path}.at", raw.get("at"), lo=0, required=True,
                        default=0))
        commands.append(ScheduledCommand(at=at, kind=kind,
                                         payload=raw.get("payload")))

    if errors:
        raise ScenarioError(
            f"invalid scenario {source}:\n  " + "\n  ".join(errors))

    return Scenario(
        name=str(name), duration=int(duration), seed=seed, env=env,
        initial=initial, control=control, link=link, uplink=uplink,
        credentials=credentials, disturbances=disturbances, commands=commands,
    )


def loads(text: str, source: str = "<memory>") -> Scenario:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid scenario {source}: not valid JSON ({exc})")
    if not isinstance(data, dict):
        raise ScenarioError(f"invalid scenario {source}: top level must be an object")
    return _build(data, source)


def load(ref: str | Path) -> Scenario:
    """Load a scenario from a file path or a packaged preset name."""
    path = Path(ref)
    if path.exists():
        return loads(path.read_text(encoding="utf-8"), source=str(path))
    if str(ref) in PRESET_NAMES:
        text = (resources.files("broilersim.scenarios") / f"{ref}.json"
                ).read_text(encoding="utf-8")
        return loads(text, source=f"preset:{ref}")
    raise ScenarioError(
        f"no scenario file {ref!r} and no preset by that name "
        f"(presets: {', '.join(PRESET_NAMES)})")


def dumps(scenario: Scenario) -> str:
    """Serialize back to the file format (useful for deriving scenarios)."""
    doc = {
        "schema_version": SCHEMA_VERSION,
        "name": scenario.name,
        "duration_s": scenario.duration,
        "seed": scenario.seed,
        "env": asdict(scenario.env),
        "initial": {
            "t_true": scenario.initial.t_true,
            "feed_mass": scenario.initial.feed_mass,
            "flock_size": scenario.initial.flock_size,
            "ambient": scenario.initial.ambient,
        },
        "control": asdict(scenario.control),
        "link": {
            "baud": scenario.link.baud,
            "loss_prob": scenario.link.loss_prob,
            "corrupt_prob": scenario.link.corrupt_prob,
        },
        "uplink": asdict(scenario.uplink),
        "credentials": {
            "token": scenario.credentials.token,
            "temp_variable_id": scenario.credentials.temp_variable_id,
            "load_variable_id": scenario.credentials.load_variable_id,
        },
        "disturbances": [asdict(d) for d in scenario.disturbances],
        "commands": [asdict(c) for c in scenario.commands],
    }
    return json.dumps(doc, indent=2) + "\n"
