"""Sensor-node emulation: transducers, 10-bit ADC, threshold controller.

The temperature channel models an LM35 (10 mV/degC, linear) read through
a 10-bit ADC referenced at 5 V, so one code step is 5/1023 V ~= 0.489 degC
and the worst-case quantization error is half of that. The load channel
maps the 50 kg reservoir onto the full ADC range (0.0489 kg per code).

The controller is a thermostat with a symmetric deadband around the
ideal temperature, a proportional fan law saturating at ``rpm_max``, and
a latching low-feed alarm with hysteresis driving a square-wave buzzer.
"""

from __future__ import annotations

from dataclasses import dataclass

ALARM_IDLE = "idle"
ALARM_LATCHED = "latched"


@dataclass
class SensorSpec:
    """Transducer and converter constants."""

    lm35_gain: float = 0.010        # V/degC
    adc_vref: float = 5.0           # V
    adc_levels: int = 1024          # 10-bit converter
    load_full_scale: float = 50.0   # kg mapped onto the full code range
    temp_range: tuple = (0.0, 100.0)  # simulated LM35 single-supply span, degC

    @property
    def max_code(self) -> int:
        return self.adc_levels - 1

    @property
    def temp_lsb(self) -> float:
        """degC per ADC code."""
        return self.adc_vref / self.max_code / self.lm35_gain

    @property
    def load_lsb(self) -> float:
        """kg per ADC code."""
        return self.load_full_scale / self.max_code


@dataclass(frozen=True)
class AdcCode:
    """One converter reading; ``saturated`` marks a clamped out-of-range input."""

    code: int
    saturated: bool = False

    def __post_init__(self):
        if not 0 <= self.code <= 1023:
            raise ValueError(f"ADC code out of range: {self.code}")


@dataclass(frozen=True)
class SensorSample:
    """Converted node reading; values sit exactly on the quantized grid."""

    seq: int
    ts: int          # virtual s
    temp_c: float
    load_kg: float


@dataclass
class ControlConfig:
    """Thresholds and actuator laws for the node controller."""

    t_ideal: float = 39.0        # degC setpoint
    t_deadband: float = 0.25     # degC either side where nothing actuates
    feed_alert: float = 10.0     # kg, latch below this
    feed_clear: float = 12.0     # kg, unlatch at/above this
    rpm_max: float = 3000.0
    rpm_span: float = 10.0       # degC above setpoint for full fan speed
    buzzer_period: float = 2.0   # s on, then s off, while latched

    def validate(self) -> None:
        if self.feed_clear < self.feed_alert:
            raise ValueError("feed_clear must be >= feed_alert")
        if self.rpm_span <= 0:
            raise ValueError("rpm_span must be > 0")
        if self.buzzer_period <= 0:
            raise ValueError("buzzer_period must be > 0")


@dataclass(frozen=True)
class ActuatorState:
    lamp: bool = False
    fan_rpm: float = 0.0
    alarm: str = ALARM_IDLE
    buzzer_on: bool = False
    latched_at: int | None = None


def _quantize(value: float, lo: float, hi: float, units_per_vref: float,
              max_code: int) -> AdcCode:
    saturated = value < lo or value > hi
    clamped = min(max(value, lo), hi)
    code = round(clamped / units_per_vref * max_code)
    return AdcCode(code=min(max(int(code), 0), max_code), saturated=saturated)


def read_lm35(t_true: float, spec: SensorSpec | None = None) -> AdcCode:
    """Convert a house temperature to an ADC code.

    code = round(T * gain / vref * (levels - 1)). Inputs beyond the
    simulated sensor span clamp to it and set the saturation marker.
    """
    spec = spec or SensorSpec()
    degrees_at_vref = spec.adc_vref / spec.lm35_gain
    lo, hi = spec.temp_range
    return _quantize(t_true, lo, hi, degrees_at_vref, spec.max_code)


def adc_to_celsius(code: AdcCode | int, spec: SensorSpec | None = None) -> float:
    """Inverse of :func:`read_lm35` up to half an LSB.

    The result is clamped to the simulated LM35 span, so codes beyond the
    sensor's reach read as the span ceiling (full scale -> 100.0 degC).
    """
    spec = spec or SensorSpec()
    raw = _code_of(code) * spec.temp_lsb
    lo, hi = spec.temp_range
    return min(max(raw, lo), hi)


def read_loadcell(mass_kg: float, spec: SensorSpec | None = None) -> AdcCode:
    """Convert a feeder mass to an ADC code (50 kg full scale)."""
    spec = spec or SensorSpec()
    return _quantize(mass_kg, 0.0, spec.load_full_scale, spec.load_full_scale,
                     spec.max_code)


def code_to_kg(code: AdcCode | int, spec: SensorSpec | None = None) -> float:
    spec = spec or SensorSpec()
    return _code_of(code) * spec.load_lsb


def _code_of(code: AdcCode | int) -> int:
    return code.code if isinstance(code, AdcCode) else int(code)


def sense(t_true: float, feed_mass: float, seq: int, ts: int,
          spec: SensorSpec | None = None) -> SensorSample:
    """Read both channels and assemble a quantized sample."""
    spec = spec or SensorSpec()
    return SensorSample(
        seq=seq,
        ts=ts,
        temp_c=adc_to_celsius(read_lm35(t_true, spec), spec),
        load_kg=code_to_kg(read_loadcell(feed_mass, spec), spec),
    )


def control_step(sample: SensorSample, cfg: ControlConfig,
                 prev: ActuatorState, now: int) -> ActuatorState:
    """One controller pass over a fresh sample.

    Temperature: below the deadband the lamp heats, above it the fan runs
    with speed proportional to the excess over the setpoint (saturating
    at ``rpm_max`` after ``rpm_span`` degC); inside the deadband both are
    off. Lamp and fan are mutually exclusive by construction.

    Feed: latches the alarm under ``feed_alert`` and holds it until the
    reading recovers to ``feed_clear`` — hysteresis, so sloshing between
    the two thresholds cannot clear it. The buzzer squares at
    ``buzzer_period`` (on first), anchored at the latch instant.
    """
    if sample.temp_c < cfg.t_ideal - cfg.t_deadband:
        lamp, fan_rpm = True, 0.0
    elif sample.temp_c > cfg.t_ideal + cfg.t_deadband:
        lamp = False
        fan_rpm = cfg.rpm_max * min(1.0, (sample.temp_c - cfg.t_ideal) / cfg.rpm_span)
    else:
        lamp, fan_rpm = False, 0.0

    if prev.alarm == ALARM_LATCHED:
        if sample.load_kg >= cfg.feed_clear:
            alarm, latched_at = ALARM_IDLE, None
        else:
            alarm, latched_at = ALARM_LATCHED, prev.latched_at
    else:
        if sample.load_kg < cfg.feed_alert:
            alarm, latched_at = ALARM_LATCHED, now
        else:
            alarm, latched_at = ALARM_IDLE, None

    buzzer_on = False
    if alarm == ALARM_LATCHED:
        phase = int((now - latched_at) // cfg.buzzer_period)
        buzzer_on = phase % 2 == 0

    return ActuatorState(lamp=lamp, fan_rpm=fan_rpm, alarm=alarm,
                         buzzer_on=buzzer_on, latched_at=latched_at)


def encode_frame(sample: SensorSample) -> bytes:
    """Serialize a sample as the node's two-line ASCII frame.

    Temperature line first, then load, each with exactly two fraction
    digits and a bare ``\\n`` terminator. Two decimals out-resolve the
    ADC step, so the frame is lossless for quantized values.
    """
    return f"{sample.temp_c:.2f}\n{sample.load_kg:.2f}\n".encode("ascii")
