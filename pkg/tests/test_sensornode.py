import pytest
from hypothesis import given, settings, strategies as st

from broilersim.gateway import decode_stream
from broilersim.sensornode import (ALARM_IDLE, ALARM_LATCHED, ActuatorState,
                                   AdcCode, ControlConfig, SensorSample,
                                   SensorSpec, adc_to_celsius, code_to_kg,
                                   control_step, encode_frame, read_lm35,
                                   read_loadcell, sense)

SPEC = SensorSpec()

# Independent conversion oracles, straight from the transducer laws.


def oracle_temp_code(t_c: float) -> int:
    volts = t_c * 0.010
    return round(volts / 5.0 * 1023)


def oracle_load_code(kg: float) -> int:
    return round(kg / 50.0 * 1023)


# -- temperature channel -------------------------------------------------------

def test_lm35_zero():
    assert read_lm35(0.0) == AdcCode(0)


def test_lm35_at_setpoint():
    assert oracle_temp_code(39.0) == 80  # round(79.794)
    assert read_lm35(39.0).code == 80


def test_lm35_hot_case():
    assert oracle_temp_code(47.36) == 97  # round(96.899)
    assert read_lm35(47.36).code == 97


def test_lm35_saturation_marker():
    high = read_lm35(150.0)
    assert high.saturated
    low = read_lm35(-5.0)
    assert low.code == 0 and low.saturated
    assert not read_lm35(50.0).saturated


def test_adc_to_celsius_examples():
    assert adc_to_celsius(0) == 0.0
    # code 80 -> 80*5/1023/0.01 degC, about 39.10
    assert adc_to_celsius(80) == pytest.approx(80 * 5 / 1023 / 0.01, rel=1e-12)
    assert round(adc_to_celsius(80), 2) == 39.10
    # codes beyond the sensor span read as the span ceiling
    assert adc_to_celsius(1023) == 100.0


def test_code_accepts_adccode_or_int():
    assert adc_to_celsius(AdcCode(80)) == adc_to_celsius(80)


# -- load channel ----------------------------------------------------------------

def test_loadcell_full_scale_roundtrip():
    code = read_loadcell(50.0)
    assert code.code == 1023
    assert code_to_kg(code) == 50.0


def test_loadcell_low_feed_case():
    assert oracle_load_code(9.08) == 186  # round(185.78)
    code = read_loadcell(9.08)
    assert code.code == 186
    assert code_to_kg(code) == pytest.approx(186 / 1023 * 50, rel=1e-12)
    assert round(code_to_kg(code), 3) == 9.091


def test_loadcell_zero():
    assert read_loadcell(0.0).code == 0
    assert code_to_kg(0) == 0.0


def test_loadcell_saturation():
    assert read_loadcell(60.0).saturated
    assert read_loadcell(60.0).code == 1023


# -- quantization properties ----------------------------------------------------

HALF_LSB_TEMP = 0.5 * 5 / 1023 / 0.01   # 0.2444 degC
HALF_LSB_LOAD = 0.5 * 50 / 1023         # 0.02444 kg


@given(st.floats(min_value=0.0, max_value=100.0))
@settings(max_examples=300)
def test_temperature_roundtrip_within_half_lsb(t):
    assert abs(adc_to_celsius(read_lm35(t)) - t) <= HALF_LSB_TEMP + 1e-12


@given(st.floats(min_value=0.0, max_value=50.0))
@settings(max_examples=300)
def test_load_roundtrip_within_half_lsb(kg):
    assert abs(code_to_kg(read_loadcell(kg)) - kg) <= HALF_LSB_LOAD + 1e-12


@given(st.floats(min_value=0.0, max_value=100.0),
       st.floats(min_value=0.0, max_value=100.0))
@settings(max_examples=300)
def test_adc_monotonicity(t1, t2):
    if t1 > t2:
        t1, t2 = t2, t1
    assert read_lm35(t1).code <= read_lm35(t2).code


# -- controller -------------------------------------------------------------------

IDLE = ActuatorState()


def sample_of(temp, load, ts=0):
    return SensorSample(seq=0, ts=ts, temp_c=temp, load_kg=load)


def test_hot_sample_runs_fan_proportionally():
    out = control_step(sample_of(47.41, 50.0), ControlConfig(), IDLE, now=0)
    assert not out.lamp
    assert out.fan_rpm == pytest.approx(3000 * min(1.0, 8.41 / 10), abs=1e-9)
    assert out.fan_rpm == pytest.approx(2523.0, abs=1e-9)
    assert out.alarm == ALARM_IDLE and not out.buzzer_on


def test_cold_sample_lights_lamp():
    out = control_step(sample_of(27.37, 50.0), ControlConfig(), IDLE, now=0)
    assert out.lamp and out.fan_rpm == 0.0 and out.alarm == ALARM_IDLE


def test_deadband_sample_keeps_everything_off():
    for temp in (38.80, 39.0, 39.20):
        out = control_step(sample_of(temp, 50.0), ControlConfig(), IDLE, now=0)
        assert not out.lamp and out.fan_rpm == 0.0


def test_fan_saturates_at_rpm_max():
    out = control_step(sample_of(55.0, 50.0), ControlConfig(), IDLE, now=0)
    assert out.fan_rpm == 3000.0


def test_low_feed_latches_with_square_wave():
    cfg = ControlConfig()
    state = control_step(sample_of(39.0, 9.091), cfg, IDLE, now=100)
    assert state.alarm == ALARM_LATCHED
    assert state.latched_at == 100
    assert state.buzzer_on  # first phase is on
    # walk the square wave while load stays low
    phases = []
    for now in range(101, 109):
        state = control_step(sample_of(39.0, 9.091), cfg, state, now=now)
        phases.append(state.buzzer_on)
    assert phases == [True, False, False, True, True, False, False, True]


def test_alarm_hysteresis_between_thresholds():
    cfg = ControlConfig()  # alert 10, clear 12
    state = control_step(sample_of(39.0, 9.5), cfg, IDLE, now=0)
    assert state.alarm == ALARM_LATCHED
    # oscillate between alert and clear: must stay latched
    for now, load in enumerate((10.5, 11.0, 11.9, 10.2, 11.99), start=1):
        state = control_step(sample_of(39.0, load), cfg, state, now=now)
        assert state.alarm == ALARM_LATCHED
        assert state.latched_at == 0
    state = control_step(sample_of(39.0, 12.0), cfg, state, now=6)
    assert state.alarm == ALARM_IDLE and state.latched_at is None
    assert not state.buzzer_on


@given(
    loads=st.lists(st.floats(min_value=0.0, max_value=50.0), min_size=1,
                   max_size=60),
)
@settings(max_examples=150)
def test_alarm_never_clears_below_feed_clear(loads):
    cfg = ControlConfig()
    state = control_step(sample_of(39.0, 5.0), cfg, IDLE, now=0)
    assert state.alarm == ALARM_LATCHED
    for now, load in enumerate(loads, start=1):
        state = control_step(sample_of(39.0, load), cfg, state, now=now)
        if load >= cfg.feed_clear:
            assert state.alarm == ALARM_IDLE
            break  # a later low reading starts a fresh latch episode
        assert state.alarm == ALARM_LATCHED
        assert state.latched_at == 0


@given(temp=st.floats(min_value=0.0, max_value=100.0),
       load=st.floats(min_value=0.0, max_value=50.0),
       scale=st.floats(min_value=0.01, max_value=100.0))
@settings(max_examples=200)
def test_lamp_fan_mutual_exclusion_and_rescale_invariance(temp, load, scale):
    base = ControlConfig()
    scaled = ControlConfig(rpm_max=base.rpm_max * scale)
    out = control_step(sample_of(temp, load), base, IDLE, now=0)
    out_scaled = control_step(sample_of(temp, load), scaled, IDLE, now=0)
    assert not (out.lamp and out.fan_rpm > 0)
    # the on/off decision ignores the rpm scale; only magnitude changes
    assert out.lamp == out_scaled.lamp
    assert (out.fan_rpm > 0) == (out_scaled.fan_rpm > 0)
    if out.fan_rpm > 0:
        assert out_scaled.fan_rpm == pytest.approx(out.fan_rpm * scale, rel=1e-9)


def test_buzzer_duty_cycle_exact_over_latched_window():
    cfg = ControlConfig(buzzer_period=2.0)
    state = control_step(sample_of(39.0, 5.0), cfg, IDLE, now=10)
    on_seconds = 0
    window = int(4 * cfg.buzzer_period)  # two whole double-periods
    for now in range(11, 11 + window):
        state = control_step(sample_of(39.0, 5.0), cfg, state, now=now)
        on_seconds += state.buzzer_on
    assert on_seconds == window // 2  # on exactly half the virtual time


def test_buzzer_requires_latched_alarm():
    out = control_step(sample_of(39.0, 50.0), ControlConfig(), IDLE, now=0)
    assert not out.buzzer_on and out.alarm == ALARM_IDLE


# -- framing ---------------------------------------------------------------------

def test_encode_frame_examples():
    assert encode_frame(sample_of(39.10, 24.93)) == b"39.10\n24.93\n"
    assert encode_frame(sample_of(0.0, 0.0)) == b"0.00\n0.00\n"
    assert encode_frame(sample_of(47.41, 50.0)) == b"47.41\n50.00\n"


def test_encode_frame_has_no_carriage_returns():
    frame = encode_frame(sample_of(39.10, 24.93))
    assert b"\r" not in frame
    assert frame.count(b"\n") == 2


@given(t=st.floats(min_value=0.0, max_value=100.0),
       kg=st.floats(min_value=0.0, max_value=50.0))
@settings(max_examples=300)
def test_frame_roundtrips_through_decoder(t, kg):
    sample = sense(t, kg, seq=0, ts=0)
    pairs, carry, stats = decode_stream(encode_frame(sample))
    assert stats.frames_ok == 1 and stats.lines_malformed == 0
    (temp, load), = pairs
    # the wire carries 2-decimal renderings of the quantized values
    assert temp == pytest.approx(sample.temp_c, abs=0.005)
    assert load == pytest.approx(sample.load_kg, abs=0.005)
    # and the original ADC codes survive the trip exactly
    assert read_lm35(temp).code == read_lm35(sample.temp_c).code
    assert read_loadcell(load).code == read_loadcell(sample.load_kg).code


def test_sense_emits_grid_values():
    sample = sense(39.0, 24.9, seq=3, ts=17)
    assert sample.seq == 3 and sample.ts == 17
    lsb_t = SPEC.temp_lsb
    lsb_l = SPEC.load_lsb
    assert sample.temp_c == pytest.approx(round(sample.temp_c / lsb_t) * lsb_t)
    assert sample.load_kg == pytest.approx(round(sample.load_kg / lsb_l) * lsb_l)


def test_adc_code_range_enforced():
    with pytest.raises(ValueError):
        AdcCode(1024)
    with pytest.raises(ValueError):
        AdcCode(-1)
