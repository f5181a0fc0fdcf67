import io
import math
from dataclasses import replace

import numpy as np
import pytest

from micropump.errors import CurveError, InvalidSpecError, StepSizeError
from micropump.pump_dynamics import (
    DriveSignal,
    PumpConfig,
    SimOptions,
    SimResult,
    diagnose_actuation,
    fit_sinusoid,
    net_flow_rate,
    simulate,
    write_sim_csv,
)
from micropump.valve_mechanics import (
    derive_lumped_params,
    standard_valve,
    steady_state_amplitude,
    steady_state_phase,
)


def _with_drive(config: PumpConfig, **kwargs) -> PumpConfig:
    return replace(config, drive=replace(config.drive, **kwargs))


def _synthetic_result(t, q_out, frequency_hz=130.0):
    zeros = np.zeros_like(t)
    return SimResult(
        time_s=t.copy(),
        y_in_m=zeros.copy(),
        y_out_m=zeros.copy(),
        pressure_pa=zeros.copy(),
        q_in_m3_s=zeros.copy(),
        q_out_m3_s=q_out.copy(),
        frequency_hz=frequency_hz,
        net_flow_m3_s=0.0,
        backflow_fraction=0.0,
        outlet_phase_lag_rad=0.0,
        converged=True,
        cycles_run=1,
    )


def test_zero_voltage_gives_identically_zero_result():
    config = _with_drive(PumpConfig(), voltage_amplitude_v=0.0)
    result = simulate(config)
    assert result.net_flow_m3_s == 0.0
    for arr in (result.y_in_m, result.y_out_m, result.pressure_pa,
                result.q_in_m3_s, result.q_out_m3_s):
        assert np.all(arr == 0.0)
    assert result.converged


@pytest.mark.parametrize("mode", ["prescribed", "pressure_coupled"])
def test_disabled_checks_rectify_nothing(mode):
    # Identical valves, symmetric forcing, free (no-contact) motion: the net
    # flow must vanish by symmetry.
    config = replace(PumpConfig(), forcing_mode=mode, check_valves_enabled=False)
    result = simulate(config)
    peak = float(np.max(np.abs(result.q_out_m3_s)))
    assert peak > 0.0
    assert abs(result.net_flow_m3_s) < 1e-3 * peak


def test_contact_free_response_matches_closed_form():
    # Prescribed forcing, contact disabled: the outlet valve is a plain
    # driven linear oscillator, so its steady state must match the analytic
    # amplitude and phase.
    zeta = 0.5
    base = derive_lumped_params(standard_valve(), 0.0)
    c = 2.0 * zeta * math.sqrt(base.spring_n_per_m * base.mass_kg)
    params = base.with_damping(c)
    omega = 0.8 * base.natural_frequency_rad_s
    config = PumpConfig(
        inlet_damping_n_s_per_m=c,
        outlet_damping_n_s_per_m=c,
        drive=DriveSignal(frequency_hz=omega / (2.0 * math.pi)),
        forcing_mode="prescribed",
        check_valves_enabled=False,
    )
    result = simulate(config, SimOptions(max_cycles=25, convergence_tol=0.0))
    amp, phase, _ = fit_sinusoid(result.time_s, result.y_out_m, omega)
    force = config.drive.force_amplitude_n
    assert amp == pytest.approx(steady_state_amplitude(params, force, omega), rel=1e-6)
    assert phase == pytest.approx(steady_state_phase(params, omega), rel=1e-6)


def test_pressure_coupled_continuity_residual():
    config = PumpConfig()
    result = simulate(config)
    drive = config.drive
    s = drive.stroke_volume_m3 * drive.omega_rad_s * np.cos(
        drive.omega_rad_s * result.time_s
    )
    residual = np.abs(result.q_in_m3_s - result.q_out_m3_s - s)
    scale = np.maximum.reduce([
        np.abs(result.q_in_m3_s),
        np.abs(result.q_out_m3_s),
        np.abs(s),
        np.full_like(s, 1e-15),
    ])
    assert np.all(residual < 1e-9 * scale)


@pytest.mark.parametrize("mode", ["prescribed", "pressure_coupled"])
def test_non_penetration_and_travel_limit(mode):
    config = replace(PumpConfig(), forcing_mode=mode)
    result = simulate(config)
    limit = config.chamber.valve_travel_limit_m
    for arr in (result.y_in_m, result.y_out_m):
        assert np.min(arr) >= 0.0
        assert np.max(arr) <= limit + 1e-15


@pytest.mark.parametrize("mode", ["prescribed", "pressure_coupled"])
def test_grid_convergence_on_net_flow(mode):
    config = replace(PumpConfig(), forcing_mode=mode)
    coarse = simulate(config)
    fine = simulate(config, SimOptions(steps_per_cycle=4000))
    assert coarse.net_flow_m3_s == pytest.approx(fine.net_flow_m3_s, rel=5e-3)


def test_net_flow_rate_zero_series():
    t = np.linspace(0.0, 1.0 / 130.0, 2001)
    result = _synthetic_result(t, np.zeros_like(t))
    assert net_flow_rate(result) == 0.0


def test_net_flow_rate_half_rectified_sine():
    # mean of q0 * max(0, sin(w t)) over a period is q0 / pi
    f = 130.0
    omega = 2.0 * math.pi * f
    t = np.linspace(0.0, 1.0 / f, 2001)
    q0 = 3.7e-6
    result = _synthetic_result(t, q0 * np.maximum(0.0, np.sin(omega * t)), f)
    assert net_flow_rate(result) == pytest.approx(q0 / math.pi, rel=1e-5)


def test_net_flow_rate_empty_series_raises():
    empty = np.array([])
    result = _synthetic_result(empty, empty)
    with pytest.raises(CurveError):
        net_flow_rate(result)


def test_diagnose_rectified_flow_is_normal():
    f = 130.0
    t = np.linspace(0.0, 1.0 / f, 2001)
    q = 1e-6 * np.maximum(0.0, np.sin(2.0 * math.pi * f * t))
    diag = diagnose_actuation(_synthetic_result(t, q, f))
    assert diag.classification == "normal"
    assert diag.backflow_fraction == 0.0


def test_diagnose_pure_sine_is_abnormal():
    # A zero-mean sine splits half and half between forward and reverse.
    f = 130.0
    t = np.linspace(0.0, 1.0 / f, 2001)
    q = 1e-6 * np.sin(2.0 * math.pi * f * t)
    diag = diagnose_actuation(_synthetic_result(t, q, f))
    assert diag.backflow_fraction == pytest.approx(0.5, rel=1e-6)
    assert diag.classification == "abnormal"


def test_diagnose_disabled_checks_is_abnormal():
    config = replace(PumpConfig(), check_valves_enabled=False)
    diag = diagnose_actuation(simulate(config))
    assert diag.classification == "abnormal"


def test_default_config_is_normal_and_pumps_forward():
    result = simulate(PumpConfig())
    assert result.converged
    assert result.net_flow_m3_s > 0.0
    diag = diagnose_actuation(result)
    assert diag.classification == "normal"
    assert diag.backflow_fraction < 0.25


def test_sim_csv_format():
    result = simulate(PumpConfig(), SimOptions(max_cycles=3, convergence_tol=0.0))
    buf = io.StringIO()
    write_sim_csv(result, buf, comment="stamp 123")
    lines = buf.getvalue().splitlines()
    assert lines[0] == "# stamp 123"
    assert lines[1] == "t,y_in,y_out,p_chamber,q_in,q_out"
    assert len(lines) == 2 + len(result.time_s)
    first = [float(x) for x in lines[2].split(",")]
    assert len(first) == 6


def test_simulate_is_deterministic():
    a = simulate(PumpConfig())
    b = simulate(PumpConfig())
    assert np.array_equal(a.q_out_m3_s, b.q_out_m3_s)
    assert a.net_flow_m3_s == b.net_flow_m3_s
    assert a.cycles_run == b.cycles_run


def test_voltage_doubling_doubles_contact_free_amplitude():
    config = replace(PumpConfig(), forcing_mode="prescribed", check_valves_enabled=False)
    opts = SimOptions(max_cycles=20, convergence_tol=0.0)
    low = simulate(_with_drive(config, voltage_amplitude_v=25.0), opts)
    high = simulate(_with_drive(config, voltage_amplitude_v=50.0), opts)
    ratio = np.max(np.abs(high.y_out_m)) / np.max(np.abs(low.y_out_m))
    assert ratio == pytest.approx(2.0, rel=1e-12)


def test_step_size_validation():
    config = PumpConfig()  # 130 Hz
    with pytest.raises(StepSizeError):
        simulate(config, SimOptions(dt_s=1.0 / (130.0 * 40.0)))
    with pytest.raises(StepSizeError):
        SimOptions(steps_per_cycle=10)
    with pytest.raises(InvalidSpecError):
        SimOptions(max_cycles=1)


def test_explicit_dt_rounds_to_cycle():
    config = PumpConfig()
    result = simulate(config, SimOptions(dt_s=1.0 / (130.0 * 1000.0)))
    assert len(result.time_s) == 1001


def test_non_convergence_reported_not_raised():
    result = simulate(PumpConfig(), SimOptions(max_cycles=2, convergence_tol=1e-12))
    assert result.converged is False
    assert result.cycles_run == 2


def test_drive_signal_validation():
    with pytest.raises(InvalidSpecError):
        DriveSignal(voltage_amplitude_v=-1.0)
    with pytest.raises(InvalidSpecError):
        DriveSignal(frequency_hz=0.0)
    with pytest.raises(InvalidSpecError):
        DriveSignal(force_per_volt_n=0.0)
    drive = DriveSignal(voltage_amplitude_v=50.0, frequency_hz=130.0)
    assert drive.omega_rad_s == pytest.approx(2.0 * math.pi * 130.0, rel=1e-15)
    assert drive.force_amplitude_n == pytest.approx(0.01, rel=1e-12)
    assert drive.stroke_volume_m3 == pytest.approx(1e-8, rel=1e-12)


def test_forcing_mode_validation():
    with pytest.raises(InvalidSpecError):
        PumpConfig(forcing_mode="magic")
