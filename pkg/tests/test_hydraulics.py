import io

import numpy as np
import pytest

from micropump.errors import DecompositionError, FitError, InvalidSpecError
from micropump.hydraulics import (
    HeadLossSample,
    PumpCurve,
    SystemCurve,
    decompose_pump_resistance,
    fit_linear_loss,
    operating_point,
    read_loss_samples_csv,
    total_head_loss,
    velocity_coefficient_to_flow,
)

ML = 6e7  # m^3/s -> ml/min


def test_total_head_loss_value():
    # 0.3 - 1.0 / (2 * 9.81)
    result = total_head_loss(0.3, 1.0, 9.81)
    assert result.head_m == pytest.approx(0.2490316004077472, rel=1e-12)
    assert not result.negative_warning


def test_total_head_loss_static_and_zero():
    assert total_head_loss(0.45, 0.0).head_m == 0.45
    assert total_head_loss(0.0, 0.0).head_m == 0.0


def test_total_head_loss_negative_flagged():
    result = total_head_loss(0.01, 2.0, 9.81)
    assert result.head_m < 0.0
    assert result.negative_warning


def test_total_head_loss_invalid_gravity():
    with pytest.raises(InvalidSpecError):
        total_head_loss(0.3, 1.0, 0.0)


def test_decompose_pump_resistance():
    assert decompose_pump_resistance(0.30, 0.05, 0.03) == pytest.approx(0.22, rel=1e-12)
    assert decompose_pump_resistance(0.4, 0.0, 0.0) == 0.4


def test_decompose_negative_remainder_raises():
    with pytest.raises(DecompositionError):
        decompose_pump_resistance(0.10, 0.08, 0.05)
    with pytest.raises(InvalidSpecError):
        decompose_pump_resistance(-0.1, 0.0, 0.0)


def test_decompose_inverts_component_sum():
    rng = np.random.default_rng(5)
    for _ in range(25):
        parts = rng.uniform(0.0, 0.3, size=3)
        total = float(np.sum(parts))
        assert decompose_pump_resistance(total, parts[1], parts[2]) == pytest.approx(
            parts[0], abs=1e-15
        )


def test_fit_linear_loss_exact_recovery():
    samples = [HeadLossSample(v, 0.4 * v) for v in (0.1, 0.2, 0.3)]
    fit = fit_linear_loss(samples)
    assert fit.coefficient == pytest.approx(0.4, rel=1e-12)
    assert fit.rms_residual_m == pytest.approx(0.0, abs=1e-15)


def test_fit_linear_loss_noisy_recovery():
    rng = np.random.default_rng(11)
    v = np.linspace(0.05, 1.0, 20)
    h = 0.4 * v * (1.0 + 0.01 * rng.uniform(-1.0, 1.0, size=v.size))
    fit = fit_linear_loss([HeadLossSample(float(a), float(b)) for a, b in zip(v, h)])
    assert fit.coefficient == pytest.approx(0.4, rel=0.02)


def test_fit_linear_loss_degenerate_inputs():
    with pytest.raises(FitError):
        fit_linear_loss([HeadLossSample(0.1, 0.04)])
    with pytest.raises(FitError):
        fit_linear_loss([HeadLossSample(0.2, 0.08), HeadLossSample(0.2, 0.09)])


def test_loss_csv_roundtrip():
    csv_text = "velocity_m_per_s,head_m\n0.1,0.04\n0.2,0.08\n"
    samples = read_loss_samples_csv(io.StringIO(csv_text))
    assert samples == [HeadLossSample(0.1, 0.04), HeadLossSample(0.2, 0.08)]
    with pytest.raises(InvalidSpecError):
        read_loss_samples_csv(io.StringIO("wrong,header\n1,2\n"))


def test_pump_curve_linearity():
    curve = PumpCurve.from_ml_per_min(0.52, 72.0)
    assert curve.max_flow_ml_per_min == pytest.approx(72.0, rel=1e-12)
    # exact midpoint by linearity
    assert curve.flow_at(0.26) * ML == 36.0
    assert curve.flow_at(curve.shutoff_head_m / 2.0) == pytest.approx(
        curve.max_flow_m3_s / 2.0, rel=1e-12
    )
    assert curve.head_at(curve.max_flow_m3_s) == 0.0
    assert curve.flow_at(0.52) == 0.0
    with pytest.raises(InvalidSpecError):
        curve.flow_at(0.6)
    with pytest.raises(InvalidSpecError):
        curve.head_at(-1e-9)


def test_operating_point_example():
    # endpoints 72 ml/min and 0.52 m with a = 0.002 m/(ml/min)
    curve = PumpCurve.from_ml_per_min(0.52, 72.0)
    a_si = 0.002 * ML  # m per (m^3/s)
    point = operating_point(curve, a_si)
    assert point.flow_ml_per_min == pytest.approx(56.38554216867469, rel=1e-9)
    assert point.head_m == pytest.approx(0.11277108433734938, rel=1e-9)


def test_operating_point_limits():
    curve = PumpCurve.from_ml_per_min(0.52, 72.0)
    free = operating_point(curve, 0.0)
    assert free.flow_m3_s == pytest.approx(curve.max_flow_m3_s, rel=1e-12)
    assert free.head_m == 0.0
    choked = operating_point(curve, 1e15)
    assert choked.flow_m3_s == pytest.approx(0.0, abs=1e-12)
    assert choked.head_m == pytest.approx(curve.shutoff_head_m, rel=1e-6)
    with pytest.raises(InvalidSpecError):
        operating_point(curve, -1.0)


def test_operating_point_satisfies_both_curves():
    curve = PumpCurve.from_ml_per_min(0.52, 72.0)
    rng = np.random.default_rng(21)
    for a in 10.0 ** rng.uniform(2.0, 8.0, size=100):
        q, h = operating_point(curve, float(a))
        assert curve.shutoff_head_m * (1.0 - q / curve.max_flow_m3_s) == pytest.approx(
            h, rel=1e-9
        )
        assert a * q == pytest.approx(h, rel=1e-9)


def test_system_curve_components_sum():
    system = SystemCurve(pump_internal=3e5, cold_plate=1e5, pipe_other=5e4)
    assert system.total == pytest.approx(4.5e5, rel=1e-12)
    assert system.head_at(1e-6) == pytest.approx(0.45, rel=1e-12)
    with pytest.raises(InvalidSpecError):
        SystemCurve(cold_plate=-1.0)
    point = operating_point(PumpCurve.from_ml_per_min(0.52, 72.0), system)
    assert point.head_m == pytest.approx(system.head_at(point.flow_m3_s), rel=1e-12)


def test_velocity_coefficient_conversion():
    # a_V [m/(m/s)] over a pipe of area A gives a_Q = a_V / A
    assert velocity_coefficient_to_flow(0.4, 2e-5) == pytest.approx(2e4, rel=1e-12)
    with pytest.raises(InvalidSpecError):
        velocity_coefficient_to_flow(0.4, 0.0)
