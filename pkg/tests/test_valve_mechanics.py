import math

import numpy as np
import pytest

from micropump.errors import InvalidSpecError, UnboundedAmplitudeError
from micropump.valve_mechanics import (
    ValveSpec,
    derive_lumped_params,
    narrow_valve,
    short_valve,
    standard_valve,
    steady_state_amplitude,
    steady_state_phase,
)

# Hand-evaluated with a calculator from the closed forms:
#   I = 0.003 * 0.0005^3 / 12, k = 3 * 750e3 * I / 0.005^3,
#   m = 970 * 0.005 * 0.003 * 0.0005, w_n = sqrt(k / m)
ORACLE_I = 3.125e-14
ORACLE_K = 0.5625
ORACLE_M = 7.275e-6
ORACLE_WN = 278.0639991600242


def test_standard_valve_oracle_values():
    params = derive_lumped_params(standard_valve(), 0.0)
    assert params.second_moment_m4 == pytest.approx(ORACLE_I, rel=1e-12)
    assert params.spring_n_per_m == pytest.approx(ORACLE_K, rel=1e-12)
    assert params.mass_kg == pytest.approx(ORACLE_M, rel=1e-12)
    assert params.natural_frequency_rad_s == pytest.approx(ORACLE_WN, rel=1e-12)
    assert params.damping_factor == 0.0


@pytest.mark.parametrize("spec", [
    standard_valve(),
    narrow_valve(),
    short_valve(),
    ValveSpec(length_m=7e-3, width_m=2.5e-3, thickness_m=0.8e-3,
              elastic_modulus_pa=1.2e6, density_kg_m3=1100.0),
])
def test_zero_damping_gives_zero_damping_factor(spec):
    assert derive_lumped_params(spec, 0.0).damping_factor == 0.0


def test_thickness_doubling_ratios():
    thin = derive_lumped_params(standard_valve(), 0.0)
    thick = derive_lumped_params(standard_valve(thickness_m=1e-3), 0.0)
    assert thick.second_moment_m4 / thin.second_moment_m4 == pytest.approx(8.0, rel=1e-12)
    assert thick.spring_n_per_m / thin.spring_n_per_m == pytest.approx(8.0, rel=1e-12)
    assert thick.mass_kg / thin.mass_kg == pytest.approx(2.0, rel=1e-12)
    assert (thick.natural_frequency_rad_s / thin.natural_frequency_rad_s
            == pytest.approx(2.0, rel=1e-12))


def test_natural_frequency_matches_independent_rederivation():
    # w_n = sqrt(k/m) reduces algebraically to (h / (2 L^2)) * sqrt(E / rho);
    # check the derived value against that independent expression.
    rng = np.random.default_rng(1234)
    for _ in range(50):
        L = rng.uniform(2e-3, 10e-3)
        b = rng.uniform(1e-3, 5e-3)
        h = rng.uniform(0.2e-3, 1.5e-3)
        E = rng.uniform(2e5, 3e6)
        rho = rng.uniform(800.0, 1200.0)
        spec = ValveSpec(length_m=L, width_m=b, thickness_m=h,
                         elastic_modulus_pa=E, density_kg_m3=rho)
        params = derive_lumped_params(spec, 0.0)
        expected = (h / (2.0 * L * L)) * math.sqrt(E / rho)
        assert params.natural_frequency_rad_s == pytest.approx(expected, rel=1e-12)
        # internal consistency invariants
        assert (params.natural_frequency_rad_s**2 * params.mass_kg
                == pytest.approx(params.spring_n_per_m, rel=1e-12))


def test_length_scaling_of_natural_frequency():
    base = derive_lumped_params(standard_valve(), 0.0)
    double = derive_lumped_params(standard_valve(length_m=10e-3), 0.0)
    assert (double.natural_frequency_rad_s / base.natural_frequency_rad_s
            == pytest.approx(0.25, rel=1e-12))


def test_damping_factor_definition():
    rng = np.random.default_rng(99)
    for _ in range(20):
        c = rng.uniform(1e-4, 1e-1)
        params = derive_lumped_params(standard_valve(), c)
        expected = c / (2.0 * math.sqrt(params.spring_n_per_m * params.mass_kg))
        assert params.damping_factor == pytest.approx(expected, rel=1e-12)


def test_derivation_is_pure_and_deterministic():
    a = derive_lumped_params(standard_valve(), 3e-3)
    b = derive_lumped_params(standard_valve(), 3e-3)
    assert a == b


@pytest.mark.parametrize("field,value", [
    ("length_m", 0.0),
    ("width_m", -1e-3),
    ("thickness_m", 0.0),
    ("elastic_modulus_pa", -5.0),
    ("density_kg_m3", 0.0),
])
def test_invalid_spec_errors_name_the_field(field, value):
    with pytest.raises(InvalidSpecError, match=field):
        ValveSpec(**{field: value})


def test_negative_damping_rejected():
    with pytest.raises(InvalidSpecError):
        derive_lumped_params(standard_valve(), -1e-3)


def test_presets():
    assert standard_valve().length_m == 5e-3
    assert standard_valve().width_m == 3e-3
    assert narrow_valve().width_m == 2e-3
    assert narrow_valve().length_m == 5e-3
    assert short_valve().length_m == 4e-3
    assert short_valve(width_m=2.5e-3).width_m == 2.5e-3
    with pytest.raises(InvalidSpecError, match="shape"):
        ValveSpec(shape="wide")


def test_steady_state_amplitude_oracle_value():
    # 0.01 / sqrt((k - m w^2)^2 + (c w)^2) at w = 2 pi 130, c = 2e-3
    params = derive_lumped_params(standard_valve(), 2e-3)
    amp = steady_state_amplitude(params, 0.01, 2.0 * math.pi * 130.0)
    assert amp == pytest.approx(0.0021778398431616846, rel=1e-9)


def test_steady_state_amplitude_zero_force():
    params = derive_lumped_params(standard_valve(), 2e-3)
    for omega in (10.0, 100.0, 1000.0):
        assert steady_state_amplitude(params, 0.0, omega) == 0.0


def test_steady_state_amplitude_quasi_static_limit():
    params = derive_lumped_params(standard_valve(), 2e-3)
    amp = steady_state_amplitude(params, 0.01, params.natural_frequency_rad_s * 1e-4)
    assert amp == pytest.approx(0.01 / params.spring_n_per_m, rel=1e-6)


def test_undamped_resonance_raises():
    # k = m w^2 exactly representable: m = 1, k = 4, w = 2
    from micropump.valve_mechanics import LumpedValveParams

    params = LumpedValveParams(
        mass_kg=1.0, spring_n_per_m=4.0, second_moment_m4=1e-12,
        natural_frequency_rad_s=2.0, damping_n_s_per_m=0.0, damping_factor=0.0,
    )
    with pytest.raises(UnboundedAmplitudeError):
        steady_state_amplitude(params, 0.01, 2.0)


def test_steady_state_phase_limits():
    params = derive_lumped_params(standard_valve(), 2e-3)
    wn = params.natural_frequency_rad_s
    assert steady_state_phase(params, wn * 1e-4) == pytest.approx(0.0, abs=1e-3)
    assert steady_state_phase(params, wn) == pytest.approx(math.pi / 2.0, rel=1e-12)
    assert steady_state_phase(params, wn * 1e3) == pytest.approx(math.pi, abs=1e-2)


def test_amplitude_decreases_with_thickness_at_fixed_damping():
    # At a drive well above every flap's natural frequency, a thicker flap
    # always responds less for the same force and damping coefficient.
    omega = 2.0 * math.pi * 170.0
    amps = []
    for h in (0.3e-3, 0.5e-3, 0.8e-3, 1.0e-3):
        params = derive_lumped_params(ValveSpec(thickness_m=h), 2e-3)
        amps.append(steady_state_amplitude(params, 0.01, omega))
    assert all(b < a for a, b in zip(amps, amps[1:]))
