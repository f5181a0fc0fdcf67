"""Lumped-oscillator parameters for a cantilever check valve.

A rectangular PDMS flap clamped at one end is reduced to a single
degree-of-freedom oscillator: tip stiffness of a cantilever under a point
load, full flap mass, and a caller-supplied viscous damping coefficient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import InvalidSpecError, UnboundedAmplitudeError

# Material defaults for PDMS (10:1 base/cure elastomer, room temperature).
# These are representative handbook values, not measured properties of any
# particular batch; override them per experiment.
DEFAULT_ELASTIC_MODULUS_PA = 750e3
DEFAULT_DENSITY_KG_M3 = 970.0

VALVE_SHAPES = ("standard", "narrow", "short")


@dataclass(frozen=True)
class ValveSpec:
    """Geometry and material of one cantilever check valve (SI units)."""

    length_m: float = 5e-3
    width_m: float = 3e-3
    thickness_m: float = 0.5e-3
    elastic_modulus_pa: float = DEFAULT_ELASTIC_MODULUS_PA
    density_kg_m3: float = DEFAULT_DENSITY_KG_M3
    shape: str = "standard"  # tag only; the numeric fields govern

    def __post_init__(self):
        for name in (
            "length_m",
            "width_m",
            "thickness_m",
            "elastic_modulus_pa",
            "density_kg_m3",
        ):
            value = getattr(self, name)
            if not (value > 0.0) or not math.isfinite(value):
                raise InvalidSpecError(f"ValveSpec.{name} must be positive, got {value!r}")
        if self.shape not in VALVE_SHAPES:
            raise InvalidSpecError(
                f"ValveSpec.shape must be one of {VALVE_SHAPES}, got {self.shape!r}"
            )


def standard_valve(**overrides) -> ValveSpec:
    """5 mm x 3 mm flap, 0.5 mm thick by default."""
    return ValveSpec(**{"shape": "standard", **overrides})


def narrow_valve(**overrides) -> ValveSpec:
    """Width reduced to 2 mm; other dimensions as the standard flap."""
    return ValveSpec(**{"width_m": 2e-3, "shape": "narrow", **overrides})


def short_valve(**overrides) -> ValveSpec:
    """Length reduced to 4 mm; other dimensions as the standard flap."""
    return ValveSpec(**{"length_m": 4e-3, "shape": "short", **overrides})


PRESETS = {
    "standard": standard_valve,
    "narrow": narrow_valve,
    "short": short_valve,
}


@dataclass(frozen=True)
class LumpedValveParams:
    """Single degree-of-freedom reduction of a valve flap."""

    mass_kg: float
    spring_n_per_m: float
    second_moment_m4: float
    natural_frequency_rad_s: float
    damping_n_s_per_m: float
    damping_factor: float

    def with_damping(self, damping_n_s_per_m: float) -> "LumpedValveParams":
        zeta = damping_n_s_per_m / (2.0 * math.sqrt(self.spring_n_per_m * self.mass_kg))
        return replace(
            self, damping_n_s_per_m=damping_n_s_per_m, damping_factor=zeta
        )


def derive_lumped_params(spec: ValveSpec, damping_n_s_per_m: float = 0.0) -> LumpedValveParams:
    """Reduce a flap to (m, k, I, omega_n, c, zeta).

    I = b h^3 / 12          rectangular section second moment
    k = 3 E I / L^3         cantilever tip stiffness under a tip point load
    m = rho L b h           full flap mass (no modal reduction)
    omega_n = sqrt(k / m)   in-vacuum natural frequency
    zeta = c / (2 sqrt(k m))

    The tip-point-load stiffness and the full (rather than effective modal)
    mass are deliberate fidelity limits of the lumped model; surrounding
    liquid added mass is likewise excluded and left to damping/forcing
    calibration downstream.
    """
    if damping_n_s_per_m < 0.0 or not math.isfinite(damping_n_s_per_m):
        raise InvalidSpecError(
            f"damping_n_s_per_m must be >= 0, got {damping_n_s_per_m!r}"
        )
    L = spec.length_m
    b = spec.width_m
    h = spec.thickness_m
    second_moment = b * h**3 / 12.0
    spring = 3.0 * spec.elastic_modulus_pa * second_moment / L**3
    mass = spec.density_kg_m3 * L * b * h
    omega_n = math.sqrt(spring / mass)
    zeta = damping_n_s_per_m / (2.0 * math.sqrt(spring * mass))
    return LumpedValveParams(
        mass_kg=mass,
        spring_n_per_m=spring,
        second_moment_m4=second_moment,
        natural_frequency_rad_s=omega_n,
        damping_n_s_per_m=damping_n_s_per_m,
        damping_factor=zeta,
    )


def steady_state_amplitude(
    params: LumpedValveParams, force_n: float, omega_rad_s: float
) -> float:
    """Steady-state displacement amplitude under F*sin(w*t) forcing.

    Returns F / sqrt((k - m w^2)^2 + (c w)^2). Raises on the undamped
    resonance where the linear model has no bounded response.
    """
    if force_n < 0.0:
        raise InvalidSpecError(f"force_n must be >= 0, got {force_n!r}")
    if not omega_rad_s > 0.0:
        raise InvalidSpecError(f"omega_rad_s must be > 0, got {omega_rad_s!r}")
    k = params.spring_n_per_m
    m = params.mass_kg
    c = params.damping_n_s_per_m
    elastic = k - m * omega_rad_s**2
    dissipative = c * omega_rad_s
    denom = math.hypot(elastic, dissipative)
    if denom == 0.0:
        raise UnboundedAmplitudeError(
            "undamped oscillator at exact resonance has unbounded amplitude"
        )
    return force_n / denom


def steady_state_phase(params: LumpedValveParams, omega_rad_s: float) -> float:
    """Phase lag of the steady-state response behind the forcing, radians.

    atan2(c w, k - m w^2), in [0, pi].
    """
    if not omega_rad_s > 0.0:
        raise InvalidSpecError(f"omega_rad_s must be > 0, got {omega_rad_s!r}")
    return math.atan2(
        params.damping_n_s_per_m * omega_rad_s,
        params.spring_n_per_m - params.mass_kg * omega_rad_s**2,
    )
