"""Two-valve chamber simulation driven by a sinusoidal diaphragm.

The diaphragm imposes a harmonic chamber-volume change; each check valve is
a lumped oscillator with one-sided seat contact and a travel stop. Two
forcing modes exist:

``prescribed``
    Each valve is forced directly by +/- F sin(w t) (outlet positive half,
    inlet negative half). Flow and pressure are diagnosed from continuity
    through the resulting valve gaps.

``pressure_coupled``
    The valves are forced by the chamber pressure acting on the flap face,
    with the pressure solved from incompressible continuity every step.
    This is the closed model used for flow prediction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import IO, Optional

import numpy as np

from . import _kernels
from .errors import CurveError, InvalidSpecError, StepSizeError
from .valve_mechanics import ValveSpec, derive_lumped_params

M3_PER_S_TO_ML_PER_MIN = 6e7

FORCING_MODES = ("prescribed", "pressure_coupled")

# Cycle-averaged flows below this are treated as zero in relative tests.
Q_FLOOR_M3_S = _kernels.Q_FLOOR


@dataclass(frozen=True)
class DriveSignal:
    """Sinusoidal drive: +/- V volts at f hertz, with linear scalings."""

    voltage_amplitude_v: float = 50.0
    frequency_hz: float = 130.0
    force_per_volt_n: float = 2e-4  # calibration seed, prescribed mode
    stroke_volume_per_volt_m3: float = 2e-10  # calibration seed

    def __post_init__(self):
        if self.voltage_amplitude_v < 0.0:
            raise InvalidSpecError(
                f"DriveSignal.voltage_amplitude_v must be >= 0, got {self.voltage_amplitude_v!r}"
            )
        if not self.frequency_hz > 0.0:
            raise InvalidSpecError(
                f"DriveSignal.frequency_hz must be > 0, got {self.frequency_hz!r}"
            )
        for name in ("force_per_volt_n", "stroke_volume_per_volt_m3"):
            if not getattr(self, name) > 0.0:
                raise InvalidSpecError(
                    f"DriveSignal.{name} must be > 0, got {getattr(self, name)!r}"
                )

    @property
    def omega_rad_s(self) -> float:
        return 2.0 * math.pi * self.frequency_hz

    @property
    def force_amplitude_n(self) -> float:
        return self.force_per_volt_n * self.voltage_amplitude_v

    @property
    def stroke_volume_m3(self) -> float:
        return self.stroke_volume_per_volt_m3 * self.voltage_amplitude_v


@dataclass(frozen=True)
class ChamberSpec:
    """Pump chamber and valve-port geometry."""

    cross_section_width_m: float = 5e-3
    cross_section_length_m: float = 28e-3
    inlet_orifice_area_m2: float = 6e-6
    outlet_orifice_area_m2: float = 6e-6
    discharge_coefficient: float = 0.6
    # Residual conductance area of a seated valve; keeps the incompressible
    # pressure solve finite when both valves are on their seats.
    seat_leak_area_m2: float = 1e-7
    # Mechanical lift stop for the flap tip (shallow chamber).
    valve_travel_limit_m: float = 0.5e-3

    def __post_init__(self):
        for name in (
            "cross_section_width_m",
            "cross_section_length_m",
            "inlet_orifice_area_m2",
            "outlet_orifice_area_m2",
            "seat_leak_area_m2",
            "valve_travel_limit_m",
        ):
            if not getattr(self, name) > 0.0:
                raise InvalidSpecError(
                    f"ChamberSpec.{name} must be > 0, got {getattr(self, name)!r}"
                )
        if not 0.0 < self.discharge_coefficient <= 1.0:
            raise InvalidSpecError(
                "ChamberSpec.discharge_coefficient must be in (0, 1], "
                f"got {self.discharge_coefficient!r}"
            )


@dataclass(frozen=True)
class FluidSpec:
    """Working-fluid properties."""

    density_kg_m3: float = 998.0
    gravity_m_s2: float = 9.81

    def __post_init__(self):
        if not self.density_kg_m3 > 0.0:
            raise InvalidSpecError(
                f"FluidSpec.density_kg_m3 must be > 0, got {self.density_kg_m3!r}"
            )
        if not self.gravity_m_s2 > 0.0:
            raise InvalidSpecError(
                f"FluidSpec.gravity_m_s2 must be > 0, got {self.gravity_m_s2!r}"
            )


@dataclass(frozen=True)
class PumpConfig:
    """Complete description of one pump operating point."""

    inlet_valve: ValveSpec = field(default_factory=ValveSpec)
    outlet_valve: ValveSpec = field(default_factory=ValveSpec)
    inlet_damping_n_s_per_m: float = 2e-3
    outlet_damping_n_s_per_m: float = 2e-3
    chamber: ChamberSpec = field(default_factory=ChamberSpec)
    fluid: FluidSpec = field(default_factory=FluidSpec)
    drive: DriveSignal = field(default_factory=DriveSignal)
    forcing_mode: str = "pressure_coupled"
    check_valves_enabled: bool = True  # diagnostic switch; False frees both stops

    def __post_init__(self):
        if self.forcing_mode not in FORCING_MODES:
            raise InvalidSpecError(
                f"PumpConfig.forcing_mode must be one of {FORCING_MODES}, "
                f"got {self.forcing_mode!r}"
            )
        for name in ("inlet_damping_n_s_per_m", "outlet_damping_n_s_per_m"):
            if getattr(self, name) < 0.0:
                raise InvalidSpecError(
                    f"PumpConfig.{name} must be >= 0, got {getattr(self, name)!r}"
                )


@dataclass(frozen=True)
class SimOptions:
    """Integrator controls.

    With dt_s unset the step is period/steps_per_cycle; an explicit dt_s
    is rounded to the nearest integer division of the period so cycles stay
    aligned. A convergence_tol of 0 disables the cycle-to-cycle stop,
    running exactly max_cycles (useful when a smooth parameter-to-flow map
    is needed, e.g. inside calibration).
    """

    dt_s: Optional[float] = None
    steps_per_cycle: int = 2000
    max_cycles: int = 200
    convergence_tol: float = 1e-4

    def __post_init__(self):
        if self.max_cycles < 2:
            raise InvalidSpecError(f"max_cycles must be >= 2, got {self.max_cycles!r}")
        if self.convergence_tol < 0.0:
            raise InvalidSpecError(
                f"convergence_tol must be >= 0, got {self.convergence_tol!r}"
            )
        if self.steps_per_cycle < 50:
            raise StepSizeError(
                f"steps_per_cycle must be >= 50, got {self.steps_per_cycle!r}"
            )

    def steps_for(self, frequency_hz: float) -> int:
        period = 1.0 / frequency_hz
        if self.dt_s is None:
            return self.steps_per_cycle
        if not self.dt_s > 0.0:
            raise StepSizeError(f"dt_s must be > 0, got {self.dt_s!r}")
        if self.dt_s >= period / 50.0:
            raise StepSizeError(
                f"dt_s={self.dt_s!r} too coarse for f={frequency_hz} Hz; "
                "need dt < period/50"
            )
        return round(period / self.dt_s)


@dataclass(frozen=True)
class SimResult:
    """Final-cycle time series plus cycle-averaged diagnostics.

    Arrays cover one drive period on a closed uniform grid (both endpoints
    present); time is relative to the cycle start.
    """

    time_s: np.ndarray
    y_in_m: np.ndarray
    y_out_m: np.ndarray
    pressure_pa: np.ndarray
    q_in_m3_s: np.ndarray
    q_out_m3_s: np.ndarray
    frequency_hz: float
    net_flow_m3_s: float
    backflow_fraction: float
    outlet_phase_lag_rad: float
    converged: bool
    cycles_run: int

    def __post_init__(self):
        for arr in (
            self.time_s,
            self.y_in_m,
            self.y_out_m,
            self.pressure_pa,
            self.q_in_m3_s,
            self.q_out_m3_s,
        ):
            arr.setflags(write=False)

    @property
    def net_flow_ml_per_min(self) -> float:
        return self.net_flow_m3_s * M3_PER_S_TO_ML_PER_MIN


@dataclass(frozen=True)
class ActuationDiagnosis:
    classification: str  # "normal" or "abnormal"
    backflow_fraction: float
    outlet_phase_lag_rad: float


def fit_sinusoid(t: np.ndarray, y: np.ndarray, omega: float):
    """Least-squares fit y ~ A sin(w t - phi) + offset.

    Returns (A, phi, offset) with phi normalized to [0, 2 pi). Exact for
    sampled sinusoids, so it recovers steady-state amplitude and phase
    without grid-peak bias.
    """
    design = np.column_stack([np.sin(omega * t), np.cos(omega * t), np.ones_like(t)])
    coeffs, *_ = np.linalg.lstsq(design, y, rcond=None)
    a, b, offset = coeffs
    amplitude = math.hypot(a, b)
    phase = math.atan2(-b, a) % (2.0 * math.pi)
    return amplitude, phase, offset


def _cycle_mean(values: np.ndarray, t: np.ndarray) -> float:
    span = t[-1] - t[0]
    return float(np.trapezoid(values, t) / span)


def simulate(config: PumpConfig, options: SimOptions | None = None) -> SimResult:
    """Integrate whole drive cycles until the net flow settles.

    Runs at fixed step (default period/2000) from rest, checking the
    cycle-averaged outlet flow between consecutive cycles against
    convergence_tol. Non-convergence within max_cycles is reported through
    ``converged=False``, not an exception.
    """
    opts = options or SimOptions()
    drive = config.drive
    steps = opts.steps_for(drive.frequency_hz)

    inlet = derive_lumped_params(config.inlet_valve, config.inlet_damping_n_s_per_m)
    outlet = derive_lumped_params(config.outlet_valve, config.outlet_damping_n_s_per_m)

    (t, y_i, y_o, p, q_i, q_o, _, converged, cycles) = _kernels.run_pump(
        inlet.mass_kg,
        inlet.damping_n_s_per_m,
        inlet.spring_n_per_m,
        outlet.mass_kg,
        outlet.damping_n_s_per_m,
        outlet.spring_n_per_m,
        config.inlet_valve.width_m,
        config.outlet_valve.width_m,
        config.inlet_valve.length_m * config.inlet_valve.width_m,
        config.outlet_valve.length_m * config.outlet_valve.width_m,
        config.chamber.inlet_orifice_area_m2,
        config.chamber.outlet_orifice_area_m2,
        config.chamber.seat_leak_area_m2,
        config.chamber.discharge_coefficient,
        config.fluid.density_kg_m3,
        drive.force_amplitude_n,
        drive.stroke_volume_m3,
        drive.omega_rad_s,
        config.forcing_mode == "prescribed",
        config.check_valves_enabled,
        config.chamber.valve_travel_limit_m,
        steps,
        opts.max_cycles,
        opts.convergence_tol,
    )

    q_net = _cycle_mean(q_o, t)
    backflow = _backflow_fraction(q_o, t)
    _, phase, _ = fit_sinusoid(t, y_o, drive.omega_rad_s)

    return SimResult(
        time_s=t,
        y_in_m=y_i,
        y_out_m=y_o,
        pressure_pa=p,
        q_in_m3_s=q_i,
        q_out_m3_s=q_o,
        frequency_hz=drive.frequency_hz,
        net_flow_m3_s=q_net,
        backflow_fraction=backflow,
        outlet_phase_lag_rad=phase,
        converged=bool(converged),
        cycles_run=int(cycles),
    )


def net_flow_rate(result: SimResult) -> float:
    """Cycle average of the outlet flow over the stored final cycle, m^3/s."""
    if len(result.q_out_m3_s) == 0:
        raise CurveError("empty time series")
    return _cycle_mean(result.q_out_m3_s, result.time_s)


def net_flow_ml_per_min(result: SimResult) -> float:
    return net_flow_rate(result) * M3_PER_S_TO_ML_PER_MIN


def _backflow_fraction(q_out: np.ndarray, t: np.ndarray) -> float:
    total = np.trapezoid(np.abs(q_out), t)
    if total <= 0.0:
        return 0.0
    reverse = np.trapezoid(np.maximum(0.0, -q_out), t)
    return float(reverse / total)


BACKFLOW_ABNORMAL_THRESHOLD = 0.25


def diagnose_actuation(result: SimResult) -> ActuationDiagnosis:
    """Classify the final cycle as normal or abnormal actuation.

    Abnormal means the outlet valve passes substantial reverse flow
    (backflow fraction above 0.25) or the pump fails to deliver net
    forward flow.
    """
    if len(result.q_out_m3_s) == 0:
        raise CurveError("empty time series")
    backflow = _backflow_fraction(result.q_out_m3_s, result.time_s)
    omega = 2.0 * math.pi * result.frequency_hz
    _, phase, _ = fit_sinusoid(result.time_s, result.y_out_m, omega)
    q_net = net_flow_rate(result)
    abnormal = backflow > BACKFLOW_ABNORMAL_THRESHOLD or q_net <= 0.0
    return ActuationDiagnosis(
        classification="abnormal" if abnormal else "normal",
        backflow_fraction=backflow,
        outlet_phase_lag_rad=phase,
    )


SIM_CSV_COLUMNS = ("t", "y_in", "y_out", "p_chamber", "q_in", "q_out")


def write_sim_csv(result: SimResult, stream: IO[str], comment: str | None = None) -> None:
    """Serialize the final cycle, one row per time step, SI units."""
    if comment:
        stream.write(f"# {comment}\n")
    stream.write(",".join(SIM_CSV_COLUMNS) + "\n")
    for row in zip(
        result.time_s,
        result.y_in_m,
        result.y_out_m,
        result.pressure_pa,
        result.q_in_m3_s,
        result.q_out_m3_s,
    ):
        stream.write(",".join(repr(float(x)) for x in row) + "\n")
