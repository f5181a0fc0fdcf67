"""Frequency/voltage sweeps, peak detection, and parameter calibration.

Calibration fits the four quantities the experiments leave free - the two
valve damping coefficients and the two drive scalings (force per volt,
stroke volume per volt) - to a measured flow-frequency curve by unweighted
least squares in ml/min. The search is derivative-free: a coarse log-space
grid around the seed, then Nelder-Mead refinement in log space with
restarts, all under a single evaluation budget.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace
from typing import IO, Optional, Sequence

import csv

import numpy as np
from scipy.optimize import minimize

from .errors import CalibrationError, CurveError, InvalidSpecError
from .pump_dynamics import (
    M3_PER_S_TO_ML_PER_MIN,
    PumpConfig,
    SimOptions,
    simulate,
)


@dataclass(frozen=True)
class SweepSpec:
    """Frequency grid for a sweep, inclusive of both ends."""

    f_min_hz: float = 70.0
    f_max_hz: float = 180.0
    step_hz: float = 10.0
    voltage_v: float = 50.0

    def __post_init__(self):
        if not self.f_min_hz < self.f_max_hz:
            raise InvalidSpecError(
                f"f_min_hz must be < f_max_hz, got {self.f_min_hz!r} >= {self.f_max_hz!r}"
            )
        if not self.step_hz > 0.0:
            raise InvalidSpecError(f"step_hz must be > 0, got {self.step_hz!r}")
        if self.voltage_v < 0.0:
            raise InvalidSpecError(f"voltage_v must be >= 0, got {self.voltage_v!r}")

    def frequencies(self) -> np.ndarray:
        n = int(math.floor((self.f_max_hz - self.f_min_hz) / self.step_hz + 1e-9)) + 1
        return self.f_min_hz + self.step_hz * np.arange(n)


@dataclass(frozen=True)
class FlowFrequencyCurve:
    """Sampled flow vs drive frequency, in the measurement's native units."""

    frequencies_hz: np.ndarray
    flow_ml_per_min: np.ndarray
    abnormal: np.ndarray  # True where the simulated flow was negative
    peaks: Optional[tuple] = None  # filled by find_peaks

    def __post_init__(self):
        f = np.asarray(self.frequencies_hz, dtype=float)
        q = np.asarray(self.flow_ml_per_min, dtype=float)
        if f.shape != q.shape or f.ndim != 1:
            raise InvalidSpecError("frequency and flow arrays must be 1-D and equal length")
        if len(f) and np.any(np.diff(f) <= 0.0):
            raise InvalidSpecError("frequencies must be strictly increasing")
        if np.any(q < 0.0):
            raise InvalidSpecError("flow values must be >= 0 (negatives are clamped+flagged)")
        object.__setattr__(self, "frequencies_hz", f)
        object.__setattr__(self, "flow_ml_per_min", q)
        object.__setattr__(self, "abnormal", np.asarray(self.abnormal, dtype=bool))
        f.setflags(write=False)
        q.setflags(write=False)
        self.abnormal.setflags(write=False)

    def __len__(self) -> int:
        return len(self.frequencies_hz)


MEASURED_CSV_COLUMNS = ("frequency_hz", "flow_ml_per_min")


def read_flow_curve_csv(stream: IO[str]) -> FlowFrequencyCurve:
    """Read `frequency_hz,flow_ml_per_min` rows; header required."""
    rows = [r for r in csv.reader(line for line in stream if not line.startswith("#")) if r]
    if not rows or tuple(c.strip() for c in rows[0]) != MEASURED_CSV_COLUMNS:
        raise InvalidSpecError(
            f"flow-curve CSV must start with header {','.join(MEASURED_CSV_COLUMNS)}"
        )
    f = np.array([float(r[0]) for r in rows[1:]])
    q = np.array([float(r[1]) for r in rows[1:]])
    return FlowFrequencyCurve(f, np.maximum(q, 0.0), q < 0.0)


def write_flow_curve_csv(
    curve: FlowFrequencyCurve, stream: IO[str], comment: str | None = None
) -> None:
    if comment:
        stream.write(f"# {comment}\n")
    stream.write(",".join(MEASURED_CSV_COLUMNS) + "\n")
    for f, q in zip(curve.frequencies_hz, curve.flow_ml_per_min):
        stream.write(f"{float(f)!r},{float(q)!r}\n")


def _with_drive(config: PumpConfig, frequency_hz: float, voltage_v: float) -> PumpConfig:
    drive = replace(
        config.drive, frequency_hz=frequency_hz, voltage_amplitude_v=voltage_v
    )
    return replace(config, drive=drive)


def _net_flow_at(
    config: PumpConfig, frequency_hz: float, voltage_v: float, options: SimOptions
) -> float:
    """Raw simulated net flow in ml/min (may be negative)."""
    try:
        result = simulate(_with_drive(config, frequency_hz, voltage_v), options)
    except Exception as exc:
        raise CurveError(f"simulation failed at {frequency_hz} Hz: {exc}") from exc
    return result.net_flow_m3_s * M3_PER_S_TO_ML_PER_MIN


def frequency_sweep(
    config: PumpConfig, sweep: SweepSpec, options: SimOptions | None = None
) -> FlowFrequencyCurve:
    """Independent simulations across the grid; deterministic given inputs.

    Negative net flows are recorded as zero with the abnormal flag set.
    """
    opts = options or SimOptions()
    freqs = sweep.frequencies()
    flows = np.empty(len(freqs))
    for i, f in enumerate(freqs):
        flows[i] = _net_flow_at(config, float(f), sweep.voltage_v, opts)
    abnormal = flows < 0.0
    return FlowFrequencyCurve(freqs, np.maximum(flows, 0.0), abnormal)


def find_peaks(curve: FlowFrequencyCurve) -> list[tuple[float, float]]:
    """Strict local maxima of the sampled curve, sorted by descending flow.

    Endpoints count when strictly above their single neighbor; a flat curve
    has no peaks.
    """
    if len(curve) < 3:
        raise CurveError(f"peak detection needs >= 3 points, got {len(curve)}")
    f = curve.frequencies_hz
    q = curve.flow_ml_per_min
    peaks = []
    for i in range(len(q)):
        left_ok = i == 0 or q[i] > q[i - 1]
        right_ok = i == len(q) - 1 or q[i] > q[i + 1]
        if left_ok and right_ok:
            peaks.append((float(f[i]), float(q[i])))
    peaks.sort(key=lambda p: (-p[1], p[0]))
    return peaks


def voltage_response(
    config: PumpConfig,
    voltages_v: Sequence[float],
    frequency_hz: float,
    options: SimOptions | None = None,
) -> list[tuple[float, float]]:
    """Net flow (ml/min) per drive voltage at a fixed frequency."""
    opts = options or SimOptions()
    out = []
    for v in voltages_v:
        if v < 0.0:
            raise InvalidSpecError(f"voltage must be >= 0, got {v!r}")
        out.append((float(v), _net_flow_at(config, frequency_hz, float(v), opts)))
    return out


# Field order of a calibration parameter vector.
CALIBRATION_PARAM_NAMES = (
    "c_in_n_s_per_m",
    "c_out_n_s_per_m",
    "force_per_volt_n",
    "stroke_volume_per_volt_m3",
)

# Objective evaluations run a fixed cycle count so the parameter-to-flow map
# stays smooth for the simplex (adaptive stopping adds staircase noise).
CALIBRATION_SETTLE_CYCLES = 16

_GRID_DECADES = 2.0
_GRID_POINTS_PER_PARAM = 5


@dataclass(frozen=True)
class CalibrationResult:
    c_in_n_s_per_m: float
    c_out_n_s_per_m: float
    force_per_volt_n: float
    stroke_volume_per_volt_m3: float
    objective_ml_min_sq: float
    evaluations: int
    improved: bool  # False when the budget ran out before beating the seed

    def params(self) -> tuple[float, float, float, float]:
        return (
            self.c_in_n_s_per_m,
            self.c_out_n_s_per_m,
            self.force_per_volt_n,
            self.stroke_volume_per_volt_m3,
        )

    def apply_to(self, config: PumpConfig) -> PumpConfig:
        drive = replace(
            config.drive,
            force_per_volt_n=self.force_per_volt_n,
            stroke_volume_per_volt_m3=self.stroke_volume_per_volt_m3,
        )
        return replace(
            config,
            inlet_damping_n_s_per_m=self.c_in_n_s_per_m,
            outlet_damping_n_s_per_m=self.c_out_n_s_per_m,
            drive=drive,
        )

    def write_text(self, stream: IO[str]) -> None:
        """Flat key-value dump; units are spelled out in the key names."""
        stream.write(f"c_in_n_s_per_m = {self.c_in_n_s_per_m!r}\n")
        stream.write(f"c_out_n_s_per_m = {self.c_out_n_s_per_m!r}\n")
        stream.write(f"force_per_volt_n = {self.force_per_volt_n!r}\n")
        stream.write(
            f"stroke_volume_per_volt_m3 = {self.stroke_volume_per_volt_m3!r}\n"
        )
        stream.write(f"objective_ml_min_sq = {self.objective_ml_min_sq!r}\n")
        stream.write(f"evaluations = {self.evaluations}\n")
        stream.write(f"improved = {str(self.improved).lower()}\n")


def _config_with_params(template: PumpConfig, params: Sequence[float]) -> PumpConfig:
    c_in, c_out, kappa_f, kappa_v = params
    drive = replace(
        template.drive,
        force_per_volt_n=kappa_f,
        stroke_volume_per_volt_m3=kappa_v,
    )
    return replace(
        template,
        inlet_damping_n_s_per_m=c_in,
        outlet_damping_n_s_per_m=c_out,
        drive=drive,
    )


def calibrate(
    measured: FlowFrequencyCurve,
    config_template: PumpConfig,
    seed: Sequence[float] | None = None,
    budget: int = 2400,
    settle_cycles: int = CALIBRATION_SETTLE_CYCLES,
) -> CalibrationResult:
    """Least-squares fit of (c_in, c_out, force/V, stroke/V) to measured data.

    The objective is the unweighted sum of squared flow errors in ml/min;
    negative simulated flows enter the objective as-is to penalize reversed
    operation. `budget` caps total sweep evaluations across the seed check,
    the coarse grid, and the simplex refinement. With budget 0 the seed is
    returned unchanged and flagged unimproved.
    """
    if len(measured) < 4:
        raise CurveError(
            f"calibration needs >= 4 measured points, got {len(measured)}"
        )
    if seed is None:
        seed = (
            config_template.inlet_damping_n_s_per_m,
            config_template.outlet_damping_n_s_per_m,
            config_template.drive.force_per_volt_n,
            config_template.drive.stroke_volume_per_volt_m3,
        )
    seed = np.asarray(seed, dtype=float)
    if seed.shape != (4,) or np.any(seed <= 0.0):
        raise InvalidSpecError(f"seed must be 4 positive values, got {seed!r}")

    freqs = measured.frequencies_hz
    target = measured.flow_ml_per_min
    voltage = config_template.drive.voltage_amplitude_v
    options = SimOptions(max_cycles=max(2, settle_cycles), convergence_tol=0.0)

    evals = 0

    def objective(log_params: np.ndarray) -> float:
        nonlocal evals
        evals += 1
        config = _config_with_params(config_template, np.exp(log_params))
        flows = np.array(
            [_net_flow_at(config, float(f), voltage, options) for f in freqs]
        )
        value = float(np.sum((flows - target) ** 2))
        if not math.isfinite(value):
            raise CalibrationError(
                f"objective is non-finite at params {np.exp(log_params)!r}"
            )
        return value

    def result_for(params, obj, improved):
        return CalibrationResult(
            c_in_n_s_per_m=float(params[0]),
            c_out_n_s_per_m=float(params[1]),
            force_per_volt_n=float(params[2]),
            stroke_volume_per_volt_m3=float(params[3]),
            objective_ml_min_sq=obj,
            evaluations=evals,
            improved=improved,
        )

    if budget <= 0:
        return result_for(seed, math.inf, False)

    x_best = np.log(seed)
    f_best = objective(x_best)
    f_seed = f_best

    # Coarse log-space grid: multipliers spanning +/- _GRID_DECADES decades
    # around the seed, full factorial, truncated by half the budget.
    exponents = np.linspace(-_GRID_DECADES, _GRID_DECADES, _GRID_POINTS_PER_PARAM)
    offsets = exponents * math.log(10.0)
    grid_cap = min(_GRID_POINTS_PER_PARAM**4, budget // 2)
    for combo in itertools.islice(
        itertools.product(offsets, repeat=4), max(0, grid_cap)
    ):
        if evals >= budget:
            break
        if all(o == 0.0 for o in combo):
            continue  # seed already evaluated
        x = np.log(seed) + np.array(combo)
        f = objective(x)
        if f < f_best:
            x_best, f_best = x, f

    # Simplex refinement with restarts until convergence or budget exhausted.
    while evals < budget:
        remaining = budget - evals
        res = minimize(
            lambda x: objective(np.asarray(x)),
            x_best,
            method="Nelder-Mead",
            options=dict(
                xatol=1e-7,
                fatol=1e-15,
                maxfev=max(20, remaining),
                adaptive=True,
            ),
        )
        gain = f_best - res.fun
        if res.fun < f_best:
            x_best, f_best = np.asarray(res.x), float(res.fun)
        if gain < max(1e-12, 1e-9 * abs(f_best)):
            break

    return result_for(np.exp(x_best), f_best, f_best < f_seed)
