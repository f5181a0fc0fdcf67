"""Head-loss accounting, linear loss fitting, and P-Q operating points.

The pump characteristic is treated as exactly linear between its two
measured endpoints (shutoff head, zero-head flow). System losses are linear
in flow velocity; conversion between velocity and volumetric flow requires
an explicit pipe cross-section area since none is assumed.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import IO, Iterable, NamedTuple

import numpy as np

from .errors import DecompositionError, FitError, InvalidSpecError

M3_PER_S_TO_ML_PER_MIN = 6e7


class HeadLossSample(NamedTuple):
    velocity_m_s: float
    head_m: float


class HeadLossResult(NamedTuple):
    head_m: float
    negative_warning: bool  # inputs imply a negative loss; data inconsistent


def total_head_loss(z1_m: float, v2_m_s: float, g_m_s2: float = 9.81) -> HeadLossResult:
    """Total head loss of the open loop: z1 - v2^2 / (2 g).

    Atmospheric pressure at both ends, negligible inlet velocity, outlet
    datum at zero elevation. A negative result is returned with a warning
    flag rather than raised, since it indicates inconsistent measurements.
    """
    if not g_m_s2 > 0.0:
        raise InvalidSpecError(f"g_m_s2 must be > 0, got {g_m_s2!r}")
    loss = z1_m - v2_m_s**2 / (2.0 * g_m_s2)
    return HeadLossResult(loss, loss < 0.0)


def decompose_pump_resistance(
    h_total_m: float, h_coldplate_m: float, h_pipe_other_m: float
) -> float:
    """Pump-internal head loss: total minus cold plate minus pipe/other."""
    for name, value in (
        ("h_total_m", h_total_m),
        ("h_coldplate_m", h_coldplate_m),
        ("h_pipe_other_m", h_pipe_other_m),
    ):
        if value < 0.0:
            raise InvalidSpecError(f"{name} must be >= 0, got {value!r}")
    remainder = h_total_m - h_coldplate_m - h_pipe_other_m
    if remainder < 0.0:
        raise DecompositionError(
            f"component losses exceed the total: {h_total_m!r} - {h_coldplate_m!r} "
            f"- {h_pipe_other_m!r} = {remainder!r}"
        )
    return remainder


class LossFit(NamedTuple):
    coefficient: float  # head per velocity, m / (m/s)
    rms_residual_m: float


def fit_linear_loss(samples: Iterable[HeadLossSample]) -> LossFit:
    """Least-squares fit of head = a * velocity through the origin."""
    pts = [HeadLossSample(*s) for s in samples]
    if len(pts) < 2:
        raise FitError(f"need at least 2 samples, got {len(pts)}")
    v = np.array([p.velocity_m_s for p in pts])
    h = np.array([p.head_m for p in pts])
    if np.any(v < 0.0) or np.any(h < 0.0):
        raise InvalidSpecError("head-loss samples must be non-negative")
    if np.all(v == v[0]):
        raise FitError("all samples share one velocity; slope is undetermined")
    coeff = float(np.dot(v, h) / np.dot(v, v))
    residual = h - coeff * v
    rms = float(math.sqrt(np.mean(residual**2)))
    return LossFit(coeff, rms)


LOSS_CSV_COLUMNS = ("velocity_m_per_s", "head_m")


def read_loss_samples_csv(stream: IO[str]) -> list[HeadLossSample]:
    """Read `velocity_m_per_s,head_m` rows; header required, # comments skipped."""
    rows = [r for r in csv.reader(line for line in stream if not line.startswith("#")) if r]
    if not rows or tuple(c.strip() for c in rows[0]) != LOSS_CSV_COLUMNS:
        raise InvalidSpecError(
            f"head-loss CSV must start with header {','.join(LOSS_CSV_COLUMNS)}"
        )
    return [HeadLossSample(float(r[0]), float(r[1])) for r in rows[1:]]


@dataclass(frozen=True)
class PumpCurve:
    """Linear pump characteristic between shutoff and free delivery."""

    shutoff_head_m: float
    max_flow_m3_s: float

    def __post_init__(self):
        if not self.shutoff_head_m > 0.0:
            raise InvalidSpecError(
                f"shutoff_head_m must be > 0, got {self.shutoff_head_m!r}"
            )
        if not self.max_flow_m3_s > 0.0:
            raise InvalidSpecError(
                f"max_flow_m3_s must be > 0, got {self.max_flow_m3_s!r}"
            )

    @classmethod
    def from_ml_per_min(cls, shutoff_head_m: float, max_flow_ml_min: float) -> "PumpCurve":
        return cls(shutoff_head_m, max_flow_ml_min / M3_PER_S_TO_ML_PER_MIN)

    @property
    def max_flow_ml_per_min(self) -> float:
        return self.max_flow_m3_s * M3_PER_S_TO_ML_PER_MIN

    def head_at(self, flow_m3_s: float) -> float:
        if not 0.0 <= flow_m3_s <= self.max_flow_m3_s:
            raise InvalidSpecError(
                f"flow {flow_m3_s!r} outside [0, {self.max_flow_m3_s!r}]"
            )
        return self.shutoff_head_m * (1.0 - flow_m3_s / self.max_flow_m3_s)

    def flow_at(self, head_m: float) -> float:
        if not 0.0 <= head_m <= self.shutoff_head_m:
            raise InvalidSpecError(
                f"head {head_m!r} outside [0, {self.shutoff_head_m!r}]"
            )
        return self.max_flow_m3_s * (1.0 - head_m / self.shutoff_head_m)


@dataclass(frozen=True)
class SystemCurve:
    """Linear system resistance H = a * Q, split by component.

    Coefficients are head per volumetric flow, m / (m^3/s).
    """

    pump_internal: float = 0.0
    cold_plate: float = 0.0
    pipe_other: float = 0.0

    def __post_init__(self):
        for name in ("pump_internal", "cold_plate", "pipe_other"):
            if getattr(self, name) < 0.0:
                raise InvalidSpecError(
                    f"SystemCurve.{name} must be >= 0, got {getattr(self, name)!r}"
                )

    @property
    def total(self) -> float:
        return self.pump_internal + self.cold_plate + self.pipe_other

    def head_at(self, flow_m3_s: float) -> float:
        return self.total * flow_m3_s


def velocity_coefficient_to_flow(coeff_m_per_m_s: float, pipe_area_m2: float) -> float:
    """Convert a head-per-velocity loss coefficient to head-per-flow."""
    if not pipe_area_m2 > 0.0:
        raise InvalidSpecError(f"pipe_area_m2 must be > 0, got {pipe_area_m2!r}")
    return coeff_m_per_m_s / pipe_area_m2


class OperatingPoint(NamedTuple):
    flow_m3_s: float
    head_m: float

    @property
    def flow_ml_per_min(self) -> float:
        return self.flow_m3_s * M3_PER_S_TO_ML_PER_MIN


def operating_point(pump: PumpCurve, system: SystemCurve | float) -> OperatingPoint:
    """Intersection of the pump line with the system resistance line.

    Solves H_max (1 - Q/Q_max) = a Q in closed form; Q lands in
    [0, Q_max] for any a >= 0.
    """
    a = system.total if isinstance(system, SystemCurve) else float(system)
    if a < 0.0:
        raise InvalidSpecError(f"system coefficient must be >= 0, got {a!r}")
    flow = pump.shutoff_head_m * pump.max_flow_m3_s / (
        a * pump.max_flow_m3_s + pump.shutoff_head_m
    )
    return OperatingPoint(flow, a * flow)
