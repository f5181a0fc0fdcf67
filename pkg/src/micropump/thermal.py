"""Affine power-to-core-temperature model for the closed cooling loop.

Exactly two measured operating points determine the model, so the fit is a
2x2 linear solve; the intercept absorbs ambient temperature and the fixed
thermal resistances and is not a lab ambient reading.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import IO, NamedTuple, Sequence

from .errors import FitError, InvalidSpecError, SingularFitError


class ThermalPoint(NamedTuple):
    power_w: float
    core_temp_c: float


@dataclass(frozen=True)
class ThermalModel:
    offset_c: float
    slope_c_per_w: float
    power_range_w: tuple[float, float]

    def in_range(self, power_w: float) -> bool:
        lo, hi = self.power_range_w
        return lo <= power_w <= hi


class TempPrediction(NamedTuple):
    temperature_c: float
    extrapolated: bool  # outside the fitted power range; still computed


def fit_thermal_model(points: Sequence[ThermalPoint]) -> ThermalModel:
    """Solve T = a + b P through exactly two points with distinct powers."""
    pts = [ThermalPoint(*p) for p in points]
    if len(pts) != 2:
        raise InvalidSpecError(f"need exactly 2 fit points, got {len(pts)}")
    (p1, t1), (p2, t2) = pts
    if p1 == p2:
        raise SingularFitError(f"fit points share power {p1!r} W")
    slope = (t2 - t1) / (p2 - p1)
    if slope <= 0.0:
        raise FitError(
            f"fitted slope {slope!r} K/W is not positive; "
            "temperature must rise with power"
        )
    offset = t1 - slope * p1
    return ThermalModel(
        offset_c=offset,
        slope_c_per_w=slope,
        power_range_w=(min(p1, p2), max(p1, p2)),
    )


def core_temperature(model: ThermalModel, power_w: float) -> TempPrediction:
    """Predict the core temperature at a given power, flagging extrapolation."""
    return TempPrediction(
        temperature_c=model.offset_c + model.slope_c_per_w * power_w,
        extrapolated=not model.in_range(power_w),
    )


THERMAL_CSV_COLUMNS = ("power_w", "core_temp_c")


def read_thermal_points_csv(stream: IO[str]) -> list[ThermalPoint]:
    """Read `power_w,core_temp_c` rows; header required, # comments skipped."""
    rows = [r for r in csv.reader(line for line in stream if not line.startswith("#")) if r]
    if not rows or tuple(c.strip() for c in rows[0]) != THERMAL_CSV_COLUMNS:
        raise InvalidSpecError(
            f"thermal CSV must start with header {','.join(THERMAL_CSV_COLUMNS)}"
        )
    return [ThermalPoint(float(r[0]), float(r[1])) for r in rows[1:]]
