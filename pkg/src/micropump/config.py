"""Flat, typed, dotted-key run configuration.

Configs are TOML files whose keys mirror the domain objects one-to-one;
every key name spells out its SI unit (``inlet_valve.length_m``). Unknown
keys are rejected, every default is echoed into the resolved dump, and the
dump's hash stamps each emitted CSV so outputs trace back to their inputs.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import Any

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigError
from .hydraulics import PumpCurve, SystemCurve
from .performance import SweepSpec
from .pump_dynamics import (
    ChamberSpec,
    DriveSignal,
    FluidSpec,
    PumpConfig,
    SimOptions,
)
from .thermal import ThermalPoint
from .valve_mechanics import ValveSpec

_UNSET = 0.0  # sentinel for "no value configured" on optional float keys


def _valve_keys(section: str) -> dict[str, tuple[type, Any]]:
    return {
        f"{section}.length_m": (float, 5e-3),
        f"{section}.width_m": (float, 3e-3),
        f"{section}.thickness_m": (float, 0.5e-3),
        f"{section}.elastic_modulus_pa": (float, 750e3),
        f"{section}.density_kg_per_m3": (float, 970.0),
        f"{section}.shape": (str, "standard"),
        f"{section}.damping_n_s_per_m": (float, 2e-3),
    }


SCHEMA: dict[str, tuple[type, Any]] = {
    **_valve_keys("inlet_valve"),
    **_valve_keys("outlet_valve"),
    "chamber.cross_section_width_m": (float, 5e-3),
    "chamber.cross_section_length_m": (float, 28e-3),
    "chamber.inlet_orifice_area_m2": (float, 6e-6),
    "chamber.outlet_orifice_area_m2": (float, 6e-6),
    "chamber.discharge_coefficient": (float, 0.6),
    "chamber.seat_leak_area_m2": (float, 1e-7),
    "chamber.valve_travel_limit_m": (float, 0.5e-3),
    "fluid.density_kg_per_m3": (float, 998.0),
    "fluid.gravity_m_per_s2": (float, 9.81),
    "drive.voltage_amplitude_v": (float, 50.0),
    "drive.frequency_hz": (float, 130.0),
    "drive.force_per_volt_n_per_v": (float, 2e-4),
    "drive.stroke_volume_per_volt_m3_per_v": (float, 2e-10),
    "pump.forcing_mode": (str, "pressure_coupled"),
    "pump.check_valves_enabled": (bool, True),
    "sweep.f_min_hz": (float, 70.0),
    "sweep.f_max_hz": (float, 180.0),
    "sweep.step_hz": (float, 10.0),
    "sweep.voltage_v": (float, 50.0),
    "solver.dt_s": (float, _UNSET),  # 0 = derive from steps_per_cycle
    "solver.steps_per_cycle": (int, 2000),
    "solver.max_cycles": (int, 200),
    "solver.convergence_tol": (float, 1e-4),
    "pipe.cross_section_area_m2": (float, _UNSET),  # required by velocity conversions
    "pump_curve.shutoff_head_m": (float, 0.52),
    "pump_curve.max_flow_ml_per_min": (float, 72.0),
    "system_curve.pump_internal_m_per_m3_s": (float, 0.0),
    "system_curve.cold_plate_m_per_m3_s": (float, 0.0),
    "system_curve.pipe_other_m_per_m3_s": (float, 0.0),
    "thermal.point1_power_w": (float, 30.0),
    "thermal.point1_core_temp_c": (float, 48.0),
    "thermal.point2_power_w": (float, 60.0),
    "thermal.point2_core_temp_c": (float, 73.6),
    "calibration.budget": (int, 2400),
    "calibration.settle_cycles": (int, 16),
}


def _flatten(table: dict, prefix: str = "") -> dict[str, Any]:
    flat: dict[str, Any] = {}
    for key, value in table.items():
        dotted = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, f"{dotted}."))
        else:
            flat[dotted] = value
    return flat


@dataclass(frozen=True)
class RunConfig:
    """Resolved configuration: every schema key has a value."""

    values: dict[str, Any]

    @classmethod
    def from_values(cls, overrides: dict[str, Any] | None = None) -> "RunConfig":
        overrides = dict(overrides or {})
        unknown = sorted(set(overrides) - set(SCHEMA))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        values: dict[str, Any] = {}
        bad_types = []
        for key, (kind, default) in SCHEMA.items():
            if key in overrides:
                raw = overrides[key]
                if kind is float and isinstance(raw, int) and not isinstance(raw, bool):
                    raw = float(raw)
                if not isinstance(raw, kind) or (kind is not bool and isinstance(raw, bool)):
                    bad_types.append(f"{key} (expected {kind.__name__}, got {type(raw).__name__})")
                    continue
                values[key] = raw
            else:
                values[key] = default
        if bad_types:
            raise ConfigError(f"badly typed config keys: {'; '.join(bad_types)}")
        return cls(values)

    @classmethod
    def from_toml(cls, path: str | Path) -> "RunConfig":
        with open(path, "rb") as fh:
            try:
                raw = tomllib.load(fh)
            except tomllib.TOMLDecodeError as exc:
                raise ConfigError(f"cannot parse {path}: {exc}") from exc
        return cls.from_values(_flatten(raw))

    def __getitem__(self, key: str) -> Any:
        return self.values[key]

    def require(self, *keys: str) -> None:
        """Check that keys which default to 'unset' carry real values."""
        missing = [k for k in keys if self.values[k] == _UNSET]
        if missing:
            raise ConfigError(
                f"missing required config keys: {', '.join(sorted(missing))}"
            )

    # ---- domain-object builders -------------------------------------------

    def _valve(self, section: str) -> ValveSpec:
        return ValveSpec(
            length_m=self[f"{section}.length_m"],
            width_m=self[f"{section}.width_m"],
            thickness_m=self[f"{section}.thickness_m"],
            elastic_modulus_pa=self[f"{section}.elastic_modulus_pa"],
            density_kg_m3=self[f"{section}.density_kg_per_m3"],
            shape=self[f"{section}.shape"],
        )

    def pump_config(self) -> PumpConfig:
        return PumpConfig(
            inlet_valve=self._valve("inlet_valve"),
            outlet_valve=self._valve("outlet_valve"),
            inlet_damping_n_s_per_m=self["inlet_valve.damping_n_s_per_m"],
            outlet_damping_n_s_per_m=self["outlet_valve.damping_n_s_per_m"],
            chamber=ChamberSpec(
                cross_section_width_m=self["chamber.cross_section_width_m"],
                cross_section_length_m=self["chamber.cross_section_length_m"],
                inlet_orifice_area_m2=self["chamber.inlet_orifice_area_m2"],
                outlet_orifice_area_m2=self["chamber.outlet_orifice_area_m2"],
                discharge_coefficient=self["chamber.discharge_coefficient"],
                seat_leak_area_m2=self["chamber.seat_leak_area_m2"],
                valve_travel_limit_m=self["chamber.valve_travel_limit_m"],
            ),
            fluid=FluidSpec(
                density_kg_m3=self["fluid.density_kg_per_m3"],
                gravity_m_s2=self["fluid.gravity_m_per_s2"],
            ),
            drive=DriveSignal(
                voltage_amplitude_v=self["drive.voltage_amplitude_v"],
                frequency_hz=self["drive.frequency_hz"],
                force_per_volt_n=self["drive.force_per_volt_n_per_v"],
                stroke_volume_per_volt_m3=self["drive.stroke_volume_per_volt_m3_per_v"],
            ),
            forcing_mode=self["pump.forcing_mode"],
            check_valves_enabled=self["pump.check_valves_enabled"],
        )

    def sim_options(self) -> SimOptions:
        dt = self["solver.dt_s"]
        return SimOptions(
            dt_s=None if dt == _UNSET else dt,
            steps_per_cycle=self["solver.steps_per_cycle"],
            max_cycles=self["solver.max_cycles"],
            convergence_tol=self["solver.convergence_tol"],
        )

    def sweep_spec(self) -> SweepSpec:
        return SweepSpec(
            f_min_hz=self["sweep.f_min_hz"],
            f_max_hz=self["sweep.f_max_hz"],
            step_hz=self["sweep.step_hz"],
            voltage_v=self["sweep.voltage_v"],
        )

    def pump_curve(self) -> PumpCurve:
        return PumpCurve.from_ml_per_min(
            self["pump_curve.shutoff_head_m"],
            self["pump_curve.max_flow_ml_per_min"],
        )

    def system_curve(self) -> SystemCurve:
        return SystemCurve(
            pump_internal=self["system_curve.pump_internal_m_per_m3_s"],
            cold_plate=self["system_curve.cold_plate_m_per_m3_s"],
            pipe_other=self["system_curve.pipe_other_m_per_m3_s"],
        )

    def thermal_points(self) -> list[ThermalPoint]:
        return [
            ThermalPoint(self["thermal.point1_power_w"], self["thermal.point1_core_temp_c"]),
            ThermalPoint(self["thermal.point2_power_w"], self["thermal.point2_core_temp_c"]),
        ]

    # ---- dump & hash -------------------------------------------------------

    def resolved_text(self) -> str:
        """Canonical dump: one sorted `key = value` line per schema key."""
        lines = []
        for key in sorted(self.values):
            value = self.values[key]
            if isinstance(value, bool):
                rendered = "true" if value else "false"
            elif isinstance(value, str):
                rendered = f'"{value}"'
            else:
                rendered = repr(value)
            lines.append(f"{key} = {rendered}")
        return "\n".join(lines) + "\n"

    def config_hash(self) -> str:
        return hashlib.sha256(self.resolved_text().encode()).hexdigest()[:16]
