"""Lumped-parameter micro-pump simulation and calibration toolkit.

Models a piezoelectric diaphragm pump with two passive cantilever check
valves: valve oscillator mechanics, cycle-resolved chamber simulation,
head-loss and P-Q analysis, sweep/calibration drivers, and a cooling-loop
thermal model.
"""

__version__ = "0.1.0"

from .errors import (
    CalibrationError,
    ConfigError,
    CurveError,
    DecompositionError,
    FitError,
    InvalidSpecError,
    MicropumpError,
    SingularFitError,
    StepSizeError,
    UnboundedAmplitudeError,
)
from .hydraulics import (
    HeadLossResult,
    HeadLossSample,
    LossFit,
    OperatingPoint,
    PumpCurve,
    SystemCurve,
    decompose_pump_resistance,
    fit_linear_loss,
    operating_point,
    total_head_loss,
)
from .performance import (
    CalibrationResult,
    FlowFrequencyCurve,
    SweepSpec,
    calibrate,
    find_peaks,
    frequency_sweep,
    voltage_response,
)
from .pump_dynamics import (
    ActuationDiagnosis,
    ChamberSpec,
    DriveSignal,
    FluidSpec,
    PumpConfig,
    SimOptions,
    SimResult,
    diagnose_actuation,
    net_flow_ml_per_min,
    net_flow_rate,
    simulate,
)
from .thermal import (
    ThermalModel,
    ThermalPoint,
    core_temperature,
    fit_thermal_model,
)
from .valve_mechanics import (
    LumpedValveParams,
    ValveSpec,
    derive_lumped_params,
    narrow_valve,
    short_valve,
    standard_valve,
    steady_state_amplitude,
    steady_state_phase,
)

__all__ = [
    "__version__",
    "ActuationDiagnosis",
    "CalibrationError",
    "CalibrationResult",
    "ChamberSpec",
    "ConfigError",
    "CurveError",
    "DecompositionError",
    "DriveSignal",
    "FitError",
    "FlowFrequencyCurve",
    "FluidSpec",
    "HeadLossResult",
    "HeadLossSample",
    "InvalidSpecError",
    "LossFit",
    "LumpedValveParams",
    "MicropumpError",
    "OperatingPoint",
    "PumpConfig",
    "PumpCurve",
    "SimOptions",
    "SimResult",
    "SingularFitError",
    "StepSizeError",
    "SweepSpec",
    "SystemCurve",
    "ThermalModel",
    "ThermalPoint",
    "UnboundedAmplitudeError",
    "ValveSpec",
    "calibrate",
    "core_temperature",
    "decompose_pump_resistance",
    "diagnose_actuation",
    "find_peaks",
    "fit_linear_loss",
    "fit_thermal_model",
    "frequency_sweep",
    "narrow_valve",
    "net_flow_ml_per_min",
    "net_flow_rate",
    "operating_point",
    "short_valve",
    "simulate",
    "standard_valve",
    "steady_state_amplitude",
    "steady_state_phase",
    "total_head_loss",
    "voltage_response",
]
