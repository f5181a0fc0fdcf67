"""Command-line interface.

Subcommands: mech, sim, sweep, pq, loss, thermal, calibrate, repro. Every
run writes a resolved-config dump into the output directory, and every CSV
carries a comment line with the tool version and the resolved-config hash.
Exit codes: 0 success, 1 validation error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .acceptance import run_all
from .config import RunConfig
from .errors import MicropumpError
from .hydraulics import (
    M3_PER_S_TO_ML_PER_MIN,
    SystemCurve,
    decompose_pump_resistance,
    fit_linear_loss,
    operating_point,
    read_loss_samples_csv,
    velocity_coefficient_to_flow,
)
from .performance import (
    calibrate,
    find_peaks,
    frequency_sweep,
    read_flow_curve_csv,
    voltage_response,
    write_flow_curve_csv,
)
from .pump_dynamics import diagnose_actuation, simulate, write_sim_csv
from .thermal import core_temperature, fit_thermal_model
from .valve_mechanics import derive_lumped_params


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="micropump",
        description="Lumped-parameter diaphragm micro-pump simulator and calibrator.",
    )
    parser.add_argument("--config", type=Path, help="TOML run configuration")
    parser.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    parser.add_argument("--format", choices=["csv"], default="csv", help="output format")
    parser.add_argument(
        "--seed", type=int, default=0,
        help="RNG seed (synthetic-data noise and random checks only)",
    )
    sub = parser.add_subparsers(dest="command")

    mech = sub.add_parser("mech", help="print lumped valve parameters")
    mech.add_argument("--valve", choices=["inlet", "outlet", "both"], default="both")

    sub.add_parser("sim", help="run one simulation, write the final cycle as CSV")

    sweep = sub.add_parser("sweep", help="flow vs frequency sweep")
    sweep.add_argument("--voltages", type=float, nargs="*", default=None,
                       help="also sweep these voltages at the configured frequency")

    pq = sub.add_parser("pq", help="pump curve, operating point, head queries")
    pq.add_argument("--head", type=float, default=None, help="query flow at this head, m")
    pq.add_argument("--loss-csv", type=Path, default=None,
                    help="derive the system curve from velocity/head samples")

    loss = sub.add_parser("loss", help="head-loss fitting and decomposition")
    loss.add_argument("--samples", type=Path, required=True,
                      help="CSV of velocity_m_per_s,head_m")
    loss.add_argument("--decompose", type=float, nargs=3, default=None,
                      metavar=("H_TOTAL", "H_COLDPLATE", "H_PIPE_OTHER"),
                      help="split a total head loss into the pump-internal part")

    thermal = sub.add_parser("thermal", help="fit and query the cooling-loop model")
    thermal.add_argument("--power", type=float, default=None, help="query power, W")

    cal = sub.add_parser("calibrate", help="fit damping and drive scalings to data")
    cal.add_argument("--measured", type=Path, required=True,
                     help="CSV of frequency_hz,flow_ml_per_min")
    cal.add_argument("--budget", type=int, default=None,
                     help="override calibration.budget evaluations")

    repro = sub.add_parser("repro", help="run the acceptance battery, print the table")
    repro.add_argument("--budget", type=int, default=None,
                       help="override calibration.budget for the round-trip criterion")
    repro.add_argument("--digitized", type=Path, default=None,
                       help="user-digitized flow curve for the resonance criterion")
    return parser


def _prepare(args) -> tuple[RunConfig, Path, str]:
    run_config = (
        RunConfig.from_toml(args.config) if args.config else RunConfig.from_values()
    )
    out_dir = args.out
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "resolved_config.toml").write_text(run_config.resolved_text())
    stamp = f"micropump {__version__} config_sha256={run_config.config_hash()}"
    return run_config, out_dir, stamp


def _write_csv(path: Path, stamp: str, header: tuple, rows) -> None:
    with open(path, "w") as fh:
        fh.write(f"# {stamp}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(repr(float(x)) for x in row) + "\n")


def _cmd_mech(args) -> int:
    run_config, _, _ = _prepare(args)
    sides = ("inlet", "outlet") if args.valve == "both" else (args.valve,)
    config = run_config.pump_config()
    for side in sides:
        spec = config.inlet_valve if side == "inlet" else config.outlet_valve
        damping = (
            config.inlet_damping_n_s_per_m
            if side == "inlet"
            else config.outlet_damping_n_s_per_m
        )
        params = derive_lumped_params(spec, damping)
        print(f"{side} valve ({spec.shape}, h={spec.thickness_m} m):")
        print(f"  second_moment_m4        = {params.second_moment_m4!r}")
        print(f"  spring_n_per_m          = {params.spring_n_per_m!r}")
        print(f"  mass_kg                 = {params.mass_kg!r}")
        print(f"  natural_frequency_rad_s = {params.natural_frequency_rad_s!r}")
        print(f"  damping_n_s_per_m       = {params.damping_n_s_per_m!r}")
        print(f"  damping_factor          = {params.damping_factor!r}")
    return 0


def _cmd_sim(args) -> int:
    run_config, out_dir, stamp = _prepare(args)
    result = simulate(run_config.pump_config(), run_config.sim_options())
    with open(out_dir / "sim.csv", "w") as fh:
        write_sim_csv(result, fh, comment=stamp)
    diag = diagnose_actuation(result)
    print(f"net flow: {result.net_flow_ml_per_min!r} ml/min "
          f"({result.net_flow_m3_s!r} m^3/s)")
    print(f"converged: {result.converged} after {result.cycles_run} cycles")
    print(f"actuation: {diag.classification} "
          f"(backflow fraction {diag.backflow_fraction:.4f}, "
          f"outlet phase lag {diag.outlet_phase_lag_rad:.4f} rad)")
    print(f"wrote {out_dir / 'sim.csv'}")
    return 0


def _cmd_sweep(args) -> int:
    run_config, out_dir, stamp = _prepare(args)
    config = run_config.pump_config()
    curve = frequency_sweep(config, run_config.sweep_spec(), run_config.sim_options())
    with open(out_dir / "sweep.csv", "w") as fh:
        write_flow_curve_csv(curve, fh, comment=stamp)
    print(f"wrote {out_dir / 'sweep.csv'}")
    for f, q in find_peaks(curve):
        print(f"peak: {q!r} ml/min at {f!r} Hz")
    if args.voltages:
        rows = voltage_response(
            config, args.voltages, config.drive.frequency_hz, run_config.sim_options()
        )
        _write_csv(out_dir / "voltage_response.csv", stamp,
                   ("voltage_v", "flow_ml_per_min"), rows)
        print(f"wrote {out_dir / 'voltage_response.csv'}")
    return 0


def _cmd_pq(args) -> int:
    run_config, out_dir, stamp = _prepare(args)
    pump = run_config.pump_curve()
    heads = np.linspace(0.0, pump.shutoff_head_m, 14)
    _write_csv(
        out_dir / "pq.csv", stamp, ("head_m", "flow_ml_per_min"),
        [(h, pump.flow_at(float(h)) * M3_PER_S_TO_ML_PER_MIN) for h in heads],
    )
    print(f"wrote {out_dir / 'pq.csv'}")

    if args.loss_csv is not None:
        run_config.require("pipe.cross_section_area_m2")
        with open(args.loss_csv) as fh:
            samples = read_loss_samples_csv(fh)
        fit = fit_linear_loss(samples)
        coeff = velocity_coefficient_to_flow(
            fit.coefficient, run_config["pipe.cross_section_area_m2"]
        )
        system = SystemCurve(pipe_other=coeff)
        print(f"system curve from samples: a = {coeff!r} m/(m^3/s)")
    else:
        system = run_config.system_curve()

    point = operating_point(pump, system)
    print(f"operating point: Q = {point.flow_ml_per_min!r} ml/min "
          f"at H = {point.head_m!r} m (a = {system.total!r})")
    if args.head is not None:
        flow = pump.flow_at(args.head)
        print(f"Q({args.head!r} m) = {flow * M3_PER_S_TO_ML_PER_MIN!r} ml/min")
    return 0


def _cmd_loss(args) -> int:
    run_config, out_dir, stamp = _prepare(args)
    with open(args.samples) as fh:
        samples = read_loss_samples_csv(fh)
    fit = fit_linear_loss(samples)
    print(f"linear loss fit: H = {fit.coefficient!r} * V  "
          f"(rms residual {fit.rms_residual_m!r} m)")
    _write_csv(
        out_dir / "loss_fit.csv", stamp, ("velocity_m_per_s", "head_m", "fitted_head_m"),
        [(s.velocity_m_s, s.head_m, fit.coefficient * s.velocity_m_s) for s in samples],
    )
    print(f"wrote {out_dir / 'loss_fit.csv'}")
    if args.decompose is not None:
        h_total, h_cold, h_pipe = args.decompose
        h_pump = decompose_pump_resistance(h_total, h_cold, h_pipe)
        print(f"pump-internal head loss: {h_pump!r} m")
    return 0


def _cmd_thermal(args) -> int:
    run_config, out_dir, stamp = _prepare(args)
    model = fit_thermal_model(run_config.thermal_points())
    print(f"thermal model: T = {model.offset_c!r} + {model.slope_c_per_w!r} * P")
    lo, hi = model.power_range_w
    powers = np.linspace(lo, hi, 31)
    _write_csv(
        out_dir / "thermal.csv", stamp, ("power_w", "core_temp_c"),
        [(p, core_temperature(model, float(p)).temperature_c) for p in powers],
    )
    print(f"wrote {out_dir / 'thermal.csv'}")
    if args.power is not None:
        pred = core_temperature(model, args.power)
        note = " (extrapolated)" if pred.extrapolated else ""
        print(f"T({args.power!r} W) = {pred.temperature_c!r} degC{note}")
    return 0


def _cmd_calibrate(args) -> int:
    run_config, out_dir, stamp = _prepare(args)
    with open(args.measured) as fh:
        measured = read_flow_curve_csv(fh)
    budget = args.budget if args.budget is not None else run_config["calibration.budget"]
    template = run_config.pump_config()
    result = calibrate(
        measured, template, budget=budget,
        settle_cycles=run_config["calibration.settle_cycles"],
    )
    with open(out_dir / "calibration.txt", "w") as fh:
        result.write_text(fh)
    print(f"objective: {result.objective_ml_min_sq!r} (ml/min)^2 "
          f"after {result.evaluations} evaluations")
    calibrated = frequency_sweep(
        result.apply_to(template), run_config.sweep_spec(), run_config.sim_options()
    )
    with open(out_dir / "calibrated_sweep.csv", "w") as fh:
        write_flow_curve_csv(calibrated, fh, comment=stamp)
    print(f"wrote {out_dir / 'calibration.txt'} and {out_dir / 'calibrated_sweep.csv'}")
    return 0


def _cmd_repro(args) -> int:
    run_config, out_dir, _ = _prepare(args)
    budget = args.budget if args.budget is not None else run_config["calibration.budget"]
    digitized = None
    if args.digitized is not None:
        with open(args.digitized) as fh:
            digitized = read_flow_curve_csv(fh)
    outcomes = run_all(out_dir, budget=budget, seed=args.seed, digitized=digitized)
    width = max(len(o.ident) for o in outcomes)
    for oc in outcomes:
        print(f"{oc.status:4s}  {oc.ident:<{width}s}  {oc.detail}")
    failed = [o for o in outcomes if o.passed is False]
    print(f"{len(outcomes) - len(failed) - sum(o.passed is None for o in outcomes)} "
          f"passed, {len(failed)} failed, "
          f"{sum(o.passed is None for o in outcomes)} skipped")
    return 2 if failed else 0


_COMMANDS = {
    "mech": _cmd_mech,
    "sim": _cmd_sim,
    "sweep": _cmd_sweep,
    "pq": _cmd_pq,
    "loss": _cmd_loss,
    "thermal": _cmd_thermal,
    "calibrate": _cmd_calibrate,
    "repro": _cmd_repro,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    argv = sys.argv[1:] if argv is None else argv
    if not argv:
        parser.print_usage(sys.stderr)
        return 1
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except MicropumpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
