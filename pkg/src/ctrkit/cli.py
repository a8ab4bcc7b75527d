"""Command-line interface.

One subcommand per workflow step: shape characterization, forward/inverse
kinematics, torsion tables, tube-design reports, motor simulation, frame
registration, clot evacuation, and config validation.  Outputs are
deterministic JSON/CSV; angles on the command line and in config files are
degrees, radians internally.  Errors leave a machine-readable JSON object
on stderr and a nonzero exit code.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, _kernels, config as config_mod, design, evacuation, motor
from .errors import CtrKitError
from .ik import Planner
from .kinematics import JointConfig, forward_kinematics
from .shape import CenterlineSamples, fit_centerline

log = logging.getLogger("ctrkit")


def _json_dump(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _print_json(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_config(args) -> config_mod.RobotConfig:
    if args.config:
        return config_mod.load_config(args.config)
    return config_mod.default_config()


def _planner(cfg: config_mod.RobotConfig) -> Planner:
    return Planner(cfg.shape, cfg.inner_tube, cfg.inner_material, cfg.limits)


# ------------------------------------------------------------- subcommands
def cmd_fit_shape(args) -> int:
    samples = CenterlineSamples.from_csv(args.csv)
    shape = fit_centerline(samples, args.degree)
    out = _out_dir(args)
    shape.to_json(out / "shape.json")
    _print_json(shape.to_dict())
    return 0


def cmd_fk(args) -> int:
    cfg = _load_config(args)
    d, s, theta_deg = (float(v) for v in args.joints.split(","))
    q = JointConfig(d=d, s=s, theta=math.radians(theta_deg))
    res = forward_kinematics(cfg.shape, q, limits=cfg.limits)
    out = _out_dir(args)
    tip = {
        "joints": {"d_mm": d, "s_mm": s, "theta_deg": theta_deg},
        "tip_position_mm": [float(v) for v in res.tip_position],
        "tip_transform": [[float(v) for v in row] for row in res.tip_transform],
    }
    _json_dump(tip, out / "tip.json")
    with open(out / "backbone.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x_mm", "y_mm", "z_mm"])
        for p in res.backbone:
            w.writerow([f"{v:.9g}" for v in p])
    _print_json(tip)
    return 0


def cmd_ik(args) -> int:
    cfg = _load_config(args)
    planner = _planner(cfg)
    out = _out_dir(args)
    if args.targets:
        rows = []
        with open(args.targets, newline="") as fh:
            reader = csv.DictReader(fh)
            for rec in reader:
                rows.append([float(rec["x_mm"]), float(rec["y_mm"]),
                             float(rec["z_mm"])])
        results = []
        for xyz in rows:
            q = planner.solve(xyz)
            tip = planner.forward(q).tip_position
            err = float(np.linalg.norm(tip - np.asarray(xyz)))
            results.append((xyz, q, err))
        path = out / "ik_batch.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x_mm", "y_mm", "z_mm", "d_mm", "s_mm", "theta_deg",
                        "roundtrip_err_mm"])
            for xyz, q, err in results:
                w.writerow([f"{xyz[0]:.9g}", f"{xyz[1]:.9g}", f"{xyz[2]:.9g}",
                            f"{q.d:.9g}", f"{q.s:.9g}",
                            f"{math.degrees(q.theta):.9g}", f"{err:.3e}"])
        print(f"wrote {path} ({len(results)} targets, max round-trip error "
              f"{max(r[2] for r in results):.2e} mm)")
        return 0
    xyz = [float(v) for v in args.target.split(",")]
    q = planner.solve(xyz)
    plan = planner.plan(JointConfig(0.0, 0.0, 0.0), xyz)
    payload = {
        "target_mm": xyz,
        "joints": {"d_mm": q.d, "s_mm": q.s, "theta_deg": math.degrees(q.theta)},
        "plan": plan.to_dict(),
    }
    _json_dump(payload, out / "ik.json")
    _print_json(payload)
    return 0


def cmd_torsion(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)
    s_vals = np.linspace(0.0, cfg.shape.arc_total, args.s_steps)
    theta_vals = np.linspace(-180.0, 180.0, args.theta_steps)
    from .torsion import torsional_deflection
    phis = np.array([torsional_deflection(cfg.shape, float(s), cfg.inner_tube,
                                          cfg.inner_material) for s in s_vals])
    path = out / "torsion_grid.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["s_mm", "theta_command_deg", "deflection_rad"])
        for s, phi in zip(s_vals, phis):
            for th in theta_vals:
                signed = math.copysign(phi, th) if th != 0 else 0.0
                w.writerow([f"{s:.9g}", f"{th:.9g}", f"{signed:.9g}"])
    print(f"wrote {path} (phi range 0..{phis.max():.4f} rad)")
    return 0


def cmd_design(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)
    if args.check_roc is not None:
        pair = cfg.pair
        k_lim = design.kappa_limit(pair, cfg.inner_tube.deflectable_arc)
        k_max = design.max_precurvature(cfg.inner_material,
                                        cfg.inner_tube.r_od, k_lim)
        min_roc = 1.0 / k_max
        payload = {
            "requested_roc_mm": args.check_roc,
            "minimum_elastic_roc_mm": min_roc,
            "kappa_limit_per_mm": k_lim,
            "feasible": bool(args.check_roc >= min_roc - 1e-9),
        }
        _print_json(payload)
        _json_dump(payload, out / "roc_check.json")
        return 0 if payload["feasible"] else 4
    if args.pair:
        with open(args.pair) as fh:
            rows = json.load(fh)
    else:
        rows = design.reference_design_rows()
    table = design.design_table(rows, shape=cfg.shape)
    path = out / "design_report.csv"
    cols = ["label", "elastic_modulus_gpa", "outer_diameter_mm",
            "inner_diameter_mm", "roc_mm", "loc_mm", "stiffness_n_per_rad",
            "f_bend_n", "bend_angle_rad"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for row in table:
            w.writerow([row[c] if isinstance(row[c], str)
                        else f"{row[c]:.9g}" for c in cols])
    md = out / "design_report.md"
    with open(md, "w") as fh:
        fh.write("| " + " | ".join(cols) + " |\n")
        fh.write("|" + "---|" * len(cols) + "\n")
        for row in table:
            fh.write("| " + " | ".join(
                row[c] if isinstance(row[c], str) else f"{row[c]:.6g}"
                for c in cols) + " |\n")
    print(f"wrote {path} and {md}")
    return 0


def cmd_motor_sim(args) -> int:
    if args.axis == "rot":
        params, plant = motor.rotational_axis_defaults()
    else:
        params, plant = motor.translational_axis_defaults()
    counts = args.setpoint_deg / 360.0 * plant.counts_per_rev
    kp_fixed = None
    if args.mode == "constant":
        kp_fixed = args.kp if args.kp is not None else params.kp_const
    res = motor.simulate_move(counts, plant, params, mode=args.mode,
                              kp_fixed=kp_fixed, t_max=args.t_max)
    out = _out_dir(args)
    path = out / f"motor_{args.axis}.csv"
    res.to_csv(path)
    summary = {
        "axis": args.axis, "mode": args.mode,
        "setpoint_deg": args.setpoint_deg, "setpoint_counts": res.setpoint,
        "settled": res.settled, "settle_time_s": res.settle_time,
        "final_err_counts": res.final_err, "oscillating": res.oscillating,
    }
    _print_json(summary)
    _json_dump(summary, out / f"motor_{args.axis}.json")
    return 0


def cmd_register(args) -> int:
    def read_points(path):
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            return np.array([[float(r["x_mm"]), float(r["y_mm"]),
                              float(r["z_mm"])] for r in reader])

    image = read_points(args.image)
    robot = read_points(args.robot)
    result = evacuation.register(image, robot)
    payload = {
        "transform": [[float(v) for v in row] for row in result.transform],
        "rms_fiducial_error_mm": result.rms_fiducial_error,
    }
    out = _out_dir(args)
    _json_dump(payload, out / "registration.json")
    _print_json(payload)
    return 0


def cmd_evacuate(args) -> int:
    cfg = _load_config(args)
    planner = _planner(cfg)
    if args.phantom:
        phantom = evacuation.ClotPhantom.load(args.phantom)
    else:
        phantom = evacuation.ClotPhantom.ellipsoid()
    registration = None
    if args.registration:
        with open(args.registration) as fh:
            payload = json.load(fh)
        registration = evacuation.RegistrationResult(
            np.asarray(payload["transform"], dtype=float),
            payload.get("rms_fiducial_error_mm", 0.0))
    report = evacuation.run_evacuation(
        phantom, planner, registration=registration, stop_ml=args.stop_ml,
        aspiration_radius=args.radius, dwell_s=args.dwell,
        rate_ml_per_min=args.rate)
    out = _out_dir(args)
    report.to_json(out / "evacuation_report.json")
    report.log_to_csv(out / "evacuation_log.csv")
    _print_json({k: v for k, v in report.to_dict().items() if k != "per_target"})
    return 0


def cmd_validate_config(args) -> int:
    if args.emit_default:
        _print_json(config_mod.default_config_dict())
        return 0
    with open(args.config) as fh:
        d = json.load(fh)
    issues = config_mod.validate_config_dict(d)
    payload = {
        "valid": not any(i.severity == "error" for i in issues),
        "issues": [i.as_dict() for i in issues],
    }
    _print_json(payload)
    return 0 if payload["valid"] else 2


# ------------------------------------------------------------------ parser
def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="ctrkit",
        description="Concentric tube robot modeling and simulation toolkit")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="robot config JSON (default: built-in)")
        sp.add_argument("--out-dir", default=".", help="output directory")
        sp.add_argument("--seed", type=int, default=0,
                        help="seed for randomized subcommands")
        sp.add_argument("--format", choices=("json", "csv"), default="json")

    sp = sub.add_parser("fit-shape", help="fit a centerline CSV to a polynomial")
    common(sp)
    sp.add_argument("--csv", required=True, help="two-column x_mm,y_mm CSV")
    sp.add_argument("--degree", type=int, default=4)
    sp.set_defaults(func=cmd_fit_shape)

    sp = sub.add_parser("fk", help="forward kinematics for one joint triple")
    common(sp)
    sp.add_argument("--joints", required=True,
                    help="d_mm,s_mm,theta_deg (comma separated)")
    sp.set_defaults(func=cmd_fk)

    sp = sub.add_parser("ik", help="inverse kinematics for targets")
    common(sp)
    sp.add_argument("--target", help="x,y,z in mm (robot frame)")
    sp.add_argument("--targets", help="CSV of targets with x_mm,y_mm,z_mm columns")
    sp.set_defaults(func=cmd_ik)

    sp = sub.add_parser("torsion", help="emit the windup grid phi(s, theta)")
    common(sp)
    sp.add_argument("--s-steps", type=int, default=30)
    sp.add_argument("--theta-steps", type=int, default=13)
    sp.set_defaults(func=cmd_torsion)

    sp = sub.add_parser("design", help="tube design report / RoC check")
    common(sp)
    sp.add_argument("--pair", help="JSON list of design rows")
    sp.add_argument("--table1", action="store_true",
                    help="use the built-in reference designs (default)")
    sp.add_argument("--check-roc", type=float,
                    help="validate a proposed radius of curvature (mm)")
    sp.set_defaults(func=cmd_design)

    sp = sub.add_parser("motor-sim", help="simulate one closed-loop motor move")
    common(sp)
    sp.add_argument("--axis", choices=("rot", "trans"), required=True)
    sp.add_argument("--setpoint-deg", type=float, required=True)
    sp.add_argument("--mode", choices=("scheduled", "constant"),
                    default="scheduled")
    sp.add_argument("--kp", type=float, help="fixed gain for constant mode")
    sp.add_argument("--t-max", type=float, default=180.0)
    sp.set_defaults(func=cmd_motor_sim)

    sp = sub.add_parser("register", help="rigid registration of fiducial CSVs")
    common(sp)
    sp.add_argument("--image", required=True, help="image-frame fiducials CSV")
    sp.add_argument("--robot", required=True, help="robot-frame fiducials CSV")
    sp.set_defaults(func=cmd_register)

    sp = sub.add_parser("evacuate", help="run the clot evacuation loop")
    common(sp)
    sp.add_argument("--phantom", help="phantom header JSON (default: built-in)")
    sp.add_argument("--registration", help="registration JSON from 'register'")
    sp.add_argument("--stop-ml", type=float, default=15.0)
    sp.add_argument("--radius", type=float, default=5.0)
    sp.add_argument("--dwell", type=float, default=1.0)
    sp.add_argument("--rate", type=float, default=6.0,
                    help="aspiration rate, mL/min")
    sp.set_defaults(func=cmd_evacuate)

    sp = sub.add_parser("validate-config", help="validate a robot config JSON")
    common(sp)
    sp.add_argument("--emit-default", action="store_true",
                    help="print the built-in default config and exit")
    sp.set_defaults(func=cmd_validate_config)
    return p


def main(argv=None) -> int:
    level = os.environ.get("CTRKIT_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    log.debug("kernel backend: %s", _kernels.backend_name())
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "validate-config" and not args.emit_default \
            and not args.config:
        parser.error("validate-config requires --config (or --emit-default)")
    if args.command == "ik" and not (args.target or args.targets):
        parser.error("ik requires --target or --targets")
    try:
        return args.func(args)
    except CtrKitError as exc:
        payload = {"error": {"code": exc.code, "message": str(exc)}}
        if getattr(exc, "issues", None):
            payload["error"]["issues"] = [
                {"code": c, "message": m} for c, m in exc.issues]
        print(json.dumps(payload, sort_keys=True), file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(json.dumps({"error": {"code": "io.missing_file",
                                    "message": str(exc)}}, sort_keys=True),
              file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
