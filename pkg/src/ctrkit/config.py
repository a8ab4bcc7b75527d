"""Robot configuration: JSON schema, validation, and defaults.

Configs are human-edited JSON; angles at this boundary are degrees and get
converted to radians on load.  Validation is exhaustive: every violation
is collected with a stable code instead of failing on the first.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import presets
from .design import TubePair, max_precurvature, kappa_limit
from .errors import ConfigError
from .kinematics import JointLimits
from .motor import ControllerParams, MotorPlant
from .shape import CenterlineSamples, PlanarShape, fit_centerline
from .torsion import MaterialModel, TubeSpec


@dataclass
class ConfigIssue:
    code: str
    message: str
    severity: str = "error"     # "error" | "warning"

    def as_dict(self):
        return {"code": self.code, "message": self.message,
                "severity": self.severity}


@dataclass
class RobotConfig:
    """Validated aggregate of every model the toolkit needs."""
    shape: PlanarShape
    inner_tube: TubeSpec
    inner_material: MaterialModel
    outer_tube: TubeSpec
    outer_material: MaterialModel
    limits: JointLimits
    axes: dict                      # name -> {"controller": ..., "plant": ...}
    warnings: list = field(default_factory=list)

    @property
    def pair(self) -> TubePair:
        return TubePair(self.inner_tube, self.inner_material,
                        self.outer_tube, self.outer_material)


def default_config() -> RobotConfig:
    shape = presets.demo_tube_shape()
    return RobotConfig(
        shape=shape,
        inner_tube=presets.default_inner_tube(shape),
        inner_material=presets.default_inner_material(),
        outer_tube=presets.default_outer_tube(),
        outer_material=presets.default_outer_material(),
        limits=presets.default_joint_limits(),
        axes=presets.default_axes(),
    )


def default_config_dict() -> dict:
    """The default configuration as a JSON-ready dict (emit + edit)."""
    return config_to_dict(default_config())


_TUBE_FIELDS = ("outer_diameter_mm", "inner_diameter_mm", "length_total_mm")
_MATERIAL_FIELDS = ("elastic_modulus_gpa", "shear_modulus_gpa",
                    "strain_limit", "friction_mu")


def config_to_dict(cfg: RobotConfig) -> dict:
    def tube_d(t: TubeSpec, m: MaterialModel) -> dict:
        return {
            "outer_diameter_mm": t.r_od * 2.0,
            "inner_diameter_mm": t.r_id * 2.0,
            "length_total_mm": t.length_total,
            "material": {
                "elastic_modulus_gpa": m.elastic_modulus,
                "shear_modulus_gpa": m.shear_modulus,
                "strain_limit": m.strain_limit,
                "friction_mu": m.friction_mu,
            },
        }

    def axis_d(ax: dict) -> dict:
        c: ControllerParams = ax["controller"]
        p: MotorPlant = ax["plant"]
        return {
            "controller": {
                "delta_counts": c.delta, "err_thresh_counts": c.err_thresh,
                "v_start": c.v_start, "v_deadband": c.v_deadband,
                "kp_const": c.kp_const, "kd": c.kd, "ki": c.ki,
                "v_range": c.v_range, "resolution_bits": c.resolution_bits,
            },
            "plant": {
                "nominal_speed_rpm": p.nominal_speed_rpm,
                "gear_ratio": p.gear_ratio,
                "counts_per_rev": p.counts_per_rev,
                "transport_delay_s": p.transport_delay,
                "plant_deadband_v": p.plant_deadband,
                "time_constant_s": p.time_constant,
            },
        }

    return {
        "shape": cfg.shape.to_dict(),
        "inner_tube": tube_d(cfg.inner_tube, cfg.inner_material),
        "outer_tube": tube_d(cfg.outer_tube, cfg.outer_material),
        "workspace": {"d_min_mm": cfg.limits.d_min, "d_max_mm": cfg.limits.d_max},
        "axes": {name: axis_d(ax) for name, ax in cfg.axes.items()},
    }


def validate_config_dict(d: dict) -> list:
    """All schema/invariant violations in a config dict, with stable codes."""
    issues: list[ConfigIssue] = []

    def err(code, msg):
        issues.append(ConfigIssue(code, msg))

    def warn(code, msg):
        issues.append(ConfigIssue(code, msg, severity="warning"))

    if not isinstance(d, dict):
        return [ConfigIssue("config.not_object", "top level must be a JSON object")]

    # ---- shape -------------------------------------------------------------
    shape = None
    sh = d.get("shape")
    if sh is None:
        err("config.missing_shape", "missing 'shape' section")
    elif "centerline_csv" in sh:
        try:
            samples = CenterlineSamples.from_csv(sh["centerline_csv"])
            shape = fit_centerline(samples, int(sh.get("fit_degree", 4)))
        except Exception as exc:  # noqa: BLE001 - collected for the report
            err("shape.fit_failed", f"centerline fit failed: {exc}")
    else:
        coeffs = sh.get("coefficients")
        x_max = sh.get("x_max_total")
        fields_ok = True
        if not isinstance(coeffs, list) or len(coeffs) < 3:
            err("shape.degree_too_low",
                "shape needs >= 3 polynomial coefficients (degree >= 2)")
            fields_ok = False
        if not isinstance(x_max, (int, float)) or x_max <= 0:
            err("shape.x_max_nonpositive", "x_max_total must be positive")
            fields_ok = False
        if fields_ok:
            try:
                shape = PlanarShape(coeffs, x_max)
            except Exception as exc:  # noqa: BLE001
                err("shape.invalid", str(exc))

    # ---- tubes ---------------------------------------------------------------
    def check_tube(section, name):
        t = d.get(section)
        if t is None:
            err(f"config.missing_{section}", f"missing '{section}' section")
            return None, None
        for f in _TUBE_FIELDS:
            if not isinstance(t.get(f), (int, float)) or t.get(f, 0) <= 0:
                err(f"{name}.field", f"{section}.{f} must be a positive number")
        m = t.get("material", {})
        for f in _MATERIAL_FIELDS:
            if not isinstance(m.get(f), (int, float)) or m.get(f, 0) <= 0:
                err("material.nonpositive",
                    f"{section}.material.{f} must be a positive number")
        if isinstance(m.get("strain_limit"), (int, float)) and \
                m.get("strain_limit") > 0.15:
            err("material.strain_limit_excessive",
                f"{section}.material.strain_limit above sanity bound 0.15")
        od = t.get("outer_diameter_mm")
        idm = t.get("inner_diameter_mm")
        if isinstance(od, (int, float)) and isinstance(idm, (int, float)) \
                and not 0 < idm < od:
            err("tube.radii_invalid",
                f"{section}: need 0 < inner diameter < outer diameter")
        return t, m

    inner, inner_m = check_tube("inner_tube", "tube")
    outer, _outer_m = check_tube("outer_tube", "tube")

    # ---- pairing -------------------------------------------------------------
    if inner and outer and not any(i.severity == "error" and
                                   i.code.startswith(("tube", "material"))
                                   for i in issues):
        clearance = outer.get("inner_diameter_mm", 0) - inner.get("outer_diameter_mm", 0)
        if clearance < -1e-9:
            err("pair.clearance_negative",
                f"inner tube OD exceeds outer tube ID by {-clearance:.3f} mm")

    # ---- workspace -----------------------------------------------------------
    ws = d.get("workspace", {})
    d_min = ws.get("d_min_mm", 0.0)
    d_max = ws.get("d_max_mm", presets.DEFAULT_TRAVEL_MM)
    if not (isinstance(d_min, (int, float)) and isinstance(d_max, (int, float))
            and d_min < d_max):
        err("workspace.travel", "workspace travel bounds must satisfy d_min < d_max")

    # ---- axes ----------------------------------------------------------------
    for name, ax in (d.get("axes") or {}).items():
        c = (ax or {}).get("controller", {})
        delta = c.get("delta_counts", 11)
        thresh = c.get("err_thresh_counts", 1000)
        if not 0 < delta < thresh:
            err("controller.delta_range",
                f"axes.{name}: need 0 < delta_counts < err_thresh_counts")
        v_db = c.get("v_deadband", 3.5)
        v_st = c.get("v_start", 9.0)
        if not v_db <= v_st <= 10.0:
            err("controller.v_order",
                f"axes.{name}: need v_deadband <= v_start <= 10")
        if c.get("ki", 0.0) != 0.0 or c.get("kd", 4000.0) != 4000.0:
            err("controller.gains_nonstandard",
                f"axes.{name}: ki must be 0 and kd must be 4000")
        p = (ax or {}).get("plant", {})
        for f in ("nominal_speed_rpm", "gear_ratio", "counts_per_rev",
                  "time_constant_s"):
            if p.get(f) is not None and p.get(f) <= 0:
                err("plant.nonpositive", f"axes.{name}: plant.{f} must be positive")
        if p.get("transport_delay_s", 0.352) < 0:
            err("plant.nonpositive",
                f"axes.{name}: transport delay must be nonnegative")

    # ---- cross checks (only when the pieces parsed) ----------------------------
    if shape is not None and inner and inner_m and outer and \
            not any(i.severity == "error" for i in issues):
        s_max = inner.get("deflectable_arc_mm", shape.arc_total)
        if abs(s_max - shape.arc_total) > 0.5:
            err("config.s_max_mismatch",
                f"deflectable arc {s_max:.2f} mm disagrees with the shape's "
                f"arc length {shape.arc_total:.2f} mm")
        try:
            material = MaterialModel(
                elastic_modulus=inner_m["elastic_modulus_gpa"],
                shear_modulus=inner_m["shear_modulus_gpa"],
                strain_limit=inner_m["strain_limit"],
                friction_mu=inner_m["friction_mu"])
            pair = TubePair(
                TubeSpec(inner["outer_diameter_mm"] / 2, inner["inner_diameter_mm"] / 2,
                         inner["length_total_mm"], min(s_max, inner["length_total_mm"])),
                material,
                TubeSpec(outer["outer_diameter_mm"] / 2, outer["inner_diameter_mm"] / 2,
                         outer["length_total_mm"], 0.0),
                MaterialModel(1.0, 1.0, 0.1, 0.1))
            k_lim = kappa_limit(pair, s_max)
            kappa_allowed = max_precurvature(material, inner["outer_diameter_mm"] / 2,
                                             k_lim)
            xs = np.linspace(0.0, shape.x_max_total, 512)
            kappa_max = float(np.abs(shape.curvature(xs)).max())
            if kappa_max > kappa_allowed + 1e-12:
                warn("config.strain_limit",
                     f"peak centerline curvature {kappa_max:.5f} /mm exceeds the "
                     f"elastic design bound {kappa_allowed:.5f} /mm")
        except Exception as exc:  # noqa: BLE001
            err("config.cross_check_failed", f"cross validation failed: {exc}")
    return issues


def config_from_dict(d: dict) -> RobotConfig:
    """Build a validated RobotConfig; raises ConfigError listing every issue."""
    issues = validate_config_dict(d)
    errors = [(i.code, i.message) for i in issues if i.severity == "error"]
    if errors:
        raise ConfigError(errors)

    sh = d["shape"]
    if "centerline_csv" in sh:
        shape = fit_centerline(CenterlineSamples.from_csv(sh["centerline_csv"]),
                               int(sh.get("fit_degree", 4)))
    else:
        shape = PlanarShape(sh["coefficients"], sh["x_max_total"])

    def tube_of(sec) -> tuple[TubeSpec, MaterialModel]:
        m = sec["material"]
        mat = MaterialModel(m["elastic_modulus_gpa"], m["shear_modulus_gpa"],
                            m["strain_limit"], m["friction_mu"])
        arc = sec.get("deflectable_arc_mm", 0.0)
        tube = TubeSpec(sec["outer_diameter_mm"] / 2.0,
                        sec["inner_diameter_mm"] / 2.0,
                        sec["length_total_mm"],
                        min(arc, sec["length_total_mm"]))
        return tube, mat

    inner_tube, inner_mat = tube_of(d["inner_tube"])
    if inner_tube.deflectable_arc == 0.0:
        inner_tube = TubeSpec(inner_tube.r_od, inner_tube.r_id,
                              inner_tube.length_total, shape.arc_total)
    outer_tube, outer_mat = tube_of(d["outer_tube"])

    ws = d.get("workspace", {})
    limits = JointLimits(ws.get("d_min_mm", 0.0),
                         ws.get("d_max_mm", presets.DEFAULT_TRAVEL_MM))

    axes = {}
    for name, ax in (d.get("axes") or {}).items():
        c = ax.get("controller", {})
        p = ax.get("plant", {})
        axes[name] = {
            "controller": ControllerParams(
                delta=int(c.get("delta_counts", 11)),
                err_thresh=int(c.get("err_thresh_counts", 1000)),
                v_start=c.get("v_start", 9.0),
                v_deadband=c.get("v_deadband", 3.5),
                kp_const=c.get("kp_const", 11.5),
                kd=c.get("kd", 4000.0), ki=c.get("ki", 0.0),
                v_range=c.get("v_range", 20.0),
                resolution_bits=int(c.get("resolution_bits", 16))),
            "plant": MotorPlant(
                nominal_speed_rpm=p.get("nominal_speed_rpm", 11000.0),
                gear_ratio=p.get("gear_ratio", 400.0),
                counts_per_rev=p.get("counts_per_rev", 4000.0),
                transport_delay=p.get("transport_delay_s", 0.352),
                plant_deadband=p.get("plant_deadband_v", 3.45),
                time_constant=p.get("time_constant_s", 0.05)),
        }
    if not axes:
        axes = presets.default_axes()

    return RobotConfig(shape=shape, inner_tube=inner_tube,
                       inner_material=inner_mat, outer_tube=outer_tube,
                       outer_material=outer_mat, limits=limits, axes=axes,
                       warnings=[i for i in issues if i.severity == "warning"])


def load_config(path) -> RobotConfig:
    with open(path) as fh:
        return config_from_dict(json.load(fh))


def save_config(cfg: RobotConfig, path) -> None:
    with open(path, "w") as fh:
        json.dump(config_to_dict(cfg), fh, indent=2, sort_keys=True)
        fh.write("\n")
