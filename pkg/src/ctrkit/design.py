"""Elastic feasibility analysis for precurved plastic tubes.

Covers the strain-limited maximum precurvature, the residual curvature a
tube can keep inside a clearance-fit delivery tube, a bending-stiffness
report for candidate tube designs, and the shape-retention check used
after insertion cycling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, NumericalError
from .shape import CenterlineShape
from .torsion import MaterialModel, TubeSpec


@dataclass(frozen=True)
class TubePair:
    """Concentric inner/outer tube pairing with diametral clearance."""
    inner_tube: TubeSpec
    inner_material: MaterialModel
    outer_tube: TubeSpec
    outer_material: MaterialModel

    def __post_init__(self):
        if self.inner_tube.r_od > self.outer_tube.r_id + 1e-12:
            raise DomainError("inner tube does not fit inside the outer tube",
                              code="pair.inner_exceeds_outer")

    @property
    def clearance(self) -> float:
        """Diametral clearance: outer ID minus inner OD, mm."""
        return 2.0 * (self.outer_tube.r_id - self.inner_tube.r_od)


def max_precurvature(material: MaterialModel, r_od: float,
                     kappa_limit: float = 0.0) -> float:
    """Largest heat-set curvature that stays elastic when straightened.

    The outermost fiber sees strain (kappa_o - kappa_limit)*r_od when the
    tube is flattened to the residual curvature kappa_limit, so
    kappa_o = strain_limit/r_od + kappa_limit (bending toward -y).
    """
    if r_od <= 0:
        raise DomainError("r_od must be positive")
    return material.strain_limit / r_od + kappa_limit


def kappa_limit(pair: TubePair, s_max: float) -> float:
    """Residual curvature of the constrained inner tube set by clearance.

    Treats the constrained tube as a single circular arc touching the outer
    tube wall at both ends of the curved region; the root of
    (cos(k*s)-1)/k - r_od_i*cos(k*s) + (D_id_o - r_od_i) = 0 gives the
    curvature at which the tip contact uses up the available diametral
    drop.  Zero-clearance pairs return exactly 0.
    """
    if s_max <= 0:
        raise DomainError("s_max must be positive")
    r_i = pair.inner_tube.r_od
    d_id_o = 2.0 * pair.outer_tube.r_id
    if pair.clearance <= 1e-12:
        return 0.0
    d_y = d_id_o - r_i

    def residual(k: float) -> float:
        ks = k * s_max
        return (math.cos(ks) - 1.0) / k - r_i * math.cos(ks) + d_y

    # residual(0+) = clearance > 0 and decreases with k; expand the bracket
    # until it crosses
    k_lo = 1e-9
    k_hi = 1.0 / s_max
    for _ in range(60):
        if residual(k_hi) < 0.0:
            break
        k_hi *= 1.5
        if k_hi * s_max > math.pi:
            raise NumericalError(
                "no curvature bracket found for kappa_limit; clearance "
                f"{pair.clearance:.3f} mm with s_max {s_max:.3f} mm")
    return float(brentq(residual, k_lo, k_hi, xtol=1e-14, rtol=8.9e-16))


@dataclass(frozen=True)
class BendingReport:
    """Straightening force/stiffness summary for one tube design."""
    stiffness_n_per_rad: float
    f_bend_n: float
    bend_angle_rad: float
    roc_mm: float | None
    loc_mm: float


def bending_report(tube: TubeSpec, material: MaterialModel,
                   roc: float | None = None, loc: float | None = None,
                   shape: CenterlineShape | None = None) -> BendingReport:
    """Tip force and stiffness needed to straighten the curved region.

    Provide either a constant-curvature design (roc + loc) or a
    characterized shape (variable curvature; the bend angle is the integral
    of curvature over arc).  The tip force is the mean straightening moment
    E*I*kappa_mean over the tip moment arm; stiffness is force per total
    bend angle, so force/stiffness always equals the bend angle
    (loc/roc for a constant-curvature tube).
    """
    ei = material.e_mpa * tube.bending_moment_of_area
    if shape is not None:
        loc_eff = shape.arc_total
        kappas, dss = shape.segment_grid(0.0, shape.x_max_total, 400)
        angle = float(np.dot(kappas, dss))
        roc_eff = None
    else:
        if roc is None or loc is None or roc <= 0 or loc <= 0:
            raise DomainError("need positive roc and loc (or a shape)")
        loc_eff = float(loc)
        angle = loc / roc
        roc_eff = float(roc)
    if angle <= 0.0:
        return BendingReport(0.0, 0.0, 0.0, roc_eff, loc_eff)
    f_bend = ei * (angle / loc_eff) / loc_eff
    return BendingReport(stiffness_n_per_rad=f_bend / angle, f_bend_n=f_bend,
                         bend_angle_rad=angle, roc_mm=roc_eff, loc_mm=loc_eff)


def cycling_retention_check(initial_roc: float, measured_roc_after: float,
                            tolerance: float = 0.05) -> bool:
    """Pass when the curved region kept its radius within ``tolerance``."""
    if initial_roc <= 0 or measured_roc_after <= 0:
        raise DomainError("radii must be positive")
    return abs(measured_roc_after - initial_roc) / initial_roc <= tolerance


def design_table(rows, shape: CenterlineShape | None = None):
    """Bending reports for a list of tube-design rows.

    Each row is a dict with material constants and geometry; rows with
    ``"variable": True`` are evaluated on ``shape``.  Returns a list of
    dicts ready for CSV/markdown emission.
    """
    out = []
    for row in rows:
        material = MaterialModel(
            elastic_modulus=row["elastic_modulus_gpa"],
            shear_modulus=row.get("shear_modulus_gpa", row["elastic_modulus_gpa"] / 2.6),
            strain_limit=row.get("strain_limit", 0.10),
            friction_mu=row.get("friction_mu", 0.17),
        )
        tube = TubeSpec(
            r_od=row["outer_diameter_mm"] / 2.0,
            r_id=row["inner_diameter_mm"] / 2.0,
            length_total=row.get("length_total_mm", 250.0),
            deflectable_arc=row.get("loc_mm") or (shape.arc_total if shape else 29.0),
        )
        if row.get("variable"):
            rep = bending_report(tube, material, shape=shape)
        else:
            rep = bending_report(tube, material, roc=row["roc_mm"], loc=row["loc_mm"])
        out.append({
            "label": row.get("label", ""),
            "elastic_modulus_gpa": row["elastic_modulus_gpa"],
            "outer_diameter_mm": row["outer_diameter_mm"],
            "inner_diameter_mm": row["inner_diameter_mm"],
            "roc_mm": rep.roc_mm if rep.roc_mm is not None else "variable",
            "loc_mm": rep.loc_mm,
            "stiffness_n_per_rad": rep.stiffness_n_per_rad,
            "f_bend_n": rep.f_bend_n,
            "bend_angle_rad": rep.bend_angle_rad,
        })
    return out


def reference_design_rows():
    """The four comparison designs used in the toolkit's design report.

    Rows 1-3 are constant-curvature nitinol/nylon candidates; row 4 is the
    characterized variable-curvature nylon tube.
    """
    return [
        {"label": "nitinol small", "elastic_modulus_gpa": 74.0,
         "shear_modulus_gpa": 28.0, "outer_diameter_mm": 2.2,
         "inner_diameter_mm": 1.5, "roc_mm": 20.0, "loc_mm": 27.0},
        {"label": "nitinol large", "elastic_modulus_gpa": 74.0,
         "shear_modulus_gpa": 28.0, "outer_diameter_mm": 6.0,
         "inner_diameter_mm": 4.0, "roc_mm": 20.0, "loc_mm": 27.0},
        {"label": "nylon constant", "elastic_modulus_gpa": 4.0,
         "shear_modulus_gpa": 2.7, "outer_diameter_mm": 6.0,
         "inner_diameter_mm": 4.0, "roc_mm": 20.0, "loc_mm": 27.0},
        {"label": "nylon characterized", "elastic_modulus_gpa": 4.0,
         "shear_modulus_gpa": 2.7, "outer_diameter_mm": 6.0,
         "inner_diameter_mm": 4.0, "variable": True, "loc_mm": None},
    ]
