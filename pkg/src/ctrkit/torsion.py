"""Straightening load and torsional windup of the constrained inner tube.

While the precurved region sits inside the straight delivery tube it is
held flat, storing bending strain energy.  Rotating the inner tube then
drags that straightening load across the interface, producing a friction
torque and an axial twist between the tube base and the load's resultant.
The twist profile phi(s) feeds the rotation compensation used by the
planner.

Units: lengths mm, moduli GPa at the interface (converted to N/mm^2
internally), energies N*mm, forces N, torques N*mm.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .shape import CenterlineShape

GPA_TO_MPA = 1000.0


@dataclass(frozen=True)
class TubeSpec:
    """Tube geometry: radii, overall length, and deflectable arc length (mm)."""
    r_od: float
    r_id: float
    length_total: float
    deflectable_arc: float

    def __post_init__(self):
        if not 0 < self.r_id < self.r_od:
            raise DomainError("need 0 < r_id < r_od", code="tube.radii_invalid")
        if self.deflectable_arc > self.length_total + 1e-9:
            raise DomainError("deflectable arc exceeds total length",
                              code="tube.deflectable_exceeds_length")

    @property
    def bending_moment_of_area(self) -> float:
        """Second area moment I of the annulus, mm^4."""
        return math.pi * (self.r_od ** 4 - self.r_id ** 4) / 4.0

    @property
    def polar_moment_of_area(self) -> float:
        """Polar second moment J of the annulus, mm^4."""
        return math.pi * (self.r_od ** 4 - self.r_id ** 4) / 2.0


@dataclass(frozen=True)
class MaterialModel:
    """Linear-elastic material constants.

    elastic_modulus / shear_modulus in GPa, strain_limit and friction_mu
    dimensionless.
    """
    elastic_modulus: float
    shear_modulus: float
    strain_limit: float
    friction_mu: float

    def __post_init__(self):
        if min(self.elastic_modulus, self.shear_modulus,
               self.strain_limit, self.friction_mu) <= 0:
            raise DomainError("material constants must be positive",
                              code="material.nonpositive")
        if self.strain_limit > 0.15:
            raise DomainError("strain limit above 0.15 is outside the model's "
                              "sanity bound", code="material.strain_limit_excessive")

    @property
    def e_mpa(self) -> float:
        return self.elastic_modulus * GPA_TO_MPA

    @property
    def g_mpa(self) -> float:
        return self.shear_modulus * GPA_TO_MPA


def fiber_strain(y, kappa, y_bar=0.0):
    """Axial fiber strain at offset y for curvature kappa.

    kappa*(y - y_bar)/(1 + y_bar*kappa); with the neutral axis at the
    section centre (y_bar = 0) this reduces to kappa*y.
    """
    return kappa * (np.asarray(y) - y_bar) / (1.0 + y_bar * kappa)


def strain_energy_density(strain, material: MaterialModel):
    """Energy per volume stored at a given strain, N/mm^2 (= mJ/mm^3).

    Linear-elastic stress sigma = E*strain, so the density is E*strain^2/2.
    Strains beyond the material's elastic limit trigger a warning (the
    linear model is extrapolating there).
    """
    strain = np.asarray(strain, dtype=float)
    if np.any(np.abs(strain) > material.strain_limit + 1e-12):
        warnings.warn(
            f"strain magnitude exceeds elastic limit {material.strain_limit}",
            stacklevel=2)
    return material.e_mpa * strain * strain / 2.0


def _annulus_section_integral(tube: TubeSpec, physical: bool) -> float:
    """Section factor S with dU/ds = E*kappa^2*S/2.

    physical=True integrates W over the annulus area (dA = r dr dphi),
    giving the bending moment of area I.  physical=False drops the polar
    Jacobian r (integrand dphi dr), giving pi*(r_od^3 - r_id^3)/3.
    """
    if physical:
        return tube.bending_moment_of_area
    return math.pi * (tube.r_od ** 3 - tube.r_id ** 3) / 3.0


def segment_energy_at_curvature(kappa: float, ds: float, tube: TubeSpec,
                                material: MaterialModel, physical: bool = True,
                                method: str = "closed") -> float:
    """Strain energy (N*mm) released by straightening an arc ds at curvature kappa.

    ``method="closed"`` evaluates the closed form ds*E*kappa^2*S/2;
    ``method="quadrature"`` integrates the strain-energy density over the
    cross-section numerically (same sectional model, independent route).
    """
    if ds < 0:
        raise DomainError("ds must be nonnegative")
    if method == "closed":
        S = _annulus_section_integral(tube, physical)
        return ds * material.e_mpa * kappa * kappa * S / 2.0
    if method != "quadrature":
        raise ValueError(f"unknown method {method!r}")
    # product rule on (r, phi): composite Gauss-Legendre radially, uniform
    # midpoint in phi (exact for the periodic sin^2 factor)
    gl_x, gl_w = np.polynomial.legendre.leggauss(5)
    n_panels, nphi = 8, 64
    edges = np.linspace(tube.r_id, tube.r_od, n_panels + 1)
    half = np.diff(edges) / 2.0
    r = ((edges[:-1] + edges[1:]) / 2.0)[:, None] + half[:, None] * gl_x[None, :]
    w_r = (half[:, None] * gl_w[None, :]).ravel()
    r = r.ravel()
    phi = (np.arange(nphi) + 0.5) * (2.0 * math.pi / nphi)
    dphi = 2.0 * math.pi / nphi
    y = r[:, None] * np.sin(phi)[None, :]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        w = strain_energy_density(fiber_strain(y, kappa), material)
    if physical:
        w = w * r[:, None]
    return float(ds * (w.sum(axis=1) * dphi * w_r).sum())


def segment_energy(shape: CenterlineShape, x1: float, x2: float,
                   tube: TubeSpec, material: MaterialModel,
                   physical: bool = True, method: str = "closed") -> float:
    """Straightening energy of the element between abscissae x1 and x2.

    Curvature is taken at x1 and the exact arc length of [x1, x2] is used,
    treating the element as a constant-curvature slice.
    """
    ds = shape.arc_length(x1, x2)
    kappa = float(shape.curvature(x1))
    return segment_energy_at_curvature(kappa, ds, tube, material,
                                       physical=physical, method=method)


def segment_energy_curvature_gradient(kappa: float, ds: float, tube: TubeSpec,
                                      material: MaterialModel,
                                      physical: bool = True) -> float:
    """Analytic d(energy)/d(kappa) = ds*E*kappa*S for the linear model."""
    S = _annulus_section_integral(tube, physical)
    return ds * material.e_mpa * kappa * S


def _constrained_grid(shape: CenterlineShape, s: float, n: int):
    """Midpoint grid over the precurved arc still inside the delivery tube.

    At insertion s the constrained arc has length deflectable_arc - s and
    spans [0, x_t] with arc_length(0, x_t) = arc_total - s, which is the
    same abscissa returned by solve_x_min(s).
    """
    x_t = shape.solve_x_min(s)
    if x_t <= 0.0:
        return None
    kappas, dss = shape.segment_grid(0.0, x_t, n, rule="midpoint")
    return kappas, dss


def straightening_force(shape: CenterlineShape, s: float, tube: TubeSpec,
                        material: MaterialModel, n: int = 100):
    """Resultant straightening load on the constrained arc at insertion s.

    Each grid element contributes dF = dU / deflectable_arc: its stored
    straightening energy spread over the full deflectable arc, which keeps
    the sum convergent under grid refinement and zero once the tube is
    fully extended.  Returns (force_N, resultant_arc_mm) where the second
    value locates the resultant from the proximal end of the curved region
    (force-weighted mean arc position).
    """
    if s < -1e-12 or s > tube.deflectable_arc + 1e-9:
        raise DomainError(f"insertion s={s} outside [0, {tube.deflectable_arc}]")
    grid = _constrained_grid(shape, min(max(s, 0.0), shape.arc_total), n)
    if grid is None:
        return 0.0, 0.0
    kappas, dss = grid
    ei = material.e_mpa * tube.bending_moment_of_area
    d_forces = ei * kappas * kappas * dss / (2.0 * tube.deflectable_arc)
    force = float(d_forces.sum())
    if force <= 0.0:
        return 0.0, 0.0
    arc_mid = np.cumsum(dss) - dss / 2.0
    resultant = float(np.dot(d_forces, arc_mid) / force)
    return force, resultant


def resistive_torque(force: float, tube: TubeSpec, material: MaterialModel) -> float:
    """Friction torque mu * F * r_od resisting inner-tube rotation, N*mm."""
    if force < 0:
        raise DomainError("force must be nonnegative")
    return material.friction_mu * force * tube.r_od


def torsional_deflection(shape: CenterlineShape, s: float, tube: TubeSpec,
                         material: MaterialModel, n: int = 100) -> float:
    """Axial twist (rad) between the tube base and the resultant load.

    phi = T * (L - L_resultant - s) / (J * G) with T the friction torque at
    insertion s; zero once the tube is fully extended.
    """
    force, resultant = straightening_force(shape, s, tube, material, n)
    if force == 0.0:
        return 0.0
    torque = resistive_torque(force, tube, material)
    lever = tube.length_total - resultant - s
    return torque * lever / (tube.polar_moment_of_area * material.g_mpa)


def deflection_profile(shape: CenterlineShape, s_values, tube: TubeSpec,
                       material: MaterialModel, n: int = 100) -> np.ndarray:
    """phi(s) sampled over an array of insertions."""
    return np.array([torsional_deflection(shape, float(s), tube, material, n)
                     for s in np.asarray(s_values, dtype=float)])
