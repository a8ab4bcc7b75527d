"""Inverse kinematics, rotation compensation, and move planning.

The tube is a planar curve swept about z, so a Cartesian target decomposes
into: rotate to the target's azimuth plane, root-find the insertion s whose
planar radial reach matches the target radius, and set the translation d
from the axial residue.  Commanded rotations are corrected for the
torsional windup phi(s) before execution, and every move is sequenced
rotate-first then translate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import torsion
from .errors import DomainError, UnreachableTargetError
from .kinematics import (DEFAULT_SEGMENTS, FkResult, JointConfig, JointLimits,
                         forward_kinematics, planar_tip)
from .shape import CenterlineShape

_AXIS_TOL = 1e-9
_REACH_GRID = 256


@dataclass(frozen=True)
class MovePlan:
    """Compensated joint commands plus the ordered actuation sequence."""
    theta_command: float
    s_command: float
    d_command: float
    sequence: tuple = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "theta_command_rad": self.theta_command,
            "s_command_mm": self.s_command,
            "d_command_mm": self.d_command,
            "sequence": [dict(a) for a in self.sequence],
        }


def compensate(theta_nom: float, s_nom: float, theta_curr: float,
               s_curr: float, phi) -> float:
    """Torsion-compensated rotation command.

    Advancing the tube (s_curr < s_nom) compensates with the windup at the
    new insertion; retracting (or holding) compensates at the current one,
    because retraction itself applies no torque.  ``phi`` maps insertion to
    windup (rad).  No rotation means no compensation (sign(0) = 0).
    """
    direction = _sign(theta_nom - theta_curr)
    if direction == 0.0:
        return theta_nom
    if s_curr < s_nom:
        return theta_nom + direction * float(phi(s_nom))
    return theta_nom + direction * float(phi(s_curr))


def _sign(v: float) -> float:
    if v > 0:
        return 1.0
    if v < 0:
        return -1.0
    return 0.0


def apply_torsion_plant(theta_command: float, s_command: float,
                        theta_curr: float, s_curr: float, phi) -> float:
    """Rotation actually reached by a tube that winds up under friction.

    Mirrors the compensation branch structure: rotating while (or before)
    advancing lags by the windup at the new insertion; rotating before a
    retraction lags by the windup at the current one.  Compensated commands
    therefore land on their nominal angle.
    """
    direction = _sign(theta_command - theta_curr)
    if direction == 0.0:
        return theta_command
    if s_curr < s_command:
        return theta_command - direction * float(phi(s_command))
    return theta_command - direction * float(phi(s_curr))


class Planner:
    """Read-only IK planner for one characterized tube.

    Caches the radial-reach table and exposes solve/plan operations; safe
    to share across threads once built.
    """

    def __init__(self, shape: CenterlineShape, tube: torsion.TubeSpec | None = None,
                 material: torsion.MaterialModel | None = None,
                 limits: JointLimits | None = None, n: int = DEFAULT_SEGMENTS):
        self.shape = shape
        self.tube = tube
        self.material = material
        self.limits = limits or JointLimits()
        self.n = n
        s_grid = np.linspace(0.0, shape.arc_total, _REACH_GRID)
        radial = np.empty(_REACH_GRID)
        axial = np.empty(_REACH_GRID)
        for i, s in enumerate(s_grid):
            y_t, z_t = planar_tip(shape, float(s), n)
            radial[i] = abs(y_t)
            axial[i] = z_t
        self._s_grid = s_grid
        self._radial = radial
        self._axial = axial
        self.radial_max = float(radial.max())
        # strictly monotone reach lets a single bracketed root find do the
        # job; otherwise fall back to grid scan + local bisection
        self.reach_monotone = bool(np.all(np.diff(radial) > -1e-12))
        # increasing prefix of the reach table up to its peak; every radius
        # up to radial_max has its first crossing here, which is the branch
        # the solver picks
        i_peak = int(np.argmax(radial))
        self._radial_prefix = np.maximum.accumulate(radial[:i_peak + 1])
        self._axial_prefix = axial[:i_peak + 1]

    # --- torsion context ---------------------------------------------------
    def phi(self, s: float) -> float:
        """Torsional windup at insertion s (0 when no tube model is set)."""
        if self.tube is None or self.material is None:
            return 0.0
        return torsion.torsional_deflection(self.shape, s, self.tube,
                                            self.material, self.n)

    # --- inverse kinematics --------------------------------------------------
    def solve(self, target) -> JointConfig:
        """Nominal (uncompensated) joint configuration reaching ``target``."""
        x, y, z = (float(v) for v in np.asarray(target, dtype=float))
        r = math.hypot(x, y)
        if r <= _AXIS_TOL:
            theta = 0.0     # on-axis tie broken to zero rotation
            s = 0.0
            z_t = 0.0
        else:
            if r > self.radial_max + 1e-9:
                raise UnreachableTargetError(
                    f"radial distance {r:.3f} mm exceeds the planar sweep "
                    f"{self.radial_max:.3f} mm", radial_requested=r,
                    radial_max=self.radial_max)
            theta = math.atan2(x, -y)
            s = self._solve_insertion(r)
            _, z_t = planar_tip(self.shape, s, self.n)
        d = z - z_t
        if not self.limits.check_d(d):
            raise UnreachableTargetError(
                f"target needs d={d:.3f} mm outside travel "
                f"[{self.limits.d_min}, {self.limits.d_max}]",
                d_required=d, d_limits=(self.limits.d_min, self.limits.d_max))
        return JointConfig(d=d, s=s, theta=theta)

    def reachable(self, target) -> bool:
        try:
            self.solve(target)
            return True
        except (UnreachableTargetError, DomainError):
            return False

    def reachable_mask(self, points) -> np.ndarray:
        """Vectorised approximate reachability test for many points.

        Uses the cached reach table (radial -> insertion -> axial) instead
        of per-point root finds; accurate to the table resolution, which is
        plenty for workspace filtering.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        r = np.hypot(pts[:, 0], pts[:, 1])
        z_t = np.interp(r, self._radial_prefix, self._axial_prefix)
        d = pts[:, 2] - z_t
        return (r <= self.radial_max + 1e-9) & \
            (d >= self.limits.d_min - 1e-9) & (d <= self.limits.d_max + 1e-9)

    def plan(self, current: JointConfig, target,
             compensated: bool = True) -> MovePlan:
        """Compensated, rotate-then-translate move plan toward ``target``."""
        nominal = self.solve(target)
        if compensated:
            theta_cmd = compensate(nominal.theta, nominal.s,
                                   current.theta, current.s, self.phi)
        else:
            theta_cmd = nominal.theta
        sequence = (
            {"action": "rotate", "theta_rad": theta_cmd},
            {"action": "translate", "s_mm": nominal.s, "d_mm": nominal.d},
        )
        return MovePlan(theta_command=theta_cmd, s_command=nominal.s,
                        d_command=nominal.d, sequence=sequence)

    def forward(self, q: JointConfig) -> FkResult:
        return forward_kinematics(self.shape, q, self.n, limits=self.limits)

    # --- internals -----------------------------------------------------------
    def _radial_at(self, s: float) -> float:
        y_t, _ = planar_tip(self.shape, s, self.n)
        return abs(y_t)

    def _solve_insertion(self, r: float) -> float:
        g = self._s_grid
        rad = self._radial
        if self.reach_monotone:
            lo_i = int(np.searchsorted(rad, r) - 1)
            lo_i = max(0, min(lo_i, len(g) - 2))
            lo, hi = g[lo_i], g[min(lo_i + 2, len(g) - 1)]
        else:
            # first bracketing interval in the scan (smallest insertion)
            crossings = np.nonzero((rad[:-1] - r) * (rad[1:] - r) <= 0)[0]
            if crossings.size == 0:
                raise UnreachableTargetError(
                    f"no insertion reaches radial distance {r:.3f} mm",
                    radial_requested=r, radial_max=self.radial_max)
            lo, hi = g[crossings[0]], g[crossings[0] + 1]
        f_lo = self._radial_at(lo) - r
        if abs(f_lo) < 1e-13:
            return float(lo)
        f_hi = self._radial_at(hi) - r
        if f_lo * f_hi > 0:
            # brackets from the table can be off by a knot at the extremes
            lo, hi = 0.0, self.shape.arc_total
            f_lo = -r
            f_hi = self.radial_max - r
        return float(brentq(lambda s: self._radial_at(s) - r, lo, hi,
                            xtol=1e-12, rtol=8.9e-16))


_planner_cache: dict = {}


def _planner_for(shape: CenterlineShape, tube, material,
                 limits: JointLimits | None, n: int) -> Planner:
    key = (id(shape), id(tube), id(material), limits, n)
    planner = _planner_cache.get(key)
    if planner is None or planner.shape is not shape:
        planner = Planner(shape, tube, material, limits=limits, n=n)
        _planner_cache[key] = planner
    return planner


def solve_ik(target, shape: CenterlineShape, limits: JointLimits | None = None,
             n: int = DEFAULT_SEGMENTS) -> JointConfig:
    """Nominal joint configuration for a Cartesian target in the robot frame."""
    return _planner_for(shape, None, None, limits, n).solve(target)


def plan_move(current: JointConfig, target, shape: CenterlineShape,
              tube: torsion.TubeSpec | None = None,
              material: torsion.MaterialModel | None = None,
              limits: JointLimits | None = None,
              n: int = DEFAULT_SEGMENTS) -> MovePlan:
    """Plan a compensated move from ``current`` to ``target``."""
    planner = _planner_for(shape, tube, material, limits, n)
    return planner.plan(current, target)
