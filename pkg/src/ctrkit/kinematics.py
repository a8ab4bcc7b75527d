"""Forward kinematics of the two-tube robot.

The device is a rigid straight delivery tube (translation d along z, inner
tube rotation theta about z) carrying a precurved inner tube whose exposed
arc s bends in a plane.  The exposed region is discretised into constant
curvature elements chained proximal to distal; a closed-form single-arc
transform is provided as the constant-curvature baseline.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DomainError
from .shape import CenterlineShape

DEFAULT_SEGMENTS = 100


@dataclass(frozen=True)
class JointConfig:
    """Joint-space configuration.

    d     : outer (delivery) tube translation along z, mm
    s     : inner tube insertion beyond the outer tube, mm of arc
    theta : inner tube axial rotation, rad
    """
    d: float
    s: float
    theta: float


@dataclass(frozen=True)
class JointLimits:
    d_min: float = 0.0
    d_max: float = 85.0

    def check_d(self, d: float) -> bool:
        return self.d_min - 1e-9 <= d <= self.d_max + 1e-9


def segment_transform(kappa: float, ds: float) -> np.ndarray:
    """Homogeneous transform of one constant-curvature element.

    Bend about the local x-axis through angle kappa*ds, translating in the
    local y-z plane.  A series branch covers |kappa*ds| < 1e-7 so the
    straight limit is exact.
    """
    if ds < 0:
        raise DomainError("segment length ds must be nonnegative")
    a = kappa * ds
    ca = math.cos(a)
    sa = math.sin(a)
    if abs(a) < 1e-7:
        ty = -kappa * ds * ds * 0.5
        tz = ds
    else:
        ty = (ca - 1.0) / kappa
        tz = sa / kappa
    return np.array([
        [1.0, 0.0, 0.0, 0.0],
        [0.0, ca, -sa, ty],
        [0.0, sa, ca, tz],
        [0.0, 0.0, 0.0, 1.0],
    ])


def constant_curvature_transform(kappa: float, s: float) -> np.ndarray:
    """Closed-form single-arc transform over arc length s (baseline model)."""
    if s < 0:
        raise DomainError("arc length s must be nonnegative")
    return segment_transform(kappa, s)


def base_transform(d: float, theta: float) -> np.ndarray:
    """Rotation theta about z composed with translation d along z."""
    ct = math.cos(theta)
    st = math.sin(theta)
    return np.array([
        [ct, -st, 0.0, 0.0],
        [st, ct, 0.0, 0.0],
        [0.0, 0.0, 1.0, d],
        [0.0, 0.0, 0.0, 1.0],
    ])


def shape_transform(shape: CenterlineShape, s: float, n: int = DEFAULT_SEGMENTS,
                    rule: str = "midpoint") -> np.ndarray:
    """Chained transform of the exposed arc s of a characterized shape.

    The exposed region [x_min, x_max] is split into n segments; each
    contributes a constant-curvature element with its exact arc length and
    the curvature sampled per ``rule`` ("midpoint" converges at O(1/n^2),
    "left" at O(1/n)).
    """
    if s < -1e-12:
        raise DomainError("insertion s must be nonnegative")
    if s <= 0.0:
        return np.eye(4)
    x_min = shape.solve_x_min(s)
    kappas, dss = shape.segment_grid(x_min, shape.x_max_total, n, rule)
    T, _ = _kernels.chain_transforms(kappas, dss)
    return T


@dataclass(frozen=True)
class FkResult:
    tip_transform: np.ndarray   # 4x4, robot frame
    backbone: np.ndarray        # (n+1, 3) points along the exposed arc, robot frame

    @property
    def tip_position(self) -> np.ndarray:
        return self.tip_transform[:3, 3]


def forward_kinematics(shape: CenterlineShape, q: JointConfig,
                       n: int = DEFAULT_SEGMENTS, rule: str = "midpoint",
                       limits: JointLimits | None = None) -> FkResult:
    """Tip pose and backbone for a joint configuration.

    The backbone holds the discretisation nodes of the exposed arc mapped
    into the robot frame (the straight delivery section is not included).
    """
    if limits is not None and not limits.check_d(q.d):
        raise DomainError(f"d={q.d} outside travel [{limits.d_min}, {limits.d_max}]")
    if q.s < -1e-12 or q.s > shape.arc_total + 1e-9:
        raise DomainError(f"s={q.s} outside [0, {shape.arc_total}]")
    B = base_transform(q.d, q.theta)
    if q.s <= 0.0:
        return FkResult(B, B[:3, 3][None, :].copy())
    x_min = shape.solve_x_min(q.s)
    kappas, dss = shape.segment_grid(x_min, shape.x_max_total, n, rule)
    T, pts = _kernels.chain_transforms(kappas, dss)
    backbone = pts @ B[:3, :3].T + B[:3, 3]
    return FkResult(B @ T, backbone)


def planar_tip(shape: CenterlineShape, s: float, n: int = DEFAULT_SEGMENTS) -> tuple:
    """(y_t, z_t) of the exposed-arc tip in the bending plane (theta = d = 0)."""
    T = shape_transform(shape, s, n)
    return float(T[1, 3]), float(T[2, 3])


def is_rigid_transform(T: np.ndarray, tol: float = 1e-9) -> bool:
    """Orthonormal rotation block, det +1, clean bottom row."""
    T = np.asarray(T)
    if T.shape != (4, 4):
        return False
    R = T[:3, :3]
    if np.abs(R.T @ R - np.eye(3)).max() > tol:
        return False
    if abs(np.linalg.det(R) - 1.0) > tol:
        return False
    return bool(np.abs(T[3] - np.array([0.0, 0.0, 0.0, 1.0])).max() <= tol)


def tip_rmse(model_tips: np.ndarray, reference_tips: np.ndarray) -> float:
    """RMS distance between paired tip positions."""
    model_tips = np.asarray(model_tips, dtype=float)
    reference_tips = np.asarray(reference_tips, dtype=float)
    d = np.linalg.norm(model_tips - reference_tips, axis=-1)
    return float(np.sqrt(np.mean(d * d)))


def shape_rmse(reference_points: np.ndarray, backbone: np.ndarray,
               station_mm: float = 1.0) -> float:
    """Average minimum distance from reference stations to a model polyline.

    The reference curve is resampled at ``station_mm`` increments of its
    own arc length; for each station the minimum distance to the backbone
    polyline is taken, and the distances are averaged.
    """
    ref = np.asarray(reference_points, dtype=float)
    seg = np.diff(ref, axis=0)
    seglen = np.linalg.norm(seg, axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seglen)])
    total = cum[-1]
    if total <= 0:
        stations = ref[:1]
    else:
        s_vals = np.arange(0.0, total + 1e-9, station_mm)
        stations = np.empty((s_vals.size, ref.shape[1]))
        for i, sv in enumerate(s_vals):
            j = min(int(np.searchsorted(cum, sv, side="right")) - 1, len(seglen) - 1)
            t = (sv - cum[j]) / seglen[j] if seglen[j] > 0 else 0.0
            stations[i] = ref[j] + t * seg[j]
    dmin = np.empty(stations.shape[0])
    for i, p in enumerate(stations):
        dmin[i] = _point_polyline_distance(p, backbone)
    return float(np.mean(dmin))


def _point_polyline_distance(p: np.ndarray, poly: np.ndarray) -> float:
    poly = np.asarray(poly, dtype=float)
    if poly.shape[0] == 1:
        return float(np.linalg.norm(p - poly[0]))
    a = poly[:-1]
    b = poly[1:]
    ab = b - a
    denom = np.einsum("ij,ij->i", ab, ab)
    t = np.einsum("ij,ij->i", p - a, ab) / np.where(denom > 0, denom, 1.0)
    t = np.clip(t, 0.0, 1.0)
    proj = a + t[:, None] * ab
    return float(np.linalg.norm(proj - p, axis=1).min())
