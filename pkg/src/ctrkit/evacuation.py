"""Voxel-phantom clot evacuation: registration, targeting, aspiration.

The clot is an occupancy grid with physical spacing.  A run registers the
image frame to the robot frame, repeatedly picks a target (far end of the
clot's long axis first, then the largest residual cluster), plans a
compensated move, and aspirates occupied voxels near the tip under a
volume-rate cap, until the residual volume passes the stop threshold or
nothing reachable remains.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import DomainError, RegistrationError, UnreachableTargetError
from .ik import Planner, apply_torsion_plant
from .kinematics import JointConfig

MIN_ASPIRATION_RADIUS = 2.0   # mm, the evacuation lumen's inner radius
RESIDUAL_SUCCESS_ML = 15.0


# --------------------------------------------------------------- registration
@dataclass(frozen=True)
class RegistrationResult:
    """Rigid image-to-robot transform with its fiducial residual."""
    transform: np.ndarray          # 4x4
    rms_fiducial_error: float

    def apply(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = pts @ self.transform[:3, :3].T + self.transform[:3, 3]
        return out[0] if np.asarray(points).ndim == 1 else out


def identity_registration() -> RegistrationResult:
    return RegistrationResult(np.eye(4), 0.0)


def register(fiducials_image, fiducials_robot) -> RegistrationResult:
    """Least-squares rigid fit mapping image-frame points onto robot-frame.

    Standard SVD (Kabsch) solution over >= 3 non-collinear matched pairs;
    the RMS pair distance after alignment is always reported.
    """
    P = np.asarray(fiducials_image, dtype=float)
    Q = np.asarray(fiducials_robot, dtype=float)
    if P.ndim != 2 or P.shape[1] != 3 or Q.shape != P.shape:
        raise RegistrationError("need matched (N, 3) fiducial arrays",
                                code="registration.mismatched")
    if P.shape[0] < 3:
        raise RegistrationError("need at least 3 fiducial pairs",
                                code="registration.too_few")
    pc = P.mean(axis=0)
    qc = Q.mean(axis=0)
    Pc = P - pc
    Qc = Q - qc
    sv = np.linalg.svd(Pc, compute_uv=False)
    if sv[1] < 1e-9 * max(sv[0], 1.0):
        raise RegistrationError("fiducials are collinear; rotation is "
                                "underdetermined", code="registration.degenerate")
    H = Pc.T @ Qc
    U, _, Vt = np.linalg.svd(H)
    D = np.diag([1.0, 1.0, np.sign(np.linalg.det(Vt.T @ U.T))])
    R = Vt.T @ D @ U.T
    t = qc - R @ pc
    T = np.eye(4)
    T[:3, :3] = R
    T[:3, 3] = t
    resid = (P @ R.T + t) - Q
    rms = float(np.sqrt(np.mean(np.sum(resid * resid, axis=1))))
    return RegistrationResult(T, rms)


# -------------------------------------------------------------------- phantom
class ClotPhantom:
    """Boolean occupancy grid with physical spacing and origin (mm)."""

    def __init__(self, occupancy, spacing=(1.0, 1.0, 1.0), origin=(0.0, 0.0, 0.0)):
        occ = np.asarray(occupancy, dtype=bool)
        if occ.ndim != 3:
            raise DomainError("occupancy must be a 3-D grid")
        spacing = np.broadcast_to(np.asarray(spacing, dtype=float), (3,)).copy()
        if np.any(spacing <= 0):
            raise DomainError("voxel spacing must be positive",
                              code="phantom.spacing_nonpositive")
        self.occupancy = occ
        self.spacing = spacing
        self.origin = np.asarray(origin, dtype=float).copy()

    @property
    def voxel_volume_mm3(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def volume_ml(self) -> float:
        return float(self.occupancy.sum() * self.voxel_volume_mm3 / 1000.0)

    def copy(self) -> "ClotPhantom":
        return ClotPhantom(self.occupancy.copy(), self.spacing, self.origin)

    def occupied_centers(self) -> np.ndarray:
        """(N, 3) voxel-centre coordinates in mm, index order."""
        idx = np.argwhere(self.occupancy)
        return self.origin + (idx + 0.5) * self.spacing

    # --- I/O: JSON header + raw occupancy bytes -----------------------------
    def save(self, header_path) -> None:
        header_path = Path(header_path)
        data_path = header_path.with_suffix(".raw")
        header = {
            "dims": list(self.occupancy.shape),
            "spacing_mm": [float(v) for v in self.spacing],
            "origin_mm": [float(v) for v in self.origin],
            "dtype": "uint8",
            "order": "C",
            "data_file": data_path.name,
        }
        with open(header_path, "w") as fh:
            json.dump(header, fh, indent=2, sort_keys=True)
            fh.write("\n")
        self.occupancy.astype(np.uint8).tofile(data_path)

    @classmethod
    def load(cls, header_path) -> "ClotPhantom":
        header_path = Path(header_path)
        with open(header_path) as fh:
            header = json.load(fh)
        data_path = header_path.parent / header["data_file"]
        occ = np.fromfile(data_path, dtype=np.uint8).reshape(header["dims"])
        return cls(occ.astype(bool), header["spacing_mm"], header["origin_mm"])

    @classmethod
    def from_pgm_stack(cls, paths, threshold: int = 128,
                       spacing=(1.0, 1.0, 1.0), origin=(0.0, 0.0, 0.0)):
        """Stack thresholded grayscale PGM slices (P2 or P5) along z."""
        slices = [_read_pgm(p) >= threshold for p in paths]
        shapes = {s.shape for s in slices}
        if len(shapes) != 1:
            raise DomainError("PGM slices differ in size")
        occ = np.stack(slices, axis=-1)
        return cls(occ, spacing, origin)

    @classmethod
    def ellipsoid(cls, volume_ml: float = 38.36, semi_axes=(14.0, 14.0, None),
                  center=(0.0, 0.0, 55.0), spacing: float = 1.0):
        """Axis-aligned ellipsoid sized to an exact voxel count.

        Two semi-axes are fixed; a ``None`` entry is solved from the target
        volume.  The occupancy keeps exactly round(volume) voxels: voxel
        centres ranked by normalised ellipsoid radius.
        """
        sa = list(semi_axes)
        target_mm3 = volume_ml * 1000.0
        free = [i for i, v in enumerate(sa) if v is None]
        if len(free) > 1:
            raise DomainError("at most one semi-axis may be None")
        if free:
            fixed = [sa[i] for i in range(3) if i not in free]
            sa[free[0]] = target_mm3 * 3.0 / (4.0 * math.pi * fixed[0] * fixed[1])
        a, b, c = (float(v) for v in sa)
        center = np.asarray(center, dtype=float)
        h = float(spacing)
        n_target = int(round(target_mm3 / h ** 3))
        nx = int(math.ceil((a + h) / h))
        ny = int(math.ceil((b + h) / h))
        nz = int(math.ceil((c + h) / h))
        dims = (2 * nx, 2 * ny, 2 * nz)
        origin = center - np.array([nx, ny, nz]) * h
        ii = (np.arange(dims[0]) + 0.5) * h + origin[0] - center[0]
        jj = (np.arange(dims[1]) + 0.5) * h + origin[1] - center[1]
        kk = (np.arange(dims[2]) + 0.5) * h + origin[2] - center[2]
        norm = ((ii / a) ** 2)[:, None, None] + ((jj / b) ** 2)[None, :, None] \
            + ((kk / c) ** 2)[None, None, :]
        flat = norm.ravel()
        order = np.argsort(flat, kind="stable")[:n_target]
        occ = np.zeros(flat.size, dtype=bool)
        occ[order] = True
        return cls(occ.reshape(dims), (h, h, h), origin)


def _read_pgm(path) -> np.ndarray:
    """Minimal P2/P5 PGM reader (8- or 16-bit)."""
    with open(path, "rb") as fh:
        data = fh.read()
    tokens = []
    i = 0
    while len(tokens) < 4:
        if data[i:i + 1] == b"#":
            i = data.index(b"\n", i) + 1
            continue
        j = i
        while j < len(data) and not data[j:j + 1].isspace():
            j += 1
        if j > i:
            tokens.append(data[i:j])
        i = j + 1
    magic = tokens[0].decode()
    w, hgt, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    if magic == "P5":
        dtype = np.uint16 if maxval > 255 else np.uint8
        img = np.frombuffer(data[i:], dtype=dtype, count=w * hgt)
        if maxval > 255:
            img = img.astype(np.uint16).byteswap()  # PGM is big-endian
    elif magic == "P2":
        img = np.array(data[i:].split()[:w * hgt], dtype=int)
    else:
        raise DomainError(f"{path}: not a PGM file")
    return img.reshape(hgt, w)


# ------------------------------------------------------------------ aspirate
def aspirate(phantom: ClotPhantom, tip_pose, radius: float, dwell: float,
             rate_ml_per_s: float) -> ClotPhantom:
    """Remove occupied voxels within ``radius`` of the tip, nearest first.

    Removal is capped at rate*dwell of volume.  The input phantom is left
    untouched; a new one is returned.  Aspirating empty space is a no-op.
    """
    if radius < MIN_ASPIRATION_RADIUS:
        raise DomainError(
            f"aspiration radius {radius} mm below the lumen radius "
            f"{MIN_ASPIRATION_RADIUS} mm")
    tip = np.asarray(tip_pose, dtype=float)
    if tip.shape == (4, 4):
        tip = tip[:3, 3]
    centers = phantom.occupied_centers()
    if centers.size == 0:
        return phantom.copy()
    d2 = np.sum((centers - tip) ** 2, axis=1)
    inside = np.nonzero(d2 <= radius * radius)[0]
    if inside.size == 0:
        return phantom.copy()
    cap_mm3 = rate_ml_per_s * dwell * 1000.0
    max_voxels = int(cap_mm3 / phantom.voxel_volume_mm3)
    if max_voxels <= 0:
        return phantom.copy()
    if inside.size > max_voxels:
        # nearest first; stable sort keeps removal deterministic on ties
        order = np.argsort(d2[inside], kind="stable")
        inside = inside[order[:max_voxels]]
    idx = np.argwhere(phantom.occupancy)[inside]
    occ = phantom.occupancy.copy()
    occ[idx[:, 0], idx[:, 1], idx[:, 2]] = False
    return ClotPhantom(occ, phantom.spacing, phantom.origin)


# ------------------------------------------------------------- target policy
@dataclass(frozen=True)
class TargetPolicy:
    """Knobs of the greedy targeting policy."""
    slab_fraction: float = 0.08     # long-axis slab used for the first target
    max_targets: int = 12           # candidates returned per planning pass


def plan_targets(phantom: ClotPhantom, planner: Planner,
                 registration: RegistrationResult | None = None,
                 policy: TargetPolicy | None = None) -> list:
    """Ordered robot-frame aspiration targets for the current residual clot.

    The first candidate is the centroid of the slab at the far end of the
    clot's principal axis (far from the robot base); the rest are the
    largest residual clusters, biggest first.  Candidates that are not
    directly reachable are snapped to the nearest reachable occupied voxel;
    an empty list means nothing reachable remains.
    """
    policy = policy or TargetPolicy()
    reg = registration or identity_registration()
    centers_img = phantom.occupied_centers()
    if centers_img.shape[0] == 0:
        return []
    centers = reg.apply(centers_img)
    candidates = []
    # principal axis via PCA; pick the end farther from the robot base
    mean = centers.mean(axis=0)
    dev = centers - mean
    if centers.shape[0] >= 2:
        _, sv, Vt = np.linalg.svd(dev, full_matrices=False)
        axis = Vt[0]
        # a near-isotropic clot has no meaningful long axis; fall back to
        # the direction away from the robot base
        if sv.size > 1 and sv[1] > 0.97 * sv[0] and np.linalg.norm(mean) > 1e-9:
            axis = mean / np.linalg.norm(mean)
    else:
        axis = np.array([0.0, 0.0, 1.0])
    proj = dev @ axis
    far_sign = 1.0 if np.linalg.norm(mean + proj.max() * axis) >= \
        np.linalg.norm(mean + proj.min() * axis) else -1.0
    p = proj * far_sign
    lo = p.max() - policy.slab_fraction * max(p.max() - p.min(), 1e-9)
    slab = centers[p >= lo]
    candidates.append(slab.mean(axis=0))
    # residual clusters, largest first
    labels, n_lab = ndimage.label(phantom.occupancy)
    if n_lab > 1:
        sizes = ndimage.sum_labels(np.ones_like(labels), labels,
                                   index=np.arange(1, n_lab + 1))
        for lab in (np.argsort(sizes, kind="stable")[::-1] + 1)[:policy.max_targets]:
            sel = labels[phantom.occupancy] == lab
            candidates.append(centers[sel].mean(axis=0))
    else:
        candidates.append(centers.mean(axis=0))
    targets = []
    reachable_mask = None
    for cand in candidates[:policy.max_targets]:
        if planner.reachable(cand):
            targets.append(np.asarray(cand, dtype=float))
            continue
        if reachable_mask is None:
            reachable_mask = planner.reachable_mask(centers)
            if not reachable_mask.any():
                return []
        near = centers[reachable_mask]
        snapped = near[np.argmin(np.sum((near - cand) ** 2, axis=1))]
        targets.append(np.asarray(snapped, dtype=float))
    # drop duplicates while preserving order
    out = []
    for t in targets:
        if not any(np.linalg.norm(t - u) < 1e-9 for u in out):
            out.append(t)
    return out


# ------------------------------------------------------------------ full run
@dataclass
class EvacuationReport:
    initial_ml: float
    final_ml: float
    n_targets: int
    elapsed_sim_time_s: float
    per_target: list = field(default_factory=list)
    stalled: bool = False
    tip_history: list = field(default_factory=list)
    final_phantom: "ClotPhantom | None" = None

    @property
    def success(self) -> bool:
        return self.final_ml < RESIDUAL_SUCCESS_ML

    @property
    def removed_ml(self) -> float:
        return self.initial_ml - self.final_ml

    def to_dict(self) -> dict:
        return {
            "initial_ml": self.initial_ml,
            "final_ml": self.final_ml,
            "removed_ml": self.removed_ml,
            "n_targets": self.n_targets,
            "elapsed_sim_time_s": self.elapsed_sim_time_s,
            "success": self.success,
            "stalled": self.stalled,
            "per_target": self.per_target,
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def log_to_csv(self, path) -> None:
        cols = ["index", "target_x", "target_y", "target_z", "d_mm", "s_mm",
                "theta_rad", "removed_ml", "residual_ml", "t_s"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(cols)
            for row in self.per_target:
                w.writerow([f"{row[c]:.9g}" if isinstance(row[c], float)
                            else row[c] for c in cols])


def run_evacuation(phantom: ClotPhantom, planner: Planner,
                   registration: RegistrationResult | None = None,
                   policy: TargetPolicy | None = None,
                   stop_ml: float = RESIDUAL_SUCCESS_ML,
                   aspiration_radius: float = 5.0, dwell_s: float = 1.0,
                   rate_ml_per_min: float = 6.0, max_steps: int = 2000,
                   move_time_model=None) -> EvacuationReport:
    """Iterative evacuate-until-done loop over the phantom.

    Each pass replans on the residual clot, executes the compensated move
    through forward kinematics, and aspirates at the tip.  The loop exits
    when the residual drops below ``stop_ml`` (set 0 to run until nothing
    reachable remains), or stalls after three consecutive targets with no
    volume change.
    """
    reg = registration or identity_registration()
    rate_ml_s = rate_ml_per_min / 60.0
    current = phantom.copy()
    initial_ml = current.volume_ml
    q = JointConfig(0.0, 0.0, 0.0)
    elapsed = 0.0
    log = []
    tips = []
    stalled = False
    no_change = 0
    step = 0
    while step < max_steps:
        if current.volume_ml < stop_ml or current.volume_ml <= 0.0:
            break
        targets = plan_targets(current, planner, reg, policy)
        if not targets:
            stalled = True
            break
        target = targets[0]
        try:
            plan = planner.plan(q, target)
        except UnreachableTargetError:
            stalled = True
            break
        q_new = JointConfig(d=plan.d_command, s=plan.s_command,
                            theta=plan.theta_command)
        # the physical tube winds up under friction; the compensated command
        # cancels it so the tip lands at the nominal azimuth
        theta_exec = apply_torsion_plant(plan.theta_command, plan.s_command,
                                         q.theta, q.s, planner.phi)
        tip = planner.forward(
            JointConfig(q_new.d, q_new.s, theta_exec)).tip_position
        if move_time_model is not None:
            elapsed += float(move_time_model(q, q_new))
        else:
            elapsed += _default_move_time(q, q_new)
        # dwell at this position while the aspiration stays productive
        before = current.volume_ml
        min_yield_ml = rate_ml_s * dwell_s * 0.1
        while True:
            vol0 = current.volume_ml
            current = aspirate(current, tip, aspiration_radius, dwell_s, rate_ml_s)
            elapsed += dwell_s
            if vol0 - current.volume_ml < max(min_yield_ml, 1e-12) or \
                    current.volume_ml < stop_ml or current.volume_ml <= 0.0:
                break
        removed = before - current.volume_ml
        no_change = no_change + 1 if removed <= 1e-12 else 0
        tips.append([float(v) for v in tip])
        log.append({
            "index": step, "target_x": float(target[0]),
            "target_y": float(target[1]), "target_z": float(target[2]),
            "d_mm": q_new.d, "s_mm": q_new.s, "theta_rad": q_new.theta,
            "removed_ml": removed, "residual_ml": current.volume_ml,
            "t_s": elapsed,
        })
        q = q_new
        step += 1
        if no_change >= 3:
            stalled = True
            break
    return EvacuationReport(
        initial_ml=initial_ml, final_ml=current.volume_ml, n_targets=len(log),
        elapsed_sim_time_s=elapsed, per_target=log, stalled=stalled,
        tip_history=tips, final_phantom=current)


def _default_move_time(q0: JointConfig, q1: JointConfig) -> float:
    """Coarse move duration: 30 deg/s rotation, 5 mm/s translation."""
    rot = abs(q1.theta - q0.theta) / math.radians(30.0)
    trans = max(abs(q1.d - q0.d), abs(q1.s - q0.s)) / 5.0
    return max(rot, trans, 0.5)
