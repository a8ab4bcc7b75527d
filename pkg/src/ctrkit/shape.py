"""Planar centerline representation of the precurved inner tube.

The deflectable region is described as a graph y = f(x) with x measured
from the proximal end of the curved region (at the delivery tube's tip)
toward the distal tip.  Positive curvature bends the tube toward -y.
Shapes answer curvature, arc-length, and arc-inversion queries; everything
downstream (kinematics, torsion, design) works through this interface.
"""
from __future__ import annotations

import csv
import json
import math

import numpy as np
from scipy.integrate import quad

from .errors import DomainError, FitError, NumericalError

# fixed 5-point Gauss-Legendre rule used for per-panel arc quadrature;
# panels are short enough that this is exact to machine precision for
# the polynomial integrands we see
_GL_X, _GL_W = np.polynomial.legendre.leggauss(5)
_ARC_PANELS = 1024
_DOMAIN_TOL = 1e-9


class CenterlineShape:
    """Base class: a planar curve y = f(x) on [0, x_max_total].

    Subclasses implement ``f``, ``df`` and ``ddf`` (vectorised).  Instances
    are immutable after construction; the cached arc tables make repeated
    arc-length and arc-inversion queries cheap.
    """

    def __init__(self, x_max_total: float):
        if not x_max_total > 0:
            raise DomainError("x_max_total must be positive", code="shape.x_max_nonpositive")
        self._x_max = float(x_max_total)
        self._arc_prefix = None
        self._arc_total = None

    # subclass surface -----------------------------------------------------
    def f(self, x):
        raise NotImplementedError

    def df(self, x):
        raise NotImplementedError

    def ddf(self, x):
        raise NotImplementedError

    # properties -----------------------------------------------------------
    @property
    def x_max_total(self) -> float:
        return self._x_max

    @property
    def arc_total(self) -> float:
        if self._arc_total is None:
            self._build_arc_tables()
        return self._arc_total

    # core queries ----------------------------------------------------------
    def curvature(self, x):
        """Signed curvature -f''/(1 + f'^2)^(3/2); positive bends to -y."""
        x = self._check_x(x)
        d1 = self.df(x)
        d2 = self.ddf(x)
        return -d2 / (1.0 + d1 * d1) ** 1.5

    def arc_integrand(self, x):
        d1 = self.df(x)
        return np.sqrt(1.0 + d1 * d1)

    def arc_length(self, x1: float, x2: float) -> float:
        """Arc length of the graph between abscissae x1 <= x2."""
        x1 = float(self._check_x(x1))
        x2 = float(self._check_x(x2))
        if x2 < x1:
            raise DomainError(f"reversed bounds: x1={x1} > x2={x2}")
        return self._arc_from_origin(x2) - self._arc_from_origin(x1)

    def solve_x_min(self, s: float) -> float:
        """Abscissa x_min with arc_length(x_min, x_max_total) == s.

        Inverts the cumulative arc length for a given exposed arc ``s``.
        The residual |arc_length(x_min, x_max_total) - s| is below 1e-9 mm.
        """
        s = float(s)
        arc = self.arc_total
        if s < -_DOMAIN_TOL or s > arc + _DOMAIN_TOL:
            raise DomainError(f"exposed arc s={s} outside [0, {arc}]")
        if s <= 0.0:
            return self._x_max
        if s >= arc:
            return 0.0
        return self._invert_arc(arc - s)

    def segment_grid(self, x_lo: float, x_hi: float, n: int, rule: str = "midpoint"):
        """Uniform n-segment grid on [x_lo, x_hi] with per-segment data.

        Returns (kappas, dss): curvature per segment (at the midpoint or the
        left endpoint depending on ``rule``) and exact per-segment arc
        lengths from a 5-point Gauss-Legendre panel.
        """
        if n < 1:
            raise DomainError("n must be >= 1")
        edges = np.linspace(x_lo, x_hi, n + 1)
        x0 = edges[:-1]
        x1 = edges[1:]
        half = (x1 - x0) / 2.0
        mid = (x0 + x1) / 2.0
        nodes = mid[:, None] + half[:, None] * _GL_X[None, :]
        dss = (self.arc_integrand(nodes) * _GL_W[None, :]).sum(axis=1) * half
        if rule == "midpoint":
            kx = mid
        elif rule == "left":
            kx = x0
        else:
            raise ValueError(f"unknown curvature rule {rule!r}")
        kappas = self.curvature(kx)
        return np.asarray(kappas, dtype=float), np.asarray(dss, dtype=float)

    # internals --------------------------------------------------------------
    def _check_x(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < -_DOMAIN_TOL) or np.any(x > self._x_max + _DOMAIN_TOL):
            raise DomainError(
                f"x outside centerline domain [0, {self._x_max}]")
        return np.clip(x, 0.0, self._x_max)

    def _build_arc_tables(self):
        edges = np.linspace(0.0, self._x_max, _ARC_PANELS + 1)
        x0 = edges[:-1]
        half = np.diff(edges) / 2.0
        mid = x0 + half
        nodes = mid[:, None] + half[:, None] * _GL_X[None, :]
        panel = (self.arc_integrand(nodes) * _GL_W[None, :]).sum(axis=1) * half
        prefix = np.concatenate([[0.0], np.cumsum(panel)])
        self._arc_edges = edges
        self._arc_prefix = prefix
        self._arc_total = float(prefix[-1])

    def _arc_from_origin(self, x: float) -> float:
        """Cumulative arc length A(x) = arc_length(0, x)."""
        if self._arc_prefix is None:
            self._build_arc_tables()
        if x <= 0.0:
            return 0.0
        if x >= self._x_max:
            return self._arc_total
        h = self._x_max / _ARC_PANELS
        i = min(int(x / h), _ARC_PANELS - 1)
        x_lo = self._arc_edges[i]
        half = (x - x_lo) / 2.0
        nodes = x_lo + half + half * _GL_X
        partial = float(np.dot(self.arc_integrand(nodes), _GL_W) * half)
        return float(self._arc_prefix[i]) + partial

    def _invert_arc(self, a_target: float) -> float:
        if self._arc_prefix is None:
            self._build_arc_tables()
        prefix = self._arc_prefix
        i = int(np.searchsorted(prefix, a_target) - 1)
        i = max(0, min(i, _ARC_PANELS - 1))
        # linear guess inside the bracketing panel, then Newton (A' >= 1)
        frac = (a_target - prefix[i]) / max(prefix[i + 1] - prefix[i], 1e-300)
        x = self._arc_edges[i] + frac * (self._arc_edges[i + 1] - self._arc_edges[i])
        for _ in range(60):
            r = self._arc_from_origin(x) - a_target
            step = r / float(self.arc_integrand(x))
            x -= step
            x = min(max(x, 0.0), self._x_max)
            if abs(step) < 1e-13:
                break
        else:
            raise NumericalError("arc inversion did not converge")
        return x


class PlanarShape(CenterlineShape):
    """Polynomial centerline f(x) = a0 + a1 x + ... + ak x^k (mm).

    ``arc_total`` is computed once at construction; the instance is
    immutable afterwards.
    """

    def __init__(self, coefficients, x_max_total: float):
        coeffs = np.asarray(coefficients, dtype=float)
        if coeffs.ndim != 1 or coeffs.size < 3:
            raise DomainError(
                "polynomial degree must be >= 2 so curvature is defined",
                code="shape.degree_too_low")
        super().__init__(x_max_total)
        self._c = coeffs.copy()
        self._c.setflags(write=False)
        self._d1 = np.polynomial.polynomial.polyder(self._c, 1)
        self._d2 = np.polynomial.polynomial.polyder(self._c, 2)
        self._build_arc_tables()
        if self._arc_total < self._x_max - 1e-9:
            raise NumericalError("arc length shorter than chord; fit is inconsistent")

    @property
    def coefficients(self) -> np.ndarray:
        return self._c

    @property
    def degree(self) -> int:
        return self._c.size - 1

    def f(self, x):
        return np.polynomial.polynomial.polyval(x, self._c)

    def df(self, x):
        return np.polynomial.polynomial.polyval(x, self._d1)

    def ddf(self, x):
        return np.polynomial.polynomial.polyval(x, self._d2)

    # serialization ----------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "coefficients": [float(c) for c in self._c],
            "x_max_total": self._x_max,
            "arc_total": self.arc_total,
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def from_dict(cls, d: dict) -> "PlanarShape":
        return cls(d["coefficients"], d["x_max_total"])

    @classmethod
    def from_json(cls, path) -> "PlanarShape":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def __repr__(self):
        return (f"PlanarShape(degree={self.degree}, x_max={self._x_max:.3f}, "
                f"arc={self.arc_total:.3f})")


class CircularArc(CenterlineShape):
    """Exact circular centerline of constant curvature 1/radius.

    Bends toward -y (f(x) = sqrt(R^2 - x^2) - R), so curvature is exactly
    +1/R everywhere; arc length and arc inversion are closed form.  Useful
    as an analytic reference against polynomial fits.
    """

    def __init__(self, radius: float, arc: float):
        if radius <= 0:
            raise DomainError("radius must be positive")
        if not 0 < arc < radius * math.pi / 2:
            raise DomainError("arc must lie in (0, pi*R/2) for a graph y=f(x)")
        self._radius = float(radius)
        super().__init__(radius * math.sin(arc / radius))
        self._arc_total = float(arc)

    @property
    def radius(self) -> float:
        return self._radius

    def f(self, x):
        return np.sqrt(self._radius ** 2 - np.square(x)) - self._radius

    def df(self, x):
        return -np.asarray(x) / np.sqrt(self._radius ** 2 - np.square(x))

    def ddf(self, x):
        r2 = self._radius ** 2
        return -r2 / (r2 - np.square(x)) ** 1.5

    def curvature(self, x):
        x = self._check_x(x)
        return np.full_like(np.asarray(x, dtype=float), 1.0 / self._radius)[()]

    def arc_length(self, x1, x2):
        x1 = float(self._check_x(x1))
        x2 = float(self._check_x(x2))
        if x2 < x1:
            raise DomainError(f"reversed bounds: x1={x1} > x2={x2}")
        r = self._radius
        return r * (math.asin(x2 / r) - math.asin(x1 / r))

    def _arc_from_origin(self, x):
        return self._radius * math.asin(min(x, self._x_max) / self._radius)

    def _invert_arc(self, a_target):
        return self._radius * math.sin(a_target / self._radius)

    def segment_grid(self, x_lo, x_hi, n, rule="midpoint"):
        if n < 1:
            raise DomainError("n must be >= 1")
        edges = np.linspace(x_lo, x_hi, n + 1)
        arcs = np.array([self._arc_from_origin(e) for e in edges])
        dss = np.diff(arcs)
        kappas = np.full(n, 1.0 / self._radius)
        return kappas, dss

    def __repr__(self):
        return f"CircularArc(radius={self._radius}, arc={self.arc_total:.3f})"


class CenterlineSamples:
    """Ordered (x, y) samples along the tube centerline, in mm."""

    def __init__(self, points):
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise FitError("samples must be an (N, 2) array of (x, y)")
        if pts.shape[0] < 3:
            raise FitError("need at least 3 centerline samples",
                           code="samples.too_few")
        if np.any(np.diff(pts[:, 0]) <= 0):
            raise FitError("sample x values must be strictly increasing",
                           code="samples.x_not_increasing")
        self.points = pts

    @property
    def x(self):
        return self.points[:, 0]

    @property
    def y(self):
        return self.points[:, 1]

    def __len__(self):
        return self.points.shape[0]

    @classmethod
    def from_csv(cls, path) -> "CenterlineSamples":
        """Read a two-column CSV with an x_mm,y_mm header row."""
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or len(header) < 2:
                raise FitError(f"{path}: expected a header row with two columns")
            try:
                float(header[0])
            except ValueError:
                pass
            else:
                raise FitError(f"{path}: missing header row (x_mm,y_mm)")
            rows = [(float(r[0]), float(r[1])) for r in reader if r]
        return cls(rows)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x_mm", "y_mm"])
            for x, y in self.points:
                w.writerow([f"{x:.12g}", f"{y:.12g}"])


def fit_centerline(samples: CenterlineSamples, degree: int = 4) -> PlanarShape:
    """Least-squares polynomial fit of the centerline samples.

    The fit runs on the scaled abscissa x / x_max to condition the
    Vandermonde system; coefficients are rescaled on output.  The distal
    sample defines x_max_total.
    """
    if degree < 2:
        raise FitError("fit degree must be >= 2")
    if len(samples) < degree + 1:
        raise FitError(
            f"need at least {degree + 1} samples for a degree-{degree} fit, "
            f"got {len(samples)}", code="samples.too_few")
    x = samples.x
    y = samples.y
    x_max = float(x[-1])
    if x_max <= 0:
        raise FitError("last sample x must be positive")
    V = np.vander(x / x_max, degree + 1, increasing=True)
    coef, _, rank, _ = np.linalg.lstsq(V, y, rcond=None)
    if rank < degree + 1:
        raise FitError("rank-deficient fit; sample abscissae are degenerate",
                       code="fit.rank_deficient")
    coef = coef / x_max ** np.arange(degree + 1)
    return PlanarShape(coef, x_max)


# functional aliases matching the operation names used elsewhere -------------
def curvature(shape: CenterlineShape, x):
    return shape.curvature(x)


def arc_length(shape: CenterlineShape, x1, x2):
    return shape.arc_length(x1, x2)


def solve_x_min(shape: CenterlineShape, s):
    return shape.solve_x_min(s)


def arc_length_quad(shape: CenterlineShape, x1: float, x2: float) -> float:
    """Adaptive-quadrature arc length; independent check of the table path."""
    val, _ = quad(lambda t: float(shape.arc_integrand(t)), x1, x2,
                  epsabs=1e-12, epsrel=1e-12, limit=200)
    return val
