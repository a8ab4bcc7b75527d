"""Exception types shared across the toolkit.

Every error carries a short machine-readable ``code`` so the CLI can emit
stable error identifiers on stderr.
"""


class CtrKitError(Exception):
    """Base class for all toolkit errors."""

    code = "error"

    def __init__(self, message, code=None):
        super().__init__(message)
        if code is not None:
            self.code = code


class DomainError(CtrKitError):
    """An argument lies outside the geometric domain of an operation."""

    code = "domain"


class FitError(CtrKitError):
    """Centerline fitting failed (too few points, rank deficiency, ...)."""

    code = "fit"


class NumericalError(CtrKitError):
    """A root find or quadrature failed to converge or bracket."""

    code = "numeric"


class UnreachableTargetError(CtrKitError):
    """Requested Cartesian target is outside the reachable workspace.

    Attributes mirror the achievable bounds so callers can report how far
    off the request was instead of silently clamping.
    """

    code = "ik.unreachable"

    def __init__(self, message, radial_requested=None, radial_max=None,
                 d_required=None, d_limits=None):
        super().__init__(message)
        self.radial_requested = radial_requested
        self.radial_max = radial_max
        self.d_required = d_required
        self.d_limits = d_limits


class RegistrationError(CtrKitError):
    """Point-set registration failed (degenerate or mismatched inputs)."""

    code = "registration"


class ConfigError(CtrKitError):
    """Robot configuration failed validation.

    ``issues`` is a list of (code, message) tuples covering every violation
    found, not just the first.
    """

    code = "config"

    def __init__(self, issues):
        self.issues = list(issues)
        lines = "; ".join(f"{c}: {m}" for c, m in self.issues)
        super().__init__(f"invalid configuration: {lines}")
