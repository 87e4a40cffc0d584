"""
Exception hierarchy shared by every module of the package.
"""


class PanelSphericityError(Exception):
    """Root of all errors raised by panel_sphericity."""


class InputError(PanelSphericityError, ValueError):
    """Malformed input: non-finite entries, wrong shapes, too few rows or columns."""


class PanelParseError(InputError):
    """A panel CSV could not be turned into a balanced n x T x k panel."""


class DomainError(PanelSphericityError, ValueError):
    """Input is well-formed but mathematically invalid for the requested operation."""


class DegenerateInputError(DomainError):
    """Residuals or disturbances are identically zero, so U is undefined."""


class EstimationError(PanelSphericityError):
    """The within normal-equations system is singular or ill-conditioned."""


class UnsupportedCaseError(PanelSphericityError):
    """A closed-form result was requested outside the cases it covers."""


class ConfigError(PanelSphericityError):
    """Invalid experiment configuration or settings."""


class DiagnosticError(PanelSphericityError):
    """Distribution diagnostics cannot be computed for the given samples."""
