"""Spectral tools for fractional powers of parabolic operators.

Submodules: ``specfun`` (kernels and special functions), ``bases``
(eigensystems), ``fracop`` (the space-time operator and its integral
routes), ``extension`` (the extension problem), ``transference``
(intertwining maps between operators) and ``harness`` (Dirichlet
problems and Harnack experiments).
"""

__version__ = "0.1.0"

from .errors import AccuracyError, DomainError, NumericError, ResourceError  # noqa: E402

__all__ = ["__version__", "AccuracyError", "DomainError", "NumericError", "ResourceError"]
