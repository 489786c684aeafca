"""Exception hierarchy shared by all modules."""


class BieleckiError(Exception):
    """Base class for every error raised by this package."""


class GridError(BieleckiError, ValueError):
    """Invalid grid, measure or relation construction."""


class RelationStructureError(GridError):
    """A relation refers to node indices outside the grid."""


class ShapeError(BieleckiError, ValueError):
    """Arrays living on different grids or codomains were combined."""


class DivergenceError(BieleckiError):
    """The weight iteration failed to converge.

    Raised when the monotone series for the weight keeps growing, which
    means ``L0 * rho >= 1`` somewhere on the grid.
    """

    def __init__(self, message, iterations, last_increment):
        super().__init__(message)
        self.iterations = iterations
        self.last_increment = last_increment


class CertificateError(BieleckiError):
    """The contraction certificate did not pass; no iteration was run."""

    def __init__(self, certificate, report=None):
        q = certificate.q
        super().__init__(
            f"contraction certificate failed: q={q:.17g} > 1 - margin "
            f"(margin={certificate.margin:g}) at node {certificate.argmax_node}"
        )
        self.certificate = certificate
        self.report = report


class ConvergenceError(BieleckiError):
    """Picard iteration hit ``max_iter`` before meeting the tolerance."""

    def __init__(self, message, iterations, last_increment, report=None):
        super().__init__(message)
        self.iterations = iterations
        self.last_increment = last_increment
        self.report = report


class KernelEvaluationError(BieleckiError):
    """A kernel or forcing callable produced non-finite values."""

    def __init__(self, message, node_pair=None):
        super().__init__(message)
        self.node_pair = node_pair


class AdmissibilityError(BieleckiError):
    """A substitution map does not send ``H(t)`` into ``H(t)``."""

    def __init__(self, message, substitution, node):
        super().__init__(message)
        self.substitution = substitution
        self.node = node


class InterpolationError(BieleckiError):
    """A point requested for interpolation lies outside the grid box."""


class InfeasibleError(BieleckiError):
    """No admissible weight exists for the requested construction."""
