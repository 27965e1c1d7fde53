"""Exception hierarchy with machine-readable error codes.

Every error raised by the package carries a stable ``code`` string so batch
drivers can react without parsing messages.  The CLI maps codes to process
exit statuses.
"""


class PoretopoError(Exception):
    """Base class; ``code`` is a stable machine-readable identifier."""

    code = "ERROR"
    exit_status = 1


class ConfigError(PoretopoError):
    code = "CONFIG_INVALID"
    exit_status = 2


class PoreAlignmentError(PoretopoError):
    code = "PORE_NOT_GRID_ALIGNED"
    exit_status = 3


class PoreOverlapError(PoretopoError):
    code = "PORE_OVERLAP"
    exit_status = 3


class PoreTopologyError(PoretopoError):
    """Pore ring is not a closed interior ring (e.g. touches the boundary)."""

    code = "PORE_TOPOLOGY"
    exit_status = 3


class ElementInversionError(PoretopoError):
    """A quadrature point reached non-positive in-plane Jacobian."""

    code = "ELEMENT_INVERSION"
    exit_status = 4

    def __init__(self, element: int, gauss_point: int = -1):
        self.element = element
        self.gauss_point = gauss_point
        super().__init__(
            f"element {element} inverted at quadrature point {gauss_point}"
        )


class PlaneStressError(PoretopoError):
    """The local out-of-plane stretch iteration failed to converge."""

    code = "PLANE_STRESS_FAILURE"
    exit_status = 4

    def __init__(self, element: int, gauss_point: int = -1):
        self.element = element
        self.gauss_point = gauss_point
        super().__init__(
            f"plane-stress iteration failed in element {element}, "
            f"quadrature point {gauss_point}"
        )


class NonConvergenceError(PoretopoError):
    """Load stepping exhausted its cut-backs."""

    code = "FE_NONCONVERGENCE"
    exit_status = 4

    def __init__(self, message: str, last_good_load_factor: float = 0.0):
        self.last_good_load_factor = last_good_load_factor
        super().__init__(message)


class SingularMatrixError(PoretopoError):
    code = "SINGULAR_TANGENT"
    exit_status = 4


class RingCollapseError(PoretopoError):
    """Pore perimeter collapsed to zero; hydraulic diameter undefined."""

    code = "PORE_RING_COLLAPSE"
    exit_status = 4


class DesignMismatchError(PoretopoError):
    code = "DESIGN_FIELD_MISMATCH"
    exit_status = 2


class OptimizerError(PoretopoError):
    code = "OPTIMIZER_FAILURE"
    exit_status = 6


class OutputError(PoretopoError):
    code = "IO_FAILURE"
    exit_status = 5
