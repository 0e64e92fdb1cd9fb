"""Exception types raised by netfem."""


class NetfemError(Exception):
    """Base class for all netfem errors."""


class GraphError(NetfemError):
    """Invalid network topology or geometry."""


class DisconnectedGraph(GraphError):
    pass


class SelfLoop(GraphError):
    pass


class DanglingEdgeReference(GraphError):
    pass


class NonPositiveMeshSize(GraphError):
    pass


class SpaceError(NetfemError):
    """Invalid function-space construction or use."""


class UnsupportedDegree(SpaceError):
    pass


class OutOfRange(SpaceError):
    pass


class SingularWeight(NetfemError):
    """A norm weight (resistance, length, vertex weight) is not positive."""


class InconsistentField(NetfemError):
    """Coefficient field cannot be sampled on the mesh."""


class SolverError(NetfemError):
    pass


class SingularSystem(SolverError):
    pass


class DimensionCapExceeded(SolverError):
    pass


class NormNotSPD(SolverError):
    pass


class DegenerateAnnulus(NetfemError):
    """Cross-section outer radius does not exceed the inner radius."""


class ZeroOscillation(NetfemError):
    """Oscillatory flux amplitude is numerically zero; directionality undefined."""


class NotPeriodic(NetfemError):
    """Transient run did not reach a periodic state within the configured cycles."""

    def __init__(self, drift, message=None):
        self.drift = drift
        super().__init__(message or f"cycle-to-cycle net volume drift {drift:.3e} exceeds 1%")
