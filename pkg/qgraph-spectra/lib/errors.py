"""
Exception hierarchy for the quantum graph spectral solver.

Every library module raises subclasses of its own base class; all of them
derive from QGraphError so the controller layer can catch them in one place.
"""


class QGraphError(Exception):
    """Base exception for all library errors."""
    pass


# Graph construction and transformation

class GraphError(QGraphError):
    """Base exception for graph construction and transformation errors."""
    pass


class VertexOutOfRange(GraphError):
    """Raised when an edge references a vertex index outside [0, n)."""
    pass


class DuplicateEdge(GraphError):
    """Raised when the same unordered vertex pair appears twice."""
    pass


class SelfLoop(GraphError):
    """Raised when an edge joins a vertex to itself."""
    pass


class Disconnected(GraphError):
    """Raised when a graph has more than one component or no edges."""
    pass


class InvalidParams(GraphError):
    """Raised when generator or length parameters are invalid."""
    pass


class NonPositiveLength(GraphError):
    """Raised when an edge length is not a positive finite number."""
    pass


class LengthCountMismatch(GraphError):
    """Raised when the number of lengths differs from the number of edges."""
    pass


class AllDegreeTwo(GraphError):
    """Raised when cleaning a pure cycle, which has no vertex to anchor on."""
    pass


class NonSimpleCleaning(GraphError):
    """Raised when cleaning would merge chains into a loop or parallel edges."""
    pass


class NotRepresentable(GraphError):
    """Raised when an edge length does not lie on the requested decimal grid."""
    pass


class GraphFormatError(GraphError):
    """Raised when a graph file does not follow the graph JSON format."""
    pass


# Linear eigenvalue problems

class LaplacianError(QGraphError):
    """Base exception for graph Laplacian eigensolver errors."""
    pass


class ConvergenceFailure(LaplacianError):
    """Raised when a dense or Lanczos eigensolver fails to converge."""
    pass


class MaxIterations(LaplacianError):
    """Raised when inverse iteration exhausts its iteration budget."""
    pass


class SingularShift(LaplacianError):
    """Raised when the shifted matrix stays singular after regularization."""
    pass


class NotEquilateral(LaplacianError):
    """Raised when an extended graph has sub-edges of different lengths."""
    pass


# Equilateral approximation

class EquilateralError(QGraphError):
    """Base exception for equilateral approximation errors."""
    pass


class StepTooLarge(EquilateralError):
    """Raised when the step h would leave some edge without a sub-edge."""
    pass


class TopologyMismatch(EquilateralError):
    """Raised when an approximation does not belong to the given graph."""
    pass


class MuOutOfRange(EquilateralError):
    """Raised when a Laplacian eigenvalue lies outside [0, 2]."""
    pass


class BracketInverted(UserWarning):
    """Warned when the floor estimate falls below the ceil estimate."""
    pass


# Nonlinear eigenvalue problem

class NepError(QGraphError):
    """Base exception for nonlinear eigenvalue problem errors."""
    pass


class NearSingularEdge(NepError):
    """Raised when z is within the pole guard of some (k*pi/l_e)**2."""

    def __init__(self, edge: int, z: float):
        self.edge = edge
        self.z = z
        super().__init__(f"z={z!r} is within the pole guard of edge {edge}")


class SingularIterate(NepError):
    """Raised when H(z) cannot be factorized at a Newton iterate."""
    pass


class FlatDeterminant(NepError):
    """Raised when trace(H^-1 H') vanishes and no Newton direction exists."""
    pass


class NotSingular(NepError):
    """Raised when H(lambda) has no numerical null space."""
    pass


# Eigenfunctions

class EigenfunctionError(QGraphError):
    """Base exception for eigenfunction reconstruction errors."""
    pass


class NonVertexLambda(EigenfunctionError):
    """Raised when sin(sqrt(lambda) l_e) vanishes on some edge."""
    pass


class NotNullvector(EigenfunctionError):
    """Raised when the vertex values are not a null vector of H(lambda)."""
    pass


class OutOfRange(EigenfunctionError):
    """Raised when evaluating outside [0, l_e] or on a missing edge."""
    pass
