"""Exception hierarchy shared by every module of the package."""


class ResnetError(Exception):
    """Base class for all errors raised by resnet."""


# network construction
class DisconnectedGraph(ResnetError):
    pass


class NonpositiveConductance(ResnetError):
    pass


class SelfLoop(ResnetError):
    pass


class UnknownVertex(ResnetError, KeyError):
    pass


class OriginOutsideKeep(ResnetError):
    pass


class TooLargeForExact(ResnetError):
    pass


class LengthMismatch(ResnetError, ValueError):
    pass


# operators / solvers
class SingularMatrix(ResnetError):
    pass


class SupportTouchesGround(ResnetError):
    pass


class NotSpd(ResnetError):
    pass


class DimensionCap(ResnetError):
    pass


class SameVertex(ResnetError, ValueError):
    pass


class VertexOutsideTruncation(ResnetError):
    pass


# spectral / lattice
class NonpositiveGap(ResnetError, ValueError):
    pass


class RecurrentLattice(ResnetError):
    """Monopoles on Z^d exist only for d >= 3."""


class UnconvergedQuadrature(ResnetError):
    pass


class IsolatedVertex(ResnetError):
    pass


class DuplicateEdge(ResnetError):
    pass


class EmptyBoundary(UserWarning):
    """Issued when a wired collapse has no boundary edges to collapse."""


class MaxIterExceeded(ResnetError):
    """CG hit its iteration cap; ``x`` holds the best iterate."""

    def __init__(self, message, x=None, residual=None):
        super().__init__(message)
        self.x = x
        self.residual = residual
