"""Exception and warning types shared across the library."""


class MescherError(Exception):
    """Base class for all library-specific errors."""


class NonManifoldEdge(MescherError):
    """An undirected vertex pair is used by more than two faces."""


class InconsistentOrientation(MescherError):
    """Two faces traverse a shared edge in the same direction."""


class DegenerateFace(MescherError):
    """A face has repeated vertices or lifts to (near-)zero area."""


class ParseError(MescherError):
    """A file violates its format contract."""


class IntegrabilityViolation(MescherError):
    """Per-edge depth changes do not sum to zero around a face."""


class MergePositionMismatch(MescherError):
    """Merged vertices disagree in screen position."""


class CyclicOrdering(MescherError):
    """Depth-ordering constraints contain a directed cycle.

    ``cycle`` lists face ids along the offending cycle with the first face
    repeated at the end.  When raised by ``add_order_constraint`` the updated
    mescher (with the cyclic constraint set stored) is attached as
    ``mescher`` so the caller can amend the constraints instead of losing
    them.
    """

    def __init__(self, message, cycle=None, mescher=None):
        super().__init__(message)
        self.cycle = list(cycle) if cycle is not None else None
        self.mescher = mescher


class SolverDivergence(MescherError):
    """Iterative solver exhausted its iteration budget.

    Carries the best iterate seen (``x``) and its residual 2-norm
    (``residual``) so callers with weaker accuracy requirements can decide
    whether to keep it.
    """

    def __init__(self, message, x=None, residual=None):
        super().__init__(message)
        self.x = x
        self.residual = residual


class InconsistentCut(MescherError):
    """Depth assignments disagree along a non-cut edge during embedding."""


class DisconnectedAfterCut(MescherError):
    """Removing the cut edges split a connected component."""


class ZeroNormal(UserWarning):
    """Area-weighted vertex normal vanished; a fallback normal was used."""
