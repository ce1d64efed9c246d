"""Exception types raised across the package.

Every numerical failure derives from :class:`NonrevError` so callers (and the
CLI) can separate numerical breakdowns from programming errors.
"""


class NonrevError(Exception):
    """Base class for numerical failures."""


class InvalidChain(NonrevError):
    """The chain failed validation (reducible, negative rates, ...)."""


class SingularSystem(NonrevError):
    """Null space of the generator is not one-dimensional."""


class StepTooLarge(NonrevError):
    """RK4 step produced a significantly negative density entry."""


class ZeroRate(NonrevError):
    """An edge has a forward rate but no reverse rate."""


class ZeroDensity(NonrevError):
    """A density vanishes on a state where a logarithm is needed."""


class ZeroReference(NonrevError):
    """A reference measure vanishes somewhere."""


class LevelSetInfeasible(NonrevError):
    """No correction on the second edge restores the dissipation level."""


class NotOnLevelSet(NonrevError):
    """A proposed iso-dissipation force does not match the dissipation level."""


class NoConvergence(NonrevError):
    """An iterative solver hit its iteration cap."""


class NonConvexPart(NonrevError):
    """A Hamiltonian failed the midpoint convexity probe."""


class NotReversible(NonrevError):
    """A Hamiltonian failed the reversibility probe."""


class RangeClipped(NonrevError):
    """Grid supremum attained on the boundary of the search box."""


class EmptyTrajectory(NonrevError):
    """Trajectory has zero duration."""


class InfiniteContribution(NonrevError):
    """A jump used an edge whose reverse rate is zero."""


class CFLWarning(UserWarning):
    """Upwinding was engaged; the stencil drops to first order on some faces."""
