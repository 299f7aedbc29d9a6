"""Exception hierarchy.

Every error raised on purpose derives from :class:`SwitchStabError`, so callers
(and the CLI's exit-code mapping) can catch the whole family at once.
"""

from __future__ import annotations


class SwitchStabError(Exception):
    """Base class for all package errors."""


# chain ---------------------------------------------------------------------

class InvalidGenerator(SwitchStabError, ValueError):
    """A matrix failed one of the generator invariants."""

    invariant = "generator"


class NonConservative(InvalidGenerator):
    invariant = "conservative"


class NegativeOffDiagonal(InvalidGenerator):
    invariant = "nonnegative_off_diagonal"


class Reducible(InvalidGenerator):
    invariant = "irreducible"


class SingularSystem(SwitchStabError, ArithmeticError):
    pass


class OutOfHorizon(SwitchStabError, ValueError):
    pass


# spectral / designer -------------------------------------------------------

class EigenFailure(SwitchStabError, ArithmeticError):
    pass


class HypothesisViolated(SwitchStabError, ValueError):
    """A theorem hypothesis does not hold for the supplied data.

    ``condition`` is a short human-readable statement of the failing inequality,
    e.g. ``"pi.alpha > pi.A"``.
    """

    def __init__(self, condition: str, detail: str = ""):
        self.condition = condition
        self.detail = detail
        msg = f"hypothesis {condition} failed"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class SigmaOutOfRange(HypothesisViolated):
    pass


class BracketFailure(SwitchStabError, ArithmeticError):
    pass


class UnknownFamily(SwitchStabError, KeyError):
    pass


class QOutOfRange(SwitchStabError, ValueError):
    pass


# simulator / estimator -----------------------------------------------------

class GridMisaligned(SwitchStabError, ValueError):
    pass


class NonpositiveCurve(SwitchStabError, ArithmeticError):
    def __init__(self, msg: str, first_zero_time: float | None = None):
        super().__init__(msg)
        self.first_zero_time = first_zero_time


class NoUsablePaths(SwitchStabError, ArithmeticError):
    pass


class AllPathsBlewUp(SwitchStabError, ArithmeticError):
    pass
