"""Exception and warning types shared across the package."""

from __future__ import annotations


class BorchersError(Exception):
    """Base class for every error raised by :mod:`borchers`."""


class SpaceMismatch(BorchersError, ValueError):
    pass


class DegreeOverflow(BorchersError, ValueError):
    pass


class NotPeriodic(BorchersError, ValueError):
    pass


class OffLattice(BorchersError, ValueError):
    pass


class UnsupportedDegree(BorchersError, ValueError):
    pass


class LambdaOutOfRange(BorchersError, ValueError):
    pass


class ZeroEpsilon(BorchersError, ValueError):
    pass


class NonPositiveState(BorchersError):
    """The Gram matrix of a would-be state has a negative eigenvalue."""

    def __init__(self, min_eigenvalue: float, witness=None, message: str | None = None):
        self.min_eigenvalue = float(min_eigenvalue)
        self.witness = witness
        super().__init__(message or f"state is not positive: min eigenvalue {self.min_eigenvalue:.3e}")


class IndexOutOfRange(BorchersError, IndexError):
    pass


class NotInvariant(BorchersError, ValueError):
    pass


class GeneratorsNotClosed(BorchersError, ValueError):
    pass


class EmptyProbes(BorchersError, ValueError):
    pass


class EmptyChoice(BorchersError, ValueError):
    pass


class LevelTooLarge(BorchersError, ValueError):
    pass


class MissingCasimir(BorchersError, ValueError):
    pass


class TooFewPoints(BorchersError, ValueError):
    pass


class NonNormalizableAction(BorchersError, ValueError):
    pass


class MissingMoments(BorchersError, KeyError):
    pass


class CoincidentEigenvalues(BorchersError, ValueError):
    pass


# report-style conditions: the computation still returns a value

class BorchersWarning(UserWarning):
    pass


class CompressedWord(BorchersWarning):
    """A vacuum expectation used a word longer than the exact truncation."""


class CutoffTooSmall(BorchersWarning):
    pass


class OddMomentRequested(BorchersWarning):
    pass


class SupportsOverlap(BorchersWarning):
    pass


class ChainNotEquilibrated(BorchersWarning):
    pass


class NoConvergence(BorchersWarning):
    pass
