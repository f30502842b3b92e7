"""Exception types shared across the package."""


class ShtukaError(Exception):
    """Base class. `witness` carries the data that certifies the failure."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class AlgebraMismatch(ShtukaError):
    pass


class InvalidAlgebra(ShtukaError):
    pass


class NotLocal(InvalidAlgebra):
    pass


class NotAUnit(ShtukaError):
    pass


class NoSolution(ShtukaError):
    pass


class NotDivisible(ShtukaError):
    pass


class InsufficientPrecision(ShtukaError):
    pass


class PrecisionExhausted(ShtukaError):
    pass


class NotSquare(ShtukaError):
    pass


class BaseNotField(ShtukaError):
    pass


class NotAnnihilated(ShtukaError):
    pass


class BudgetExceeded(ShtukaError):
    pass


class NotFree(ShtukaError):
    pass


class RoundTripFailure(ShtukaError):
    pass


class NotALift(ShtukaError):
    pass


class NotAndersonDivisible(ShtukaError):
    pass


class ZetaNotZero(ShtukaError):
    pass


class NotAFiltration(ShtukaError):
    pass


class NoLift(ShtukaError):
    pass


class InvalidHopfData(ShtukaError):
    pass


class SchemaError(ShtukaError):
    pass


class UnresolvedReference(SchemaError):
    pass
