"""Exception taxonomy.

Two families matter to callers: bad input (rejected before any numerics
run) and numerical singularities (the computation itself hit a resonance
or a non-invertible operator). The CLI maps the first family to exit
code 2 and the second to exit code 3.
"""


class KScatterError(Exception):
    """Base class for all errors raised by this package."""


class NumericalSingularityError(KScatterError):
    """A linear system or update step is numerically singular.

    These are physically meaningful (resonant energies, non-invertible
    couplings) and are surfaced rather than regularized away.
    """


# --- input / domain errors -------------------------------------------------

class DuplicatePointError(KScatterError):
    pass


class DimensionMismatchError(KScatterError):
    pass


class NonHermitianCouplingError(KScatterError):
    pass


class ZeroWeightError(KScatterError):
    pass


class EmptyConfigurationError(KScatterError):
    pass


class NegativeDeltaError(KScatterError):
    pass


class ZeroDistanceError(KScatterError):
    pass


class CoincidentSpectralPointsError(KScatterError):
    pass


class OddPhiCountError(KScatterError):
    pass


class LengthMismatchError(KScatterError):
    pass


class GridMismatchError(KScatterError):
    pass


class NonpositiveEnergyError(KScatterError):
    pass


class BoundaryEnergyError(KScatterError):
    pass


class ParseError(KScatterError):
    pass


# --- numerical singularities ------------------------------------------------

class SingularDenominatorError(NumericalSingularityError):
    pass


class DegenerateSchurError(NumericalSingularityError):
    pass


class SingularLError(NumericalSingularityError):
    pass
