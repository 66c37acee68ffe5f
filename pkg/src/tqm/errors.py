"""Exception hierarchy shared by all tqm modules.

Every domain failure raises a subclass of :class:`TqmError` whose class name
identifies the violated invariant, so callers (and the CLI) can report the
failure by name.
"""


class TqmError(Exception):
    """Base class for all domain errors raised by this package."""

    @property
    def name(self) -> str:
        return type(self).__name__


class DimensionMismatch(TqmError):
    """Operands have incompatible dimensions."""


class NotNormalized(TqmError):
    """A state vector is not unit-norm within tolerance."""


class NotHermitian(TqmError):
    """A density matrix is not Hermitian within tolerance."""


class NotPositive(TqmError):
    """A density matrix has an eigenvalue below the negativity slack."""


class TraceNotOne(TqmError):
    """A density matrix trace deviates from 1 beyond tolerance."""


class NotAProjector(TqmError):
    """A power's matrix fails the idempotence/Hermiticity test."""


class FamilyNotOrthogonal(TqmError):
    """A projector family is not mutually orthogonal.

    Carries the offending pair of (0-based) positions and the product norm.
    """

    def __init__(self, i: int, j: int, norm: float):
        self.pair = (i, j)
        self.norm = norm
        super().__init__(
            f"projectors at positions {i} and {j} are not orthogonal "
            f"(product norm {norm:.3e})"
        )


class WeightsInvalid(TqmError):
    """Mixture weights are negative or do not sum to 1."""


class EmptyTable(TqmError):
    """An intensity table with no entries was supplied."""


class IndexOutOfRange(TqmError):
    """A detector or screen index is outside its declared range."""


class NotUnitary(TqmError):
    """A per-screen basis matrix fails the unitarity test."""


class NonUnitaryLambda(NotUnitary):
    """A basis-change coefficient tensor is not unitary when flattened."""


class BasisMismatch(TqmError):
    """An arrangement was transported through a change whose source basis differs."""


class NotAPartition(TqmError):
    """Index groups do not partition the arrangement's basis indices."""


class EmptySubset(TqmError):
    """A screen subset must be nonempty."""


class NotASubspace(TqmError):
    """A claimed subspace embedding is not an isometry into the big space."""


class DimensionCapExceeded(TqmError):
    """A factorization's total dimension exceeds the configured cap."""


class UnknownBasis(TqmError):
    """A named basis does not exist in the lab file."""


class UnknownFamily(TqmError):
    """A named context family does not exist in the lab file."""


class UnresolvablePowerSpec(TqmError):
    """A power specification does not resolve to valid projectors."""


class LabFileError(Exception):
    """A lab document failed to parse; carries the offending path."""

    def __init__(self, path: str, reason: str):
        self.path = path
        self.reason = reason
        super().__init__(f"{path}: {reason}")
