"""Screens, detector bases and experimental arrangements.

A factorization splits a space of total dimension N into screens (tensor
factors); choosing a unitary per screen picks that screen's detectors, and
the resulting product basis labels the rank-1 powers of action.  An
experimental arrangement stores the coefficient tensor of a state of affairs
in such a product basis: its diagonal holds the potentia of each power, and
a unitary coefficient tensor transports one arrangement into any other of
the same total dimension.

Index conventions: detector indices are 1-based tuples (k1, ..., kn); flat
positions are row-major with screen 1 most significant, so flat coefficient
matrices line up with ``kron`` of the per-screen unitaries.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import linalg
from .errors import (
    BasisMismatch,
    DimensionCapExceeded,
    DimensionMismatch,
    EmptySubset,
    IndexOutOfRange,
    NotAPartition,
    NotASubspace,
    NotUnitary,
    NonUnitaryLambda,
    TqmError,
)
from .states import GivTable, IntensiveStateOfAffairs, Power, clamp01

DEFAULT_MAX_DIM = 64
COEFF_TOL = 1e-9


def max_total_dim() -> int:
    """Dimension cap for factorizations; override with TQM_MAX_DIM."""
    raw = os.environ.get("TQM_MAX_DIM")
    if raw is None:
        return DEFAULT_MAX_DIM
    try:
        value = int(raw)
    except ValueError as exc:
        raise TqmError(f"TQM_MAX_DIM must be an integer, got {raw!r}") from exc
    if value < 2:
        raise TqmError(f"TQM_MAX_DIM must be at least 2, got {value}")
    return value


class Factorization:
    """A split of C^N into screens with a declared number of detector places."""

    def __init__(self, screen_dims: Sequence[int], max_dim: int | None = None):
        dims = tuple(int(d) for d in screen_dims)
        if not dims:
            raise TqmError("a factorization needs at least one screen")
        if any(d < 2 for d in dims):
            raise TqmError(f"every screen needs at least 2 places, got {dims}")
        cap = max_total_dim() if max_dim is None else int(max_dim)
        total = int(np.prod(dims))
        if total > cap:
            raise DimensionCapExceeded(
                f"total dimension {total} exceeds the cap {cap}"
            )
        self.screen_dims = dims
        self.total_dim = total

    @property
    def num_screens(self) -> int:
        return len(self.screen_dims)

    def __eq__(self, other):
        return isinstance(other, Factorization) and self.screen_dims == other.screen_dims

    def __repr__(self):
        return f"Factorization({list(self.screen_dims)})"


def _flat_index(indices: Sequence[int], dims: Sequence[int]) -> int:
    """Row-major flat position of a 1-based multi-index."""
    ks = tuple(int(k) for k in indices)
    if len(ks) != len(dims):
        raise IndexOutOfRange(
            f"multi-index {ks} has {len(ks)} entries for {len(dims)} screens"
        )
    for k, d in zip(ks, dims):
        if k < 1 or k > d:
            raise IndexOutOfRange(f"index {k} outside 1..{d} in {ks}")
    return int(np.ravel_multi_index([k - 1 for k in ks], dims))


def _multi_index(flat: int, dims: Sequence[int]) -> tuple[int, ...]:
    """Inverse of _flat_index (returns a 1-based tuple)."""
    return tuple(int(k) + 1 for k in np.unravel_index(flat, dims))


class DetectorBasis:
    """A factorization plus one unitary per screen whose columns are detectors.

    The induced product basis vector |k1...kn> is the Kronecker product of
    the chosen columns; ``matrix`` holds all of them, flat index by column.
    """

    def __init__(self, screens: Sequence, tol: float = linalg.DEFAULT_TOL,
                 max_dim: int | None = None):
        mats = [linalg.as_square(u) for u in screens]
        for i, u in enumerate(mats):
            if not linalg.is_unitary(u, tol):
                raise NotUnitary(f"screen {i + 1} matrix is not unitary within {tol}")
        self.factorization = Factorization([u.shape[0] for u in mats], max_dim=max_dim)
        full = linalg.kron_all(mats)
        if not linalg.is_unitary(full, tol):
            raise NotUnitary("product basis is not orthonormal within tolerance")
        full.setflags(write=False)
        for u in mats:
            u.setflags(write=False)
        self.screens = tuple(mats)
        self._matrix = full

    @property
    def screen_dims(self) -> tuple[int, ...]:
        return self.factorization.screen_dims

    @property
    def total_dim(self) -> int:
        return self.factorization.total_dim

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    def vector(self, indices: Sequence[int]) -> np.ndarray:
        return self._matrix[:, _flat_index(indices, self.screen_dims)]

    def multi_indices(self) -> list[tuple[int, ...]]:
        """All detector multi-indices in flat (row-major) order."""
        return [_multi_index(i, self.screen_dims) for i in range(self.total_dim)]

    def same_basis(self, other: "DetectorBasis", tol: float = linalg.DEFAULT_TOL) -> bool:
        return (
            self.screen_dims == other.screen_dims
            and bool(np.allclose(self._matrix, other._matrix, atol=tol, rtol=0.0))
        )

    def __repr__(self):
        return f"DetectorBasis(screen_dims={list(self.screen_dims)})"


def power_of_action(basis: DetectorBasis, indices: Sequence[int]) -> Power:
    """Rank-1 projector onto the product basis vector at the given indices."""
    v = basis.vector(indices)
    label = "[" + ",".join(str(int(k)) for k in indices) + "]"
    return Power(np.outer(v, v.conj()), label=label)


class ExperimentalArrangement:
    """Coefficient tensor of a state of affairs in a detector basis.

    ``coefficients`` is shaped ``screen_dims + screen_dims`` (ket block then
    bra block); ``flat`` is the same data as an N x N matrix.  Diagonal
    entries are the potentia and must be real, lie in [0, 1] and sum to 1.
    """

    def __init__(self, basis: DetectorBasis, coefficients, tol: float = COEFF_TOL):
        dims = basis.screen_dims
        n = basis.total_dim
        arr = np.asarray(coefficients, dtype=complex)
        if arr.shape == (n, n):
            arr = arr.reshape(dims + dims)
        if arr.shape != dims + dims:
            raise DimensionMismatch(
                f"coefficient tensor shape {arr.shape} does not match screens {dims}"
            )
        flat = arr.reshape(n, n)
        if linalg.frobenius(flat - linalg.dagger(flat)) > tol:
            raise TqmError("coefficients are not Hermitian under index-block swap")
        diag = np.diagonal(flat)
        if np.max(np.abs(diag.imag)) > tol:
            raise TqmError("diagonal coefficients must be real")
        if diag.real.min() < -tol or diag.real.max() > 1 + tol:
            raise TqmError("diagonal coefficients must lie in [0, 1]")
        if abs(diag.real.sum() - 1.0) > tol:
            raise TqmError(f"diagonal coefficients sum to {diag.real.sum()!r}, not 1")
        arr = arr.copy()
        arr.setflags(write=False)
        self.basis = basis
        self._coefficients = arr

    @property
    def coefficients(self) -> np.ndarray:
        return self._coefficients

    @property
    def flat(self) -> np.ndarray:
        n = self.basis.total_dim
        return self._coefficients.reshape(n, n)

    @property
    def degree(self) -> int:
        """Degree of complexity: the cardinality of the detector basis."""
        return self.basis.total_dim

    @property
    def isa_dim(self) -> int:
        return self.basis.total_dim

    def __repr__(self):
        return f"ExperimentalArrangement(screen_dims={list(self.basis.screen_dims)})"


def build_arrangement(
    isa: IntensiveStateOfAffairs, basis: DetectorBasis
) -> ExperimentalArrangement:
    """Express a state of affairs in a detector basis.

    The coefficient at (k; k') is <k|rho|k'>, so the diagonal reproduces the
    intensities of the corresponding powers of action.
    """
    if isa.dim != basis.total_dim:
        raise DimensionMismatch(
            f"state dim {isa.dim} != basis total dim {basis.total_dim}"
        )
    b = basis.matrix
    flat = linalg.dagger(b) @ isa.density @ b
    return ExperimentalArrangement(basis, flat)


def potentia(ea: ExperimentalArrangement, indices: Sequence[int]) -> float:
    """Diagonal coefficient at a detector multi-index, clamped to [0, 1]."""
    i = _flat_index(indices, ea.basis.screen_dims)
    return clamp01(ea.flat[i, i].real)


def potentia_table(ea: ExperimentalArrangement) -> GivTable:
    """All powers of action of the basis with their potentia."""
    powers = [power_of_action(ea.basis, ks) for ks in ea.basis.multi_indices()]
    vals = clamp01(np.diagonal(ea.flat).real)
    return GivTable(powers, vals)


class BasisChange:
    """Coefficients relating a source detector basis to a target one.

    Entry (kappa; k) is the overlap <kappa|k> of a target product vector with
    a source one, so the flattened matrix is unitary and transports
    coefficient tensors by conjugation.
    """

    def __init__(
        self,
        source: DetectorBasis,
        target: DetectorBasis,
        coefficients=None,
        tol: float = linalg.DEFAULT_TOL,
    ):
        if source.total_dim != target.total_dim:
            raise DimensionMismatch(
                f"source dim {source.total_dim} != target dim {target.total_dim}"
            )
        n = source.total_dim
        if coefficients is None:
            flat = linalg.dagger(target.matrix) @ source.matrix
        else:
            arr = np.asarray(coefficients, dtype=complex)
            expected = target.screen_dims + source.screen_dims
            if arr.shape == (n, n):
                arr = arr.reshape(expected)
            if arr.shape != expected:
                raise DimensionMismatch(
                    f"coefficients shape {arr.shape}, expected {expected}"
                )
            flat = arr.reshape(n, n)
        if not linalg.is_unitary(flat, tol):
            raise NonUnitaryLambda("flattened basis-change coefficients are not unitary")
        tensor = flat.reshape(target.screen_dims + source.screen_dims).copy()
        tensor.setflags(write=False)
        self.source = source
        self.target = target
        self._tensor = tensor

    @classmethod
    def between(cls, source: DetectorBasis, target: DetectorBasis) -> "BasisChange":
        """Derive the change from the product-basis overlaps."""
        return cls(source, target)

    @property
    def coefficients(self) -> np.ndarray:
        return self._tensor

    @property
    def flat(self) -> np.ndarray:
        n = self.source.total_dim
        return self._tensor.reshape(n, n)

    def compose(self, then: "BasisChange") -> "BasisChange":
        """The single change equivalent to applying self, then ``then``."""
        if not then.source.same_basis(self.target):
            raise BasisMismatch("changes do not chain: target != next source")
        return BasisChange(self.source, then.target, then.flat @ self.flat)


def transform_arrangement(
    ea: ExperimentalArrangement, change: BasisChange
) -> ExperimentalArrangement:
    """Transport an arrangement through a basis change.

    Implements the double contraction
    alpha'[kappa; kappa'] = sum_{k, k'} alpha[k; k'] lam[kappa; k] conj(lam[kappa'; k']),
    which in flattened form is lam @ alpha @ lam^dagger.
    """
    if not change.source.same_basis(ea.basis):
        raise BasisMismatch("arrangement basis does not match the change source")
    lam = change.flat
    flat = lam @ ea.flat @ linalg.dagger(lam)
    return ExperimentalArrangement(change.target, flat)


@dataclass(frozen=True)
class InvarianceReport:
    max_deviation: float
    passed: bool
    tol: float
    detail: str = ""


class QuantumLab:
    """A fixed state of affairs plus a registry of named arrangements."""

    def __init__(self, isa: IntensiveStateOfAffairs):
        self.isa = isa
        self._arrangements: dict[str, ExperimentalArrangement] = {}

    def register(self, name: str, ea: ExperimentalArrangement) -> None:
        if ea.isa_dim > self.isa.dim:
            raise DimensionMismatch(
                f"arrangement dim {ea.isa_dim} exceeds lab dim {self.isa.dim}"
            )
        self._arrangements[name] = ea

    def arrangement(self, name: str) -> ExperimentalArrangement:
        return self._arrangements[name]

    def names(self) -> list[str]:
        return sorted(self._arrangements)

    def build(self, basis: DetectorBasis, name: str | None = None) -> ExperimentalArrangement:
        ea = build_arrangement(self.isa, basis)
        if name is not None:
            self.register(name, ea)
        return ea


def check_basis_invariance(
    lab: QuantumLab,
    b1: DetectorBasis,
    b2: DetectorBasis,
    tol: float = COEFF_TOL,
) -> InvarianceReport:
    """Transported coefficients must reproduce the directly built arrangement.

    Builds the lab's state in b1, transports it through the derived change
    b1 -> b2 and compares entrywise with the arrangement built in b2.
    """
    if b1.total_dim != lab.isa.dim or b2.total_dim != lab.isa.dim:
        raise DimensionMismatch("both bases must match the lab dimension")
    ea1 = build_arrangement(lab.isa, b1)
    ea2 = build_arrangement(lab.isa, b2)
    moved = transform_arrangement(ea1, BasisChange.between(b1, b2))
    dev = float(np.max(np.abs(moved.flat - ea2.flat)))
    return InvarianceReport(max_deviation=dev, passed=dev <= tol, tol=tol)


def coarse_grain(
    ea: ExperimentalArrangement, groups: Iterable[Iterable[int]]
) -> GivTable:
    """Sum powers and potentia over a partition of the flat basis indices.

    ``groups`` partitions {1..N} (1-based flat positions).  Each grouped
    power is the sum of the group's rank-1 basis powers, which stays a
    projector because they are mutually orthogonal.
    """
    n = ea.basis.total_dim
    parts = [tuple(int(i) for i in g) for g in groups]
    seen: set[int] = set()
    for g in parts:
        for i in g:
            if i < 1 or i > n:
                raise NotAPartition(f"index {i} outside 1..{n}")
            if i in seen:
                raise NotAPartition(f"index {i} appears in more than one group")
            seen.add(i)
    if len(seen) != n:
        missing = sorted(set(range(1, n + 1)) - seen)
        raise NotAPartition(f"indices {missing} are not covered")

    b = ea.basis.matrix
    diag = np.diagonal(ea.flat).real
    powers = []
    vals = []
    for g in parts:
        cols = b[:, [i - 1 for i in g]]
        label = "+".join(
            "[" + ",".join(map(str, _multi_index(i - 1, ea.basis.screen_dims))) + "]"
            for i in g
        )
        powers.append(Power(cols @ linalg.dagger(cols), label=label))
        vals.append(clamp01(diag[[i - 1 for i in g]].sum()))
    return GivTable(powers, vals)


def marginal_intensities(
    ea: ExperimentalArrangement, screens: Iterable[int]
) -> GivTable:
    """Per-detector intensities on a kept subset of screens.

    Partial-traces the flat coefficient matrix over the discarded screens;
    the table's powers are the kept screens' product-basis projectors and the
    intensities agree with coarse-graining over the induced index partition.
    """
    kept = sorted(set(int(s) for s in screens))
    dims = ea.basis.screen_dims
    if not kept:
        raise EmptySubset("must keep at least one screen")
    if any(s < 1 or s > len(dims) for s in kept):
        raise IndexOutOfRange(f"screens {kept} outside 1..{len(dims)}")
    discarded = [s for s in range(1, len(dims) + 1) if s not in kept]
    reduced = linalg.partial_trace(ea.flat, dims, discarded)
    vals = clamp01(np.diagonal(reduced).real)

    kept_basis = DetectorBasis([ea.basis.screens[s - 1] for s in kept])
    powers = [power_of_action(kept_basis, ks) for ks in kept_basis.multi_indices()]
    return GivTable(powers, vals)


def _embed_on_factors(
    op: np.ndarray, dims: Sequence[int], kept: Sequence[int]
) -> np.ndarray:
    """Extend an operator on the kept factors by identity on the rest."""
    n = len(dims)
    kept0 = [s - 1 for s in kept]
    disc0 = [i for i in range(n) if i not in kept0]
    d_kept = [dims[i] for i in kept0]
    d_disc = [dims[i] for i in disc0]
    total = int(np.prod(dims))

    t = op.reshape(d_kept + d_kept)
    if not disc0:
        operands = [t, [*(kept0), *(i + n for i in kept0)]]
    else:
        eye = np.eye(int(np.prod(d_disc)), dtype=complex).reshape(d_disc + d_disc)
        operands = [
            t,
            [*(kept0), *(i + n for i in kept0)],
            eye,
            [*(disc0), *(i + n for i in disc0)],
        ]
    out_axes = list(range(2 * n))
    return np.einsum(*operands, out_axes).reshape(total, total)


@dataclass(frozen=True)
class FactorizationReport:
    max_deviation: float
    passed: bool
    tol: float
    mode: str
    small_values: tuple[float, ...]
    big_values: tuple[float, ...]


def check_factorization_invariance(
    lab: QuantumLab,
    small_basis: DetectorBasis,
    big_basis: DetectorBasis,
    isometry=None,
    keep_screens: Iterable[int] | None = None,
    tol: float = COEFF_TOL,
) -> FactorizationReport:
    """Every small-arrangement potentia is recoverable from the big arrangement.

    Two embedding modes:

    * isometry (default): small basis vectors map into the big space through
      an isometry V (derived as small vector s -> s-th big product vector
      when not supplied).  The small side reads diagonals of the compressed
      state V^dagger rho V; the big side evaluates each embedded power
      through the big arrangement's coefficient tensor.
    * ``keep_screens``: the small experiment lives on a subset of the big
      screens.  The small side is the arrangement of the marginal state on
      those screens; the big side evaluates the small powers extended by
      identity on the discarded screens.
    """
    rho = lab.isa.density
    n = lab.isa.dim
    if big_basis.total_dim != n:
        raise DimensionMismatch(f"big basis dim {big_basis.total_dim} != lab dim {n}")
    m = small_basis.total_dim
    big = big_basis.matrix
    alpha = linalg.dagger(big) @ rho @ big  # big arrangement coefficients

    if keep_screens is not None:
        kept = sorted(set(int(s) for s in keep_screens))
        dims = big_basis.screen_dims
        if not kept:
            raise EmptySubset("must keep at least one screen")
        if any(s < 1 or s > len(dims) for s in kept):
            raise IndexOutOfRange(f"screens {kept} outside 1..{len(dims)}")
        if small_basis.screen_dims != tuple(dims[s - 1] for s in kept):
            raise NotASubspace(
                f"small screens {small_basis.screen_dims} do not match kept "
                f"big screens {tuple(dims[s - 1] for s in kept)}"
            )
        discarded = [s for s in range(1, len(dims) + 1) if s not in kept]
        rho_kept = linalg.partial_trace(rho, dims, discarded)
        bs = small_basis.matrix
        small_vals = np.diagonal(linalg.dagger(bs) @ rho_kept @ bs).real
        big_vals = np.empty(m)
        for s in range(m):
            p_small = np.outer(bs[:, s], bs[:, s].conj())
            p_emb = _embed_on_factors(p_small, dims, kept)
            big_vals[s] = np.trace(alpha @ (linalg.dagger(big) @ p_emb @ big)).real
        mode = "keep_screens"
    else:
        if isometry is None:
            if m > n:
                raise NotASubspace(f"small dim {m} exceeds big dim {n}")
            v = big[:, :m] @ linalg.dagger(small_basis.matrix)
        else:
            v = np.asarray(isometry, dtype=complex)
            if v.shape != (n, m):
                raise NotASubspace(f"isometry shape {v.shape}, expected {(n, m)}")
        if linalg.frobenius(linalg.dagger(v) @ v - np.eye(m)) > linalg.DEFAULT_TOL:
            raise NotASubspace("columns do not embed isometrically into the big space")
        sigma = linalg.dagger(v) @ rho @ v  # compressed state; trace <= 1
        bs = small_basis.matrix
        small_vals = np.diagonal(linalg.dagger(bs) @ sigma @ bs).real
        big_vals = np.empty(m)
        for s in range(m):
            w = v @ bs[:, s]
            p_emb = np.outer(w, w.conj())
            big_vals[s] = np.trace(alpha @ (linalg.dagger(big) @ p_emb @ big)).real
        mode = "isometry"

    dev = float(np.max(np.abs(small_vals - big_vals)))
    return FactorizationReport(
        max_deviation=dev,
        passed=dev <= tol,
        tol=tol,
        mode=mode,
        small_values=tuple(float(x) for x in small_vals),
        big_values=tuple(float(x) for x in big_vals),
    )
