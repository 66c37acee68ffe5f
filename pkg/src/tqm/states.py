"""Intensive states of affairs over projector powers.

An intensive state of affairs assigns each power (orthogonal projector) an
intensity in [0, 1], is normalized on the identity, and is additive over
mutually orthogonal families.  At finite dimension such a valuation is
represented here by a density operator rho, with value(P) = Tr(rho P); every
construction in this module goes through that representation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import linalg
from .errors import (
    DimensionMismatch,
    EmptyTable,
    FamilyNotOrthogonal,
    NotAProjector,
    NotHermitian,
    NotPositive,
    TraceNotOne,
    TqmError,
    WeightsInvalid,
)

DENSITY_TOL = 1e-9
ADDITIVITY_TOL = 1e-9

# Clamped reads snap to the exact endpoints within this window, so the
# identity power reads exactly 1 and the zero power exactly 0 despite float
# noise.  Kept far below every stated tolerance (>= 1e-10).
ENDPOINT_SNAP = 1e-12


def clamp01(values):
    """Clamp intensities into [0, 1], snapping float noise at the endpoints."""
    arr = np.asarray(values, dtype=float)
    out = np.clip(arr, 0.0, 1.0)
    out = np.where(np.abs(out) <= ENDPOINT_SNAP, 0.0, out)
    out = np.where(np.abs(out - 1.0) <= ENDPOINT_SNAP, 1.0, out)
    if arr.ndim == 0:
        return float(out)
    return out


def density_violations(m, tol: float = DENSITY_TOL) -> list[str]:
    """List the density-matrix invariants violated by ``m`` (empty = valid)."""
    mat = linalg.as_square(m)
    out = []
    hermitian = linalg.frobenius(mat - linalg.dagger(mat)) <= tol
    if not hermitian:
        out.append("NotHermitian")
    # eigvalsh is only meaningful on (nearly) Hermitian input
    if hermitian and np.linalg.eigvalsh(mat).min() < -tol:
        out.append("NotPositive")
    if abs(mat.trace().real - 1.0) > tol or abs(mat.trace().imag) > tol:
        out.append("TraceNotOne")
    return out


class IntensiveStateOfAffairs:
    """A valuation on powers, held as a validated density operator.

    The matrix must be Hermitian, positive semidefinite and trace-1 within
    tolerance; these three conditions make the induced valuation normalized
    (identity maps to 1) and additive over orthogonal projector families.
    """

    def __init__(self, density, tol: float = DENSITY_TOL):
        mat = linalg.as_square(density)
        if linalg.frobenius(mat - linalg.dagger(mat)) > tol:
            raise NotHermitian(
                f"density deviates from its adjoint by "
                f"{linalg.frobenius(mat - linalg.dagger(mat)):.3e}"
            )
        eigs = np.linalg.eigvalsh(mat)
        if eigs.min() < -tol:
            raise NotPositive(f"density has eigenvalue {eigs.min():.3e}")
        tr = mat.trace()
        if abs(tr.real - 1.0) > tol or abs(tr.imag) > tol:
            raise TraceNotOne(f"density trace is {tr!r}")
        mat = mat.copy()
        mat.setflags(write=False)
        self._density = mat

    @property
    def density(self) -> np.ndarray:
        return self._density

    @property
    def dim(self) -> int:
        return self._density.shape[0]

    def __repr__(self):
        return f"IntensiveStateOfAffairs(dim={self.dim})"


def make_isa(density, tol: float = DENSITY_TOL) -> IntensiveStateOfAffairs:
    """Validated constructor; raises NotHermitian/NotPositive/TraceNotOne."""
    return IntensiveStateOfAffairs(density, tol=tol)


def pure_isa(ket, tol: float = DENSITY_TOL) -> IntensiveStateOfAffairs:
    """The state of affairs of a single unit vector."""
    return IntensiveStateOfAffairs(linalg.nu_embed(ket), tol=tol)


class Power:
    """An orthogonal projector, the vertex type of the power graph."""

    def __init__(self, matrix, tol: float = linalg.DEFAULT_TOL, label: str | None = None):
        mat = linalg.as_square(matrix)
        if not linalg.is_projector(mat, tol):
            raise NotAProjector(
                "matrix fails idempotence/Hermiticity within "
                f"{tol} (||P^2-P||={linalg.frobenius(mat @ mat - mat):.3e})"
            )
        mat = mat.copy()
        mat.setflags(write=False)
        self._matrix = mat
        self.label = label

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @property
    def dim(self) -> int:
        return self._matrix.shape[0]

    def __repr__(self):
        tag = f" {self.label!r}" if self.label else ""
        return f"Power(dim={self.dim}{tag})"


def intensity(isa: IntensiveStateOfAffairs, p: Power) -> float:
    """Intensity (potentia) of a power: Re Tr(rho P), clamped to [0, 1]."""
    if p.dim != isa.dim:
        raise DimensionMismatch(f"power dim {p.dim} != state dim {isa.dim}")
    tr = np.trace(isa.density @ p.matrix)
    if abs(tr.imag) > 1e-9:
        raise TqmError(f"intensity trace has imaginary part {tr.imag:.3e}")
    return clamp01(tr.real)


@dataclass(frozen=True)
class AdditivityReport:
    deviation: float
    passed: bool
    sum_intensity: float
    member_intensities: tuple[float, ...]
    tol: float


def check_additivity(
    isa: IntensiveStateOfAffairs,
    family: Sequence[Power],
    tol: float = ADDITIVITY_TOL,
) -> AdditivityReport:
    """Compare the valuation of a summed orthogonal family with the summed values.

    The family must be mutually orthogonal (||Pi Pj|| <= 1e-9 for i != j);
    otherwise FamilyNotOrthogonal identifies the first offending pair.
    """
    mats = [p.matrix for p in family]
    for i in range(len(mats)):
        if mats[i].shape[0] != isa.dim:
            raise DimensionMismatch(
                f"family member {i} has dim {mats[i].shape[0]}, state has {isa.dim}"
            )
        for j in range(i + 1, len(mats)):
            norm = linalg.frobenius(mats[i] @ mats[j])
            if norm > 1e-9:
                raise FamilyNotOrthogonal(i, j, norm)

    members = tuple(intensity(isa, p) for p in family)
    total_matrix = sum(mats) if mats else np.zeros((isa.dim, isa.dim), dtype=complex)
    tr = np.trace(isa.density @ total_matrix)
    sum_int = clamp01(tr.real)
    deviation = abs(sum_int - sum(members))
    return AdditivityReport(
        deviation=deviation,
        passed=deviation <= tol,
        sum_intensity=sum_int,
        member_intensities=members,
        tol=tol,
    )


def mix(
    states: Sequence[IntensiveStateOfAffairs],
    weights: Sequence[float],
) -> IntensiveStateOfAffairs:
    """Convex combination of states; intensities combine with the same weights."""
    if len(states) != len(weights) or not states:
        raise WeightsInvalid(
            f"{len(weights)} weights for {len(states)} states"
        )
    w = np.asarray(weights, dtype=float)
    if np.any(w < -1e-12) or abs(w.sum() - 1.0) > 1e-9:
        raise WeightsInvalid(f"weights must be nonnegative and sum to 1, got {list(w)}")
    dim = states[0].dim
    for s in states[1:]:
        if s.dim != dim:
            raise DimensionMismatch("mixed states must share one dimension")
    rho = sum(wi * s.density for wi, s in zip(w, states))
    return IntensiveStateOfAffairs(rho)


@dataclass(frozen=True)
class PowerGraph:
    """Commutation graph: vertices are powers, edges join commuting pairs."""

    vertices: tuple[Power, ...]
    edges: frozenset[tuple[int, int]]
    tol: float

    def has_edge(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self.edges

    def neighbors(self, i: int) -> list[int]:
        out = [j for (a, j) in self.edges if a == i]
        out += [a for (a, j) in self.edges if j == i]
        return sorted(out)


def power_graph(powers: Sequence[Power], tol: float = linalg.DEFAULT_TOL) -> PowerGraph:
    """Build the commutation graph of a finite power family."""
    ps = list(powers)
    if ps:
        dim = ps[0].dim
        for k, p in enumerate(ps):
            if p.dim != dim:
                raise DimensionMismatch(f"power {k} has dim {p.dim}, expected {dim}")
    edges = set()
    for i in range(len(ps)):
        for j in range(i + 1, len(ps)):
            if linalg.commutator_norm(ps[i].matrix, ps[j].matrix) <= tol:
                edges.add((i, j))
    return PowerGraph(vertices=tuple(ps), edges=frozenset(edges), tol=tol)


class GivTable:
    """Pairs of powers and observed intensities in [0, 1].

    Raw values may carry up to 1e-9 of numerical slack; reads clamp into
    [0, 1].
    """

    def __init__(self, powers: Sequence[Power], intensities: Sequence[float]):
        ps = list(powers)
        vals = np.asarray(intensities, dtype=float)
        if len(ps) != vals.shape[0]:
            raise DimensionMismatch(
                f"{len(ps)} powers vs {vals.shape[0]} intensities"
            )
        if vals.size and (vals.min() < -1e-9 or vals.max() > 1 + 1e-9):
            raise TqmError(
                f"intensities outside [0,1] slack: min {vals.min()!r}, max {vals.max()!r}"
            )
        self.powers = tuple(ps)
        self._raw = vals

    @property
    def intensities(self) -> np.ndarray:
        return clamp01(self._raw)

    def __len__(self):
        return len(self.powers)

    def __iter__(self):
        return iter(zip(self.powers, self.intensities))


def hermitian_basis(d: int) -> list[np.ndarray]:
    """Orthonormal (Hilbert-Schmidt) Hermitian basis of the d x d matrices.

    First element is I/sqrt(d); the remaining d^2 - 1 elements are traceless
    (generalized Gell-Mann construction).
    """
    out = [np.eye(d, dtype=complex) / np.sqrt(d)]
    for k in range(d):
        for j in range(k):
            m = np.zeros((d, d), dtype=complex)
            m[j, k] = m[k, j] = 1 / np.sqrt(2)
            out.append(m)
            m = np.zeros((d, d), dtype=complex)
            m[j, k] = -1j / np.sqrt(2)
            m[k, j] = 1j / np.sqrt(2)
            out.append(m)
    for l in range(1, d):
        m = np.zeros((d, d), dtype=complex)
        m[np.arange(l), np.arange(l)] = 1.0
        m[l, l] = -float(l)
        out.append(m / np.sqrt(l * (l + 1)))
    return out


@dataclass(frozen=True)
class FitResult:
    isa: IntensiveStateOfAffairs
    residual: float
    informationally_complete: bool
    # residual of the unconstrained least-squares solution, before the
    # positive-semidefinite projection
    pre_projection_residual: float = field(default=0.0)


def fit_isa(table: GivTable, rank_tol: float = linalg.RANK_TOL) -> FitResult:
    """Recover a state of affairs from an intensity table by least squares.

    Solves min_rho sum_i (Tr(rho P_i) - t_i)^2 over Hermitian trace-1
    matrices (minimum-norm solution when underdetermined), then projects onto
    the positive-semidefinite cone by eigenvalue clipping and trace
    renormalization.  The report flags whether {P_i} together with the
    identity spans the Hermitian matrix space, i.e. whether the table is
    informationally complete.
    """
    if len(table) == 0:
        raise EmptyTable("cannot fit a state from an empty table")
    d = table.powers[0].dim
    for k, p in enumerate(table.powers):
        if p.dim != d:
            raise DimensionMismatch(f"table power {k} has dim {p.dim}, expected {d}")

    basis = hermitian_basis(d)
    traceless = basis[1:]
    targets = table.intensities

    a = np.empty((len(table), len(traceless)))
    b = np.empty(len(table))
    for i, p in enumerate(table.powers):
        for j, g in enumerate(traceless):
            a[i, j] = np.trace(p.matrix @ g).real
        b[i] = targets[i] - p.matrix.trace().real / d
    x, *_ = np.linalg.lstsq(a, b, rcond=None)

    rho = np.eye(d, dtype=complex) / d
    for coeff, g in zip(x, traceless):
        rho = rho + coeff * g
    pre_res = float(np.linalg.norm(a @ x - b))

    # PSD projection: clip negative eigenvalues, renormalize the trace.
    w, v = np.linalg.eigh(rho)
    w = np.clip(w, 0.0, None)
    w = w / w.sum()
    rho_psd = (v * w) @ v.conj().T
    isa = IntensiveStateOfAffairs(rho_psd)

    achieved = np.array([np.trace(rho_psd @ p.matrix).real for p in table.powers])
    residual = float(np.linalg.norm(achieved - targets))

    coords = np.array(
        [[np.trace(p.matrix @ g).real for g in basis] for p in table.powers]
        + [[np.trace(np.eye(d) @ g).real for g in basis]]
    )
    complete = linalg.rank(coords, rank_tol) == d * d

    return FitResult(
        isa=isa,
        residual=residual,
        informationally_complete=complete,
        pre_projection_residual=pre_res,
    )
