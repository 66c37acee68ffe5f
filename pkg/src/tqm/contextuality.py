"""Binary versus intensive valuations on context families.

A context family is a set of unit vectors grouped into orthonormal contexts.
A binary valuation must give every context exactly one vector valued 1 and
the rest 0, with shared vectors valued once globally; Kochen-Specker
families admit no such valuation, which an exhaustive backtracking search
certifies.  An intensive valuation instead assigns each vector's rank-1
power its intensity under a state of affairs, and every context's
intensities sum to 1 by additivity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import linalg
from .errors import DimensionMismatch
from .states import GivTable, IntensiveStateOfAffairs, Power, intensity

PHASE_DEDUP_TOL = 1e-9


class ContextFamily:
    """Unit vectors plus contexts (index tuples forming orthonormal bases).

    The constructor checks structure only (vector shapes, index ranges,
    context sizes); geometric validity is reported by
    :func:`validate_context_family` so that defective families can still be
    constructed and diagnosed.
    """

    def __init__(self, dim: int, vectors: Sequence, contexts: Sequence[Sequence[int]]):
        self.dim = int(dim)
        vecs = []
        for i, v in enumerate(vectors):
            arr = np.asarray(v, dtype=complex)
            if arr.shape != (self.dim,):
                raise ValueError(
                    f"vector {i} has shape {arr.shape}, expected ({self.dim},)"
                )
            arr = arr.copy()
            arr.setflags(write=False)
            vecs.append(arr)
        self.vectors = tuple(vecs)
        ctxs = []
        for c, ctx in enumerate(contexts):
            idx = tuple(int(i) for i in ctx)
            if len(idx) != self.dim:
                raise ValueError(
                    f"context {c} has {len(idx)} members, expected {self.dim}"
                )
            for i in idx:
                if i < 0 or i >= len(self.vectors):
                    raise ValueError(f"context {c} references unknown vector {i}")
            if len(set(idx)) != len(idx):
                raise ValueError(f"context {c} repeats a vector index")
            ctxs.append(idx)
        self.contexts = tuple(ctxs)

    def __repr__(self):
        return (
            f"ContextFamily(dim={self.dim}, vectors={len(self.vectors)}, "
            f"contexts={len(self.contexts)})"
        )


@dataclass(frozen=True)
class FamilyValidation:
    ok: bool
    violations: tuple[str, ...]


def validate_context_family(
    family: ContextFamily, tol: float = linalg.DEFAULT_TOL
) -> FamilyValidation:
    """Check normalization, per-context orthogonality and phase-deduplication."""
    violations = []
    for i, v in enumerate(family.vectors):
        norm = np.linalg.norm(v)
        if abs(norm - 1.0) > tol:
            violations.append(f"vector {i} has norm {norm!r}")
    for c, ctx in enumerate(family.contexts):
        for a in range(len(ctx)):
            for b in range(a + 1, len(ctx)):
                ip = abs(np.vdot(family.vectors[ctx[a]], family.vectors[ctx[b]]))
                if ip > tol:
                    violations.append(
                        f"context {c}: vectors {ctx[a]} and {ctx[b]} have "
                        f"|<u,v>| = {ip:.3e}"
                    )
    for i in range(len(family.vectors)):
        for j in range(i + 1, len(family.vectors)):
            ip = abs(np.vdot(family.vectors[i], family.vectors[j]))
            if ip >= 1.0 - PHASE_DEDUP_TOL:
                violations.append(
                    f"vectors {i} and {j} coincide up to phase (|<u,v>| = {ip:.12f})"
                )
    return FamilyValidation(ok=not violations, violations=tuple(violations))


@dataclass(frozen=True)
class BinaryValuation:
    """Total {0,1} assignment over a family's vectors."""

    assignment: dict[int, int]

    def value(self, i: int) -> int:
        return self.assignment[i]


@dataclass(frozen=True)
class ExhaustionCertificate:
    """Witness that the backtracking search exhausted every assignment."""

    nodes_explored: int
    num_vectors: int
    num_contexts: int


def _search(family: ContextFamily, find_all: bool):
    """Depth-first search over contexts with forward-checking.

    Assigning 1 to a vector forces 0 on all of its context-mates across the
    whole family; a context whose members are all 0 is a dead end.  Node
    count is the number of 1-assignments tried, deterministic for a fixed
    input ordering.
    """
    nvec = len(family.vectors)
    containing: list[list[int]] = [[] for _ in range(nvec)]
    for c, ctx in enumerate(family.contexts):
        for i in ctx:
            containing[i].append(c)

    value: list[int | None] = [None] * nvec
    nodes = 0
    solutions: list[BinaryValuation] = []

    def snapshot() -> BinaryValuation:
        return BinaryValuation({i: (value[i] or 0) for i in range(nvec)})

    def assign_one(i: int, trail: list[int]) -> bool:
        value[i] = 1
        trail.append(i)
        for c in containing[i]:
            for j in family.contexts[c]:
                if j == i:
                    continue
                if value[j] == 1:
                    return False
                if value[j] is None:
                    value[j] = 0
                    trail.append(j)
        return True

    def dfs(ci: int) -> bool:
        nonlocal nodes
        if ci == len(family.contexts):
            solutions.append(snapshot())
            return not find_all
        ctx = family.contexts[ci]
        ones = [i for i in ctx if value[i] == 1]
        if len(ones) == 1:
            return dfs(ci + 1)
        if len(ones) > 1:
            return False
        for i in ctx:
            if value[i] == 0:
                continue
            nodes += 1
            trail: list[int] = []
            ok = assign_one(i, trail)
            if ok and dfs(ci + 1):
                return True
            for j in trail:
                value[j] = None
        return False

    dfs(0)
    return solutions, nodes


def find_binary_valuation(
    family: ContextFamily,
) -> BinaryValuation | ExhaustionCertificate:
    """First satisfying valuation, or an exhaustion certificate if none exists."""
    solutions, nodes = _search(family, find_all=False)
    if solutions:
        return solutions[0]
    return ExhaustionCertificate(
        nodes_explored=nodes,
        num_vectors=len(family.vectors),
        num_contexts=len(family.contexts),
    )


def enumerate_binary_valuations(family: ContextFamily) -> list[BinaryValuation]:
    """All satisfying valuations, in deterministic search order."""
    solutions, _ = _search(family, find_all=True)
    return solutions


def intensive_valuation_table(
    family: ContextFamily, isa: IntensiveStateOfAffairs
) -> GivTable:
    """Intensity of every vector's rank-1 power under the given state."""
    if family.dim != isa.dim:
        raise DimensionMismatch(f"family dim {family.dim} != state dim {isa.dim}")
    powers = [
        Power(linalg.nu_embed(v), label=f"v{i}") for i, v in enumerate(family.vectors)
    ]
    vals = [intensity(isa, p) for p in powers]
    return GivTable(powers, vals)


@dataclass(frozen=True)
class ContextualityReport:
    binary_exists: bool
    valuation: BinaryValuation | None
    certificate: ExhaustionCertificate | None
    table: GivTable
    context_sums: tuple[float, ...]
    max_sum_deviation: float
    intensive_consistent: bool
    vacuous: bool
    tol: float


def contextuality_report(
    family: ContextFamily,
    isa: IntensiveStateOfAffairs,
    tol: float = 1e-9,
) -> ContextualityReport:
    """Contrast the binary-valuation search with the intensive valuation."""
    outcome = find_binary_valuation(family)
    table = intensive_valuation_table(family, isa)
    vals = table.intensities
    sums = tuple(float(sum(vals[i] for i in ctx)) for ctx in family.contexts)
    max_dev = max((abs(s - 1.0) for s in sums), default=0.0)
    found = isinstance(outcome, BinaryValuation)
    return ContextualityReport(
        binary_exists=found,
        valuation=outcome if found else None,
        certificate=None if found else outcome,
        table=table,
        context_sums=sums,
        max_sum_deviation=max_dev,
        intensive_consistent=max_dev <= tol,
        vacuous=not family.contexts,
        tol=tol,
    )


# The standard 18-vector, 9-context Kochen-Specker family in dimension 4
# (Cabello-Estebaranz-Garcia-Alcaine).  Components lie in {0, +-1} before
# normalization; every vector sits in exactly two contexts, so a parity
# argument already rules out a binary valuation and the search certifies it.
_KS18_RAYS = [
    (0, 0, 0, 1),   # 0
    (0, 0, 1, 0),   # 1
    (1, 1, 0, 0),   # 2
    (1, -1, 0, 0),  # 3
    (0, 1, 0, 0),   # 4
    (1, 0, 1, 0),   # 5
    (1, 0, -1, 0),  # 6
    (1, -1, 1, -1),  # 7
    (1, -1, -1, 1),  # 8
    (0, 0, 1, 1),   # 9
    (1, 1, 1, 1),   # 10
    (0, 1, 0, -1),  # 11
    (1, 0, 0, 1),   # 12
    (1, 0, 0, -1),  # 13
    (0, 1, -1, 0),  # 14
    (1, 1, -1, 1),  # 15
    (1, 1, 1, -1),  # 16
    (-1, 1, 1, 1),  # 17
]

_KS18_CONTEXTS = [
    (0, 1, 2, 3),
    (0, 4, 5, 6),
    (7, 8, 2, 9),
    (7, 10, 6, 11),
    (1, 4, 12, 13),
    (8, 10, 13, 14),
    (15, 16, 3, 9),
    (15, 17, 5, 11),
    (16, 17, 12, 14),
]


def ks18_family() -> ContextFamily:
    """The 18-vector, 9-context dimension-4 Kochen-Specker family."""
    vectors = [np.asarray(r, dtype=complex) / np.linalg.norm(r) for r in _KS18_RAYS]
    return ContextFamily(4, vectors, _KS18_CONTEXTS)
