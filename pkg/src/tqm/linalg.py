"""Dense complex linear algebra over multi-screen index spaces.

Matrices, tensors and vectors are plain ``numpy`` arrays of dtype
``complex128``.  Multi-index axes flatten row-major with screen 1 as the most
significant index, so ``np.kron`` and C-order ``reshape`` agree everywhere
with the detector-index convention used across the package.  Screen and
factor indices in public signatures are 1-based, matching the product-basis
labels |k1...kn> with 1 <= kj <= ij.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionMismatch, NotNormalized

# Default tolerance for normalization and operator predicates.
DEFAULT_TOL = 1e-9

# Singular values above this threshold count toward the rank.
RANK_TOL = 1e-8


def as_matrix(a) -> np.ndarray:
    """Coerce to a finite 2-D complex array."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise ValueError(f"expected a matrix, got array of ndim {m.ndim}")
    if not np.all(np.isfinite(m.real)) or not np.all(np.isfinite(m.imag)):
        raise ValueError("matrix entries must be finite")
    return m


def as_square(a) -> np.ndarray:
    m = as_matrix(a)
    if m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    return m


def as_unit_vector(v, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Coerce to a 1-D complex vector and check unit norm within ``tol``."""
    x = np.asarray(v, dtype=complex)
    if x.ndim != 1:
        raise ValueError(f"expected a vector, got array of ndim {x.ndim}")
    if not np.all(np.isfinite(x.real)) or not np.all(np.isfinite(x.imag)):
        raise ValueError("vector entries must be finite")
    norm = np.linalg.norm(x)
    if abs(norm - 1.0) > tol:
        raise NotNormalized(f"vector norm {norm!r} deviates from 1 beyond {tol}")
    return x


def frobenius(a) -> float:
    return float(np.linalg.norm(np.asarray(a, dtype=complex)))


def dagger(a) -> np.ndarray:
    return np.asarray(a, dtype=complex).conj().T


def kron(a, b) -> np.ndarray:
    """Kronecker product; left factor owns the most significant index."""
    return np.kron(as_matrix(a), as_matrix(b))


def kron_all(mats: Iterable) -> np.ndarray:
    """Kronecker product of a sequence, left to right."""
    out = None
    for m in mats:
        out = as_matrix(m) if out is None else np.kron(out, as_matrix(m))
    if out is None:
        raise ValueError("kron_all needs at least one factor")
    return out


def partial_trace(m, factor_dims: Sequence[int], traced_factors) -> np.ndarray:
    """Trace out the given factors (1-based) of a matrix on a product space.

    ``factor_dims`` lists the per-factor dimensions whose product must equal
    the matrix dimension.  The result is a matrix over the remaining factors
    in their original order; tracing every factor yields the 1x1 matrix
    holding the full trace.
    """
    mat = as_square(m)
    dims = tuple(int(d) for d in factor_dims)
    if any(d < 1 for d in dims):
        raise DimensionMismatch(f"factor dimensions must be positive, got {dims}")
    total = int(np.prod(dims))
    if total != mat.shape[0]:
        raise DimensionMismatch(
            f"factor dims {dims} multiply to {total}, matrix has dimension {mat.shape[0]}"
        )
    traced = sorted(set(int(f) for f in traced_factors))
    if any(f < 1 or f > len(dims) for f in traced):
        raise DimensionMismatch(
            f"traced factors {traced} outside 1..{len(dims)}"
        )

    t = mat.reshape(dims + dims)
    nf = len(dims)
    # Trace highest factor first so remaining axis positions stay valid.
    for f in reversed(traced):
        t = np.trace(t, axis1=f - 1, axis2=f - 1 + nf)
        nf -= 1
    kept = int(np.prod([d for i, d in enumerate(dims, start=1) if i not in traced]))
    return np.asarray(t, dtype=complex).reshape(kept, kept)


def commutator_norm(p, q) -> float:
    """Frobenius norm of pq - qp; zero iff the operators commute."""
    a = as_square(p)
    b = as_square(q)
    if a.shape != b.shape:
        raise DimensionMismatch(f"operand shapes differ: {a.shape} vs {b.shape}")
    return frobenius(a @ b - b @ a)


def is_projector(p, tol: float = DEFAULT_TOL) -> bool:
    """True iff p is idempotent and Hermitian within ``tol`` (Frobenius)."""
    m = as_square(p)
    return frobenius(m @ m - m) <= tol and frobenius(m - dagger(m)) <= tol


def is_unitary(u, tol: float = DEFAULT_TOL) -> bool:
    m = as_square(u)
    eye = np.eye(m.shape[0])
    return frobenius(dagger(m) @ m - eye) <= tol


def nu_embed(x, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Embed a unit vector as its rank-1 projector |x><x|.

    The embedding identifies vectors up to global phase and its image is
    exactly the rank-1 projectors, a strict subset of the full matrix space.
    """
    v = as_unit_vector(x, tol)
    return np.outer(v, v.conj())


def rank(a, tol: float = RANK_TOL) -> int:
    """Rank by counting singular values above ``tol``."""
    s = np.linalg.svd(as_matrix(a), compute_uv=False)
    return int(np.count_nonzero(s > tol))
