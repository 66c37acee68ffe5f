"""Random objects for property testing and demos (all take a Generator)."""

from __future__ import annotations

import numpy as np

from .arrangements import DetectorBasis


def rand_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed d x d unitary (QR of a Ginibre matrix, phases fixed)."""
    g = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(g)
    phases = np.diagonal(r) / np.abs(np.diagonal(r))
    return q * phases


def rand_unit_vector(d: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


def rand_density(d: int, rng: np.random.Generator) -> np.ndarray:
    """Full-rank random density matrix (normalized Wishart)."""
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    rho = g @ g.conj().T
    return rho / rho.trace()


def rand_projector_family(
    d: int, rng: np.random.Generator, sizes: list[int] | None = None
) -> list[np.ndarray]:
    """Mutually orthogonal projectors built from a random unitary's columns.

    ``sizes`` partitions the d columns into ranks; defaults to d rank-1
    projectors.
    """
    if sizes is None:
        sizes = [1] * d
    if sum(sizes) > d:
        raise ValueError(f"ranks {sizes} exceed dimension {d}")
    u = rand_unitary(d, rng)
    out = []
    start = 0
    for s in sizes:
        cols = u[:, start:start + s]
        out.append(cols @ cols.conj().T)
        start += s
    return out


def rand_isometry(n: int, m: int, rng: np.random.Generator) -> np.ndarray:
    """n x m matrix with orthonormal columns (m <= n)."""
    if m > n:
        raise ValueError(f"cannot embed dimension {m} into {n}")
    return rand_unitary(n, rng)[:, :m]


def rand_product_basis(
    screen_dims: list[int], rng: np.random.Generator
) -> DetectorBasis:
    """Detector basis with an independent Haar unitary per screen."""
    return DetectorBasis([rand_unitary(d, rng) for d in screen_dims])
