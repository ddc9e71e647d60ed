"""Dense Hermitian linear algebra for small quantum systems.

Every quantity downstream (channels, capacities, lemma checks) is computed on
plain ``numpy`` complex arrays.  The thin wrappers in this module carry the
validity invariants of density matrices, bipartite states and ensembles so that
the public API never silently accepts an unphysical input.

All entropies are in bits.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

# Tolerance shared by all validity checks.
ATOL = 1e-9
# Eigenvalues below this are treated as exact zeros in entropy sums.
EIG_CLIP = 1e-12


class InvalidStateError(ValueError):
    """Raised when a matrix violates a density-matrix invariant."""


def hermitize(matrix: np.ndarray, atol: float = ATOL) -> np.ndarray:
    """Return ``(M + M^dagger)/2``, refusing matrices that drift more than `atol`."""
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidStateError(f"expected a square matrix, got shape {m.shape}")
    drift = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    if drift > atol:
        raise InvalidStateError(f"matrix is not Hermitian (max drift {drift:.3e})")
    return 0.5 * (m + m.conj().T)


def entropy_of_spectrum(eigenvalues: np.ndarray) -> float:
    """Shannon entropy in bits of a spectrum, with ``0 log 0 = 0`` below `EIG_CLIP`."""
    lam = np.asarray(eigenvalues, dtype=float)
    lam = lam[lam > EIG_CLIP]
    return float(max(-np.sum(lam * np.log2(lam)), 0.0))


def matrix_entropy(matrix: np.ndarray) -> float:
    """Von Neumann entropy of a raw Hermitian array (no trace/positivity check)."""
    m = np.asarray(matrix)
    return entropy_of_spectrum(np.linalg.eigvalsh(0.5 * (m + m.conj().T)))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A trace-one positive semidefinite Hermitian operator.

    The stored matrix is the symmetrized input; construction fails with
    :class:`InvalidStateError` if the input is not Hermitian, not unit trace or
    has an eigenvalue below ``-1e-9``.
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = hermitize(self.matrix)
        tr = np.trace(m).real
        if abs(tr - 1.0) > ATOL:
            raise InvalidStateError(f"trace is {tr!r}, expected 1")
        lam_min = np.linalg.eigvalsh(m)[0]
        if lam_min < -ATOL:
            raise InvalidStateError(f"negative eigenvalue {lam_min:.3e}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_vector(cls, psi) -> "DensityMatrix":
        """Projector onto the normalized vector `psi`."""
        v = np.asarray(psi, dtype=complex).ravel()
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()))

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityMatrix":
        return cls(np.eye(dim, dtype=complex) / dim)

    @classmethod
    def basis(cls, dim: int, index: int) -> "DensityMatrix":
        m = np.zeros((dim, dim), dtype=complex)
        m[index, index] = 1.0
        return cls(m)

    def eigh(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigenvalues (ascending) and orthonormal eigenvectors as columns."""
        return np.linalg.eigh(self.matrix)

    def allclose(self, other: "DensityMatrix", atol: float = ATOL) -> bool:
        return self.dim == other.dim and bool(np.allclose(self.matrix, other.matrix, rtol=0, atol=atol))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)


@dataclass(frozen=True, eq=False)
class BipartiteState:
    """A state on ``A (dim_a) x B (dim_b)``, optionally with its pure-vector form."""

    dim_a: int
    dim_b: int
    state: DensityMatrix
    vector: np.ndarray | None = None

    def __post_init__(self):
        if self.state.dim != self.dim_a * self.dim_b:
            raise ValueError(
                f"state dimension {self.state.dim} != {self.dim_a} x {self.dim_b}"
            )
        if self.vector is not None:
            v = np.asarray(self.vector, dtype=complex).ravel()
            if v.size != self.state.dim:
                raise ValueError("pure-vector form has the wrong length")
            if not np.allclose(np.outer(v, v.conj()), self.state.matrix, rtol=0, atol=ATOL):
                raise ValueError("pure-vector form disagrees with the density matrix")
            v.setflags(write=False)
            object.__setattr__(self, "vector", v)

    @classmethod
    def from_vector(cls, psi, dim_a: int, dim_b: int) -> "BipartiteState":
        v = np.asarray(psi, dtype=complex).ravel()
        v = v / np.linalg.norm(v)
        return cls(dim_a, dim_b, DensityMatrix(np.outer(v, v.conj())), v)

    @classmethod
    def product(cls, a: DensityMatrix, b: DensityMatrix) -> "BipartiteState":
        return cls(a.dim, b.dim, tensor_product(a, b))

    @property
    def is_pure(self) -> bool:
        return self.vector is not None

    @property
    def matrix(self) -> np.ndarray:
        return self.state.matrix


@dataclass(frozen=True, eq=False)
class Ensemble:
    """A probabilistic family ``{rho_i, p_i}`` of same-dimension states."""

    states: tuple[DensityMatrix, ...]
    probs: np.ndarray = field(default=None)

    def __post_init__(self):
        states = tuple(self.states)
        if not states:
            raise ValueError("an ensemble needs at least one state")
        dims = {s.dim for s in states}
        if len(dims) != 1:
            raise ValueError(f"ensemble states have mixed dimensions {sorted(dims)}")
        if self.probs is None:
            probs = np.full(len(states), 1.0 / len(states))
        else:
            probs = np.asarray(self.probs, dtype=float).ravel().copy()
        if probs.size != len(states):
            raise ValueError("number of probabilities does not match number of states")
        if np.any(probs < 0):
            raise ValueError("probabilities must be nonnegative")
        if abs(probs.sum() - 1.0) > ATOL:
            raise ValueError(f"probabilities sum to {probs.sum()!r}, expected 1")
        probs.setflags(write=False)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "probs", probs)

    @property
    def dim(self) -> int:
        return self.states[0].dim

    def __len__(self) -> int:
        return len(self.states)

    def average(self) -> DensityMatrix:
        return DensityMatrix(sum(p * s.matrix for p, s in zip(self.probs, self.states)))


def tensor_product(a: DensityMatrix, b: DensityMatrix) -> DensityMatrix:
    return DensityMatrix(np.kron(a.matrix, b.matrix))


def partial_trace_array(matrix: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Reduce a matrix on ``prod(dims)`` to the subsystems listed in `keep`.

    `keep` is a sequence of subsystem indices; the kept factors stay in their
    original order.
    """
    dims = [int(d) for d in dims]
    n = len(dims)
    total = int(np.prod(dims))
    m = np.asarray(matrix)
    if m.shape != (total, total):
        raise ValueError(f"matrix shape {m.shape} does not match subsystem dims {dims}")
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= n for k in keep):
        raise ValueError(f"subsystem index out of range in {keep}")
    traced = [i for i in range(n) if i not in keep]
    t = m.reshape(dims + dims)
    # contract each traced subsystem's row and column index, highest first
    for count, i in enumerate(sorted(traced, reverse=True)):
        nleft = n - count
        t = np.trace(t, axis1=i, axis2=i + nleft)
    kept = int(np.prod([dims[k] for k in keep])) if keep else 1
    return t.reshape(kept, kept)


def partial_trace(s: BipartiteState, keep: Literal["first", "second"]) -> DensityMatrix:
    """Reduced state of a bipartite state on the kept subsystem."""
    if keep not in ("first", "second"):
        raise ValueError(f"keep must be 'first' or 'second', not {keep!r}")
    index = 0 if keep == "first" else 1
    return DensityMatrix(partial_trace_array(s.state.matrix, (s.dim_a, s.dim_b), [index]))


def von_neumann_entropy(rho: DensityMatrix) -> float:
    """``-sum(lambda log2 lambda)`` over the spectrum of `rho`, in bits."""
    return entropy_of_spectrum(np.linalg.eigvalsh(rho.matrix))


def purification_vector(matrix: np.ndarray) -> np.ndarray:
    """Canonical eigenbasis purification ``sum_j sqrt(l_j) |v_j>|v_j>`` of a raw matrix."""
    lam, vecs = np.linalg.eigh(matrix)
    lam = np.clip(lam, 0.0, None)
    # column j of vecs is |v_j>; psi[a, r] = sum_j sqrt(l_j) v_j[a] v_j[r]
    psi = (vecs * np.sqrt(lam)) @ vecs.T
    psi = psi.ravel()
    return psi / np.linalg.norm(psi)


def purify(rho: DensityMatrix) -> BipartiteState:
    """Canonical purification on ``dim x dim``; reference copy of the eigenbasis."""
    psi = purification_vector(rho.matrix)
    return BipartiteState.from_vector(psi, rho.dim, rho.dim)


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def random_density_matrix(dim: int, rank: int | None = None, seed=None) -> DensityMatrix:
    """Sample ``G G^dagger / tr`` for a complex Ginibre ``dim x rank`` factor ``G``.

    Deterministic for a fixed integer `seed`; a :class:`numpy.random.Generator`
    is also accepted and advanced in place.
    """
    rank = dim if rank is None else rank
    if dim < 1 or not 1 <= rank <= dim:
        raise ValueError(f"rank must satisfy 1 <= rank <= dim, got rank={rank}, dim={dim}")
    rng = _rng(seed)
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    m = g @ g.conj().T
    return DensityMatrix(m / np.trace(m).real)


def random_unitary(dim: int, seed=None) -> np.ndarray:
    """Haar-random unitary from the QR decomposition of a Ginibre matrix."""
    rng = _rng(seed)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_pure_state(dim: int, seed=None) -> DensityMatrix:
    return random_density_matrix(dim, 1, seed)
