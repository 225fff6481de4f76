"""Finite-dimensional Hilbert-space substrate.

States, Hermitian operators, spectral decompositions, and unitary time
evolution. Everything is immutable after construction and safe to share
across threads; operations are pure functions of their arguments.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "StateVector",
    "Hamiltonian",
    "SpectralDecomposition",
    "UnitaryPropagator",
    "spectral_decompose",
    "propagator",
    "evolve",
    "to_energy_coefficients",
    "random_state",
    "random_hamiltonian",
    "random_unitary",
    "NORM_SQ_TOL",
    "UNITARY_TOL",
    "HERMITIAN_RTOL",
]

NORM_SQ_TOL = 1e-12
UNITARY_TOL = 1e-10
HERMITIAN_RTOL = 1e-12


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


def _as_complex_vector(values) -> np.ndarray:
    arr = np.array(values, dtype=np.complex128)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"expected a nonempty 1-d complex vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("vector contains non-finite entries")
    return arr


def _as_complex_matrix(values) -> np.ndarray:
    arr = np.array(values, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise ValueError(f"expected a square complex matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix contains non-finite entries")
    return arr


class StateVector:
    """Normalized state with complex amplitudes.

    Construction accepts vectors whose squared norm is within ``NORM_SQ_TOL``
    of 1 and snaps them exactly onto the unit sphere; anything further off is
    rejected. Use :meth:`normalized` to project an arbitrary nonzero vector.
    """

    __slots__ = ("_amplitudes",)

    def __init__(self, amplitudes) -> None:
        arr = _as_complex_vector(amplitudes)
        norm_sq = float(np.sum(np.abs(arr) ** 2))
        if abs(norm_sq - 1.0) > NORM_SQ_TOL:
            raise ValueError(
                f"state is not normalized: sum of |a_k|^2 deviates from 1 by "
                f"{abs(norm_sq - 1.0):.3e} (tolerance {NORM_SQ_TOL:.0e}); "
                f"use StateVector.normalized() to project first"
            )
        self._amplitudes = _freeze(arr / np.sqrt(norm_sq))

    @classmethod
    def normalized(cls, amplitudes) -> "StateVector":
        """Project an arbitrary nonzero vector onto the unit sphere."""
        arr = _as_complex_vector(amplitudes)
        norm = float(np.linalg.norm(arr))
        if norm == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return cls(arr / norm)

    @property
    def amplitudes(self) -> np.ndarray:
        return self._amplitudes

    @property
    def dim(self) -> int:
        return int(self._amplitudes.size)

    def __repr__(self) -> str:
        return f"StateVector(dim={self.dim})"


class Hamiltonian:
    """Hermitian operator together with the action scale ``hbar``.

    Hermiticity is enforced at construction: max |M - M^dag| must not exceed
    ``HERMITIAN_RTOL`` times max |M|.
    """

    __slots__ = ("_matrix", "_hbar")

    def __init__(self, matrix, hbar: float = 1.0) -> None:
        arr = _as_complex_matrix(matrix)
        hbar = float(hbar)
        if not (np.isfinite(hbar) and hbar > 0.0):
            raise ValueError(f"hbar must be a positive finite real, got {hbar!r}")
        asymmetry = float(np.abs(arr - arr.conj().T).max())
        scale = float(np.abs(arr).max())
        if asymmetry > HERMITIAN_RTOL * scale:
            raise ValueError(
                f"matrix is not Hermitian: max |M_jk - conj(M_kj)| = {asymmetry:.3e} "
                f"exceeds {HERMITIAN_RTOL:.0e} * max|M| = {HERMITIAN_RTOL * scale:.3e}"
            )
        self._matrix = _freeze(arr)
        self._hbar = hbar

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @property
    def hbar(self) -> float:
        return self._hbar

    @property
    def dim(self) -> int:
        return int(self._matrix.shape[0])

    def __repr__(self) -> str:
        return f"Hamiltonian(dim={self.dim}, hbar={self._hbar!r})"


class SpectralDecomposition:
    """Eigensystem of a Hermitian operator.

    ``energies`` are real and ascending; ``eigenvectors`` is unitary with
    the eigenvector of ``energies[j]`` in column j.
    """

    __slots__ = ("_energies", "_eigenvectors")

    def __init__(self, energies, eigenvectors) -> None:
        e = np.array(energies, dtype=np.float64)
        v = _as_complex_matrix(eigenvectors)
        if e.ndim != 1 or e.size != v.shape[0]:
            raise ValueError(
                f"energies shape {e.shape} does not match eigenvector matrix {v.shape}"
            )
        if not np.all(np.isfinite(e)):
            raise ValueError("energies contain non-finite entries")
        if np.any(np.diff(e) < 0.0):
            raise ValueError("energies must be sorted ascending")
        drift = float(np.abs(v.conj().T @ v - np.eye(v.shape[0])).max())
        if drift > UNITARY_TOL:
            raise ValueError(
                f"eigenvector matrix is not unitary: max |V^dag V - I| = {drift:.3e}"
            )
        self._energies = _freeze(e)
        self._eigenvectors = _freeze(v)

    @property
    def energies(self) -> np.ndarray:
        return self._energies

    @property
    def eigenvectors(self) -> np.ndarray:
        return self._eigenvectors

    @property
    def dim(self) -> int:
        return int(self._energies.size)

    def __repr__(self) -> str:
        return f"SpectralDecomposition(dim={self.dim})"


class UnitaryPropagator:
    """Unitary evolution operator for a fixed duration."""

    __slots__ = ("_matrix", "_duration")

    def __init__(self, matrix, duration: float) -> None:
        arr = _as_complex_matrix(matrix)
        duration = float(duration)
        if not np.isfinite(duration):
            raise ValueError(f"duration must be finite, got {duration!r}")
        drift = float(np.abs(arr.conj().T @ arr - np.eye(arr.shape[0])).max())
        if drift > UNITARY_TOL:
            raise ValueError(f"matrix is not unitary: max |U^dag U - I| = {drift:.3e}")
        self._matrix = _freeze(arr)
        self._duration = duration

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @property
    def duration(self) -> float:
        return self._duration

    @property
    def dim(self) -> int:
        return int(self._matrix.shape[0])

    def __repr__(self) -> str:
        return f"UnitaryPropagator(dim={self.dim}, duration={self._duration!r})"


def spectral_decompose(hamiltonian: Hamiltonian) -> SpectralDecomposition:
    """Diagonalize a Hermitian operator.

    Energies come back ascending. Column phases are canonicalized (the
    largest-magnitude entry of each eigenvector is rotated onto the positive
    real axis) and columns belonging to an exactly degenerate eigenvalue are
    ordered lexicographically by their entries, so repeated runs on the same
    matrix give identical output. For degenerate operators any orthonormal
    basis of the degenerate subspace is equally valid, so comparisons should
    go through projectors rather than individual eigenvectors.
    """
    energies, vectors = np.linalg.eigh(hamiltonian.matrix)
    vectors = vectors.copy()
    for j in range(vectors.shape[1]):
        column = vectors[:, j]
        lead = int(np.argmax(np.abs(column)))
        phase = column[lead] / abs(column[lead])
        vectors[:, j] = column * np.conj(phase)

    def column_key(j: int):
        parts = np.column_stack((vectors[:, j].real, vectors[:, j].imag))
        return (float(energies[j]), tuple(parts.ravel()))

    order = sorted(range(energies.size), key=column_key)
    return SpectralDecomposition(energies[order], vectors[:, order])


def propagator(hamiltonian: Hamiltonian, t: float) -> UnitaryPropagator:
    """Evolution operator for duration ``t``, built from the eigensystem."""
    t = float(t)
    if not np.isfinite(t):
        raise ValueError(f"t must be finite, got {t!r}")
    decomp = spectral_decompose(hamiltonian)
    phases = np.exp(-1j * decomp.energies * (t / hamiltonian.hbar))
    matrix = (decomp.eigenvectors * phases) @ decomp.eigenvectors.conj().T
    return UnitaryPropagator(matrix, t)


def evolve(hamiltonian: Hamiltonian, psi: StateVector, t: float) -> StateVector:
    """Evolve ``psi`` for duration ``t`` under the given operator."""
    if psi.dim != hamiltonian.dim:
        raise ValueError(
            f"dimension mismatch: state dim {psi.dim} vs operator dim {hamiltonian.dim}"
        )
    return StateVector(propagator(hamiltonian, t).matrix @ psi.amplitudes)


def to_energy_coefficients(psi: StateVector, decomposition: SpectralDecomposition) -> np.ndarray:
    """Coefficients of ``psi`` in the eigenbasis (column j gives a_j)."""
    if psi.dim != decomposition.dim:
        raise ValueError(
            f"dimension mismatch: state dim {psi.dim} vs decomposition dim {decomposition.dim}"
        )
    return decomposition.eigenvectors.conj().T @ psi.amplitudes


def random_state(dim: int, seed) -> StateVector:
    """Haar-uniform random state; deterministic for a fixed seed."""
    dim = int(dim)
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return StateVector.normalized(raw)


def random_hamiltonian(dim: int, seed, energy_scale: float = 1.0) -> Hamiltonian:
    """Random Hermitian operator (A + A^dag)/2 from a seeded Gaussian draw."""
    dim = int(dim)
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    energy_scale = float(energy_scale)
    if not (np.isfinite(energy_scale) and energy_scale > 0.0):
        raise ValueError(f"energy_scale must be positive and finite, got {energy_scale!r}")
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return Hamiltonian(energy_scale * 0.5 * (a + a.conj().T))


def random_unitary(dim: int, seed) -> np.ndarray:
    """Haar-distributed unitary from the QR factorization of a seeded Gaussian matrix."""
    dim = int(dim)
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(a)
    d = np.diagonal(r)
    return q * (d / np.abs(d))
