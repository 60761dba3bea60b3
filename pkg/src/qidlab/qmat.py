"""Complex-matrix substrate: states, composite systems, norms, spectra, purification.

Everything is backed by dense ``numpy`` arrays.  :class:`DensityOperator` and
:class:`PureState` are thin validated wrappers; the free functions accept
either a wrapper or a raw array, and return the same kind they were given.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

TOL_HERM = 1e-8
TOL_PSD = 1e-8
TOL_TR = 1e-8

ArrayLike = Union[np.ndarray, "DensityOperator", "PureState", Sequence]


class DimensionError(ValueError):
    """Raised when operand dimensions are incompatible."""


class StateError(ValueError):
    """Raised when a matrix fails the density-operator invariants."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Positive, unit-trace complex matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
            raise DimensionError(f"density operator must be square, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise StateError("non-finite entries")
        herm = np.max(np.abs(m - m.conj().T))
        if herm > TOL_HERM:
            raise StateError(f"not Hermitian (residual {herm:.3g})")
        m = (m + m.conj().T) / 2
        tr = np.trace(m).real
        if abs(tr - 1) > TOL_TR:
            raise StateError(f"trace {tr:.12g} != 1")
        lam_min = np.linalg.eigvalsh(m)[0]
        if lam_min < -TOL_PSD:
            raise StateError(f"not positive (min eigenvalue {lam_min:.3g})")
        object.__setattr__(self, "matrix", _frozen(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)

    def eigvals(self) -> np.ndarray:
        """Eigenvalues, ascending, with small negative drift clamped to zero."""
        lam = np.linalg.eigvalsh(self.matrix)
        return np.where(lam < 0, 0.0, lam)

    def to_json(self):
        return matrix_to_json(self.matrix)

    @classmethod
    def from_json(cls, data) -> "DensityOperator":
        return cls(matrix_from_json(data))


@dataclass(frozen=True, eq=False)
class PureState:
    """Unit vector; ``projector()`` gives the rank-one density operator."""

    amplitudes: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if v.size == 0 or not np.all(np.isfinite(v)):
            raise StateError("amplitudes must be a nonempty finite vector")
        norm = np.vdot(v, v).real
        if abs(norm - 1) > TOL_TR:
            raise StateError(f"squared norm {norm:.12g} != 1")
        object.__setattr__(self, "amplitudes", _frozen(v))

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def projector(self) -> DensityOperator:
        return DensityOperator(np.outer(self.amplitudes, self.amplitudes.conj()))

    def __array__(self, dtype=None, copy=None):
        return self.amplitudes if dtype is None else self.amplitudes.astype(dtype)


def as_matrix(x: ArrayLike) -> np.ndarray:
    """Return ``x`` as a square complex array; pure states become projectors."""
    if isinstance(x, DensityOperator):
        return x.matrix
    if isinstance(x, PureState):
        return x.projector().matrix
    a = np.asarray(x, dtype=complex)
    if a.ndim == 1:
        return np.outer(a, a.conj())
    return a


def ket(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1
    return v


def maximally_mixed(dim: int) -> DensityOperator:
    return DensityOperator(np.eye(dim) / dim)


def maximally_entangled(dim: int) -> PureState:
    """``sum_i |ii> / sqrt(dim)``."""
    return PureState(np.eye(dim).reshape(-1) / np.sqrt(dim))


def is_hermitian(m: np.ndarray, tol: float = TOL_HERM) -> bool:
    return bool(np.max(np.abs(m - m.conj().T), initial=0.0) <= tol)


def hermitian_eig(m: np.ndarray):
    """Eigen-decomposition of the Hermitian part of ``m``, ascending."""
    m = np.asarray(m, dtype=complex)
    return np.linalg.eigh((m + m.conj().T) / 2)


def is_operator_interval(m: np.ndarray, tol: float = TOL_PSD) -> bool:
    """True iff ``0 <= m <= 1`` (and Hermitian) within ``tol``."""
    m = np.asarray(m, dtype=complex)
    if not is_hermitian(m, tol):
        return False
    lam = np.linalg.eigvalsh((m + m.conj().T) / 2)
    return bool(lam[0] >= -tol and lam[-1] <= 1 + tol)


def partial_trace(state: ArrayLike, keep, dims: Sequence[int]):
    """Trace out one factor of a bipartite operator on ``A (x) B``.

    ``keep`` is ``0``/``"A"`` to keep the first factor or ``1``/``"B"`` to keep
    the second.  Works for any (not necessarily positive) operator, so it is
    linear in its input.  Returns a :class:`DensityOperator` when given one.
    """
    m = as_matrix(state)
    da, db = (int(d) for d in dims)
    if m.shape != (da * db, da * db):
        raise DimensionError(f"operator of shape {m.shape} is not on a {da}x{db} system")
    keep = {"A": 0, "B": 1}.get(keep, keep)
    t = m.reshape(da, db, da, db)
    if keep == 0:
        out = np.einsum("ijkj->ik", t)
    elif keep == 1:
        out = np.einsum("ijil->jl", t)
    else:
        raise ValueError(f"keep must be 0/'A' or 1/'B', got {keep!r}")
    if isinstance(state, (DensityOperator, PureState)):
        return DensityOperator(out)
    return out


def trace_norm(m: np.ndarray) -> float:
    """Schatten-1 norm of a Hermitian matrix."""
    return float(np.sum(np.abs(np.linalg.eigvalsh(np.asarray(m)))))


def trace_distance(rho: ArrayLike, sigma: ArrayLike) -> float:
    """``||rho - sigma||_1 / 2`` from the spectrum of the difference."""
    a, b = as_matrix(rho), as_matrix(sigma)
    if a.shape != b.shape:
        raise DimensionError(f"shapes {a.shape} and {b.shape} differ")
    d = a - b
    return 0.5 * trace_norm((d + d.conj().T) / 2)


def _canonical_phase(v: np.ndarray) -> np.ndarray:
    # first entry with non-negligible magnitude made real positive
    idx = int(np.argmax(np.abs(v) > 1e-10))
    if abs(v[idx]) == 0:
        return v
    return v * (abs(v[idx]) / v[idx])


def sorted_eigensystem(m: np.ndarray):
    """Eigenpairs in descending eigenvalue order, ties broken lexicographically.

    Eigenvectors are phase-fixed first so that the ordering is reproducible.
    Within a tie the lexicographically larger vector comes first, so a
    degenerate diagonal matrix keeps the computational basis in natural order.
    """
    lam, vecs = hermitian_eig(m)
    cols = [_canonical_phase(vecs[:, i]) for i in range(len(lam))]

    def key(i):
        # eigenvalues rounded so that numerically-degenerate pairs tie
        v = cols[i]
        return (-round(float(lam[i]), 10),) + tuple(
            x for z in v for x in (-round(z.real, 10), -round(z.imag, 10))
        )

    order = sorted(range(len(lam)), key=key)
    return lam[order], np.column_stack([cols[i] for i in order])


def purify(rho: ArrayLike) -> PureState:
    """Purification ``sum_i sqrt(l_i) |e_i>_A |i>_A'`` with ``|A'| = |A|``.

    The purifying factor is the second tensor factor, so tracing it out
    (``partial_trace(..., keep=0, dims=(d, d))``) returns ``rho``.
    """
    if not isinstance(rho, DensityOperator):
        rho = DensityOperator(as_matrix(rho))
    d = rho.dim
    lam, vecs = sorted_eigensystem(rho.matrix)
    lam = np.where(lam < 0, 0.0, lam)
    psi = np.zeros(d * d, dtype=complex)
    for i in range(d):
        psi += np.sqrt(lam[i]) * np.kron(vecs[:, i], ket(i, d))
    psi /= np.linalg.norm(psi)
    return PureState(psi)


# -- random objects ---------------------------------------------------------

def random_pure_vector(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_pure(dim: int, rng: np.random.Generator) -> PureState:
    """Haar-random pure state."""
    return PureState(random_pure_vector(dim, rng))


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> DensityOperator:
    """Random state from the induced (Ginibre) measure of the given rank."""
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    m = g @ g.conj().T
    return DensityOperator(m / np.trace(m).real)


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_isometry(dim_out: int, dim_in: int, rng: np.random.Generator) -> np.ndarray:
    if dim_out < dim_in:
        raise DimensionError("isometry needs dim_out >= dim_in")
    return haar_unitary(dim_out, rng)[:, :dim_in]


def rng_stream(seed: int, *index: int) -> np.random.Generator:
    """Independent generator for ``(seed, index...)``; the same key gives the same stream."""
    return np.random.default_rng(np.random.SeedSequence([int(seed) & (2**64 - 1), *index]))


# -- serialization ----------------------------------------------------------

def matrix_to_json(m) -> list:
    """Nested rows of ``[re, im]`` pairs."""
    a = np.atleast_2d(np.asarray(m, dtype=complex))
    return [[[float(z.real), float(z.imag)] for z in row] for row in a]


def matrix_from_json(data) -> np.ndarray:
    a = np.asarray(data, dtype=float)
    if a.ndim != 3 or a.shape[-1] != 2:
        raise ValueError("matrix JSON must be rows of [re, im] pairs")
    out = a[..., 0] + 1j * a[..., 1]
    if not np.all(np.isfinite(out)):
        raise ValueError("non-finite matrix entry")
    return out
