import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qidlab import qmat
from qidlab.qmat import (DensityOperator, DimensionError, PureState, StateError, ket,
                         maximally_entangled, maximally_mixed, partial_trace, purify,
                         random_density, random_pure, rng_stream, trace_distance)

seeds = st.integers(0, 2**32 - 1)
dims = st.integers(2, 8)


def close(a, b, tol=1e-9):
    return np.max(np.abs(np.asarray(a) - np.asarray(b))) <= tol


# -- construction ---------------------------------------------------------

def test_density_operator_rejects_invalid():
    with pytest.raises(StateError):
        DensityOperator(np.diag([0.6, 0.6]))
    with pytest.raises(StateError):
        DensityOperator(np.array([[0.5, 1], [0, 0.5]]))
    with pytest.raises(StateError):
        DensityOperator(np.diag([1.5, -0.5]))
    with pytest.raises(StateError):
        DensityOperator(np.array([[np.nan, 0], [0, 1]]))


def test_pure_state_normalization():
    with pytest.raises(StateError):
        PureState(np.array([1.0, 1.0]))
    assert PureState(np.array([0.6, 0.8j])).dim == 2


def test_density_json_round_trip(rng):
    rho = random_density(3, rng)
    back = DensityOperator.from_json(json.loads(json.dumps(rho.to_json())))
    assert close(back.matrix, rho.matrix, 0)


# -- partial trace ----------------------------------------------------------

def test_partial_trace_bell_state():
    assert close(partial_trace(maximally_entangled(2), "A", (2, 2)).matrix, np.eye(2) / 2)


def test_partial_trace_product(rng):
    rho, sigma = random_density(2, rng), random_density(3, rng)
    prod = DensityOperator(np.kron(rho.matrix, sigma.matrix))
    assert close(partial_trace(prod, "A", (2, 3)).matrix, rho.matrix)
    assert close(partial_trace(prod, "B", (2, 3)).matrix, sigma.matrix)


def test_partial_trace_classical_mixture():
    m = 0.75 * np.outer(ket(0, 4), ket(0, 4)) + 0.25 * np.outer(ket(3, 4), ket(3, 4))
    assert close(partial_trace(DensityOperator(m), "B", (2, 2)).matrix, np.diag([0.75, 0.25]))


def test_partial_trace_dimension_mismatch():
    with pytest.raises(DimensionError):
        partial_trace(maximally_mixed(4), 0, (2, 3))


@given(seeds)
def test_partial_trace_is_linear(seed):
    r = rng_stream(seed)
    a = r.normal(size=(6, 6)) + 1j * r.normal(size=(6, 6))
    b = r.normal(size=(6, 6)) + 1j * r.normal(size=(6, 6))
    c = complex(*r.normal(size=2))
    lhs = partial_trace(a + c * b, 0, (2, 3))
    rhs = partial_trace(a, 0, (2, 3)) + c * partial_trace(b, 0, (2, 3))
    assert close(lhs, rhs, 1e-12)


# -- trace distance ---------------------------------------------------------

def test_trace_distance_examples():
    tau = maximally_mixed(2)
    assert trace_distance(tau, tau) == 0
    assert abs(trace_distance(ket(0, 2), ket(1, 2)) - 1) < 1e-12
    assert abs(trace_distance(np.diag([0.75, 0.25]), tau) - 0.25) < 1e-12


@given(seeds, dims)
def test_trace_distance_triangle(seed, d):
    r = rng_stream(seed)
    a, b, c = (random_density(d, r) for _ in range(3))
    ab, bc, ac = trace_distance(a, b), trace_distance(b, c), trace_distance(a, c)
    assert ac <= ab + bc + 1e-9
    assert abs(ab - trace_distance(b, a)) < 1e-12
    assert 0 <= ab <= 1 + 1e-12


# -- eigensystems and purification -----------------------------------------

@given(seeds, st.integers(1, 64))
def test_eigendecomposition_reconstructs(seed, d):
    r = rng_stream(seed)
    g = r.normal(size=(d, d)) + 1j * r.normal(size=(d, d))
    h = g + g.conj().T
    lam, v = qmat.sorted_eigensystem(h)
    assert np.all(np.diff(lam) <= 1e-12)
    assert np.linalg.norm(v @ np.diag(lam) @ v.conj().T - h) <= 1e-9 * max(1, np.linalg.norm(h))


def test_sorted_eigensystem_degenerate_is_reproducible():
    lam, v = qmat.sorted_eigensystem(np.eye(3))
    assert close(v, np.eye(3), 1e-12)
    lam2, v2 = qmat.sorted_eigensystem(np.eye(3))
    assert np.array_equal(v, v2)


def test_purify_maximally_mixed_gives_bell_state():
    psi = purify(maximally_mixed(2)).amplitudes
    phi = maximally_entangled(2).amplitudes
    assert close(psi, phi, 1e-12)


def test_purify_pure_state(rng):
    v = random_pure(3, rng).amplitudes
    psi = purify(np.outer(v, v.conj())).amplitudes
    assert abs(abs(np.vdot(np.kron(v, ket(0, 3)), psi)) - 1) < 1e-9


def test_purify_diagonal():
    psi = purify(np.diag([0.75, 0.25])).amplitudes
    want = np.sqrt(0.75) * np.kron(ket(0, 2), ket(0, 2)) + 0.5 * np.kron(ket(1, 2), ket(1, 2))
    assert close(psi, want, 1e-12)


@given(seeds, dims, st.integers(1, 8))
def test_purify_round_trip(seed, d, rank):
    rho = random_density(d, rng_stream(seed), rank=min(rank, d))
    back = partial_trace(purify(rho).projector(), 0, (d, d))
    assert close(back.matrix, rho.matrix, 1e-9)


# -- randomness -------------------------------------------------------------

def test_rng_stream_is_keyed():
    a = rng_stream(7, 1).normal(size=4)
    assert np.array_equal(a, rng_stream(7, 1).normal(size=4))
    assert not np.array_equal(a, rng_stream(7, 2).normal(size=4))


def test_haar_unitary_is_unitary(rng):
    u = qmat.haar_unitary(5, rng)
    assert close(u.conj().T @ u, np.eye(5), 1e-12)


def test_random_isometry_shape_check(rng):
    with pytest.raises(DimensionError):
        qmat.random_isometry(2, 3, rng)
