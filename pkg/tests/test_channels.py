import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qidlab import channels as ch
from qidlab.entropy import von_neumann_entropy
from qidlab.qmat import (DimensionError, ket, maximally_entangled, maximally_mixed,
                         partial_trace, random_density, rng_stream)

PLUS = np.full((2, 2), 0.5)


def close(a, b, tol=1e-9):
    return np.max(np.abs(np.asarray(a) - np.asarray(b))) <= tol


def zoo():
    r = rng_stream(99)
    return [
        ch.identity(2), ch.identity(3), ch.erasure(0.0), ch.erasure(0.25), ch.erasure(1.0),
        ch.depolarizing(0.3), ch.depolarizing(0.5, 3), ch.dephasing(2), ch.dephasing(3),
        ch.bsc(0.1), ch.classical([[0.7, 0.2, 0.1], [0.0, 0.5, 0.5]]),
        ch.cq([np.diag([1.0, 0.0]), PLUS]), ch.qc(ch.Povm.computational(3)),
        ch.replacement(np.diag([0.25, 0.75]), 3), ch.random_channel(2, 3, 3, r),
        ch.random_channel(3, 2, 4, r), ch.tensor(ch.erasure(0.3), ch.identity(2)),
        ch.compose(ch.depolarizing(0.2), ch.erasure(0.4)),
    ]


ZOO = zoo()


# -- validation ---------------------------------------------------------------

def test_validate_identity_and_erasure():
    assert ch.validate_cptp(ch.identity(2)).passed
    rep = ch.validate_cptp(ch.erasure(0.25))
    assert rep.passed and rep.tp_residual <= 1e-12


def test_erasure_kraus_form():
    e = ch.erasure(0.25)
    assert (e.dim_in, e.dim_out) == (2, 3)
    embed = np.eye(3)[:, :2]
    flag = [np.outer(ket(2, 3), ket(i, 2)) for i in range(2)]
    want = np.sqrt(0.75) * embed, np.sqrt(0.25) * flag[0], np.sqrt(0.25) * flag[1]
    for k, w in zip(e.kraus, want):
        assert close(k, w, 1e-12)


def test_validate_scaled_identity_fails():
    rep = ch.validate_cptp(ch.QuantumChannel.from_kraus([0.9 * np.eye(2)]))
    assert not rep.passed
    assert abs(rep.tp_residual - 0.19) < 1e-12
    with pytest.raises(ch.ChannelError, match="0.19"):
        ch.ensure_cptp(ch.QuantumChannel.from_kraus([0.9 * np.eye(2)]))


@pytest.mark.parametrize("idx", range(len(ZOO)))
def test_zoo_is_cptp(idx):
    assert ch.validate_cptp(ZOO[idx]).passed


@pytest.mark.parametrize("idx", range(len(ZOO)))
def test_choi_partial_trace_is_identity(idx):
    c = ZOO[idx]
    j = ch.choi(c)
    assert close(partial_trace(j, 0, (c.dim_in, c.dim_out)), np.eye(c.dim_in), 1e-8)
    assert np.linalg.eigvalsh(j)[0] >= -1e-8


# -- application --------------------------------------------------------------

def test_apply_examples(rng):
    rho = random_density(2, rng)
    assert close(ch.apply(ch.identity(2), rho).matrix, rho.matrix)
    assert close(ch.apply(ch.erasure(0.25), maximally_mixed(2)).matrix,
                 np.diag([0.375, 0.375, 0.25]))
    assert close(ch.apply_matrix(ch.dephasing(2), PLUS), np.eye(2) / 2)


def test_apply_dimension_mismatch():
    with pytest.raises(DimensionError):
        ch.apply(ch.identity(2), maximally_mixed(3))


def test_apply_batch_matches_apply(rng):
    c = ZOO[14]
    states = np.stack([random_density(2, rng).matrix for _ in range(5)])
    for s, out in zip(states, ch.apply_batch(c, states)):
        assert close(out, ch.apply_matrix(c, s), 1e-12)


@given(st.integers(0, 2**32 - 1))
def test_adjoint_duality(seed):
    r = rng_stream(seed)
    c = ch.random_channel(2, 3, 2, r)
    rho = random_density(2, r).matrix
    x = r.normal(size=(3, 3)) + 1j * r.normal(size=(3, 3))
    lhs = np.trace(ch.apply_matrix(c, rho) @ x)
    rhs = np.trace(rho @ ch.adjoint(c, x))
    assert abs(lhs - rhs) < 1e-10


# -- dilations ----------------------------------------------------------------

@pytest.mark.parametrize("idx", range(len(ZOO)))
def test_kraus_matches_stinespring(idx):
    c = ZOO[idx]
    v, _ = ch.complementary(c)
    assert close(v.matrix.conj().T @ v.matrix, np.eye(c.dim_in), 1e-10)
    r = rng_stream(2024, idx)
    for _ in range(50):
        rho = random_density(c.dim_in, r).matrix
        via_v = partial_trace(v.dilate(rho), 0, (v.dim_B, v.dim_E))
        assert close(ch.apply_matrix(c, rho), via_v, 1e-9)


def test_identity_complement_is_constant(rng):
    v, comp = ch.complementary(ch.identity(2))
    assert v.dim_E == 1
    assert close(ch.apply_matrix(comp, random_density(2, rng).matrix), [[1.0]], 1e-12)


def test_erasure_complement_entropy_difference():
    e = ch.erasure(0.25)
    tau = maximally_mixed(2)
    diff = (von_neumann_entropy(ch.apply(e, tau))
            - von_neumann_entropy(ch.complement_output(e, tau)))
    assert abs(diff - 0.5) < 1e-9


def test_dephasing_complement_measures_basis():
    _, comp = ch.complementary(ch.dephasing(2))
    meas = ch.qc(ch.Povm.computational(2))
    for i in range(2):
        basis = np.outer(ket(i, 2), ket(i, 2))
        assert close(ch.apply_matrix(comp, basis), ch.apply_matrix(meas, basis), 1e-12)


def test_minimal_kraus_trims_and_preserves(rng):
    k = ch.depolarizing(0.3).kraus
    redundant = ch.QuantumChannel.from_kraus([k[0] / np.sqrt(2), k[0] / np.sqrt(2), *k[1:]])
    ops = ch.minimal_kraus(redundant)
    assert len(ops) == len(k)
    rho = random_density(2, rng).matrix
    trimmed = ch.QuantumChannel.from_kraus(ops)
    assert close(ch.apply_matrix(trimmed, rho), ch.apply_matrix(redundant, rho), 1e-12)


def test_minimal_kraus_keeps_independent_family():
    e = ch.erasure(0.25)
    assert ch.minimal_kraus(e) is e.kraus


@given(st.integers(0, 2**32 - 1), st.integers(2, 4), st.integers(1, 4))
def test_complement_of_complement_entropy(seed, d, nk):
    r = rng_stream(seed)
    c = ch.random_channel(d, d, nk, r)
    _, comp = ch.complementary(c)
    _, comp2 = ch.complementary(comp)
    rho = random_density(d, r)
    assert abs(von_neumann_entropy(ch.apply(comp2, rho))
               - von_neumann_entropy(ch.apply(c, rho))) < 1e-8


# -- zoo and combinators -------------------------------------------------------

def test_erasure_zero_is_embedding(rng):
    rho = random_density(2, rng).matrix
    out = ch.apply_matrix(ch.erasure(0.0), rho)
    assert close(out[:2, :2], rho) and close(out[2], 0) and close(out[:, 2], 0)


def test_bsc_and_qc_examples():
    assert close(ch.apply_matrix(ch.bsc(0.1), np.diag([1.0, 0.0])), np.diag([0.9, 0.1]))
    assert close(ch.apply_matrix(ch.qc(ch.Povm.computational(2)), PLUS), np.eye(2) / 2)


@pytest.mark.parametrize("bad", [
    lambda: ch.erasure(1.2), lambda: ch.depolarizing(-0.1),
    lambda: ch.classical([[0.5, 0.6], [0.5, 0.5]]),
    lambda: ch.Povm((np.diag([1.0, 0.0]), np.diag([0.5, 0.5]))),
    lambda: ch.Povm((np.diag([1.5, 1.0]), np.diag([-0.5, 0.0]))),
])
def test_malformed_specs_rejected(bad):
    with pytest.raises(ValueError):
        bad()


def test_tensor_identities(rng):
    t = ch.tensor(ch.identity(2), ch.identity(2))
    rho = random_density(4, rng).matrix
    assert close(ch.apply_matrix(t, rho), rho)


def test_dephasing_idempotent(rng):
    twice = ch.combine([ch.dephasing(3), ch.dephasing(3)], "compose")
    rho = random_density(3, rng).matrix
    assert close(ch.apply_matrix(twice, rho), ch.apply_matrix(ch.dephasing(3), rho))
    assert ch.validate_cptp(twice).passed


def test_compose_order_and_mismatch():
    c = ch.compose(ch.erasure(0.5), ch.dephasing(3))
    assert (c.dim_in, c.dim_out) == (2, 3)
    with pytest.raises(DimensionError):
        ch.compose(ch.dephasing(3), ch.erasure(0.5))


def test_tensor_marginals_on_bell_state():
    t = ch.tensor(ch.erasure(0.25), ch.identity(2))
    out = ch.apply(t, maximally_entangled(2))
    assert close(partial_trace(out, 0, (3, 2)).matrix,
                 ch.apply_matrix(ch.erasure(0.25), np.eye(2) / 2))
    assert close(partial_trace(out, 1, (3, 2)).matrix, np.eye(2) / 2)


def test_apply_to_second_matches_tensor(rng):
    c = ch.erasure(0.3)
    rho = random_density(4, rng).matrix
    full = ch.apply_matrix(ch.tensor(ch.identity(2), c), rho)
    assert close(ch.apply_to_second(c, rho, 2), full, 1e-12)


# -- serialization --------------------------------------------------------------

def test_json_round_trip(rng):
    c = ch.random_channel(2, 3, 2, rng)
    back = ch.channel_from_json(json.loads(ch.channel_to_json_text(c)))
    rho = random_density(2, rng).matrix
    assert close(ch.apply_matrix(back, rho), ch.apply_matrix(c, rho), 0)


def test_json_rejects_non_cptp():
    data = ch.QuantumChannel.from_kraus([0.9 * np.eye(2)]).to_json()
    with pytest.raises(ch.ChannelError):
        ch.channel_from_json(data)


def test_standard_and_shorthand_forms():
    a = ch.channel_from_json({"standard": "erasure", "q": 0.25})
    b = ch.make_standard(ch.parse_shorthand("erasure:0.25"))
    assert close(a.kraus_array, b.kraus_array, 0)
    assert ch.make_standard(ch.parse_shorthand("depolarizing:0.1:3")).dim_in == 3
    with pytest.raises(ch.ChannelError):
        ch.parse_shorthand("warp:1")
    with pytest.raises(ch.ChannelError):
        ch.make_standard({"standard": "erasure"})
