"""Classical and quantum identification codes: construction and verification.

A classical ID code is a family ``{(rho_i, D_i)}`` of input states and output
tests.  Its first-kind error is ``max_i 1 - tr N(rho_i) D_i`` and its
second-kind error ``max_{i != j} tr N(rho_i) D_j``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np

from . import channels as ch
from .channels import Povm, QuantumChannel
from .galois import field
from .qmat import (
    DimensionError,
    PureState,
    as_matrix,
    is_operator_interval,
    matrix_to_json,
    random_pure_vector,
    rng_stream,
)

OP_TOL = 1e-8


class InfeasibleError(RuntimeError):
    """A randomized construction exhausted its retry budget."""


@dataclass(frozen=True)
class IdVerificationReport:
    lambda1: float
    lambda2: float
    pair_count: int
    messages: int = 0
    exhaustive: bool = True

    def to_json(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class ClassicalIdCode:
    """Dense ID code: ``states[i]`` on the channel input, ``tests[i]`` on its output."""

    states: np.ndarray
    tests: np.ndarray

    def __post_init__(self):
        s = np.array(self.states, dtype=complex)
        t = np.array(self.tests, dtype=complex)
        if s.ndim != 3 or t.ndim != 3 or len(s) != len(t) or len(s) == 0:
            raise DimensionError("states and tests must be equal-length nonempty stacks")
        for i, d in enumerate(t):
            if not is_operator_interval(d, OP_TOL):
                raise ValueError(f"test D_{i} is not within [0, 1]")
        for a in (s, t):
            a.setflags(write=False)
        object.__setattr__(self, "states", s)
        object.__setattr__(self, "tests", t)

    @classmethod
    def from_entries(cls, entries: Sequence) -> "ClassicalIdCode":
        return cls(np.stack([as_matrix(r) for r, _ in entries]),
                   np.stack([as_matrix(d) for _, d in entries]))

    @property
    def channel_dim_in(self) -> int:
        return self.states.shape[1]

    @property
    def entries(self):
        return list(zip(self.states, self.tests))

    def __len__(self):
        return len(self.states)

    def to_json(self) -> dict:
        return {"states": [matrix_to_json(r) for r in self.states],
                "tests": [matrix_to_json(d) for d in self.tests]}


def score_matrix(code: ClassicalIdCode, channel: QuantumChannel) -> np.ndarray:
    """``S[i, j] = tr N(rho_i) D_j``."""
    if channel.dim_in != code.channel_dim_in or channel.dim_out != code.tests.shape[1]:
        raise DimensionError("code and channel dimensions do not match")
    outs = ch.apply_batch(channel, code.states)
    return np.einsum("iab,jba->ij", outs, code.tests).real


def errors_from_scores(s: np.ndarray) -> tuple[float, float]:
    n = len(s)
    lam1 = float(np.max(1 - np.diag(s)))
    lam2 = float(np.max(s[~np.eye(n, dtype=bool)])) if n > 1 else 0.0
    return min(max(lam1, 0.0), 1.0), min(max(lam2, 0.0), 1.0)


def verify_classical_id(code: ClassicalIdCode, channel: QuantumChannel) -> IdVerificationReport:
    """Exact errors over all messages and all ordered pairs ``i != j``.

    ``lambda2`` is 0 for a single-message code.
    """
    lam1, lam2 = errors_from_scores(score_matrix(code, channel))
    n = len(code)
    return IdVerificationReport(lam1, lam2, n * (n - 1), n)


# -- simultaneity -----------------------------------------------------------

@dataclass(frozen=True)
class SimultaneityWitness:
    povm: Povm
    partition: tuple

    def __post_init__(self):
        object.__setattr__(self, "partition", tuple(frozenset(int(t) for t in s)
                                                    for s in self.partition))

    def is_disjoint(self) -> bool:
        seen = set()
        for s in self.partition:
            if seen & s:
                return False
            seen |= s
        return True


@dataclass(frozen=True)
class SimultaneityResult:
    passed: bool
    residual: float
    disjoint: bool


def verify_simultaneity(code: ClassicalIdCode, witness: SimultaneityWitness,
                        require_disjoint: bool = True) -> SimultaneityResult:
    """Check ``D_i = sum_{t in T_i} E_t`` for every test, within 1e-8.

    Outcomes outside every ``T_i`` are allowed.  With ``require_disjoint`` the
    index sets must also be pairwise disjoint; note that disjoint sets force
    ``sum_i D_i <= 1``, which codes with overlapping tests cannot meet.
    """
    povm = witness.povm
    if povm.dim != code.tests.shape[1] or len(witness.partition) != len(code):
        raise DimensionError("witness does not match the code's output space or size")
    ops = np.stack(povm.outcomes)
    resid = 0.0
    for d, idx in zip(code.tests, witness.partition):
        if any(t < 0 or t >= len(povm) for t in idx):
            raise ValueError(f"outcome index out of range in {sorted(idx)}")
        partial = ops[sorted(idx)].sum(axis=0) if idx else np.zeros_like(d)
        resid = max(resid, float(np.max(np.abs(d - partial))))
    disjoint = witness.is_disjoint()
    ok = resid <= OP_TOL and (disjoint or not require_disjoint)
    return SimultaneityResult(ok, resid, disjoint)


# -- Reed-Solomon identification code --------------------------------------

class ReedSolomonIdCode:
    """ID code for the noiseless channel on ``q**2`` symbols ``(x, y) -> x*q + y``.

    Message ``m`` is the polynomial of degree ``< k`` whose coefficients are the
    base-``q`` digits of ``m`` (constant term first).  Its state is uniform on
    the graph ``{(x, p_m(x))}`` and its test is the indicator of that graph, so
    ``lambda1 = 0`` and a false accept happens only where two polynomials
    agree: ``lambda2 <= (k-1)/q``.
    """

    def __init__(self, q: int, k: int):
        if k < 1 or k > q:
            raise ValueError(f"degree bound k must satisfy 1 <= k <= q, got k={k}, q={q}")
        self.field = field(q)
        self.q, self.k = q, k
        self.points = np.arange(q)

    @property
    def messages(self) -> int:
        return self.q**self.k

    @property
    def alphabet(self) -> int:
        return self.q * self.q

    def coefficients(self, m) -> np.ndarray:
        m = np.asarray(m, dtype=np.int64)
        return np.stack([(m // self.q**j) % self.q for j in range(self.k)], axis=-1)

    def values(self, m) -> np.ndarray:
        return self.field.poly_eval(self.coefficients(m), self.points)

    def support(self, m: int) -> np.ndarray:
        return self.points * self.q + self.values(m)

    def agreements(self, i, j) -> np.ndarray:
        return np.sum(self.values(i) == self.values(j), axis=-1)

    def to_classical_code(self) -> ClassicalIdCode:
        n, a = self.messages, self.alphabet
        if n * a * a > 2**26:
            raise ValueError("code too large for a dense representation")
        states = np.zeros((n, a, a), dtype=complex)
        tests = np.zeros((n, a, a), dtype=complex)
        sup = self.points * self.q + self.values(np.arange(n))
        for m in range(n):
            states[m, sup[m], sup[m]] = 1 / self.q
            tests[m, sup[m], sup[m]] = 1
        return ClassicalIdCode(states, tests)

    def witness(self) -> SimultaneityWitness:
        """Output-symbol measurement with each test's graph as its outcome set."""
        sup = self.points * self.q + self.values(np.arange(self.messages))
        return SimultaneityWitness(Povm.computational(self.alphabet), tuple(map(tuple, sup)))

    def verify_exhaustive(self) -> IdVerificationReport:
        """Exact errors over all ordered pairs.

        Two messages agree exactly at the roots of their difference, and the
        differences range over all nonzero polynomials of degree ``< k``, so
        scanning those ``q**k - 1`` polynomials covers every pair.
        """
        diffs = np.arange(1, self.messages)
        roots = np.sum(self.values(diffs) == 0, axis=-1)
        lam2 = float(np.max(roots)) / self.q if len(diffs) else 0.0
        n = self.messages
        return IdVerificationReport(0.0, lam2, n * (n - 1), n)

    def verify_sampled(self, pairs: int, seed: int) -> IdVerificationReport:
        rng = rng_stream(seed, 0)
        i = rng.integers(0, self.messages, size=pairs)
        j = rng.integers(0, self.messages - 1, size=pairs)
        j = np.where(j >= i, j + 1, j)
        lam2 = float(np.max(self.agreements(i, j))) / self.q
        return IdVerificationReport(0.0, lam2, pairs, self.messages, exhaustive=False)

    def to_json(self) -> dict:
        return {"code": "reed-solomon", "q": self.q, "k": self.k, "messages": self.messages}


def rs_id_code(q: int, k: int) -> ReedSolomonIdCode:
    return ReedSolomonIdCode(q, k)


def concatenate_with_transmission(id_code: ClassicalIdCode, block_encoder, block_decoder: Povm,
                                  channel: QuantumChannel) -> ClassicalIdCode:
    """Lift an ID code for the noiseless ``M``-symbol channel through a block code.

    ``rho'_m = sum_s rho_m(s) enc(s)`` and ``D'_m = sum_s D_m(s, s) dec_s``,
    where ``enc`` is a list of ``M`` input states and ``dec`` an ``M``-outcome
    POVM on the channel output.
    """
    enc = np.stack([as_matrix(e) for e in block_encoder])
    dec = np.stack(block_decoder.outcomes)
    m = id_code.states.shape[1]
    if len(enc) != m or len(dec) != m:
        raise DimensionError(f"block code must have {m} codewords and {m} outcomes")
    if enc.shape[1] != channel.dim_in or dec.shape[1] != channel.dim_out:
        raise DimensionError("block code does not match the channel")
    p = np.real(np.einsum("nss->ns", id_code.states))
    w = np.real(np.einsum("nss->ns", id_code.tests))
    return ClassicalIdCode(np.tensordot(p, enc, axes=1), np.tensordot(w, dec, axes=1))


def block_error(block_encoder, block_decoder: Povm, channel: QuantumChannel) -> float:
    """``max_s 1 - tr N(enc(s)) dec_s``."""
    worst = 0.0
    for e, d in zip(block_encoder, block_decoder.outcomes):
        out = ch.apply_matrix(channel, as_matrix(e))
        worst = max(worst, 1 - float(np.trace(out @ d).real))
    return worst


# -- fingerprinting ---------------------------------------------------------

def mutually_unbiased_bases(dim: int) -> np.ndarray:
    """The ``dim + 1`` stabilizer MUBs for a prime-power ``dim <= 64``, as rows.

    Basis ``a`` is the joint eigenbasis of ``X(x) Z(a x)``, with
    ``X(x)|y> = |y+x>`` and ``Z(z)|y> = w^{tr(z y)}|y>``; the last basis is the
    computational one.  Returns an empty array when ``dim`` is not a prime power.
    """
    from .galois import prime_power

    if dim < 2 or dim > 64 or prime_power(dim) is None:
        return np.zeros((0, dim), dtype=complex)
    f = field(dim)
    e = np.arange(dim)
    tr = e.copy()
    cur = e.copy()
    for _ in range(f.m - 1):  # field trace x + x^p + ... lands in GF(p) = {0..p-1}
        nxt = cur
        for _ in range(f.p - 1):
            nxt = f.mul_table[nxt, cur]
        cur = nxt
        tr = f.add_table[tr, cur]
    omega = np.exp(2j * np.pi / f.p)
    rng = np.random.default_rng(dim)
    bases = []
    for a in range(dim):
        h = np.zeros((dim, dim), dtype=complex)
        for x in range(1, dim):
            shift = np.zeros((dim, dim))
            shift[f.add_table[x], e] = 1
            phase = omega ** tr[f.mul_table[f.mul_table[a, x], e]]
            h += complex(*rng.normal(size=2)) * (shift * phase[None, :])
        _, vecs = np.linalg.eigh(h + h.conj().T)
        bases.append(vecs.T)
    bases.append(np.eye(dim, dtype=complex))
    return np.concatenate(bases)


def _candidates(dim: int, rng: np.random.Generator):
    """Computational basis, remaining MUB vectors, then Haar-random vectors."""
    yield from np.eye(dim, dtype=complex)
    yield from mutually_unbiased_bases(dim)[:-dim]
    while True:
        yield random_pure_vector(dim, rng)


def greedy_fingerprints(dim: int, max_overlap: float, candidates: int, seed: int) -> np.ndarray:
    """Greedy almost-orthogonal set from a fixed candidate stream.

    Candidates come from the computational basis, the other mutually unbiased
    bases (prime-power ``dim``) and then Haar-random vectors; each is kept iff
    its overlap with every kept vector is ``<= max_overlap``.  Returns rows.
    """
    stream = _candidates(dim, rng_stream(seed, dim))
    kept = np.zeros((0, dim), dtype=complex)
    for _ in range(candidates):
        v = next(stream)
        if kept.shape[0] == 0 or np.max(np.abs(kept.conj() @ v)) <= max_overlap + 1e-12:
            kept = np.vstack([kept, v])
    return kept


def max_overlap_of(vectors: np.ndarray) -> float:
    g = np.abs(vectors.conj() @ vectors.T)
    np.fill_diagonal(g, 0)
    return float(g.max()) if len(vectors) > 1 else 0.0


def fingerprint_generate(dim: int, count: int, max_overlap: float, seed: int,
                         budget: int | None = None) -> list[PureState]:
    """``count`` unit vectors with pairwise ``|<psi_i|psi_j>| <= max_overlap``.

    Raises :class:`InfeasibleError` if the candidate budget runs out first.
    """
    if count < 2:
        raise ValueError("need at least two states")
    budget = budget or 1000 + 100 * count
    stream = _candidates(dim, rng_stream(seed, dim))
    kept = []
    for _ in range(budget):
        v = next(stream)
        if not kept or np.max(np.abs(np.array(kept).conj() @ v)) <= max_overlap + 1e-12:
            kept.append(v)
            if len(kept) == count:
                break
    if len(kept) < count:
        raise InfeasibleError(
            f"found only {len(kept)} of {count} states in dim {dim} with overlap <= {max_overlap}")
    vecs = np.array(kept)
    if max_overlap_of(vecs) > max_overlap + 1e-12:  # exhaustive re-check
        raise InfeasibleError("overlap verification failed")  # pragma: no cover
    return [PureState(v) for v in vecs]


def fingerprint_code(states: Sequence[PureState]) -> ClassicalIdCode:
    """``rho_i = D_i = |psi_i><psi_i|``."""
    proj = np.stack([s.projector().matrix for s in states])
    return ClassicalIdCode(proj, proj)


# -- quantum ID codes -------------------------------------------------------

@dataclass(frozen=True, eq=False)
class QuantumIdCode:
    """Encoder ``psi -> E(psi)`` on the channel input and tests ``phi -> D_phi``.

    A :class:`QuantumChannel` encoder makes the code blind; any callable on
    state vectors gives a visible code.
    """

    code_dim: int
    encoder: object
    decoder: Callable

    @property
    def blind(self) -> bool:
        return isinstance(self.encoder, QuantumChannel)

    def encode(self, psi: np.ndarray) -> np.ndarray:
        if self.blind:
            return ch.apply_matrix(self.encoder, np.outer(psi, psi.conj()))
        return as_matrix(self.encoder(psi))

    def test(self, phi: np.ndarray) -> np.ndarray:
        return as_matrix(self.decoder(phi))

    @classmethod
    def from_channels(cls, encoder: QuantumChannel, decoding: QuantumChannel) -> "QuantumIdCode":
        """Tests pulled back through a decoding channel: ``D_phi = R^dagger(phi)``."""
        return cls(encoder.dim_in, encoder,
                   lambda phi: ch.adjoint(decoding, np.outer(phi, phi.conj())))

    @classmethod
    def naive(cls, dim: int) -> "QuantumIdCode":
        """Identity encoding with ``D_phi = phi``."""
        return cls.from_channels(ch.identity(dim), ch.identity(dim))


@dataclass(frozen=True)
class QuantumIdReport:
    epsilon: float
    test_set_size: int
    worst_pair: tuple = ()

    def to_json(self) -> dict:
        return {"epsilon": self.epsilon, "test_set_size": self.test_set_size}


def test_pairs(k: int, trials: int, seed: int):
    """Structured-plus-random pairs of unit vectors in ``C^k``.

    All ordered basis pairs (diagonal included), then per trial ``t`` a
    diagonal pair ``(psi_t, psi_t)`` and a random pair ``(psi_t, phi_t)``, both
    drawn from the stream ``(seed, t)``.
    """
    eye = np.eye(k, dtype=complex)
    pairs = [(eye[i], eye[j]) for i in range(k) for j in range(k)]
    for t in range(trials):
        rng = rng_stream(seed, t)
        psi, phi = random_pure_vector(k, rng), random_pure_vector(k, rng)
        pairs.append((psi, psi))
        pairs.append((psi, phi))
    return pairs


def verify_quantum_id(code: QuantumIdCode, channel: QuantumChannel, trials: int = 500,
                      seed: int = 0) -> QuantumIdReport:
    """Max of ``|tr psi phi - tr N(E(psi)) D_phi|`` over :func:`test_pairs`."""
    worst, where = 0.0, ()
    cache_out, cache_test = {}, {}
    pairs = test_pairs(code.code_dim, trials, seed)
    for n, (psi, phi) in enumerate(pairs):
        kp, kf = psi.tobytes(), phi.tobytes()
        if kp not in cache_out:
            enc = code.encode(psi)
            if enc.shape != (channel.dim_in, channel.dim_in):
                raise DimensionError("encoder output does not match the channel input")
            cache_out[kp] = ch.apply_matrix(channel, enc)
        if kf not in cache_test:
            d = code.test(phi)
            if d.shape != (channel.dim_out, channel.dim_out):
                raise DimensionError("test operator does not match the channel output")
            cache_test[kf] = d
        ideal = abs(np.vdot(psi, phi)) ** 2
        got = float(np.trace(cache_out[kp] @ cache_test[kf]).real)
        dev = abs(ideal - got)
        if dev > worst:
            worst, where = dev, (n,)
    return QuantumIdReport(worst, len(pairs), where)


def fingerprint_to_classical(qcode: QuantumIdCode, channel: QuantumChannel, count: int,
                             max_overlap: float, seed: int, trials: int = 500):
    """Classical ID code ``rho_i = E(psi_i)``, ``D_i = D_{psi_i}`` from fingerprints in ``K``.

    Returns ``(code, report, eps_q)`` where ``eps_q`` is the measured deviation
    of the quantum code.  The fingerprint pairs themselves are part of the
    test set behind ``eps_q``, so ``lambda1 <= eps_q`` and
    ``lambda2 <= max_overlap**2 + eps_q`` hold for the returned values.
    """
    fps = fingerprint_generate(qcode.code_dim, count, max_overlap, seed)
    vecs = np.array([s.amplitudes for s in fps])
    code = ClassicalIdCode(np.stack([qcode.encode(v) for v in vecs]),
                           np.stack([qcode.test(v) for v in vecs]))
    ideal = np.abs(vecs.conj() @ vecs.T) ** 2
    on_fps = float(np.max(np.abs(score_matrix(code, channel) - ideal)))
    eps_q = max(verify_quantum_id(qcode, channel, trials, seed).epsilon, on_fps)
    return code, verify_classical_id(code, channel), eps_q


# -- rate accounting --------------------------------------------------------

def id_rate(messages: int, uses: int) -> float:
    """``log2 log2 N / n`` bits per channel use."""
    if messages < 2:
        return 0.0
    return math.log2(math.log2(messages)) / uses


def rate_with_common_randomness(rate: float, randomness_rate: float) -> float:
    """Rate bookkeeping for an ID code run alongside common randomness: ``C + R``."""
    return rate + randomness_rate
