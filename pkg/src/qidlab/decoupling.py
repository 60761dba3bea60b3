"""Numerical checks of the duality between quantum ID codes and weak decoupling.

A channel is *forgetful* on a code space ``K`` with error ``delta`` if any two
pure code states produce environment outputs within trace distance ``delta``.
Universal quantification over ``K`` is replaced by the structured-plus-random
pair ensemble of :func:`qidlab.idcodes.test_pairs`; the size of that ensemble
is carried in every report.

Bounds checked here (``stat_margin`` absorbs floating-point noise):

* ID code with error ``eps``  =>  complement forgetful with ``delta <= 7 eps^(1/4)``
* complement forgetful with ``delta``  =>
  ``0 <= ||phi - psi||_1 - ||N(phi) - N(psi)||_1 <= 4 sqrt(2 delta)``
* ``eta = 7 delta^(1/8) sqrt(lambda/mu)`` from the nonzero environment spectrum.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import channels as ch
from .channels import QuantumChannel
from .idcodes import QuantumIdCode, test_pairs, verify_quantum_id
from .qmat import DimensionError, trace_distance, trace_norm

STAT_MARGIN = 1e-6
EIG_FLOOR = 1e-10
DEFAULT_TRIALS = 500


class VisibleCodeError(TypeError):
    """The check needs a cptp (blind) encoder."""


@dataclass
class DecouplingReport:
    delta: float
    epsilon_bound: float
    geometry_gap_max: float
    geometry_gap_min: float
    mu: float
    lam: float
    eta: float
    test_set_size: int
    epsilon: float = float("nan")
    passed: bool = True
    note: str = "pairs range over the code space K"

    def to_json(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in d.items()}


def _basis(channel: QuantumChannel, code_space) -> np.ndarray:
    if code_space is None:
        return np.eye(channel.dim_in, dtype=complex)
    b = np.asarray(code_space, dtype=complex)
    if b.ndim == 1:
        b = b[:, None]
    if b.shape[0] != channel.dim_in:
        raise DimensionError(f"code space vectors of length {b.shape[0]}, channel dim_in "
                             f"{channel.dim_in}")
    if np.max(np.abs(b.conj().T @ b - np.eye(b.shape[1]))) > 1e-8:
        raise ValueError("code space basis must be orthonormal")
    return b


def _embedded_pairs(basis: np.ndarray, trials: int, seed: int):
    return [(basis @ a, basis @ b) for a, b in test_pairs(basis.shape[1], trials, seed)]


def _proj(v: np.ndarray) -> np.ndarray:
    return np.outer(v, v.conj())


def _outputs(channel: QuantumChannel, pairs):
    """Channel outputs for every distinct vector appearing in ``pairs``."""
    cache = {}
    for a, b in pairs:
        for v in (a, b):
            key = v.tobytes()
            if key not in cache:
                cache[key] = ch.apply_matrix(channel, _proj(v))
    return cache


def forgetfulness(channel: QuantumChannel, code_space=None, trials: int = DEFAULT_TRIALS,
                  seed: int = 0) -> tuple[float, int]:
    """``(delta, test_set_size)``: max pairwise output trace distance of ``channel`` on ``K``.

    Pass the complementary channel to measure how much the environment learns.
    """
    pairs = _embedded_pairs(_basis(channel, code_space), trials, seed)
    out = _outputs(channel, pairs)
    delta = max(trace_distance(out[a.tobytes()], out[b.tobytes()]) for a, b in pairs)
    return min(max(delta, 0.0), 1.0), len(pairs)


def eta_bound(delta: float, mu: float, lam: float) -> float:
    return 7 * delta ** 0.125 * math.sqrt(lam / mu)


def eigenvalue_window(channel: QuantumChannel, code_space=None, trials: int = DEFAULT_TRIALS,
                      seed: int = 0, delta: float | None = None):
    """``(mu, lambda, eta)`` from the complement's nonzero output eigenvalues on ``K``.

    ``delta`` defaults to the measured forgetfulness of the complement.
    """
    _, comp = ch.complementary(channel)
    pairs = _embedded_pairs(_basis(channel, code_space), trials, seed)
    out = _outputs(comp, pairs)
    lo, hi = np.inf, 0.0
    for m in out.values():
        lam = np.linalg.eigvalsh(m)
        lam = lam[lam > EIG_FLOOR]
        lo, hi = min(lo, float(lam.min())), max(hi, float(lam.max()))
    if delta is None:
        delta, _ = forgetfulness(comp, code_space, trials, seed)
    return lo, hi, eta_bound(delta, lo, hi)


def check_forgetful_implies_geometry(channel: QuantumChannel, code_space=None,
                                     trials: int = DEFAULT_TRIALS, seed: int = 0,
                                     margin: float = STAT_MARGIN) -> DecouplingReport:
    """Trace-norm contraction on code pairs against the ``4 sqrt(2 delta)`` bound.

    The lower bound (monotonicity of the trace norm) must hold on every pair
    to within 1e-9.
    """
    basis = _basis(channel, code_space)
    _, comp = ch.complementary(channel)
    delta, size = forgetfulness(comp, basis, trials, seed)
    pairs = _embedded_pairs(basis, trials, seed)
    out = _outputs(channel, pairs)
    gaps = []
    for a, b in pairs:
        before = trace_norm(_proj(a) - _proj(b))
        after = trace_norm(out[a.tobytes()] - out[b.tobytes()])
        gaps.append(before - after)
    gaps = np.array(gaps)
    bound = 4 * math.sqrt(2 * delta)
    mu, lam, eta = eigenvalue_window(channel, basis, trials, seed, delta=delta)
    ok = bool(gaps.min() >= -1e-9 and gaps.max() <= bound + margin)
    return DecouplingReport(delta=delta, epsilon_bound=bound, geometry_gap_max=float(gaps.max()),
                            geometry_gap_min=float(gaps.min()), mu=mu, lam=lam, eta=eta,
                            test_set_size=size, passed=ok)


def check_id_implies_forgetful(code: QuantumIdCode, channel: QuantumChannel,
                               trials: int = DEFAULT_TRIALS, seed: int = 0,
                               margin: float = STAT_MARGIN) -> DecouplingReport:
    """Measure ``eps`` of a blind code and ``delta`` of the complement of ``N o E``."""
    if not code.blind:
        raise VisibleCodeError("visible encoder has no Stinespring form")
    eff = ch.compose(code.encoder, channel)
    eps = verify_quantum_id(code, channel, trials, seed).epsilon
    _, comp = ch.complementary(eff)
    delta, size = forgetfulness(comp, None, trials, seed)
    bound = 7 * eps ** 0.25
    mu, lam, eta = eigenvalue_window(eff, None, trials, seed, delta=delta)
    return DecouplingReport(delta=delta, epsilon_bound=bound, geometry_gap_max=float("nan"),
                            geometry_gap_min=float("nan"), mu=mu, lam=lam, eta=eta,
                            test_set_size=size, epsilon=eps, passed=delta <= bound + margin)


def random_blind_code(rng: np.random.Generator, code_dim: int = 2,
                      dims=(2, 4, 8), noise=(0.0, 0.3)):
    """Random instance: isometric encoder ``K -> A``, noisy channel on ``A``, pulled-back tests.

    The channel is ``(1-p) id + p R`` for a random channel ``R`` with two Kraus
    operators; tests are ``D_phi = V phi V^dagger`` for the encoding isometry ``V``.
    """
    from .qmat import random_isometry

    choices = [d for d in dims if d >= code_dim]
    a = int(rng.choice(choices))
    v = random_isometry(a, code_dim, rng)
    p = float(rng.uniform(*noise))
    noisy = ch.mixture([ch.identity(a), ch.random_channel(a, a, 2, rng)], [1 - p, p])
    enc = ch.isometric(v, "encoder")
    code = QuantumIdCode(code_dim, enc, lambda phi: v @ _proj(phi) @ v.conj().T)
    return code, noisy, {"dim_A": a, "p": p}
