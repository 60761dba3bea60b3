"""Single-letter capacity optimizers and closed-form erasure-channel curves.

All optimizers share one scheme: multi-start quasi-Newton ascent (L-BFGS-B with
finite-difference gradients) over a smooth, unconstrained parameterization of
states or ensembles, so no projection step is needed.  Restart ``r`` draws its
starting point from the stream ``(seed, r)`` and the best value is kept.
Reported values are best-found lower bounds on the true maxima.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import minimize

from .channels import QuantumChannel, stinespring
from .entropy import channel_information, entropies, entropy_of_spectrum, holevo_quantity, von_neumann_entropy
from .qmat import matrix_to_json, rng_stream

MAX_DIM_IN = 8
STRICT_POS_EPS = 1e-6


class CapacityError(ValueError):
    pass


@dataclass(frozen=True)
class OptimizerOptions:
    restarts: int = 32
    max_iters: int = 2000
    step_tol: float = 1e-9
    seed: int = 0
    # pure states per ensemble for c1; None means dim_in**2
    ensemble_size: int | None = None

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass
class CapacityResult:
    value: float
    witness: object
    iterations: int
    converged: bool
    kind: str = ""
    # best value found after each restart, i.e. nondecreasing
    history: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"kind": self.kind, "value": self.value, "iterations": self.iterations,
                "converged": self.converged, "history": list(self.history),
                "witness": witness_to_json(self.witness)}


def witness_to_json(w):
    if w is None:
        return None
    if isinstance(w, np.ndarray):
        return matrix_to_json(w)
    # ensemble
    return [{"p": float(p), "state": matrix_to_json(np.atleast_2d(v))} for p, v in w]


# -- parameterizations ------------------------------------------------------

def _mixed_from_params(x: np.ndarray, d: int) -> np.ndarray:
    a = (x[: d * d] + 1j * x[d * d:]).reshape(d, d)
    m = a @ a.conj().T
    return m / np.trace(m).real


def _pure_from_params(x: np.ndarray, d: int) -> np.ndarray:
    v = x[:d] + 1j * x[d:]
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


def _ensemble_from_params(x: np.ndarray, d: int, m: int):
    w = x[:m] ** 2
    p = w / w.sum()
    z = (x[m: m + m * d] + 1j * x[m + m * d:]).reshape(m, d)
    z = z / np.linalg.norm(z, axis=1, keepdims=True)
    return p, z


class _Dilation:
    """Precomputed Stinespring isometry for fast output/complement evaluation."""

    def __init__(self, channel: QuantumChannel):
        v = stinespring(channel)
        self.v = v.matrix
        self.db, self.de = v.dim_B, v.dim_E
        self.vh = self.v.conj().T

    def outputs(self, rho: np.ndarray):
        big = (self.v @ rho @ self.vh).reshape(self.db, self.de, self.db, self.de)
        return np.einsum("ikjk->ij", big), np.einsum("kikj->ij", big)


def _s(m: np.ndarray) -> float:
    return entropy_of_spectrum(np.linalg.eigvalsh(m))


def _check(channel: QuantumChannel):
    if channel.dim_in > MAX_DIM_IN:
        raise CapacityError(f"dim_in {channel.dim_in} exceeds desk-scale cap {MAX_DIM_IN}")


def _multistart(objective: Callable, init: Callable, opts: OptimizerOptions, decode: Callable,
                kind: str) -> CapacityResult:
    best_val, best_x, best_ok = -np.inf, None, False
    iters, history = 0, []
    for r in range(opts.restarts):
        x0 = init(rng_stream(opts.seed, r), r)
        res = minimize(lambda x: -objective(x, r), x0, method="L-BFGS-B",
                       options={"maxiter": opts.max_iters, "ftol": opts.step_tol,
                                "gtol": 1e-10})
        iters += int(res.nit)
        val = float(objective(res.x, r))
        if val > best_val:
            best_val, best_x, best_ok = val, (res.x, r), bool(res.success)
        history.append(best_val)
    return CapacityResult(best_val, decode(*best_x), iters, best_ok, kind, history)


def _state_search(channel: QuantumChannel, score: Callable, opts: OptimizerOptions, kind: str):
    """Maximize ``score(S(rho), S(N rho), S(N^c rho))`` over input states.

    Even restarts use the full-rank parameterization (restart 0 starts at the
    maximally mixed state); odd restarts search the pure-state boundary.
    """
    d = channel.dim_in
    dil = _Dilation(channel)

    def state(x, r):
        return _mixed_from_params(x, d) if r % 2 == 0 else _pure_from_params(x, d)

    def objective(x, r):
        rho = state(x, r)
        out_b, out_e = dil.outputs(rho)
        return score(_s(rho), _s(out_b), _s(out_e))

    def init(rng, r):
        if r == 0:
            a = np.eye(d, dtype=complex).reshape(-1)
            return np.concatenate([a.real, a.imag])
        if r == 1:
            return np.concatenate([np.eye(d)[0], np.zeros(d)])
        n = d * d if r % 2 == 0 else d
        return rng.normal(size=2 * n)

    return _multistart(objective, init, opts, state, kind)


def c1_capacity(channel: QuantumChannel, opts: OptimizerOptions | None = None) -> CapacityResult:
    """Holevo capacity: max chi over ensembles of ``dim_in**2`` pure states."""
    opts = opts or OptimizerOptions()
    _check(channel)
    d = channel.dim_in
    m = opts.ensemble_size or d * d
    k = channel.kraus_array

    def objective(x, r):
        p, z = _ensemble_from_params(x, d, m)
        u = np.einsum("kbd,md->mbk", k, z)  # columns K_k|psi_m>
        outs = u @ u.conj().transpose(0, 2, 1)
        avg = np.tensordot(p, outs, axes=1)
        return float(von_neumann_entropy(avg) - p @ entropies(outs))

    def init(rng, r):
        if r == 0 and m >= d:
            # computational basis, uniform weights, remaining states random
            z = np.zeros((m, d), dtype=complex)
            z[:d] = np.eye(d)
            z[d:] = rng.normal(size=(m - d, d)) + 1j * rng.normal(size=(m - d, d))
            w = np.r_[np.ones(d), 1e-3 * np.ones(m - d)]
            return np.concatenate([w, z.real.reshape(-1), z.imag.reshape(-1)])
        return rng.normal(size=m + 2 * m * d)

    def decode(x, r):
        p, z = _ensemble_from_params(x, d, m)
        return [(float(pi), zi.copy()) for pi, zi in zip(p, z)]

    return _multistart(objective, init, opts, decode, "c1")


def q1_capacity(channel: QuantumChannel, opts: OptimizerOptions | None = None) -> CapacityResult:
    """Max coherent information ``S(N rho) - S(N^c rho)``; may be negative."""
    opts = opts or OptimizerOptions()
    _check(channel)
    return _state_search(channel, lambda s, sb, se: sb - se, opts, "q1")


def ce_capacity(channel: QuantumChannel, opts: OptimizerOptions | None = None) -> CapacityResult:
    """Max quantum mutual information ``S(rho) + S(N rho) - S(N^c rho)``."""
    opts = opts or OptimizerOptions()
    _check(channel)
    return _state_search(channel, lambda s, sb, se: s + sb - se, opts, "ce")


def qid1_capacity(channel: QuantumChannel, opts: OptimizerOptions | None = None,
                  eps: float = STRICT_POS_EPS) -> CapacityResult:
    """Max mutual information over inputs with coherent information above ``eps``.

    Returns value 0 with witness ``None`` when no input has coherent
    information above ``eps``.  If the unconstrained mutual-information
    maximizer is feasible it is returned directly; otherwise SLSQP is run from
    the coherent-information maximizer and from random feasible-side starts.
    """
    opts = opts or OptimizerOptions()
    _check(channel)
    q1 = q1_capacity(channel, opts)
    if q1.value <= eps:
        return CapacityResult(0.0, None, q1.iterations, True, "qid1", [0.0])
    ce = ce_capacity(channel, opts)
    info = channel_information(channel, ce.witness)
    if info.coherent > eps:
        return CapacityResult(ce.value, ce.witness, q1.iterations + ce.iterations,
                              ce.converged, "qid1", ce.history)

    d = channel.dim_in
    dil = _Dilation(channel)

    def parts(x):
        rho = _mixed_from_params(x, d)
        return np.array([_s(rho), *map(_s, dil.outputs(rho))])

    start = np.linalg.cholesky(q1.witness + 1e-9 * np.eye(d))
    starts = [np.concatenate([start.reshape(-1).real, start.reshape(-1).imag])]
    for r in range(max(0, opts.restarts // 4)):
        starts.append(rng_stream(opts.seed, 10_000 + r).normal(size=2 * d * d))

    best_val = channel_information(channel, q1.witness).mutual
    best_rho = q1.witness
    history, iters = [best_val], q1.iterations + ce.iterations
    for x0 in starts:
        res = minimize(lambda x: -float(parts(x) @ [1, 1, -1]), x0, method="SLSQP",
                       constraints=[{"type": "ineq",
                                     "fun": lambda x: float(parts(x) @ [0, 1, -1]) - 2 * eps}],
                       options={"maxiter": opts.max_iters, "ftol": opts.step_tol})
        iters += int(res.nit)
        rho = _mixed_from_params(res.x, d)
        feasible = channel_information(channel, rho)
        if feasible.coherent > eps and feasible.mutual > best_val:
            best_val, best_rho = feasible.mutual, rho
        history.append(best_val)
    return CapacityResult(best_val, best_rho, iters, True, "qid1", history)


def sufficiently_low_noise(channel: QuantumChannel, opts: OptimizerOptions | None = None,
                           eps: float = STRICT_POS_EPS):
    """``(flag, witness)``: coherent information at the mutual-information maximizer > eps."""
    ce = ce_capacity(channel, opts)
    info = channel_information(channel, ce.witness)
    return info.coherent > eps, {"input": ce.witness, "info": info, "ce": ce.value}


def holevo_of_witness(channel: QuantumChannel, witness) -> float:
    return holevo_quantity(channel, [(p, np.outer(v, v.conj())) for p, v in witness])


# -- erasure channel closed forms ------------------------------------------

CURVE_COLUMNS = ("q", "C", "Q", "C_E", "old_ID_bound", "new_ID_bound", "amort_lower")


def erasure_curves(q_values) -> list[dict]:
    """Closed-form capacity and ID lower-bound columns for the erasure channel.

    ``new_ID_bound`` keeps the jump at ``q = 1/2``: ``2-2q`` below, ``1-q`` from
    there on.
    """
    rows = []
    for q in q_values:
        q = float(q)
        if not 0 <= q <= 1:
            raise ValueError(f"erasure probability {q} outside [0, 1]")
        rows.append({
            "q": q,
            "C": 1 - q,
            "Q": max(0.0, 1 - 2 * q),
            "C_E": 2 - 2 * q,
            "old_ID_bound": 2 - 4 * q if q <= 1 / 3 else 1 - q,
            "new_ID_bound": 2 - 2 * q if q < 0.5 else 1 - q,
            "amort_lower": max(0.0, 2 * q - 1),
        })
    return rows
