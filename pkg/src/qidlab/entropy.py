"""Entropic functionals.

Capacity-facing quantities are in bits.  :func:`binary_relative_entropy` is in
nats, because the operator Chernoff bound is stated with natural exponentials.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .channels import QuantumChannel, apply_matrix, apply_to_second
from .qmat import DimensionError, as_matrix, partial_trace, purify

EIG_CLAMP = 1e-12


def entropy_of_spectrum(lam: np.ndarray) -> float:
    lam = np.asarray(lam, dtype=float)
    lam = lam[lam > EIG_CLAMP]
    return float(-np.sum(lam * np.log2(lam)))


def von_neumann_entropy(rho) -> float:
    """``-tr rho log2 rho`` in bits."""
    m = as_matrix(rho)
    return max(0.0, entropy_of_spectrum(np.linalg.eigvalsh((m + m.conj().T) / 2)))


def entropies(stack: np.ndarray) -> np.ndarray:
    """Von Neumann entropies (bits) of a stack of Hermitian matrices."""
    lam = np.linalg.eigvalsh(stack)
    safe = np.where(lam > EIG_CLAMP, lam, 1.0)
    return -np.sum(np.where(lam > EIG_CLAMP, lam * np.log2(safe), 0.0), axis=-1)


def binary_entropy(p: float) -> float:
    return entropy_of_spectrum(np.array([p, 1 - p]))


def binary_relative_entropy(alpha: float, mu: float) -> float:
    """``D(alpha||mu) = alpha ln(alpha/mu) + (1-alpha) ln((1-alpha)/(1-mu))`` in nats.

    Uses ``0 ln 0 = 0``.  ``mu`` must lie strictly inside ``(0, 1)``.
    """
    if not 0 < mu < 1:
        raise ValueError(f"mu must be in (0, 1), got {mu}")
    if not 0 <= alpha <= 1:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    d = 0.0
    if alpha > 0:
        d += alpha * math.log(alpha / mu)
    if alpha < 1:
        d += (1 - alpha) * math.log((1 - alpha) / (1 - mu))
    return max(d, 0.0)


@dataclass(frozen=True)
class InfoReport:
    """Entropies (bits) of ``rho^{AB} = (id (x) N)(phi)`` for a purification ``phi``.

    ``A`` is the purifying reference, ``B`` the channel output.
    """

    mutual: float
    coherent: float
    entropy_B: float
    entropy_AB: float
    entropy_A: float

    def to_json(self) -> dict:
        return asdict(self)


def joint_output(channel: QuantumChannel, rho_in) -> np.ndarray:
    """``(id_R (x) N)(phi)`` on ``R (x) B`` where ``phi`` purifies ``rho_in``."""
    m = as_matrix(rho_in)
    if m.shape != (channel.dim_in, channel.dim_in):
        raise DimensionError(f"input of shape {m.shape} for channel with dim_in {channel.dim_in}")
    d = channel.dim_in
    psi = np.asarray(purify(m).amplitudes)
    # purify puts the system first; swap so the reference is the first factor
    psi = psi.reshape(d, d).T.reshape(-1)
    return apply_to_second(channel, np.outer(psi, psi.conj()), d)


def channel_information(channel: QuantumChannel, rho_in) -> InfoReport:
    d = channel.dim_in
    rho_ab = joint_output(channel, rho_in)
    dims = (d, channel.dim_out)
    s_a = von_neumann_entropy(partial_trace(rho_ab, 0, dims))
    s_b = von_neumann_entropy(partial_trace(rho_ab, 1, dims))
    s_ab = von_neumann_entropy(rho_ab)
    return InfoReport(mutual=s_a + s_b - s_ab, coherent=s_b - s_ab,
                      entropy_B=s_b, entropy_AB=s_ab, entropy_A=s_a)


def holevo_quantity(channel: QuantumChannel, ensemble: Sequence) -> float:
    """Holevo chi (bits) of ``{(p_x, rho_x)}`` sent through ``channel``."""
    if not ensemble:
        raise ValueError("empty ensemble")
    probs = np.array([float(p) for p, _ in ensemble])
    if np.any(probs < -1e-12) or abs(probs.sum() - 1) > 1e-9:
        raise ValueError("ensemble probabilities must be nonnegative and sum to 1")
    outs = []
    for _, state in ensemble:
        m = as_matrix(state)
        if m.shape != (channel.dim_in, channel.dim_in):
            raise DimensionError("ensemble state does not match channel input")
        outs.append(apply_matrix(channel, m))
    outs = np.stack(outs)
    avg = np.tensordot(probs, outs, axes=1)
    return von_neumann_entropy(avg) - float(probs @ entropies(outs))
