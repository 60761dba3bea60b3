"""Quantum channels in Kraus form.

A :class:`QuantumChannel` stores a finite Kraus family ``{K_k}`` with
``K_k : C^dim_in -> C^dim_out``.  The Stinespring isometry used throughout is
``V = sum_k K_k (x) |k>_E`` (output factor first, environment second).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .qmat import (
    DensityOperator,
    DimensionError,
    TOL_PSD,
    as_matrix,
    hermitian_eig,
    matrix_from_json,
    matrix_to_json,
    partial_trace,
)

TP_TOL = 1e-8
RANK_TOL = 1e-10


class ChannelError(ValueError):
    """Malformed channel specification or failed cptp validation."""


@dataclass(frozen=True)
class ValidationReport:
    tp_residual: float
    choi_min_eig: float

    @property
    def passed(self) -> bool:
        return self.tp_residual <= TP_TOL and self.choi_min_eig >= -TP_TOL

    def to_json(self) -> dict:
        return {"tp_residual": self.tp_residual, "choi_min_eig": self.choi_min_eig,
                "passed": self.passed}


@dataclass(frozen=True, eq=False)
class QuantumChannel:
    dim_in: int
    dim_out: int
    kraus: tuple
    label: str = ""

    def __post_init__(self):
        ops = []
        for k in self.kraus:
            k = np.array(k, dtype=complex)
            if k.shape != (self.dim_out, self.dim_in):
                raise DimensionError(
                    f"Kraus operator of shape {k.shape}, expected {(self.dim_out, self.dim_in)}")
            k.setflags(write=False)
            ops.append(k)
        if not ops:
            raise ChannelError("Kraus family must be nonempty")
        object.__setattr__(self, "kraus", tuple(ops))

    @classmethod
    def from_kraus(cls, kraus: Iterable, label: str = "") -> "QuantumChannel":
        ops = [np.atleast_2d(np.asarray(k, dtype=complex)) for k in kraus]
        if not ops:
            raise ChannelError("Kraus family must be nonempty")
        dout, din = ops[0].shape
        return cls(din, dout, tuple(ops), label)

    @property
    def kraus_array(self) -> np.ndarray:
        return np.stack(self.kraus)

    def __call__(self, rho):
        return apply(self, rho)

    def to_json(self) -> dict:
        return {"dim_in": self.dim_in, "dim_out": self.dim_out,
                "kraus": [matrix_to_json(k) for k in self.kraus], "label": self.label}


@dataclass(frozen=True, eq=False)
class StinespringIsometry:
    dim_in: int
    dim_B: int
    dim_E: int
    matrix: np.ndarray

    def __post_init__(self):
        v = np.array(self.matrix, dtype=complex)
        if v.shape != (self.dim_B * self.dim_E, self.dim_in):
            raise DimensionError(f"isometry shape {v.shape} inconsistent with dims")
        res = np.max(np.abs(v.conj().T @ v - np.eye(self.dim_in)))
        if res > TP_TOL:
            raise ChannelError(f"V is not an isometry (residual {res:.3g})")
        v.setflags(write=False)
        object.__setattr__(self, "matrix", v)

    def dilate(self, rho) -> np.ndarray:
        """``V rho V^dagger`` on ``B (x) E``."""
        m = as_matrix(rho)
        return self.matrix @ m @ self.matrix.conj().T


@dataclass(frozen=True, eq=False)
class Povm:
    outcomes: tuple

    def __post_init__(self):
        ops = tuple(np.array(m, dtype=complex) for m in self.outcomes)
        if not ops:
            raise ChannelError("POVM needs at least one outcome")
        d = ops[0].shape[0]
        for m in ops:
            if m.shape != (d, d):
                raise DimensionError("POVM elements must share one square shape")
            lam = np.linalg.eigvalsh((m + m.conj().T) / 2)
            if np.max(np.abs(m - m.conj().T)) > TP_TOL or lam[0] < -TOL_PSD:
                raise ChannelError("POVM element is not positive semidefinite")
        res = np.max(np.abs(sum(ops) - np.eye(d)))
        if res > TP_TOL:
            raise ChannelError(f"POVM elements do not sum to identity (residual {res:.3g})")
        for m in ops:
            m.setflags(write=False)
        object.__setattr__(self, "outcomes", ops)

    @property
    def dim(self) -> int:
        return self.outcomes[0].shape[0]

    def __len__(self):
        return len(self.outcomes)

    @classmethod
    def computational(cls, dim: int) -> "Povm":
        return cls(tuple(np.diag(np.eye(dim)[i]) for i in range(dim)))


# -- core operations --------------------------------------------------------

def choi(channel: QuantumChannel) -> np.ndarray:
    """Unnormalized Choi matrix ``sum_ij |i><j| (x) N(|i><j|)`` (input first)."""
    # vec(K) with input index first: W[(i, b), k] = K_k[b, i]
    w = channel.kraus_array.transpose(2, 1, 0).reshape(channel.dim_in * channel.dim_out, -1)
    return w @ w.conj().T


def validate_cptp(channel: QuantumChannel) -> ValidationReport:
    k = channel.kraus_array
    s = np.einsum("kba,kbc->ac", k.conj(), k)
    resid = float(np.linalg.norm(s - np.eye(channel.dim_in), ord=2))
    j = choi(channel)
    lam_min = float(np.linalg.eigvalsh((j + j.conj().T) / 2)[0])
    return ValidationReport(resid, lam_min)


def ensure_cptp(channel: QuantumChannel) -> QuantumChannel:
    rep = validate_cptp(channel)
    if not rep.passed:
        raise ChannelError(
            f"channel {channel.label!r} is not cptp: trace residual {rep.tp_residual:.6g}, "
            f"min Choi eigenvalue {rep.choi_min_eig:.6g}")
    return channel


def apply_matrix(channel: QuantumChannel, m: np.ndarray) -> np.ndarray:
    """``sum_k K m K^dagger`` for an arbitrary (not necessarily positive) operator."""
    k = channel.kraus_array
    return (k @ m @ k.conj().transpose(0, 2, 1)).sum(axis=0)


def apply(channel: QuantumChannel, rho):
    """Apply the channel; returns a :class:`DensityOperator` when given a state object."""
    m = as_matrix(rho)
    if m.shape != (channel.dim_in, channel.dim_in):
        raise DimensionError(f"input of shape {m.shape} for channel with dim_in {channel.dim_in}")
    out = apply_matrix(channel, m)
    if isinstance(rho, np.ndarray) or isinstance(rho, (list, tuple)):
        return out
    return DensityOperator(out)


def apply_batch(channel: QuantumChannel, states: np.ndarray) -> np.ndarray:
    """Channel applied to a stack of matrices of shape ``(n, d_in, d_in)``."""
    out = 0
    for k in channel.kraus:
        out = out + k @ states @ k.conj().T
    return out


def apply_to_second(channel: QuantumChannel, m: np.ndarray, dim_ref: int) -> np.ndarray:
    """``(id_R (x) N)(m)`` for ``m`` on ``R (x) A``."""
    t = np.asarray(m).reshape(dim_ref, channel.dim_in, dim_ref, channel.dim_in)
    k = channel.kraus_array
    out = np.einsum("kab,rbsc,kdc->rasd", k, t, k.conj(), optimize=True)
    return out.reshape(dim_ref * channel.dim_out, dim_ref * channel.dim_out)


def adjoint(channel: QuantumChannel, x: np.ndarray) -> np.ndarray:
    """Heisenberg-picture map ``sum_k K^dagger x K`` (pull-back of an output test)."""
    k = channel.kraus_array
    return (k.conj().transpose(0, 2, 1) @ np.asarray(x, dtype=complex) @ k).sum(axis=0)


def minimal_kraus(channel: QuantumChannel, tol: float = RANK_TOL) -> tuple:
    """Linearly independent Kraus family describing the same channel.

    A family that is already independent is returned unchanged.  Otherwise the
    matrix of vectorized operators ``W`` is factored as ``W = U S X^dagger``
    and the columns of ``U S`` above ``tol`` become the new family; since
    ``W W^dagger`` is preserved, so is the channel.
    """
    k = channel.kraus_array
    w = k.reshape(len(k), -1).T
    s = np.linalg.svd(w, compute_uv=False)
    rank = int(np.sum(s > tol * max(1.0, s[0] if s.size else 1.0)))
    if rank == len(k):
        return channel.kraus
    u, s, _ = np.linalg.svd(w, full_matrices=False)
    rank = max(rank, 1)
    cols = u[:, :rank] * s[:rank]
    return tuple(cols[:, i].reshape(channel.dim_out, channel.dim_in) for i in range(rank))


def stinespring(channel: QuantumChannel) -> StinespringIsometry:
    ops = minimal_kraus(channel)
    e = len(ops)
    v = np.stack(ops, axis=-1).transpose(0, 2, 1).reshape(channel.dim_out * e, channel.dim_in)
    return StinespringIsometry(channel.dim_in, channel.dim_out, e, v)


def complementary(channel: QuantumChannel):
    """Return ``(V, complement)`` where the complement is ``rho -> tr_B V rho V^dagger``.

    Environment Kraus operators are ``F_b = sum_k |k><b| K_k`` for each output
    basis vector ``b``.
    """
    v = stinespring(channel)
    ops = np.stack(minimal_kraus(channel))  # (e, dout, din)
    comp_kraus = [ops[:, b, :] for b in range(channel.dim_out)]
    comp = QuantumChannel(channel.dim_in, v.dim_E, tuple(comp_kraus),
                          f"complement({channel.label})")
    return v, comp


def complement_output(channel: QuantumChannel, rho) -> np.ndarray:
    """Environment state ``tr_B V rho V^dagger`` without building the channel object."""
    v = stinespring(channel)
    return partial_trace(v.dilate(rho), 1, (v.dim_B, v.dim_E))


# -- standard channels ------------------------------------------------------

def identity(d: int = 2) -> QuantumChannel:
    return QuantumChannel(d, d, (np.eye(d),), f"identity({d})")


def erasure(q: float) -> QuantumChannel:
    """Qubit erasure channel into a qutrit; the flag is basis vector ``|2>``."""
    q = float(q)
    if not 0 <= q <= 1:
        raise ChannelError(f"erasure probability {q} outside [0, 1]")
    embed = np.zeros((3, 2))
    embed[0, 0] = embed[1, 1] = 1
    flag0 = np.zeros((3, 2))
    flag0[2, 0] = 1
    flag1 = np.zeros((3, 2))
    flag1[2, 1] = 1
    ops = (np.sqrt(1 - q) * embed, np.sqrt(q) * flag0, np.sqrt(q) * flag1)
    return QuantumChannel(2, 3, ops, f"erasure({q:g})")


def weyl_operators(d: int) -> list:
    """The ``d^2`` clock-and-shift operators ``X^a Z^b``."""
    w = np.exp(2j * np.pi / d)
    x = np.roll(np.eye(d), 1, axis=0)
    z = np.diag(w ** np.arange(d))
    return [np.linalg.matrix_power(x, a) @ np.linalg.matrix_power(z, b)
            for a in range(d) for b in range(d)]


def depolarizing(p: float, d: int = 2) -> QuantumChannel:
    """``rho -> (1-p) rho + p tr(rho) 1/d``."""
    p = float(p)
    if not 0 <= p <= 1 + 1 / (d * d - 1):
        raise ChannelError(f"depolarizing parameter {p} out of range")
    ops = weyl_operators(d)
    coeffs = [1 - p + p / d**2] + [p / d**2] * (d * d - 1)
    kraus = tuple(np.sqrt(c) * u for c, u in zip(coeffs, ops) if c > 0)
    return QuantumChannel(d, d, kraus, f"depolarizing({p:g},{d})")


def dephasing(d: int = 2) -> QuantumChannel:
    """Completely dephasing channel in the computational basis."""
    ops = tuple(np.diag(np.eye(d)[b]).astype(complex) for b in range(d))
    return QuantumChannel(d, d, ops, f"dephasing({d})")


def classical(kernel) -> QuantumChannel:
    """Embed a stochastic kernel; ``kernel[x][y] = N(y|x)``, rows sum to one."""
    n = np.asarray(kernel, dtype=float)
    if n.ndim != 2 or np.any(n < -1e-12) or np.max(np.abs(n.sum(axis=1) - 1)) > 1e-9:
        raise ChannelError("kernel must be a row-stochastic matrix kernel[x][y] = N(y|x)")
    nx, ny = n.shape
    ops = []
    for x in range(nx):
        for y in range(ny):
            if n[x, y] > 0:
                k = np.zeros((ny, nx), dtype=complex)
                k[y, x] = np.sqrt(n[x, y])
                ops.append(k)
    return QuantumChannel(nx, ny, tuple(ops), "classical")


def bsc(flip: float) -> QuantumChannel:
    f = float(flip)
    if not 0 <= f <= 1:
        raise ChannelError(f"flip probability {f} outside [0, 1]")
    ch = classical([[1 - f, f], [f, 1 - f]])
    return QuantumChannel(2, 2, ch.kraus, f"bsc({f:g})")


def cq(states: Sequence) -> QuantumChannel:
    """``xi -> sum_x <x|xi|x> rho_x``."""
    mats = [as_matrix(s) for s in states]
    for m in mats:
        DensityOperator(m)
    dout, nx = mats[0].shape[0], len(mats)
    ops = []
    for x, m in enumerate(mats):
        lam, vecs = hermitian_eig(m)
        for l, v in zip(lam, vecs.T):
            if l > RANK_TOL:
                k = np.zeros((dout, nx), dtype=complex)
                k[:, x] = np.sqrt(l) * v
                ops.append(k)
    return QuantumChannel(nx, dout, tuple(ops), "cq")


def qc(povm: Povm) -> QuantumChannel:
    """``rho -> sum_y tr(rho M_y) |y><y|``."""
    if not isinstance(povm, Povm):
        povm = Povm(tuple(povm))
    d, ny = povm.dim, len(povm)
    ops = []
    for y, m in enumerate(povm.outcomes):
        lam, vecs = hermitian_eig(m)
        for l, v in zip(lam, vecs.T):
            if l > RANK_TOL:
                k = np.zeros((ny, d), dtype=complex)
                k[y, :] = np.sqrt(l) * v.conj()
                ops.append(k)
    return QuantumChannel(d, ny, tuple(ops), "qc")


def replacement(sigma, dim_in: int) -> QuantumChannel:
    """Constant channel ``rho -> tr(rho) sigma``."""
    s = as_matrix(sigma)
    DensityOperator(s)
    lam, vecs = hermitian_eig(s)
    ops = []
    for l, v in zip(lam, vecs.T):
        if l > RANK_TOL:
            for i in range(dim_in):
                k = np.zeros((s.shape[0], dim_in), dtype=complex)
                k[:, i] = np.sqrt(l) * v
                ops.append(k)
    return QuantumChannel(dim_in, s.shape[0], tuple(ops), "replacement")


def isometric(v: np.ndarray, label: str = "isometry") -> QuantumChannel:
    v = np.asarray(v, dtype=complex)
    return ensure_cptp(QuantumChannel(v.shape[1], v.shape[0], (v,), label))


def random_channel(dim_in: int, dim_out: int, n_kraus: int, rng) -> QuantumChannel:
    """Channel from a Haar-random isometry ``C^dim_in -> C^dim_out (x) C^n_kraus``."""
    from .qmat import random_isometry

    v = random_isometry(dim_out * n_kraus, dim_in, rng)
    t = v.reshape(dim_out, n_kraus, dim_in)
    return QuantumChannel(dim_in, dim_out, tuple(t[:, k, :] for k in range(n_kraus)),
                          f"random({dim_in},{dim_out},{n_kraus})")


def mixture(channels: Sequence[QuantumChannel], weights: Sequence[float]) -> QuantumChannel:
    """Convex combination ``sum_i w_i N_i`` (same input/output dimensions)."""
    ops = []
    for ch, w in zip(channels, weights):
        if w > 0:
            ops.extend(np.sqrt(w) * k for k in ch.kraus)
    first = channels[0]
    return QuantumChannel(first.dim_in, first.dim_out, tuple(ops), "mixture")


def tensor(*channels: QuantumChannel) -> QuantumChannel:
    ops = [np.ones((1, 1), dtype=complex)]
    for ch in channels:
        ops = [np.kron(a, b) for a in ops for b in ch.kraus]
    din = int(np.prod([c.dim_in for c in channels]))
    dout = int(np.prod([c.dim_out for c in channels]))
    label = " (x) ".join(c.label for c in channels)
    return QuantumChannel(din, dout, tuple(ops), label)


def compose(*channels: QuantumChannel) -> QuantumChannel:
    """Sequential composition; ``channels[0]`` acts first."""
    cur = channels[0]
    for nxt in channels[1:]:
        if nxt.dim_in != cur.dim_out:
            raise DimensionError(
                f"cannot feed output dim {cur.dim_out} into input dim {nxt.dim_in}")
        ops = tuple(b @ a for a in cur.kraus for b in nxt.kraus)
        cur = QuantumChannel(cur.dim_in, nxt.dim_out, ops, f"{nxt.label} o {cur.label}")
    return cur


def combine(channels: Sequence[QuantumChannel], mode: str = "tensor") -> QuantumChannel:
    if not channels:
        raise ChannelError("nothing to combine")
    if mode == "tensor":
        return tensor(*channels)
    if mode == "compose":
        return compose(*channels)
    raise ValueError(f"unknown combine mode {mode!r}")


# -- specs and (de)serialization --------------------------------------------

def _kernel_arg(spec):
    return spec.get("kernel") or spec.get("N")


_STANDARD: dict[str, Callable[[dict], QuantumChannel]] = {
    "identity": lambda s: identity(int(s.get("d", 2))),
    "erasure": lambda s: erasure(s["q"]),
    "depolarizing": lambda s: depolarizing(s["p"], int(s.get("d", 2))),
    "dephasing": lambda s: dephasing(int(s.get("d", 2))),
    "bsc": lambda s: bsc(s.get("flip", s.get("p"))),
    "classical": lambda s: classical(_kernel_arg(s)),
    "cq": lambda s: cq([matrix_from_json(m) for m in s["states"]]),
    "qc": lambda s: qc(Povm(tuple(matrix_from_json(m) for m in s["povm"]))),
}


def make_standard(spec: dict) -> QuantumChannel:
    """Build a zoo channel from a dict like ``{"standard": "erasure", "q": 0.25}``."""
    name = spec.get("standard")
    if name not in _STANDARD:
        raise ChannelError(f"unknown standard channel {name!r}; known: {sorted(_STANDARD)}")
    try:
        ch = _STANDARD[name](spec)
    except (KeyError, TypeError) as exc:
        raise ChannelError(f"malformed {name} spec: missing or bad parameter {exc}") from exc
    return ensure_cptp(ch)


# shorthand positional parameter names per channel, e.g. "depolarizing:0.1:2"
_SHORTHAND = {
    "identity": ("d",), "erasure": ("q",), "depolarizing": ("p", "d"),
    "dephasing": ("d",), "bsc": ("flip",),
}


def parse_shorthand(text: str) -> dict:
    name, *params = text.strip().split(":")
    if name not in _SHORTHAND:
        raise ChannelError(f"no shorthand form for {name!r}")
    keys = _SHORTHAND[name]
    if len(params) > len(keys):
        raise ChannelError(f"too many parameters for {name}")
    try:
        spec = {k: float(v) for k, v in zip(keys, params)}
    except ValueError as exc:
        raise ChannelError(f"bad numeric parameter in {text!r}") from exc
    spec["standard"] = name
    return spec


def channel_from_json(data: dict) -> QuantumChannel:
    """Deserialize and validate.  Accepts explicit Kraus form or a ``standard`` spec."""
    if "standard" in data:
        return make_standard(data)
    try:
        kraus = tuple(matrix_from_json(k) for k in data["kraus"])
        ch = QuantumChannel(int(data["dim_in"]), int(data["dim_out"]), kraus,
                            str(data.get("label", "")))
    except (KeyError, TypeError, ValueError) as exc:
        raise ChannelError(f"malformed channel JSON: {exc}") from exc
    return ensure_cptp(ch)


def channel_to_json_text(channel: QuantumChannel) -> str:
    return json.dumps(channel.to_json())
