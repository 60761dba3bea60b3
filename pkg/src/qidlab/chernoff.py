"""Monte-Carlo validation of the operator Chernoff bound.

For i.i.d. ``0 <= X_i <= 1`` in ``d x d`` Hermitian matrices with ``E X_i = mu 1``::

    Pr{ mean(X) not<= alpha 1 } <= d exp(-n D(alpha||mu))     (mu <= alpha <= 1)
    Pr{ mean(X) not>= alpha 1 } <= d exp(-n D(alpha||mu))     (0 <= alpha <= mu)
    Pr{ mean(X) not in [(1-eps) mu 1, (1+eps) mu 1] } <= 2d exp(-n mu eps^2 / 4)

All ensembles here have finite support, so the empirical mean of ``n`` draws
is determined by the outcome counts; trials sample those counts from a
multinomial instead of drawing ``n`` matrices each.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

from .entropy import binary_relative_entropy
from .qmat import haar_unitary, is_operator_interval, rng_stream

Z95 = 1.959963984540054
# matrix-inequality slack: means such as 15/20 vs alpha = 0.75 must not count as exceeding
EVENT_TOL = 1e-12
CHUNK = 20_000
DIRECTIONS = ("upper", "lower", "two_sided")


@dataclass(frozen=True, eq=False)
class MatrixEnsembleSpec:
    """Finitely supported matrix distribution ``{(p_j, M_j)}`` with mean ``mu 1``."""

    kind: str
    d: int
    mu: float
    probs: np.ndarray
    outcomes: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        m = np.asarray(self.outcomes, dtype=complex)
        if m.shape != (len(p), self.d, self.d):
            raise ValueError("outcomes must be a stack of d x d matrices, one per probability")
        if np.any(p < 0) or abs(p.sum() - 1) > 1e-12:
            raise ValueError("outcome probabilities must form a distribution")
        for x in m:
            if not is_operator_interval(x, 1e-10):
                raise ValueError("every outcome must satisfy 0 <= X <= 1")
        mean = np.tensordot(p, m, axes=1)
        if np.max(np.abs(mean - self.mu * np.eye(self.d))) > 1e-8:
            raise ValueError("expectation is not mu * identity")
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "outcomes", m)

    @classmethod
    def bernoulli_scalar(cls, mu: float, d: int = 2) -> "MatrixEnsembleSpec":
        """``X = b 1`` with ``b ~ Bernoulli(mu)``."""
        return cls("bernoulli_scalar", d, mu, np.array([1 - mu, mu]),
                   np.stack([np.zeros((d, d)), np.eye(d)]))

    @classmethod
    def fixed(cls, mu: float, d: int = 2) -> "MatrixEnsembleSpec":
        return cls("fixed", d, mu, np.array([1.0]), (mu * np.eye(d))[None])

    @classmethod
    def random_projector(cls, d: int, mu: float, seed: int = 0) -> "MatrixEnsembleSpec":
        """Uniform choice among ``1/mu`` orthogonal rank-``mu d`` projectors.

        The projectors split a Haar-random basis (from ``seed``) into equal
        blocks, so they sum to the identity and the mean is ``mu 1``.
        """
        blocks = round(1 / mu)
        rank = mu * d
        if abs(blocks * mu - 1) > 1e-12 or abs(rank - round(rank)) > 1e-12:
            raise ValueError(f"random_projector needs 1/mu and mu*d integral (d={d}, mu={mu})")
        rank = round(rank)
        u = haar_unitary(d, rng_stream(seed, d, blocks))
        projs = [u[:, j * rank:(j + 1) * rank] @ u[:, j * rank:(j + 1) * rank].conj().T
                 for j in range(blocks)]
        return cls("random_projector", d, mu, np.full(blocks, 1 / blocks), np.stack(projs))

    @classmethod
    def custom(cls, items, mu: float) -> "MatrixEnsembleSpec":
        probs = [float(p) for p, _ in items]
        mats = np.stack([np.asarray(m, dtype=complex) for _, m in items])
        return cls("custom", mats.shape[1], mu, np.array(probs), mats)

    def describe(self) -> str:
        return f"{self.kind}(d={self.d},mu={self.mu:g})"


@dataclass(frozen=True)
class TailReport:
    empirical: float
    ci_halfwidth: float
    ci_low: float
    ci_high: float
    bound: float
    n: int
    trials: int
    direction: str
    alpha: float

    def to_json(self) -> dict:
        return asdict(self)


def chernoff_bound(n: int, d: int, alpha: float, mu: float, form: str = "exact",
                   eps: float | None = None, direction: str | None = None) -> float:
    """Right-hand side of the operator Chernoff bound, natural-log units.

    ``form="exact"`` gives ``d exp(-n D(alpha||mu))``; the direction (upper for
    ``alpha >= mu``, lower for ``alpha <= mu``) is inferred when omitted and
    range-checked when supplied.  ``form="corollary"`` gives
    ``2d exp(-n mu eps^2 / 4)`` for ``0 <= eps <= 1/2``.
    """
    if n < 1 or d < 1:
        raise ValueError("n and d must be positive")
    if form == "corollary":
        if eps is None or not 0 <= eps <= 0.5:
            raise ValueError("corollary form needs 0 <= eps <= 1/2")
        return 2 * d * math.exp(-0.25 * n * mu * eps**2)
    if form != "exact":
        raise ValueError(f"unknown form {form!r}")
    if direction is None:
        direction = "upper" if alpha >= mu else "lower"
    if direction == "upper" and not mu <= alpha <= 1:
        raise ValueError(f"upper tail needs mu <= alpha <= 1 (alpha={alpha}, mu={mu})")
    if direction == "lower" and not 0 <= alpha <= mu:
        raise ValueError(f"lower tail needs 0 <= alpha <= mu (alpha={alpha}, mu={mu})")
    if direction not in ("upper", "lower"):
        raise ValueError(f"exact form has no direction {direction!r}")
    return d * math.exp(-n * binary_relative_entropy(alpha, mu))


def wilson_interval(hits: int, trials: int, z: float = Z95) -> tuple[float, float]:
    if trials <= 0:
        raise ValueError("trials must be positive")
    p = hits / trials
    den = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / den
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / den
    lo = 0.0 if hits == 0 else max(0.0, centre - half)
    hi = 1.0 if hits == trials else min(1.0, centre + half)
    return lo, hi


def _event(eigs: np.ndarray, spec: MatrixEnsembleSpec, alpha: float, direction: str,
           eps: float | None) -> np.ndarray:
    if direction == "upper":
        return eigs[..., -1] > alpha + EVENT_TOL
    if direction == "lower":
        return eigs[..., 0] < alpha - EVENT_TOL
    lo, hi = (1 - eps) * spec.mu, (1 + eps) * spec.mu
    return (eigs[..., 0] < lo - EVENT_TOL) | (eigs[..., -1] > hi + EVENT_TOL)


def _bound_for(spec, n, alpha, direction, eps):
    if direction == "two_sided":
        return chernoff_bound(n, spec.d, alpha, spec.mu, "corollary", eps=eps)
    return chernoff_bound(n, spec.d, alpha, spec.mu, "exact", direction=direction)


def empirical_tail(spec: MatrixEnsembleSpec, n: int, alpha: float, direction: str = "upper",
                   trials: int = 100_000, seed: int = 0, eps: float | None = None,
                   stream: int = 0) -> TailReport:
    """Estimate the tail probability of the empirical mean of ``n`` draws.

    ``direction="two_sided"`` uses ``eps`` (``alpha`` is then ignored by the
    event and kept only for reporting).  Counts come from the stream
    ``(seed, stream)``.
    """
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}")
    if direction == "two_sided" and eps is None:
        raise ValueError("two-sided tail needs eps")
    if n < 1 or trials < 1:
        raise ValueError("n and trials must be positive")
    rng = rng_stream(seed, stream)
    hits, done = 0, 0
    while done < trials:
        m = min(CHUNK, trials - done)
        counts = rng.multinomial(n, spec.probs, size=m)
        means = np.tensordot(counts / n, spec.outcomes, axes=1)
        eigs = np.linalg.eigvalsh(means)
        hits += int(np.count_nonzero(_event(eigs, spec, alpha, direction, eps)))
        done += m
    p = hits / trials
    lo, hi = wilson_interval(hits, trials)
    return TailReport(empirical=p, ci_halfwidth=max(p - lo, hi - p), ci_low=lo, ci_high=hi,
                      bound=_bound_for(spec, n, alpha, direction, eps), n=n, trials=trials,
                      direction=direction, alpha=alpha)


def exact_binomial_tail(n: int, mu: float, alpha: float, direction: str = "upper") -> float:
    """``P(Bin(n, mu)/n > alpha)`` (upper) or ``< alpha`` (lower), summed exactly."""
    p = Fraction(mu).limit_denominator(10**9)
    a = Fraction(alpha).limit_denominator(10**9)
    total = Fraction(0)
    for k in range(n + 1):
        frac = Fraction(k, n)
        if (direction == "upper" and frac > a) or (direction == "lower" and frac < a):
            total += math.comb(n, k) * p**k * (1 - p) ** (n - k)
    return float(total)


def exact_two_outcome_tail(spec: MatrixEnsembleSpec, n: int, alpha: float,
                           direction: str = "upper", eps: float | None = None) -> float:
    """Exact tail for ensembles with two outcomes, by enumerating the count of outcome 1."""
    if len(spec.probs) != 2:
        raise ValueError("exact enumeration implemented for two-outcome ensembles only")
    p0, p1 = spec.probs
    m0, m1 = spec.outcomes
    k = np.arange(n + 1)
    means = ((n - k)[:, None, None] * m0 + k[:, None, None] * m1) / n
    hit = _event(np.linalg.eigvalsh(means), spec, alpha, direction, eps)
    logw = np.array([math.lgamma(n + 1) - math.lgamma(i + 1) - math.lgamma(n - i + 1)
                     for i in k])
    with np.errstate(divide="ignore"):
        logw = logw + k * np.log(p1) + (n - k) * np.log(p0)
    return float(np.sum(np.exp(logw[hit])))


@dataclass(frozen=True)
class BoundCase:
    spec: MatrixEnsembleSpec
    n: int
    alpha: float
    direction: str = "upper"
    eps: float | None = None


def default_suite(seed: int = 0) -> list[BoundCase]:
    """Cases over ``d in {2,4}``, ``mu in {1/4, 1/2}``, ``n in {10, 50, 200}``, both tails.

    Block projectors are used where ``mu d`` is integral; ``d = 2, mu = 1/4``
    falls back to the scalar Bernoulli ensemble, and three extra scalar
    Bernoulli cases at ``d = 4, mu = 1/2`` exercise the binomial oracle.
    """
    cases = []
    for d in (2, 4):
        for mu in (0.25, 0.5):
            if abs(mu * d - round(mu * d)) < 1e-12 and mu * d >= 1:
                spec = MatrixEnsembleSpec.random_projector(d, mu, seed)
            else:
                spec = MatrixEnsembleSpec.bernoulli_scalar(mu, d)
            for n in (10, 50, 200):
                cases.append(BoundCase(spec, n, 1.5 * mu, "upper"))
                cases.append(BoundCase(spec, n, 0.5 * mu, "lower"))
    bern = MatrixEnsembleSpec.bernoulli_scalar(0.5, 4)
    for n in (10, 50, 200):
        cases.append(BoundCase(bern, n, 0.75, "upper"))
    return cases


@dataclass
class BoundRow:
    case: str
    n: int
    d: int
    alpha: float
    mu: float
    direction: str
    empirical: float
    ci: float
    bound: float
    passed: bool
    exact: float | None = None
    exact_in_ci: bool | None = None


@dataclass
class BoundValidation:
    passed: bool
    rows: list

    def to_json(self) -> dict:
        return {"passed": self.passed, "rows": [asdict(r) for r in self.rows]}


def validate_bound(cases, trials: int = 100_000, seed: int = 0) -> BoundValidation:
    """Pass iff ``empirical - ci_halfwidth <= bound`` for every case.

    Two-outcome cases also carry the exact tail and whether it lies in the
    Wilson interval; that agreement is reported but does not gate ``passed``.
    """
    rows = []
    for i, c in enumerate(cases):
        rep = empirical_tail(c.spec, c.n, c.alpha, c.direction, trials, seed, c.eps, stream=i)
        exact = in_ci = None
        if len(c.spec.probs) == 2:
            exact = exact_two_outcome_tail(c.spec, c.n, c.alpha, c.direction, c.eps)
            in_ci = bool(rep.ci_low - 1e-15 <= exact <= rep.ci_high + 1e-15)
        rows.append(BoundRow(c.spec.describe(), c.n, c.spec.d, c.alpha, c.spec.mu, c.direction,
                             rep.empirical, rep.ci_halfwidth, rep.bound,
                             rep.empirical - rep.ci_halfwidth <= rep.bound, exact, in_ci))
    return BoundValidation(all(r.passed for r in rows), rows)
