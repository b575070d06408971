"""Link probabilities of q-composite key predistribution under on/off channels.

Every probability is available in two arithmetic modes, chosen per call:

- ``Mode.EXACT`` returns :class:`fractions.Fraction` values built from
  arbitrary-precision binomial coefficients. Use it for small parameters and
  as a test oracle.
- ``Mode.FLOAT`` evaluates in log space (``scipy.special.gammaln`` plus
  ``log1p`` products) so that pools of 10^6 keys do not overflow.

The channel probability ``p`` is a float. In exact mode it is read back through
its shortest decimal repr, so ``p=0.3`` contributes exactly ``3/10``.
"""

from __future__ import annotations

import logging
import math
try:
    from enum import StrEnum
except ImportError:  # Python < 3.11
    from enum import Enum

    class StrEnum(str, Enum):
        __str__ = str.__str__
        __format__ = str.__format__
from fractions import Fraction
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.special import gammaln

from ..errors import InvalidArgumentError

logger = logging.getLogger(__name__)

Probability = Fraction | float


class Mode(StrEnum):
    EXACT = "exact"
    FLOAT = "float"


class ModelParams(BaseModel):
    """One point (n, K, P, q, p) of the random graph model."""

    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=2)
    """Number of sensors."""

    K: int = Field(ge=1)
    """Key ring size."""

    P: int = Field(ge=1)
    """Key pool size."""

    q: int = Field(ge=1)
    """Minimum number of shared keys for a secure link."""

    p: float = Field(ge=0.0, le=1.0)
    """Probability that a channel is on."""

    @model_validator(mode="after")
    def _check_ordering(self) -> ModelParams:
        if not self.q <= self.K <= self.P:
            raise ValueError(f"need 1 <= q <= K <= P, got q={self.q}, K={self.K}, P={self.P}")
        return self


class ScalingPoint(BaseModel):
    """Edge probability t together with its deviation alpha from the k-connectivity threshold."""

    model_config = ConfigDict(frozen=True)

    t: float = Field(ge=0.0, le=1.0)
    alpha: float
    k: int = Field(ge=1)
    n: int = Field(ge=3)

    @model_validator(mode="after")
    def _check_round_trip(self) -> ScalingPoint:
        rebuilt = edge_prob_from_alpha(self.alpha, self.n, self.k)
        if not math.isclose(rebuilt, self.t, rel_tol=1e-12, abs_tol=1e-14):
            raise ValueError(f"t={self.t!r} and alpha={self.alpha!r} disagree (alpha implies t={rebuilt!r})")
        return self

    def t_of(self) -> float:
        return edge_prob_from_alpha(self.alpha, self.n, self.k)


class BoundEstimate(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    value: Fraction | float
    """The bound, uncapped."""

    vacuous: bool
    """True when the bound exceeds 1 and says nothing."""


class RegimeDiagnostics(BaseModel):
    """Finite-n stand-ins for the conditions P = Omega(n) and K^2/P = o(1)."""

    model_config = ConfigDict(frozen=True)

    ring_density: float
    """K^2 / P, which the zero-one law wants small."""

    pool_per_node: float
    """P / n, which the zero-one law wants bounded away from zero."""

    within_regime: bool


class CriticalParameter(BaseModel):
    """Answer of a critical-parameter solver; ``value`` is None when infeasible."""

    model_config = ConfigDict(frozen=True)

    name: Literal["K", "P", "p"]
    value: int | float | None
    threshold: float

    @property
    def feasible(self) -> bool:
        return self.value is not None

    def describe(self) -> str:
        if self.value is None:
            return "infeasible"
        if isinstance(self.value, float):
            return repr(self.value)
        return str(self.value)


def _as_mode(mode: Mode | str) -> Mode:
    try:
        return Mode(mode)
    except ValueError:
        raise InvalidArgumentError(f"unknown arithmetic mode {mode!r}; use 'exact' or 'float'") from None


def _check_ring(K: int, P: int) -> None:
    if K < 1 or P < 1:
        raise InvalidArgumentError(f"K and P must be positive, got K={K}, P={P}")
    if K > P:
        raise InvalidArgumentError(f"key ring size K={K} exceeds pool size P={P}")


def _check_threshold(K: int, P: int, q: int) -> None:
    _check_ring(K, P)
    if not 1 <= q <= K:
        raise InvalidArgumentError(f"need 1 <= q <= K, got q={q}, K={K}")


def _exact_p(p: float) -> Fraction:
    return Fraction(repr(float(p)))


def _log_comb(n: int, k: int) -> float:
    return float(gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1))


def _log_overlap_pmf(K: int, P: int, u: int) -> float:
    # C(K,u) C(P-K,K-u) / C(P,K)
    #   = C(K,u) * K!/(K-u)! * prod_{i<K-u} (1 - K/(P-i)) * prod_{K-u<=i<K} 1/(P-i)
    head = np.arange(K - u, dtype=np.float64)
    tail = np.arange(K - u, K, dtype=np.float64)
    log_ratio = math.fsum(np.log1p(-K / (P - head))) - math.fsum(np.log(P - tail))
    falling = float(gammaln(K + 1) - gammaln(K - u + 1))
    return _log_comb(K, u) + falling + log_ratio


def overlap_pmf(K: int, P: int, u: int, mode: Mode | str = Mode.EXACT) -> Probability:
    """Probability that two independent uniform K-subsets of a P-pool share exactly u keys.

    Defined for every K <= P; zero outside the support [max(0, 2K - P), K].
    """
    mode = _as_mode(mode)
    _check_ring(K, P)
    if not 0 <= u <= K:
        raise InvalidArgumentError(f"overlap u={u} outside [0, K={K}]")
    if u < max(0, 2 * K - P):
        return Fraction(0) if mode is Mode.EXACT else 0.0
    if mode is Mode.EXACT:
        return Fraction(math.comb(K, u) * math.comb(P - K, K - u), math.comb(P, K))
    return min(1.0, math.exp(_log_overlap_pmf(K, P, u)))


def key_share_prob(K: int, P: int, q: int, mode: Mode | str = Mode.EXACT) -> Probability:
    """s(K, P, q): probability that two nodes share at least q keys."""
    mode = _as_mode(mode)
    _check_threshold(K, P, q)
    first = max(q, 2 * K - P)
    if mode is Mode.EXACT:
        favourable = sum(math.comb(K, u) * math.comb(P - K, K - u) for u in range(first, K + 1))
        return Fraction(favourable, math.comb(P, K))
    # log-space rounding can push a certain event just past 1
    return min(1.0, math.fsum(math.exp(_log_overlap_pmf(K, P, u)) for u in range(first, K + 1)))


def _edge_value(K: int, P: int, q: int, p: float, mode: Mode) -> Probability:
    s = key_share_prob(K, P, q, mode)
    if mode is Mode.EXACT:
        return _exact_p(p) * s
    return p * s


def edge_prob(params: ModelParams, mode: Mode | str = Mode.EXACT) -> Probability:
    """t(K, P, q, p) = p * s(K, P, q)."""
    return _edge_value(params.K, params.P, params.q, params.p, _as_mode(mode))


def bloznelis_bound(K: int, P: int, q: int, mode: Mode | str = Mode.EXACT) -> BoundEstimate:
    """Upper bound C(K,q)^2 / C(P,q) on s(K, P, q), returned uncapped."""
    mode = _as_mode(mode)
    _check_threshold(K, P, q)
    if mode is Mode.EXACT:
        value: Probability = Fraction(math.comb(K, q) ** 2, math.comb(P, q))
    else:
        value = math.exp(2.0 * _log_comb(K, q) - _log_comb(P, q))
    return BoundEstimate(value=value, vacuous=value > 1)


def approx_key_share_prob(K: int, P: int, q: int, mode: Mode | str = Mode.EXACT) -> Probability:
    """(1/q!) (K^2/P)^q.

    Only an approximation of s(K, P, q): the ratio tends to 1 as K grows with
    K^2/P -> 0, and there is no error guarantee at small K.
    """
    mode = _as_mode(mode)
    _check_threshold(K, P, q)
    if mode is Mode.EXACT:
        return Fraction(K * K, P) ** q / math.factorial(q)
    return (K * K / P) ** q / math.factorial(q)


def critical_edge_prob(n: int, k: int, offset: float = 0.0) -> float:
    """(ln n + (k-1) ln ln n + offset) / n."""
    if n < 3:
        raise InvalidArgumentError(f"scaling computations need n >= 3 so that ln ln n > 0, got n={n}")
    if k < 1:
        raise InvalidArgumentError(f"connectivity order k must be >= 1, got k={k}")
    return (math.log(n) + (k - 1) * math.log(math.log(n)) + offset) / n


def edge_prob_from_alpha(alpha: float, n: int, k: int) -> float:
    return critical_edge_prob(n, k, offset=alpha)


def alpha_of(params: ModelParams, k: int, mode: Mode | str = Mode.EXACT) -> ScalingPoint:
    """Deviation alpha = n t - ln n - (k-1) ln ln n of the model's edge probability."""
    n = params.n
    if n < 3:
        raise InvalidArgumentError(f"alpha needs n >= 3, got n={n}")
    if k < 1:
        raise InvalidArgumentError(f"connectivity order k must be >= 1, got k={k}")
    t = float(edge_prob(params, mode))
    alpha = n * t - math.log(n) - (k - 1) * math.log(math.log(n))
    return ScalingPoint(t=t, alpha=alpha, k=k, n=n)


def limiting_kconn_prob(alpha: float, k: int) -> float:
    """exp(-e^{-alpha} / (k-1)!), the limiting k-connectivity probability at a fixed alpha."""
    if k < 1:
        raise InvalidArgumentError(f"connectivity order k must be >= 1, got k={k}")
    if alpha < -700.0:
        return 0.0
    return math.exp(-math.exp(-alpha) / math.factorial(k - 1))


def regime_diagnostics(params: ModelParams) -> RegimeDiagnostics:
    ring_density = params.K * params.K / params.P
    pool_per_node = params.P / params.n
    return RegimeDiagnostics(
        ring_density=ring_density,
        pool_per_node=pool_per_node,
        within_regime=ring_density < 1.0 and pool_per_node >= 1.0,
    )


def _check_channel(p: float) -> None:
    if not 0.0 < p <= 1.0:
        raise InvalidArgumentError(f"channel probability must lie in (0, 1], got p={p}")


def critical_key_ring_size(
    n: int,
    P: int,
    q: int,
    p: float,
    k: int,
    *,
    offset: float = 0.0,
    mode: Mode | str = Mode.EXACT,
) -> CriticalParameter:
    """Smallest K in [q, P] whose edge probability reaches the threshold.

    Binary search over K; s(K, P, q) is nondecreasing in K.
    """
    mode = _as_mode(mode)
    threshold = critical_edge_prob(n, k, offset)
    _check_threshold(q, P, q)
    _check_channel(p)

    def meets(K: int) -> bool:
        return _edge_value(K, P, q, p, mode) >= threshold

    if not meets(P):
        logger.info(f"no key ring size reaches t >= {threshold:.6g} with P={P}, q={q}, p={p}")
        return CriticalParameter(name="K", value=None, threshold=threshold)
    lo, hi = q, P
    while lo < hi:
        mid = (lo + hi) // 2
        if meets(mid):
            hi = mid
        else:
            lo = mid + 1
    return CriticalParameter(name="K", value=lo, threshold=threshold)


def critical_pool_size(
    n: int,
    K: int,
    q: int,
    p: float,
    k: int,
    *,
    ceiling: int,
    offset: float = 0.0,
    mode: Mode | str = Mode.EXACT,
) -> CriticalParameter:
    """Largest P in [K, ceiling] whose edge probability reaches the threshold.

    s(K, P, q) is nonincreasing in P and largest at P = K, so the answer is
    infeasible exactly when P = K already misses the threshold.
    """
    mode = _as_mode(mode)
    threshold = critical_edge_prob(n, k, offset)
    _check_threshold(K, K, q)
    _check_channel(p)
    if ceiling < K:
        raise InvalidArgumentError(f"pool ceiling {ceiling} is below K={K}")

    def meets(P: int) -> bool:
        return _edge_value(K, P, q, p, mode) >= threshold

    if not meets(K):
        logger.info(f"no pool size reaches t >= {threshold:.6g} with K={K}, q={q}, p={p}")
        return CriticalParameter(name="P", value=None, threshold=threshold)
    if meets(ceiling):
        logger.warning(f"threshold still met at the pool ceiling {ceiling}; returning the ceiling")
        return CriticalParameter(name="P", value=ceiling, threshold=threshold)
    lo, hi = K, ceiling
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if meets(mid):
            lo = mid
        else:
            hi = mid
    return CriticalParameter(name="P", value=lo, threshold=threshold)


def critical_channel_prob(
    n: int,
    K: int,
    P: int,
    q: int,
    k: int,
    *,
    offset: float = 0.0,
    mode: Mode | str = Mode.EXACT,
) -> CriticalParameter:
    """p* = threshold / s(K, P, q); infeasible when p* > 1.

    A nonpositive threshold (large negative offset) is met by any channel, and
    the answer is 0.0.
    """
    mode = _as_mode(mode)
    threshold = critical_edge_prob(n, k, offset)
    s = key_share_prob(K, P, q, mode)
    if threshold <= 0.0:
        return CriticalParameter(name="p", value=0.0, threshold=threshold)
    if mode is Mode.EXACT:
        p_star = float(Fraction(threshold) / s)
    else:
        p_star = threshold / s
    if p_star > 1.0:
        logger.info(f"required channel probability {p_star:.6g} exceeds 1 for K={K}, P={P}, q={q}")
        return CriticalParameter(name="p", value=None, threshold=threshold)
    return CriticalParameter(name="p", value=p_star, threshold=threshold)
