import itertools
import math
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from pydantic import ValidationError

from qcomposite_kconn.errors import InvalidArgumentError
from qcomposite_kconn.model.probability import (
    Mode,
    ModelParams,
    ScalingPoint,
    alpha_of,
    approx_key_share_prob,
    bloznelis_bound,
    critical_channel_prob,
    critical_edge_prob,
    critical_key_ring_size,
    critical_pool_size,
    edge_prob,
    key_share_prob,
    limiting_kconn_prob,
    overlap_pmf,
    regime_diagnostics,
)

SMALL_POOLS = range(1, 31)


@pytest.fixture(scope="module")
def share_table() -> dict[tuple[int, int, int], Fraction]:
    return {
        (K, P, q): key_share_prob(K, P, q)
        for P in SMALL_POOLS
        for K in range(1, P + 1)
        for q in range(1, K + 1)
    }


def enumerated_overlaps(K: int, P: int) -> tuple[Counter, int]:
    subsets = [sum(1 << key for key in ring) for ring in itertools.combinations(range(P), K)]
    counts: Counter = Counter()
    for a in subsets:
        for b in subsets:
            counts[(a & b).bit_count()] += 1
    return counts, len(subsets) ** 2


@pytest.mark.parametrize(
    ("K", "P", "u", "expected"),
    [
        (1, 2, 1, Fraction(1, 2)),
        (2, 4, 2, Fraction(1, 6)),
        (3, 10, 2, Fraction(21, 120)),
        (3, 4, 1, Fraction(0)),
    ],
)
def test_overlap_pmf_examples(K, P, u, expected):
    assert overlap_pmf(K, P, u) == expected


@pytest.mark.parametrize(
    ("K", "P", "q", "expected"),
    [(1, 2, 1, Fraction(1, 2)), (2, 4, 2, Fraction(1, 6)), (3, 10, 2, Fraction(11, 60))],
)
def test_key_share_prob_examples(K, P, q, expected):
    assert key_share_prob(K, P, q) == expected
    assert key_share_prob(K, P, q, Mode.FLOAT) == pytest.approx(float(expected), rel=1e-12)


def test_overlap_pmf_rejects_bad_arguments():
    with pytest.raises(InvalidArgumentError):
        overlap_pmf(5, 4, 1)
    with pytest.raises(InvalidArgumentError):
        overlap_pmf(3, 10, 4)
    with pytest.raises(InvalidArgumentError):
        overlap_pmf(3, 10, -1)
    with pytest.raises(InvalidArgumentError):
        key_share_prob(3, 10, 4)
    with pytest.raises(InvalidArgumentError):
        key_share_prob(3, 10, 2, mode="decimal")


def test_overlap_pmf_sums_to_one():
    for P in SMALL_POOLS:
        for K in range(1, P + 1):
            assert sum(overlap_pmf(K, P, u) for u in range(K + 1)) == 1


def test_share_prob_is_upper_tail_of_overlap(share_table):
    for (K, P, q), s in share_table.items():
        assert s == 1 - sum(overlap_pmf(K, P, u) for u in range(q))
        tail = 1.0 - math.fsum(overlap_pmf(K, P, u, Mode.FLOAT) for u in range(q))
        assert key_share_prob(K, P, q, Mode.FLOAT) == pytest.approx(tail, abs=1e-12)


def test_share_prob_at_q_one_has_closed_form():
    for P in SMALL_POOLS:
        for K in range(1, P // 2 + 1):
            assert key_share_prob(K, P, 1) == 1 - Fraction(math.comb(P - K, K), math.comb(P, K))


def test_share_prob_is_certain_when_rings_must_overlap():
    assert key_share_prob(3, 5, 1) == 1
    assert key_share_prob(4, 4, 4) == 1


def test_share_prob_matches_enumeration_of_ring_pairs():
    for P in range(1, 13):
        for K in range(1, min(P, 6) + 1):
            counts, total = enumerated_overlaps(K, P)
            for q in range(1, K + 1):
                favourable = sum(c for overlap, c in counts.items() if overlap >= q)
                assert key_share_prob(K, P, q) == Fraction(favourable, total)


def test_share_prob_never_exceeds_bloznelis_bound(share_table):
    for (K, P, q), s in share_table.items():
        assert s <= bloznelis_bound(K, P, q).value


def test_share_prob_monotonicity(share_table):
    for (K, P, q), s in share_table.items():
        if K < P:
            assert s <= share_table[(K + 1, P, q)]
        if (K, P + 1, q) in share_table:
            assert share_table[(K, P + 1, q)] <= s
        if q < K:
            assert share_table[(K, P, q + 1)] <= s


def test_float_mode_agrees_with_exact_mode():
    rng = np.random.default_rng(11)
    checked = 0
    for _ in range(40):
        K = int(rng.integers(1, 201))
        P = int(rng.integers(max(K, 2 * K), 10**6 + 1))
        mode_u = round(K * K / P)
        for u in {mode_u, min(K, mode_u + 1), min(K, mode_u + 2)}:
            exact = overlap_pmf(K, P, u)
            if exact < Fraction(1, 10**250):
                continue
            assert overlap_pmf(K, P, u, Mode.FLOAT) == pytest.approx(float(exact), rel=1e-10)
            checked += 1
        q = int(rng.integers(1, min(K, 3) + 1))
        exact_s = key_share_prob(K, P, q)
        if exact_s > Fraction(1, 10**250):
            assert key_share_prob(K, P, q, Mode.FLOAT) == pytest.approx(float(exact_s), rel=1e-10)
    assert checked >= 40


def test_float_mode_handles_large_pools():
    s = key_share_prob(200, 10**6, 2, Mode.FLOAT)
    assert 0.0 < s < 1.0
    assert s == pytest.approx(float(key_share_prob(200, 10**6, 2)), rel=1e-10)


@pytest.mark.parametrize(
    ("params", "expected"),
    [
        (ModelParams(n=10, K=1, P=2, q=1, p=0.5), Fraction(1, 4)),
        (ModelParams(n=10, K=2, P=4, q=2, p=1.0), Fraction(1, 6)),
        (ModelParams(n=10, K=3, P=10, q=2, p=0.3), Fraction(11, 200)),
    ],
)
def test_edge_prob_examples(params, expected):
    assert edge_prob(params) == expected
    assert edge_prob(params, Mode.FLOAT) == pytest.approx(float(expected), rel=1e-12)


def test_edge_prob_is_product_of_channel_and_share():
    params = ModelParams(n=50, K=40, P=10000, q=2, p=0.37)
    assert edge_prob(params, Mode.FLOAT) == params.p * key_share_prob(40, 10000, 2, Mode.FLOAT)


@pytest.mark.parametrize(
    ("K", "P", "q", "expected", "vacuous"),
    [
        (1, 2, 1, Fraction(1, 2), False),
        (2, 4, 2, Fraction(1, 6), False),
        (3, 10, 2, Fraction(1, 5), False),
        (5, 6, 1, Fraction(25, 6), True),
    ],
)
def test_bloznelis_bound_examples(K, P, q, expected, vacuous):
    bound = bloznelis_bound(K, P, q)
    assert bound.value == expected
    assert bound.vacuous is vacuous
    assert bloznelis_bound(K, P, q, Mode.FLOAT).value == pytest.approx(float(expected), rel=1e-12)


def test_approx_key_share_prob():
    assert approx_key_share_prob(1, 2, 1) == Fraction(1, 2)
    assert approx_key_share_prob(2, 4, 1) == 1
    approx = approx_key_share_prob(40, 10000, 2, Mode.FLOAT)
    assert approx == pytest.approx(0.0128, rel=1e-12)
    # (K^2/P)^q / q! overshoots at this size: the exact value is about 0.01105
    ratio = approx / key_share_prob(40, 10000, 2, Mode.FLOAT)
    assert 1.0 < ratio < 1.25


def test_alpha_examples():
    at_threshold = ModelParams(n=1000, K=1, P=2, q=1, p=2 * math.log(1000) / 1000)
    assert alpha_of(at_threshold, 1).alpha == pytest.approx(0.0, abs=1e-9)

    above = alpha_of(ModelParams(n=1000, K=1, P=2, q=1, p=0.02), 1)
    assert above.t == pytest.approx(0.01)
    assert above.alpha == pytest.approx(10 - math.log(1000), abs=1e-9)
    assert above.alpha == pytest.approx(3.0922, abs=1e-4)

    empty = alpha_of(ModelParams(n=100, K=2, P=4, q=2, p=0.0), 2)
    assert empty.t == 0.0
    assert empty.alpha == pytest.approx(-(math.log(100) + math.log(math.log(100))), abs=1e-12)
    assert empty.alpha == pytest.approx(-6.132, abs=1e-3)


def test_alpha_modes_agree():
    params = ModelParams(n=100, K=3, P=10, q=2, p=0.3)
    exact = alpha_of(params, 2, Mode.EXACT)
    approximate = alpha_of(params, 2, Mode.FLOAT)
    assert exact.alpha == pytest.approx(approximate.alpha, abs=1e-10)
    assert exact.alpha == pytest.approx(5.5 - math.log(100) - math.log(math.log(100)), abs=1e-12)


def test_alpha_needs_three_nodes():
    with pytest.raises(InvalidArgumentError):
        alpha_of(ModelParams(n=2, K=1, P=2, q=1, p=0.5), 1)
    with pytest.raises(InvalidArgumentError):
        critical_edge_prob(2, 1)


def test_scaling_point_round_trip():
    for n, k, p in [(50, 1, 0.4), (2000, 2, 0.9), (10**5, 3, 0.05)]:
        point = alpha_of(ModelParams(n=n, K=40, P=5000, q=2, p=p), k, Mode.FLOAT)
        assert point.t_of() == pytest.approx(point.t, rel=1e-12, abs=1e-14)


def test_scaling_point_rejects_inconsistent_pairs():
    with pytest.raises(ValidationError):
        ScalingPoint(t=0.5, alpha=0.0, k=1, n=100)


def test_limiting_kconn_prob():
    assert limiting_kconn_prob(0.0, 1) == pytest.approx(math.exp(-1))
    assert limiting_kconn_prob(6.0, 2) == pytest.approx(0.99752, abs=1e-5)
    assert limiting_kconn_prob(-6.0, 2) < 1e-100
    assert limiting_kconn_prob(-1000.0, 1) == 0.0


def test_regime_diagnostics():
    inside = regime_diagnostics(ModelParams(n=2000, K=40, P=5000, q=2, p=0.5))
    assert inside.ring_density == pytest.approx(0.32)
    assert inside.pool_per_node == pytest.approx(2.5)
    assert inside.within_regime
    assert not regime_diagnostics(ModelParams(n=2000, K=40, P=1000, q=2, p=0.5)).within_regime


@pytest.mark.parametrize(
    "fields",
    [
        {"n": 10, "K": 5, "P": 4, "q": 1, "p": 0.5},
        {"n": 10, "K": 2, "P": 4, "q": 3, "p": 0.5},
        {"n": 10, "K": 2, "P": 4, "q": 1, "p": 1.5},
        {"n": 1, "K": 2, "P": 4, "q": 1, "p": 0.5},
        {"n": 10, "K": 0, "P": 4, "q": 1, "p": 0.5},
    ],
)
def test_model_params_validation(fields):
    with pytest.raises(ValidationError):
        ModelParams(**fields)


def test_critical_key_ring_size_examples():
    assert critical_key_ring_size(10, 2, 1, 1.0, 1).value == 1
    infeasible = critical_key_ring_size(10, 100, 1, 0.001, 1)
    assert not infeasible.feasible
    assert infeasible.describe() == "infeasible"


def test_critical_key_ring_size_matches_linear_scan():
    n, P, q, p, k = 2000, 10000, 2, 0.5, 2
    threshold = critical_edge_prob(n, k)
    scanned = next(K for K in range(q, P + 1) if Fraction(1, 2) * key_share_prob(K, P, q) >= threshold)
    result = critical_key_ring_size(n, P, q, p, k)
    assert result.value == scanned
    assert result.threshold == threshold


def test_critical_pool_size_examples():
    assert critical_pool_size(10, 1, 1, 1.0, 1, ceiling=100).value == 4
    assert not critical_pool_size(10, 1, 1, 0.1, 1, ceiling=100).feasible


def test_critical_pool_size_at_scale_is_a_boundary():
    n, K, q, p, k = 2000, 30, 2, 0.5, 2
    threshold = critical_edge_prob(n, k)
    P_star = critical_pool_size(n, K, q, p, k, ceiling=10**6).value
    assert Fraction(1, 2) * key_share_prob(K, P_star, q) >= threshold
    assert Fraction(1, 2) * key_share_prob(K, P_star + 1, q) < threshold


def test_critical_pool_size_returns_ceiling_when_never_violated():
    assert critical_pool_size(10, 3, 1, 1.0, 1, ceiling=5).value == 5


@pytest.mark.parametrize(("K", "P", "q", "expected"), [(1, 2, 1, 0.4605170), (3, 3, 3, 0.2302585)])
def test_critical_channel_prob_examples(K, P, q, expected):
    assert critical_channel_prob(10, K, P, q, 1).value == pytest.approx(expected, abs=1e-6)


def test_critical_channel_prob_infeasible_and_negative_threshold():
    assert critical_channel_prob(10, 1, 100, 1, 1).value is None
    assert critical_channel_prob(10, 1, 100, 1, 1, offset=-10.0).value == 0.0


def test_solvers_return_boundaries_on_random_instances():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        n = int(rng.integers(3, 5001))
        k = int(rng.integers(1, 4))
        q = int(rng.integers(1, 4))
        p = float(rng.uniform(0.05, 1.0))
        threshold = critical_edge_prob(n, k)
        exact_p = Fraction(repr(p))

        def t(K: int, P: int) -> Fraction:
            return exact_p * key_share_prob(K, P, q)

        P = int(rng.integers(q, 201))
        ring = critical_key_ring_size(n, P, q, p, k)
        if ring.feasible:
            assert t(ring.value, P) >= threshold
            if ring.value > q:
                assert t(ring.value - 1, P) < threshold
        else:
            assert t(P, P) < threshold

        K = int(rng.integers(q, 21))
        ceiling = int(rng.integers(K, 2001))
        pool = critical_pool_size(n, K, q, p, k, ceiling=ceiling)
        if pool.feasible:
            assert t(K, pool.value) >= threshold
            if pool.value < ceiling:
                assert t(K, pool.value + 1) < threshold
        else:
            assert t(K, K) < threshold

        channel = critical_channel_prob(n, K, ceiling, q, k, mode=Mode.FLOAT)
        s = key_share_prob(K, ceiling, q, Mode.FLOAT)
        if channel.feasible:
            assert channel.value * s == pytest.approx(threshold, rel=1e-12)
        else:
            assert threshold / s > 1.0
