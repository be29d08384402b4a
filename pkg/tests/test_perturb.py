"""Monte-Carlo perturbed solver operators: determinism, limits, frequencies."""

import numpy as np
import pytest

from forestclust import (
    DIFFERENT,
    InfeasibleConstraints,
    PerturbationConfig,
    SimilarityMatrix,
    max_spanning_forest,
    constrained_max_spanning_forest,
    perturbed_constrained_forest,
    perturbed_forest,
    perturbed_membership,
    sample_noise,
)

from conftest import partial_from_pairs, random_similarity


def equilateral_sigma():
    """All three off-diagonal entries equal: the noise decides everything."""
    s = np.full((3, 3), 2.0)
    np.fill_diagonal(s, 0.0)
    return SimilarityMatrix(s)


# ---------------------------------------------------------------------------
# PerturbationConfig validation
# ---------------------------------------------------------------------------


def test_config_rejects_bad_fields():
    with pytest.raises(ValueError):
        PerturbationConfig(epsilon=0.0)
    with pytest.raises(ValueError):
        PerturbationConfig(epsilon=-1.0)
    with pytest.raises(ValueError):
        PerturbationConfig(epsilon=float("nan"))
    with pytest.raises(ValueError):
        PerturbationConfig(epsilon=0.1, samples=0)
    with pytest.raises(ValueError):
        PerturbationConfig(epsilon=0.1, seed=-1)
    with pytest.raises(ValueError):
        PerturbationConfig(epsilon=0.1, noise="cauchy")
    with pytest.raises(ValueError):
        PerturbationConfig(epsilon=True)  # bools are not noise amplitudes
    # the two supported laws construct fine
    PerturbationConfig(epsilon=0.1, noise="gaussian")
    PerturbationConfig(epsilon=0.1, noise="logistic")


# ---------------------------------------------------------------------------
# sample_noise
# ---------------------------------------------------------------------------


def test_noise_is_a_pure_function_of_seed_and_index():
    config = PerturbationConfig(epsilon=0.5, samples=10, seed=123)
    a = sample_noise(4, config, 3)
    b = sample_noise(4, config, 3)
    assert np.array_equal(a, b)
    c = sample_noise(4, config, 4)
    assert not np.array_equal(a, c)
    other_seed = PerturbationConfig(epsilon=0.5, samples=10, seed=124)
    d = sample_noise(4, other_seed, 3)
    assert not np.array_equal(a, d)


def test_noise_matrices_are_symmetric_with_zero_diagonal():
    config = PerturbationConfig(epsilon=1.0, samples=5, seed=7)
    for law in ("gaussian", "logistic"):
        cfg = PerturbationConfig(epsilon=1.0, samples=5, seed=7, noise=law)
        for idx in range(5):
            z = sample_noise(5, cfg, idx)
            assert np.array_equal(z, z.T)
            assert np.all(np.diag(z) == 0.0)
            assert np.all(np.isfinite(z))
    del config


def test_noise_entry_mean_over_many_samples_is_near_zero():
    config = PerturbationConfig(epsilon=1.0, samples=1, seed=2024)
    total = 0.0
    count = 100_000
    for idx in range(count):
        total += sample_noise(2, config, idx)[0, 1]
    assert abs(total / count) < 0.02


# ---------------------------------------------------------------------------
# perturbed_forest
# ---------------------------------------------------------------------------


def test_tiny_noise_reproduces_the_hard_argmax():
    rng = np.random.default_rng(5)
    sigma = random_similarity(5, rng)
    hard = max_spanning_forest(sigma, 2)
    soft, value = perturbed_forest(
        sigma, 2, PerturbationConfig(epsilon=1e-8, samples=100, seed=1)
    )
    assert np.array_equal(soft.values, hard.forest.matrix())
    assert value == pytest.approx(hard.value, abs=1e-6)


def test_equilateral_triangle_spreads_mass_evenly():
    soft, _ = perturbed_forest(
        equilateral_sigma(),
        2,
        PerturbationConfig(epsilon=1.0, samples=100_000, seed=0),
        threads=8,
    )
    for i, j in ((0, 1), (0, 2), (1, 2)):
        assert soft.values[i, j] == pytest.approx(1.0 / 3.0, abs=0.01)


def test_soft_forest_edge_mass_is_exactly_the_edge_count():
    rng = np.random.default_rng(8)
    for _ in range(5):
        n = int(rng.integers(2, 7))
        k = int(rng.integers(1, n + 1))
        sigma = random_similarity(n, rng)
        soft, _ = perturbed_forest(
            sigma, k, PerturbationConfig(epsilon=0.7, samples=64, seed=3)
        )
        upper = soft.values[np.triu_indices(n, 1)]
        # counts divided by B: the sum is an exact integer ratio
        assert upper.sum() * 64 == pytest.approx((n - k) * 64, abs=0)


def test_average_value_matches_direct_per_sample_recomputation():
    rng = np.random.default_rng(21)
    sigma = random_similarity(5, rng)
    config = PerturbationConfig(epsilon=0.5, samples=50, seed=9)
    soft, value = perturbed_forest(sigma, 2, config)
    total = 0.0
    freq = np.zeros((5, 5))
    for b in range(config.samples):
        bumped = sigma.values + config.epsilon * sample_noise(5, config, b)
        np.fill_diagonal(bumped, 0.0)
        sol = max_spanning_forest(SimilarityMatrix(bumped), 2)
        total += sol.value
        freq += sol.forest.matrix()
    assert value == pytest.approx(total / config.samples, rel=1e-12)
    assert np.allclose(soft.values, freq / config.samples, atol=1e-15)


def test_results_are_bitwise_identical_across_thread_counts():
    rng = np.random.default_rng(13)
    sigma = random_similarity(6, rng)
    partial = partial_from_pairs(6, {(0, 1): DIFFERENT, (2, 3): 1})
    config = PerturbationConfig(epsilon=0.3, samples=300, seed=77)
    results = []
    for threads in (1, 2, 8):
        soft_u, val_u = perturbed_forest(sigma, 2, config, threads=threads)
        soft_c, val_c = perturbed_constrained_forest(
            sigma, 2, partial, config, threads=threads
        )
        soft_m = perturbed_membership(sigma, 2, config, threads=threads)
        results.append((soft_u.values, val_u, soft_c.values, val_c, soft_m.values))
    base = results[0]
    for other in results[1:]:
        assert np.array_equal(base[0], other[0])
        assert base[1] == other[1]
        assert np.array_equal(base[2], other[2])
        assert base[3] == other[3]
        assert np.array_equal(base[4], other[4])


def test_entry_shift_between_epsilons_is_bounded_by_flip_fraction():
    # With shared sample indices, an entry's frequency can only move between
    # two epsilon values by the fraction of samples whose argmax changed.
    rng = np.random.default_rng(31)
    sigma = random_similarity(5, rng)
    cfg_a = PerturbationConfig(epsilon=0.4, samples=400, seed=5)
    cfg_b = PerturbationConfig(epsilon=0.9, samples=400, seed=5)
    soft_a, _ = perturbed_forest(sigma, 2, cfg_a)
    soft_b, _ = perturbed_forest(sigma, 2, cfg_b)
    flipped = 0
    for b in range(400):
        z = sample_noise(5, cfg_a, b)
        edges = []
        for eps in (0.4, 0.9):
            bumped = sigma.values + eps * z
            np.fill_diagonal(bumped, 0.0)
            edges.append(max_spanning_forest(SimilarityMatrix(bumped), 2).forest.edges)
        if edges[0] != edges[1]:
            flipped += 1
    bound = flipped / 400 + 1e-15
    assert np.max(np.abs(soft_a.values - soft_b.values)) <= bound


def test_smoothed_value_dominates_hard_value_up_to_mc_noise():
    # The maximum is a convex function of the weights, so zero-mean noise
    # can only raise its expectation; allow three standard errors of slack.
    rng = np.random.default_rng(17)
    sigma = random_similarity(5, rng)
    config = PerturbationConfig(epsilon=1.0, samples=100_000, seed=11)
    _, smoothed = perturbed_forest(sigma, 2, config, threads=8)
    hard = max_spanning_forest(sigma, 2).value
    probe = []
    for b in range(2000):
        bumped = sigma.values + config.epsilon * sample_noise(5, config, b)
        np.fill_diagonal(bumped, 0.0)
        probe.append(max_spanning_forest(SimilarityMatrix(bumped), 2).value)
    stderr = np.std(probe, ddof=1) / np.sqrt(config.samples)
    assert smoothed >= hard - 3.0 * stderr


# ---------------------------------------------------------------------------
# perturbed_constrained_forest
# ---------------------------------------------------------------------------


def test_empty_constraints_with_coupled_noise_match_unconstrained_bitwise():
    rng = np.random.default_rng(19)
    sigma = random_similarity(5, rng)
    empty = partial_from_pairs(5, {})
    config = PerturbationConfig(epsilon=0.5, samples=200, seed=4, coupled=True)
    soft_u, val_u = perturbed_forest(sigma, 3, config)
    for use_bias in (False, True):
        soft_c, val_c = perturbed_constrained_forest(
            sigma, 3, empty, config, use_bias=use_bias
        )
        assert np.array_equal(soft_u.values, soft_c.values)
        assert val_u == val_c


def test_uncoupled_noise_uses_an_independent_stream():
    rng = np.random.default_rng(23)
    sigma = random_similarity(5, rng)
    empty = partial_from_pairs(5, {})
    config = PerturbationConfig(epsilon=1.0, samples=200, seed=4, coupled=False)
    soft_u, _ = perturbed_forest(sigma, 3, config)
    soft_c, _ = perturbed_constrained_forest(sigma, 3, empty, config)
    assert not np.array_equal(soft_u.values, soft_c.values)


def test_observed_pairs_pin_soft_membership_entries():
    rng = np.random.default_rng(29)
    sigma = random_similarity(6, rng)
    partial = partial_from_pairs(6, {(0, 1): 1, (2, 3): DIFFERENT})
    config = PerturbationConfig(epsilon=0.8, samples=150, seed=6)
    soft = perturbed_membership(sigma, 3, config, partial=partial)
    assert soft.values[0, 1] == 1.0  # Same pair co-clustered in every sample
    assert soft.values[2, 3] == 0.0  # Different pair split in every sample
    assert np.all(np.diag(soft.values) == 1.0)


def test_tiny_noise_constrained_forest_reproduces_hard_solution():
    partial = partial_from_pairs(3, {(0, 1): DIFFERENT})
    s = np.zeros((3, 3))
    s[0, 1] = s[1, 0] = 5.0
    s[0, 2] = s[2, 0] = 1.0
    s[1, 2] = s[2, 1] = 2.0
    sigma = SimilarityMatrix(s)
    soft, value = perturbed_constrained_forest(
        sigma, 2, partial, PerturbationConfig(epsilon=1e-8, samples=100, seed=2)
    )
    expected = np.zeros((3, 3))
    expected[1, 2] = expected[2, 1] = 1.0
    assert np.array_equal(soft.values, expected)
    assert value == pytest.approx(2.0, abs=1e-6)
    hard = constrained_max_spanning_forest(sigma, 2, partial)
    assert value == pytest.approx(hard.value, abs=1e-6)


def test_infeasible_constraints_detected_before_sampling():
    sigma = equilateral_sigma()
    blocked = partial_from_pairs(
        3, {(0, 1): DIFFERENT, (0, 2): DIFFERENT, (1, 2): DIFFERENT}
    )
    huge = PerturbationConfig(epsilon=0.1, samples=10_000_000, seed=0)
    # a billion-sample config would run for hours if feasibility were
    # checked per sample; the upfront probe must raise immediately
    with pytest.raises(InfeasibleConstraints):
        perturbed_constrained_forest(sigma, 2, blocked, huge)
    with pytest.raises(InfeasibleConstraints):
        perturbed_membership(sigma, 2, huge, partial=blocked)


# ---------------------------------------------------------------------------
# perturbed_membership
# ---------------------------------------------------------------------------


def test_membership_diagonal_is_exactly_one():
    rng = np.random.default_rng(37)
    sigma = random_similarity(5, rng)
    soft = perturbed_membership(
        sigma, 2, PerturbationConfig(epsilon=0.6, samples=33, seed=8)
    )
    assert np.all(np.diag(soft.values) == 1.0)
    assert np.all((soft.values >= 0.0) & (soft.values <= 1.0))


def test_tiny_noise_membership_matches_hard_clustering():
    rng = np.random.default_rng(41)
    sigma = random_similarity(5, rng)
    hard = max_spanning_forest(sigma, 2)
    soft = perturbed_membership(
        sigma, 2, PerturbationConfig(epsilon=1e-8, samples=100, seed=3)
    )
    assert np.array_equal(soft.values, hard.membership.matrix())


def test_equilateral_membership_off_diagonals_near_one_third():
    soft = perturbed_membership(
        equilateral_sigma(),
        2,
        PerturbationConfig(epsilon=1.0, samples=100_000, seed=1),
        threads=8,
    )
    for i, j in ((0, 1), (0, 2), (1, 2)):
        assert soft.values[i, j] == pytest.approx(1.0 / 3.0, abs=0.01)
