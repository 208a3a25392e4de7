import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ivdag.errors import InvalidInputError
from ivdag.graph import is_acyclic
from ivdag.simgen import (ER, SF, AlphaPerturbed, Explicit, FixedShift, Hard, ScenarioConfig, Soft,
                          generator, model_from_dict, model_to_dict, sample_dag, sample_dataset,
                          sample_regime, seed_sequence)

TWO = np.array([[0.0, 0.8], [0.0, 0.0]])


def cfg(topology, p, **kw):
    return ScenarioConfig(topology=topology, p=p, **kw)


def test_er_extremes():
    r = np.random.default_rng(0)
    assert not sample_dag(cfg(ER(0.0), 5), r).any()
    W = sample_dag(cfg(ER(1.0), 3), r)
    assert np.count_nonzero(W) == 3 and is_acyclic(W != 0)


def test_er_edge_count_mean():
    # oracle: sample mean over 10000 draws within 3 standard errors of r * p(p-1)/2
    r = np.random.default_rng(1)
    config = cfg(ER(0.1), 40)
    counts = np.array([np.count_nonzero(sample_dag(config, r)) for _ in range(10000)])
    se = counts.std(ddof=1) / np.sqrt(counts.size)
    assert abs(counts.mean() - 78.0) < 3 * se


def test_er_uses_random_order():
    r = np.random.default_rng(2)
    lower = sum(np.tril(sample_dag(cfg(ER(0.5), 6), r)).any() for _ in range(50))
    assert lower > 0


def test_weights_in_two_sided_range():
    W = sample_dag(cfg(ER(0.5), 30, weight_range=(0.5, 2.0)), np.random.default_rng(3))
    mags = np.abs(W[W != 0])
    assert mags.min() >= 0.5 and mags.max() <= 2.0
    assert (W > 0).any() and (W < 0).any()


def test_scale_free_structure():
    r = np.random.default_rng(4)
    for _ in range(20):
        W = sample_dag(cfg(SF(2), 20), r)
        B = W != 0
        assert is_acyclic(B)
        # node t attaches to min(t, z) earlier nodes
        assert B.sum() == 1 + 2 * 18


def test_explicit_topology_is_returned_and_checked():
    assert np.array_equal(sample_dag(cfg(Explicit.from_matrix(TWO), 2), None), TWO)
    with pytest.raises(InvalidInputError):
        sample_dag(cfg(Explicit.from_matrix([[0, 1], [1, 0]]), 2), None)


def test_config_validation():
    for bad in [dict(topology=ER(1.5), p=3), dict(topology=SF(0), p=3), dict(topology=ER(0.1), p=3, alpha=0),
                dict(topology=ER(0.1), p=3, n_k=1), dict(topology=ER(0.1), p=3, weight_range=(0, 1)),
                dict(topology=ER(0.1), p=3, sigma_range=(2, 1))]:
        with pytest.raises(InvalidInputError):
            ScenarioConfig(**bad)
    with pytest.raises(InvalidInputError):
        Soft(1.0)
    with pytest.raises(InvalidInputError):
        FixedShift(variance=0)


@pytest.mark.parametrize("model", [Hard(), Soft(0.25), AlphaPerturbed(0.7, 1.3), FixedShift(1.0, 2.0)])
def test_model_json_round_trip(model):
    assert model_from_dict(json.loads(json.dumps(model_to_dict(model)))) == model


def test_scenario_json_round_trip():
    for topo in [ER(0.2), SF(3), Explicit.from_matrix(TWO)]:
        p = 2 if isinstance(topo, Explicit) else 7
        c = cfg(topo, p, intervention=Soft(0.1), n_obs=30, seed=99, name="x",
                sigmas=None if p == 7 else (1.0, 2.0))
        assert ScenarioConfig.from_dict(json.loads(json.dumps(c.to_dict()))) == c


def test_observational_two_node_variance():
    X = sample_regime(TWO, [1.5, 1.0], 0, 1_000_000, 4.0, Hard(), np.random.default_rng(5))
    expected = 0.8 ** 2 * 1.5 ** 2 + 1.0
    assert abs(X[:, 1].var() / expected - 1) < 0.02


def test_hard_target_variance_and_independence():
    X = sample_regime(TWO, [1.5, 2.0], 2, 1_000_000, 4.0, Hard(), np.random.default_rng(6))
    assert abs(X[:, 1].var() / (2.0 ** 2 / 16) - 1) < 0.02
    assert abs(np.corrcoef(X[:100_000].T)[0, 1]) < 0.05


def test_soft_near_one_restores_observational_variance():
    # pi must stay below 1; 0.999 leaves the parental term essentially intact
    obs = sample_regime(TWO, [1.0, 1.0], 0, 400_000, 1.0, Hard(), np.random.default_rng(7))
    soft = sample_regime(TWO, [1.0, 1.0], 2, 400_000, 1.0, Soft(0.999), np.random.default_rng(8))
    assert abs(soft[:, 1].var() / obs[:, 1].var() - 1) < 0.02


def test_alpha_perturbed_and_fixed_shift_targets():
    ss = seed_sequence(3, 0)
    X = sample_regime(TWO, [1.0, 2.0], 2, 200_000, 4.0, AlphaPerturbed(), ss)
    c = generator(np.random.SeedSequence(3, spawn_key=(0, 2))).uniform(0.8, 1.2)
    assert abs(X[:, 1].var() / (2.0 / (c * 4)) ** 2 - 1) < 0.02
    X = sample_regime(TWO, [1.0, 2.0], 2, 200_000, 4.0, FixedShift(2.0, 1.0), ss)
    assert abs(X[:, 1].mean() - 2.0) < 0.01 and abs(X[:, 1].var() - 1.0) < 0.02


def test_regime_zero_identical_across_models():
    W = np.array([[0, 1.0, 0.5], [0, 0, -1.2], [0, 0, 0]])
    ss = seed_sequence(11, 2, 0)
    ref = sample_regime(W, [1, 1, 1], 0, 50, 4.0, Hard(), ss)
    for model in [Soft(0.3), AlphaPerturbed(), FixedShift()]:
        assert np.array_equal(sample_regime(W, [1, 1, 1], 0, 50, 4.0, model, ss), ref)


def test_soft_zero_bit_identical_to_hard():
    c = cfg(ER(0.4), 8, seed=4)
    a = sample_dataset(c, 3).interventional
    b = sample_dataset(ScenarioConfig.from_dict({**c.to_dict(), "intervention": {"kind": "soft", "pi": 0.0}}),
                       3).interventional
    for (k, X), (_, Y) in zip(a, b):
        assert np.array_equal(X, Y)


def test_cyclic_truth_rejected():
    with pytest.raises(InvalidInputError):
        sample_regime(np.array([[0, 1.0], [1.0, 0]]), [1, 1], 0, 10, 4.0, Hard(), np.random.default_rng(0))


def test_regime0_covariance_matches_model():
    W = np.array([[0, 0.9, 0, 0], [0, 0, -1.1, 0.4], [0, 0, 0, 0.7], [0, 0, 0, 0]])
    s = np.array([1.0, 0.7, 1.3, 0.5])
    X = sample_regime(W, s, 0, 1_000_000, 4.0, Hard(), np.random.default_rng(9))
    A = np.linalg.inv(np.eye(4) - W)
    cov = A.T @ np.diag(s ** 2) @ A
    emp = np.cov(X.T)
    big = np.abs(cov) > 0.1
    assert np.all(np.abs(emp[big] / cov[big] - 1) < 0.05)


def test_dataset_sizes_and_determinism():
    d = sample_dataset(cfg(ER(0.5), 2, n_k=1000, n_obs=3000), 0)
    assert len(d.interventional) == 3 and d.interventional.n_total == 3000
    assert d.observational.n_total == 3000
    big = sample_dataset(cfg(ER(0.1), 40, n_k=100), 0)
    assert len(big.interventional) == 41 and big.interventional.n_total == 4100
    again = sample_dataset(cfg(ER(0.1), 40, n_k=100), 0)
    assert all(np.array_equal(X, Y) for (_, X), (_, Y) in zip(big.interventional, again.interventional))
    assert np.array_equal(big.W0, again.W0)


@given(st.integers(0, 2**63 - 1), st.integers(0, 50))
def test_replicates_are_reproducible(seed, rep):
    c = cfg(ER(0.3), 4, n_k=5, seed=seed)
    a, b = sample_dataset(c, rep), sample_dataset(c, rep)
    assert np.array_equal(a.W0, b.W0) and np.array_equal(a.sigmas, b.sigmas)
    assert np.array_equal(a.interventional.pooled(), b.interventional.pooled())
