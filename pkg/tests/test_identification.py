import numpy as np
import pytest

from grid.incidence import build_incidence, split_incidence
from grid.network import LayeredNetwork, connectivity_equal
import identification.topology
from identification.phase import ambiguous_columns, identify_phase, round_regression, rounding_margins
from identification.topology import identify_topology, score
from simulation.generator import GroundTruthGenerator, simulate_ground_truth
from simulation.loads import gen_consumer_loads
from simulation.network_gen import gen_phase_network
from simulation.readings import NoiseConfig, ReadingsMatrix
from utils.errors import InsufficientSamples, LayerMetadataMissing, MissingChildRow, NodeSetMismatch


def test_rounding_picks_the_entry_closest_to_one():
    R = np.array([[0.98], [0.03], [-0.01]])
    np.testing.assert_array_equal(round_regression(R), [[1], [0], [0]])
    np.testing.assert_allclose(rounding_margins(R), [0.95])
    assert ambiguous_columns(R) == ()


def test_rounding_tie_goes_to_the_lowest_row():
    R = np.array([[1.0, 0.1], [1.0, 0.9]])
    np.testing.assert_array_equal(round_regression(R), [[1, 0], [0, 1]])
    assert ambiguous_columns(R) == (0,)


def test_single_parent_margins_are_infinite():
    assert np.isinf(rounding_margins(np.array([[1.02, 0.97]]))).all()


def test_single_child_equal_to_its_parent():
    x = np.random.default_rng(1).uniform(100.0, 200.0, size=4)
    Z = ReadingsMatrix(np.vstack([x, x]), (0, 1))
    result = identify_phase(Z, [0], [1])
    assert result.inferred_edges == ((0, 1),)
    np.testing.assert_allclose(result.raw_regression, [[1.0]], atol=1e-8)


def test_noise_free_forest_recovers_the_incidence_block(three_phase_forest, noise_free_readings):
    Z = noise_free_readings(three_phase_forest, 24, seed=3)
    result = identify_phase(Z, three_phase_forest.layer(2).members, three_phase_forest.layer(1).members)
    A_d, _ = split_incidence(build_incidence(three_phase_forest, three_phase_forest.layer(2), three_phase_forest.layer(1)))
    np.testing.assert_allclose(result.raw_regression, -A_d, atol=1e-8)
    assert set(result.inferred_edges) == three_phase_forest.edges
    assert result.diagnostics.min_margin > 0.99


def test_too_few_intervals(three_phase_forest, noise_free_readings):
    Z = noise_free_readings(three_phase_forest, 11)
    with pytest.raises(InsufficientSamples):
        identify_phase(Z, three_phase_forest.layer(2).members, three_phase_forest.layer(1).members)


def test_three_layer_network_noise_free(three_layer_network, noise_free_readings):
    Z = noise_free_readings(three_layer_network, 16, seed=2)
    result = identify_topology(Z, three_layer_network.layers)
    assert result.complete
    assert connectivity_equal(result.network, three_layer_network)
    assert score(result, three_layer_network) == (True, 1.0)
    assert [pair.parent_level for pair in result.pairs] == [2, 3]


def test_pairs_only_see_their_own_rows(three_layer_network, noise_free_readings):
    Z = noise_free_readings(three_layer_network, 16, seed=2)
    values = np.array(Z.values)
    values[0] *= 1.7
    perturbed = identify_topology(Z.with_values(values), three_layer_network.layers, max_workers=1)
    baseline = identify_topology(Z, three_layer_network.layers, max_workers=1)
    np.testing.assert_array_equal(perturbed.pair(2).raw_regression, baseline.pair(2).raw_regression)


def test_noise_free_random_networks_at_minimum_samples(make_forest):
    rng = np.random.default_rng(2024)
    for trial in range(100):
        if trial % 2:
            top = int(rng.integers(1, 5))
            middle = top + int(rng.integers(0, 40))
            sizes = [middle + int(rng.integers(0, 400)), middle, top]
        else:
            parents = int(rng.integers(1, 10))
            sizes = [parents + int(rng.integers(0, 450)), parents]
        net = make_forest(rng, sizes)
        Z = gen_consumer_loads(net, len(net.nodes), seed=trial)
        gt = simulate_ground_truth(net, Z, NoiseConfig.noise_free(), seed=trial)
        result = identify_topology(gt.noisy_readings, net.layers)
        assert score(result, net) == (True, 1.0), f"trial {trial} with layer sizes {sizes}"
        for pair in result.pairs:
            s = pair.singular_values
            p = len(pair.parents)
            assert s[-p:].max() < 1e-8 * s[0]


def test_phase_networks_with_twice_the_consumers_in_samples():
    for seed in range(10):
        gt = GroundTruthGenerator(seed, NoiseConfig(rng_seed=seed), samples_multiplier=2.0).ground_truth
        result = identify_topology(gt.noisy_readings, gt.network.layers, gt.config)
        assert score(result, gt.network) == (True, 1.0), f"seed {seed}"


def test_identification_is_scale_invariant():
    gt = GroundTruthGenerator(12, consumers_per_phase_range=(20, 30), samples_multiplier=3.0).ground_truth
    base = identify_topology(gt.noisy_readings, gt.network.layers, gt.config)
    scaled = identify_topology(gt.noisy_readings.scaled(1000.0), gt.network.layers, gt.config)
    assert set(base.edges) == set(scaled.edges) == gt.network.edges


def test_plain_pca_still_runs():
    gt = GroundTruthGenerator(4, consumers_per_phase_range=(10, 12), samples_multiplier=3.0).ground_truth
    result = identify_topology(gt.noisy_readings, gt.network.layers, gt.config, whiten=False)
    assert result.complete
    assert len(result.edges) == len(gt.network.layer(1))


def test_too_few_intervals_is_recorded_per_pair():
    gt = GroundTruthGenerator(5, consumers_per_phase_range=(10, 12), samples_multiplier=1.0).ground_truth
    result = identify_topology(gt.noisy_readings, gt.network.layers, gt.config)
    assert not result.complete
    assert result.network is None
    assert isinstance(result.failures[2].cause, InsufficientSamples)
    assert score(result, gt.network) == (False, 0.0)


def test_layer_metadata_is_checked(three_layer_network, noise_free_readings):
    Z = noise_free_readings(three_layer_network, 16)
    with pytest.raises(LayerMetadataMissing):
        identify_topology(Z, three_layer_network.layers[:1])
    with pytest.raises(LayerMetadataMissing):
        identify_topology(Z, three_layer_network.layers[:2])
    with pytest.raises(MissingChildRow):
        identify_topology(Z.rows(range(1, 8)), three_layer_network.layers)


def test_score_counts_correct_parents():
    truth = gen_phase_network((75, 75), seed=0)
    assert score(truth, truth) == (True, 1.0)
    child = truth.layer(1).members[0]
    parent = truth.parent_of(child)
    moved = set(truth.edges) - {(parent, child)} | {((parent + 1) % 3, child)}
    wrong = LayeredNetwork(layers=truth.layers, edges=frozenset(moved))
    success, accuracy = score(wrong, truth)
    assert not success
    assert accuracy == pytest.approx(224 / 225)


def test_score_requires_same_meters(three_phase_forest, three_layer_network):
    with pytest.raises(NodeSetMismatch):
        score(three_phase_forest, three_layer_network)


def test_linear_algebra_failure_ends_only_its_pair(three_layer_network, noise_free_readings, monkeypatch):
    Z = noise_free_readings(three_layer_network, 16, seed=2)
    real_identify_phase = identify_phase

    def failing_top_pair(Z, parents, children, cfg=None, whiten=True, parent_level=2):
        if parent_level == 3:
            raise np.linalg.LinAlgError("SVD did not converge")
        return real_identify_phase(Z, parents, children, cfg, whiten, parent_level)

    monkeypatch.setattr(identification.topology, "identify_phase", failing_top_pair)
    result = identify_topology(Z, three_layer_network.layers, max_workers=1)
    assert sorted(result.failures) == [3]
    assert isinstance(result.failures[3].cause, np.linalg.LinAlgError)
    assert [pair.parent_level for pair in result.pairs] == [2]
    assert result.network is None
