import numpy as np
import pytest
from scipy import stats

from config.noise import DISTANCE_CHOICES
from config.simulation import LOAD_RANGES_WH
from simulation.generator import GroundTruthGenerator, simulate_ground_truth
from simulation.loads import aggregate_up, gen_consumer_loads, uniform_bounds_from_mean_peak
from simulation.network_gen import gen_phase_network
from simulation.noise import (
    draw_distances,
    inject_losses,
    inject_meter_error,
    inject_sync_error,
    meter_error_variance,
    scale_to_range,
    sync_error_variance,
)
from simulation.readings import NoiseConfig, ReadingsMatrix
from utils.errors import InfeasibleLoadSpec, InvalidNoiseConfig, MissingChildRow, NonPositiveDistance


def test_phase_network_shape():
    net = gen_phase_network((75, 100), seed=4)
    consumers = len(net.layer(1))
    assert net.layer(2).members == (0, 1, 2)
    assert 225 <= consumers <= 300
    for phase in range(3):
        assert 75 <= len(net.children_of(phase)) <= 100
    assert net.labels[0].name == "TX-A"
    assert net.labels[3].role == "consumer"


def test_phase_network_is_seed_deterministic():
    assert gen_phase_network((5, 9), seed=1).edges == gen_phase_network((5, 9), seed=1).edges
    assert gen_phase_network((5, 9), seed=1).edges != gen_phase_network((5, 9), seed=2).edges


def test_phase_network_rejects_bad_range():
    with pytest.raises(ValueError):
        gen_phase_network((0, 3))


def test_aggregate_up_sums_children(three_layer_network):
    leaves = ReadingsMatrix(np.arange(1.0, 6.0).reshape(5, 1), (3, 4, 5, 6, 7))
    Z = aggregate_up(three_layer_network, leaves)
    assert Z.node_order == tuple(range(8))
    np.testing.assert_array_equal(Z.values[:3, 0], [15.0, 3.0, 12.0])


def test_aggregate_up_requires_every_consumer(three_layer_network):
    leaves = ReadingsMatrix(np.ones((4, 2)), (3, 4, 5, 6))
    with pytest.raises(MissingChildRow):
        aggregate_up(three_layer_network, leaves)


def test_consumer_loads_stay_in_range(three_phase_forest):
    Z = gen_consumer_loads(three_phase_forest, 50, seed=2)
    assert Z.values.shape == (9, 50)
    assert Z.values.min() >= 0.0
    assert Z.values.max() <= 500.0


def test_uniform_bounds_from_mean_peak():
    assert uniform_bounds_from_mean_peak(2.0, 3.0) == (1.0, 3.0)
    with pytest.raises(InfeasibleLoadSpec):
        uniform_bounds_from_mean_peak(3.0, 2.0)
    with pytest.raises(InfeasibleLoadSpec):
        uniform_bounds_from_mean_peak(1.0, 3.0)


def test_distances_are_uniform_over_choices():
    net = gen_phase_network((300, 300), seed=0)
    distances = draw_distances(net, seed=9)
    counts = np.array([sum(1 for d in distances.values() if d == c) for c in DISTANCE_CHOICES])
    assert counts.sum() == 900
    assert stats.chisquare(counts).pvalue > 1e-4


def test_scale_to_range():
    np.testing.assert_allclose(scale_to_range(np.array([1.0, 2.0, 3.0]), (5.0, 10.0)), [5.0, 7.5, 10.0])
    np.testing.assert_allclose(scale_to_range(np.array([4.0, 4.0]), (5.0, 10.0)), [7.5, 7.5])


def test_noise_free_config_leaves_readings_untouched(three_layer_network):
    loads = gen_consumer_loads(three_layer_network, 20, seed=1)
    gt = simulate_ground_truth(three_layer_network, loads, NoiseConfig.noise_free(), seed=1)
    np.testing.assert_array_equal(gt.noisy_readings.values, gt.true_readings.values)
    assert not gt.injected.edge_loss.any()


def test_losses_are_booked_on_parents(three_layer_network):
    loads = gen_consumer_loads(three_layer_network, 30, seed=5)
    cfg = NoiseConfig.noise_free(losses=True)
    gt = simulate_ground_truth(three_layer_network, loads, cfg, seed=5)
    Z = gt.noisy_readings.values
    # Consumers meter exactly their own load
    np.testing.assert_array_equal(Z[3:], gt.true_readings.values[3:])
    for parent in (0, 1, 2):
        children = three_layer_network.children_of(parent)
        np.testing.assert_allclose(Z[parent] - Z[children].sum(axis=0), gt.injected.edge_loss[children].sum(axis=0))
    pct = gt.injected.loss_pct
    assert pct[3:].min() == pytest.approx(5.0)
    assert pct[3:].max() == pytest.approx(10.0)
    assert pct[1:3].min() == pytest.approx(5.0)
    assert pct[1:3].max() == pytest.approx(10.0)
    assert pct[0] == 0.0
    np.testing.assert_allclose(gt.total_loss(2), gt.injected.edge_loss[3:].sum(axis=0))


def test_non_positive_distance_is_rejected(three_layer_network):
    loads = gen_consumer_loads(three_layer_network, 5, seed=5)
    distances = {node: 1.0 for node in range(1, 8)}
    distances[4] = 0.0
    with pytest.raises(NonPositiveDistance):
        simulate_ground_truth(three_layer_network, loads, NoiseConfig(), seed=5, distances=distances)


def test_error_variance_formulas():
    Z = ReadingsMatrix(np.array([[600.0, 600.0], [900.0, 900.0]]), (0, 1))
    np.testing.assert_allclose(meter_error_variance(Z, 0.5), [1.0, 2.25])
    np.testing.assert_allclose(sync_error_variance(Z, 15), [(600 / 900) ** 2, 1.0])


def test_meter_error_matches_its_variance():
    gt = GroundTruthGenerator(3, NoiseConfig(losses=False, sync_error=False), samples=4000).ground_truth
    residual = gt.noisy_readings.values - gt.true_readings.values
    consumer = int(np.argmax(gt.injected.sigma_epsilon[3:])) + 3
    assert residual[consumer].var() == pytest.approx(gt.injected.sigma_epsilon[consumer], rel=0.1)


def test_sync_error_scales_with_row_mean():
    Z = ReadingsMatrix(np.vstack([np.full(20000, 600.0), np.full(20000, 1800.0)]), (0, 1))
    noisy = inject_sync_error(Z, NoiseConfig(), seed=8)
    residual = noisy.values - Z.values
    np.testing.assert_allclose(residual.var(axis=1), sync_error_variance(Z, 15), rtol=0.05)
    assert abs(residual.mean(axis=1)).max() < 0.05


def test_switched_off_errors_return_readings_unchanged():
    Z = ReadingsMatrix(np.array([[600.0, 700.0]]), (0,))
    cfg = NoiseConfig.noise_free()
    assert inject_meter_error(Z, cfg, seed=1) is Z
    assert inject_sync_error(Z, cfg, seed=1) is Z


def test_invalid_noise_config():
    with pytest.raises(InvalidNoiseConfig):
        NoiseConfig(loss_pct_range=(10.0, 5.0))
    with pytest.raises(InvalidNoiseConfig):
        NoiseConfig(accuracy_class_pct=0.0)
    with pytest.raises(InvalidNoiseConfig):
        NoiseConfig(interval_minutes=0.5)


def test_generator_is_seed_deterministic():
    a = GroundTruthGenerator(21, consumers_per_phase_range=(10, 20)).ground_truth
    b = GroundTruthGenerator(21, consumers_per_phase_range=(10, 20)).ground_truth
    assert a.network.edges == b.network.edges
    np.testing.assert_array_equal(a.noisy_readings.values, b.noisy_readings.values)
    assert a.N == int(round(2.0 * len(a.network.layer(1))))


def test_manifest_layout():
    gt = GroundTruthGenerator(8, consumers_per_phase_range=(4, 6), samples=12).ground_truth
    manifest = gt.manifest()
    assert manifest["seed"] == 8
    assert manifest["samples"] == 12
    assert manifest["config"]["loss_pct_range"] == [5.0, 10.0]
    assert len(manifest["nodes"]) == gt.n
    assert [pair["parent_level"] for pair in manifest["layer_pairs"]] == [2]
    node = manifest["nodes"][0]
    assert node["sigma_e"] == pytest.approx(node["sigma_lambda"] + node["sigma_epsilon"] + node["sigma_delta"])


def test_phase_sizes_are_uniform_over_the_range():
    sizes = [len(gen_phase_network((75, 100), seed=seed).children_of(phase)) for seed in range(1000) for phase in range(3)]
    counts = np.bincount(sizes, minlength=101)[75:101]
    assert counts.sum() == 3000
    assert stats.chisquare(counts).pvalue > 1e-4


def test_consumer_means_sit_at_their_range_midpoint():
    net = gen_phase_network((10, 10), seed=3)
    Z = gen_consumer_loads(net, 2000, seed=7)
    midpoints = np.array([(low + high) / 2.0 for low, high in LOAD_RANGES_WH])
    for row in Z.values:
        nearest = midpoints[np.argmin(np.abs(midpoints - row.mean()))]
        assert abs(row.mean() - nearest) < 15.0
        assert row.max() <= 2.0 * nearest


def test_zero_loss_range_books_no_loss(three_layer_network):
    loads = gen_consumer_loads(three_layer_network, 25, seed=4)
    cfg = NoiseConfig.noise_free(losses=True, loss_pct_range=(0.0, 0.0))
    gt = simulate_ground_truth(three_layer_network, loads, cfg, seed=4)
    distances = {node: 1.0 for node in range(1, 8)}
    again = inject_losses(gt.with_readings(noisy=gt.true_readings), cfg, distances)
    for result in (gt, again):
        assert not result.injected.edge_loss.any()
        np.testing.assert_array_equal(result.noisy_readings.values, result.true_readings.values)
