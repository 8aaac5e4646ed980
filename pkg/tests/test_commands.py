import json
import re

import numpy as np
import pandas as pd
import pytest

from commands.identify import EXIT_INPUT_ERROR, EXIT_PARTIAL, EXIT_SUCCESS
from config.path import DIAGNOSTICS_FILE, NOISE_MANIFEST_FILE, NOISE_STATS_FILE, READINGS_FILE, SPECTRUM_FILE, TOPOLOGY_FILE
from gridtop import main
from utils.file_utils import read_topology, write_readings, write_topology

SMALL_SPEC = {
    "phases": 3,
    "include_substation": False,
    "load_classes": {"residential": [2.548, 4.128], "commercial": [15.13, 25.0]},
    "feeders": [[["residential", [3, 4, 5]], ["commercial", [1, 2, 1]]]],
}


def generate(out, *flags) -> int:
    return main(["generate", "--out", str(out), *flags])


def identify(bundle, out, *flags) -> int:
    return main(["identify", "--bundle", str(bundle), "--out", str(out), *flags])


def test_generate_writes_a_bundle(tmp_path):
    assert generate(tmp_path, "--seed", "7") == EXIT_SUCCESS
    net = read_topology(str(tmp_path / TOPOLOGY_FILE))
    assert 225 <= len(net.layer(1)) <= 300
    assert len(net.layer(2)) == 3
    manifest = json.loads((tmp_path / NOISE_MANIFEST_FILE).read_text())
    assert manifest["seed"] == 7
    assert manifest["samples"] == round(2 * len(net.layer(1)))
    readings = pd.read_csv(tmp_path / READINGS_FILE)
    assert len(readings) == manifest["samples"]


def test_generate_is_byte_identical_for_a_seed(tmp_path):
    generate(tmp_path / "a", "--seed", "5", "--n-multiplier", "1.5")
    generate(tmp_path / "b", "--seed", "5", "--n-multiplier", "1.5")
    for name in (TOPOLOGY_FILE, READINGS_FILE, NOISE_MANIFEST_FILE):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_printed_seed_reproduces_the_run(tmp_path, capsys):
    generate(tmp_path / "a")
    seed = re.search(r"seed: (\d+)", capsys.readouterr().out).group(1)
    generate(tmp_path / "b", "--seed", seed)
    assert (tmp_path / "a" / READINGS_FILE).read_bytes() == (tmp_path / "b" / READINGS_FILE).read_bytes()


def test_identify_noise_free_bundle(tmp_path):
    generate(tmp_path / "bundle", "--seed", "3", "--noise-free")
    assert identify(tmp_path / "bundle", tmp_path / "out") == EXIT_SUCCESS
    truth = read_topology(str(tmp_path / "bundle" / TOPOLOGY_FILE))
    inferred = read_topology(str(tmp_path / "out" / TOPOLOGY_FILE))
    assert inferred.edges == truth.edges
    assert inferred.labels == truth.labels


def test_identify_noisy_bundle_with_margin(tmp_path):
    generate(tmp_path / "bundle", "--seed", "11", "--n-multiplier", "3")
    assert identify(tmp_path / "bundle", tmp_path / "out") == EXIT_SUCCESS
    truth = read_topology(str(tmp_path / "bundle" / TOPOLOGY_FILE))
    assert read_topology(str(tmp_path / "out" / TOPOLOGY_FILE)).edges == truth.edges
    diagnostics = pd.read_csv(tmp_path / "out" / DIAGNOSTICS_FILE)
    assert diagnostics["status"].tolist() == ["ok"]
    assert diagnostics["min_margin"].min() > 0.5
    assert diagnostics["ambiguous_columns"].sum() == 0


def test_meter_oriented_readings(tmp_path):
    generate(tmp_path / "bundle", "--seed", "2", "--orientation", "meters", "--noise-free")
    lines = (tmp_path / "bundle" / READINGS_FILE).read_text().splitlines()
    assert lines[0].startswith("meter,0,1,")
    assert identify(tmp_path / "bundle", tmp_path / "out", "--orientation", "meters") == EXIT_SUCCESS


def test_identify_dumps(tmp_path):
    generate(tmp_path / "bundle", "--seed", "4", "--n-multiplier", "3")
    assert identify(tmp_path / "bundle", tmp_path / "out", "--dump-noise", "--dump-spectrum") == EXIT_SUCCESS
    stats = json.loads((tmp_path / "out" / NOISE_STATS_FILE).read_text())
    assert [pair["parent_level"] for pair in stats["layer_pairs"]] == [2]
    spectrum = pd.read_csv(tmp_path / "out" / SPECTRUM_FILE)
    assert list(spectrum.columns) == ["parent_level", "index", "singular_value"]
    assert spectrum["singular_value"].is_monotonic_decreasing


def test_rbts_bundle_round_trip(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps(SMALL_SPEC))
    assert generate(
        tmp_path / "bundle", "--seed", "9", "--network", "rbts", "--spec", str(spec), "--n-multiplier", "1", "--noise-free"
    ) == EXIT_SUCCESS
    assert identify(tmp_path / "bundle", tmp_path / "out") == EXIT_SUCCESS
    truth = read_topology(str(tmp_path / "bundle" / TOPOLOGY_FILE))
    assert len(truth.nodes) == 25
    assert read_topology(str(tmp_path / "out" / TOPOLOGY_FILE)).edges == truth.edges


def test_partial_inference(tmp_path, three_layer_network, noise_free_readings):
    bundle = tmp_path / "bundle"
    write_topology(three_layer_network, str(bundle / TOPOLOGY_FILE))
    # 5 intervals cover the 3-meter top pair but not the 7-meter bottom pair
    write_readings(noise_free_readings(three_layer_network, 5, seed=1), str(bundle / READINGS_FILE))
    assert identify(bundle, tmp_path / "out") == EXIT_PARTIAL
    document = json.loads((tmp_path / "out" / TOPOLOGY_FILE).read_text())
    assert [pair["parent_level"] for pair in document["failed_pairs"]] == [2]
    assert {(e["parent"], e["child"]) for e in document["edges"]} == {(0, 1), (0, 2)}
    diagnostics = pd.read_csv(tmp_path / "out" / DIAGNOSTICS_FILE)
    assert diagnostics["status"].tolist() == ["failed", "ok"]


def test_truncated_readings_are_an_input_error(tmp_path, caplog):
    generate(tmp_path / "bundle", "--seed", "1", "--noise-free")
    path = tmp_path / "bundle" / READINGS_FILE
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:-1] + [lines[-1][:5]]) + "\n")
    assert identify(tmp_path / "bundle", tmp_path / "out") == EXIT_INPUT_ERROR
    assert f"line {len(lines)}" in caplog.text


def test_missing_layer_is_an_input_error(tmp_path):
    generate(tmp_path / "bundle", "--seed", "1", "--noise-free")
    path = tmp_path / "bundle" / TOPOLOGY_FILE
    document = json.loads(path.read_text())
    del document["nodes"][0]["layer"]
    path.write_text(json.dumps(document))
    assert identify(tmp_path / "bundle", tmp_path / "out") == EXIT_INPUT_ERROR


def test_missing_readings_file(tmp_path):
    assert main(["identify", "--readings", str(tmp_path / "absent.csv"), "--layers", str(tmp_path / "absent.json")]) == EXIT_INPUT_ERROR


@pytest.mark.parametrize("flags", [["--n-multiplier", "0.5"], ["--trials", "0"], ["--network", "rbts", "--sweep-nodes", "12"]])
def test_invalid_benchmark_options(tmp_path, flags):
    assert main(["benchmark", "--seed", "1", "--out", str(tmp_path), *flags]) == EXIT_INPUT_ERROR


def test_benchmark_command_writes_report(tmp_path, capsys):
    code = main([
        "benchmark", "--seed", "1", "--trials", "1", "--n-multiplier", "2", "--sweep-nodes", "12", "--out", str(tmp_path),
    ])
    assert code == EXIT_SUCCESS
    assert "| phase | 12 |" in capsys.readouterr().out
    assert (tmp_path / "benchmark_report.csv").exists()
    assert (tmp_path / "benchmark_summary.md").exists()


def test_profile_accuracy_class_reaches_the_estimators(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps(dict(SMALL_SPEC, accuracy_class_pct=2.0)))
    generate(tmp_path / "bundle", "--seed", "2", "--network", "rbts", "--spec", str(spec), "--n-multiplier", "3", "--noise-free")
    manifest = json.loads((tmp_path / "bundle" / NOISE_MANIFEST_FILE).read_text())
    assert manifest["config"]["accuracy_class_pct"] == 2.0

    def error_ratios(out, *flags):
        assert identify(tmp_path / "bundle", out, "--dump-noise", *flags) == EXIT_SUCCESS
        stats = json.loads((out / NOISE_STATS_FILE).read_text())
        return [node["sigma_epsilon"] / node["sigma_delta"] for pair in stats["layer_pairs"] for node in pair["nodes"]]

    # (alpha * 60 T / 300) squared with T = 15
    np.testing.assert_allclose(error_ratios(tmp_path / "profile"), 36.0)
    np.testing.assert_allclose(error_ratios(tmp_path / "explicit", "--accuracy-class", "0.5"), 2.25)
