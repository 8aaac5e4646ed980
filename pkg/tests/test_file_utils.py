import json

import numpy as np
import pytest

from simulation.readings import ReadingsMatrix
from utils.errors import GridTopIOError, LayerMetadataMissing, ParseError
from utils.file_utils import (
    read_frame,
    read_json,
    read_layers,
    read_readings,
    read_topology,
    write_readings,
    write_topology,
)


@pytest.fixture
def readings() -> ReadingsMatrix:
    values = np.random.default_rng(0).uniform(0.0, 500.0, size=(3, 4))
    return ReadingsMatrix(values, (0, 1, 2))


@pytest.mark.parametrize("orientation", ["intervals", "meters"])
@pytest.mark.parametrize("suffix", ["csv", "parquet"])
def test_readings_survive_a_file(tmp_path, readings, orientation, suffix):
    path = str(tmp_path / f"readings.{suffix}")
    write_readings(readings, path, orientation)
    restored = read_readings(path, orientation)
    assert restored.node_order == readings.node_order
    np.testing.assert_array_equal(restored.values, readings.values)


def test_interval_layout_has_meter_header(tmp_path, readings):
    path = tmp_path / "readings.csv"
    write_readings(readings, str(path))
    lines = path.read_text().splitlines()
    assert lines[0] == "interval,0,1,2"
    assert len(lines) == 5


def test_truncated_file_names_the_line(tmp_path, readings):
    path = tmp_path / "readings.csv"
    write_readings(readings, str(path))
    lines = path.read_text().splitlines()
    lines[-1] = ",".join(lines[-1].split(",")[:2])
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(ParseError) as excinfo:
        read_readings(str(path))
    assert excinfo.value.line == 5


def test_non_numeric_reading(tmp_path):
    path = tmp_path / "readings.csv"
    path.write_text("interval,0,1\n0,1.0,2.0\n1,abc,2.0\n")
    with pytest.raises(ParseError) as excinfo:
        read_readings(str(path))
    assert excinfo.value.line == 3


def test_meter_ids_must_be_integers(tmp_path):
    path = tmp_path / "readings.csv"
    path.write_text("interval,0,P1\n0,1.0,2.0\n")
    with pytest.raises(ParseError) as excinfo:
        read_readings(str(path))
    assert excinfo.value.line == 1


def test_empty_and_missing_files(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(ParseError):
        read_frame(str(empty))
    with pytest.raises(GridTopIOError):
        read_frame(str(tmp_path / "absent.csv"))


def test_topology_round_trip(tmp_path, three_layer_network):
    path = str(tmp_path / "out" / "topology.json")
    write_topology(three_layer_network, path)
    restored = read_topology(path)
    assert restored == three_layer_network
    layers, labels = read_layers(path)
    assert layers == three_layer_network.layers
    assert labels[0].name == "M0"


def test_layers_without_edges(tmp_path):
    path = tmp_path / "layers.json"
    path.write_text(json.dumps({"nodes": [{"id": 0, "layer": 2}, {"id": 1, "layer": 1}, {"id": 2, "layer": 1}]}))
    layers, _ = read_layers(str(path))
    assert [layer.members for layer in layers] == [(1, 2), (0,)]


def test_node_without_layer(tmp_path):
    path = tmp_path / "layers.json"
    path.write_text(json.dumps({"nodes": [{"id": 0, "layer": 2}, {"id": 1}]}))
    with pytest.raises(LayerMetadataMissing):
        read_layers(str(path))


def test_invalid_json_names_the_line(tmp_path):
    path = tmp_path / "topology.json"
    path.write_text('{\n  "nodes": [\n    {"id": 0,,}\n  ]\n}\n')
    with pytest.raises(ParseError) as excinfo:
        read_json(str(path))
    assert excinfo.value.line == 3


def test_topology_document_must_list_nodes(tmp_path):
    path = tmp_path / "topology.json"
    path.write_text("[]")
    with pytest.raises(ParseError):
        read_topology(str(path))
