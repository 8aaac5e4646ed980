import logging
import os
from dataclasses import replace
from typing import Dict, List, Optional

from commands.run_config import RunConfig
from config.path import DIAGNOSTICS_FILE, NOISE_MANIFEST_FILE, NOISE_STATS_FILE, SPECTRUM_FILE, TOPOLOGY_FILE
from identification.topology import TopologyResult, identify_topology
from simulation.readings import NoiseConfig
from utils.errors import LayerMetadataMissing
from utils.file_utils import (
    read_json,
    read_layers,
    read_readings,
    write_json,
    write_noise_stats,
    write_table,
    write_topology,
)

EXIT_SUCCESS = 0
EXIT_PARTIAL = 2
EXIT_INPUT_ERROR = 3

DIAGNOSTIC_COLUMNS = [
    "parent_level", "status", "n_parents", "n_children", "samples", "spectral_gap",
    "condition_number", "estimated_constraints", "min_margin", "max_deviation",
    "ambiguous_columns", "seconds", "error",
]


def partial_topology_document(result: TopologyResult, labels: Dict) -> Dict:
    """Topology document carrying only the edges of the layer pairs that succeeded."""
    level_of = {node: layer.level for layer in result.layers for node in layer.members}
    return {
        "nodes": [
            {"id": int(node), "name": labels[node].name, "role": labels[node].role, "layer": level_of[node]}
            for node in result.nodes
        ],
        "edges": [
            {"parent": int(parent), "child": int(child)}
            for parent, child in sorted(result.edges, key=lambda edge: edge[1])
        ],
        "failed_pairs": [
            {"parent_level": level, "error": str(error.cause)} for level, error in sorted(result.failures.items())
        ],
    }


def diagnostics_rows(result: TopologyResult) -> List[Dict]:
    rows = [{**pair.diagnostics.to_row(), "status": "ok", "error": ""} for pair in result.pairs]
    for level, error in result.failures.items():
        rows.append({"parent_level": level, "status": "failed", "error": f"{type(error.cause).__name__}: {error.cause}"})
    return sorted(rows, key=lambda row: row["parent_level"])


def spectrum_rows(result: TopologyResult) -> List[Dict]:
    return [
        {"parent_level": pair.parent_level, "index": i, "singular_value": float(value)}
        for pair in result.pairs
        for i, value in enumerate(pair.singular_values)
    ]


class TopologyIdentifier:
    """Reads a readings file and layer metadata, identifies the topology and writes the results."""

    def __init__(self, cfg: RunConfig, auto_execute: bool = True):
        """
        Args:
            cfg: Run configuration with readings_path and layers_path.
            auto_execute: If True, identifies and writes immediately.
        """
        self.logger = logging.getLogger(__name__)
        self.cfg = cfg
        self.result: Optional[TopologyResult] = None
        self.exit_code: Optional[int] = None

        if auto_execute:
            self.run()

    def path(self, name: str) -> str:
        return os.path.join(self.cfg.out, name)

    def noise_config(self) -> NoiseConfig:
        """The configured noise model, taking the accuracy class from a noise manifest beside the readings."""
        manifest = os.path.join(os.path.dirname(self.cfg.readings_path), NOISE_MANIFEST_FILE)
        if not self.cfg.profile_accuracy or not os.path.exists(manifest):
            return self.cfg.noise
        accuracy = read_json(manifest).get("config", {}).get("accuracy_class_pct")
        if accuracy is None:
            return self.cfg.noise
        self.logger.info(f"Using accuracy class {accuracy}% from {manifest}")
        return replace(self.cfg.noise, accuracy_class_pct=float(accuracy))

    def run(self) -> int:
        if not self.cfg.readings_path:
            raise ValueError("identify needs a readings file")
        if not self.cfg.layers_path:
            raise LayerMetadataMissing("identify needs a topology file with layer metadata")

        layers, labels = read_layers(self.cfg.layers_path)
        Z = read_readings(self.cfg.readings_path, self.cfg.orientation, self.cfg.noise.interval_minutes)
        self.logger.info(f"Loaded {Z.n} meters x {Z.N} intervals in {len(layers)} layers")

        self.result = identify_topology(
            Z, layers, self.noise_config(), whiten=self.cfg.whiten, labels=labels, max_workers=self.cfg.threads
        )
        self.save(labels)

        if self.result.complete:
            self.exit_code = EXIT_SUCCESS
        else:
            self.exit_code = EXIT_PARTIAL
            self.logger.warning(
                f"Partial inference: layer pairs {sorted(self.result.failures)} failed, "
                f"topology written with the remaining edges"
            )
        return self.exit_code

    def save(self, labels: Dict) -> None:
        result = self.result
        if result.network is not None:
            write_topology(result.network, self.path(TOPOLOGY_FILE))
        else:
            write_json(partial_topology_document(result, labels), self.path(TOPOLOGY_FILE))
        write_table(diagnostics_rows(result), self.path(DIAGNOSTICS_FILE), columns=DIAGNOSTIC_COLUMNS)

        if self.cfg.dump_spectrum:
            write_table(spectrum_rows(result), self.path(SPECTRUM_FILE))
        if self.cfg.dump_noise:
            write_noise_stats(
                [pair.noise_stats.to_dict(pair.parent_level) for pair in result.pairs if pair.noise_stats],
                self.path(NOISE_STATS_FILE),
            )


def cmd_identify(cfg: RunConfig) -> int:
    return TopologyIdentifier(cfg).exit_code
