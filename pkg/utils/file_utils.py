import json
import logging
import os
import re
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from config.noise import INTERVAL_MINUTES
from grid.network import Layer, LayeredNetwork, NodeId, NodeLabel, layers_from_levels
from simulation.readings import ReadingsMatrix
from utils.errors import GridTopIOError, LayerMetadataMissing, ParseError

logger = logging.getLogger(__name__)

ORIENTATIONS = ("intervals", "meters")

_PANDAS_LINE = re.compile(r"line (\d+)")


def ensure_parent_dir(path: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    try:
        os.makedirs(directory, exist_ok=True)
    except OSError as e:
        raise GridTopIOError(directory, f"cannot create directory: {e}") from e


def write_json(document: Any, path: str) -> None:
    ensure_parent_dir(path)
    try:
        with open(path, "w", encoding="utf-8") as f:
            f.write(json.dumps(document, indent=2, ensure_ascii=False))
            f.write("\n")
    except OSError as e:
        raise GridTopIOError(path, f"cannot write: {e}") from e
    logger.debug(f"Wrote {path}")


def read_json(path: str) -> Any:
    """
    Reads a JSON document from disk.

    Raises:
        GridTopIOError: The file cannot be opened.
        ParseError: The file is not valid JSON.
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise ParseError(path, e.msg, line=e.lineno) from e
    except OSError as e:
        raise GridTopIOError(path, f"cannot read: {e}") from e


def write_frame(df: pd.DataFrame, path: str, index: bool = False) -> None:
    """Saves a DataFrame as Parquet when the path ends in .parquet, CSV otherwise."""
    ensure_parent_dir(path)
    try:
        if path.lower().endswith(".parquet"):
            df.to_parquet(path, index=index, engine="pyarrow")
        else:
            df.to_csv(path, index=index)
    except OSError as e:
        raise GridTopIOError(path, f"cannot write: {e}") from e
    logger.debug(f"Wrote {len(df)} rows to {path}")


def read_frame(path: str) -> pd.DataFrame:
    try:
        if path.lower().endswith(".parquet"):
            return pd.read_parquet(path, engine="pyarrow")
        return pd.read_csv(path, float_precision="round_trip")
    except FileNotFoundError as e:
        raise GridTopIOError(path, "file not found") from e
    except pd.errors.EmptyDataError as e:
        raise ParseError(path, "file is empty", line=1) from e
    except pd.errors.ParserError as e:
        match = _PANDAS_LINE.search(str(e))
        raise ParseError(path, str(e).splitlines()[-1], line=int(match.group(1)) if match else None) from e
    except (OSError, ValueError) as e:
        raise ParseError(path, str(e)) from e


def write_readings(
    Z: ReadingsMatrix,
    path: str,
    orientation: str = "intervals",
) -> None:
    """
    Saves readings with one row per interval (header = meter ids) or, with
    ``orientation="meters"``, one row per meter.
    """
    if orientation not in ORIENTATIONS:
        raise ValueError(f"Unknown orientation '{orientation}', expected one of {ORIENTATIONS}")
    frame = Z.to_frame()
    if orientation == "meters":
        frame = frame.T
        frame.index.name = "meter"
        frame.columns = [str(c) for c in frame.columns]
    frame = frame.reset_index()
    write_frame(frame, path)
    logger.info(f"Saved {Z.n} meters x {Z.N} intervals to {path}")


def read_readings(
    path: str,
    orientation: str = "intervals",
    interval_minutes: float = INTERVAL_MINUTES,
) -> ReadingsMatrix:
    """
    Loads a readings file written by write_readings or exported in the same layout.

    Args:
        path: CSV or Parquet file.
        orientation: "intervals" (row per interval) or "meters" (row per meter).
        interval_minutes: Interval length recorded on the result.

    Returns:
        ReadingsMatrix with rows in file order.

    Raises:
        ParseError: Header or values are malformed; ``line`` names the offending line.
    """
    if orientation not in ORIENTATIONS:
        raise ValueError(f"Unknown orientation '{orientation}', expected one of {ORIENTATIONS}")
    frame = read_frame(path)
    key = "interval" if orientation == "intervals" else "meter"
    if frame.columns.size and frame.columns[0] == key:
        frame = frame.set_index(key)
    if frame.empty:
        raise ParseError(path, "no readings", line=2)

    if orientation == "intervals":
        meter_labels = list(frame.columns)
    else:
        meter_labels = list(frame.index)
    try:
        meters = [NodeId(int(str(label).strip())) for label in meter_labels]
    except ValueError as e:
        line = 1 if orientation == "intervals" else None
        raise ParseError(path, f"meter ids must be integers: {e}", line=line) from e

    numeric = frame.apply(pd.to_numeric, errors="coerce")
    bad = ~np.isfinite(numeric.to_numpy(dtype=float))
    if bad.any():
        row = int(np.argwhere(bad)[0][0])
        # header is line 1, first data row is line 2
        raise ParseError(path, "missing or non-numeric reading", line=row + 2)

    values = numeric.to_numpy(dtype=float)
    if orientation == "intervals":
        values = values.T
    return ReadingsMatrix(values, tuple(meters), interval_minutes)


def write_topology(net: LayeredNetwork, path: str) -> None:
    write_json(net.to_dict(), path)
    logger.info(f"Saved topology with {len(net.nodes)} meters and {len(net.edges)} edges to {path}")


def _check_nodes(document: Any, path: str) -> List[Dict]:
    if not isinstance(document, dict) or not isinstance(document.get("nodes"), list):
        raise ParseError(path, "expected an object with a 'nodes' list")
    missing = [node.get("id") for node in document["nodes"] if "layer" not in node]
    if missing:
        raise LayerMetadataMissing(f"{path}: nodes without a layer: {missing[:5]}")
    return document["nodes"]


def read_topology(path: str) -> LayeredNetwork:
    """
    Loads a topology document with its edges.

    Raises:
        LayerMetadataMissing: Some node has no layer.
        ParseError: The document is not a topology.
    """
    document = read_json(path)
    _check_nodes(document, path)
    return LayeredNetwork.from_dict(document)


def read_layers(path: str) -> Tuple[Tuple[Layer, ...], Dict[NodeId, NodeLabel]]:
    """
    Loads only the layer partition and meter labels of a topology document.

    Edges, if present, are ignored; this is the metadata identification needs.
    """
    nodes = _check_nodes(read_json(path), path)
    levels = {}
    labels: Dict[NodeId, NodeLabel] = {}
    try:
        for node in nodes:
            node_id = NodeId(int(node["id"]))
            levels[node_id] = int(node["layer"])
            labels[node_id] = NodeLabel(name=str(node.get("name", f"M{node_id}")), role=node.get("role", "consumer"))
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(path, f"malformed node entry: {e}") from e
    if not levels:
        raise LayerMetadataMissing(f"{path}: no nodes")
    return layers_from_levels(levels), labels


def write_manifest(manifest: Dict, path: str) -> None:
    write_json(manifest, path)
    logger.info(f"Saved noise manifest to {path}")


def write_noise_stats(documents: List[Dict], path: str) -> None:
    write_json({"layer_pairs": documents}, path)
    logger.info(f"Saved estimated noise statistics for {len(documents)} layer pairs to {path}")


def write_table(rows: List[Dict], path: str, columns: Optional[List[str]] = None) -> pd.DataFrame:
    df = pd.DataFrame(rows, columns=columns)
    write_frame(df, path)
    return df


def write_text(text: str, path: str) -> None:
    ensure_parent_dir(path)
    try:
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)
    except OSError as e:
        raise GridTopIOError(path, f"cannot write: {e}") from e
    logger.debug(f"Wrote {path}")
