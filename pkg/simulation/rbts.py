import json
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from config import rbts as rbts_defaults
from config.simulation import STREAM_LOADS
from grid.network import Layer, LayeredNetwork, NodeId, NodeLabel
from simulation.generator import simulate_ground_truth
from simulation.ground_truth import GroundTruth
from simulation.loads import gen_mean_peak_loads, uniform_bounds_from_mean_peak
from simulation.network_gen import phase_name
from simulation.readings import NoiseConfig
from utils.errors import InfeasibleLoadSpec, InvalidNetwork, InvalidNoiseConfig
from utils.random_utils import derive_seed

logger = logging.getLogger(__name__)


def _optional_float(value) -> Optional[float]:
    return None if value is None else float(value)


@dataclass(frozen=True)
class TransformerSpec:
    load_class: str
    consumers_per_phase: Tuple[int, ...]


@dataclass(frozen=True)
class RbtsSpec:
    """
    Layer-size description of a multilayer radial network.

    Layers from the top: optional substation phase meters, one phase meter
    per feeder phase, one per transformer phase, then the consumers.
    Consumer counts may be zero for a phase left empty. ``accuracy_class_pct``
    is the accuracy class of the profile's meters; None keeps the class of
    the noise configuration.
    """

    feeders: Tuple[Tuple[TransformerSpec, ...], ...]
    load_classes: Mapping[str, Tuple[float, float]] = field(default_factory=dict)
    phases: int = 3
    include_substation: bool = True
    accuracy_class_pct: Optional[float] = None

    def __post_init__(self):
        for name, (average, peak) in self.load_classes.items():
            try:
                uniform_bounds_from_mean_peak(average, peak)
            except InfeasibleLoadSpec as e:
                raise InfeasibleLoadSpec(f"Load class '{name}': {e}") from e
        for feeder in self.feeders:
            for transformer in feeder:
                if transformer.load_class not in self.load_classes:
                    raise InfeasibleLoadSpec(f"Unknown load class '{transformer.load_class}'")
                if len(transformer.consumers_per_phase) != self.phases:
                    raise ValueError(
                        f"Transformer lists {len(transformer.consumers_per_phase)} phase counts, expected {self.phases}"
                    )
                if any(count < 0 for count in transformer.consumers_per_phase):
                    raise InvalidNetwork(
                        f"Consumer counts must be non-negative, got {list(transformer.consumers_per_phase)}"
                    )
        if self.accuracy_class_pct is not None and self.accuracy_class_pct <= 0:
            raise InvalidNoiseConfig(f"Accuracy class must be positive, got {self.accuracy_class_pct}")
        if self.layer_count < 3:
            raise ValueError(f"Spec yields {self.layer_count} layers, at least 3 are required")

    @property
    def layer_count(self) -> int:
        return 3 + int(self.include_substation)

    @property
    def node_count(self) -> int:
        transformers = [t for feeder in self.feeders for t in feeder]
        consumers = sum(sum(t.consumers_per_phase) for t in transformers)
        return (
            self.phases * int(self.include_substation)
            + self.phases * len(self.feeders)
            + self.phases * len(transformers)
            + consumers
        )

    @classmethod
    def default(cls) -> "RbtsSpec":
        return cls.from_dict({
            "load_classes": rbts_defaults.LOAD_CLASSES,
            "feeders": rbts_defaults.FEEDERS,
            "include_substation": rbts_defaults.INCLUDE_SUBSTATION,
            "accuracy_class_pct": rbts_defaults.ACCURACY_CLASS_PCT,
        })

    @classmethod
    def from_dict(cls, document: Mapping) -> "RbtsSpec":
        feeders = tuple(
            tuple(TransformerSpec(str(load_class), tuple(int(c) for c in counts)) for load_class, counts in feeder)
            for feeder in document["feeders"]
        )
        load_classes = {name: (float(avg), float(peak)) for name, (avg, peak) in document["load_classes"].items()}
        return cls(
            feeders=feeders,
            load_classes=load_classes,
            phases=int(document.get("phases", 3)),
            include_substation=bool(document.get("include_substation", True)),
            accuracy_class_pct=_optional_float(document.get("accuracy_class_pct")),
        )

    @classmethod
    def from_json(cls, path: str) -> "RbtsSpec":
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_dict(json.load(f))

    def to_dict(self) -> Dict:
        return {
            "phases": self.phases,
            "include_substation": self.include_substation,
            "accuracy_class_pct": self.accuracy_class_pct,
            "load_classes": {name: list(values) for name, values in self.load_classes.items()},
            "feeders": [
                [[t.load_class, list(t.consumers_per_phase)] for t in feeder] for feeder in self.feeders
            ],
        }


def build_rbts_network(spec: RbtsSpec) -> Tuple[LayeredNetwork, Dict[NodeId, str]]:
    """
    Build the layered network of a spec.

    Node ids are assigned top-down: substation phases, feeder phases,
    transformer phases, consumers.

    Returns:
        The network and the load class of every consumer.
    """
    labels: Dict[NodeId, NodeLabel] = {}
    members: Dict[int, List[NodeId]] = {}
    edges = []
    load_class_of: Dict[NodeId, str] = {}
    next_id = 0
    top = spec.layer_count

    def add(name: str, role: str, level: int) -> NodeId:
        nonlocal next_id
        node = NodeId(next_id)
        next_id += 1
        labels[node] = NodeLabel(name=name, role=role)
        members.setdefault(level, []).append(node)
        return node

    substation: Sequence[Optional[NodeId]] = [None] * spec.phases
    if spec.include_substation:
        substation = [add(f"SUB-{phase_name(k)}", "substation", top) for k in range(spec.phases)]

    feeder_nodes = []
    for f, _ in enumerate(spec.feeders, start=1):
        nodes = [add(f"F{f}-{phase_name(k)}", "feeder", 3) for k in range(spec.phases)]
        for k, node in enumerate(nodes):
            if substation[k] is not None:
                edges.append((substation[k], node))
        feeder_nodes.append(nodes)

    transformer_nodes = []
    t_index = 0
    for f, feeder in enumerate(spec.feeders):
        for transformer in feeder:
            t_index += 1
            nodes = [add(f"T{t_index}-{phase_name(k)}", "transformer-phase", 2) for k in range(spec.phases)]
            for k, node in enumerate(nodes):
                edges.append((feeder_nodes[f][k], node))
            transformer_nodes.append((transformer, nodes))

    c_index = 0
    for transformer, nodes in transformer_nodes:
        for k, node in enumerate(nodes):
            for _ in range(transformer.consumers_per_phase[k]):
                c_index += 1
                consumer = add(f"C{c_index:04d}", "consumer", 1)
                edges.append((node, consumer))
                load_class_of[consumer] = transformer.load_class

    for transformer, nodes in transformer_nodes:
        for k, node in enumerate(nodes):
            if transformer.consumers_per_phase[k] == 0:
                logger.warning(
                    f"Transformer phase {labels[node].name} has no consumers; its layer pair cannot be identified"
                )

    net = LayeredNetwork(
        layers=tuple(Layer(level, tuple(nodes)) for level, nodes in members.items()),
        edges=frozenset(edges),
        labels=labels,
    )
    return net, load_class_of


def gen_rbts_like(
    spec: Optional[RbtsSpec] = None,
    N: int = 1,
    seed: int = 0,
    cfg: Optional[NoiseConfig] = None,
) -> GroundTruth:
    """
    Simulate a multilayer RBTS-scale network with uniform mean/peak consumer loads.

    Consumer loads are uniform on [2 * average - peak, peak] (converted from kW
    to watt-hours per interval); losses, meter and sync errors follow the same
    model as the phase protocol.

    Args:
        spec: Network and load description, defaults to the shipped profile.
        N: Number of intervals.
        seed: Master seed.
        cfg: Noise configuration.

    Returns:
        GroundTruth of the simulated network.
    """
    spec = spec or RbtsSpec.default()
    cfg = cfg or NoiseConfig(rng_seed=seed)
    net, load_class_of = build_rbts_network(spec)
    hours = cfg.interval_minutes / 60.0
    mean_peak_wh = {
        node: tuple(kw * 1000.0 * hours for kw in spec.load_classes[load_class])
        for node, load_class in load_class_of.items()
    }
    loads = gen_mean_peak_loads(
        net, N, mean_peak_wh, derive_seed(seed, STREAM_LOADS), interval_minutes=cfg.interval_minutes
    )
    gt = simulate_ground_truth(net, loads, cfg, seed)
    logger.info(f"Generated multilayer ground truth: {len(net.nodes)} meters in {len(net.layers)} layers, N={N}")
    return gt
