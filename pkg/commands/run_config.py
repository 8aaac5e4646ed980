import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple

from config.path import BENCHMARK_DIR, IDENTIFY_DIR, OUTPUT_DIR
from simulation.readings import NoiseConfig
from utils.random_utils import fresh_seed

logger = logging.getLogger(__name__)

COMMANDS = ("generate", "identify", "benchmark")
NETWORKS = ("phase", "rbts")

DEFAULT_OUT = {"generate": OUTPUT_DIR, "identify": IDENTIFY_DIR, "benchmark": BENCHMARK_DIR}


@dataclass(frozen=True)
class RunConfig:
    """
    Everything a command needs, resolved from the command line.

    ``n_multipliers`` scale the consumer count for the phase network and the
    total meter count for the multilayer network. ``profile_accuracy`` lets a
    multilayer spec (or the noise manifest next to a readings file) set the
    meter accuracy class; it is off once the class is given explicitly.
    """

    command: str
    out: str = ""
    seed: Optional[int] = None
    trials: int = 10
    n_multipliers: Tuple[float, ...] = (2.0,)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    network: str = "phase"
    spec_path: Optional[str] = None
    readings_path: Optional[str] = None
    layers_path: Optional[str] = None
    orientation: str = "intervals"
    whiten: bool = True
    sweep_nodes: Tuple[int, ...] = ()
    dump_noise: bool = False
    dump_spectrum: bool = False
    threads: Optional[int] = None
    profile_accuracy: bool = True

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValueError(f"Unknown command '{self.command}', expected one of {COMMANDS}")
        if self.network not in NETWORKS:
            raise ValueError(f"Unknown network '{self.network}', expected one of {NETWORKS}")
        if self.trials < 1:
            raise ValueError(f"trials must be at least 1, got {self.trials}")
        if not self.n_multipliers or any(m < 1 for m in self.n_multipliers):
            raise ValueError(f"N-multipliers must be at least 1, got {list(self.n_multipliers)}")
        if any(n < 4 for n in self.sweep_nodes):
            raise ValueError(f"Swept node counts must be at least 4, got {list(self.sweep_nodes)}")
        if self.sweep_nodes and self.network != "phase":
            raise ValueError("Node-count sweeps run on the phase network only")
        if self.orientation not in ("intervals", "meters"):
            raise ValueError(f"Unknown orientation '{self.orientation}'")
        if not self.out:
            object.__setattr__(self, "out", DEFAULT_OUT[self.command])

    def resolved_seed(self) -> int:
        """The configured seed, or a fresh one that is logged so the run can be repeated."""
        if self.seed is not None:
            return int(self.seed)
        seed = fresh_seed()
        object.__setattr__(self, "seed", seed)
        logger.info(f"No seed given, using --seed {seed}")
        print(f"seed: {seed}")
        return seed
