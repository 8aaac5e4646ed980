"""
Monte-Carlo benchmark: repeated generate-and-identify cycles over a grid of
sample counts, reporting success rate, identification time and accuracy.
"""

import logging
import os
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd
import scipy

from commands.generate import load_rbts_spec, simulate
from commands.run_config import RunConfig
from config.path import REPORT_FILE, SUMMARY_FILE, TRIALS_FILE
from identification.topology import RECOVERABLE_ERRORS, identify_topology, score
from simulation.rbts import RbtsSpec
from utils.file_utils import read_frame, write_frame, write_text
from utils.random_utils import derive_seed
from utils.thread_utils import worker_count


def environment_note() -> str:
    return (
        f"{platform.platform()}; {platform.machine()}; {os.cpu_count()} cpus; "
        f"python {platform.python_version()}; numpy {np.__version__}; scipy {scipy.__version__}"
    )


@dataclass(frozen=True)
class TrialResult:
    cell: int
    trial: int
    seed: int
    nodes: int
    consumers: int
    samples: int
    success: bool
    accuracy: float
    seconds: float
    error: str = ""


@dataclass(frozen=True)
class CellResult:
    """Aggregate of the trials run at one (node count, N-multiplier) cell."""

    network: str
    multiplier: float
    nodes: float
    consumers: float
    samples: float
    trials: int
    successes: int
    success_rate: float
    mean_seconds: float
    mean_accuracy: float
    min_accuracy: float
    failed_trials: int

    @classmethod
    def from_trials(cls, network: str, multiplier: float, trials: List[TrialResult]) -> "CellResult":
        successes = sum(t.success for t in trials)
        return cls(
            network=network,
            multiplier=float(multiplier),
            nodes=float(np.mean([t.nodes for t in trials])),
            consumers=float(np.mean([t.consumers for t in trials])),
            samples=float(np.mean([t.samples for t in trials])),
            trials=len(trials),
            successes=int(successes),
            success_rate=100.0 * successes / len(trials),
            mean_seconds=float(np.mean([t.seconds for t in trials])),
            mean_accuracy=float(np.mean([t.accuracy for t in trials])),
            min_accuracy=float(np.min([t.accuracy for t in trials])),
            failed_trials=sum(1 for t in trials if t.error),
        )


@dataclass(frozen=True)
class BenchmarkReport:
    cells: Tuple[CellResult, ...]
    environment: str = field(default_factory=environment_note)

    def to_frame(self) -> pd.DataFrame:
        df = pd.DataFrame([asdict(cell) for cell in self.cells], columns=[f.name for f in fields(CellResult)])
        df["environment"] = self.environment
        return df

    @classmethod
    def from_frame(cls, df: pd.DataFrame) -> "BenchmarkReport":
        names = [f.name for f in fields(CellResult)]
        cells = []
        for record in df[names].to_dict(orient="records"):
            cells.append(CellResult(
                network=str(record["network"]),
                multiplier=float(record["multiplier"]),
                nodes=float(record["nodes"]),
                consumers=float(record["consumers"]),
                samples=float(record["samples"]),
                trials=int(record["trials"]),
                successes=int(record["successes"]),
                success_rate=float(record["success_rate"]),
                mean_seconds=float(record["mean_seconds"]),
                mean_accuracy=float(record["mean_accuracy"]),
                min_accuracy=float(record["min_accuracy"]),
                failed_trials=int(record["failed_trials"]),
            ))
        environment = str(df["environment"].iloc[0]) if len(df) else ""
        return cls(cells=tuple(cells), environment=environment)

    def write(self, path: str) -> None:
        write_frame(self.to_frame(), path)

    @classmethod
    def read(cls, path: str) -> "BenchmarkReport":
        return cls.from_frame(read_frame(path))

    def summary(self) -> str:
        lines = [
            "# Benchmark summary",
            "",
            f"Environment: {self.environment}",
            "",
            "| network | consumers | nodes | N multiplier | samples | trials | success rate (%) | mean time (s) | mean accuracy |",
            "|---|---|---|---|---|---|---|---|---|",
        ]
        for c in self.cells:
            lines.append(
                f"| {c.network} | {c.consumers:.0f} | {c.nodes:.0f} | {c.multiplier:g} | {c.samples:.0f} | {c.trials} "
                f"| {c.success_rate:.0f} | {c.mean_seconds:.3f} | {c.mean_accuracy:.4f} |"
            )
        return "\n".join(lines) + "\n"


class BenchmarkRunner:
    """Runs the benchmark grid and writes the report, the per-trial table and the summary."""

    def __init__(self, cfg: RunConfig, auto_execute: bool = True):
        """
        Args:
            cfg: Run configuration (network, multipliers, trials, seed, optional node sweep).
            auto_execute: If True, runs the grid and writes the files immediately.
        """
        self.logger = logging.getLogger(__name__)
        self.cfg = cfg
        self.trials: List[TrialResult] = []
        self.report: Optional[BenchmarkReport] = None
        self.spec: Optional[RbtsSpec] = load_rbts_spec(cfg.spec_path) if cfg.network == "rbts" else None

        if auto_execute:
            self.run()

    def cells(self) -> List[Tuple[Optional[int], float]]:
        """(consumers per phase or None, multiplier) for every cell of the grid."""
        if self.cfg.sweep_nodes:
            return [(max(1, n // 3), m) for n in self.cfg.sweep_nodes for m in self.cfg.n_multipliers]
        return [(None, m) for m in self.cfg.n_multipliers]

    def run_trial(self, cell: int, trial: int) -> TrialResult:
        per_phase, multiplier = self.cells()[cell]
        seed = derive_seed(self.cfg.resolved_seed(), cell, trial)
        base = dict(cell=cell, trial=trial, seed=seed, nodes=0, consumers=0, samples=0)
        try:
            gt = simulate(self.cfg, seed, multiplier, self.spec, per_phase)
        except RECOVERABLE_ERRORS as e:
            self.logger.error(f"Cell {cell} trial {trial} failed to simulate: {type(e).__name__}: {e}")
            return TrialResult(**base, success=False, accuracy=0.0, seconds=0.0, error=f"{type(e).__name__}: {e}")

        truth = gt.network
        base.update(nodes=len(truth.nodes), consumers=len(truth.layers[0]), samples=gt.N)
        start = time.perf_counter()
        try:
            result = identify_topology(
                gt.noisy_readings, truth.layers, gt.config, whiten=self.cfg.whiten, max_workers=1
            )
        except RECOVERABLE_ERRORS as e:
            seconds = time.perf_counter() - start
            self.logger.error(f"Cell {cell} trial {trial} failed before inference: {type(e).__name__}: {e}")
            return TrialResult(**base, success=False, accuracy=0.0, seconds=seconds, error=f"{type(e).__name__}: {e}")
        seconds = time.perf_counter() - start

        outcome = score(result, truth)
        error = "; ".join(f"pair {level}: {failure.cause}" for level, failure in sorted(result.failures.items()))
        return TrialResult(**base, success=outcome.success, accuracy=outcome.accuracy, seconds=seconds, error=error)

    def run(self) -> BenchmarkReport:
        self.cfg.resolved_seed()
        grid = self.cells()
        jobs = [(cell, trial) for cell in range(len(grid)) for trial in range(self.cfg.trials)]
        workers = worker_count(self.cfg.threads, len(jobs))
        self.logger.info(f"Running {len(jobs)} trials over {len(grid)} cells with {workers} workers")

        with ThreadPoolExecutor(max_workers=workers) as executor:
            self.trials = list(executor.map(lambda job: self.run_trial(*job), jobs))

        cells = []
        for cell, (_, multiplier) in enumerate(grid):
            trials = [t for t in self.trials if t.cell == cell]
            result = CellResult.from_trials(self.cfg.network, multiplier, trials)
            cells.append(result)
            self.logger.info(
                f"Cell {cell}: {result.consumers:.0f} consumers, N = {multiplier:g}x -> "
                f"success {result.success_rate:.0f}%, mean time {result.mean_seconds:.3f}s"
            )
        self.report = BenchmarkReport(cells=tuple(cells))
        self.save()
        return self.report

    def save(self) -> None:
        self.report.write(os.path.join(self.cfg.out, REPORT_FILE))
        write_frame(pd.DataFrame([asdict(t) for t in self.trials]), os.path.join(self.cfg.out, TRIALS_FILE))
        write_text(self.report.summary(), os.path.join(self.cfg.out, SUMMARY_FILE))
        self.logger.info(f"Saved benchmark report to {self.cfg.out}")


def cmd_benchmark(cfg: RunConfig) -> BenchmarkReport:
    return BenchmarkRunner(cfg).report
