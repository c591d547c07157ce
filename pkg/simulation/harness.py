"""Monte Carlo sweep engine over transmit power with counter-based reproducible streams."""

import logging
import multiprocessing
from dataclasses import dataclass, replace
from typing import Callable, Iterable, List, Sequence, Tuple

import numpy as np

from simulation.errors import EstimationError, ParameterError
from simulation.metrics import MetricAccumulator, MetricSummary, merge, summarize, update
from simulation.relaying import ScenarioConfig, TrialOutcome, run_trial

DEFAULT_CHUNK_TRIALS = 2_000
MAX_SEED = 1 << 64

TrialRunner = Callable[[ScenarioConfig, np.random.Generator], TrialOutcome]


def db_to_linear(value_db: float) -> float:
    return float(10 ** (value_db / 10))


@dataclass(frozen=True)
class SweepSpec:
    """A scenario swept over transmit power. ``config.pt`` is replaced at every grid point."""

    config: ScenarioConfig
    pt_grid_db: Tuple[float, ...]
    trials_per_point: int
    master_seed: int

    def __post_init__(self):
        grid = tuple(float(pt) for pt in self.pt_grid_db)
        object.__setattr__(self, "pt_grid_db", grid)
        if not grid:
            raise ParameterError("Transmit power grid is empty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ParameterError(f"Transmit power grid must be strictly ascending, got {grid}")
        if self.trials_per_point < 1:
            raise ParameterError(f"trials_per_point must be >= 1, got {self.trials_per_point}")
        if not 0 <= self.master_seed < MAX_SEED:
            raise ParameterError(f"master_seed must be a 64-bit unsigned integer, got {self.master_seed}")

    def point_config(self, point: int) -> ScenarioConfig:
        """Scenario at grid point ``point``: Pt_dB = 10*log10(Pt / sigma^2)."""
        pt = db_to_linear(self.pt_grid_db[point]) * self.config.noise_var
        return replace(self.config, pt=pt)


@dataclass(frozen=True)
class SweepResult:
    spec: SweepSpec
    summaries: Tuple[MetricSummary, ...]
    accumulators: Tuple[MetricAccumulator, ...] = ()

    def __post_init__(self):
        if len(self.summaries) != len(self.spec.pt_grid_db):
            raise ParameterError(
                f"{len(self.summaries)} summaries for {len(self.spec.pt_grid_db)} grid points"
            )

    @property
    def pt_grid_db(self) -> Tuple[float, ...]:
        return self.spec.pt_grid_db


def trial_stream(master_seed: int, point: int, trial: int) -> np.random.Generator:
    """Random stream of trial ``trial`` at grid point ``point``.

    Philox is keyed by the master seed and its counter starts at (0, trial, point, 0);
    draws advance the lowest word only, so streams never overlap and do not
    depend on which worker runs the trial.
    """
    return np.random.Generator(np.random.Philox(key=master_seed, counter=[0, trial, point, 0]))


def _run_chunk(task: Tuple[TrialRunner, ScenarioConfig, int, int, int, int]) -> Tuple[int, MetricAccumulator]:
    trial_runner, config, master_seed, point, start, stop = task
    acc = MetricAccumulator.empty(config)
    for trial in range(start, stop):
        update(acc, trial_runner(config, trial_stream(master_seed, point, trial)))
    return point, acc


class SweepRunner:
    """Runs every grid point of a sweep, optionally across worker processes."""

    def __init__(self, worker_count: int = 1,
                 chunk_trials: int = DEFAULT_CHUNK_TRIALS,
                 trial_runner: TrialRunner = run_trial):
        """Initialize SweepRunner.

        Args:
            worker_count: Number of worker processes (1 runs in-process)
            chunk_trials: Trials per scheduled task
            trial_runner: Function executing one trial; must be picklable when
                worker_count > 1
        """
        if worker_count < 1:
            raise ParameterError(f"worker_count must be >= 1, got {worker_count}")
        if chunk_trials < 1:
            raise ParameterError(f"chunk_trials must be >= 1, got {chunk_trials}")
        self.worker_count = worker_count
        self.chunk_trials = chunk_trials
        self.trial_runner = trial_runner
        self.logger = logging.getLogger(__name__)

    def _tasks(self, spec: SweepSpec) -> List[tuple]:
        tasks = []
        for point in range(len(spec.pt_grid_db)):
            config = spec.point_config(point)
            for start in range(0, spec.trials_per_point, self.chunk_trials):
                stop = min(start + self.chunk_trials, spec.trials_per_point)
                tasks.append((self.trial_runner, config, spec.master_seed, point, start, stop))
        return tasks

    def _execute(self, tasks: Sequence[tuple]) -> Iterable[Tuple[int, MetricAccumulator]]:
        if self.worker_count == 1 or len(tasks) == 1:
            yield from map(_run_chunk, tasks)
            return
        with multiprocessing.Pool(min(self.worker_count, len(tasks))) as pool:
            yield from pool.imap(_run_chunk, tasks)

    def run(self, spec: SweepSpec) -> SweepResult:
        """Run the sweep.

        Integer counters make the merged result independent of chunking and
        worker count.

        Raises:
            ParameterError: If a grid point yields an invalid scenario
        """
        config = spec.config
        self.logger.info("=" * 70)
        self.logger.info(
            f"Sweep: structure={config.structure.value} protocol={config.protocol.value} "
            f"rs={config.rs_scheme.value} L={config.hops} T={config.relays} "
            f"N={config.n_subcarriers} K={config.n_active} M={config.psk_order}"
        )
        self.logger.info(
            f"{len(spec.pt_grid_db)} grid points x {spec.trials_per_point} trials, "
            f"seed {spec.master_seed}, {self.worker_count} worker(s)"
        )
        self.logger.info("=" * 70)

        tasks = self._tasks(spec)
        accumulators = [MetricAccumulator.empty(spec.point_config(i)) for i in range(len(spec.pt_grid_db))]
        for done, (point, partial) in enumerate(self._execute(tasks), 1):
            accumulators[point] = merge(accumulators[point], partial)
            self.logger.debug(f"Chunk {done}/{len(tasks)} done (point {point})")

        summaries = []
        for pt_db, acc in zip(spec.pt_grid_db, accumulators):
            summary = summarize(acc)
            summaries.append(summary)
            self.logger.info(
                f"Pt = {pt_db:g} dB: BLER {summary.bler:.4g}, BER {summary.ber:.4g}, "
                f"OP {summary.op:.4g}, throughput {summary.throughput:.4g} bpcu"
            )

        return SweepResult(spec, tuple(summaries), tuple(accumulators))


def run_sweep(spec: SweepSpec, worker_count: int = 1) -> SweepResult:
    """Run ``spec`` with ``worker_count`` processes; the result does not depend on the count."""
    return SweepRunner(worker_count).run(spec)


def estimate_diversity_order(result: SweepResult, window_db: Tuple[float, float]) -> float:
    """Least-squares slope of -log10(BLER) against Pt_dB/10 inside ``window_db``.

    Grid points without a single block error are left out with a warning.

    Raises:
        EstimationError: If fewer than two usable points fall inside the window
    """
    logger = logging.getLogger(__name__)
    low, high = window_db
    inside = [(pt, s.bler) for pt, s in zip(result.pt_grid_db, result.summaries) if low <= pt <= high]
    zero_cells = [pt for pt, bler in inside if bler <= 0]
    if zero_cells:
        logger.warning(f"Excluding zero-error grid points from diversity fit: {zero_cells} dB")

    usable = [(pt, bler) for pt, bler in inside if bler > 0]
    if len(usable) < 2:
        raise EstimationError(
            f"Need at least 2 grid points with nonzero BLER in [{low:g}, {high:g}] dB: "
            f"{len(inside)} point(s) in window, {len(zero_cells)} with zero errors"
        )

    x = np.array([pt for pt, _ in usable]) / 10
    y = -np.log10([bler for _, bler in usable])
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)
