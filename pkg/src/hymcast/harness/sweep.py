"""Monte-Carlo sweeps with per-realization seeding and aggregation."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..algorithm import LoopConfig, run_digital, run_hybrid
from ..channel import ArrayGeometry, correlation_histogram, sample_channel
from ..precoding import linear_to_dbm, rx_beam_pattern, tx_beam_pattern
from .config import ScenarioConfig

log = logging.getLogger(__name__)

# sub-stream labels under a realization seed
_CHANNEL, _HYBRID, _DIGITAL = 0, 1, 2


def realization_seed(master_seed: int, point: int, realization: int) -> int:
    """64-bit seed of one (sweep point, realization) pair, independent of execution order."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(point, realization))
    lo, hi = ss.generate_state(2, dtype=np.uint32)
    return int(lo) | (int(hi) << 32)


def substream(seed: int, label: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(label,)))


@dataclass
class RunRow:
    sweep_point: int
    realization: int
    seed: int
    mode: str
    n_packets: int | None
    p_tx_mw: float | None
    mask: str
    wall_time_s: float
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None

    @property
    def p_tx_dbm(self) -> float | None:
        return None if self.p_tx_mw is None else linear_to_dbm(self.p_tx_mw)


@dataclass
class AggregateRow:
    sweep_point: int
    mode: str
    mean_n_packets: float
    mean_p_tx_dbm: float
    n_realizations: int


@dataclass
class SweepTable:
    points: list[dict]
    runs: list[RunRow] = field(default_factory=list)
    aggregates: list[AggregateRow] = field(default_factory=list)

    @property
    def failures(self) -> list[RunRow]:
        return [r for r in self.runs if not r.ok]

    def mean_packets(self, point: int, mode: str) -> float:
        for row in self.aggregates:
            if row.sweep_point == point and row.mode == mode:
                return row.mean_n_packets
        raise KeyError((point, mode))


def mean_power_dbm(powers_mw) -> float:
    """Average in linear units, then convert; ``nan`` when nothing is averaged."""
    powers = np.asarray(list(powers_mw), dtype=float)
    if powers.size == 0:
        return float("nan")
    return linear_to_dbm(float(np.mean(powers)))


def aggregate(runs: list[RunRow], num_points: int, modes) -> list[AggregateRow]:
    rows = []
    for point in range(num_points):
        for mode in modes:
            good = [r for r in runs if r.sweep_point == point and r.mode == mode and r.ok]
            mean_packets = float(np.mean([r.n_packets for r in good])) if good else float("nan")
            rows.append(AggregateRow(point, mode, mean_packets, mean_power_dbm(r.p_tx_mw for r in good), len(good)))
    return rows


def sample_realization(cfg: ScenarioConfig, seed: int):
    rng = substream(seed, _CHANNEL)
    profile = cfg.angle_profile(rng)
    return sample_channel(ArrayGeometry(cfg.n_tx), ArrayGeometry(cfg.n_rx), profile, cfg.groups().user_group, rng)


def run_once(cfg: ScenarioConfig, mode: str, seed: int, channels=None):
    """One algorithm run on the channel realization derived from ``seed``."""
    if channels is None:
        channels = sample_realization(cfg, seed)
    loop = LoopConfig(cfg.n_iter, cfg.effective_n_rand, cfg.effective_beta(mode), tol=cfg.solver_tol)
    if mode == "hybrid":
        return run_hybrid(channels, loop, cfg.targets(), cfg.groups(), substream(seed, _HYBRID),
                          cfg.n_rf, cfg.alphabet())
    return run_digital(channels, loop, cfg.targets(), cfg.groups(), substream(seed, _DIGITAL))


def _realization_task(args) -> list[RunRow]:
    cfg, point, realization, record_time = args
    seed = realization_seed(cfg.master_seed, point, realization)
    rows = []
    try:
        channels = sample_realization(cfg, seed)
    except Exception as exc:  # recorded per realization so the sweep continues
        log.warning("point %d realization %d: channel sampling failed: %s", point, realization, exc)
        return [RunRow(point, realization, seed, m, None, None, "", 0.0, str(exc)) for m in cfg.modes]
    for mode in cfg.modes:
        start = time.perf_counter()
        try:
            result = run_once(cfg, mode, seed, channels)
        except Exception as exc:
            log.warning("point %d realization %d (%s) failed: %s", point, realization, mode, exc)
            rows.append(RunRow(point, realization, seed, mode, None, None, "", 0.0, str(exc)))
            continue
        elapsed = time.perf_counter() - start if record_time else 0.0
        m = result.metrics
        rows.append(RunRow(point, realization, seed, mode, m.n_packets, m.p_tx_mw, m.mask_string(), elapsed))
    return rows


def run_sweep(cfg: ScenarioConfig, workers: int = 1, record_time: bool = False, progress=None) -> SweepTable:
    """Run every (sweep point, realization) pair and aggregate per point and mode.

    Output order is (point, realization, mode) regardless of ``workers``.
    Wall times are written as zero unless ``record_time`` is set, which keeps
    output files a pure function of the configuration.
    """
    points = cfg.sweep_points()
    tasks = [(cfg.with_point(p), i, r, record_time)
             for i, p in enumerate(points) for r in range(cfg.n_realizations)]
    table = SweepTable(points)
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = pool.map(_realization_task, tasks)
            for rows in results:
                table.runs.extend(rows)
                if progress:
                    progress(len(table.runs))
    else:
        for task in tasks:
            table.runs.extend(_realization_task(task))
            if progress:
                progress(len(table.runs))
    table.aggregates = aggregate(table.runs, len(points), cfg.modes)
    return table


def correlation_study(cfg: ScenarioConfig, bins: int = 20, realizations: int | None = None):
    """Intra- and inter-cluster correlation histogram over independent realizations."""
    count = cfg.n_realizations if realizations is None else realizations
    sets = [sample_realization(cfg, realization_seed(cfg.master_seed, 0, r)) for r in range(count)]
    return correlation_histogram(sets, cfg.groups().user_group, bins=bins)


@dataclass
class BeamPatterns:
    angles: np.ndarray
    tx: list[np.ndarray]  # one (n, 2) array per group
    rx: list[np.ndarray]  # one (n, 2) array per user
    result: object


def beam_pattern_study(cfg: ScenarioConfig, mode: str | None = None, grid=None) -> BeamPatterns:
    """Transmit beam per group and receive beam per user for the first realization."""
    mode = mode or cfg.modes[0]
    grid = np.linspace(-90.0, 90.0, 361) if grid is None else np.asarray(grid, dtype=float)
    seed = realization_seed(cfg.master_seed, 0, 0)
    result = run_once(cfg, mode, seed)
    inc = result.incumbent
    F = inc.F_matrix
    tx = [tx_beam_pattern(F, inc.precoders[:, i], ArrayGeometry(cfg.n_tx), grid)
          for i in range(cfg.num_groups)]
    rx = [rx_beam_pattern(inc.combiners[k], ArrayGeometry(cfg.n_rx), grid) for k in range(cfg.num_users)]
    return BeamPatterns(grid, tx, rx, result)
