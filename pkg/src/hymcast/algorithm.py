"""Alternating optimization of the analog precoder, digital precoders and
receive combiners, with randomized rank-one extraction at every stage."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from . import conic
from .precoding import (
    AnalogPrecoder,
    GroupAssignment,
    PhaseAlphabet,
    QosTargets,
    all_sinr,
    linear_to_dbm,
)
from .sdr import (
    RelaxationRecord,
    build_p1,
    build_p2,
    build_p3,
    digital_factors,
    draw_digital,
    randomize_combiner,
    recover_analog_batch,
    sample_unit_sphere,
)

log = logging.getLogger(__name__)

INITIAL_POWER = 1e5  # incumbent power sentinel before the first accepted candidate (mW)


def default_beta(num_groups: int, n_rf: int, n_tx: int, n_rx: int) -> float:
    """Slack penalty ``G^3 * N_RF * N_tx * N_rx``."""
    return float(num_groups**3 * n_rf * n_tx * n_rx)


@dataclass
class LoopConfig:
    n_iter: int
    n_rand: int
    beta: float
    tol: float = 1e-7
    max_solver_iter: int = 100

    def __post_init__(self):
        if self.n_iter < 1:
            raise ValueError("n_iter must be positive")
        if self.n_rand < 0:
            raise ValueError("n_rand must be nonnegative")
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if not self.tol > 0:
            raise ValueError("tol must be positive")


@dataclass
class Incumbent:
    """Best solution found so far, ranked by (satisfied count, -power)."""

    F: AnalogPrecoder | np.ndarray | None
    precoders: np.ndarray
    combiners: np.ndarray
    power: float = INITIAL_POWER
    count: int = 0
    accepted: int = 0
    mask: np.ndarray | None = None

    @property
    def F_matrix(self) -> np.ndarray | None:
        if self.F is None:
            return None
        return self.F.matrix if isinstance(self.F, AnalogPrecoder) else self.F


def accept(count: int, power: float, incumbent: Incumbent) -> bool:
    """Lexicographic acceptance: more satisfied users wins, ties go to lower-or-equal power."""
    return count > incumbent.count or (count == incumbent.count and power <= incumbent.power)


@dataclass
class RunMetrics:
    n_packets: int
    p_tx_mw: float
    per_user_sinr_db: np.ndarray
    satisfied_mask: np.ndarray
    wall_time: float = 0.0

    @property
    def p_tx_dbm(self) -> float:
        return linear_to_dbm(self.p_tx_mw)

    def mask_string(self) -> str:
        return "".join("1" if b else "0" for b in self.satisfied_mask)


@dataclass
class RunResult:
    incumbent: Incumbent
    metrics: RunMetrics
    trace: list[tuple[int, int, float]]
    accept_events: list[tuple[str, int, float]] = field(default_factory=list)
    relaxations: list[RelaxationRecord] = field(default_factory=list)

    def bound_violations(self, rtol: float = 1e-7) -> int:
        return sum(r.violations(rtol) for r in self.relaxations if r.status == conic.OPTIMAL)


def init_state(n_rf: int, num_groups: int, num_users: int, n_rx: int, rx_power: float) -> Incumbent:
    """Omnidirectional start: first receive antenna only, first RF chain only."""
    m = np.zeros((n_rf, num_groups), dtype=complex)
    m[0, :] = 1.0
    w = np.zeros((num_users, n_rx), dtype=complex)
    w[:, 0] = np.sqrt(rx_power)
    return Incumbent(F=None, precoders=m, combiners=w)


class _Scorer:
    """Scores batches of candidates against the QoS targets.

    The gains of a batch are ``|p_k^H b_j|^2`` with ``p_k = H_k^H w_k`` and
    ``b_j = F m_j``; either factor may carry a leading batch axis.
    """

    def __init__(self, channels, targets: QosTargets, groups: GroupAssignment, beta: float):
        self.h = channels.matrices
        self.noise = targets.noise_power
        self.user_group = groups.user_group
        self.gamma = targets.for_groups(groups.num_groups)
        self.threshold = np.asarray(self.gamma)[self.user_group]
        self.beta = beta
        self._users = np.arange(len(self.user_group))

    def projections(self, w):
        """Rows ``w_k^H H_k`` and the combiner norms ``||w_k||^2``."""
        return np.einsum("kr,krt->kt", w.conj(), self.h), np.sum(np.abs(w) ** 2, axis=1)

    def evaluate(self, gains, wnorm2, beams):
        """``(mask, power, deficits)`` for gains of shape (..., K, G)."""
        signal = gains[..., self._users, self.user_group]
        rest = gains.sum(axis=-1) - signal + self.noise * wnorm2
        if np.any(rest == 0):
            raise ValueError("SINR denominator is zero (zero combiner)")
        mask = signal / rest >= self.threshold
        power = np.sum(np.abs(beams) ** 2, axis=(-2, -1))
        return mask, power, self.threshold * rest - signal

    def penalized(self, power, deficits):
        return power + self.beta * np.sum(np.maximum(deficits, 0.0), axis=-1)


def _solve(problem, loop: LoopConfig, stage: str):
    sol = conic.solve(problem, tol=loop.tol, max_iter=loop.max_solver_iter)
    if sol.status != conic.OPTIMAL:
        log.warning("%s relaxation ended with status %s (pres=%.2e dres=%.2e gap=%.2e)",
                    stage, sol.status, sol.primal_residual, sol.dual_residual, sol.gap)
    return sol


def _alternate(channels, loop: LoopConfig, targets: QosTargets, groups: GroupAssignment, rng,
               analog: tuple[int, PhaseAlphabet] | None) -> RunResult:
    start = time.perf_counter()
    K, n_rx, n_tx = channels.num_users, channels.n_rx, channels.n_tx
    G = groups.num_groups
    if groups.num_users != K:
        raise ValueError("group assignment does not match the channel set")
    if analog is not None:
        n_rf, alphabet = analog
        if not G <= n_rf <= n_tx:
            raise ValueError(f"need G <= N_RF <= N_tx, got G={G}, N_RF={n_rf}, N_tx={n_tx}")
    else:
        n_rf = n_tx

    inc = init_state(n_rf, G, K, n_rx, targets.rx_power)
    if analog is None:
        inc.F = np.eye(n_tx, dtype=complex)
    scorer = _Scorer(channels, targets, groups, loop.beta)
    trace, events, records = [], [], []

    def offer(stage, masks, powers, make):
        """Apply the accept rule to a batch in candidate order; ``make(b)`` gives the state updates."""
        counts = masks.sum(axis=1)
        for b in range(len(counts)):
            count, power = int(counts[b]), float(powers[b])
            if accept(count, power, inc):
                for name, value in make(b).items():
                    setattr(inc, name, value)
                inc.count, inc.power, inc.mask = count, power, masks[b].copy()
                inc.accepted += 1
                events.append((stage, count, power))

    for t in range(1, loop.n_iter + 1):
        # analog precoder
        if analog is not None and loop.n_rand > 0:
            sol = _solve(build_p1(channels, inc.precoders, inc.combiners, targets, groups, loop.beta,
                                  alphabet.delta), loop, "analog")
            rec = RelaxationRecord.from_solution("analog", sol)
            records.append(rec)
            U = sample_unit_sphere(n_rf * n_tx, rng, loop.n_rand)
            idx = recover_analog_batch(sol.blocks["D"], alphabet, U, n_tx, n_rf)
            beams = alphabet.realize(idx) @ inc.precoders
            proj, wnorm2 = scorer.projections(inc.combiners)
            masks, powers, deficits = scorer.evaluate(np.abs(proj @ beams) ** 2, wnorm2, beams)
            rec.candidate_values.extend(scorer.penalized(powers, deficits).tolist())
            offer("analog", masks, powers, lambda b: {"F": AnalogPrecoder(idx[b], alphabet)})
        if inc.F is None:
            raise RuntimeError("no analog precoder available; the analog stage needs n_rand >= 1")
        F = inc.F_matrix

        # digital precoders
        if loop.n_rand > 0:
            sol = _solve(build_p2(channels, F, inc.combiners, targets, groups, loop.beta), loop, "digital")
            rec = RelaxationRecord.from_solution("digital", sol)
            records.append(rec)
            factors = digital_factors([sol.blocks[f"M{i}"] for i in range(G)])
            ms = draw_digital(factors, rng, loop.n_rand)
            beams = F @ ms
            proj, wnorm2 = scorer.projections(inc.combiners)
            masks, powers, deficits = scorer.evaluate(np.abs(proj @ beams) ** 2, wnorm2, beams)
            rec.candidate_values.extend(scorer.penalized(powers, deficits).tolist())
            offer("digital", masks, powers, lambda b: {"precoders": ms[b]})

        # combiners, one small relaxation per user
        per_user = loop.n_rand // K
        if per_user > 0:
            problems = build_p3(channels, F, inc.precoders, targets, groups)
            for k, prob in enumerate(problems):
                sol = _solve(prob, loop, "combiner")
                rec = RelaxationRecord.from_solution(f"combiner[{k}]", sol)
                records.append(rec)
                ws = randomize_combiner(sol.blocks["W"], rng, targets.rx_power, size=per_user)
                base = inc.combiners
                beams = F @ inc.precoders
                proj, wnorm2 = scorer.projections(base)
                gains = np.repeat((np.abs(proj @ beams) ** 2)[None], per_user, axis=0)
                gains[:, k, :] = np.abs(ws.conj() @ (channels[k] @ beams)) ** 2
                wn = np.repeat(wnorm2[None], per_user, axis=0)
                wn[:, k] = np.sum(np.abs(ws) ** 2, axis=1)
                masks, powers, deficits = scorer.evaluate(gains, wn, np.broadcast_to(beams, (per_user,) + beams.shape))
                rec.candidate_values.extend(np.maximum(deficits[:, k], 0.0).tolist())

                def make(b, k=k, base=base, ws=ws):
                    w = base.copy()
                    w[k] = ws[b]
                    return {"combiners": w}

                offer("combiner", masks, powers, make)

        trace.append((t, inc.count, inc.power))

    F = inc.F_matrix
    sinr = all_sinr(channels, F, inc.precoders, inc.combiners, scorer.user_group, scorer.noise)
    mask = inc.mask if inc.accepted else np.zeros(K, dtype=bool)
    with np.errstate(divide="ignore"):
        sinr_db = 10.0 * np.log10(sinr)
    metrics = RunMetrics(
        n_packets=inc.count,
        p_tx_mw=inc.power,
        per_user_sinr_db=sinr_db,
        satisfied_mask=mask,
        wall_time=time.perf_counter() - start,
    )
    return RunResult(inc, metrics, trace, events, records)


def run_hybrid(channels, loop: LoopConfig, targets: QosTargets, groups: GroupAssignment,
               rng: np.random.Generator, n_rf: int, alphabet: PhaseAlphabet) -> RunResult:
    """Hybrid design loop; each iteration revisits the analog stage before the digital one."""
    if loop.n_rand < 1:
        raise ValueError("hybrid mode needs n_rand >= 1 to produce an analog precoder")
    return _alternate(channels, loop, targets, groups, rng, (n_rf, alphabet))


def run_digital(channels, loop: LoopConfig, targets: QosTargets, groups: GroupAssignment,
                rng: np.random.Generator) -> RunResult:
    """Fully-digital baseline: ``F = I`` and only the last two stages alternate."""
    return _alternate(channels, loop, targets, groups, rng, None)
