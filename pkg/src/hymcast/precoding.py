"""Signal-domain types and the SINR / power / QoS metrics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import ArrayGeometry, array_response


def dbm_to_linear(x_dbm):
    """dBm -> mW."""
    out = 10.0 ** (np.asarray(x_dbm, dtype=float) / 10.0)
    return float(out) if out.ndim == 0 else out


def linear_to_dbm(x_mw):
    """mW -> dBm. Raises ``ValueError`` on nonpositive input."""
    arr = np.asarray(x_mw, dtype=float)
    if np.any(~(arr > 0)):
        raise ValueError(f"linear power must be positive, got {x_mw!r}")
    out = 10.0 * np.log10(arr)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class PhaseAlphabet:
    """``L`` equally spaced phases on a circle of radius ``modulus``."""

    num_levels: int
    modulus: float = 1.0

    def __post_init__(self):
        if self.num_levels < 1:
            raise ValueError("num_levels must be >= 1")
        if not self.modulus > 0:
            raise ValueError("modulus must be positive")

    @property
    def delta(self) -> float:
        """Per-entry power ``modulus**2``."""
        return self.modulus**2

    @property
    def phases(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.num_levels) / self.num_levels

    @property
    def elements(self) -> np.ndarray:
        return self.modulus * np.exp(1j * self.phases)

    def realize(self, indices) -> np.ndarray:
        indices = np.asarray(indices, dtype=int)
        if np.any((indices < 0) | (indices >= self.num_levels)):
            raise ValueError("alphabet index out of range")
        return self.modulus * np.exp(2j * np.pi * indices / self.num_levels)

    def nearest_index(self, target_phase, tie_tol: float = 1e-9) -> np.ndarray:
        """Index of the alphabet phase closest to ``target_phase`` (radians).

        Exact midpoints (to ``tie_tol`` in units of the phase step) go to the
        lower index, with index 0 counting as lower than ``L - 1`` across the
        wrap.
        """
        L = self.num_levels
        r = np.mod(np.asarray(target_phase, dtype=float) * L / (2.0 * np.pi), L)
        lo = np.floor(r)
        frac = r - lo
        lo = lo.astype(int) % L
        hi = (lo + 1) % L
        choose_hi = frac > 0.5 + tie_tol
        tie = np.abs(frac - 0.5) <= tie_tol
        pick = np.where(choose_hi, hi, lo)
        # on a tie between L-1 and 0, index 0 is the lower one
        pick = np.where(tie, np.minimum(lo, hi), pick)
        return pick

    def quantize(self, values) -> np.ndarray:
        """Snap complex values onto the alphabet by nearest phase."""
        return self.realize(self.nearest_index(np.angle(values)))


@dataclass
class AnalogPrecoder:
    """Fully-connected phase-shifter network ``F`` (n_tx x n_rf)."""

    index_matrix: np.ndarray
    alphabet: PhaseAlphabet

    def __post_init__(self):
        self.index_matrix = np.asarray(self.index_matrix, dtype=int)
        if self.index_matrix.ndim != 2:
            raise ValueError("index_matrix must be 2-D")
        self.matrix = self.alphabet.realize(self.index_matrix)

    @property
    def n_tx(self) -> int:
        return self.index_matrix.shape[0]

    @property
    def n_rf(self) -> int:
        return self.index_matrix.shape[1]

    @classmethod
    def from_vector_indices(cls, indices, n_tx: int, n_rf: int, alphabet: PhaseAlphabet):
        """Build from indices of ``f = vec(F)`` (column-major stacking)."""
        idx = np.asarray(indices, dtype=int).reshape((n_tx, n_rf), order="F")
        return cls(idx, alphabet)


@dataclass(frozen=True)
class GroupAssignment:
    """Partition of users ``0..K-1`` into multicast groups."""

    groups: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        groups = tuple(tuple(int(u) for u in g) for g in self.groups)
        object.__setattr__(self, "groups", groups)
        members = [u for g in groups for u in g]
        if len(set(members)) != len(members):
            raise ValueError("multicast groups must be pairwise disjoint")
        if sorted(members) != list(range(len(members))):
            raise ValueError("multicast groups must partition users 0..K-1")

    @classmethod
    def contiguous(cls, num_users: int, num_groups: int) -> "GroupAssignment":
        """Split users as evenly as possible into consecutive blocks."""
        if num_groups < 1 or num_users < num_groups:
            raise ValueError("need 1 <= G <= K")
        blocks = np.array_split(np.arange(num_users), num_groups)
        return cls(tuple(tuple(b.tolist()) for b in blocks))

    @property
    def num_groups(self) -> int:
        return len(self.groups)

    @property
    def num_users(self) -> int:
        return sum(len(g) for g in self.groups)

    @property
    def user_group(self) -> np.ndarray:
        """Group index of each user."""
        out = np.empty(self.num_users, dtype=int)
        for i, g in enumerate(self.groups):
            out[list(g)] = i
        return out


@dataclass(frozen=True)
class QosTargets:
    """Per-group SINR targets (linear), noise power and receive budget (mW)."""

    gamma: tuple[float, ...]
    noise_power: float
    rx_power: float
    gamma_db: tuple[float, ...] = field(init=False)

    def __post_init__(self):
        gamma = tuple(float(g) for g in np.atleast_1d(self.gamma))
        object.__setattr__(self, "gamma", gamma)
        if any(not g > 0 for g in gamma):
            raise ValueError("SINR targets must be positive")
        if not self.noise_power > 0:
            raise ValueError("noise power must be positive")
        if not self.rx_power > 0:
            raise ValueError("receive power budget must be positive")
        object.__setattr__(self, "gamma_db", tuple(10.0 * np.log10(g) for g in gamma))

    @classmethod
    def from_db(cls, gamma_db, noise_dbm: float, rx_power_dbm: float, num_groups: int | None = None):
        gamma_db = np.atleast_1d(np.asarray(gamma_db, dtype=float))
        if num_groups is not None and gamma_db.size == 1:
            gamma_db = np.repeat(gamma_db, num_groups)
        return cls(tuple(10.0 ** (gamma_db / 10.0)), dbm_to_linear(noise_dbm), dbm_to_linear(rx_power_dbm))

    def for_groups(self, num_groups: int) -> np.ndarray:
        g = np.asarray(self.gamma)
        if g.size == 1:
            return np.repeat(g, num_groups)
        if g.size != num_groups:
            raise ValueError(f"{g.size} SINR targets for {num_groups} groups")
        return g


def check_combiners(combiners, rx_power: float, rtol: float = 1e-9) -> np.ndarray:
    """Validate ``||w_k||^2 = rx_power`` for every combiner; return a (K, n_rx) array."""
    w = np.atleast_2d(np.asarray(combiners, dtype=complex))
    norms = np.sum(np.abs(w) ** 2, axis=1)
    bad = np.flatnonzero(np.abs(norms - rx_power) > rtol * rx_power)
    if bad.size:
        raise ValueError(
            f"combiner(s) {bad.tolist()} violate the receive power budget "
            f"(||w||^2 = {norms[bad].tolist()}, expected {rx_power})"
        )
    return w


def _as_matrix(F):
    return F.matrix if isinstance(F, AnalogPrecoder) else np.asarray(F, dtype=complex)


def _precoder_columns(precoders) -> np.ndarray:
    m = np.asarray(precoders, dtype=complex)
    if m.ndim == 1:
        m = m[:, None]
    return m


def effective_gains(channels, F, precoders, combiners) -> np.ndarray:
    """``|w_k^H H_k F m_j|^2`` for all users ``k`` and groups ``j``; shape (K, G).

    ``precoders`` has one digital precoder per column (n_rf x G).
    """
    h = channels.matrices if hasattr(channels, "matrices") else np.asarray(channels)
    beams = _as_matrix(F) @ _precoder_columns(precoders)  # (n_tx, G)
    w = np.atleast_2d(np.asarray(combiners, dtype=complex))
    proj = np.einsum("kr,krt->kt", w.conj(), h)  # w_k^H H_k
    return np.abs(proj @ beams) ** 2


def sinr(h_k, F, precoders, w_k, group_index: int, noise_power: float) -> float:
    """SINR of one user served by group ``group_index``."""
    w_k = np.asarray(w_k, dtype=complex).reshape(-1)
    beams = _as_matrix(F) @ _precoder_columns(precoders)
    gains = np.abs(w_k.conj() @ np.atleast_2d(h_k) @ beams) ** 2
    noise = noise_power * np.real(np.vdot(w_k, w_k))
    denom = gains.sum() - gains[group_index] + noise
    if denom == 0:
        raise ValueError("SINR denominator is zero (zero combiner)")
    return float(gains[group_index] / denom)


def all_sinr(channels, F, precoders, combiners, user_group, noise_power: float) -> np.ndarray:
    """Vectorized SINR for every user."""
    gains = effective_gains(channels, F, precoders, combiners)
    w = np.atleast_2d(np.asarray(combiners, dtype=complex))
    k = np.arange(gains.shape[0])
    signal = gains[k, user_group]
    noise = noise_power * np.sum(np.abs(w) ** 2, axis=1)
    denom = gains.sum(axis=1) - signal + noise
    if np.any(denom == 0):
        raise ValueError("SINR denominator is zero (zero combiner)")
    return signal / denom


def qos_deficits(channels, F, precoders, combiners, user_group, gamma, noise_power: float) -> np.ndarray:
    """``gamma_i (interference + noise) - signal`` per user; <= 0 means the QoS holds."""
    gains = effective_gains(channels, F, precoders, combiners)
    w = np.atleast_2d(np.asarray(combiners, dtype=complex))
    k = np.arange(gains.shape[0])
    signal = gains[k, user_group]
    noise = noise_power * np.sum(np.abs(w) ** 2, axis=1)
    g = np.asarray(gamma)[user_group]
    return g * (gains.sum(axis=1) - signal + noise) - signal


def total_tx_power(F, precoders) -> float:
    """``sum_i ||F m_i||^2`` in mW."""
    beams = _as_matrix(F) @ _precoder_columns(precoders)
    return float(np.sum(np.abs(beams) ** 2))


def count_satisfied(
    channels,
    F,
    precoders,
    combiners,
    targets: QosTargets,
    groups: GroupAssignment,
):
    """Number of users meeting ``SINR_k >= gamma_i`` and the per-user mask."""
    check_combiners(combiners, targets.rx_power)
    gamma = targets.for_groups(groups.num_groups)
    user_group = groups.user_group
    s = all_sinr(channels, F, precoders, combiners, user_group, targets.noise_power)
    mask = s >= gamma[user_group]
    return int(mask.sum()), mask


def penalized_objective(channels, F, precoders, combiners, user_group, gamma, noise_power, beta) -> float:
    """``sum_i ||F m_i||^2 + beta * sum_k max(0, deficit_k)``."""
    deficits = qos_deficits(channels, F, precoders, combiners, user_group, gamma, noise_power)
    return total_tx_power(F, precoders) + beta * float(np.sum(np.maximum(deficits, 0.0)))


def tx_beam_pattern(F, m_i, geometry_tx: ArrayGeometry, angle_grid) -> np.ndarray:
    """Rows of ``(angle_deg, |a_tx(angle)^H F m_i|)``."""
    grid = np.atleast_1d(np.asarray(angle_grid, dtype=float))
    if grid.size == 0:
        raise ValueError("angle grid is empty")
    beam = _as_matrix(F) @ np.asarray(m_i, dtype=complex).reshape(-1)
    a = array_response(geometry_tx, grid)
    return np.column_stack([grid, np.abs(a.conj().T @ beam)])


def rx_beam_pattern(w_k, geometry_rx: ArrayGeometry, angle_grid) -> np.ndarray:
    """Rows of ``(angle_deg, |w_k^H a_rx(angle)|)``."""
    grid = np.atleast_1d(np.asarray(angle_grid, dtype=float))
    if grid.size == 0:
        raise ValueError("angle grid is empty")
    a = array_response(geometry_rx, grid)
    return np.column_stack([grid, np.abs(np.asarray(w_k, dtype=complex).reshape(-1).conj() @ a)])
