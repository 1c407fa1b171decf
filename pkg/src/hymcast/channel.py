"""Geometric mmWave channel generation and channel-correlation statistics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform linear array with ``num_elements`` antennas.

    ``element_spacing`` is expressed as a fraction of the wavelength.
    """

    num_elements: int
    element_spacing: float = 0.5

    def __post_init__(self):
        if int(self.num_elements) != self.num_elements or self.num_elements < 1:
            raise ValueError(f"num_elements must be a positive integer, got {self.num_elements}")
        if not self.element_spacing > 0:
            raise ValueError(f"element_spacing must be positive, got {self.element_spacing}")


@dataclass(frozen=True)
class AngleProfile:
    """Cluster angles (degrees) for the geometric model.

    ``group_mean_aod`` holds one departure angle per multicast group and
    ``user_mean_aoa`` one arrival angle per user. Path angles are drawn
    uniformly in ``mean +/- spread``.
    """

    group_mean_aod: tuple[float, ...]
    user_mean_aoa: tuple[float, ...]
    spread_aod: float
    spread_aoa: float
    num_paths: int = 8

    def __post_init__(self):
        object.__setattr__(self, "group_mean_aod", tuple(float(a) for a in self.group_mean_aod))
        object.__setattr__(self, "user_mean_aoa", tuple(float(a) for a in self.user_mean_aoa))
        if self.spread_aod < 0 or self.spread_aoa < 0:
            raise ValueError("angular spreads must be nonnegative")
        if self.num_paths < 1:
            raise ValueError(f"num_paths must be >= 1, got {self.num_paths}")

    @property
    def num_groups(self) -> int:
        return len(self.group_mean_aod)

    @property
    def num_users(self) -> int:
        return len(self.user_mean_aoa)


def wrap_degrees(angle):
    """Map angles to [-180, 180)."""
    return (np.asarray(angle, dtype=float) + 180.0) % 360.0 - 180.0


def array_response(geometry: ArrayGeometry, angle) -> np.ndarray:
    """Unit-norm steering vector(s) of a ULA.

    Parameters
    ----------
    geometry : ArrayGeometry
    angle : float or array_like
        Angle(s) in degrees measured from broadside.

    Returns
    -------
    ndarray
        Shape ``(num_elements,)`` for a scalar angle, otherwise
        ``(num_elements, len(angle))`` with one steering vector per column.
    """
    theta = np.deg2rad(wrap_degrees(angle))
    n = np.arange(geometry.num_elements)
    phase = 2.0 * np.pi * geometry.element_spacing * np.multiply.outer(n, np.sin(theta))
    return np.exp(1j * phase) / np.sqrt(geometry.num_elements)


class ChannelSet:
    """Per-user channel matrices ``H_k`` of shape ``(n_rx, n_tx)``."""

    def __init__(self, matrices):
        arr = np.array(matrices, dtype=complex)
        if arr.ndim == 2:
            arr = arr[np.newaxis]
        if arr.ndim != 3 or arr.shape[0] == 0:
            raise ValueError("expected a non-empty stack of 2-D channel matrices")
        if not np.all(np.isfinite(arr)):
            raise ValueError("channel matrices contain non-finite entries")
        arr.setflags(write=False)
        self._h = arr

    @property
    def matrices(self) -> np.ndarray:
        """Read-only array of shape ``(K, n_rx, n_tx)``."""
        return self._h

    @property
    def num_users(self) -> int:
        return self._h.shape[0]

    @property
    def n_rx(self) -> int:
        return self._h.shape[1]

    @property
    def n_tx(self) -> int:
        return self._h.shape[2]

    def __len__(self):
        return self.num_users

    def __getitem__(self, k) -> np.ndarray:
        return self._h[k]

    def __iter__(self):
        return iter(self._h)


def sample_channel(
    geometry_tx: ArrayGeometry,
    geometry_rx: ArrayGeometry,
    profile: AngleProfile,
    user_groups: Sequence[int],
    rng: np.random.Generator,
) -> ChannelSet:
    """Draw one realization of the clustered geometric channel.

    ``user_groups[k]`` is the group index of user ``k``; user ``k`` takes its
    departure cluster from that group and its arrival cluster from
    ``profile.user_mean_aoa[k]``. Each channel is

        H_k = sqrt(N_tx N_rx / M_p) * sum_l alpha_l a_rx(aoa_l) a_tx(aod_l)^H

    with standard complex Gaussian ``alpha_l``, so ``E||H_k||_F^2 = N_tx N_rx``.
    """
    user_groups = np.asarray(user_groups, dtype=int)
    if user_groups.shape != (profile.num_users,):
        raise ValueError(
            f"group assignment covers {user_groups.size} users but the angle profile has "
            f"{profile.num_users}"
        )
    if user_groups.size and (user_groups.min() < 0 or user_groups.max() >= profile.num_groups):
        raise ValueError("group index out of range for the angle profile")

    n_tx, n_rx, n_paths = geometry_tx.num_elements, geometry_rx.num_elements, profile.num_paths
    k_users = profile.num_users
    aod_mean = np.asarray(profile.group_mean_aod)[user_groups]
    aoa_mean = np.asarray(profile.user_mean_aoa)

    aod = aod_mean[:, None] + rng.uniform(-profile.spread_aod, profile.spread_aod, (k_users, n_paths))
    aoa = aoa_mean[:, None] + rng.uniform(-profile.spread_aoa, profile.spread_aoa, (k_users, n_paths))
    gains = (rng.standard_normal((k_users, n_paths)) + 1j * rng.standard_normal((k_users, n_paths))) / np.sqrt(2)

    scale = np.sqrt(n_tx * n_rx / n_paths)
    h = np.empty((k_users, n_rx, n_tx), dtype=complex)
    for k in range(k_users):
        a_tx = array_response(geometry_tx, aod[k])  # (n_tx, paths)
        a_rx = array_response(geometry_rx, aoa[k])  # (n_rx, paths)
        h[k] = scale * (a_rx * gains[k]) @ a_tx.conj().T
    return ChannelSet(h)


def channel_correlation(h_a, h_b) -> float:
    """Normalized Frobenius inner product ``|<H_a, H_b>| / (||H_a|| ||H_b||)``."""
    h_a = np.asarray(h_a)
    h_b = np.asarray(h_b)
    if h_a.shape != h_b.shape:
        raise ValueError(f"shape mismatch: {h_a.shape} vs {h_b.shape}")
    na = np.linalg.norm(h_a)
    nb = np.linalg.norm(h_b)
    if na == 0 or nb == 0:
        raise ValueError("correlation is undefined for a zero channel")
    value = abs(np.vdot(h_a, h_b)) / (na * nb)
    return float(min(value, 1.0))


@dataclass
class CorrelationHistogram:
    edges: np.ndarray
    intra: np.ndarray
    inter: np.ndarray
    intra_samples: np.ndarray
    inter_samples: np.ndarray

    @property
    def intra_mean(self) -> float:
        return float(np.mean(self.intra_samples)) if self.intra_samples.size else float("nan")

    @property
    def inter_mean(self) -> float:
        return float(np.mean(self.inter_samples)) if self.inter_samples.size else float("nan")

    def rows(self):
        for lo, hi, p_in, p_out in zip(self.edges[:-1], self.edges[1:], self.intra, self.inter):
            yield lo, hi, p_in, p_out


def correlation_pairs(channels: ChannelSet, user_groups: Sequence[int]):
    """Return (intra, inter) arrays of pairwise correlations over all user pairs."""
    user_groups = np.asarray(user_groups)
    if len(channels) < 2:
        raise ValueError("need at least two users")
    if user_groups.shape != (len(channels),):
        raise ValueError("group assignment length does not match the number of users")
    flat = channels.matrices.reshape(len(channels), -1)
    norms = np.linalg.norm(flat, axis=1)
    if np.any(norms == 0):
        raise ValueError("correlation is undefined for a zero channel")
    unit = flat / norms[:, None]
    corr = np.minimum(np.abs(unit.conj() @ unit.T), 1.0)
    iu, ju = np.triu_indices(len(channels), k=1)
    same = user_groups[iu] == user_groups[ju]
    values = corr[iu, ju]
    return values[same], values[~same]


def correlation_histogram(channel_sets, user_groups, bins: int = 20) -> CorrelationHistogram:
    """Intra- and inter-cluster correlation distributions.

    ``channel_sets`` may be a single :class:`ChannelSet` or an iterable of them
    (several realizations sharing ``user_groups``). Counts are normalized to
    probabilities; an empty distribution is all zeros.
    """
    if isinstance(channel_sets, ChannelSet):
        channel_sets = [channel_sets]
    intra, inter = [], []
    for channels in channel_sets:
        a, b = correlation_pairs(channels, user_groups)
        intra.append(a)
        inter.append(b)
    intra = np.concatenate(intra) if intra else np.empty(0)
    inter = np.concatenate(inter) if inter else np.empty(0)
    edges = np.linspace(0.0, 1.0, bins + 1)

    def normalized(samples):
        counts, _ = np.histogram(samples, bins=edges)
        total = counts.sum()
        return counts / total if total else counts.astype(float)

    return CorrelationHistogram(edges, normalized(intra), normalized(inter), intra, inter)
