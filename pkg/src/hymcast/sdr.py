"""Semidefinite relaxations of the three alternating sub-problems and the
rank-one recovery / randomization steps that turn their solutions into
candidate precoders and combiners.

Block and scalar names used in the built problems:

* analog stage: block ``"D"`` (lift of ``f = vec(F)``), scalars ``"x0".."x{K-1}"``
* digital stage: blocks ``"M0".."M{G-1}"``, scalars ``"x*"``
* combiner stage (one problem per user ``k``): block ``"W"``, scalar ``"x"``
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conic import SdpProblem, SdpSolution, psd_factor, psd_sqrt_rows
from .precoding import AnalogPrecoder, GroupAssignment, PhaseAlphabet, QosTargets


def slack_names(num_users: int) -> list[str]:
    return [f"x{k}" for k in range(num_users)]


def _rx_projections(channels, combiners) -> np.ndarray:
    """Rows ``b_k = H_k^H w_k`` stacked as (K, n_tx)."""
    h = channels.matrices if hasattr(channels, "matrices") else np.asarray(channels)
    w = np.atleast_2d(np.asarray(combiners, dtype=complex))
    return np.einsum("krt,kr->kt", h.conj(), w)


def lift_matrices(precoders, n_tx: int):
    """``J_i = m_i^T kron I`` for every group; shape (G, n_tx, n_tx * n_rf)."""
    m = np.asarray(precoders, dtype=complex)
    eye = np.eye(n_tx)
    return np.stack([np.kron(m[:, i][None, :], eye) for i in range(m.shape[1])])


def _qos_matrix(quad_forms: np.ndarray, own: int, gamma_i: float) -> np.ndarray:
    """``gamma_i * sum_{j != own} Q_j - Q_own``."""
    total = quad_forms.sum(axis=0)
    return gamma_i * (total - quad_forms[own]) - quad_forms[own]


def build_p1(
    channels,
    precoders,
    combiners,
    targets: QosTargets,
    groups: GroupAssignment,
    beta: float,
    delta: float,
) -> SdpProblem:
    """Relaxation of the analog-precoder sub-problem for fixed ``m`` and ``w``.

    ``min sum_i Tr(D R_i) + beta sum_k x_k`` s.t. the per-user QoS rows,
    ``diag(D) = delta`` and ``D >= 0``.
    """
    m = np.asarray(precoders, dtype=complex)
    n_rf = m.shape[0]
    n_tx = channels.n_tx
    K = channels.num_users
    if m.shape[1] != groups.num_groups:
        raise ValueError(f"{m.shape[1]} digital precoders for {groups.num_groups} groups")
    if groups.num_users != K:
        raise ValueError("group assignment does not match the channel set")
    w = np.atleast_2d(np.asarray(combiners, dtype=complex))
    if w.shape != (K, channels.n_rx):
        raise ValueError(f"combiners have shape {w.shape}, expected {(K, channels.n_rx)}")
    gamma = targets.for_groups(groups.num_groups)
    user_group = groups.user_group
    dim = n_rf * n_tx

    # R_i = J_i^H J_i = (conj(m_i) m_i^T) kron I
    R = np.zeros((dim, dim), dtype=complex)
    eye = np.eye(n_tx)
    for i in range(m.shape[1]):
        R += np.kron(np.outer(m[:, i].conj(), m[:, i]), eye)

    b = _rx_projections(channels, w)  # H_k^H w_k
    prob = SdpProblem()
    prob.add_block("D", dim)
    names = [prob.add_scalar(n) for n in slack_names(K)]
    prob.set_objective({"D": R}, {n: beta for n in names})
    for k in range(K):
        # V_{j,k} = a a^H with a = conj(m_j) kron (H_k^H w_k)
        a = np.stack([np.kron(m[:, j].conj(), b[k]) for j in range(m.shape[1])])
        V = np.einsum("ja,jb->jab", a, a.conj())
        i = user_group[k]
        noise = targets.noise_power * gamma[i] * np.real(np.vdot(w[k], w[k]))
        prob.add_constraint({"D": _qos_matrix(V, i, gamma[i])}, "<=", -noise, {names[k]: -1.0})
    for n in range(dim):
        e = np.zeros((dim, dim))
        e[n, n] = 1.0
        prob.add_constraint({"D": e}, "=", delta)
    return prob


def _analog_indices(Q, alphabet: PhaseAlphabet, U) -> np.ndarray:
    """Alphabet index of every lift entry for each direction in the rows of ``U``."""
    z = U @ Q.conj()  # row b holds z_n = q_n^H u_b
    idx = alphabet.nearest_index(np.angle(z.conj()))
    return np.where(z == 0, 0, idx)


def recover_analog(
    D_hat,
    alphabet: PhaseAlphabet,
    u,
    n_tx: int,
    n_rf: int,
) -> AnalogPrecoder:
    """Project a relaxed lift ``D_hat`` onto the phase alphabet given direction ``u``.

    With ``D_hat = Q^T Q^*`` each entry picks the alphabet element maximizing
    ``Re(f_n z_n)`` where ``z_n = q_n^H u``, i.e. the phase nearest to
    ``arg(conj(z_n))``. Entries with ``z_n = 0`` take index 0.
    """
    u = np.asarray(u, dtype=complex).reshape(-1)
    if not np.isclose(np.linalg.norm(u), 1.0, atol=1e-9):
        raise ValueError("u must have unit norm")
    Q = psd_factor(D_hat)
    if Q.shape[1] != n_tx * n_rf:
        raise ValueError(f"lift has dimension {Q.shape[1]}, expected {n_tx * n_rf}")
    idx = _analog_indices(Q, alphabet, u[None, :])[0]
    return AnalogPrecoder.from_vector_indices(idx, n_tx, n_rf, alphabet)


def recover_analog_batch(D_hat, alphabet: PhaseAlphabet, U, n_tx: int, n_rf: int) -> np.ndarray:
    """:func:`recover_analog` for every row of ``U`` with one factorization.

    Returns index matrices of shape (B, n_tx, n_rf).
    """
    Q = psd_factor(D_hat)
    if Q.shape[1] != n_tx * n_rf:
        raise ValueError(f"lift has dimension {Q.shape[1]}, expected {n_tx * n_rf}")
    idx = _analog_indices(Q, alphabet, np.atleast_2d(np.asarray(U, dtype=complex)))
    return idx.reshape(-1, n_rf, n_tx).transpose(0, 2, 1)


def build_p2(
    channels,
    F,
    combiners,
    targets: QosTargets,
    groups: GroupAssignment,
    beta: float,
) -> SdpProblem:
    """Relaxation of the digital-precoder sub-problem for fixed ``F`` and ``w``."""
    F = F.matrix if isinstance(F, AnalogPrecoder) else np.asarray(F, dtype=complex)
    K = channels.num_users
    if F.shape[0] != channels.n_tx:
        raise ValueError(f"F has {F.shape[0]} rows but the channel has {channels.n_tx} transmit antennas")
    if groups.num_users != K:
        raise ValueError("group assignment does not match the channel set")
    w = np.atleast_2d(np.asarray(combiners, dtype=complex))
    if w.shape != (K, channels.n_rx):
        raise ValueError(f"combiners have shape {w.shape}, expected {(K, channels.n_rx)}")
    n_rf = F.shape[1]
    G = groups.num_groups
    gamma = targets.for_groups(G)
    user_group = groups.user_group

    Y = F.conj().T @ F
    a_all = _rx_projections(channels, w) @ F.conj()  # row k: F^H H_k^H w_k
    prob = SdpProblem()
    blocks = [prob.add_block(f"M{i}", n_rf) for i in range(G)]
    names = [prob.add_scalar(n) for n in slack_names(K)]
    prob.set_objective({bname: Y for bname in blocks}, {n: beta for n in names})
    for k in range(K):
        Xk = np.outer(a_all[k], a_all[k].conj())
        i = user_group[k]
        coeffs = {blocks[j]: (gamma[i] * Xk if j != i else -Xk) for j in range(G)}
        noise = targets.noise_power * gamma[i] * np.real(np.vdot(w[k], w[k]))
        prob.add_constraint(coeffs, "<=", -noise, {names[k]: -1.0})
    return prob


def solver_psd_part(X, rtol: float = 1e-8) -> np.ndarray:
    """Drop the negative eigenvalues a solver may leave on a PSD block.

    A block solved alongside much larger ones can be nearly zero, so its
    roundoff is judged against ``1 + lambda_max`` rather than its own norm.
    Anything more negative than that is returned unchanged for the factor to reject.
    """
    X = np.asarray(X, dtype=complex)
    X = 0.5 * (X + X.conj().T)
    lam, U = np.linalg.eigh(X)
    if lam.size == 0 or lam[0] >= 0 or lam[0] < -rtol * (1.0 + max(lam[-1], 0.0)):
        return X
    return (U * np.maximum(lam, 0.0)) @ U.conj().T


def digital_factors(M_blocks) -> list[np.ndarray]:
    """Square-root factors ``A_i`` with ``A_i^H A_i = M_i``, computed once per relaxation."""
    return [psd_sqrt_rows(solver_psd_part(M)) for M in M_blocks]


def draw_digital(factors, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Gaussian draws from precomputed factors.

    Returns (n_rf, G) for a single draw or (size, n_rf, G) when ``size`` is given.
    """
    n = 1 if size is None else int(size)
    cols = []
    for A in factors:
        g = (rng.standard_normal((n, A.shape[0])) + 1j * rng.standard_normal((n, A.shape[0]))) / np.sqrt(2)
        cols.append(g @ A.conj())  # row b is (A^H g_b)^T
    out = np.stack(cols, axis=2)
    return out[0] if size is None else out


def randomize_digital(M_blocks, rng: np.random.Generator) -> np.ndarray:
    """One Gaussian draw ``m_i ~ CN(0, M_i)`` per group; returns (n_rf, G)."""
    return draw_digital(digital_factors(M_blocks), rng)


def build_p3(
    channels,
    F,
    precoders,
    targets: QosTargets,
    groups: GroupAssignment,
) -> list[SdpProblem]:
    """One combiner relaxation per user for fixed ``F`` and ``m``."""
    F = F.matrix if isinstance(F, AnalogPrecoder) else np.asarray(F, dtype=complex)
    m = np.asarray(precoders, dtype=complex)
    if F.shape[0] != channels.n_tx or F.shape[1] != m.shape[0]:
        raise ValueError("F / precoder dimensions do not match the channel")
    if m.shape[1] != groups.num_groups or groups.num_users != channels.num_users:
        raise ValueError("precoders or groups do not match the channel set")
    gamma = targets.for_groups(groups.num_groups)
    user_group = groups.user_group
    n_rx = channels.n_rx
    beams = F @ m  # (n_tx, G)
    problems = []
    for k, h in enumerate(channels):
        r = h @ beams  # columns H_k F m_j
        Z = np.einsum("aj,bj->jab", r, r.conj())
        i = user_group[k]
        coeff = _qos_matrix(Z, i, gamma[i]) + targets.noise_power * gamma[i] * np.eye(n_rx)
        prob = SdpProblem()
        prob.add_block("W", n_rx)
        prob.add_scalar("x")
        prob.set_objective({}, {"x": 1.0})
        prob.add_constraint({"W": coeff}, "<=", 0.0, {"x": -1.0})
        prob.add_constraint({"W": np.eye(n_rx)}, "=", targets.rx_power)
        problems.append(prob)
    return problems


def sample_unit_sphere(dimension: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Uniform draw from the complex unit sphere in ``C^dimension``.

    With ``size`` the result holds that many independent draws as rows.
    """
    if dimension < 1:
        raise ValueError("dimension must be >= 1")
    n = 1 if size is None else int(size)
    v = rng.standard_normal((n, dimension)) + 1j * rng.standard_normal((n, dimension))
    nrm = np.linalg.norm(v, axis=1)
    while np.any(nrm == 0):  # probability zero, kept for completeness
        bad = nrm == 0
        v[bad] = rng.standard_normal((bad.sum(), dimension)) + 1j * rng.standard_normal((bad.sum(), dimension))
        nrm = np.linalg.norm(v, axis=1)
    v = v / nrm[:, None]
    return v[0] if size is None else v


def randomize_combiner(W, rng: np.random.Generator, rx_power: float, max_redraws: int = 16,
                       size: int | None = None) -> np.ndarray:
    """``w = W v`` for a uniform unit ``v``, rescaled to ``||w||^2 = rx_power``.

    Draws with ``W v = 0`` are repeated up to ``max_redraws`` times.
    """
    W = np.asarray(W, dtype=complex)
    n = 1 if size is None else int(size)
    w = sample_unit_sphere(W.shape[0], rng, n) @ W.T
    nrm = np.linalg.norm(w, axis=1)
    for _ in range(max_redraws - 1):
        bad = nrm == 0
        if not bad.any():
            break
        w[bad] = sample_unit_sphere(W.shape[0], rng, int(bad.sum())) @ W.T
        nrm = np.linalg.norm(w, axis=1)
    if np.any(nrm == 0):
        raise RuntimeError(f"W v vanished on {max_redraws} consecutive draws")
    w = w * (np.sqrt(rx_power) / nrm)[:, None]
    return w[0] if size is None else w


@dataclass
class RelaxationRecord:
    """Bookkeeping for one solved relaxation, used for lower-bound checks."""

    stage: str
    status: str
    objective: float
    lower_bound: float
    candidate_values: list

    @classmethod
    def from_solution(cls, stage: str, sol: SdpSolution):
        return cls(stage, sol.status, sol.objective, sol.dual_objective, [])

    def violations(self, rtol: float = 1e-7) -> int:
        """Candidates whose penalized value falls below the relaxation optimum."""
        return sum(1 for v in self.candidate_values if self.lower_bound > v + rtol * (1.0 + abs(v)))
