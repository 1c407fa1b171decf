import numpy as np
import pytest

from helpers import random_feasible_sdp, random_pd
from hymcast.conic import (
    INFEASIBLE,
    OPTIMAL,
    UNBOUNDED,
    SdpProblem,
    dominant_rank_ratio,
    psd_factor,
    psd_sqrt_rows,
    solve,
)


def scalar_bound_problem(c=3.0):
    p = SdpProblem()
    p.add_block("x", 1)
    p.set_objective({"x": [[1.0]]})
    p.add_constraint({"x": [[1.0]]}, ">=", c)
    return p


def maxcut_problem():
    p = SdpProblem()
    p.add_block("X", 2)
    p.set_objective({"X": np.array([[0.0, 1.0], [1.0, 0.0]])})
    for k in range(2):
        e = np.zeros((2, 2))
        e[k, k] = 1.0
        p.add_constraint({"X": e}, "=", 1.0)
    return p


def negative_trace_problem():
    p = SdpProblem()
    p.add_block("X", 2)
    p.set_objective({"X": np.eye(2)})
    p.add_constraint({"X": np.eye(2)}, "=", -1.0)
    return p


# -- analytic examples --------------------------------------------------------------


def test_scalar_bound():
    sol = solve(scalar_bound_problem())
    assert sol.status == OPTIMAL
    assert sol.objective == pytest.approx(3.0, abs=1e-6)
    assert sol.blocks["x"][0, 0].real == pytest.approx(3.0, abs=1e-6)


def test_maxcut_two_nodes():
    sol = solve(maxcut_problem())
    assert sol.optimal
    assert sol.objective == pytest.approx(-2.0, abs=1e-6)
    np.testing.assert_allclose(sol.blocks["X"], [[1, -1], [-1, 1]], atol=1e-5)


def test_negative_trace_is_infeasible():
    assert solve(negative_trace_problem()).status == INFEASIBLE


def test_unbounded_free_scalar():
    p = SdpProblem()
    p.add_scalar("t", nonneg=False)
    p.add_block("X", 1)
    p.set_objective(scalars={"t": -1.0})
    p.add_constraint({"X": [[1.0]]}, "=", 1.0)
    assert solve(p).status == UNBOUNDED


def test_complex_coefficients():
    # min Re Tr(C X) with C = [[1, j], [-j, 1]] and Tr X = 1; optimum is lambda_min(C) = 0
    C = np.array([[1, 1j], [-1j, 1]])
    p = SdpProblem()
    p.add_block("X", 2)
    p.set_objective({"X": C})
    p.add_constraint({"X": np.eye(2)}, "=", 1.0)
    sol = solve(p)
    assert sol.optimal and sol.objective == pytest.approx(0.0, abs=1e-6)


def test_mixed_scalars_and_blocks():
    # min x0 + Tr X s.t. x0 + X_11 >= 2, X_22 = 1  ->  optimum 3
    p = SdpProblem()
    p.add_block("X", 2)
    p.add_scalar("x0")
    p.set_objective({"X": np.eye(2)}, {"x0": 1.0})
    p.add_constraint({"X": np.diag([1.0, 0.0])}, ">=", 2.0, {"x0": 1.0})
    p.add_constraint({"X": np.diag([0.0, 1.0])}, "=", 1.0)
    sol = solve(p)
    assert sol.optimal and sol.objective == pytest.approx(3.0, abs=1e-6)


# -- random problems ------------------------------------------------------------


def _check_solution(p, sol, tol):
    assert sol.status == OPTIMAL, sol.status
    assert sol.primal_residual <= tol and sol.dual_residual <= tol and sol.gap <= tol
    for name, X in sol.blocks.items():
        np.testing.assert_allclose(X, X.conj().T, atol=1e-12)
        lam = np.linalg.eigvalsh(X)
        assert lam[0] >= -1e-8 * (1 + lam[-1]), name
    for value in sol.scalars.values():
        assert value >= -1e-9
    values = p.constraint_values(sol.blocks, sol.scalars)
    for con, v in zip(p.constraints, values):
        slack = tol * (1 + abs(con.rhs)) * 10
        if con.sense == "=":
            assert abs(v - con.rhs) <= slack
        elif con.sense == "<=":
            assert v <= con.rhs + slack
        else:
            assert v >= con.rhs - slack
    assert sol.objective == pytest.approx(p.evaluate(sol.blocks, sol.scalars), rel=1e-9, abs=1e-9)


@pytest.mark.parametrize("seed", range(4))
def test_random_feasible_problems(seed):
    rng = np.random.default_rng(1000 + seed)
    for _ in range(10):
        p = random_feasible_sdp(rng, max_dim=10)
        _check_solution(p, solve(p), 1e-7)


def test_weak_duality_gap_reported():
    rng = np.random.default_rng(77)
    p = random_feasible_sdp(rng, max_dim=6)
    sol = solve(p, tol=1e-8)
    assert sol.optimal
    assert abs(sol.objective - sol.dual_objective) <= 1e-8 * (1 + abs(sol.objective) + abs(sol.dual_objective)) * 10


def test_max_iter_status():
    rng = np.random.default_rng(3)
    p = random_feasible_sdp(rng, max_dim=8)
    sol = solve(p, max_iter=2)
    assert sol.status == "max_iter" and sol.iterations == 2


def test_solve_is_deterministic():
    rng = np.random.default_rng(5)
    p = random_feasible_sdp(rng, max_dim=6)
    a, b = solve(p), solve(p)
    for name in a.blocks:
        assert a.blocks[name].tobytes() == b.blocks[name].tobytes()


# -- problem construction and validation -----------------------------------------------


def test_json_round_trip():
    rng = np.random.default_rng(9)
    p = random_feasible_sdp(rng, max_dim=4)
    q = SdpProblem.from_json(p.to_json())
    assert q.to_json() == p.to_json()
    assert solve(q).objective == pytest.approx(solve(p).objective, abs=1e-9)


@pytest.mark.parametrize(
    "mutate, message",
    [
        (lambda p: p.add_constraint({"Y": np.eye(2)}, "=", 1.0), "unknown block"),
        (lambda p: p.add_constraint({"X": np.eye(3)}, "=", 1.0), "shape"),
        (lambda p: p.add_constraint({"X": np.array([[0, 1], [0, 0]])}, "=", 1.0), "Hermitian"),
        (lambda p: p.add_constraint({"X": np.eye(2)}, "<", 1.0), "sense"),
        (lambda p: p.add_constraint({"X": np.eye(2)}, "=", np.inf), "rhs"),
        (lambda p: p.add_constraint({"X": np.eye(2)}, "=", 1.0, {"z": 1.0}), "unknown scalar"),
        (lambda p: p.set_objective({"X": np.full((2, 2), np.nan)}), "not finite"),
    ],
)
def test_validation_errors(mutate, message):
    p = maxcut_problem()
    mutate(p)
    with pytest.raises(ValueError, match=message):
        solve(p)


def test_duplicate_and_empty():
    p = SdpProblem()
    p.add_block("X", 2)
    with pytest.raises(ValueError):
        p.add_block("X", 3)
    with pytest.raises(ValueError):
        p.add_scalar("X")
    with pytest.raises(ValueError):
        p.add_block("Y", 0)
    with pytest.raises(ValueError):
        SdpProblem().validate()


# -- factor helpers ------------------------------------------------------------------


def test_dominant_rank_ratio_examples():
    v = np.array([1.0, 2.0j, -1.0])
    assert dominant_rank_ratio(np.outer(v, v.conj())) == pytest.approx(0.0, abs=1e-12)
    assert dominant_rank_ratio(np.eye(2)) == pytest.approx(1.0)
    assert dominant_rank_ratio(np.diag([4.0, 1.0])) == pytest.approx(0.25)
    assert dominant_rank_ratio(np.eye(1)) == 0.0
    with pytest.raises(ValueError):
        dominant_rank_ratio(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_psd_factor_identity():
    Q = psd_factor(np.eye(3))
    np.testing.assert_allclose(Q.T @ Q.conj(), np.eye(3), atol=1e-14)


def test_psd_factor_rank_one_structure():
    rng = np.random.default_rng(12)
    f = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    Q = psd_factor(np.outer(f, f.conj()))
    # the only column direction with weight is the first row of Q^T, i.e. q_n = f_n u
    u = Q[0] / f
    np.testing.assert_allclose(u, u[0], atol=1e-10)
    np.testing.assert_allclose(Q[1:], 0, atol=1e-7)
    np.testing.assert_allclose(np.outer(Q[0], Q[0].conj()), np.outer(f, f.conj()), atol=1e-10)


def test_psd_factor_reconstruction_and_determinism():
    rng = np.random.default_rng(13)
    for _ in range(20):
        X = random_pd(rng, 8, floor=0.0)
        Q = psd_factor(X)
        err = np.linalg.norm(Q.T @ Q.conj() - X) / np.linalg.norm(X)
        assert err <= 1e-10
        assert psd_factor(X).tobytes() == Q.tobytes()


def test_psd_sqrt_rows_clamps_tiny_negative_and_rejects_large():
    X = np.diag([1.0, -1e-12])
    A = psd_sqrt_rows(X)
    np.testing.assert_allclose(A.conj().T @ A, np.diag([1.0, 0.0]), atol=1e-14)
    with pytest.raises(ValueError, match="not PSD"):
        psd_sqrt_rows(np.diag([1.0, -0.1]))
    with pytest.raises(ValueError):
        psd_sqrt_rows(np.ones((2, 3)))
