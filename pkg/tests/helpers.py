"""Random instance generators shared by the test modules."""

import numpy as np

from hymcast.conic import SdpProblem


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_hermitian(rng, n):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (a + a.conj().T) / 2


def random_pd(rng, n, floor=0.1):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return a @ a.conj().T / n + floor * np.eye(n)


def random_feasible_sdp(rng, max_dim=16, max_blocks=3, max_scalars=3, max_constraints=30):
    """A random SDP with a strictly feasible primal point and a strictly feasible dual point.

    A positive definite point ``X0`` fixes the right-hand sides so the primal is
    feasible; the cost is built as ``S0 + sum_i y0_i A_i`` with ``S0`` positive
    definite and sign-correct multipliers, so the dual is strictly feasible too.
    Strong duality then holds and the optimum is attained.
    """
    n_blocks = int(rng.integers(1, max_blocks + 1))
    dims = [int(d) for d in rng.integers(1, max_dim + 1, n_blocks)]
    n_scalars = int(rng.integers(0, max_scalars + 1))
    m = int(rng.integers(1, 2 + min(max_constraints, sum(d * d for d in dims))))
    p = SdpProblem()
    X0, S0, x0, s0 = {}, {}, {}, {}
    for b, d in enumerate(dims):
        name = p.add_block(f"B{b}", d)
        X0[name], S0[name] = random_pd(rng, d), random_pd(rng, d)
    for j in range(n_scalars):
        name = p.add_scalar(f"s{j}")
        x0[name], s0[name] = rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0)
    cost_blocks = {k: v.copy() for k, v in S0.items()}
    cost_scalars = dict(s0)
    for _ in range(m):
        blocks = {k: random_hermitian(rng, X0[k].shape[0]) for k in X0 if rng.random() < 0.7}
        scalars = {k: float(rng.standard_normal()) for k in x0 if rng.random() < 0.5}
        value = sum(np.real(np.vdot(a, X0[k])) for k, a in blocks.items())
        value += sum(w * x0[k] for k, w in scalars.items())
        sense = str(rng.choice(["=", "<=", ">="]))
        y = float(rng.standard_normal())
        if sense == "<=":
            rhs, y = value + rng.uniform(0.1, 1.0), -abs(y)
        elif sense == ">=":
            rhs, y = value - rng.uniform(0.1, 1.0), abs(y)
        else:
            rhs = value
        p.add_constraint(blocks, sense, rhs, scalars)
        for k, a in blocks.items():
            cost_blocks[k] = cost_blocks[k] + y * a
        for k, w in scalars.items():
            cost_scalars[k] += y * w
    p.set_objective(cost_blocks, cost_scalars)
    return p
