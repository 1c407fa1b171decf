"""Small dense semidefinite programs over Hermitian PSD blocks.

Problems have Hermitian positive semidefinite matrix blocks ``X_b`` and
real scalar variables (optionally nonnegative), a linear objective
``sum_b Re Tr(C_b X_b) + c^T x`` and linear constraints of the same form
with sense ``<=``, ``=`` or ``>=``.

:func:`solve` uses an infeasible-start primal-dual path-following method
(Nesterov-Todd search direction with Mehrotra predictor-corrector) working
directly on complex Hermitian blocks with the inner product ``Re Tr(A^H X)``.
Near the optimum the primal iterate may be polished by a minimum-norm
projection onto the equality constraints.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

log = logging.getLogger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
MAX_ITER = "max_iter"

SENSES = ("<=", "=", ">=")


def _is_hermitian(a: np.ndarray, rtol: float = 1e-10) -> bool:
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    return bool(np.max(np.abs(a - a.conj().T), initial=0.0) <= rtol * scale)


@dataclass
class Constraint:
    """``sum_b Re Tr(A_b X_b) + sum_s a_s x_s  <sense>  rhs``."""

    blocks: dict[str, np.ndarray]
    scalars: dict[str, float]
    sense: str
    rhs: float


@dataclass
class SdpProblem:
    """A Hermitian-block SDP assembled incrementally.

    Example
    -------
    >>> p = SdpProblem()
    >>> p.add_block("X", 2)
    >>> p.set_objective(blocks={"X": np.array([[0, 1], [1, 0]])})
    >>> for k in range(2):
    ...     e = np.zeros((2, 2)); e[k, k] = 1
    ...     p.add_constraint({"X": e}, "=", 1.0)
    """

    psd_blocks: list[tuple[str, int]] = field(default_factory=list)
    scalar_vars: list[tuple[str, bool]] = field(default_factory=list)
    objective_blocks: dict[str, np.ndarray] = field(default_factory=dict)
    objective_scalars: dict[str, float] = field(default_factory=dict)
    constraints: list[Constraint] = field(default_factory=list)

    def add_block(self, name: str, dim: int) -> str:
        if name in self._names():
            raise ValueError(f"duplicate variable name {name!r}")
        if int(dim) < 1:
            raise ValueError(f"block {name!r} must have positive dimension")
        self.psd_blocks.append((name, int(dim)))
        return name

    def add_scalar(self, name: str, nonneg: bool = True) -> str:
        if name in self._names():
            raise ValueError(f"duplicate variable name {name!r}")
        self.scalar_vars.append((name, bool(nonneg)))
        return name

    def set_objective(self, blocks=None, scalars=None):
        self.objective_blocks = {k: np.asarray(v, dtype=complex) for k, v in (blocks or {}).items()}
        self.objective_scalars = {k: float(v) for k, v in (scalars or {}).items()}

    def add_constraint(self, blocks=None, sense: str = "=", rhs: float = 0.0, scalars=None):
        self.constraints.append(
            Constraint(
                {k: np.asarray(v, dtype=complex) for k, v in (blocks or {}).items()},
                {k: float(v) for k, v in (scalars or {}).items()},
                sense,
                float(rhs),
            )
        )

    def _names(self):
        return {n for n, _ in self.psd_blocks} | {n for n, _ in self.scalar_vars}

    @property
    def block_dims(self) -> dict[str, int]:
        return dict(self.psd_blocks)

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    def validate(self):
        """Raise ``ValueError`` on structural problems."""
        if not self.psd_blocks and not self.scalar_vars:
            raise ValueError("problem has no variables")
        dims = self.block_dims
        scalars = {n for n, _ in self.scalar_vars}

        def check_blocks(coeffs, where):
            for name, mat in coeffs.items():
                if name not in dims:
                    raise ValueError(f"{where}: unknown block {name!r}")
                if mat.shape != (dims[name], dims[name]):
                    raise ValueError(
                        f"{where}: block {name!r} coefficient has shape {mat.shape}, "
                        f"expected {(dims[name], dims[name])}"
                    )
                if not np.all(np.isfinite(mat)):
                    raise ValueError(f"{where}: block {name!r} coefficient is not finite")
                if not _is_hermitian(mat):
                    raise ValueError(f"{where}: block {name!r} coefficient is not Hermitian")

        def check_scalars(coeffs, where):
            for name, v in coeffs.items():
                if name not in scalars:
                    raise ValueError(f"{where}: unknown scalar {name!r}")
                if not np.isfinite(v):
                    raise ValueError(f"{where}: scalar weight for {name!r} is not finite")

        check_blocks(self.objective_blocks, "objective")
        check_scalars(self.objective_scalars, "objective")
        for i, con in enumerate(self.constraints):
            if con.sense not in SENSES:
                raise ValueError(f"constraint {i}: unknown sense {con.sense!r}")
            if not np.isfinite(con.rhs):
                raise ValueError(f"constraint {i}: rhs is not finite")
            check_blocks(con.blocks, f"constraint {i}")
            check_scalars(con.scalars, f"constraint {i}")

    def evaluate(self, blocks: dict, scalars: dict | None = None) -> float:
        """Objective value at a given point."""
        scalars = scalars or {}
        val = sum(float(np.real(np.vdot(c, blocks[n]))) for n, c in self.objective_blocks.items())
        val += sum(w * scalars.get(n, 0.0) for n, w in self.objective_scalars.items())
        return float(val)

    def constraint_values(self, blocks: dict, scalars: dict | None = None) -> np.ndarray:
        scalars = scalars or {}
        out = []
        for con in self.constraints:
            v = sum(float(np.real(np.vdot(a, blocks[n]))) for n, a in con.blocks.items())
            v += sum(w * scalars.get(n, 0.0) for n, w in con.scalars.items())
            out.append(v)
        return np.asarray(out)

    # -- debug dump / load -------------------------------------------------

    def to_json(self) -> str:
        def mat(a):
            a = np.asarray(a, dtype=complex)
            return [[float(z.real), float(z.imag)] for z in a.ravel(order="C")]

        doc = {
            "format": "hermitian-sdp/1",
            "psd_blocks": [{"name": n, "dim": d} for n, d in self.psd_blocks],
            "scalar_vars": [{"name": n, "nonneg": nn} for n, nn in self.scalar_vars],
            "objective": {
                "blocks": {n: mat(c) for n, c in self.objective_blocks.items()},
                "scalars": dict(self.objective_scalars),
            },
            "constraints": [
                {
                    "blocks": {n: mat(a) for n, a in con.blocks.items()},
                    "scalars": dict(con.scalars),
                    "sense": con.sense,
                    "rhs": con.rhs,
                }
                for con in self.constraints
            ],
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "SdpProblem":
        doc = json.loads(text)
        dims = {b["name"]: b["dim"] for b in doc["psd_blocks"]}

        def mat(name, pairs):
            arr = np.asarray(pairs, dtype=float)
            return (arr[:, 0] + 1j * arr[:, 1]).reshape(dims[name], dims[name])

        p = cls()
        for b in doc["psd_blocks"]:
            p.add_block(b["name"], b["dim"])
        for s in doc["scalar_vars"]:
            p.add_scalar(s["name"], s["nonneg"])
        obj = doc["objective"]
        p.set_objective({n: mat(n, v) for n, v in obj["blocks"].items()}, obj["scalars"])
        for con in doc["constraints"]:
            p.add_constraint(
                {n: mat(n, v) for n, v in con["blocks"].items()}, con["sense"], con["rhs"], con["scalars"]
            )
        return p


@dataclass
class SdpSolution:
    blocks: dict[str, np.ndarray]
    scalars: dict[str, float]
    objective: float
    dual_objective: float
    primal_residual: float
    dual_residual: float
    gap: float
    status: str
    iterations: int
    multipliers: np.ndarray

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


# -- standard form -------------------------------------------------------------


class _StandardForm:
    """``min <C, X> s.t. A(X) = b, X in (PSD blocks) x (nonneg orthant)``."""

    def __init__(self, problem: SdpProblem):
        cons = problem.constraints
        m = len(cons)
        self.m = m
        self.block_names = [n for n, _ in problem.psd_blocks]
        self.block_dims = [d for _, d in problem.psd_blocks]

        self.C = [problem.objective_blocks.get(n, np.zeros((d, d), complex)) for n, d in problem.psd_blocks]
        self.C = [0.5 * (c + c.conj().T) for c in self.C]
        self.A = []
        for n, d in problem.psd_blocks:
            a = np.zeros((m, d, d), dtype=complex)
            for i, con in enumerate(cons):
                if n in con.blocks:
                    c = con.blocks[n]
                    a[i] = 0.5 * (c + c.conj().T)
            self.A.append(a)

        # orthant columns: nonneg scalars, split free scalars, inequality slacks
        lp_cols = []
        self.scalar_map = {}
        for name, nonneg in problem.scalar_vars:
            if nonneg:
                self.scalar_map[name] = (len(lp_cols), None)
                lp_cols.append(("var", name, 1.0))
            else:
                self.scalar_map[name] = (len(lp_cols), len(lp_cols) + 1)
                lp_cols.append(("var", name, 1.0))
                lp_cols.append(("var", name, -1.0))
        n_var_cols = len(lp_cols)
        self.n_var_cols = n_var_cols
        slack_rows = [i for i, con in enumerate(cons) if con.sense != "="]
        n_lp = n_var_cols + len(slack_rows)
        self.n_lp = n_lp
        self.c_lp = np.zeros(n_lp)
        self.A_lp = np.zeros((m, n_lp))
        for j, (_, name, sign) in enumerate(lp_cols):
            self.c_lp[j] = sign * problem.objective_scalars.get(name, 0.0)
            for i, con in enumerate(cons):
                self.A_lp[i, j] = sign * con.scalars.get(name, 0.0)
        for s, i in enumerate(slack_rows):
            self.A_lp[i, n_var_cols + s] = 1.0 if cons[i].sense == "<=" else -1.0
        self.b = np.array([con.rhs for con in cons], dtype=float)

        # row equilibration, then unit-size data: all iterations run on the
        # scaled problem, residuals are reported in the caller's units
        norms = np.sqrt(
            sum(np.sum(np.abs(a.reshape(m, -1)) ** 2, axis=1) for a in self.A) + np.sum(self.A_lp**2, axis=1)
        ) if m else np.zeros(0)
        norms = np.where(norms > 0, norms, 1.0)
        self.row_scale = norms
        self.A = [a / norms[:, None, None] for a in self.A]
        self.A_lp = self.A_lp / norms[:, None]
        self.A_flat = [a.reshape(m, -1) for a in self.A]
        self.nu = sum(self.block_dims) + n_lp

        self.norm_b = float(np.linalg.norm(self.b))
        self.norm_C = float(np.sqrt(sum(np.linalg.norm(c) ** 2 for c in self.C) + np.sum(self.c_lp**2)))
        b_rows = self.b / norms
        self.b_scale = max(1.0, float(np.linalg.norm(b_rows)))
        self.c_scale = max(1.0, self.norm_C)
        self.bs = b_rows / self.b_scale
        self.Cs = [c / self.c_scale for c in self.C]
        self.cs_lp = self.c_lp / self.c_scale

    def op(self, X, x):
        """Scaled ``A(X)``."""
        out = self.A_lp @ x if self.n_lp else np.zeros(self.m)
        for af, Xb in zip(self.A_flat, X):
            out = out + np.real(af @ Xb.conj().ravel())
        return out

    def op_general(self, T, t):
        """``A(T)`` for non-Hermitian ``T`` (real part of the trace pairing)."""
        out = self.A_lp @ t if self.n_lp else np.zeros(self.m)
        for af, Tb in zip(self.A_flat, T):
            out = out + np.real(af @ Tb.T.ravel())
        return out

    def adj(self, y):
        """Scaled adjoint ``sum_i y_i A_i``."""
        Ys = [(y @ af).reshape(Xd, Xd) for af, Xd in zip(self.A_flat, self.block_dims)]
        return Ys, self.A_lp.T @ y

    def inner_c(self, X, x) -> float:
        return float(sum(np.real(np.vdot(c, Xb)) for c, Xb in zip(self.Cs, X)) + self.cs_lp @ x)


def _polish(sf: _StandardForm, X, x, rp):
    """Minimum-norm correction of the primal iterate onto ``A(X) = b``.

    Only PSD blocks and internal slack columns move. Returns ``None`` when the
    corrected blocks leave the PSD cone by more than the accepted clamp.
    """
    m = sf.m
    cols = np.arange(sf.n_var_cols, sf.n_lp)
    A_lp = sf.A_lp[:, cols]
    gram = A_lp @ A_lp.T
    for af in sf.A_flat:
        gram = gram + np.real(af.conj() @ af.T)
    zeta = np.linalg.lstsq(gram, rp, rcond=1e-12)[0] if m else np.zeros(0)
    dX, dx_lp = sf.adj(zeta)
    newX = [_herm(Xb + d) for Xb, d in zip(X, dX)]
    for Xb in newX:
        lam = np.linalg.eigvalsh(Xb) * sf.b_scale  # caller's units
        if lam.size and lam[0] < -1e-9 * (1.0 + max(lam[-1], 0.0)):
            return None
    newx = x.copy()
    newx[cols] += dx_lp[cols]
    return newX, newx


def _herm(a):
    return 0.5 * (a + a.conj().T)


def _max_step_lp(x, dx):
    neg = dx < 0
    if not np.any(neg):
        return np.inf
    return float(np.min(-x[neg] / dx[neg]))


def _psd_root(X):
    """Some ``L`` with ``L L^H = X``: Cholesky, or an eigen root when that fails."""
    try:
        return np.linalg.cholesky(X)
    except np.linalg.LinAlgError:
        lam, U = np.linalg.eigh(X)
        return U * np.sqrt(np.maximum(lam, 0.0))


def _step_from_eig(lam_min: float) -> float:
    return np.inf if lam_min >= 0 else -1.0 / lam_min


def _nt_scaling(X, S):
    """Nesterov-Todd scaling ``G`` with ``G^{-1} X G^{-H} = G^H S G = diag(lam)``.

    ``W = G G^H`` is the scaling point with ``W S W = X``.
    """
    Lx = _psd_root(X)
    Ls = np.linalg.cholesky(S)
    U, lam, Vh = np.linalg.svd(Ls.conj().T @ Lx)
    if lam[-1] <= 0:
        raise np.linalg.LinAlgError("iterate left the cone interior")
    V = Vh.conj().T
    G = (Lx @ V) / np.sqrt(lam)[None, :]
    Ginv = (G.conj().T @ S) / lam[:, None]
    return G, Ginv, lam


def solve(problem: SdpProblem, tol: float = 1e-7, max_iter: int = 100) -> SdpSolution:
    """Solve ``problem`` to relative accuracy ``tol``.

    Convergence means relative primal residual ``||b - A(X)|| / (1 + ||b||)``
    with every single row also within ``tol * (1 + |b_i|)``, relative dual residual ``||C - A^T y - S|| / (1 + ||C||)`` and relative
    gap ``|p - d| / (1 + |p| + |d|)`` are all below ``tol``.

    Infeasible or unbounded problems return a status rather than raising;
    malformed problems raise ``ValueError``.
    """
    problem.validate()
    sf = _StandardForm(problem)
    m, dims = sf.m, sf.block_dims
    bs, cs = sf.b_scale, sf.c_scale

    # starting point scaled to the data magnitudes
    X, S = [], []
    for C_b, A_b, d in zip(sf.Cs, sf.A_flat, dims):
        a_norms = np.linalg.norm(A_b, axis=1) if m else np.zeros(0)
        xi = max(1.0, np.sqrt(d), d * float(np.max((1 + np.abs(sf.bs)) / (1 + a_norms), initial=0.0)))
        eta = max(1.0, np.sqrt(d), float(np.max(a_norms, initial=0.0)), float(np.linalg.norm(C_b)))
        X.append(xi * np.eye(d, dtype=complex))
        S.append(eta * np.eye(d, dtype=complex))
    if sf.n_lp:
        a_norms = np.linalg.norm(sf.A_lp, axis=0)
        x = np.maximum(1.0, float(np.max(1 + np.abs(sf.bs), initial=1.0)) / (1 + a_norms))
        s = np.full(sf.n_lp, max(1.0, float(np.max(a_norms)), float(np.linalg.norm(sf.cs_lp))))
    else:
        x = np.zeros(0)
        s = np.zeros(0)
    y = np.zeros(m)

    def report(X, x, y, S, s):
        AX = sf.op(X, x)
        rp = sf.bs - AX
        ATy, ATy_lp = sf.adj(y)
        Rd = [C_b - a - S_b for C_b, a, S_b in zip(sf.Cs, ATy, S)]
        rd = sf.cs_lp - ATy_lp - s
        pobj = sf.inner_c(X, x) * bs * cs
        dobj = float(sf.bs @ y) * bs * cs
        rp_user = rp * sf.row_scale * bs  # residual rows in the caller's units
        relp = np.linalg.norm(rp_user) / (1.0 + sf.norm_b)
        if m:
            relp = max(relp, float(np.max(np.abs(rp_user) / (1.0 + np.abs(sf.b)))))
        rd_norm = np.sqrt(sum(np.linalg.norm(r) ** 2 for r in Rd) + np.sum(rd**2)) * cs
        reld = rd_norm / (1.0 + sf.norm_C)
        gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
        return (rp, Rd, rd, AX, ATy, ATy_lp), (pobj, dobj, relp, reld, gap)

    status = MAX_ITER
    it = 0
    best = None
    for it in range(max_iter + 1):
        (rp, Rd, rd, AX, ATy, ATy_lp), stats = report(X, x, y, S, s)
        pobj, dobj, relp, reld, gap = stats
        log.debug("it %2d pobj %+.8e dobj %+.8e pres %.1e dres %.1e gap %.1e", it, pobj, dobj, relp, reld, gap)
        merit = max(relp, reld, gap)
        if best is None or merit < best[0]:
            best = (merit, [a.copy() for a in X], x.copy(), y.copy(), stats)
        if relp <= tol and reld <= tol and gap <= tol:
            status = OPTIMAL
            break
        if relp > tol and reld <= tol and gap <= tol and relp <= 1e4 * tol:
            polished = _polish(sf, X, x, rp)
            if polished is not None:
                pstats = report(polished[0], polished[1], y, S, s)[1]
                if max(pstats[2:]) <= tol:
                    X, x, stats = polished[0], polished[1], pstats
                    status = OPTIMAL
                    break

        # infeasibility certificates along diverging iterates
        if dobj > 0 and relp > tol:
            cert = np.sqrt(sum(np.linalg.norm(a + S_b) ** 2 for a, S_b in zip(ATy, S)) + np.sum((ATy_lp + s) ** 2))
            by = float(sf.bs @ y)
            if cert / by < 1e-8 and by > 1e6:
                status = INFEASIBLE
                break
        if pobj < 0 and reld > tol:
            cx = -sf.inner_c(X, x)
            if np.linalg.norm(AX) / cx < 1e-8 and cx > 1e6:
                status = UNBOUNDED
                break
        if it == max_iter:
            break

        mu = (sum(float(np.real(np.vdot(Xb, Sb))) for Xb, Sb in zip(X, S)) + float(x @ s)) / sf.nu
        try:
            scalings = [_nt_scaling(Xb, Sb) for Xb, Sb in zip(X, S)]
        except np.linalg.LinAlgError:
            break

        # Schur complement M_ij = Re Tr(A_i W A_j W) as a Gram matrix of G^H A_i G
        M = np.zeros((m, m))
        for A_b, (G, _, _) in zip(sf.A, scalings):
            B = np.matmul(np.matmul(G.conj().T, A_b), G).reshape(m, -1)
            M += np.real(B.conj() @ B.T)
        if sf.n_lp:
            M += (sf.A_lp * (x / s)) @ sf.A_lp.T
        M = 0.5 * (M + M.T)
        try:
            factor = sla.cho_factor(M, lower=True, check_finite=False)

            def solve_m(rhs):
                return sla.cho_solve(factor, rhs, check_finite=False)

        except (np.linalg.LinAlgError, ValueError):
            if not np.all(np.isfinite(M)):
                break
            Mpinv = np.linalg.pinv(M, rcond=1e-14, hermitian=True)

            def solve_m(rhs):
                return Mpinv @ rhs

        def direction(E, rc):
            """Solve for ``dX + W dS W = G E G^H`` together with the residual equations."""
            T = [G @ Eb @ G.conj().T for Eb, (G, _, _) in zip(E, scalings)]
            WRW = [G @ (G.conj().T @ Rdb @ G) @ G.conj().T for Rdb, (G, _, _) in zip(Rd, scalings)]
            h = rp - sf.op([t - w for t, w in zip(T, WRW)], (rc - x * rd) / s if sf.n_lp else x)

            def assemble(dy):
                dSs, ds_lp = sf.adj(dy)
                dS = [_herm(Rdb - a) for Rdb, a in zip(Rd, dSs)]
                ds = rd - ds_lp
                dX = [_herm(t - G @ (G.conj().T @ dSb @ G) @ G.conj().T)
                      for t, dSb, (G, _, _) in zip(T, dS, scalings)]
                dx = (rc - x * ds) / s if sf.n_lp else np.zeros(0)
                return dX, dx, dS, ds

            dy = solve_m(h) if m else np.zeros(0)
            dX, dx, dS, ds = assemble(dy)
            # iterative refinement on the primal equations A(dX) = rp
            for _ in range(3):
                err = rp - sf.op(dX, dx)
                if not m or np.linalg.norm(err) <= 1e-15 * (1.0 + np.linalg.norm(rp)):
                    break
                dy = dy + solve_m(err)
                dX, dx, dS, ds = assemble(dy)
            return dX, dx, dy, dS, ds

        def scaled(dX, dS):
            """Directions in the scaled space where ``X`` and ``S`` both equal ``diag(lam)``."""
            out = []
            for dXb, dSb, (G, Ginv, lam) in zip(dX, dS, scalings):
                out.append((_herm(Ginv @ dXb @ Ginv.conj().T), _herm(G.conj().T @ dSb @ G)))
            return out

        def steps(dX, dx, dS, ds):
            ap = ad = np.inf
            for (tx, ts), (_, _, lam) in zip(scaled(dX, dS), scalings):
                r = 1.0 / np.sqrt(lam)
                ap = min(ap, _step_from_eig(np.linalg.eigvalsh(_herm(r[:, None] * tx * r[None, :]))[0]))
                ad = min(ad, _step_from_eig(np.linalg.eigvalsh(_herm(r[:, None] * ts * r[None, :]))[0]))
            return min(ap, _max_step_lp(x, dx)), min(ad, _max_step_lp(s, ds))

        def solve_e(R, lam):
            return 2.0 * R / (lam[:, None] + lam[None, :])

        # predictor: dX~ + dS~ = -lam
        E = [-np.diag(lam).astype(complex) for _, _, lam in scalings]
        dXa, dxa, _, dSa, dsa = direction(E, -x * s)
        ap, ad = steps(dXa, dxa, dSa, dsa)
        ap, ad = min(1.0, ap), min(1.0, ad)
        mu_aff = (
            sum(float(np.real(np.vdot(Xb + ap * a, Sb + ad * b))) for Xb, a, Sb, b in zip(X, dXa, S, dSa))
            + float((x + ap * dxa) @ (s + ad * dsa))
        ) / sf.nu
        sigma = min(1.0, max(0.0, mu_aff / mu) ** 3) if mu > 0 else 0.0

        # corrector with the Mehrotra second-order term
        E = []
        for (tx, ts), (_, _, lam) in zip(scaled(dXa, dSa), scalings):
            R = sigma * mu * np.eye(lam.size) - np.diag(lam**2) - _herm(tx @ ts)
            E.append(solve_e(R, lam))
        rc = sigma * mu - x * s - dxa * dsa
        dX, dx, dy, dS, ds = direction(E, rc)
        ap, ad = steps(dX, dx, dS, ds)
        tau = 0.9 + 0.09 * min(ap, ad, 1.0)
        ap, ad = min(1.0, tau * ap), min(1.0, tau * ad)
        log.debug("    mu %.2e sigma %.2e ap %.2e ad %.2e", mu, sigma, ap, ad)
        if ap < 1e-12 and ad < 1e-12:
            break

        X = [_herm(Xb + ap * d) for Xb, d in zip(X, dX)]
        x = x + ap * dx
        S = [_herm(Sb + ad * d) for Sb, d in zip(S, dS)]
        s = s + ad * ds
        y = y + ad * dy

    if status == MAX_ITER:
        # fall back to the most accurate iterate seen
        _, X, x, y, stats = best
    pobj, dobj, relp, reld, gap = stats
    blocks = {n: Xb * bs for n, Xb in zip(sf.block_names, X)}
    scalars = {}
    for name, (jp, jm) in sf.scalar_map.items():
        scalars[name] = float((x[jp] - (x[jm] if jm is not None else 0.0)) * bs)
    return SdpSolution(
        blocks=blocks,
        scalars=scalars,
        objective=pobj,
        dual_objective=dobj,
        primal_residual=relp,
        dual_residual=reld,
        gap=gap,
        status=status,
        iterations=it,
        multipliers=y * cs / sf.row_scale if m else y,
    )


# -- factorization helpers -------------------------------------------------------


def _check_hermitian(X) -> np.ndarray:
    X = np.asarray(X, dtype=complex)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {X.shape}")
    if not _is_hermitian(X, rtol=1e-8):
        raise ValueError("matrix is not Hermitian")
    return _herm(X)


def dominant_rank_ratio(X) -> float:
    """``lambda_2 / lambda_1`` of a Hermitian PSD matrix (0 for 1x1 or zero)."""
    X = _check_hermitian(X)
    if X.shape[0] == 1:
        return 0.0
    lam = np.linalg.eigvalsh(X)[::-1]
    if lam[0] <= 0:
        return 0.0
    return float(max(lam[1], 0.0) / lam[0])


def psd_sqrt_rows(X, clamp: float = 1e-8) -> np.ndarray:
    """Matrix ``A`` with ``A^H A = X``, rows ordered by descending eigenvalue.

    Eigenvalues down to ``-clamp * ||X||_2`` are clamped to zero; anything
    more negative raises ``ValueError``.
    """
    X = _check_hermitian(X)
    lam, U = np.linalg.eigh(X)
    lam, U = lam[::-1], U[:, ::-1]
    scale = max(abs(lam[0]), abs(lam[-1])) if lam.size else 0.0
    if lam.size and lam[-1] < -clamp * scale:
        raise ValueError(f"matrix is not PSD (min eigenvalue {lam[-1]:.3e}, norm {scale:.3e})")
    lam = np.clip(lam, 0.0, None)
    # fix each eigenvector's phase so the output is reproducible
    piv = np.argmax(np.abs(U) > 1e-12 * np.max(np.abs(U), axis=0, keepdims=True), axis=0)
    ph = U[piv, np.arange(U.shape[1])]
    ph = np.where(np.abs(ph) > 0, ph, 1.0)
    U = U * (ph.conj() / np.abs(ph))[None, :]
    return np.sqrt(lam)[:, None] * U.conj().T


def psd_factor(X, clamp: float = 1e-8) -> np.ndarray:
    """Factor ``X = Q^T Q^*``; column ``n`` of ``Q`` is the vector ``q_n``.

    ``Q`` is the conjugate of the eigenvalue square root from
    :func:`psd_sqrt_rows`.
    """
    return psd_sqrt_rows(X, clamp).conj()
