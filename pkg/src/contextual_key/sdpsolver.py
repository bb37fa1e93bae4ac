"""Dense primal-dual interior-point solver for small semidefinite programs.

Problem form::

    maximize    tr(C X)
    subject to  tr(A_k X) = b_k,   k = 1..m
                X >= 0

with dual ``minimize b.y  s.t.  Z = sum_k y_k A_k - C >= 0``. The dual value
of a dual-feasible ``y`` is an upper bound on the primal optimum.

The iteration is the HKM search direction with Mehrotra predictor-corrector,
starting from scaled identities. Everything is dense; meant for n up to a
few hundred and m up to a couple of thousand.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy import sparse

log = logging.getLogger(__name__)

SOLVED = "solved"
MAX_ITER = "max_iter"
INFEASIBLE = "infeasible"
NUMERICAL_ERROR = "numerical_error"


@dataclass(eq=False)
class SDPProblem:
    objective: np.ndarray
    constraints: list  # (A_k, b_k) pairs, A_k symmetric n x n

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float)
        if self.objective.ndim != 2 or self.objective.shape[0] != self.objective.shape[1]:
            raise ValueError("objective must be a square matrix")
        if not np.allclose(self.objective, self.objective.T):
            raise ValueError("objective must be symmetric")
        n = self.order
        cons = []
        for a, b in self.constraints:
            a = np.asarray(a, dtype=float)
            if a.shape != (n, n):
                raise ValueError(f"constraint matrix has shape {a.shape}, expected {(n, n)}")
            if not np.allclose(a, a.T):
                raise ValueError("constraint matrices must be symmetric")
            cons.append((a, float(b)))
        self.constraints = cons

    @property
    def order(self) -> int:
        return self.objective.shape[0]

    def operator(self) -> tuple[sparse.csr_matrix, np.ndarray]:
        """Constraint rows as flattened matrices, and the right-hand side."""
        n = self.order
        if not self.constraints:
            return sparse.csr_matrix((0, n * n)), np.zeros(0)
        rows = sparse.vstack([sparse.csr_matrix(a.reshape(1, -1)) for a, _ in self.constraints]).tocsr()
        return rows, np.array([b for _, b in self.constraints])


@dataclass(eq=False)
class SDPResult:
    X: np.ndarray
    y: np.ndarray
    Z: np.ndarray
    primal_value: float
    dual_value: float
    gap: float
    status: str
    iterations: int
    primal_residual: float = np.nan
    dual_residual: float = np.nan
    dropped_constraints: list = field(default_factory=list)

    @property
    def solved(self) -> bool:
        return self.status == SOLVED


def _independent_rows(a_op: sparse.csr_matrix, b: np.ndarray, rtol: float = 1e-10):
    """Indices of a maximal linearly independent subset of constraint rows."""
    m = a_op.shape[0]
    if m == 0:
        return np.arange(0)
    dense = a_op.toarray()
    _, r, piv = sla.qr(dense.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    rank = int(np.sum(diag > rtol * max(diag[0], 1.0))) if diag.size else 0
    keep = np.sort(piv[:rank])
    if rank < m:
        # dependent rows must be consistent or the problem is infeasible
        coef, *_ = np.linalg.lstsq(dense[keep].T, dense.T, rcond=None)
        if np.max(np.abs(coef.T @ b[keep] - b)) > 1e-8 * (1 + np.max(np.abs(b))):
            raise ValueError("inconsistent linear constraints")
    return keep


def _max_step(x_chol: np.ndarray, dx: np.ndarray) -> float:
    """Largest alpha with X + alpha dX >= 0, given the Cholesky factor of X."""
    linv_dx = sla.solve_triangular(x_chol, dx, lower=True)
    s = sla.solve_triangular(x_chol, linv_dx.T, lower=True)
    lam_min = np.linalg.eigvalsh(0.5 * (s + s.T))[0]
    return np.inf if lam_min >= 0 else -1.0 / lam_min


def _factor(m_mat: np.ndarray):
    """Cholesky factor of the Schur complement, with diagonal shifts if needed."""
    shift = 0.0
    scale = max(np.max(np.abs(np.diag(m_mat))), 1.0)
    for _ in range(6):
        try:
            return sla.cho_factor(m_mat + shift * np.eye(len(m_mat)))
        except np.linalg.LinAlgError:
            shift = 1e-14 * scale if shift == 0.0 else shift * 100
    return None


def _refined_solve(m_mat, m_fac, rhs, steps: int = 2):
    dy = sla.cho_solve(m_fac, rhs)
    for _ in range(steps):
        dy = dy + sla.cho_solve(m_fac, rhs - m_mat @ dy)
    return dy


def solve(problem: SDPProblem, tol: float = 1e-8, max_iter: int = 100, feas_tol: float = 1e-9) -> SDPResult:
    """Solve ``problem`` to an absolute duality gap ``tol``.

    Never raises on numerical trouble; the outcome is reported in ``status``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = problem.order
    c = problem.objective
    a_full, b_full = problem.operator()
    keep = _independent_rows(a_full, b_full)
    dropped = sorted(set(range(a_full.shape[0])) - set(keep.tolist()))
    if dropped:
        log.warning("dropping %d linearly dependent constraints", len(dropped))
    a_op = a_full[keep]
    at_op = a_op.T.tocsr()
    b = b_full[keep]
    m = a_op.shape[0]
    coo = a_op.tocoo()
    nz_p, nz_q = np.divmod(coo.col, n)
    row_map = sparse.csr_matrix((coo.data, (coo.row, np.arange(coo.nnz))), shape=(m, coo.nnz))

    # internally: minimize <cm, X> with cm = -C, dual  A^T y + Z = cm
    cm = -c
    a_norms = np.sqrt(np.asarray(a_op.multiply(a_op).sum(axis=1)).ravel()) if m else np.zeros(0)
    xi = max(10.0, np.sqrt(n), n * max(((1 + np.abs(b)) / (1 + a_norms)).max(initial=1.0), 1.0))
    eta = max(10.0, np.sqrt(n), np.linalg.norm(c), a_norms.max(initial=0.0))
    x = xi * np.eye(n)
    z = eta * np.eye(n)
    y = np.zeros(m)
    eye = np.eye(n)

    def aop(mat):
        return a_op @ mat.ravel()

    def atop(vec):
        return (at_op @ vec).reshape(n, n)

    b_scale = 1.0 + np.linalg.norm(b)
    c_scale = 1.0 + np.linalg.norm(c)
    status = MAX_ITER
    it = 0
    rp_norm = rd_norm = np.inf
    for it in range(1, max_iter + 1):
        rp = b - aop(x)
        rd = cm - z - atop(y)
        rp_norm = np.linalg.norm(rp) / b_scale
        rd_norm = np.linalg.norm(rd) / c_scale
        pobj = float(np.sum(cm * x))
        dobj = float(b @ y)
        gap = float(np.sum(x * z))
        mu = gap / n
        log.debug("it %3d  p %.10g  d %.10g  gap %.2e  rp %.1e  rd %.1e", it, -pobj, -dobj, gap, rp_norm, rd_norm)
        if gap <= tol and abs(pobj - dobj) <= tol and rp_norm <= feas_tol and rd_norm <= feas_tol:
            status = SOLVED
            it -= 1
            break
        if np.linalg.norm(y) > 1e12 or np.trace(x) > 1e12:
            status = INFEASIBLE
            break
        try:
            z_chol = sla.cholesky(z, lower=True)
            x_chol = sla.cholesky(x, lower=True)
        except np.linalg.LinAlgError:
            status = NUMERICAL_ERROR
            break
        z_inv = sla.cho_solve((z_chol, True), eye)
        z_inv = 0.5 * (z_inv + z_inv.T)

        # Schur complement M_ij = tr(A_i X A_j Z^-1), summed over nonzeros of A_i, A_j
        m_mat = row_map @ (row_map @ (x[np.ix_(nz_q, nz_p)] * z_inv[np.ix_(nz_p, nz_q)])).T if m else np.zeros((0, 0))
        m_mat = 0.5 * (m_mat + m_mat.T)
        m_fac = _factor(m_mat) if m else None
        if m and m_fac is None:
            status = NUMERICAL_ERROR
            break

        x_rd_zi = x @ rd @ z_inv

        def direction(r_mat):
            # r_mat is the target for the complementarity product X Z
            rhs = rp - aop(r_mat @ z_inv) + aop(x) + aop(x_rd_zi)
            dy = _refined_solve(m_mat, m_fac, rhs) if m else np.zeros(0)
            dz = rd - atop(dy)
            dx = r_mat @ z_inv - x - x @ dz @ z_inv
            return 0.5 * (dx + dx.T), dy, dz

        # predictor
        dx_p, dy_p, dz_p = direction(np.zeros((n, n)))
        ap = min(1.0, _max_step(x_chol, dx_p))
        ad = min(1.0, _max_step(z_chol, dz_p))
        pred_gap = float(np.sum((x + ap * dx_p) * (z + ad * dz_p)))
        sigma = min(1.0, (pred_gap / gap) ** 3) if gap > 0 else 0.0

        # corrector
        dx, dy, dz = direction(sigma * mu * eye - dx_p @ dz_p)
        tau = 0.98
        ap = min(1.0, tau * _max_step(x_chol, dx))
        ad = min(1.0, tau * _max_step(z_chol, dz))
        x = x + ap * dx
        x = 0.5 * (x + x.T)
        y = y + ad * dy
        z = z + ad * dz
        z = 0.5 * (z + z.T)
        if max(ap, ad) < 1e-10:
            status = NUMERICAL_ERROR
            break

    primal_value = float(np.sum(c * x))
    dual_value = float(-(b @ y))
    z_out = atop(-y) - c
    return SDPResult(
        X=x,
        y=-y,
        Z=0.5 * (z_out + z_out.T),
        primal_value=primal_value,
        dual_value=dual_value,
        gap=abs(dual_value - primal_value),
        status=status,
        iterations=it,
        primal_residual=float(rp_norm),
        dual_residual=float(rd_norm),
        dropped_constraints=dropped,
    )


@dataclass
class ValidationReport:
    min_eig_x: float
    min_eig_z: float
    primal_residual: float
    dual_value: float
    primal_value: float
    gap: float
    psd_ok: bool
    feasible_ok: bool
    dual_ok: bool

    @property
    def ok(self) -> bool:
        return self.psd_ok and self.feasible_ok and self.dual_ok


def validate(problem: SDPProblem, result: SDPResult, psd_tol: float = 1e-9, res_tol: float = 1e-8) -> ValidationReport:
    """Recompute feasibility and objective values from the raw problem data.

    Uses only ``result.X`` and ``result.y``; the dual slack is rebuilt from
    the constraint matrices rather than taken from the solver.
    """
    x = np.asarray(result.X, dtype=float)
    c = problem.objective
    min_eig_x = float(np.linalg.eigvalsh(0.5 * (x + x.T))[0])
    residual = max((abs(float(np.sum(a * x)) - bk) for a, bk in problem.constraints), default=0.0)
    primal_value = float(np.sum(c * x))

    y = np.asarray(result.y, dtype=float)
    if y.size == len(problem.constraints):
        z = sum((yk * a for yk, (a, _) in zip(y, problem.constraints)), np.zeros_like(c)) - c
        dual_value = float(sum(yk * bk for yk, (_, bk) in zip(y, problem.constraints)))
        min_eig_z = float(np.linalg.eigvalsh(0.5 * (z + z.T))[0])
    else:
        # dependent constraints were dropped; map y back through the kept rows
        keep = [k for k in range(len(problem.constraints)) if k not in set(result.dropped_constraints)]
        z = sum((yk * problem.constraints[k][0] for yk, k in zip(y, keep)), np.zeros_like(c)) - c
        dual_value = float(sum(yk * problem.constraints[k][1] for yk, k in zip(y, keep)))
        min_eig_z = float(np.linalg.eigvalsh(0.5 * (z + z.T))[0])
    return ValidationReport(
        min_eig_x=min_eig_x,
        min_eig_z=min_eig_z,
        primal_residual=residual,
        dual_value=dual_value,
        primal_value=primal_value,
        gap=abs(dual_value - primal_value),
        psd_ok=min_eig_x >= -psd_tol,
        feasible_ok=residual <= res_tol,
        dual_ok=min_eig_z >= -psd_tol,
    )
