"""Least-distance quadratic programs over halfspace intersections.

Problems have the form

    min ||u - u_ref||^2    s.t.    coeffs_k . u + offset_k >= 0   for each row k

solved exactly by a dual active-set method specialized to the identity
Hessian: start from the unconstrained minimizer u_ref, repeatedly pick the
most violated row (lowest index on ties), and move toward satisfying it while
keeping the working-set rows tight. A partial step drops the working-set row
whose multiplier would cross zero first. Iterates stay optimal for their
working set, so termination yields a KKT-certified optimum. When a violated
row turns out to be a nonnegative combination of the working set, no primal
progress is possible and that combination is exactly a Farkas certificate of
infeasibility, reported instead of a solution.

`brute_force_oracle` is an independent reference: it enumerates every row
subset, solves the equality-constrained projection, and keeps KKT-consistent
candidates; feasibility is decided by enumerating the min-norm points of all
equality subsystems (one of them lies in any nonempty polyhedron). It exists
for testing and stays deliberately slow and simple.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .barrier import ConstraintRow

__all__ = [
    "DEFAULT_TOL",
    "INFEASIBLE",
    "MAX_ORACLE_ROWS",
    "OPTIMAL",
    "QpDegeneracyError",
    "QpProblem",
    "QpSolution",
    "brute_force_oracle",
    "solve",
    "solve_single_row_closed_form",
]

DEFAULT_TOL = 1e-9
OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
MAX_ORACLE_ROWS = 12

# Relative threshold deciding that a candidate row is linearly dependent on
# the working set: ||projection residual||^2 <= _DEP_EPS ||row||^2.
_DEP_EPS = 1e-22
# Multiplier direction entries below this are not treated as positive.
_R_POS_EPS = 1e-12
_COND_LIMIT = 1e14


class QpDegeneracyError(RuntimeError):
    """Working-set geometry too ill-conditioned to resolve reliably."""


@dataclass(frozen=True, eq=False)
class QpProblem:
    """Reference point plus inequality rows; rows may be empty."""

    u_ref: np.ndarray
    rows: tuple[ConstraintRow, ...]

    def __post_init__(self):
        u_ref = np.asarray(self.u_ref, dtype=float).reshape(-1)
        rows = tuple(self.rows)
        if not np.all(np.isfinite(u_ref)):
            raise ValueError("u_ref has non-finite entries")
        for k, row in enumerate(rows):
            if row.coeffs.shape != u_ref.shape:
                raise ValueError(
                    f"row {k}: coeffs length {row.coeffs.size} != n = {u_ref.size}"
                )
            if not np.all(np.isfinite(row.coeffs)) or not np.isfinite(row.offset):
                raise ValueError(f"row {k}: non-finite entries")
        object.__setattr__(self, "u_ref", u_ref)
        object.__setattr__(self, "rows", rows)

    def stacked(self) -> tuple[np.ndarray, np.ndarray]:
        """Rows as (G, d) with the constraint G u + d >= 0."""
        if not self.rows:
            return np.zeros((0, self.u_ref.size)), np.zeros(0)
        G = np.stack([row.coeffs for row in self.rows])
        d = np.array([row.offset for row in self.rows])
        return G, d


@dataclass(frozen=True, eq=False)
class QpSolution:
    """Solver outcome.

    For status "optimal": u_star is the unique minimizer, active_set lists the
    tight rows in working-set order, and multipliers (aligned with active_set,
    all >= 0) satisfy 2 (u_star - u_ref) = sum_k mu_k coeffs_k.
    For status "infeasible": u_star is None and farkas is a length-m vector
    y >= 0 with y.G = 0 and y.d < 0.
    """

    status: str
    u_star: np.ndarray | None
    active_set: tuple[int, ...]
    multipliers: np.ndarray
    farkas: np.ndarray | None = None


def _solve_working(M: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    if M.shape[0] == 0:
        return np.zeros(0)
    if np.linalg.cond(M) > _COND_LIMIT:
        raise QpDegeneracyError("working-set Gram matrix is numerically singular")
    try:
        return np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError as exc:
        raise QpDegeneracyError("working-set solve failed") from exc


def _blocking_step(mu: list[float], r: np.ndarray) -> tuple[float, int]:
    """Largest dual step before a working-set multiplier hits zero.

    Returns (inf, -1) when no direction entry is positive. Ties resolve to the
    lowest working-set position, scanning in order.
    """
    t_best = np.inf
    k_best = -1
    for k in range(len(mu)):
        if r[k] > _R_POS_EPS:
            t = mu[k] / r[k]
            if t < t_best:
                t_best = t
                k_best = k
    return t_best, k_best


def solve(problem: QpProblem, tol: float = DEFAULT_TOL) -> QpSolution:
    """Dual active-set solve; deterministic for identical inputs.

    tol is the absolute slack below which a row counts as satisfied.
    """
    if tol <= 0.0:
        raise ValueError(f"tol must be > 0, got {tol:g}")
    u_ref = problem.u_ref
    m = len(problem.rows)
    if m == 0:
        return QpSolution(OPTIMAL, u_ref.copy(), (), np.zeros(0))
    G, d = problem.stacked()

    u = u_ref.copy()
    work: list[int] = []
    mu: list[float] = []  # multipliers in the 1/2 ||.||^2 convention
    in_work = np.zeros(m, dtype=bool)
    max_outer = 50 * (m + 2) * (u_ref.size + 2)

    for _ in range(max_outer):
        slack = G @ u + d
        slack_masked = np.where(in_work, np.inf, slack)
        p = int(np.argmin(slack_masked))
        if slack_masked[p] >= -tol:
            return QpSolution(OPTIMAL, u, tuple(work), 2.0 * np.asarray(mu))

        gp = G[p]
        mu_p = 0.0
        for _ in range(max_outer):
            if work:
                GW = G[work]
                r = _solve_working(GW @ GW.T, GW @ gp)
                z = gp - GW.T @ r
            else:
                r = np.zeros(0)
                z = gp.copy()
            zz = float(z @ z)

            if zz > _DEP_EPS * float(gp @ gp):
                # Primal progress possible: step length making row p tight.
                t_full = -float(gp @ u + d[p]) / zz
                t_block, k_block = _blocking_step(mu, r)
                if t_full <= t_block:
                    u = u + t_full * z
                    mu = [mk - t_full * rk for mk, rk in zip(mu, r)]
                    work.append(p)
                    mu.append(mu_p + t_full)
                    in_work[p] = True
                    break
                u = u + t_block * z
                mu = [mk - t_block * rk for mk, rk in zip(mu, r)]
                mu_p += t_block
            else:
                # Row p is a combination of the working set. If the combination
                # is nonnegative the system is contradictory: certificate.
                if r.size == 0 or np.all(r <= _R_POS_EPS):
                    y = np.zeros(m)
                    y[p] = 1.0
                    for k_idx, k_row in enumerate(work):
                        y[k_row] = max(0.0, -float(r[k_idx])) if r.size else 0.0
                    return QpSolution(INFEASIBLE, None, (), np.zeros(0), farkas=y)
                t_block, k_block = _blocking_step(mu, r)
                mu = [mk - t_block * rk for mk, rk in zip(mu, r)]
                mu_p += t_block
            # Partial step taken: drop the blocking row, keep resolving p.
            dropped = work.pop(k_block)
            mu.pop(k_block)
            in_work[dropped] = False
        else:
            raise QpDegeneracyError("inner active-set iteration limit exceeded")
    raise QpDegeneracyError("active-set iteration limit exceeded")


def solve_single_row_closed_form(u_ref: np.ndarray, row: ConstraintRow) -> np.ndarray:
    """Projection onto one halfspace: u_ref - min(0, mu) g / (g.g)."""
    u_ref = np.asarray(u_ref, dtype=float).reshape(-1)
    g = row.coeffs
    gg = float(g @ g)
    if gg == 0.0:
        raise ValueError("zero-coefficient row has no projection direction")
    mu = float(g @ u_ref) + row.offset
    return u_ref - min(0.0, mu) * g / gg


def _kkt_candidate(G, d, u_ref, subset, tol):
    """Equality-constrained projection on `subset`, or None if not KKT-consistent."""
    if not subset:
        u = u_ref.copy()
        mults = np.zeros(0)
    else:
        GS = G[list(subset)]
        dS = d[list(subset)]
        lam, *_ = np.linalg.lstsq(GS @ GS.T, GS @ u_ref + dS, rcond=None)
        u = u_ref - GS.T @ lam
        scale = 1.0 + float(np.max(np.abs(dS))) + float(np.max(np.abs(GS))) * (
            1.0 + float(np.max(np.abs(u)))
        )
        if float(np.max(np.abs(GS @ u + dS))) > 1e-8 * scale:
            return None  # equality subsystem inconsistent for this subset
        mults = -2.0 * lam
        if np.min(mults, initial=0.0) < -10.0 * tol * (1.0 + float(np.max(np.abs(mults)))):
            return None
    slack = G @ u + d
    feas_tol = 10.0 * tol * (1.0 + float(np.max(np.abs(d))))
    if float(np.min(slack)) < -feas_tol:
        return None
    return u, np.clip(mults, 0.0, None)


def _farkas_via_lp(G: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Certificate y >= 0, y.G = 0, y.d = -1 via a small LP."""
    m, n = G.shape
    A_eq = np.vstack([G.T, d[None, :]])
    b_eq = np.zeros(n + 1)
    b_eq[-1] = -1.0
    res = linprog(
        np.zeros(m), A_eq=A_eq, b_eq=b_eq, bounds=[(0.0, None)] * m, method="highs"
    )
    if not res.success:
        raise RuntimeError(
            "oracle enumeration found no feasible point but the Farkas LP "
            "found no certificate either; inconsistent problem data?"
        )
    return np.asarray(res.x)


def brute_force_oracle(problem: QpProblem, tol: float = DEFAULT_TOL) -> QpSolution:
    """Reference solver by exhaustive subset enumeration (testing only).

    Capped at MAX_ORACLE_ROWS rows. Deterministic: subsets are visited in
    (size, lexicographic) order and the lowest-objective KKT candidate wins.
    """
    m = len(problem.rows)
    if m > MAX_ORACLE_ROWS:
        raise ValueError(f"oracle handles at most {MAX_ORACLE_ROWS} rows, got {m}")
    u_ref = problem.u_ref
    if m == 0:
        return QpSolution(OPTIMAL, u_ref.copy(), (), np.zeros(0))
    G, d = problem.stacked()

    best = None
    for size in range(m + 1):
        for subset in itertools.combinations(range(m), size):
            cand = _kkt_candidate(G, d, u_ref, subset, tol)
            if cand is None:
                continue
            u, mults = cand
            obj = float((u - u_ref) @ (u - u_ref))
            if best is None or obj < best[0]:
                best = (obj, u, subset, mults)
    if best is not None:
        _, u, subset, mults = best
        return QpSolution(OPTIMAL, u, tuple(subset), mults)

    # No KKT point anywhere: the feasible set should be empty. Confirm by
    # enumerating min-norm solutions of every equality subsystem; a nonempty
    # polyhedron contains one of them (its minimal faces are such subsystems).
    feas_tol = 10.0 * tol * (1.0 + float(np.max(np.abs(d))))
    for size in range(m + 1):
        for subset in itertools.combinations(range(m), size):
            if subset:
                GS = G[list(subset)]
                dS = d[list(subset)]
                u, *_ = np.linalg.lstsq(GS, -dS, rcond=None)
                if float(np.max(np.abs(GS @ u + dS))) > feas_tol:
                    continue
            else:
                u = np.zeros_like(u_ref)
            if float(np.min(G @ u + d)) >= -feas_tol:
                raise RuntimeError(
                    "oracle found a feasible point but no KKT candidate; "
                    "numerical inconsistency"
                )
    return QpSolution(INFEASIBLE, None, (), np.zeros(0), farkas=_farkas_via_lp(G, d))
