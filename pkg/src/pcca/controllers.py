"""Per-step control policies.

All policies share the same baseline, a per-axis LQR for the double
integrator, and differ in how they enforce the pair constraints:

* centralized: one joint least-distance QP over every member's control,
* decentralized: each host constrains only its own control, taking a chi
  share of each pair constraint, braking when its rows are contradictory,
* predictor-corrector (pcca): each host solves the full multi-agent QP with
  zeros in place of the unknown baselines, applies its own entry, and folds
  the targets' observed accelerations back in as disturbance estimates with a
  one-sample delay.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .barrier import BarrierTerms, ConstraintRow, pair_barrier, stacked_pair_row
from .core import AgentState, BarrierParams
from .qp import DEFAULT_TOL, INFEASIBLE, QpProblem, solve

__all__ = [
    "DEFAULT_BRAKE_ACCEL",
    "DEFAULT_LQR_GAINS",
    "InfeasibleConstraintsError",
    "LqrGains",
    "PccaMemory",
    "build_centralized_problem",
    "build_pcca_problem",
    "centralized_step",
    "decentralized_step",
    "lqr_baseline",
    "pcca_step",
    "pursuer_controller",
    "two_agent_closed_form",
]

DEFAULT_BRAKE_ACCEL = 10.0


class InfeasibleConstraintsError(RuntimeError):
    """A jointly infeasible constraint set in a policy with no fallback."""

    def __init__(self, message: str, certificate: np.ndarray | None = None):
        super().__init__(message)
        self.certificate = certificate


@dataclass(frozen=True)
class LqrGains:
    """Per-axis state feedback u = -kp (pos - dest) - kv vel."""

    kp: float
    kv: float

    @classmethod
    def from_weights(cls, q: float = 4.0, r: float = 1.0) -> "LqrGains":
        """Gains from the per-axis double-integrator Riccati equation.

        For xdot = v, vdot = u with state weight q I and control weight r, the
        2x2 algebraic Riccati equation solves in closed form: the off-diagonal
        entry is sqrt(q r), the velocity entry sqrt(r (q + 2 sqrt(q r))), and
        K = R^-1 B' P gives kp = sqrt(q/r), kv = sqrt((q + 2 sqrt(q r)) / r).
        """
        if q <= 0.0 or r <= 0.0:
            raise ValueError("weights must be positive")
        kp = math.sqrt(q / r)
        kv = math.sqrt((q + 2.0 * math.sqrt(q * r)) / r)
        return cls(kp=kp, kv=kv)


DEFAULT_LQR_GAINS = LqrGains.from_weights()


def lqr_baseline(
    state: AgentState, dest: np.ndarray, gains: LqrGains = DEFAULT_LQR_GAINS
) -> np.ndarray:
    """Baseline acceleration driving the agent to rest at dest."""
    dest = np.asarray(dest, dtype=float)
    return -gains.kp * (state.position - dest) - gains.kv * state.velocity


def pursuer_controller(
    state: AgentState,
    quarry_position: np.ndarray,
    gains: LqrGains = DEFAULT_LQR_GAINS,
) -> np.ndarray:
    """Chase the quarry's current position; no avoidance, no feedforward."""
    return lqr_baseline(state, quarry_position, gains)


def _pair_terms(states: list[AgentState], p: BarrierParams) -> dict:
    n = len(states)
    return {
        (i, j): pair_barrier(states[i], states[j], p)
        for i in range(n)
        for j in range(i + 1, n)
    }


def build_centralized_problem(
    states: list[AgentState], u0: np.ndarray, p: BarrierParams
) -> QpProblem:
    """Joint QP: min sum ||u_i - u0_i||^2 s.t. every pair constraint."""
    n = len(states)
    u0 = np.asarray(u0, dtype=float).reshape(n, 2)
    rows = [
        stacked_pair_row(terms, i, j, n)
        for (i, j), terms in _pair_terms(states, p).items()
    ]
    return QpProblem(u_ref=u0.reshape(-1), rows=tuple(rows))


def centralized_step(
    states: list[AgentState],
    u0: np.ndarray,
    p: BarrierParams,
    tol: float = DEFAULT_TOL,
) -> np.ndarray:
    """All members' accelerations from the joint QP; raises when infeasible."""
    sol = solve(build_centralized_problem(states, u0, p), tol)
    if sol.status == INFEASIBLE:
        raise InfeasibleConstraintsError(
            "centralized constraint set is infeasible", sol.farkas
        )
    return sol.u_star.reshape(len(states), 2)


def decentralized_step(
    host: int,
    states: list[AgentState],
    u0_host: np.ndarray,
    chi: float,
    p: BarrierParams,
    brake_accel: float = DEFAULT_BRAKE_ACCEL,
    tol: float = DEFAULT_TOL,
) -> tuple[np.ndarray, bool]:
    """Host-only QP with rows chi a_ij + b_ij . u_host >= 0 per target.

    Unlike the joint problem these rows can contradict each other; the
    fallback is a straight-line brake opposite the current velocity. Returns
    (control, braked).
    """
    u0_host = np.asarray(u0_host, dtype=float).reshape(2)
    rows = []
    for j in range(len(states)):
        if j == host:
            continue
        t = pair_barrier(states[host], states[j], p)
        rows.append(ConstraintRow(coeffs=t.b.copy(), offset=chi * t.a))
    sol = solve(QpProblem(u_ref=u0_host, rows=tuple(rows)), tol)
    if sol.status == INFEASIBLE:
        speed = float(np.linalg.norm(states[host].velocity))
        if speed == 0.0:
            return np.zeros(2), True
        return -brake_accel * states[host].velocity / speed, True
    return sol.u_star, False


@dataclass(frozen=True, eq=False)
class PccaMemory:
    """Host-side record of one predictor-corrector step.

    u_star holds the controls the host computed for every agent at the
    previous sample (its own applied entry included); w_hat holds the
    disturbance estimates used at the current sample, the host's own entry
    pinned at zero.
    """

    u_star: np.ndarray
    w_hat: np.ndarray

    @classmethod
    def zeros(cls, n_agents: int) -> "PccaMemory":
        return cls(np.zeros((n_agents, 2)), np.zeros((n_agents, 2)))


def build_pcca_problem(
    host: int,
    states: list[AgentState],
    u0_host: np.ndarray,
    w_hat: np.ndarray,
    p: BarrierParams,
) -> QpProblem:
    """Host's copy of the joint QP with estimates standing in for the others.

    Decision vector stacks a control for every agent; the reference is zero
    except for the host's own baseline, and each pair row reads
    a_jk + b_jk (u_j + w_j - u_k - w_k) >= 0.
    """
    n = len(states)
    u0_host = np.asarray(u0_host, dtype=float).reshape(2)
    w_hat = np.asarray(w_hat, dtype=float).reshape(n, 2)
    u_ref = np.zeros(2 * n)
    u_ref[2 * host : 2 * host + 2] = u0_host
    rows = [
        stacked_pair_row(terms, i, j, n, w_i=w_hat[i], w_j=w_hat[j])
        for (i, j), terms in _pair_terms(states, p).items()
    ]
    return QpProblem(u_ref=u_ref, rows=tuple(rows))


def pcca_step(
    host: int,
    states: list[AgentState],
    u0_host: np.ndarray,
    mem: PccaMemory,
    observed_accels: np.ndarray,
    p: BarrierParams,
    tol: float = DEFAULT_TOL,
) -> tuple[np.ndarray, PccaMemory]:
    """One predictor-corrector step for the host agent.

    Each target's estimate is its observed previous-interval acceleration
    minus what the host had computed for it, so by construction the estimate
    carries exactly one sample of delay. The host applies only its own entry
    of the solution; everything else is bookkeeping for the next step.
    """
    n = len(states)
    observed = np.asarray(observed_accels, dtype=float).reshape(n, 2)
    w_hat = observed - mem.u_star
    w_hat[host] = 0.0
    sol = solve(build_pcca_problem(host, states, u0_host, w_hat, p), tol)
    if sol.status == INFEASIBLE:
        raise InfeasibleConstraintsError(
            f"pcca constraint set infeasible for host {host}", sol.farkas
        )
    u_all = sol.u_star.reshape(n, 2)
    new_mem = PccaMemory(u_star=u_all.copy(), w_hat=w_hat)
    return u_all[host].copy(), new_mem


def two_agent_closed_form(
    terms: BarrierTerms,
    u0_host: np.ndarray,
    w_hat_other: np.ndarray,
    host_is_first: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """Two-agent predictor-corrector solve in closed form.

    `terms` must be the pair terms in (first, second) order. With the single
    constraint a + b (u_1 - u_2) >= 0 the host's QP is a rank-one projection:

        host first:  mu = a + b.u0 - b.w_other,  correction along +b/(2 b.b)
        host second: mu = a - b.u0 + b.w_other,  correction along -b/(2 b.b)

    Returns (u_host, u_other_estimate); the correction only triggers when the
    unconstrained pair violates the row (mu < 0).
    """
    u0_host = np.asarray(u0_host, dtype=float).reshape(2)
    w_hat_other = np.asarray(w_hat_other, dtype=float).reshape(2)
    b = terms.b
    bb = float(b @ b)
    if bb == 0.0:
        raise ValueError("zero constraint direction")
    scale = b / (2.0 * bb)
    if host_is_first:
        mu = terms.a + float(b @ u0_host) - float(b @ w_hat_other)
        corr = min(0.0, mu)
        return u0_host - corr * scale, corr * scale
    mu = terms.a - float(b @ u0_host) + float(b @ w_hat_other)
    corr = min(0.0, mu)
    return u0_host + corr * scale, -corr * scale
