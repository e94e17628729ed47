"""Deterministic fixed-step closed-loop simulation with zero-order-hold controls.

Each sample takes a snapshot of every agent's state, computes all baselines
and controls from that snapshot (so no agent sees another's same-sample
decision), then advances every state with the exact zero-order-hold
discretization of the double integrator. Identical scenarios produce
bit-identical traces: fixed iteration order, no wall-clock anywhere.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .barrier import DegenerateGeometryError, pair_barrier
from .controllers import (
    DEFAULT_LQR_GAINS,
    InfeasibleConstraintsError,
    LqrGains,
    PccaMemory,
    centralized_step,
    decentralized_step,
    lqr_baseline,
    pcca_step,
    pursuer_controller,
)
from .core import AgentState, BarrierParams, Controller, ObservationMode, Scenario

__all__ = [
    "SimulationAbort",
    "SweepRow",
    "Trace",
    "dt_sweep",
    "margin_required",
    "metrics",
    "replay_controls",
    "run_scenario",
    "step_dynamics",
]


class SimulationAbort(RuntimeError):
    """Unrecoverable condition mid-run; records when and why."""

    def __init__(self, step: int, time: float, reason: str):
        self.step = step
        self.time = time
        self.reason = reason
        super().__init__(f"simulation aborted at step {step} (t = {time:.6g} s): {reason}")


@dataclass(eq=False)
class Trace:
    """Complete record of one run; every time series has length steps + 1.

    w_hat[k, i, j] is host i's disturbance estimate for agent j at sample k
    (zero rows for hosts that keep no estimates). flags marks braking
    fallbacks. The trailing scenario fields (controllers, radii, destinations,
    barrier, pairs) make the trace self-describing for metrics and plotting.
    """

    times: np.ndarray
    position: np.ndarray  # (K+1, n, 2)
    velocity: np.ndarray  # (K+1, n, 2)
    baseline: np.ndarray  # (K+1, n, 2) u0
    control: np.ndarray   # (K+1, n, 2) applied accelerations
    w_hat: np.ndarray     # (K+1, n, n, 2)
    h: np.ndarray         # (K+1, n_pairs)
    h_r0: np.ndarray      # (K+1, n_pairs)
    flags: np.ndarray     # (K+1, n) uint8, 1 = braking fallback
    pairs: tuple[tuple[int, int], ...]
    controllers: tuple[Controller, ...]
    radii: np.ndarray
    destinations: np.ndarray
    barrier: BarrierParams
    dt: float


def step_dynamics(x: AgentState, u: np.ndarray, dt: float) -> AgentState:
    """Exact zero-order-hold step of the planar double integrator."""
    u = np.asarray(u, dtype=float)
    return AgentState(
        position=x.position + x.velocity * dt + 0.5 * u * dt * dt,
        velocity=x.velocity + u * dt,
    )


def _pursuer_target(configs, i: int) -> int:
    t = configs[i].target
    if t is not None:
        return t
    return next(j for j in range(len(configs)) if j != i)


def _baselines(configs, states, gains: LqrGains) -> np.ndarray:
    u0 = np.zeros((len(states), 2))
    for i, cfg in enumerate(configs):
        if cfg.controller is Controller.PURSUER:
            quarry = _pursuer_target(configs, i)
            u0[i] = pursuer_controller(states[i], states[quarry].position, gains)
        else:
            u0[i] = lqr_baseline(states[i], cfg.destination, gains)
    return u0


def _controls_for_sample(
    configs,
    states,
    u0: np.ndarray,
    observed: np.ndarray,
    mems: dict[int, PccaMemory],
    barrier_params: BarrierParams,
    step: int,
    time: float,
) -> tuple[np.ndarray, np.ndarray, dict[int, PccaMemory]]:
    """Dispatch every agent's policy from one state snapshot.

    Shared by the live loop and offline replay so both execute the exact same
    arithmetic. Returns (controls, flag row, updated pcca memories).
    """
    n = len(states)
    u = np.zeros((n, 2))
    flag_row = np.zeros(n, dtype=np.uint8)
    new_mems: dict[int, PccaMemory] = {}

    members = [i for i, c in enumerate(configs) if c.controller is Controller.CENTRALIZED_MEMBER]
    if members:
        try:
            u_members = centralized_step(
                [states[i] for i in members], u0[members], barrier_params
            )
        except InfeasibleConstraintsError as exc:
            raise SimulationAbort(step, time, str(exc)) from exc
        for slot, i in enumerate(members):
            u[i] = u_members[slot]

    for i, cfg in enumerate(configs):
        kind = cfg.controller
        if kind is Controller.CENTRALIZED_MEMBER:
            continue
        if kind is Controller.DECENTRALIZED:
            u[i], braked = decentralized_step(i, states, u0[i], cfg.chi, barrier_params)
            flag_row[i] = 1 if braked else 0
        elif kind is Controller.PCCA:
            try:
                u[i], new_mems[i] = pcca_step(
                    i, states, u0[i], mems[i], observed, barrier_params
                )
            except InfeasibleConstraintsError as exc:
                raise SimulationAbort(step, time, str(exc)) from exc
        else:  # non-interacting and pursuer apply their baseline directly
            u[i] = u0[i]
    return u, flag_row, new_mems


def run_scenario(s: Scenario) -> Trace:
    """Run to the horizon; raises SimulationAbort on unrecoverable steps."""
    n = len(s.agents)
    configs = [a.config for a in s.agents]
    pos = np.array([a.state.position for a in s.agents], dtype=float)
    vel = np.array([a.state.velocity for a in s.agents], dtype=float)
    if s.symmetry_perturbation != 0.0 and n > 0:
        pos[0, 1] += s.symmetry_perturbation

    steps = int(math.floor(s.horizon / s.dt + 1e-9))
    pairs = tuple((i, j) for i in range(n) for j in range(i + 1, n))
    contact_sq = np.array(
        [(configs[i].radius + configs[j].radius) ** 2 for i, j in pairs]
    )

    times = np.arange(steps + 1) * s.dt
    position = np.zeros((steps + 1, n, 2))
    velocity = np.zeros((steps + 1, n, 2))
    baseline = np.zeros((steps + 1, n, 2))
    control = np.zeros((steps + 1, n, 2))
    w_hat = np.zeros((steps + 1, n, n, 2))
    h = np.zeros((steps + 1, len(pairs)))
    h_r0 = np.zeros((steps + 1, len(pairs)))
    flags = np.zeros((steps + 1, n), dtype=np.uint8)

    mems = {
        i: PccaMemory.zeros(n)
        for i, c in enumerate(configs)
        if c.controller is Controller.PCCA
    }
    finite_diff = s.observation is ObservationMode.FINITE_DIFFERENCE

    for k in range(steps + 1):
        t_now = float(times[k])
        position[k] = pos
        velocity[k] = vel
        states = [AgentState(pos[i], vel[i]) for i in range(n)]

        for pi, (i, j) in enumerate(pairs):
            try:
                terms = pair_barrier(states[i], states[j], s.barrier)
            except DegenerateGeometryError as exc:
                raise SimulationAbort(k, t_now, str(exc)) from exc
            h[k, pi] = terms.h
            h_r0[k, pi] = terms.h + s.barrier.r**2 - contact_sq[pi]

        u0 = _baselines(configs, states, DEFAULT_LQR_GAINS)
        if k == 0:
            observed = np.zeros((n, 2))
        elif finite_diff:
            observed = (velocity[k] - velocity[k - 1]) / s.dt
        else:
            observed = control[k - 1]

        u, flag_row, new_mems = _controls_for_sample(
            configs, states, u0, observed, mems, s.barrier, k, t_now
        )
        mems.update(new_mems)

        baseline[k] = u0
        control[k] = u
        flags[k] = flag_row
        for i, mem in mems.items():
            w_hat[k, i] = mem.w_hat

        if k < steps:
            nxt = [step_dynamics(states[i], u[i], s.dt) for i in range(n)]
            pos = np.array([st.position for st in nxt])
            vel = np.array([st.velocity for st in nxt])

    return Trace(
        times=times,
        position=position,
        velocity=velocity,
        baseline=baseline,
        control=control,
        w_hat=w_hat,
        h=h,
        h_r0=h_r0,
        flags=flags,
        pairs=pairs,
        controllers=tuple(c.controller for c in configs),
        radii=np.array([c.radius for c in configs]),
        destinations=np.array([c.destination for c in configs]),
        barrier=s.barrier,
        dt=s.dt,
    )


def replay_controls(s: Scenario, trace: Trace) -> np.ndarray:
    """Recompute every control offline from recorded kinematics.

    Walks the trace sample by sample, feeding each policy only the recorded
    states, the recorded previous-interval accelerations, and memories rebuilt
    in order. A run is causally clean iff this reproduces trace.control
    bit for bit.
    """
    n = trace.position.shape[1]
    configs = [a.config for a in s.agents]
    mems = {
        i: PccaMemory.zeros(n)
        for i, c in enumerate(configs)
        if c.controller is Controller.PCCA
    }
    finite_diff = s.observation is ObservationMode.FINITE_DIFFERENCE
    out = np.zeros_like(trace.control)
    for k in range(trace.times.size):
        states = [AgentState(trace.position[k, i], trace.velocity[k, i]) for i in range(n)]
        u0 = _baselines(configs, states, DEFAULT_LQR_GAINS)
        if k == 0:
            observed = np.zeros((n, 2))
        elif finite_diff:
            observed = (trace.velocity[k] - trace.velocity[k - 1]) / s.dt
        else:
            observed = trace.control[k - 1]
        u, _, new_mems = _controls_for_sample(
            configs, states, u0, observed, mems, s.barrier, k, float(trace.times[k])
        )
        mems.update(new_mems)
        out[k] = u
    return out


def metrics(trace: Trace, p: BarrierParams) -> dict:
    """Summary report of a trace; plain dict, JSON-ready.

    Per pair: barrier minima, both physical-contact minima (squared-distance
    threshold (r0_i+r0_j)^2, and the looser r0_i^2+r0_j^2 recorded as _alt),
    worst enforcement violation of a + b.(u_i - u_j), and whether the pair
    ever left the reduced admissible set. The two-host estimate identity and
    the sampling-error bound on the residual are reported for two-agent runs
    with both agents predictor-corrector.
    """
    n = trace.position.shape[1]
    report: dict = {"pairs": {}, "agents": {}}

    min_residual = math.inf
    beta = 0.0
    for pi, (i, j) in enumerate(trace.pairs):
        rel_pos = trace.position[:, i] - trace.position[:, j]
        rel_vel = trace.velocity[:, i] - trace.velocity[:, j]
        sq = np.einsum("kd,kd->k", rel_pos, rel_pos)
        hdot = 2.0 * np.einsum("kd,kd->k", rel_pos, rel_vel)
        h = sq - p.r**2
        a = 2.0 * np.einsum("kd,kd->k", rel_vel, rel_vel) + p.l1 * hdot + p.l0 * h
        du = trace.control[:, i] - trace.control[:, j]
        residual = a + 2.0 * np.einsum("kd,kd->k", rel_pos, du)
        min_residual = min(min_residual, float(residual[1:].min()) if residual.size > 1 else math.inf)
        beta = max(beta, 2.0 * float(np.sqrt(sq.max())))
        alt_threshold = trace.radii[i] ** 2 + trace.radii[j] ** 2
        in_reduced = (h >= 0.0) & (hdot - p.lambda1 * h >= 0.0)
        report["pairs"][f"{i}-{j}"] = {
            "min_h": float(trace.h[:, pi].min()),
            "min_h_r0": float(trace.h_r0[:, pi].min()),
            "min_h_r0_alt": float((sq - alt_threshold).min()),
            "max_violation": float(np.maximum(0.0, -residual).max()),
            "exited_reduced_set": bool(np.any(~in_reduced)),
        }

    speeds = np.linalg.norm(trace.velocity, axis=2)
    dist_to_dest = np.linalg.norm(trace.position - trace.destinations[None, :, :], axis=2)
    for i in range(n):
        report["agents"][str(i)] = {
            "final_distance_to_destination": float(dist_to_dest[-1, i]),
            "min_speed": float(speeds[:, i].min()),
            "braking_steps": int(trace.flags[:, i].sum()),
        }

    du0 = np.diff(trace.baseline, axis=0)
    rate = float(np.linalg.norm(du0, axis=2).max() / trace.dt) if du0.size else 0.0
    report["sampling_bound"] = {
        "beta": beta,
        "baseline_rate": rate,
        "bound": 2.0 * beta * rate * trace.dt,
        "min_residual_from_k1": min_residual if min_residual < math.inf else None,
    }

    two_pcca = n == 2 and all(c is Controller.PCCA for c in trace.controllers)
    if two_pcca and trace.times.size > 2:
        w_diff = trace.w_hat[:, 1, 0] - trace.w_hat[:, 0, 1]
        target = trace.baseline[:, 0] - trace.baseline[:, 1]
        resid = np.linalg.norm(w_diff[2:] - target[1:-1], axis=1)
        report["estimate_identity"] = {
            "max_residual": float(resid.max()),
            "scale": 1.0 + float(np.linalg.norm(trace.baseline, axis=2).max()),
        }
    else:
        report["estimate_identity"] = None
    return report


def _with_margin(s: Scenario, dt: float, margin: float) -> Scenario:
    r0_max = max(a.config.radius for a in s.agents)
    b = s.barrier
    return replace(
        s, dt=dt, barrier=BarrierParams(r=2.0 * r0_max + margin, l0=b.l0, l1=b.l1)
    )


class MarginBracketError(ValueError):
    """Even the largest searched margin still produced a physical collision."""


def margin_required(s: Scenario, dt: float, resolution: float | None = None) -> float:
    """Smallest extra barrier radius that keeps min h_r0 >= 0 at this dt.

    Bisection over margin m in [0, r0_max], controller barrier r = 2 r0_max + m,
    physical check against the contact metric h_r0. Resolution defaults to
    1e-4 r0_max.
    """
    r0_max = max(a.config.radius for a in s.agents)
    if resolution is None:
        resolution = 1e-4 * r0_max

    def collision_free(margin: float) -> bool:
        trace = run_scenario(_with_margin(s, dt, margin))
        return float(trace.h_r0.min()) >= 0.0

    if collision_free(0.0):
        return 0.0
    hi = r0_max
    if not collision_free(hi):
        raise MarginBracketError(
            f"collision persists even at margin {hi:g} m (dt = {dt:g} s)"
        )
    lo = 0.0
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if collision_free(mid):
            hi = mid
        else:
            lo = mid
    return hi


@dataclass(frozen=True)
class SweepRow:
    dt: float
    margin: float
    min_h: float
    min_h_r0: float


def dt_sweep(s: Scenario, dts: list[float]) -> list[SweepRow]:
    """Required margin per sample time, with the accepting run's minima."""
    if not dts:
        raise ValueError("dts must not be empty")
    rows = []
    for dt in dts:
        margin = margin_required(s, dt)
        trace = run_scenario(_with_margin(s, dt, margin))
        rows.append(
            SweepRow(
                dt=float(dt),
                margin=float(margin),
                min_h=float(trace.h.min()),
                min_h_r0=float(trace.h_r0.min()),
            )
        )
    return rows
