"""Scenario builders shared across the test modules."""

import numpy as np

from pcca import (
    AgentConfig,
    AgentSpec,
    AgentState,
    BarrierParams,
    Controller,
    Scenario,
)

BARRIER = BarrierParams(r=4.0, l0=6.0, l1=5.0)


def agent(pos, vel, dest, controller, radius=2.0, chi=1.0, target=None):
    return AgentSpec(
        config=AgentConfig(
            radius=radius,
            destination=np.asarray(dest, dtype=float),
            controller=controller,
            chi=chi,
            target=target,
        ),
        state=AgentState(
            position=np.asarray(pos, dtype=float),
            velocity=np.asarray(vel, dtype=float),
        ),
    )


def head_on(dt=0.05, perturb=0.0, horizon=30.0, controller=Controller.PCCA, r=4.0):
    """Two agents facing each other, destinations swapped."""
    return Scenario(
        agents=(
            agent([-10.0, 0.0], [0.0, 0.0], [10.0, 0.0], controller),
            agent([10.0, 0.0], [0.0, 0.0], [-10.0, 0.0], controller),
        ),
        barrier=BarrierParams(r=r, l0=6.0, l1=5.0),
        horizon=horizon,
        dt=dt,
        symmetry_perturbation=perturb,
    )


def pursuit(r=4.05, dt=0.05, horizon=30.0):
    """Evader crossing the field with a pursuer regulating onto it."""
    return Scenario(
        agents=(
            agent([-10.0, 0.0], [0.0, 0.0], [10.0, 0.0], Controller.PCCA),
            agent([10.0, 0.5], [0.0, 0.0], [0.0, 0.0], Controller.PURSUER, target=0),
        ),
        barrier=BarrierParams(r=r, l0=6.0, l1=5.0),
        horizon=horizon,
        dt=dt,
    )


def random_two_pcca(rng, horizon=8.0, dt=0.05, r=4.0):
    """Random pair scenario with initial separation above the barrier radius."""
    while True:
        p0 = rng.uniform(-10.0, 10.0, 2)
        p1 = rng.uniform(-10.0, 10.0, 2)
        if np.linalg.norm(p0 - p1) > r + 0.5:
            break
    return Scenario(
        agents=(
            agent(p0, rng.uniform(-3.0, 3.0, 2), rng.uniform(-12.0, 12.0, 2), Controller.PCCA),
            agent(p1, rng.uniform(-3.0, 3.0, 2), rng.uniform(-12.0, 12.0, 2), Controller.PCCA),
        ),
        barrier=BarrierParams(r=r, l0=6.0, l1=5.0),
        horizon=horizon,
        dt=dt,
    )


def random_states(rng, n, min_sep=0.5):
    """n agent states with every pairwise distance above min_sep."""
    while True:
        pos = rng.uniform(-10.0, 10.0, (n, 2))
        if all(
            np.linalg.norm(pos[i] - pos[j]) > min_sep
            for i in range(n)
            for j in range(i + 1, n)
        ):
            break
    vel = rng.uniform(-5.0, 5.0, (n, 2))
    return [AgentState(pos[i], vel[i]) for i in range(n)]


def far_apart_states(rng, n):
    """States so spread out that every pair constraint is slack at any
    moderate control."""
    states = []
    for i in range(n):
        base = np.array([60.0 * i, 0.0])
        states.append(
            AgentState(base + rng.uniform(-1.0, 1.0, 2), rng.uniform(-1.0, 1.0, 2))
        )
    return states
