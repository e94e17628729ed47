"""Scenario types, validation, and the on-disk scenario format.

A scenario bundles the agents (policy assignment, body radius, destination,
initial state), the shared barrier parameters, and the sampling setup of one
deterministic run. Constructors only coerce shapes; every semantic rule lives
in :func:`validate_scenario` so that a bad scenario is data you can inspect,
not an exception you have to catch halfway through construction.
"""
from __future__ import annotations

import configparser
import hashlib
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

__all__ = [
    "AgentConfig",
    "AgentSpec",
    "AgentState",
    "BarrierParams",
    "Controller",
    "ObservationMode",
    "Scenario",
    "ScenarioParseError",
    "ScenarioValidationError",
    "load_scenario",
    "load_scenario_file",
    "save_scenario",
    "scenario_digest",
    "validate_scenario",
]


class Controller(str, Enum):
    """Per-agent control policy."""

    CENTRALIZED_MEMBER = "centralized-member"
    DECENTRALIZED = "decentralized"
    PCCA = "pcca"
    NON_INTERACTING = "non-interacting"
    PURSUER = "pursuer"


class ObservationMode(str, Enum):
    """How agents observe the other agents' implemented accelerations."""

    EXACT = "exact"
    FINITE_DIFFERENCE = "finite-difference"


class ScenarioParseError(ValueError):
    """Scenario text could not be parsed; the message names the bad field."""


class ScenarioValidationError(ValueError):
    """A parsed scenario violates the documented invariants."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__(
            "invalid scenario:\n" + "\n".join(f"  - {v}" for v in self.violations)
        )


def _vec2(value) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.shape != (2,):
        raise ValueError(f"expected a planar vector of length 2, got shape {arr.shape}")
    return arr


@dataclass(frozen=True, eq=False)
class AgentState:
    """Planar position (m) and velocity (m/s) of one agent.

    Treated as immutable after construction; simulation steps return new
    instances instead of mutating.
    """

    position: np.ndarray
    velocity: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "position", _vec2(self.position))
        object.__setattr__(self, "velocity", _vec2(self.velocity))


@dataclass(frozen=True, eq=False)
class AgentConfig:
    """Static per-agent setup: body radius, destination, policy knobs.

    chi is the responsibility share of the decentralized policy (1 takes the
    whole constraint, 0.5 splits it evenly); target names the pursued agent
    index for the pursuer policy and defaults to the lowest other index.
    """

    radius: float
    destination: np.ndarray
    controller: Controller
    chi: float = 1.0
    target: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "radius", float(self.radius))
        object.__setattr__(self, "destination", _vec2(self.destination))
        object.__setattr__(self, "controller", Controller(self.controller))
        object.__setattr__(self, "chi", float(self.chi))


@dataclass(frozen=True)
class BarrierParams:
    """Separation radius and constraint dynamics of the pair barrier.

    The enforced constraint is h'' + l1 h' + l0 h >= 0 on h = xi.xi - r^2.
    lambda1 is the more negative root of s^2 + l1 s + l0; it is computed once
    here and stored so every use site agrees on the value (NaN when the roots
    are complex, which validation reports as l1^2 < 4 l0).
    """

    r: float
    l0: float
    l1: float
    lambda1: float = field(init=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "r", float(self.r))
        object.__setattr__(self, "l0", float(self.l0))
        object.__setattr__(self, "l1", float(self.l1))
        disc = self.l1 * self.l1 - 4.0 * self.l0
        lam = (-self.l1 - math.sqrt(disc)) / 2.0 if disc >= 0.0 else math.nan
        object.__setattr__(self, "lambda1", lam)


@dataclass(frozen=True, eq=False)
class AgentSpec:
    """One agent of a scenario: its static config plus its initial state."""

    config: AgentConfig
    state: AgentState


@dataclass(frozen=True, eq=False)
class Scenario:
    """A complete, deterministic run description.

    symmetry_perturbation is a one-time offset (m) added to the first agent's
    initial y position when the simulation starts; it exists to break exact
    mirror symmetry without editing the agent coordinates.
    """

    agents: tuple[AgentSpec, ...]
    barrier: BarrierParams
    horizon: float
    dt: float = 0.05
    observation: ObservationMode = ObservationMode.EXACT
    symmetry_perturbation: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        object.__setattr__(self, "observation", ObservationMode(self.observation))
        object.__setattr__(self, "horizon", float(self.horizon))
        object.__setattr__(self, "dt", float(self.dt))
        object.__setattr__(
            self, "symmetry_perturbation", float(self.symmetry_perturbation)
        )


def validate_scenario(s: Scenario) -> list[str]:
    """Collect every invariant violation; an empty list means runnable.

    Pure function of the scenario: same input, same list, no mutation.
    """
    v: list[str] = []
    n = len(s.agents)
    if n < 2:
        v.append(f"scenario: needs at least 2 agents, has {n}")

    for i, agent in enumerate(s.agents):
        c, st = agent.config, agent.state
        if not np.all(np.isfinite(st.position)) or not np.all(np.isfinite(st.velocity)):
            v.append(f"agent {i}: initial state has non-finite entries")
        if not np.all(np.isfinite(c.destination)):
            v.append(f"agent {i}: destination has non-finite entries")
        if not (c.radius > 0.0):
            v.append(f"agent {i}: radius must be > 0, got {c.radius:g}")
        if c.chi not in (1.0, 0.5):
            v.append(f"agent {i}: chi must be 1 or 0.5, got {c.chi:g}")
        if c.controller is Controller.PURSUER and c.target is not None:
            if not (0 <= c.target < n) or c.target == i:
                v.append(f"agent {i}: pursuer target {c.target} is not another agent")
        if c.controller is Controller.PURSUER and c.target is None and n < 2:
            v.append(f"agent {i}: pursuer has no other agent to follow")

    b = s.barrier
    if not (b.l0 > 0.0):
        v.append(f"barrier: l0 must be > 0, got {b.l0:g}")
    if not (b.l1 > 0.0):
        v.append(f"barrier: l1 must be > 0, got {b.l1:g}")
    if b.l1 * b.l1 < 4.0 * b.l0:
        v.append(
            f"barrier: l1² < 4·l0 ({b.l1 * b.l1:g} < {4.0 * b.l0:g}), "
            "roots must be real"
        )
    if s.agents:
        r_min = 2.0 * max(a.config.radius for a in s.agents)
        if b.r < r_min:
            v.append(f"barrier: r must be >= 2*max(radius) = {r_min:g}, got {b.r:g}")
    if not (s.dt > 0.0):
        v.append(f"scenario: dt must be > 0, got {s.dt:g}")
    if not (s.horizon > s.dt):
        v.append(f"scenario: horizon must exceed dt, got {s.horizon:g} <= {s.dt:g}")
    if s.symmetry_perturbation < 0.0:
        v.append(
            f"scenario: symmetry_perturbation must be >= 0, "
            f"got {s.symmetry_perturbation:g}"
        )

    for i in range(n):
        for j in range(i + 1, n):
            dist = float(
                np.linalg.norm(s.agents[i].state.position - s.agents[j].state.position)
            )
            if not (dist > b.r):
                v.append(
                    f"agents {i},{j}: initial distance not > r "
                    f"({dist:g} <= {b.r:g})"
                )
    return v


# --- scenario file format ---------------------------------------------------
#
# INI-style text, one section per agent, e.g.
#
#   [scenario]
#   horizon = 30.0
#   dt = 0.05                      # optional, default 0.05
#   observation = exact            # optional, default exact
#   symmetry_perturbation = 0.0    # optional, default 0
#
#   [barrier]
#   r = 4.0
#   l0 = 6.0
#   l1 = 5.0
#
#   [agent left]
#   controller = pcca
#   radius = 2.0
#   position = -10.0, 0.0
#   velocity = 0.0, 0.0
#   destination = 10.0, 0.0
#
# Agent order in the file is agent index order. chi and target are optional
# per-agent keys.

_SCENARIO_KEYS = {"horizon", "dt", "observation", "symmetry_perturbation"}
_BARRIER_KEYS = {"r", "l0", "l1"}
_AGENT_KEYS = {"controller", "radius", "position", "velocity", "destination", "chi", "target"}


def _parse_float(section: str, key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ScenarioParseError(f"[{section}] {key}: not a number: {raw!r}") from None


def _parse_int(section: str, key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ScenarioParseError(f"[{section}] {key}: not an integer: {raw!r}") from None


def _parse_vec2(section: str, key: str, raw: str) -> np.ndarray:
    parts = raw.replace(",", " ").split()
    if len(parts) != 2:
        raise ScenarioParseError(
            f"[{section}] {key}: expected two numbers, got {raw!r}"
        )
    return np.array([_parse_float(section, key, p) for p in parts])


def _require(cp: configparser.ConfigParser, section: str, key: str) -> str:
    if not cp.has_option(section, key):
        raise ScenarioParseError(f"[{section}] missing required key {key!r}")
    return cp.get(section, key)


def _check_keys(section: str, present, allowed) -> None:
    unknown = sorted(set(present) - allowed)
    if unknown:
        raise ScenarioParseError(f"[{section}] unknown key(s): {', '.join(unknown)}")


def load_scenario(text: str) -> Scenario:
    """Parse scenario text; raises ScenarioParseError / ScenarioValidationError."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ScenarioParseError(f"scenario text: {exc}") from exc

    agent_sections = []
    for name in cp.sections():
        if name == "scenario" or name == "barrier":
            continue
        if name == "agent" or name.startswith("agent "):
            agent_sections.append(name)
        else:
            raise ScenarioParseError(f"unknown section [{name}]")
    if "scenario" not in cp.sections():
        raise ScenarioParseError("missing [scenario] section")
    if "barrier" not in cp.sections():
        raise ScenarioParseError("missing [barrier] section")

    _check_keys("scenario", cp.options("scenario"), _SCENARIO_KEYS)
    _check_keys("barrier", cp.options("barrier"), _BARRIER_KEYS)

    horizon = _parse_float("scenario", "horizon", _require(cp, "scenario", "horizon"))
    dt = 0.05
    if cp.has_option("scenario", "dt"):
        dt = _parse_float("scenario", "dt", cp.get("scenario", "dt"))
    observation = ObservationMode.EXACT
    if cp.has_option("scenario", "observation"):
        raw = cp.get("scenario", "observation")
        try:
            observation = ObservationMode(raw)
        except ValueError:
            choices = ", ".join(m.value for m in ObservationMode)
            raise ScenarioParseError(
                f"[scenario] observation: unknown mode {raw!r} (choices: {choices})"
            ) from None
    perturbation = 0.0
    if cp.has_option("scenario", "symmetry_perturbation"):
        perturbation = _parse_float(
            "scenario", "symmetry_perturbation",
            cp.get("scenario", "symmetry_perturbation"),
        )

    barrier = BarrierParams(
        r=_parse_float("barrier", "r", _require(cp, "barrier", "r")),
        l0=_parse_float("barrier", "l0", _require(cp, "barrier", "l0")),
        l1=_parse_float("barrier", "l1", _require(cp, "barrier", "l1")),
    )

    agents = []
    for name in agent_sections:
        _check_keys(name, cp.options(name), _AGENT_KEYS)
        raw_controller = _require(cp, name, "controller")
        try:
            controller = Controller(raw_controller)
        except ValueError:
            choices = ", ".join(c.value for c in Controller)
            raise ScenarioParseError(
                f"[{name}] controller: unknown controller {raw_controller!r} "
                f"(choices: {choices})"
            ) from None
        chi = 1.0
        if cp.has_option(name, "chi"):
            chi = _parse_float(name, "chi", cp.get(name, "chi"))
        target = None
        if cp.has_option(name, "target"):
            target = _parse_int(name, "target", cp.get(name, "target"))
        config = AgentConfig(
            radius=_parse_float(name, "radius", _require(cp, name, "radius")),
            destination=_parse_vec2(name, "destination", _require(cp, name, "destination")),
            controller=controller,
            chi=chi,
            target=target,
        )
        state = AgentState(
            position=_parse_vec2(name, "position", _require(cp, name, "position")),
            velocity=_parse_vec2(name, "velocity", _require(cp, name, "velocity")),
        )
        agents.append(AgentSpec(config=config, state=state))

    scenario = Scenario(
        agents=tuple(agents),
        barrier=barrier,
        horizon=horizon,
        dt=dt,
        observation=observation,
        symmetry_perturbation=perturbation,
    )
    violations = validate_scenario(scenario)
    if violations:
        raise ScenarioValidationError(violations)
    return scenario


def load_scenario_file(path: str | Path) -> Scenario:
    return load_scenario(Path(path).read_text())


def save_scenario(s: Scenario) -> str:
    """Serialize to the text format; floats use repr so load o save round-trips."""
    lines = [
        "[scenario]",
        f"horizon = {float(s.horizon)!r}",
        f"dt = {float(s.dt)!r}",
        f"observation = {s.observation.value}",
        f"symmetry_perturbation = {float(s.symmetry_perturbation)!r}",
        "",
        "[barrier]",
        f"r = {float(s.barrier.r)!r}",
        f"l0 = {float(s.barrier.l0)!r}",
        f"l1 = {float(s.barrier.l1)!r}",
    ]
    for i, agent in enumerate(s.agents):
        c, st = agent.config, agent.state
        lines += [
            "",
            f"[agent {i}]",
            f"controller = {c.controller.value}",
            f"radius = {float(c.radius)!r}",
            f"position = {float(st.position[0])!r}, {float(st.position[1])!r}",
            f"velocity = {float(st.velocity[0])!r}, {float(st.velocity[1])!r}",
            f"destination = {float(c.destination[0])!r}, {float(c.destination[1])!r}",
        ]
        if c.chi != 1.0:
            lines.append(f"chi = {float(c.chi)!r}")
        if c.target is not None:
            lines.append(f"target = {c.target}")
    return "\n".join(lines) + "\n"


def scenario_digest(s: Scenario) -> str:
    """Short stable fingerprint of the canonical scenario text."""
    return hashlib.sha256(save_scenario(s).encode()).hexdigest()[:12]
