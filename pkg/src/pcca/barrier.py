"""Pairwise separation barriers and the linear acceleration constraints they induce.

For agents i and j with displacement xi = X_i - X_j and relative velocity
v = V_i - V_j, the separation barrier h = xi.xi - r^2 has relative degree two
from the accelerations, so the enforced inequality is placed on h'':

    h'' + l1 h' + l0 h  =  a + b (u_i - u_j)  >=  0

with a = 2 v.v + 2 l1 xi.v + l0 h and b = 2 xi. The generic relative-degree
helpers build the same kind of row from externally supplied Lie derivatives,
with either a worst-case disturbance bound or a known disturbance estimate.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import AgentState, BarrierParams

__all__ = [
    "BarrierTerms",
    "ConstraintRow",
    "DegenerateGeometryError",
    "in_reduced_admissible_set",
    "pair_barrier",
    "rcbf_row_rel1",
    "rcbf_row_rel2",
    "stacked_pair_row",
]


class DegenerateGeometryError(ValueError):
    """Two agents' centers coincide, so the pair constraint has no direction."""


@dataclass(frozen=True, eq=False)
class BarrierTerms:
    """Barrier value, its rate, and the acceleration-constraint pieces for one pair.

    The constraint on the pair (i, j) reads a + b.(u_i - u_j) >= 0.
    """

    h: float
    hdot: float
    a: float
    b: np.ndarray


@dataclass(frozen=True, eq=False)
class ConstraintRow:
    """One linear inequality, coeffs . u + offset >= 0, over some control vector."""

    coeffs: np.ndarray
    offset: float

    def __post_init__(self):
        object.__setattr__(
            self, "coeffs", np.asarray(self.coeffs, dtype=float).reshape(-1)
        )
        object.__setattr__(self, "offset", float(self.offset))


def pair_barrier(xi: AgentState, xj: AgentState, p: BarrierParams) -> BarrierTerms:
    """Barrier terms for the ordered pair (i, j).

    Swapping the arguments keeps h, hdot, a and negates b, so both orders
    describe the same inequality on u_i - u_j.
    """
    rel_pos = xi.position - xj.position
    rel_vel = xi.velocity - xj.velocity
    sq = float(rel_pos @ rel_pos)
    if sq == 0.0:
        raise DegenerateGeometryError("agent centers coincide, pair barrier undefined")
    h = sq - p.r * p.r
    hdot = 2.0 * float(rel_pos @ rel_vel)
    a = 2.0 * float(rel_vel @ rel_vel) + p.l1 * hdot + p.l0 * h
    return BarrierTerms(h=h, hdot=hdot, a=a, b=2.0 * rel_pos)


def stacked_pair_row(
    terms: BarrierTerms,
    i: int,
    j: int,
    n_agents: int,
    w_i: np.ndarray | None = None,
    w_j: np.ndarray | None = None,
) -> ConstraintRow:
    """Pair constraint as a row over the stacked control vector (2*n_agents,).

    Encodes a + b.(u_i + w_i - u_j - w_j) >= 0: the optional w terms are
    known-disturbance estimates that fold into the offset.
    """
    coeffs = np.zeros(2 * n_agents)
    coeffs[2 * i : 2 * i + 2] = terms.b
    coeffs[2 * j : 2 * j + 2] = -terms.b
    offset = terms.a
    if w_i is not None:
        offset += float(terms.b @ np.asarray(w_i, dtype=float))
    if w_j is not None:
        offset -= float(terms.b @ np.asarray(w_j, dtype=float))
    return ConstraintRow(coeffs=coeffs, offset=offset)


def _one_disturbance(w_bar, w_hat):
    if (w_bar is None) == (w_hat is None):
        raise ValueError("pass exactly one of w_bar (worst case) or w_hat (estimate)")
    if w_bar is not None and w_bar < 0.0:
        raise ValueError(f"w_bar must be >= 0, got {w_bar:g}")


def rcbf_row_rel1(
    lfh: float,
    lgh: np.ndarray,
    lph: np.ndarray,
    h: float,
    alpha_gain: float = 1.0,
    *,
    w_bar: float | None = None,
    w_hat: np.ndarray | None = None,
) -> ConstraintRow:
    """Relative-degree-one robust barrier row.

    Worst case (bound w_bar on the disturbance norm):
        lfh - ||lph|| w_bar + lgh.u + alpha_gain h >= 0
    Known disturbance estimate w_hat:
        lfh + lph.w_hat + lgh.u + alpha_gain h >= 0
    The worst-case offset is never larger, so it is the conservative row.
    """
    _one_disturbance(w_bar, w_hat)
    lgh = np.asarray(lgh, dtype=float)
    lph = np.asarray(lph, dtype=float)
    if w_bar is not None:
        offset = lfh - float(np.linalg.norm(lph)) * w_bar + alpha_gain * h
    else:
        offset = lfh + float(lph @ np.asarray(w_hat, dtype=float)) + alpha_gain * h
    return ConstraintRow(coeffs=lgh.copy(), offset=offset)


def rcbf_row_rel2(
    lf2h: float,
    lglfh: np.ndarray,
    lplfh: np.ndarray,
    lfh: float,
    h: float,
    l0: float,
    l1: float,
    *,
    w_bar: float | None = None,
    w_hat: np.ndarray | None = None,
) -> ConstraintRow:
    """Relative-degree-two robust barrier row: h'' + l1 h' + l0 h >= 0.

    Same disturbance treatment as rcbf_row_rel1, applied to the second
    derivative. With the relative double-integrator Lie derivatives this
    reproduces the pair constraint built by stacked_pair_row.
    """
    _one_disturbance(w_bar, w_hat)
    lglfh = np.asarray(lglfh, dtype=float)
    lplfh = np.asarray(lplfh, dtype=float)
    if w_bar is not None:
        offset = lf2h - float(np.linalg.norm(lplfh)) * w_bar + l1 * lfh + l0 * h
    else:
        offset = (
            lf2h + float(lplfh @ np.asarray(w_hat, dtype=float)) + l1 * lfh + l0 * h
        )
    return ConstraintRow(coeffs=lglfh.copy(), offset=offset)


def in_reduced_admissible_set(t: BarrierTerms, p: BarrierParams) -> bool:
    """Membership in {h >= 0 and hdot >= lambda1 h}, boundaries included.

    This is the subset of the safe set that the degree-two constraint keeps
    forward invariant; lambda1 is the more negative characteristic root.
    """
    return t.h >= 0.0 and (t.hdot - p.lambda1 * t.h) >= 0.0
