"""Static energy J, total energy E, Nehari functional K and well geometry.

Conventions (all integrals over the domain, 3D measure on the ball):

    J(u)     = 1/2 ||u||_{H01}^2 - 1/4 ||u||_{L4}^4
    E(u, v)  = J(u) + 1/2 ||v||_{L2}^2
    K(u)     = ||u||_{H01}^2 - ||u||_{L4}^4

The well level d = J(Q) = 1/4 ||Q||_{L4}^4 and the curve
alpha(x) = x^2/2 - x^4/(4 ||Q||_{L4}^4) split sub-level sets of J into the
two branches x <= x_minus and x >= x_plus with x_pm = 2 sqrt(d +- sqrt(d*delta)).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .domain import Domain
from .errors import (
    DeltaOutOfRange,
    NegativeInput,
    PreconditionViolated,
    ZeroField,
)

# Inequalities that are exact identities on rays through Q are checked with a
# small relative slack so round-off never flips a true bound.
REL_TOL = 1e-9


@dataclass(frozen=True)
class EnergyTriple:
    """Static energy J, total energy E and Nehari functional K of a state."""

    J: float
    E: float
    K: float


@dataclass(frozen=True)
class WellConstants:
    """Well level d, ||Q||_{L4}^4 and the branch bounds x_pm at a fixed delta."""

    d: float
    q_l4_norm_4: float
    delta: float = 0.0
    x_minus: float = 0.0
    x_plus: float = 0.0


class Verdict(enum.Enum):
    K_PLUS = "KPlus"
    K_MINUS = "KMinus"
    ABOVE_THRESHOLD = "AboveThreshold"


@dataclass(frozen=True)
class Classification:
    verdict: Verdict
    margin: float


@dataclass(frozen=True)
class BoundCheck:
    name: str
    holds: bool
    slack: float


@dataclass(frozen=True)
class Lemma12Report:
    """Outcome of the explicit K-improvement bounds at a fixed delta."""

    j_value: float
    k_value: float
    branch: str  # "nonnegative" or "negative"
    checks: list[BoundCheck] = field(default_factory=list)

    @property
    def all_hold(self) -> bool:
        return all(c.holds for c in self.checks)


def energies(dom: Domain, u: np.ndarray, ut: np.ndarray) -> EnergyTriple:
    """Evaluate (J, E, K) for the state (u, ut)."""
    h01_sq = dom.h01_norm_sq(u)
    l4_4 = dom.l4_norm_4(u)
    l2t_sq = dom.l2_norm_sq(ut)
    j = 0.5 * h01_sq - 0.25 * l4_4
    return EnergyTriple(J=j, E=j + 0.5 * l2t_sq, K=h01_sq - l4_4)


def lambda_star(dom: Domain, u: np.ndarray) -> float:
    """Positive maximizer of lambda -> J(lambda*u): ||u||_{H01} / ||u||_{L4}^2."""
    h01_sq = dom.h01_norm_sq(u)
    l4_4 = dom.l4_norm_4(u)
    if h01_sq == 0.0 or l4_4 == 0.0:
        raise ZeroField("lambda_star undefined for the zero field")
    return math.sqrt(h01_sq) / math.sqrt(l4_4)


def classify(dom: Domain, wc: WellConstants, u: np.ndarray,
             ut: np.ndarray) -> Classification:
    """Place (u, ut) in K+, K- or above the well level d (E >= d, strict sets)."""
    tri = energies(dom, u, ut)
    margin = min(wc.d - tri.E, abs(tri.K))
    if tri.E >= wc.d:
        return Classification(Verdict.ABOVE_THRESHOLD, margin)
    if tri.K >= 0.0:
        return Classification(Verdict.K_PLUS, margin)
    return Classification(Verdict.K_MINUS, margin)


def explicit_sobolev_check(dom: Domain, wc: WellConstants,
                           u: np.ndarray) -> float:
    """Slack of ||u||_{L4} * ||Q||_{L4} <= ||u||_{H01}; >= 0 up to round-off."""
    h01 = math.sqrt(dom.h01_norm_sq(u))
    l4 = dom.l4_norm_4(u) ** 0.25
    return h01 - l4 * wc.q_l4_norm_4**0.25


def well_curve(wc: WellConstants, x: float) -> float:
    """alpha(x) = x^2/2 - x^4 / (4 ||Q||_{L4}^4), defined for x >= 0."""
    if np.any(np.asarray(x) < 0):
        raise NegativeInput(f"well_curve defined for x >= 0, got {x}")
    return x**2 / 2.0 - x**4 / (4.0 * wc.q_l4_norm_4)


def x_pm(wc: WellConstants, delta: float) -> tuple[float, float]:
    """Branch bounds x_pm = 2 sqrt(d +- sqrt(d*delta)) with alpha(x_pm) = d - delta."""
    if delta < 0:
        raise DeltaOutOfRange(f"delta must be >= 0, got {delta}")
    if delta > wc.d * (1.0 + REL_TOL):
        raise DeltaOutOfRange(
            f"x_minus undefined for delta = {delta:g} > d = {wc.d:g}"
        )
    root = math.sqrt(wc.d * delta)
    x_minus = 2.0 * math.sqrt(max(wc.d - root, 0.0))
    x_plus = 2.0 * math.sqrt(wc.d + root)
    return x_minus, x_plus


def with_delta(wc: WellConstants, delta: float) -> WellConstants:
    """Copy of the well constants with x_pm recomputed at the given delta."""
    xm, xp = x_pm(wc, delta)
    return WellConstants(wc.d, wc.q_l4_norm_4, delta, xm, xp)


def lemma12_bounds(dom: Domain, wc: WellConstants, delta: float,
                   u: np.ndarray) -> Lemma12Report:
    """Explicit K-improvement bounds for fields with J(u) <= d - delta.

    Nonnegative branch:  K >= sqrt(delta/d) ||u||_{H01}^2.
    Negative branch:     K <= -4 delta - 4 sqrt(d delta)  and
                         K <= -((delta + sqrt(d delta))/(d + sqrt(d delta))) ||u||_{H01}^2.

    On rays through Q with the sharp delta these are equalities, so each
    check carries a small relative slack.
    """
    if delta < 0:
        raise DeltaOutOfRange(f"delta must be >= 0, got {delta}")
    d = wc.d
    h01_sq = dom.h01_norm_sq(u)
    l4_4 = dom.l4_norm_4(u)
    j = 0.5 * h01_sq - 0.25 * l4_4
    k = h01_sq - l4_4
    scale = max(h01_sq, d)
    if j > d - delta + REL_TOL * scale:
        raise PreconditionViolated(
            f"J(u) = {j:g} exceeds d - delta = {d - delta:g}"
        )
    root = math.sqrt(d * delta)
    tol = REL_TOL * scale
    if k >= 0.0:
        bound = math.sqrt(delta / d) * h01_sq
        slack = k - bound
        checks = [BoundCheck("k_ge_sqrt_ratio_h01", slack >= -tol, slack)]
        branch = "nonnegative"
    else:
        slack_abs = (-4.0 * delta - 4.0 * root) - k
        coeff = (delta + root) / (d + root)
        slack_rel = -coeff * h01_sq - k
        checks = [
            BoundCheck("k_le_minus_4delta", slack_abs >= -tol, slack_abs),
            BoundCheck("k_le_minus_coeff_h01", slack_rel >= -tol, slack_rel),
        ]
        branch = "negative"
    return Lemma12Report(j_value=j, k_value=k, branch=branch, checks=checks)
