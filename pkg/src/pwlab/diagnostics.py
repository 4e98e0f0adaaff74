"""Post-processing diagnostics over trajectories.

Everything here is pure: trajectories are read, never modified. The virial
quantities use the quadrature series recorded during the run, so the
finite-difference cross-checks are genuine (two independent routes to the
same second derivative).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .domain import Domain
from .dynamics import Cause, DampingProfile, State, Trajectory
from .errors import (
    InsufficientSamples,
    NoDissipation,
    NonPositiveEnergy,
    NotKPlus,
    WindowOutOfRange,
)
from .functionals import Verdict, WellConstants, classify
from .ground_state import GroundState

import enum


@dataclass(frozen=True)
class VirialSample:
    """M = ||u||_L2^2 with its derivative and the formula for M''."""

    t: float
    M: float
    Mp: float
    Mpp_formula: float


@dataclass(frozen=True)
class VirialReport:
    samples: list[VirialSample]
    mpp_fd: np.ndarray          # central differences of M; NaN at endpoints
    mp_fd: np.ndarray           # central differences of M; NaN at endpoints
    max_mpp_deviation: float
    max_mp_deviation: float
    convexity_tail_ok: bool     # M'' - c_e * E' >= 0 on the tail window


def _uniform_prefix(ts: np.ndarray) -> int:
    """Length of the initial run of uniformly spaced samples."""
    if len(ts) < 2:
        return len(ts)
    dt = ts[1] - ts[0]
    diffs = np.diff(ts)
    bad = np.nonzero(np.abs(diffs - dt) > 1e-9 * max(dt, 1e-30))[0]
    return len(ts) if bad.size == 0 else int(bad[0]) + 1


def virial_series(traj: Trajectory, c_e: float = 1.0,
                  tail_fraction: float = 0.4) -> VirialReport:
    """Virial samples plus finite-difference M'' over the uniform samples.

    The formula route is
        M'' = -2||u||_H01^2 + 2||u||_L4^4 + 2||u_t||_L2^2 - 2 int gamma u u_t
    and the finite-difference route is the centered second difference of the
    recorded M series; they agree to O(dt^2). The convexity surrogate flag
    checks M'' - c_e * E' >= 0 on the trailing tail_fraction of the samples.
    """
    n = _uniform_prefix(traj.ts)
    if n < 5:
        raise InsufficientSamples(f"virial_series needs >= 5 uniform samples, got {n}")
    ts = traj.ts[:n]
    m = traj.l2_sq[:n]
    mp = 2.0 * traj.u_ut[:n]
    h01_sq = traj.k[:n] + traj.l4_4[:n]
    mpp = (-2.0 * h01_sq + 2.0 * traj.l4_4[:n]
           + 2.0 * traj.l2t[:n] ** 2 - 2.0 * traj.gamma_u_ut[:n])
    dt = ts[1] - ts[0]

    mpp_fd = np.full(n, np.nan)
    mpp_fd[1:-1] = (m[2:] - 2.0 * m[1:-1] + m[:-2]) / dt**2
    mp_fd = np.full(n, np.nan)
    mp_fd[1:-1] = (m[2:] - m[:-2]) / (2.0 * dt)

    interior = slice(1, n - 1)
    max_mpp = float(np.max(np.abs(mpp_fd[interior] - mpp[interior])))
    max_mp = float(np.max(np.abs(mp_fd[interior] - mp[interior])))

    eprime = -traj.gamma_ut2[:n]
    tail = slice(max(0, int(n * (1.0 - tail_fraction))), n)
    convexity = bool(np.all(mpp[tail] - c_e * eprime[tail] >= 0.0))

    samples = [VirialSample(float(ts[i]), float(m[i]), float(mp[i]),
                            float(mpp[i])) for i in range(n)]
    return VirialReport(samples, mpp_fd, mp_fd, max_mpp, max_mp, convexity)


@dataclass(frozen=True)
class DecayFit:
    """Least-squares fit of log E(t) ~ log c - lambda t on a window."""

    lambda_fit: float
    c_fit: float
    r_squared: float
    window: tuple[float, float]


def fit_decay(traj: Trajectory, window: tuple[float, float] | None = None,
              floor_factor: float = 1e-14) -> DecayFit:
    """Fit an exponential to the energy on the window (default: last 60%).

    Samples where E has fallen below floor_factor * E(0) are dropped (the
    window is truncated); if nothing positive remains, NonPositiveEnergy.
    """
    ts, e = traj.ts, traj.e
    if window is None:
        t0 = ts[0] + 0.4 * (ts[-1] - ts[0])
        window = (float(t0), float(ts[-1]))
    lo, hi = window
    mask = (ts >= lo) & (ts <= hi)
    floor = floor_factor * max(abs(traj.e0), 1e-300)
    mask &= e > floor
    if int(np.sum(mask)) < 2:
        raise NonPositiveEnergy(
            f"no usable energy samples in window [{lo:g}, {hi:g}]"
        )
    t = ts[mask]
    log_e = np.log(e[mask])
    coeffs = np.polyfit(t, log_e, 1)
    pred = np.polyval(coeffs, t)
    ss_res = float(np.sum((log_e - pred) ** 2))
    ss_tot = float(np.sum((log_e - np.mean(log_e)) ** 2))
    if ss_tot == 0.0:
        r2 = 1.0 if ss_res < 1e-20 else 0.0
    else:
        r2 = max(0.0, min(1.0, 1.0 - ss_res / ss_tot))
    return DecayFit(lambda_fit=float(-coeffs[0]), c_fit=float(math.exp(coeffs[1])),
                    r_squared=r2, window=(float(t[0]), float(t[-1])))


def gcc_check_1d(dom: Domain, gamma: DampingProfile) -> tuple[bool, float]:
    """1D geometric control: reflecting rays on [0, L] all meet the core.

    Returns (holds, L_control) with L_control = 2*max(a, L-b) + (b-a), the
    longest round trip a ray can make before spending (b-a) inside the core.
    """
    size = dom.size
    if gamma.core is None:
        return False, math.inf
    a, b = gamma.core
    if b - a <= 0:
        return False, math.inf
    return True, 2.0 * max(a, size - b) + (b - a)


@dataclass(frozen=True)
class ObservabilityReport:
    """Measured ratio E(t0) / dissipation on [t0, t0+T], with the window samples."""

    T_window: float
    ratio: float
    samples: list[tuple[float, float, float]]  # (t, E, dissipated)


def observability_ratio(dom: Domain, gamma: DampingProfile, traj: Trajectory,
                        t0: float, T: float) -> ObservabilityReport:
    """Observability ratio from the ledger's dissipated increments."""
    eps = 1e-9 * max(T, 1.0)
    if t0 < traj.ts[0] - eps or t0 + T > traj.ts[-1] + eps:
        raise WindowOutOfRange(
            f"window [{t0:g}, {t0 + T:g}] not covered by [{traj.ts[0]:g}, {traj.ts[-1]:g}]"
        )
    i0 = traj.sample_index_at(t0)
    i1 = traj.sample_index_at(t0 + T)
    denom = float(traj.dissipated[i1] - traj.dissipated[i0])
    if denom <= 0.0:
        raise NoDissipation(
            f"no dissipation on [{t0:g}, {t0 + T:g}] (is gamma zero there?)"
        )
    e0 = float(traj.e[i0])
    samples = [(float(traj.ts[i]), float(traj.e[i]), float(traj.dissipated[i]))
               for i in range(i0, i1 + 1)]
    return ObservabilityReport(T_window=float(traj.ts[i1] - traj.ts[i0]),
                               ratio=e0 / denom, samples=samples)


@dataclass(frozen=True)
class LyapunovReport:
    e_eps: float
    sandwich_ok: bool
    eps_max: float  # largest admissible epsilon found by bisection


def lyapunov_eps(dom: Domain, wc: WellConstants, state: State,
                 eps: float) -> LyapunovReport:
    """Perturbed energy E_eps = E + eps * int(u u_t) and its sandwich check.

    sandwich_ok is E/2 <= E_eps <= 3E/2. The state must classify as K+
    (NotKPlus otherwise). eps_max is the supremum of admissible epsilons,
    located by bisection on the sandwich predicate.
    """
    cls = classify(dom, wc, state.u, state.ut)
    if cls.verdict is not Verdict.K_PLUS:
        raise NotKPlus(f"state classifies as {cls.verdict.value}")
    from .functionals import energies

    tri = energies(dom, state.u, state.ut)
    p = dom.inner_l2(state.u, state.ut)
    e_eps = tri.E + eps * p

    def ok(candidate: float) -> bool:
        val = tri.E + candidate * p
        slack = 1e-12 * max(abs(tri.E), 1.0)
        return 0.5 * tri.E - slack <= val <= 1.5 * tri.E + slack

    if abs(p) == 0.0 or tri.E == 0.0:
        eps_max = math.inf if ok(1.0) else 0.0
    else:
        hi = 1.0
        for _ in range(200):
            if not ok(hi):
                break
            hi *= 2.0
        else:
            hi = math.inf
        if math.isinf(hi):
            eps_max = math.inf
        else:
            lo = 0.0
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                if ok(mid):
                    lo = mid
                else:
                    hi = mid
            eps_max = lo
    return LyapunovReport(e_eps=e_eps, sandwich_ok=ok(eps), eps_max=eps_max)


class Equilibrium(enum.Enum):
    ZERO = "Zero"
    PLUS_Q = "PlusQ"
    MINUS_Q = "MinusQ"
    UNDECIDED = "Undecided"


@dataclass(frozen=True)
class EquilibriumReport:
    verdict: Equilibrium
    distances: dict[str, float]     # H01+L2 distance to each candidate
    e_tail: float
    nearest_level: float            # closest of the J-levels {0, d}


def detect_equilibrium(gs: GroundState, traj: Trajectory,
                       t_tail: float | None = None,
                       rel_tol: float = 0.05) -> EquilibriumReport:
    """Match the trajectory tail against the candidate set {0, Q, -Q}.

    Measures ||u(t_tail) - w||_H01 + ||u_t(t_tail)||_L2 for each candidate
    and returns the argmin when it is below rel_tol * ||Q||_H01, else
    Undecided. Also reports the tail energy against the levels {0, d}.
    Requires a completed trajectory with stored fields.
    """
    if traj.cause is not Cause.COMPLETED:
        raise WindowOutOfRange("detect_equilibrium requires a completed trajectory")
    if traj.us is None:
        raise WindowOutOfRange("detect_equilibrium requires stored field snapshots")
    dom = gs.domain
    idx = len(traj) - 1 if t_tail is None else traj.sample_index_at(t_tail)
    u = traj.us[idx]
    ut = traj.uts[idx]
    ut_l2 = math.sqrt(dom.l2_norm_sq(ut))
    q_h01 = math.sqrt(dom.h01_norm_sq(gs.q))

    candidates = {
        Equilibrium.ZERO: dom.zero_field(),
        Equilibrium.PLUS_Q: gs.q,
        Equilibrium.MINUS_Q: -gs.q,
    }
    distances = {}
    best, best_dist = None, math.inf
    for name, w in candidates.items():
        dist = math.sqrt(dom.h01_norm_sq(u - w)) + ut_l2
        distances[name.value] = dist
        if dist < best_dist:
            best, best_dist = name, dist

    e_tail = float(traj.e[idx])
    nearest_level = 0.0 if abs(e_tail) <= abs(e_tail - gs.d_level) else gs.d_level
    verdict = best if best_dist < rel_tol * q_h01 else Equilibrium.UNDECIDED
    return EquilibriumReport(verdict=verdict, distances=distances,
                             e_tail=e_tail, nearest_level=nearest_level)
