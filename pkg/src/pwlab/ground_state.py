"""Ground state Q of -Lap Q + beta Q = Q^3 and the well level d = J(Q).

Two independent routes to the same object:

  * petviashvili_solve: normalized fixed-point iteration in coefficient
    space, Q <- m^{3/2} (-Lap+beta)^{-1}(Q^3) with the stabilizing factor
    m = <(-Lap+beta)Q, Q> / <Q^3, Q>; m -> 1 at the solution.
  * shooting_oracle: integrates the stationary ODE from the left endpoint
    (or from r = 0 for the ball) and bisects on the initial slope until the
    far Dirichlet condition is met.

certify_well_constants then sweeps random trial fields through the Nehari
projection to confirm that J(lambda* u) >= d, which is what makes d usable
as the well level.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .domain import Domain, DomainSpec, Geometry, build_domain
from .errors import (
    BracketingFailure,
    CertificationFailure,
    NonConvergence,
    SignFlip,
    ZeroField,
)
from .functionals import WellConstants, energies, lambda_star


@dataclass
class GroundState:
    """Converged Q with its level, residual and certification flag.

    coeffs is the authoritative spectral representation (it round-trips
    bit-exactly through the JSON record); q holds the grid values.
    """

    domain: Domain
    q: np.ndarray
    d_level: float
    residual: float
    iterations: int
    certified: bool = False
    coeffs: np.ndarray | None = None

    def __post_init__(self):
        if self.coeffs is None:
            self.coeffs = self.domain.forward(self.q)


def _residual(dom: Domain, c: np.ndarray, nc: np.ndarray) -> float:
    """Relative L2 residual of (-Lap+beta)Q = Q^3 in coefficient space."""
    r = dom.apply_operator(c) - nc
    denom = float(np.sqrt(np.sum(nc * nc)))
    if denom == 0.0:
        return float("inf")
    return float(np.sqrt(np.sum(r * r))) / denom


def _nonlinear_coeffs(dom: Domain, c: np.ndarray) -> np.ndarray:
    """Coefficients of the projected cubic source term."""
    return dom.forward(dom.cubic_term(dom.inverse(c)))


def default_seed(dom: Domain) -> np.ndarray:
    """First Dirichlet eigenfunction scaled to unit H01 norm (deterministic)."""
    c = np.zeros(dom.n_modes)
    c[0] = 1.0 / math.sqrt(dom.parseval_factor * (dom.eigenvalues[0] + dom.beta))
    return dom.inverse(c)


def petviashvili_solve(dom: Domain, tol: float = 1e-10,
                       max_iters: int = 10_000,
                       seed_field: np.ndarray | None = None) -> GroundState:
    """Run the stabilized fixed-point iteration to the positive ground state.

    Raises NonConvergence if the residual does not reach tol within
    max_iters, and SignFlip if the iterate develops a negative part larger
    than 1e-6 of its maximum (restart with a different seed in that case).
    """
    u = default_seed(dom) if seed_field is None else np.asarray(seed_field, float)
    c = dom.forward(u)
    m_final = 0.0
    for it in range(1, max_iters + 1):
        nc = _nonlinear_coeffs(dom, c)
        num = dom.parseval_factor * float(
            np.sum((dom.eigenvalues + dom.beta) * c * c)
        )
        den = dom.parseval_factor * float(np.sum(nc * c))
        if den <= 0.0:
            raise SignFlip(f"nonlinear pairing <u^3, u> = {den:g} <= 0 at iteration {it}")
        m = num / den
        c = m**1.5 * dom.solve_operator(nc)
        u = dom.inverse(c)
        if np.min(u) < -1e-6 * np.max(u):
            raise SignFlip(
                f"iterate developed a negative part at iteration {it}: "
                f"min = {np.min(u):g}, max = {np.max(u):g}"
            )
        nc = _nonlinear_coeffs(dom, c)
        res = _residual(dom, c, nc)
        m_final = m
        if res <= tol and abs(m - 1.0) <= tol:
            tri = energies(dom, u, dom.zero_field())
            return GroundState(dom, u, tri.J, res, it)
    raise NonConvergence(
        f"Petviashvili residual {res:g} (m = {m_final:g}) after {max_iters} iterations"
    )


# -- shooting oracle ----------------------------------------------------------


def _first_zero_interval(beta: float, slope: float, x_cap: float) -> float:
    """First positive zero of the solution of u'' = beta*u - u^3, u(0)=0, u'(0)=slope."""

    def rhs(x, y):
        return [y[1], beta * y[0] - y[0] ** 3]

    def hit_zero(x, y):
        return y[0]

    hit_zero.terminal = True
    hit_zero.direction = -1
    sol = solve_ivp(rhs, (0.0, x_cap), [0.0, slope], events=hit_zero,
                    rtol=3e-14, atol=1e-16, dense_output=False, method="DOP853")
    if sol.t_events[0].size:
        return float(sol.t_events[0][0])
    return float("inf")


def _first_zero_ball(beta: float, amplitude: float, r_cap: float) -> float:
    """First zero radius of u'' + (2/r)u' = beta*u - u^3 with u(0) = amplitude."""

    def rhs(r, y):
        return [y[1], beta * y[0] - y[0] ** 3 - 2.0 * y[1] / r]

    def hit_zero(r, y):
        return y[0]

    hit_zero.terminal = True
    hit_zero.direction = -1
    a = amplitude
    r0 = 1e-8 * r_cap
    # regular-branch Taylor start removes the coordinate singularity at r = 0
    u0 = a + (beta * a - a**3) * r0**2 / 6.0
    du0 = (beta * a - a**3) * r0 / 3.0
    sol = solve_ivp(rhs, (r0, r_cap), [u0, du0], events=hit_zero,
                    rtol=3e-14, atol=1e-16, dense_output=False, method="DOP853")
    if sol.t_events[0].size:
        return float(sol.t_events[0][0])
    return float("inf")


def _bisect_parameter(first_zero, target: float) -> tuple[float, int]:
    """Bisection on the shooting parameter; first_zero must be decreasing."""
    lo = hi = 1.0
    for _ in range(80):
        if first_zero(hi) < target:
            break
        hi *= 2.0
    else:
        raise BracketingFailure("no blow-through slope found while expanding upward")
    for _ in range(80):
        if first_zero(lo) > target:
            break
        lo /= 2.0
    else:
        raise BracketingFailure("no slow slope found while expanding downward")
    iters = 0
    while hi - lo > 1e-15 * hi:
        iters += 1
        mid = 0.5 * (lo + hi)
        if first_zero(mid) > target:
            lo = mid
        else:
            hi = mid
        if iters > 200:
            break
    return 0.5 * (lo + hi), iters


def shooting_oracle(dom: Domain) -> GroundState:
    """Compute Q by shooting on the stationary ODE; independent of Petviashvili."""
    size, beta = dom.size, dom.beta
    cap = 4.0 * size
    if dom.is_ball:
        param, iters = _bisect_parameter(
            lambda a: _first_zero_ball(beta, a, cap), size
        )

        def rhs(r, y):
            return [y[1], beta * y[0] - y[0] ** 3 - 2.0 * y[1] / r]

        r0 = 1e-8 * cap
        u0 = param + (beta * param - param**3) * r0**2 / 6.0
        du0 = (beta * param - param**3) * r0 / 3.0
        sol = solve_ivp(rhs, (r0, size), [u0, du0], rtol=3e-14, atol=1e-16,
                        dense_output=True, method="DOP853")
        u_nodes = sol.sol(dom.grid_points)[0]
        q = dom.grid_points * u_nodes
    else:
        param, iters = _bisect_parameter(
            lambda s: _first_zero_interval(beta, s, cap), size
        )

        def rhs(x, y):
            return [y[1], beta * y[0] - y[0] ** 3]

        sol = solve_ivp(rhs, (0.0, size), [0.0, param], rtol=3e-14, atol=1e-16,
                        dense_output=True, method="DOP853")
        q = sol.sol(dom.grid_points)[0]

    c = dom.forward(q)
    res = _residual(dom, c, _nonlinear_coeffs(dom, c))
    tri = energies(dom, q, dom.zero_field())
    return GroundState(dom, q, tri.J, res, iters)


# -- Nehari projection and certification --------------------------------------


def nehari_project(dom: Domain, u: np.ndarray) -> np.ndarray:
    """Scale u onto the Nehari set: returns lambda*(u) * u, with K = 0."""
    return lambda_star(dom, u) * u


def certify_well_constants(gs: GroundState, trial_count: int = 1000,
                           seed: int = 0, tol: float = 1e-6) -> WellConstants:
    """Sweep random trials through the Nehari projection against d = J(Q).

    Every projected trial must satisfy J >= d*(1 - tol); a violation means Q
    is not the constrained minimizer on this grid and raises
    CertificationFailure. On success gs.certified is set and the well
    constants are returned (x_pm at delta = 0).
    """
    dom = gs.domain
    d = gs.d_level
    rng = np.random.default_rng(seed)
    k = np.arange(1, dom.n_modes + 1)
    decays = (0.0, 1.0, 2.0)
    for i in range(trial_count):
        c = rng.standard_normal(dom.n_modes) / (1.0 + k) ** decays[i % 3]
        u = dom.inverse(c)
        try:
            j_proj = energies(dom, nehari_project(dom, u), dom.zero_field()).J
        except ZeroField:
            continue
        if j_proj < d * (1.0 - tol):
            raise CertificationFailure(
                f"trial {i}: J(lambda* u) = {j_proj:.12g} < d = {d:.12g}",
                trial_index=i, trial_value=j_proj,
            )
    gs.certified = True
    x0 = 2.0 * math.sqrt(d)
    return WellConstants(d=d, q_l4_norm_4=dom.l4_norm_4(gs.q),
                         delta=0.0, x_minus=x0, x_plus=x0)


# -- serialization -------------------------------------------------------------


def ground_state_record(gs: GroundState) -> dict:
    """JSON-ready record; coefficients as 17-significant-digit decimal strings."""
    dom = gs.domain
    coeffs = gs.coeffs
    return {
        "geometry": dom.spec.geometry.value,
        "L_or_R": dom.size,
        "beta": dom.beta,
        "n_modes": dom.n_modes,
        "d": gs.d_level,
        "residual": gs.residual,
        "coeffs": [f"{c:.17g}" for c in coeffs],
    }


def ground_state_from_record(record: dict) -> GroundState:
    """Rebuild a GroundState (and its domain) from a serialized record."""
    spec = DomainSpec(
        geometry=Geometry(record["geometry"]),
        size=float(record["L_or_R"]),
        n_modes=int(record["n_modes"]),
        beta=float(record["beta"]),
    )
    dom = build_domain(spec)
    coeffs = np.array([float(s) for s in record["coeffs"]])
    q = dom.inverse(coeffs)
    res = _residual(dom, coeffs, _nonlinear_coeffs(dom, coeffs))
    return GroundState(dom, q, float(record["d"]), res, 0, coeffs=coeffs)


def save_ground_state(gs: GroundState, path: str) -> None:
    """Atomic write (temp file + rename) of the ground-state record."""
    record = ground_state_record(gs)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(record, fh, indent=2)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def load_ground_state(path: str) -> GroundState:
    with open(path) as fh:
        return ground_state_from_record(json.load(fh))
