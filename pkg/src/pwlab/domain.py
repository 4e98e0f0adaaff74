"""Dirichlet sine-spectral discretization of an interval or a radial 3D ball.

Fields are plain float64 numpy arrays holding collocation values at the
interior grid nodes (Dirichlet endpoints are implied zero and not stored).
For the radial ball the stored field is v = r*u, which turns the 3D radial
Laplacian into the plain 1D second derivative; all physical integrals then
carry the full 4*pi*r^2 measure so energies are true 3D quantities.

Transform pair (DST-I on the uniform interior grid):

    c_k = (2/(n+1)) * sum_j f_j sin(pi j k / (n+1)),   f_j = sum_k c_k sin(pi j k / (n+1))

The uniform-weight quadrature on this grid integrates products of any two
basis functions exactly; quartic integrals are exact on the zero-padded grid
with twice the resolution (see Domain.l4_norm_4).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.fft import dst

from .errors import InvalidSpec, PoincareViolation, SizeMismatch


class Geometry(enum.Enum):
    INTERVAL = "interval"
    RADIAL_BALL = "radial_ball"


@dataclass(frozen=True)
class DomainSpec:
    """Geometry, resolution and mass parameter of the discretization.

    size is the interval length L or the ball radius R. beta may be negative
    as long as lambda_1 + beta > 0 (checked at build time).
    """

    geometry: Geometry
    size: float
    n_modes: int
    beta: float = 1.0
    dealias: bool = True


class Domain:
    """Immutable discretization: eigenvalues, grids, quadrature and transforms.

    Built through build_domain; safe to share between threads. All methods
    are pure and never mutate the domain or their arguments.
    """

    def __init__(self, spec: DomainSpec):
        if spec.size <= 0:
            raise InvalidSpec(f"domain size must be positive, got {spec.size}")
        if spec.n_modes < 8:
            raise InvalidSpec(f"n_modes must be >= 8, got {spec.n_modes}")
        n = int(spec.n_modes)
        size = float(spec.size)
        k = np.arange(1, n + 1)
        eigenvalues = (k * np.pi / size) ** 2
        if eigenvalues[0] + spec.beta <= 0:
            raise PoincareViolation(
                f"lambda_1 + beta = {eigenvalues[0] + spec.beta:g} <= 0 "
                f"(lambda_1 = {eigenvalues[0]:g}, beta = {spec.beta:g})"
            )

        self.spec = spec
        self.n_modes = n
        self.size = size
        self.beta = float(spec.beta)
        self.eigenvalues = eigenvalues
        self.is_ball = spec.geometry is Geometry.RADIAL_BALL

        h = size / (n + 1)
        self.grid_points = h * np.arange(1, n + 1)
        self.quadrature_weights = np.full(n, h)
        self.radial_weight = self.grid_points**2 if self.is_ball else None

        # 3D integrals on the ball carry the full 4*pi factor; the stored
        # field is v = r*u so dx-integrals reduce to dr-integrals of v.
        self.measure = 4.0 * np.pi if self.is_ball else 1.0
        # l2_norm_sq(f) == parseval_factor * sum(c_k^2)
        self.parseval_factor = self.measure * size / 2.0

        # Padded grid: factor-2 zero padding makes quartic integrals and the
        # projection of cubic terms alias-free for the sine basis.
        m = 2 * n if spec.dealias else n
        self.n_padded = m
        hp = size / (m + 1)
        self.padded_grid = hp * np.arange(1, m + 1)
        self.padded_weights = np.full(m, hp)

        if self.is_ball:
            # u = v/r is smooth up to r = 0, but v^4/r^2 is not a trig
            # polynomial: quartic integrals use Gauss-Legendre nodes in r.
            mq = 2 * n + 16
            nodes, weights = np.polynomial.legendre.leggauss(mq)
            r_q = 0.5 * size * (nodes + 1.0)
            self._quartic_nodes = r_q
            self._quartic_weights = 0.5 * size * weights
            self._quartic_sines = np.sin(
                np.outer(k * np.pi / size, r_q)
            )  # (n_modes, mq)

    # -- transforms ---------------------------------------------------------

    def _check_field(self, f: np.ndarray) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        if f.shape != (self.n_modes,):
            raise SizeMismatch(
                f"field has shape {f.shape}, domain expects ({self.n_modes},)"
            )
        return f

    def _check_coeffs(self, c: np.ndarray) -> np.ndarray:
        c = np.asarray(c, dtype=float)
        if c.shape != (self.n_modes,):
            raise SizeMismatch(
                f"coefficients have shape {c.shape}, domain expects ({self.n_modes},)"
            )
        return c

    def forward(self, f: np.ndarray) -> np.ndarray:
        """Grid values -> sine coefficients."""
        f = self._check_field(f)
        return dst(f, type=1) / (self.n_modes + 1)

    def inverse(self, c: np.ndarray) -> np.ndarray:
        """Sine coefficients -> grid values."""
        c = self._check_coeffs(c)
        return dst(c, type=1) / 2.0

    def eval_padded(self, c: np.ndarray) -> np.ndarray:
        """Evaluate a coefficient vector on the padded collocation grid."""
        c = self._check_coeffs(c)
        if self.n_padded == self.n_modes:
            return dst(c, type=1) / 2.0
        cp = np.zeros(self.n_padded)
        cp[: self.n_modes] = c
        return dst(cp, type=1) / 2.0

    def project_padded(self, values: np.ndarray) -> np.ndarray:
        """Project padded-grid values onto the first n_modes coefficients."""
        values = np.asarray(values, dtype=float)
        if values.shape != (self.n_padded,):
            raise SizeMismatch(
                f"padded values have shape {values.shape}, expected ({self.n_padded},)"
            )
        return (dst(values, type=1) / (self.n_padded + 1))[: self.n_modes]

    # -- norms and inner products -------------------------------------------

    def l2_norm_sq(self, f: np.ndarray) -> float:
        """Integral of |u|^2 (with the 4*pi*r^2 measure on the ball)."""
        f = self._check_field(f)
        return self.measure * float(np.sum(self.quadrature_weights * f * f))

    def inner_l2(self, f: np.ndarray, g: np.ndarray) -> float:
        """Integral of u*w over the domain."""
        f = self._check_field(f)
        g = self._check_field(g)
        return self.measure * float(np.sum(self.quadrature_weights * f * g))

    def h01_norm_sq(self, f: np.ndarray) -> float:
        """Integral of |grad u|^2 + beta |u|^2, via the coefficient form."""
        c = self.forward(f)
        return self.parseval_factor * float(
            np.sum((self.eigenvalues + self.beta) * c * c)
        )

    def l4_norm_4(self, f: np.ndarray) -> float:
        """Integral of |u|^4; exact for resolved fields when dealias is on."""
        c = self.forward(f)
        return self.l4_norm_4_from_coeffs(c)

    def l4_norm_4_from_coeffs(self, c: np.ndarray) -> float:
        c = self._check_coeffs(c)
        if self.is_ball:
            v_q = c @ self._quartic_sines
            integrand = v_q**4 / self._quartic_nodes**2
            return self.measure * float(np.sum(self._quartic_weights * integrand))
        up = self.eval_padded(c)
        return float(np.sum(self.padded_weights * up**4))

    # -- stationary operator -------------------------------------------------

    def apply_operator(self, c: np.ndarray) -> np.ndarray:
        """Multiply coefficients by lambda_k + beta (the operator -Lap + beta)."""
        c = self._check_coeffs(c)
        return (self.eigenvalues + self.beta) * c

    def solve_operator(self, c: np.ndarray) -> np.ndarray:
        """Inverse of apply_operator (well defined by the Poincare condition)."""
        c = self._check_coeffs(c)
        return c / (self.eigenvalues + self.beta)

    # -- nonlinearity ---------------------------------------------------------

    def cubic_term(self, f: np.ndarray) -> np.ndarray:
        """Collocation values of the cubic source term, dealiased if enabled.

        Interval: projection of u^3. Ball (v-representation): projection of
        v^3/r^2, the cubic source of the reduced equation for v = r*u.
        """
        f = self._check_field(f)
        if not self.spec.dealias:
            if self.is_ball:
                return f**3 / self.grid_points**2
            return f**3
        c = self.forward(f)
        vp = self.eval_padded(c)
        if self.is_ball:
            wp = vp**3 / self.padded_grid**2
        else:
            wp = vp**3
        return self.inverse(self.project_padded(wp))

    # -- helpers ---------------------------------------------------------------

    def field_from_profile(self, profile) -> np.ndarray:
        """Sample u(x) (or radial u(r)) on the grid, storing v = r*u on the ball."""
        u = np.asarray(profile(self.grid_points), dtype=float)
        if self.is_ball:
            return self.grid_points * u
        return u

    def physical_values(self, f: np.ndarray) -> np.ndarray:
        """Values of u at the grid nodes (divides out r on the ball)."""
        f = self._check_field(f)
        if self.is_ball:
            return f / self.grid_points
        return f

    def zero_field(self) -> np.ndarray:
        return np.zeros(self.n_modes)


def build_domain(spec: DomainSpec) -> Domain:
    """Construct the discretization, validating the Poincare condition."""
    return Domain(spec)


def interval_domain(length: float, n_modes: int, beta: float = 1.0,
                    dealias: bool = True) -> Domain:
    return Domain(DomainSpec(Geometry.INTERVAL, length, n_modes, beta, dealias))


def ball_domain(radius: float, n_modes: int, beta: float = 1.0,
                dealias: bool = True) -> Domain:
    return Domain(DomainSpec(Geometry.RADIAL_BALL, radius, n_modes, beta, dealias))


def random_field(dom: Domain, rng: np.random.Generator,
                 decay: float = 1.0, scale: float = 1.0) -> np.ndarray:
    """Random field with Gaussian coefficients damped like (1+k)^-decay."""
    k = np.arange(1, dom.n_modes + 1)
    c = rng.standard_normal(dom.n_modes) * scale / (1.0 + k) ** decay
    return dom.inverse(c)
