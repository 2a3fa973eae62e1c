"""Closed-form second-moment identities for the OU-Levy noise and the constants
that drive the shrinkage threshold.

Piecewise-constant functions are given by their values on the ``N`` cells
``(t_{k-1}, t_k]`` of a :class:`~semishrink.grid.GridSpec`. Integrals against the
exponential kernels are evaluated exactly per cell, so the results are
machine-precision references.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from ._validation import ValidationError, check_int, check_real, check_vector
from .basis import PHI_STAR, trig_value_matrix
from .noise import expm1_ratio


def _phi2(z):
    """``(exp(z) - 1 - z) / z^2``."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1e-2
    zs = np.where(small, z, 0.0)
    series = sum(zs**k / math.factorial(k + 2) for k in range(8))
    zb = np.where(small, 1.0, z)
    return np.where(small, series, (np.expm1(zb) - zb) / zb**2)


def _kernels(a, x):
    """Integrals over ``[0, x]`` of ``e^{ay}``, ``E1(y)`` and ``e^{ay} E1(y)``."""
    z = a * np.asarray(x, dtype=float)
    e1 = x * expm1_ratio(z)
    e2 = x * x * _phi2(z)
    e3 = 0.5 * x * x * expm1_ratio(z) ** 2
    return e1, e2, e3


def _as_cells(f, grid):
    f = np.asarray(f, dtype=float)
    if f.shape[0] != grid.N:
        raise ValidationError(f"piecewise function needs {grid.N} cell values, got {f.shape[0]}")
    return f


def _filter_cells(q, x):
    """``y_k = q y_{k-1} + x_k`` down the cell axis (axis 0)."""
    if x.ndim == 1:
        return lfilter([1.0], [1.0, -q], x)
    # filtering the contiguous axis is several times faster
    return lfilter([1.0], [1.0, -q], np.ascontiguousarray(x.T), axis=1).T


class _Recursion:
    """State of ``alpha(t) = int_0^t e^{a(t-s)} f ds`` and
    ``beta(t) = int_0^t e^{a(t+s)} f ds`` at every grid point."""

    def __init__(self, f, grid, a):
        self.f = f
        self.grid = grid
        self.a = a
        delta = grid.delta
        self.q = math.exp(a * delta)
        self.e1, self.e2, self.e3 = _kernels(a, delta)
        left = np.arange(grid.N) / grid.p
        self.w = np.exp(2 * a * left)
        if f.ndim == 2:
            self.w = self.w[:, None]
        alpha_end = _filter_cells(self.q, f * self.e1)
        beta_end = _filter_cells(self.q, f * self.w * self.q * self.e1)
        zero = np.zeros((1,) + f.shape[1:])
        # values at the left end of each cell
        self.alpha = np.concatenate([zero, alpha_end[:-1]])
        self.beta = np.concatenate([zero, beta_end[:-1]])

    def cell_integrals(self):
        """``int_cell eps_check_s(f) ds`` for every full cell."""
        a = self.a
        return 0.5 * a * ((self.alpha + self.beta) * self.e1
                          + self.f * (self.e2 + self.w * self.e3))


def _split(t, grid):
    t = check_real(t, "t", low=0.0, high=float(grid.n))
    k = min(int(math.floor(t * grid.p + 1e-12)), grid.N)
    x = t - k / grid.p
    if x < 1e-15:
        x = 0.0
    return k, x


def eps_check(f, grid, a, t):
    """``a int_0^t e^{a(t-s)} f(s) (1 + e^{2as}) / 2 ds`` for cell-valued ``f``."""
    f = _as_cells(check_vector(f, "f"), grid)
    a = check_real(a, "a", high=0.0)
    k, x = _split(t, grid)
    if a == 0.0:
        return 0.0
    rec = _Recursion(f, grid, a)
    if k == grid.N:
        alpha = rec.q * rec.alpha[-1] + f[-1] * rec.e1
        beta = rec.q * rec.beta[-1] + f[-1] * rec.w[-1] * rec.q * rec.e1
    else:
        alpha, beta = rec.alpha[k], rec.beta[k]
        if x > 0.0:
            e1, _, _ = _kernels(a, x)
            ex = math.exp(a * x)
            alpha = ex * alpha + f[k] * e1
            beta = ex * beta + f[k] * rec.w[k] * ex * e1
    return float(0.5 * a * (alpha + beta))


def tau(f, g, grid, a, t):
    """``int_0^t (f g + eps_check(f) g + f eps_check(g)) ds``.

    Multiplied by ``sigma_Q`` this is ``E I_t(f) I_t(g)`` for the OU-Levy noise.
    """
    f = _as_cells(check_vector(f, "f"), grid)
    g = _as_cells(check_vector(g, "g"), grid)
    a = check_real(a, "a", high=0.0)
    k, x = _split(t, grid)
    total = float(np.sum(f[:k] * g[:k]) * grid.delta)
    if k < grid.N and x > 0.0:
        total += f[k] * g[k] * x
    if a == 0.0:
        return total
    rf = _Recursion(f, grid, a)
    rg = _Recursion(g, grid, a)
    cf, cg = rf.cell_integrals(), rg.cell_integrals()
    total += float(np.sum(cf[:k] * g[:k] + f[:k] * cg[:k]))
    if k < grid.N and x > 0.0:
        e1, e2, e3 = _kernels(a, x)
        w = rf.w[k]
        part_f = 0.5 * a * ((rf.alpha[k] + rf.beta[k]) * e1 + f[k] * (e2 + w * e3))
        part_g = 0.5 * a * ((rg.alpha[k] + rg.beta[k]) * e1 + g[k] * (e2 + w * e3))
        total += part_f * g[k] + f[k] * part_g
    return total


def tau_matrix(F, grid, a):
    """``tau_n(f_i, f_j)`` for all columns of the ``(N, d)`` cell-value matrix ``F``."""
    F = np.asarray(F, dtype=float)
    _as_cells(F, grid)
    a = check_real(a, "a", high=0.0)
    base = F.T @ F * grid.delta
    if a == 0.0:
        return base
    C = _Recursion(F, grid, a).cell_integrals()
    cross = F.T @ C
    return base + cross + cross.T


def psi_matrix(d, grid):
    """Cell values of ``psi_1..psi_d`` on ``grid``, shape ``(N, d)``."""
    table = trig_value_matrix(d, np.arange(1, grid.p + 1) / grid.p)
    return np.tile(table, (grid.n, 1))


def gram_gaussian(d, grid, a):
    """Covariance of ``I_n(psi_j) / sqrt(n)``, ``j <= d``, for unit Brownian noise."""
    d = check_int(d, "d", minimum=1)
    if d > grid.p:
        raise ValidationError(f"d={d} exceeds p={grid.p}")
    G = tau_matrix(psi_matrix(d, grid), grid, a) / grid.n
    return 0.5 * (G + G.T)


def gram_bounds(G):
    """``(trace, lambda_max, trace - lambda_max)`` of a symmetric matrix."""
    eig = np.linalg.eigvalsh(G)
    tr = float(np.trace(G))
    return tr, float(eig[-1]), tr - float(eig[-1])


def a_check(a_max):
    a_max = check_real(a_max, "a_max", low=0.0, low_open=True)
    return -math.expm1(-a_max) / (4.0 * a_max)


def d_zero(a_max):
    """Smallest ``d >= 7`` with ``5 + ln d <= a_check(a_max) d``."""
    ac = a_check(a_max)
    d = 7
    while 5.0 + math.log(d) > ac * d:
        d += 1
    return d


def default_r_n(n):
    return math.sqrt(math.log(n + 1))


@dataclass(frozen=True)
class H2Constants:
    d: int
    n: int
    d0: int
    a_check: float
    l_star: float
    kappa_star: float
    r_n: float
    c_n: float

    @property
    def active(self):
        return self.c_n > 0.0

    def to_dict(self):
        return {k: getattr(self, k) for k in
                ("d", "n", "d0", "a_check", "l_star", "kappa_star", "r_n", "c_n")}


def shrink_threshold(d, n, bounds, r_n):
    """Vectorised ``c_n`` for arrays of ``d`` and ``r_n``; zero below the ``d0`` gate."""
    d = np.asarray(d, dtype=float)
    r_n = np.asarray(r_n, dtype=float)
    d0 = d_zero(bounds.a_max)
    gate = d >= max(7, d0)
    l_star = np.where(gate, bounds.rho_lower * (d - 6.0) / 2.0, 0.0)
    denom = n * (r_n + np.sqrt(d * bounds.kappa_star / n))
    return np.where(gate, l_star / np.where(denom > 0, denom, 1.0), 0.0)


def h2_constants(d, n, bounds, r_n=None):
    """Shrinkage constants for dimension ``d``; ``l_star = 0`` (no shrinkage) when
    ``d < max(7, d0)``."""
    d = check_int(d, "d", minimum=0)
    n = check_int(n, "n", minimum=1)
    bounds = getattr(bounds, "bounds", bounds)
    r_n = default_r_n(n) if r_n is None else check_real(r_n, "r_n", low=0, low_open=True)
    d0 = d_zero(bounds.a_max)
    l_star = bounds.rho_lower * (d - 6) / 2.0 if d >= max(7, d0) else 0.0
    kappa = bounds.kappa_star
    c_n = l_star / (n * (r_n + math.sqrt(d * kappa / n))) if l_star > 0 else 0.0
    return H2Constants(d=d, n=n, d0=d0, a_check=a_check(bounds.a_max), l_star=l_star,
                       kappa_star=kappa, r_n=r_n, c_n=c_n)


def improvement_bound(c_n, d, p, lipschitz_L, phi_star=PHI_STAR):
    """Upper bound ``-c^2 + 2 sqrt(d) phi* L c / p`` on the coefficient-risk change."""
    return -c_n**2 + 2.0 * math.sqrt(d) * phi_star * lipschitz_L * c_n / p


def p_zero(consts, lipschitz_L, phi_star=PHI_STAR):
    """Frequency above which the improvement bound is negative."""
    if consts.c_n <= 0.0:
        raise ValidationError("p_zero is undefined when c_n = 0 (shrinkage inactive)")
    return 2.0 * math.sqrt(consts.d) * phi_star * lipschitz_L / consts.c_n


def pinsker_constant(k, r):
    """Minimax risk constant ``((2k+1) r)^{1/(2k+1)} (k / (pi (k+1)))^{2k/(2k+1)}``."""
    k = check_int(k, "k", minimum=1)
    r = check_real(r, "r", low=0.0, low_open=True)
    e = 1.0 / (2 * k + 1)
    return ((2 * k + 1) * r) ** e * (k / (math.pi * (k + 1))) ** (2 * k * e)


def coefficient_variances(p, n, a, sigma_q, d=None, first=1):
    """``E xi_j^2 = sigma_Q tau_n(psi_j, psi_j) / n`` for ``j = first..d``."""
    from .grid import make_grid

    grid = make_grid(n, p)
    d = grid.p if d is None else d
    first = check_int(first, "first", minimum=1)
    if a == 0.0:
        return np.full(d - first + 1, sigma_q)
    # column blocks keep the (N, block) work arrays near 2e7 entries
    block = max(1, 20_000_000 // grid.N)
    diag = np.empty(d - first + 1)
    t = np.arange(1, grid.p + 1) / grid.p
    for start in range(first - 1, d, block):
        cols = np.arange(start + 1, min(start + block, d) + 1)
        table = trig_value_matrix(int(cols[-1]), t)[:, cols - 1]
        F = np.tile(table, (grid.n, 1))
        C = _Recursion(F, grid, a).cell_integrals()
        diag[cols - first] = np.sum(F * F, axis=0) * grid.delta + 2.0 * np.sum(F * C, axis=0)
    return sigma_q * diag / n
