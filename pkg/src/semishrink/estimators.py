"""Fourier-coefficient estimation, shrinkage, proxy variance and reconstruction."""

import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import ValidationError, check_int, check_vector, check_weights
from .basis import grid_coefficients, synthesize, trig_value_matrix

ROLES = ("raw", "shrunk", "true_projected")


@dataclass
class CoeffSet:
    values: np.ndarray
    role: str = "raw"
    d_used: int = 0
    c_n_used: float = 0.0
    degenerate: bool = False
    over_shrunk: bool = False

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.role not in ROLES:
            raise ValidationError(f"role must be one of {ROLES}")

    @property
    def p(self):
        return self.values.size

    def to_csv(self, path):
        with open(path, "w", newline="\n") as fh:
            fh.write("j,value,role\n")
            for j, v in enumerate(self.values.tolist(), start=1):
                fh.write(f"{j},{v!r},{self.role}\n")


def _folded(increments, grid):
    dy = check_vector(increments, "increments")
    if dy.size != grid.N:
        raise ValidationError(f"expected {grid.N} increments, got {dy.size}")
    return dy.reshape(grid.n, grid.p).sum(axis=0)


def fourier_coeffs_from_increments(increments, grid):
    """``theta_hat_j = (1/n) sum_{l<=N} Trg_j(t_l) dy_l`` for ``j = 1..p``.

    Trg values repeat every period, so the increments are folded to one period
    and transformed with a single FFT.
    """
    return grid_coefficients(_folded(increments, grid)) * grid.p / grid.n


def fourier_coeffs(path):
    return CoeffSet(fourier_coeffs_from_increments(path.increments, path.grid), role="raw")


def true_coefficients(signal, grid):
    """Grid coefficients ``theta_j = (S, Trg_j)_p`` of the true signal."""
    return CoeffSet(grid_coefficients(np.asarray(signal(grid.period_times()), dtype=float)),
                    role="true_projected")


def shrink_values(raw, d, c_n):
    """Scale the first ``d`` entries of ``raw`` by ``1 - c_n / |raw|_d``.

    Returns ``(values, degenerate, over_shrunk)``. No positive-part clipping.
    """
    out = np.array(raw, dtype=float, copy=True)
    if c_n <= 0.0 or d == 0:
        return out, False, False
    norm = math.sqrt(float(np.dot(out[:d], out[:d])))
    if norm == 0.0:
        return out, True, False
    factor = 1.0 - c_n / norm
    out[:d] *= factor
    return out, False, factor < 0.0


def shrink(raw, consts):
    if raw.role != "raw":
        raise ValidationError("shrink expects raw coefficients")
    if consts.d > raw.p:
        raise ValidationError(f"shrinkage dimension {consts.d} exceeds p={raw.p}")
    values, degenerate, over = shrink_values(raw.values, consts.d, consts.c_n)
    return CoeffSet(values, role="shrunk", d_used=consts.d, c_n_used=consts.c_n,
                    degenerate=degenerate, over_shrunk=over)


def proxy_variance_from_coeffs(theta_hat, n):
    """``(n/p) sum_{j=[sqrt n]+1}^{min(n, p)} t_hat_j^2``."""
    p = theta_hat.shape[-1]
    lo = math.isqrt(n)
    if p <= math.sqrt(n):
        raise ValidationError(f"proxy variance needs p > sqrt(n); got p={p}, n={n}")
    hi = min(n, p)
    tail = theta_hat[..., lo:hi]
    return (n / p) * np.sum(tail * tail, axis=-1)


def proxy_variance(path):
    theta = fourier_coeffs_from_increments(path.increments, path.grid)
    return float(proxy_variance_from_coeffs(theta, path.grid.n))


@dataclass
class ReconstructedSignal:
    """``S(t) = sum_j gamma_j c_j psi_j(t)``; a step function on the grid."""

    coeffs: CoeffSet
    weights: np.ndarray = field(default=None)

    def __post_init__(self):
        p = self.coeffs.p
        if self.weights is None:
            self.weights = np.ones(p)
        self.weights = check_weights(self.weights, "weights")
        if self.weights.size != p:
            raise ValidationError(f"weights must have length {p}, got {self.weights.size}")

    @property
    def effective(self):
        return self.weights * self.coeffs.values

    def grid_values(self):
        """Values at ``t_1, ..., t_p``."""
        return synthesize(self.effective)

    def __call__(self, t):
        """Evaluate the step function at ``t`` (periodic, cells ``(t_{k-1}, t_k]``)."""
        t = np.asarray(t, dtype=float)
        p = self.coeffs.p
        k = np.ceil(np.round(t * p, 9)).astype(np.int64)
        vals = self.grid_values()
        return vals[(k - 1) % p]

    def norm_sq(self):
        """``||S||^2`` in ``L2[0, 1]`` (equals the squared coefficient norm)."""
        return float(np.mean(self.grid_values() ** 2))

    def to_csv(self, path):
        p = self.coeffs.p
        t = np.arange(1, p + 1) / p
        v = self.grid_values()
        with open(path, "w", newline="\n") as fh:
            fh.write("t_l,value\n")
            for a, b in zip(t.tolist(), v.tolist()):
                fh.write(f"{a!r},{b!r}\n")


def reconstruct(coeffs, gamma):
    return ReconstructedSignal(coeffs=coeffs, weights=gamma)


def evaluate_on_grid(sig, grid):
    if sig.coeffs.p != grid.p:
        raise ValidationError("coefficient length does not match the grid")
    return sig.grid_values()


def _trig_cell_integrals(q, p):
    """``int_{t_{k-1}}^{t_k} Trg_m(t) dt`` for ``m <= q``, ``k <= p``; shape ``(p, q)``."""
    m = np.arange(1, q + 1)
    freq = m // 2
    left = np.arange(p)[:, None] / p
    right = np.arange(1, p + 1)[:, None] / p
    w = 2 * np.pi * np.where(freq == 0, 1, freq)[None, :]
    cos_int = (np.sin(w * right) - np.sin(w * left)) / w
    sin_int = (np.cos(w * left) - np.cos(w * right)) / w
    out = np.sqrt(2.0) * np.where(m % 2 == 0, cos_int, sin_int)
    out[:, 0] = 1.0 / p
    return out


def dictionary_projection(sig, dictionary="trig", q=None, points=10_000):
    """``beta_j = (u_j, S)`` in ``L2[0, 1]`` for a dictionary ``u_1, u_2, ...``.

    ``dictionary="trig"`` uses the trigonometric functions and integrates them
    exactly over each cell; a list of callables is integrated with the
    ``points``-point midpoint rule.
    """
    vals = sig.grid_values()
    p = vals.size
    if isinstance(dictionary, str):
        if dictionary != "trig":
            raise ValidationError("dictionary must be 'trig' or a list of callables")
        q = p if q is None else check_int(q, "q", minimum=1)
        return vals @ _trig_cell_integrals(q, p)
    funcs = list(dictionary)
    if q is not None:
        funcs = funcs[:check_int(q, "q", minimum=1)]
    t = (np.arange(points) + 0.5) / points
    s = sig(t)
    return np.array([float(np.mean(np.asarray(u(t), dtype=float) * s)) for u in funcs])


def evaluate_series(coeffs, t):
    """Continuous trigonometric series ``sum_j c_j Trg_j(t)`` (not the step function)."""
    c = np.asarray(coeffs, dtype=float)
    return trig_value_matrix(c.size, t) @ c
