"""Trigonometric basis, its grid inner product and the step-function embedding.

Index conventions follow the usual ordering: ``Trg_1 = 1``, ``Trg_{2k}`` is
``sqrt(2) cos(2 pi k t)`` and ``Trg_{2k+1}`` is ``sqrt(2) sin(2 pi k t)``.
"""

import numpy as np

from ._validation import ValidationError, check_int, check_real

PHI_STAR = np.sqrt(2.0)


def trig_value(j, t):
    j = check_int(j, "j", minimum=1)
    t = np.asarray(t, dtype=float)
    if j == 1:
        out = np.ones_like(t)
    else:
        k = j // 2
        f = np.cos if j % 2 == 0 else np.sin
        out = PHI_STAR * f(2 * np.pi * k * t)
    return float(out) if out.ndim == 0 else out


def trig_value_matrix(d, t):
    """Matrix ``M[i, j-1] = Trg_j(t_i)`` for ``j = 1..d``."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    j = np.arange(1, d + 1)
    k = j // 2
    arg = 2 * np.pi * np.outer(t, k)
    out = np.where(j % 2 == 0, PHI_STAR * np.cos(arg), PHI_STAR * np.sin(arg))
    out[:, 0] = 1.0
    return out


def grid_table(p, d=None):
    """Values ``Trg_j(t_l)`` at the ``p`` points ``t_l = l / p`` of one period."""
    d = p if d is None else d
    return trig_value_matrix(d, np.arange(1, p + 1) / p)


def grid_inner_product(i, j, grid):
    i = check_int(i, "i", minimum=1)
    j = check_int(j, "j", minimum=1)
    if i > grid.p or j > grid.p:
        raise ValidationError(f"basis index out of range 1..{grid.p}")
    t = grid.period_times()
    return float(np.mean(trig_value(i, t) * trig_value(j, t)))


def grid_gram(p):
    """All grid inner products ``(Trg_i, Trg_j)_p`` for ``i, j <= p``."""
    table = grid_table(p)
    return table.T @ table / p


def cell_index(t, grid):
    """Index ``k`` of the cell ``(t_{k-1}, t_k]`` containing ``t``, 1-based."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0) or np.any(t > grid.n):
        raise ValidationError(f"t must lie in (0, {grid.n}]")
    k = np.ceil(t * grid.p).astype(np.int64)
    # guard against t*p landing a hair above an integer that is really t_k
    k = np.where((k - 1) / grid.p >= t, k - 1, k)
    return k


def psi_eval(j, t, grid):
    """Step function ``psi_j(t) = Trg_j(t_k)`` for ``t`` in ``(t_{k-1}, t_k]``."""
    j = check_int(j, "j", minimum=1)
    if j > grid.p:
        raise ValidationError(f"j must be <= p={grid.p}")
    k = cell_index(t, grid)
    return trig_value(j, k / grid.p)


def psi_cells(j, grid):
    """Cell values of ``psi_j`` over all ``N`` cells of ``grid``."""
    return trig_value(j, np.arange(1, grid.N + 1) / grid.p)


def psi_l2_inner(i, j, grid):
    """``int_0^1 psi_i psi_j dt``, integrated exactly cell by cell."""
    cells = np.arange(1, grid.p + 1) / grid.p
    return float(np.sum(trig_value(i, cells) * trig_value(j, cells)) * grid.delta)


def grid_coefficients(values):
    """Grid coefficients ``(1/p) sum_l v_l Trg_j(t_l)`` of values on one period.

    ``values[l-1]`` is the value at ``t_l = l / p``. Computed with one FFT; the
    result has length ``p`` (odd).
    """
    v = np.asarray(values, dtype=float)
    p = v.shape[-1]
    if p % 2 == 0:
        raise ValidationError("grid coefficients need odd p")
    # position 0 holds t_p = 1 which coincides with t = 0
    shifted = np.roll(v, 1, axis=-1)
    spec = np.fft.rfft(shifted, axis=-1)
    K = (p - 1) // 2
    out = np.empty(v.shape)
    out[..., 0] = spec[..., 0].real
    out[..., 1::2] = PHI_STAR * spec[..., 1:K + 1].real
    out[..., 2::2] = -PHI_STAR * spec[..., 1:K + 1].imag
    return out / p


def synthesize(coeffs):
    """Inverse of :func:`grid_coefficients`: values at ``t_1..t_p``."""
    c = np.asarray(coeffs, dtype=float)
    p = c.shape[-1]
    if p % 2 == 0:
        raise ValidationError("synthesis needs odd p")
    K = (p - 1) // 2
    spec = np.zeros(c.shape[:-1] + (K + 1,), dtype=complex)
    spec[..., 0] = c[..., 0] * p
    spec[..., 1:] = (c[..., 1::2] - 1j * c[..., 2::2]) * (p / PHI_STAR)
    vals = np.fft.irfft(spec, n=p, axis=-1)
    return np.roll(vals, -1, axis=-1)


def _pair_extremes(N, t_grid, v_grid):
    """Max and min over the t-grid of ``-2 sin(2 pi N t) sin(2 pi N (t - v))``.

    Returned per v-grid point. The expression equals
    ``-2 s(t)^2 cos(2 pi N v) + 2 s(t) c(t) sin(2 pi N v)``, a linear function
    of the two t-dependent vectors, so the extremes come from one small matmul.
    """
    t = np.arange(t_grid) / t_grid
    v = np.arange(v_grid) / v_grid
    s = np.sin(2 * np.pi * N * t)
    c = np.cos(2 * np.pi * N * t)
    basis = np.stack([-2 * s * s, 2 * s * c])               # (2, M_t)
    coef = np.stack([np.cos(2 * np.pi * N * v),
                     np.sin(2 * np.pi * N * v)], axis=1)     # (M_v, 2)
    vals = coef @ basis                                     # (M_v, M_t)
    return vals.max(axis=1), vals.min(axis=1)


def dirichlet_excess(d, t_grid=4096, v_grid=4096):
    """``int_0^1 max_t |Phi_d(t, v)| dv - ln d`` on uniform rectangle-rule grids.

    ``Phi_d(t, v) = sum_{j<=d} Trg_j(t) Trg_j(t - v)``. Every complete cos/sin
    pair contributes ``2 cos(2 pi k v)`` independently of ``t``; only the lone
    cosine of an even ``d`` depends on ``t``.
    """
    d = check_int(d, "d", minimum=1)
    t_grid = check_int(t_grid, "t_grid", minimum=512)
    v_grid = check_int(v_grid, "v_grid", minimum=512)
    v = np.arange(v_grid) / v_grid
    K = (d - 1) // 2
    kernel = 1.0 + 2.0 * np.cos(2 * np.pi * np.outer(v, np.arange(1, K + 1))).sum(axis=1)
    if d % 2 == 0:
        N = d // 2
        # lone cosine term of index d = 2N merged with its (absent) sine partner
        kernel = kernel + 2.0 * np.cos(2 * np.pi * N * v)
        hi, lo = _pair_extremes(N, t_grid, v_grid)
        peak = np.maximum(kernel + hi, -(kernel + lo))
    else:
        peak = np.abs(kernel)
    return float(np.mean(peak) - np.log(d))


def _dirichlet_excess_direct(d, t_grid, v_grid, chunk=256):
    t = np.arange(t_grid) / t_grid
    Tt = trig_value_matrix(d, t)
    peaks = np.empty(v_grid)
    for start in range(0, v_grid, chunk):
        v = np.arange(start, min(start + chunk, v_grid)) / v_grid
        shifted = trig_value_matrix(d, (t[None, :] - v[:, None]).ravel())
        phi = (shifted.reshape(v.size, t_grid, d) * Tt[None]).sum(axis=2)
        peaks[start:start + v.size] = np.abs(phi).max(axis=1)
    return float(np.mean(peaks) - np.log(d))


def dirichlet_excess_brute(d, t_grid, v_grid):
    """Reference evaluation by direct summation of the basis products."""
    check_real(d, "d", low=1)
    return _dirichlet_excess_direct(int(d), int(t_grid), int(v_grid))
