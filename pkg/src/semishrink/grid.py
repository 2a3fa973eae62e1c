"""Observation lattice and the 1-periodic test signals."""

import logging
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from ._validation import ValidationError, check_int, check_vector

logger = logging.getLogger(__name__)

#: resolution of the grid used to estimate Lipschitz constants and ||S'||^2
DERIVATIVE_GRID = 100_000
#: default number of terms kept in the series signal s2
S2_TRUNCATION = 1000


@dataclass(frozen=True)
class GridSpec:
    """Equidistant grid ``t_l = l / p`` on ``[0, n]`` with ``N = n * p`` cells.

    ``p`` is always odd; an even request is reduced by one and the raw value is
    kept in ``p_requested`` for reporting.
    """

    n: int
    p: int
    p_requested: int

    @property
    def N(self):
        return self.n * self.p

    @property
    def delta(self):
        return 1.0 / self.p

    @property
    def times(self):
        # per-index division, no running sum
        return np.arange(self.N + 1) / self.p

    def period_times(self):
        """The ``p`` grid points ``t_1, ..., t_p`` of the first period."""
        return np.arange(1, self.p + 1) / self.p

    def to_dict(self):
        return {"n": self.n, "p": self.p, "p_requested": self.p_requested, "N": self.N}


def make_grid(n, p_requested):
    n = check_int(n, "n", minimum=1)
    p_requested = check_int(p_requested, "p_requested", minimum=2)
    p = p_requested if p_requested % 2 == 1 else p_requested - 1
    if p != p_requested:
        logger.warning("even p=%d reduced to p=%d (grid orthonormality needs odd p)",
                       p_requested, p)
    return GridSpec(n=n, p=p, p_requested=p_requested)


def _s1(t):
    t = np.mod(t, 1.0)
    return t * np.sin(2 * np.pi * t) + t**2 * (1 - t) * np.cos(4 * np.pi * t)


def _s1_deriv(t):
    t = np.mod(t, 1.0)
    tp = 2 * np.pi
    return (np.sin(tp * t) + tp * t * np.cos(tp * t)
            + (2 * t - 3 * t**2) * np.cos(2 * tp * t)
            - 2 * tp * t**2 * (1 - t) * np.sin(2 * tp * t))


def _sum_chunked(t, freqs, amps, trig, chunk=4096):
    t = np.asarray(t, dtype=float)
    flat = t.ravel()
    out = np.empty(flat.size)
    for start in range(0, flat.size, chunk):
        block = flat[start:start + chunk]
        out[start:start + chunk] = trig(2 * np.pi * np.outer(block, freqs)) @ amps
    return out.reshape(t.shape) if t.ndim else float(out[0])


def _sine_series(t, amps):
    freqs = np.arange(1, amps.size + 1)
    return _sum_chunked(t, freqs, amps, np.sin)


def _sine_series_deriv(t, amps):
    freqs = np.arange(1, amps.size + 1)
    return _sum_chunked(t, freqs, 2 * np.pi * freqs * amps, np.cos)


def _trig_series(t, coeffs):
    from .basis import trig_value_matrix

    t = np.asarray(t, dtype=float)
    flat = t.ravel()
    out = np.empty(flat.size)
    for start in range(0, flat.size, 4096):
        block = flat[start:start + 4096]
        out[start:start + 4096] = trig_value_matrix(coeffs.size, block) @ coeffs
    return out.reshape(t.shape) if t.ndim else float(out[0])


@dataclass(frozen=True)
class SignalModel:
    """A 1-periodic signal with the analytic metadata used by the bounds.

    ``func`` and ``deriv`` are picklable callables so signals can travel to
    worker processes.
    """

    label: str
    func: object = field(repr=False)
    deriv: object = field(default=None, repr=False)
    lipschitz_L: float = None
    deriv_norm_sq: float = None
    series_truncation: int = None
    trig_coeffs: np.ndarray = field(default=None, repr=False, compare=False)

    def __call__(self, t):
        return self.func(t)

    def eval(self, t):
        return self.func(t)

    def norm_sq(self, points=100_000):
        t = (np.arange(points) + 0.5) / points
        return float(np.mean(self.func(t) ** 2))

    def to_dict(self):
        return {"label": self.label, "lipschitz_L": self.lipschitz_L,
                "deriv_norm_sq": self.deriv_norm_sq,
                "series_truncation": self.series_truncation}


def estimate_derivative_stats(func, deriv=None, points=DERIVATIVE_GRID):
    """Return ``(max |S'|, mean S'^2)`` over ``points`` uniform points of [0, 1)."""
    t = np.arange(points) / points
    if deriv is not None:
        d = deriv(t)
    else:
        h = 1.0 / points
        d = (func(t + h) - func(t - h)) / (2 * h)
    return float(np.max(np.abs(d))), float(np.mean(d**2))


def _with_stats(label, func, deriv, **kw):
    L, dn = estimate_derivative_stats(func, deriv)
    return SignalModel(label=label, func=func, deriv=deriv, lipschitz_L=L,
                       deriv_norm_sq=dn, **kw)


def signal_s1():
    """``t sin(2 pi t) + t^2 (1 - t) cos(4 pi t)`` extended periodically."""
    return _with_stats("s1", _s1, _s1_deriv)


def signal_s2(truncation=S2_TRUNCATION):
    """Partial sum of ``sin(2 pi j t) / (1 + j^3)`` up to ``truncation`` terms."""
    truncation = check_int(truncation, "truncation", minimum=1)
    j = np.arange(1, truncation + 1, dtype=float)
    amps = 1.0 / (1.0 + j**3)
    return _with_stats("s2", partial(_sine_series, amps=amps),
                       partial(_sine_series_deriv, amps=amps),
                       series_truncation=truncation)


def signal_from_coeffs(coeffs, label="custom-coeffs"):
    """Finite trigonometric series ``sum_j c_j Trg_j(t)``."""
    coeffs = check_vector(coeffs, "coeffs")
    if coeffs.size == 0:
        raise ValidationError("coeffs must not be empty")
    return _with_stats(label, partial(_trig_series, coeffs=coeffs), None,
                       series_truncation=coeffs.size, trig_coeffs=coeffs)


def zero_signal():
    return SignalModel(label="zero", func=partial(_constant, value=0.0),
                       lipschitz_L=0.0, deriv_norm_sq=0.0)


def constant_signal(value):
    return SignalModel(label=f"const({value})", func=partial(_constant, value=float(value)),
                       lipschitz_L=0.0, deriv_norm_sq=0.0)


def _constant(t, value):
    t = np.asarray(t, dtype=float)
    return np.full(t.shape, value) if t.ndim else value


def s2_tail_bound(truncation):
    """Upper bound ``1 / (2 J^2)`` on the sup-norm truncation error of s2."""
    return 1.0 / (2.0 * truncation**2)


def get_signal(name, **kwargs):
    if name == "s1":
        return signal_s1()
    if name == "s2":
        return signal_s2(kwargs.get("truncation", S2_TRUNCATION))
    if name == "custom-coeffs":
        if "coeffs" not in kwargs:
            raise ValidationError("custom-coeffs signal needs a 'coeffs' list")
        return signal_from_coeffs(kwargs["coeffs"])
    raise ValidationError(f"unknown signal {name!r}; expected s1, s2 or custom-coeffs")
