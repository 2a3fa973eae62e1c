"""Penalized selection over a weight family."""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import ValidationError, check_real, check_vector
from .analytics import default_r_n, shrink_threshold
from .estimators import CoeffSet, shrink_values
from .weights import WeightFamily, WeightVector

TIE_TOL = 1e-12


def default_rho(n):
    return (3.0 + math.log(n)) ** -2


def check_rho(rho):
    return check_real(rho, "rho", low=0.0, high=0.5, low_open=True, high_open=True)


def penalty(gamma, sigma_hat, n):
    """``sigma_hat |gamma|^2 / n``."""
    g = gamma.gamma if isinstance(gamma, WeightVector) else check_vector(gamma, "gamma")
    sigma_hat = check_real(sigma_hat, "sigma_hat", low=0.0)
    return sigma_hat * float(np.dot(g, g)) / n


def member_thresholds(family, n, bounds, shrink=True):
    """``c_n`` for every member: ``d = d_gamma`` and ``r_n`` = the member's ``r`` when set."""
    if not shrink:
        return np.zeros(len(family))
    r = np.where(np.isnan(family.rs), default_r_n(n), family.rs)
    return shrink_threshold(family.d_gammas, n, bounds, r)


def objective_values(theta_hat, family, sigma_hat, n, rho, c_n):
    """``J`` for every member, vectorised over the family.

    Shrinkage rescales the first ``d`` raw coefficients by ``f = 1 - c_n / |theta_hat|_d``,
    so ``J`` splits into prefix sums (scaled by ``f`` and ``f^2``) and an unshrunk tail.
    """
    theta_hat = np.asarray(theta_hat, dtype=float)
    G = family.matrix
    W = G.shape[1]
    sq = theta_hat[:W] ** 2
    a2 = np.cumsum(G * G * sq, axis=1)   # running sum of gamma^2 theta^2
    a1 = np.cumsum(G * sq, axis=1)
    total2, total1 = a2[:, -1], a1[:, -1]
    d = family.d_gammas
    dw = np.minimum(d, W)
    rows = np.arange(len(family))
    head2 = np.where(dw > 0, a2[rows, np.maximum(dw - 1, 0)], 0.0)
    head1 = np.where(dw > 0, a1[rows, np.maximum(dw - 1, 0)], 0.0)
    csum = np.concatenate([[0.0], np.cumsum(theta_hat**2)])
    norm = np.sqrt(csum[np.minimum(d, theta_hat.size)])
    active = (c_n > 0) & (norm > 0)
    f = np.where(active, 1.0 - c_n / np.where(norm > 0, norm, 1.0), 1.0)
    fit = (total2 - head2) + f * f * head2
    cross = (total1 - head1) + f * head1
    sg = G.sum(axis=1)
    sg2 = (G * G).sum(axis=1)
    return fit - 2.0 * (cross - sigma_hat / n * sg) + rho * sigma_hat * sg2 / n


def objective_J(raw, gamma, consts, sigma_hat, rho):
    """``J(gamma)`` for one weight vector, evaluated directly."""
    rho = check_rho(rho)
    g = gamma.gamma if isinstance(gamma, WeightVector) else check_vector(gamma, "gamma")
    theta_hat = raw.values if isinstance(raw, CoeffSet) else np.asarray(raw, dtype=float)
    star, _, _ = shrink_values(theta_hat, consts.d, consts.c_n)
    n = consts.n
    tilde = star * theta_hat - sigma_hat / n
    return float(np.sum(g * g * star * star) - 2.0 * np.sum(g * tilde)
                 + rho * penalty(g, sigma_hat, n))


@dataclass
class SelectionResult:
    index: int
    gamma_star: WeightVector
    coeffs_star: CoeffSet
    J_values: np.ndarray = field(repr=False)
    c_n: np.ndarray = field(repr=False)
    sigma_hat: float = 0.0
    rho: float = 0.0
    ties: int = 1

    @property
    def J_min(self):
        return float(self.J_values[self.index])

    @property
    def estimate(self):
        """Weighted coefficients ``gamma* theta*``."""
        return self.gamma_star.gamma * self.coeffs_star.values

    def to_dict(self):
        return {"index": self.index, "gamma_star": self.gamma_star.provenance,
                "sum_gamma": self.gamma_star.total, "c_n": self.coeffs_star.c_n_used,
                "d_used": self.coeffs_star.d_used, "degenerate": self.coeffs_star.degenerate,
                "sigma_hat": self.sigma_hat, "rho": self.rho, "J_min": self.J_min,
                "ties": self.ties, "members": int(self.J_values.size)}

    def to_json(self, path):
        with open(path, "w", newline="\n") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def to_csv(self, path, family=None):
        with open(path, "w", newline="\n") as fh:
            fh.write("member,beta,r,d_gamma,c_n,J\n")
            c_n = self.c_n.tolist()
            for i, J in enumerate(self.J_values.tolist()):
                beta = r = d = ""
                if family is not None:
                    beta, r, d = family.betas[i], repr(float(family.rs[i])), family.d_gammas[i]
                fh.write(f"{i},{beta},{r},{d},{c_n[i]!r},{J!r}\n")


def select(raw, family, sigma_hat, rho=None, noise_bounds=None, shrink=True, n=None):
    """First minimiser of ``J`` over ``family``.

    ``raw`` is a raw :class:`CoeffSet`; ``n`` defaults to the family's ``n``.
    ``shrink=False`` gives the unshrunk criterion (``c_n = 0`` for every member).
    """
    if not isinstance(family, WeightFamily):
        family = WeightFamily.from_vectors(family)
    if len(family) == 0:
        raise ValidationError("weight family is empty")
    theta_hat = raw.values if isinstance(raw, CoeffSet) else check_vector(raw, "raw")
    if family.p != theta_hat.size:
        raise ValidationError(f"family length {family.p} does not match p={theta_hat.size}")
    n = family.params.get("n") if n is None else n
    if n is None:
        raise ValidationError("n is required for an explicit family")
    sigma_hat = check_real(sigma_hat, "sigma_hat", low=0.0)
    rho = default_rho(n) if rho is None else check_rho(rho)
    if shrink and noise_bounds is None:
        raise ValidationError("noise_bounds are required when shrinkage is on")
    bounds = getattr(noise_bounds, "bounds", noise_bounds)
    c_n = member_thresholds(family, n, bounds, shrink)
    J = objective_values(theta_hat, family, sigma_hat, n, rho, c_n)
    i = int(np.argmin(J))
    ties = int(np.count_nonzero(J <= J[i] + TIE_TOL))
    member = family.member(i)
    d = int(min(member.d_gamma, theta_hat.size))
    if shrink:
        cn = float(c_n[i])
        values, degenerate, over = shrink_values(theta_hat, d, cn)
    else:
        values, degenerate, over, cn = np.array(theta_hat, dtype=float), False, False, 0.0
    star = CoeffSet(values, role="shrunk" if shrink else "raw", d_used=d if shrink else 0,
                    c_n_used=cn, degenerate=degenerate, over_shrunk=over)
    return SelectionResult(index=i, gamma_star=member, coeffs_star=star, J_values=J,
                           c_n=c_n, sigma_hat=sigma_hat, rho=rho, ties=ties)
