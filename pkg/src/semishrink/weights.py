"""Pinsker-type weight family indexed by ``(beta, r)``."""

import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import ValidationError, check_int, check_real, check_weights

MODES = ("simulation", "theory")


@dataclass(frozen=True)
class WeightVector:
    gamma: np.ndarray = field(repr=False)
    beta: int = None
    r: float = None
    omega: float = None
    d_gamma: int = 0

    @property
    def p(self):
        return self.gamma.size

    @property
    def total(self):
        return float(self.gamma.sum())

    @property
    def provenance(self):
        return {"beta": self.beta, "r": self.r, "omega": self.omega, "d_gamma": self.d_gamma}


def leading_ones(gamma):
    """Number of leading entries exactly equal to one."""
    gamma = np.asarray(gamma)
    not_one = np.flatnonzero(gamma != 1.0)
    return int(not_one[0]) if not_one.size else int(gamma.size)


def omega(beta, r, n, varsigma_star):
    """``((beta+1)(2 beta+1) / (pi^{2 beta} beta) r n / varsigma_star)^{1/(2 beta+1)}``."""
    beta = np.asarray(beta, dtype=float)
    log_base = (np.log((beta + 1) * (2 * beta + 1) / beta) - 2 * beta * math.log(math.pi)
                + np.log(np.asarray(r, dtype=float) * n / varsigma_star))
    return np.exp(log_base / (2 * beta + 1))


def pinsker_weights(beta, om, j_star, p):
    """Weights ``1`` on ``j <= j_star``, ``1 - (j / om)^beta`` up to ``om``, zero after;
    cut at ``min(floor(om), p)``."""
    width = int(min(math.floor(om), p))
    g = np.zeros(p)
    if width < 1:
        return g
    j = np.arange(1, width + 1, dtype=float)
    g[:width] = np.where(j <= j_star, 1.0, 1.0 - (j / om) ** beta)
    return g


class WeightFamily:
    """Finite weight set held as a dense ``(members, width)`` matrix.

    Columns past ``width`` are zero for every member; ``gamma(i)`` pads to ``p``.
    Members keep the enumeration order ``beta`` ascending, then ``r`` ascending.
    """

    def __init__(self, matrix, p, betas=None, rs=None, omegas=None, d_gammas=None,
                 nu=None, params=None):
        matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        if matrix.shape[0] == 0:
            raise ValidationError("weight family is empty")
        if matrix.shape[1] > p:
            raise ValidationError("weight vectors are longer than p")
        if np.any(matrix < 0) or np.any(matrix > 1):
            raise ValidationError("weights must lie in [0, 1]")
        m = matrix.shape[0]
        self.matrix = matrix
        self.p = int(p)
        self.betas = np.full(m, -1, dtype=int) if betas is None else np.asarray(betas, dtype=int)
        self.rs = np.full(m, np.nan) if rs is None else np.asarray(rs, dtype=float)
        self.omegas = np.full(m, np.nan) if omegas is None else np.asarray(omegas, dtype=float)
        if d_gammas is None:
            d_gammas = [leading_ones(row) for row in matrix]
        self.d_gammas = np.asarray(d_gammas, dtype=int)
        self.nu = m if nu is None else int(nu)
        self.params = dict(params or {})

    @classmethod
    def from_vectors(cls, vectors, p=None):
        """Family from explicit weight vectors (or :class:`WeightVector` objects)."""
        rows, betas, rs, omegas, ds = [], [], [], [], []
        for v in vectors:
            if isinstance(v, WeightVector):
                rows.append(v.gamma)
                betas.append(-1 if v.beta is None else v.beta)
                rs.append(np.nan if v.r is None else v.r)
                omegas.append(np.nan if v.omega is None else v.omega)
                ds.append(v.d_gamma)
            else:
                g = check_weights(v, "gamma")
                rows.append(g)
                betas.append(-1)
                rs.append(np.nan)
                omegas.append(np.nan)
                ds.append(leading_ones(g))
        if not rows:
            raise ValidationError("weight family is empty")
        width = max(r.size for r in rows)
        p = width if p is None else p
        mat = np.zeros((len(rows), width))
        for i, r in enumerate(rows):
            mat[i, :r.size] = r
        return cls(mat, p, betas, rs, omegas, ds, params={"mode": "explicit"})

    def __len__(self):
        return self.matrix.shape[0]

    @property
    def width(self):
        return self.matrix.shape[1]

    @property
    def nu_star(self):
        return float(self.matrix.sum(axis=1).max())

    def gamma(self, i):
        g = np.zeros(self.p)
        g[:self.width] = self.matrix[i]
        return g

    def member(self, i):
        beta = int(self.betas[i])
        return WeightVector(gamma=self.gamma(i), beta=beta if beta > 0 else None,
                            r=None if np.isnan(self.rs[i]) else float(self.rs[i]),
                            omega=None if np.isnan(self.omegas[i]) else float(self.omegas[i]),
                            d_gamma=int(self.d_gammas[i]))

    @property
    def members(self):
        return [self.member(i) for i in range(len(self))]

    def subset(self, index):
        index = np.asarray(index, dtype=int)
        return WeightFamily(self.matrix[index], self.p, self.betas[index], self.rs[index],
                            self.omegas[index], self.d_gammas[index], nu=len(index),
                            params=dict(self.params, subset=len(index)))

    def subsample(self, max_members):
        """Every k-th member so that at most ``max_members`` remain."""
        step = max(1, math.ceil(len(self) / max_members))
        return self.subset(np.arange(0, len(self), step))

    def summary(self):
        return {"nu": self.nu, "unique": len(self), "nu_star": self.nu_star,
                "width": self.width, "max_d_gamma": int(self.d_gammas.max()), **self.params}

    def to_csv(self, path):
        sums = self.matrix.sum(axis=1).tolist()
        rs, omegas = self.rs.tolist(), self.omegas.tolist()
        with open(path, "w", newline="\n") as fh:
            fh.write("member,beta,r,omega,d_gamma,sum_gamma\n")
            for i in range(len(self)):
                fh.write(f"{i},{self.betas[i]},{rs[i]!r},{omegas[i]!r},"
                         f"{self.d_gammas[i]},{sums[i]!r}\n")


def family_parameters(n, mode="simulation", k0=0.0, k_star=None, m=None):
    """``(k*, r grid, m)`` for either parameterisation."""
    log_n = math.log(n + 1)
    if mode == "simulation":
        ks = 100.0 + math.sqrt(log_n)
    elif mode == "theory":
        ks = k0 + math.sqrt(log_n)
    else:
        raise ValidationError(f"mode must be one of {MODES}")
    eps = 1.0 / log_n
    m_val = int(math.floor(log_n**2)) if m is None else check_int(m, "m", minimum=1)
    k_val = int(math.floor(ks)) if k_star is None else check_int(k_star, "k_star", minimum=1)
    k_val = max(k_val, 1)
    rs = eps * np.arange(1, m_val + 1)
    return k_val, rs, m_val


def build_family(n, p, varsigma_star=0.5, mode="simulation", k0=0.0, k_star=None, m=None,
                 dedup=True):
    """Weight family over ``{1..k*} x {r_1..r_m}``.

    Vectors whose ``omega < 1`` are kept as zero vectors. With ``dedup`` the
    first occurrence of each distinct vector is kept.
    """
    n = check_int(n, "n", minimum=3)
    p = check_int(p, "p", minimum=3)
    varsigma_star = check_real(varsigma_star, "varsigma_star", low=0, low_open=True)
    k_val, rs, m_val = family_parameters(n, mode, k0, k_star, m)
    k_val = min(k_val, p)
    betas = np.repeat(np.arange(1, k_val + 1), rs.size)
    rr = np.tile(rs, k_val)
    om = omega(betas, rr, n, varsigma_star)
    js = om / math.log(n + 1)
    width = int(min(max(math.floor(om.max()), 1), p))
    mat = np.zeros((betas.size, width))
    for i in range(betas.size):
        mat[i] = pinsker_weights(betas[i], om[i], js[i], p)[:width]
    d_g = np.maximum(np.floor(js), 0).astype(int)
    d_g = np.minimum(d_g, np.minimum(np.floor(om), p).astype(int))
    nu = betas.size
    if dedup:
        _, first = np.unique(np.column_stack([mat, d_g]), axis=0, return_index=True)
        keep = np.sort(first)
        mat, betas, rr, om, d_g = mat[keep], betas[keep], rr[keep], om[keep], d_g[keep]
    params = {"mode": mode, "k_star": k_val, "m": m_val, "epsilon": 1.0 / math.log(n + 1),
              "varsigma_star": varsigma_star, "n": n}
    return WeightFamily(mat, p, betas, rr, om, d_g, nu=nu, params=params)
