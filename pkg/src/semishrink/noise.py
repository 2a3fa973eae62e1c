"""Exact simulation of Ornstein-Uhlenbeck-Levy noise and of observation increments.

Within a cell of width ``D = 1/p`` the noise obeys

    xi_l = exp(a D) xi_{l-1} + G_l + J_l,

with ``G_l`` Gaussian of variance ``rho1^2 (exp(2 a D) - 1) / (2 a)`` and
``J_l = rho2 * sum_tau Y exp(a (t_l - tau))`` over the compound Poisson jump
times falling in the cell. The scheme is exact in distribution.
"""

import zlib
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from ._validation import ValidationError, check_int, check_real, check_vector

JUMP_LAWS = ("normal", "rademacher")
SIMPSON_PANELS = 8


def expm1_ratio(z):
    """``(exp(z) - 1) / z`` with the removable singularity at 0 filled in."""
    z = np.asarray(z, dtype=float)
    safe = np.where(z == 0.0, 1.0, z)
    out = np.where(np.abs(z) < 1e-8, 1.0 + z / 2.0 + z * z / 6.0, np.expm1(safe) / safe)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class FamilyBounds:
    """Bounds describing the noise family: ``-a_max <= a``, ``rho_lower <= rho1^2``,
    ``rho1^2 + rho2^2 <= varsigma_star``."""

    a_max: float = 1.0
    rho_lower: float = 0.25
    varsigma_star: float = 0.5

    def __post_init__(self):
        check_real(self.a_max, "a_max", low=0, low_open=True)
        check_real(self.rho_lower, "rho_lower", low=0, low_open=True)
        check_real(self.varsigma_star, "varsigma_star", low=0, low_open=True)

    @property
    def kappa_star(self):
        return 2.0 * self.varsigma_star


@dataclass(frozen=True)
class NoiseModel:
    a: float = -1.0
    rho1: float = 0.5
    rho2: float = 0.5
    jump_intensity: float = 1.0
    jump_law: str = "normal"
    bounds: FamilyBounds = field(default_factory=FamilyBounds)
    check_family: bool = True

    def __post_init__(self):
        check_real(self.a, "a", high=0.0)
        check_real(self.rho1, "rho1")
        check_real(self.rho2, "rho2")
        check_real(self.jump_intensity, "jump_intensity", low=0, low_open=True)
        if self.jump_law not in JUMP_LAWS:
            raise ValidationError(f"jump_law must be one of {JUMP_LAWS}")
        if self.check_family:
            b = self.bounds
            if self.a < -b.a_max:
                raise ValidationError(f"a={self.a} violates -a_max <= a (a_max={b.a_max})")
            if self.rho1**2 < b.rho_lower:
                raise ValidationError("rho1^2 is below the family lower bound rho_lower")
            if self.sigma_q > b.varsigma_star * (1 + 1e-12):
                raise ValidationError("sigma_Q = rho1^2 + rho2^2 exceeds varsigma_star")

    @property
    def sigma_q(self):
        """Proxy variance ``rho1^2 + rho2^2`` (jump law normalised to ``Pi(x^2) = 1``)."""
        return self.rho1**2 + self.rho2**2

    def variance(self, t):
        """``E xi_t^2 = sigma_Q (exp(2 a t) - 1) / (2 a)``."""
        t = np.asarray(t, dtype=float)
        return self.sigma_q * t * expm1_ratio(2 * self.a * t)

    @classmethod
    def noiseless(cls):
        return cls(a=0.0, rho1=0.0, rho2=0.0, check_family=False)

    def to_dict(self):
        return {"a": self.a, "rho1": self.rho1, "rho2": self.rho2,
                "jump_intensity": self.jump_intensity, "jump_law": self.jump_law,
                "a_max": self.bounds.a_max, "rho_lower": self.bounds.rho_lower,
                "varsigma_star": self.bounds.varsigma_star}

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        bounds = FamilyBounds(a_max=d.pop("a_max", 1.0), rho_lower=d.pop("rho_lower", 0.25),
                              varsigma_star=d.pop("varsigma_star", 0.5))
        return cls(bounds=bounds, **d)


def stream_tag(name):
    return zlib.crc32(name.encode())


def derive_seed(master_seed, replication=0, stream="noise"):
    """Seed material for one replication and stream, independent of scheduling."""
    master_seed = check_int(master_seed, "seed", minimum=0)
    return np.random.SeedSequence([master_seed, int(replication), stream_tag(stream)])


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.default_rng(seed)
    return np.random.default_rng(derive_seed(seed))


def _jump_sizes(rng, model, size):
    scale = 1.0 / np.sqrt(model.jump_intensity)
    if model.jump_law == "normal":
        return rng.standard_normal(size) * scale
    return rng.choice(np.array([-1.0, 1.0]), size=size) * scale


def _innovations(rng, model, delta, shape):
    a = model.a
    g_sd = abs(model.rho1) * np.sqrt(delta * expm1_ratio(2 * a * delta))
    innov = g_sd * rng.standard_normal(shape)
    counts = rng.poisson(model.jump_intensity * delta, size=shape)
    total = int(counts.sum())
    if total and model.rho2 != 0.0:
        sizes = _jump_sizes(rng, model, total)
        offsets = rng.random(total)
        # time from jump to the cell's right end is delta * offset
        contrib = model.rho2 * sizes * np.exp(a * delta * offsets)
        cells = np.repeat(np.arange(counts.size), counts.ravel())
        innov += np.bincount(cells, weights=contrib, minlength=counts.size).reshape(shape)
    return innov


def simulate_noise_batch(model, grid, n_paths, seed):
    """Noise increments for ``n_paths`` independent paths, shape ``(n_paths, N)``."""
    n_paths = check_int(n_paths, "n_paths", minimum=1)
    if grid.N == 0:
        raise ValidationError("grid has no cells")
    rng = _rng(seed)
    delta = grid.delta
    innov = _innovations(rng, model, delta, (n_paths, grid.N))
    q = np.exp(model.a * delta)
    xi = lfilter([1.0], [1.0, -q], innov, axis=1)
    return np.diff(xi, axis=1, prepend=0.0)


def simulate_noise_increments(model, grid, seed):
    """Increments ``xi_{t_l} - xi_{t_{l-1}}`` for ``l = 1..N`` with ``xi_0 = 0``."""
    return simulate_noise_batch(model, grid, 1, seed)[0]


def signal_cell_integrals(signal, grid):
    """``int_{t_{l-1}}^{t_l} S(t) dt`` over one period by composite Simpson (8 panels)."""
    m = SIMPSON_PANELS
    nodes = np.arange(grid.p * m + 1) / (grid.p * m)
    vals = np.asarray(signal(nodes), dtype=float)
    w = np.ones(m + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    idx = np.arange(grid.p)[:, None] * m + np.arange(m + 1)[None, :]
    h = grid.delta / m
    return (vals[idx] @ w) * h / 3.0


@dataclass
class ObservationPath:
    grid: object
    increments: np.ndarray
    noise_increments: np.ndarray = None
    seed_record: dict = None

    def __post_init__(self):
        self.increments = check_vector(self.increments, "increments", self.grid.N)

    def to_csv(self, path):
        t = self.grid.times[1:].tolist()
        dy = self.increments.tolist()
        with open(path, "w", newline="\n") as fh:
            fh.write("l,t_l,dy_l\n")
            for l in range(self.grid.N):
                fh.write(f"{l + 1},{t[l]!r},{dy[l]!r}\n")

    @classmethod
    def from_csv(cls, path, n):
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        N = data.shape[0]
        if N % n:
            raise ValidationError("row count is not a multiple of n")
        from .grid import make_grid
        grid = make_grid(n, N // n)
        if grid.p != N // n:
            raise ValidationError("CSV grid has an even number of points per period")
        return cls(grid=grid, increments=data[:, 2])

    def to_npz(self, path):
        np.savez(path, n=self.grid.n, p=self.grid.p, p_requested=self.grid.p_requested,
                 increments=self.increments)

    @classmethod
    def from_npz(cls, path):
        from .grid import GridSpec
        with np.load(path) as z:
            grid = GridSpec(n=int(z["n"]), p=int(z["p"]), p_requested=int(z["p_requested"]))
            return cls(grid=grid, increments=z["increments"].copy())


def simulate_observations(signal, model, grid, seed, keep_noise=False, cell_integrals=None):
    """Increments ``dy_l = int_cell S dt + dxi_l`` of the regression model."""
    if isinstance(seed, np.random.SeedSequence):
        record = {"entropy": [int(e) for e in np.atleast_1d(seed.entropy)],
                  "spawn_key": list(seed.spawn_key)}
    else:
        record = {"seed": seed if isinstance(seed, int) else repr(seed)}
    if cell_integrals is None:
        cell_integrals = signal_cell_integrals(signal, grid)
    noise = simulate_noise_increments(model, grid, seed)
    dy = np.tile(cell_integrals, grid.n) + noise
    return ObservationPath(grid=grid, increments=dy,
                           noise_increments=noise if keep_noise else None,
                           seed_record=record)
