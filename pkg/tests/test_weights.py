import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from semishrink import ValidationError, WeightFamily, build_family
from semishrink.weights import family_parameters, leading_ones, omega, pinsker_weights


def test_omega_example():
    om = float(omega(1, 1.0, 1000, 0.5))
    direct = (2 * 3 / (math.pi**2 * 1) * 1.0 * 2000) ** (1 / 3)
    assert om == pytest.approx(direct, rel=1e-14)
    assert om == pytest.approx(10.674, abs=1e-3)
    j_star = om / math.log(1001)
    assert j_star == pytest.approx(1.545, abs=1e-3)
    g = pinsker_weights(1, om, j_star, 1001)
    assert leading_ones(g) == 1 == math.floor(j_star)
    assert np.count_nonzero(g) == 10


def test_nu_recount_simulation():
    n = 1000
    fam = build_family(n, 10001, dedup=False)
    # oracle: explicit double loop over the parameter grid
    k_star = math.floor(100 + math.sqrt(math.log(n + 1)))
    m = math.floor(math.log(n + 1) ** 2)
    count = sum(1 for _ in range(1, k_star + 1) for _ in range(1, m + 1))
    assert fam.nu == count == len(fam) == 102 * 47
    assert build_family(n, 10001).nu == count


def test_theory_mode():
    k, rs, m = family_parameters(100, "theory", k0=3)
    eps = 1 / math.log(101)
    assert k == math.floor(3 + math.sqrt(math.log(101)))
    assert m == math.floor(1 / eps**2)
    assert np.allclose(rs, eps * np.arange(1, m + 1))
    with pytest.raises(ValidationError):
        family_parameters(100, "other")


@pytest.mark.parametrize("n", [100, 1000])
@pytest.mark.parametrize("mode", ["simulation", "theory"])
def test_member_invariants(n, mode):
    fam = build_family(n, 1001, mode=mode)
    for i in range(len(fam)):
        g = fam.gamma(i)
        assert g.size == 1001
        assert np.all((g >= 0) & (g <= 1))
        assert np.all(np.diff(g) <= 0)
        d = fam.d_gammas[i]
        assert np.all(g[:d] == 1.0)
        om = fam.omegas[i]
        assert np.all(g[int(math.floor(om)):] == 0)
    assert fam.nu_star == pytest.approx(max(fam.gamma(i).sum() for i in range(len(fam))))
    # dedup keeps enumeration order
    order = list(zip(fam.betas, fam.rs))
    assert order == sorted(order)


def test_first_weight_not_binary():
    """With j_* < 1 <= omega the first weight lies strictly inside (0, 1)."""
    fam = build_family(100, 1001, dedup=False)
    first = fam.matrix[:, 0]
    assert np.any((first > 0) & (first < 1))
    assert np.all(fam.d_gammas[(first > 0) & (first < 1)] == 0)


@given(st.integers(1, 30), st.floats(0.05, 10), st.floats(0.05, 10), st.integers(10, 5000))
def test_omega_monotone_in_r(beta, r1, r2, n):
    lo, hi = sorted((r1, r2))
    if hi > lo * (1 + 1e-9):
        assert omega(beta, hi, n, 0.5) > omega(beta, lo, n, 0.5)


def test_nu_star_growth():
    vals = [build_family(n, 20001).nu_star / n ** (1 / 3 + 0.1) for n in (100, 1000, 10000)]
    assert vals[0] > vals[1] > vals[2]


def test_small_p_truncation_and_zero_vectors():
    fam = build_family(1000, 5, dedup=False)
    assert fam.width <= 5
    assert np.any(fam.matrix.sum(axis=1) == 0)  # large beta gives omega < 1


def test_explicit_family_and_csv(tmp_path):
    fam = WeightFamily.from_vectors([np.ones(5), [1, 0.5, 0, 0, 0]])
    assert list(fam.d_gammas) == [5, 1]
    with pytest.raises(ValidationError):
        WeightFamily.from_vectors([[1.2, 0]])
    with pytest.raises(ValidationError):
        WeightFamily.from_vectors([])
    build_family(100, 101).to_csv(tmp_path / "f.csv")
    head = (tmp_path / "f.csv").read_text().splitlines()[0]
    assert head == "member,beta,r,omega,d_gamma,sum_gamma"
    sub = build_family(500, 1001).subsample(50)
    assert len(sub) <= 50
