import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from glassydicke.model import (DisorderRealization, ModelParams, build_effective, effective_energy,
                               magnetization, n_pairs, sample_disorder)


def test_params_validation():
    p = ModelParams(N=4, lam=0.5, J0=1.0, T=2.0)
    assert p.beta == 0.5 and p.jtilde0 == 1.5
    for bad in (dict(N=0), dict(N=2.5), dict(N=2, T=0), dict(N=2, J=-1), dict(N=2, lam=-0.1),
                dict(N=2, epsilon=0.1)):
        with pytest.raises(ValueError):
            ModelParams(**bad)


def test_zero_variance_disorder_is_exact():
    d = sample_disorder(4, 1.0, 0.0, seed=123)
    assert np.all(d.couplings == 0.25)
    assert d.couplings.shape == (n_pairs(4),)


def test_disorder_moments():
    N, J0, J = 1000, 2.0, 1.0
    x = sample_disorder(N, J0, J, seed=7).couplings
    a = N * x
    assert abs(a.mean() - J0) < 5 * a.std(ddof=1) / math.sqrt(a.size)
    b = math.sqrt(N) * x
    var = b.var(ddof=1)
    # standard error of a Gaussian sample variance is var * sqrt(2 / (n - 1))
    assert abs(var - J**2) < 5 * var * math.sqrt(2 / (b.size - 1))


def test_disorder_moments_over_many_draws():
    N, J0, J = 5, -0.7, 1.3
    x = np.concatenate([sample_disorder(N, J0, J, s).couplings for s in range(1000)])
    assert x.size >= 10_000
    se_mean = math.sqrt(J**2 / N / x.size)
    assert abs(x.mean() - J0 / N) < 5 * se_mean
    assert abs(x.var(ddof=1) - J**2 / N) < 5 * (J**2 / N) * math.sqrt(2 / (x.size - 1))


def test_disorder_determinism_and_row_independence():
    a = sample_disorder(2, 0.0, 1.0, 42)
    b = sample_disorder(2, 0.0, 1.0, 42)
    assert a.coupling(0, 1) == b.coupling(0, 1)
    assert not np.array_equal(sample_disorder(5, 0.0, 1.0, 10).couplings,
                              sample_disorder(5, 0.0, 1.0, 9).couplings)


def test_rows_come_from_independent_keyed_streams():
    # row i of an N=5 draw uses the same stream as row i of an N=8 draw, so
    # the standardized values of the shorter row are a prefix of the longer one
    small, big = sample_disorder(5, 0.0, 1.0, 9), sample_disorder(8, 0.0, 1.0, 9)
    for i in range(4):
        zs = np.array([small.coupling(i, j) for j in range(i + 1, 5)]) * math.sqrt(5)
        zb = np.array([big.coupling(i, j) for j in range(i + 1, 8)]) * math.sqrt(8)
        np.testing.assert_allclose(zs, zb[: zs.size], rtol=1e-14)


def test_disorder_bad_inputs():
    with pytest.raises(ValueError):
        sample_disorder(0, 0, 1, 1)
    with pytest.raises(ValueError):
        sample_disorder(3, 0, -1, 1)
    with pytest.raises(ValueError):
        DisorderRealization(3, np.zeros(2), 0, 0.0, 1.0)


def test_couplings_read_only_and_symmetric():
    d = sample_disorder(6, 0.2, 1.0, 3)
    with pytest.raises(ValueError):
        d.couplings[0] = 1.0
    M = d.matrix()
    assert np.array_equal(M, M.T) and np.all(np.diag(M) == 0)
    assert d.coupling(4, 1) == d.coupling(1, 4) == M[1, 4]
    with pytest.raises(ValueError):
        d.coupling(2, 2)


def test_serialization_round_trip(tmp_path):
    d = sample_disorder(7, 0.3, 1.1, 2**63 + 5)
    path = tmp_path / "d.txt"
    d.save(path)
    text = path.read_text().splitlines()
    assert text[:4] == ["N=7", "J0=0.29999999999999999", "J=1.1000000000000001", f"seed={2**63 + 5}"]
    assert text[4].startswith("1 2 ")
    e = DisorderRealization.load(path)
    assert e.N == d.N and e.seed == d.seed and e.J0 == d.J0 and e.J == d.J
    assert np.array_equal(e.couplings, d.couplings)


def test_load_rejects_incomplete(tmp_path):
    path = tmp_path / "d.txt"
    path.write_text("N=3\nJ0=0\nJ=1\nseed=1\n1 2 0.5\n")
    with pytest.raises(ValueError, match="pairs"):
        DisorderRealization.load(path)
    path.write_text("N=3\nJ0=0\nJ=1\n1 2 0.5\n")
    with pytest.raises(ValueError, match="seed"):
        DisorderRealization.load(path)


def test_build_effective_examples():
    d = DisorderRealization(4, np.zeros(6), 0, 0.0, 0.0)
    m = build_effective(d, 1.0)
    assert np.all(m.K == 0.5) and m.jtilde0 == 2.0 and m.offset == -1.0
    d2 = sample_disorder(5, 1.0, 1.0, 0)
    m0 = build_effective(d2, 0.0)
    assert np.array_equal(m0.K, d2.couplings) and m0.offset == 0
    assert build_effective(d2, 0.5).jtilde0 == 1.5
    with pytest.raises(ValueError):
        build_effective(d2, -1.0)


@settings(max_examples=60, deadline=None)
@given(N=st.integers(1, 30), lam=st.floats(0, 5), seed=st.integers(0, 2**64 - 1),
       J0=st.floats(-3, 3), J=st.floats(0, 3))
def test_shift_is_exact(N, lam, seed, J0, J):
    d = sample_disorder(N, J0, J, seed)
    m = build_effective(d, lam)
    if N > 1:
        # the shift is stored as J_ij + 2 lambda^2 / N; recompute it the same way
        assert np.max(np.abs(m.K - (d.couplings + 2 * lam**2 / N))) == 0
    assert m.jtilde0 - J0 == pytest.approx(2 * lam**2, abs=1e-12)


def test_energy_examples():
    d = DisorderRealization(5, np.full(10, 0.3), 0, 1.5, 0.0)
    m = build_effective(d, 0.0)
    assert effective_energy(m, np.ones(5)) == pytest.approx(-0.3 * 10)
    m1 = build_effective(DisorderRealization(1, np.empty(0), 0, 0, 1), 0.8)
    assert effective_energy(m1, [1]) == -0.8**2
    with pytest.raises(ValueError):
        effective_energy(m, np.ones(4))
    with pytest.raises(ValueError):
        effective_energy(m, [1, 1, 0, 1, 1])


@settings(max_examples=50, deadline=None)
@given(N=st.integers(1, 20), seed=st.integers(0, 10**9), lam=st.floats(0, 2))
def test_energy_flip_symmetry(N, seed, lam):
    m = build_effective(sample_disorder(N, 0.5, 1.0, seed), lam)
    s = np.random.default_rng(seed).choice([-1, 1], size=N)
    assert effective_energy(m, s) - effective_energy(m, -s) == 0.0


def test_magnetization():
    assert magnetization([1, 1, 1]) == 1.0
    assert magnetization([1, -1, 1, -1]) == 0.0
    s = np.array([1, 1, -1, 1, -1])
    assert magnetization(s) == -magnetization(-s)
    assert -1 <= magnetization(s) <= 1
