import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import logsumexp

from glassydicke import exact
from glassydicke.exact import (CapacityError, enumerate_classical, quantum_closed_form,
                               verify_mapping)
from glassydicke.model import (DisorderRealization, build_effective, effective_energy,
                               sample_disorder)

TWO_SPIN_S2 = 0.8807970779778823  # 1 / (1 + e^-2)


def fixed(N, value, J0=0.0, J=0.0):
    return DisorderRealization(N, np.full(N * (N - 1) // 2, value), 0, J0, J)


def brute(model, beta):
    """Plain loop over configurations: (logZcl, <m^2>, <|m|>)."""
    N = model.N
    E = np.array([effective_energy(model, s) for s in itertools.product([-1, 1], repeat=N)])
    M = np.array([np.mean(s) for s in itertools.product([-1, 1], repeat=N)])
    w = np.exp(-beta * (E - E.min()))
    w /= w.sum()
    return logsumexp(-beta * E) - math.log(beta), float(w @ M**2), float(w @ np.abs(M))


def test_two_free_spins():
    r = enumerate_classical(build_effective(fixed(2, 0.0), 0.0), 1.0)
    assert r.mean_s2 == pytest.approx(0.5, abs=1e-15)
    assert r.mean_abs_m == pytest.approx(0.5, abs=1e-15)
    assert r.logZcl == pytest.approx(math.log(4.0), abs=1e-14)


def test_two_coupled_spins():
    r = enumerate_classical(build_effective(fixed(2, 1.0), 0.0), 1.0)
    assert r.mean_s2 == pytest.approx(TWO_SPIN_S2, abs=1e-14)


def test_single_spin_offset():
    r = enumerate_classical(build_effective(fixed(1, 0.0), 1.0), 2.0)
    assert r.logZcl == pytest.approx(2.0, abs=1e-14)
    assert r.free_energy_per_spin == pytest.approx(-1.0, abs=1e-14)


@pytest.mark.parametrize("N,seed,lam,beta", [(3, 1, 0.0, 1.0), (5, 2, 0.7, 2.0), (9, 3, 1.3, 0.3),
                                             (10, 4, 0.2, 5.0)])
def test_against_plain_loop(N, seed, lam, beta):
    model = build_effective(sample_disorder(N, 0.4, 1.0, seed), lam)
    r = enumerate_classical(model, beta)
    logz, s2, am = brute(model, beta)
    assert r.logZcl == pytest.approx(logz, abs=1e-12)
    assert r.mean_s2 == pytest.approx(s2, abs=1e-12)
    assert r.mean_abs_m == pytest.approx(am, abs=1e-12)
    assert r.free_energy_per_spin == pytest.approx(-logz / (beta * N), abs=1e-12)


def test_summation_order_invariance():
    model = build_effective(sample_disorder(12, 0.3, 1.0, 5), 0.9)
    beta = 3.0
    E = np.array([effective_energy(model, s) for s in itertools.product([-1, 1], repeat=12)])
    ref = enumerate_classical(model, beta).logZcl
    rng = np.random.default_rng(0)
    for _ in range(3):
        acc = -np.inf
        for e in rng.permutation(E):
            acc = np.logaddexp(acc, -beta * e)
        assert abs(acc - math.log(beta) - ref) < 1e-12


def test_report_invariants_and_json():
    r = enumerate_classical(build_effective(sample_disorder(8, 0.0, 1.0, 1), 0.4), 1.5)
    assert 0 <= r.mean_s2 <= 1 and 0 <= r.mean_abs_m <= 1
    assert r.mean_s2 >= r.mean_abs_m**2
    rec = json.loads(r.to_json())
    assert set(rec) == {"logZcl", "free_energy_per_spin", "mean_s2", "mean_abs_m", "beta"}
    q = quantum_closed_form(sample_disorder(8, 0.0, 1.0, 1), 0.4, 1.5)
    assert set(json.loads(q.to_json())) == {"logZq", "theta", "bose_occupancy", "beta"}


def test_guards():
    with pytest.raises(CapacityError):
        enumerate_classical(build_effective(sample_disorder(25, 0, 1, 0), 0.0), 1.0)
    with pytest.raises(CapacityError):
        quantum_closed_form(sample_disorder(25, 0, 1, 0), 0.0, 1.0)
    with pytest.raises(ValueError):
        enumerate_classical(build_effective(sample_disorder(3, 0, 1, 0), 0.0), 0.0)
    with pytest.raises(ValueError):
        quantum_closed_form(sample_disorder(3, 0, 1, 0), 0.0, -1.0)


def test_decoupled_photon():
    d = sample_disorder(6, 0.2, 1.0, 11)
    beta = 0.7
    q = quantum_closed_form(d, 0.0, beta)
    c = enumerate_classical(build_effective(d, 0.0), beta)
    assert q.logZq == pytest.approx(-math.log(-math.expm1(-beta)) + c.logZcl + math.log(beta), abs=1e-12)
    assert q.theta == pytest.approx(q.bose_occupancy / 6, abs=1e-15)
    assert q.bose_occupancy == pytest.approx(1 / math.expm1(beta), rel=1e-15)
    assert verify_mapping(d, 0.0, beta) < 1e-12


def test_single_spin_quantum():
    d = fixed(1, 0.0)
    assert abs(quantum_closed_form(d, 1.0, 40.0).theta - 1.0) < 1e-15
    assert verify_mapping(d, 1.0, 1.0) < 1e-12


def test_mapping_example():
    assert verify_mapping(sample_disorder(8, 0.0, 1.0, 2024), 0.7, 2.0) < 1e-10


@settings(max_examples=40, deadline=None)
@given(N=st.integers(1, 10), seed=st.integers(0, 2**32), lam=st.floats(0, 2.5),
       beta=st.floats(0.05, 6), J0=st.floats(-2, 2))
def test_mapping_identity_property(N, seed, lam, beta, J0):
    assert verify_mapping(sample_disorder(N, J0, 1.0, seed), lam, beta) < 1e-10


@settings(max_examples=40, deadline=None)
@given(N=st.integers(1, 10), seed=st.integers(0, 2**32), lam=st.floats(0, 2.5), beta=st.floats(0.05, 6))
def test_theta_uses_the_same_weights(N, seed, lam, beta):
    d = sample_disorder(N, 0.3, 1.0, seed)
    q = quantum_closed_form(d, lam, beta)
    c = enumerate_classical(build_effective(d, lam), beta)
    assert abs((q.theta - q.bose_occupancy / N) - lam**2 * c.mean_s2) < 1e-12 * max(1, lam**2)


def test_wrong_shift_breaks_the_identity(monkeypatch):
    from glassydicke import model as M

    def tampered(disorder, lam):
        e = M.build_effective(disorder, lam)
        return M.EffectiveModel(e.N, disorder.couplings + lam**2 / disorder.N, e.offset, e.jtilde0, e.lam)

    monkeypatch.setattr(exact, "build_effective", tampered)
    assert verify_mapping(sample_disorder(6, 0.0, 1.0, 3), 1.0, 1.0) > 1e-3
