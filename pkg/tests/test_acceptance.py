"""Acceptance criteria at full size; each test prints one PASS/FAIL line."""

import io
import time

import pytest

from glassydicke import exact, model as M, validation as V


@pytest.fixture
def report(capsys):
    def show(result):
        with capsys.disabled():
            print("\n" + result.line(), flush=True)
        return result
    return show


@pytest.mark.parametrize("check", V.CHECKS, ids=[f"criterion_{i}" for i in range(1, len(V.CHECKS) + 1)])
def test_criterion(check, report):
    res = report(check(quick=False))
    assert res.passed, res.detail


def test_tampered_shift_fails_mapping_criterion(monkeypatch, report):
    def tampered(disorder, lam):
        e = M.build_effective(disorder, lam)
        return M.EffectiveModel(e.N, disorder.couplings + lam**2 / disorder.N, e.offset, e.jtilde0, e.lam)

    monkeypatch.setattr(exact, "build_effective", tampered)
    res = V.check_mapping(quick=True)
    report(V.CheckResult(0, "mutation check (shift 2 lambda^2/N -> lambda^2/N)", not res.passed,
                         "criterion 1 " + ("fails as it should" if not res.passed else "still passes"),
                         res.seconds))
    assert not res.passed


def test_quick_suite_under_a_minute(report):
    buf = io.StringIO()
    t0 = time.perf_counter()
    ok = V.run_all(quick=True, stream=buf)
    dt = time.perf_counter() - t0
    lines = buf.getvalue().splitlines()
    report(V.CheckResult(0, "quick suite", ok and dt < 60, f"{sum(l.startswith('[PASS]') for l in lines)}"
                         f"/{len(lines)} checks pass", dt, 60))
    assert len(lines) == len(V.CHECKS)
    assert ok, buf.getvalue()
    assert dt < 60
