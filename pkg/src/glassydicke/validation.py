"""Acceptance suite: each check returns a CheckResult; ``run_all`` prints one line per check.

``quick=True`` shrinks every check (N <= 8 for the enumeration checks, fewer
seeds, coarser grids, a smaller largest size for the finite-size check) so the whole
suite finishes in well under a minute.
"""

from __future__ import annotations

import math
import sys
import time
from dataclasses import dataclass
from typing import Callable, TextIO

import numpy as np

from . import exact
from .model import ModelParams, build_effective, sample_disorder
from .montecarlo import MCConfig, disorder_average, run_parallel_tempering
from .phase import (GridSpec, PhaseLabel, label_grid, labels_near, locate_boundary, optical_grid,
                    region_counts, scan_matter, scan_optical)
from .rs import RSParams, SolverOptions, default_rule, photon_order, solve_rs, stationarity, with_order


@dataclass
class CheckResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0
    budget: float | None = None

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        budget = f" / {self.budget:g} s" if self.budget else ""
        return f"[{tag}] {self.number} {self.name}: {self.detail} ({self.seconds:.1f} s{budget})"


def _timed(number: int, name: str, budget: float | None, fn: Callable[[], tuple[bool, str]]) -> CheckResult:
    t0 = time.perf_counter()
    try:
        ok, detail = fn()
    except Exception as exc:  # a crash is a failed check, not a crashed suite
        ok, detail = False, f"raised {type(exc).__name__}: {exc}"
    dt = time.perf_counter() - t0
    if budget is not None and dt > budget:
        ok, detail = False, detail + f"; over runtime budget"
    return CheckResult(number, name, ok, detail, dt, budget)


# 1 ---------------------------------------------------------------------------

def check_mapping(quick: bool = False) -> CheckResult:
    sizes = range(1, 9) if quick else range(1, 13)
    seeds = range(10) if quick else range(100)
    lams, betas = (0.0, 0.3, 1.0, 2.0), (0.1, 1.0, 5.0)

    def run():
        worst, where = 0.0, None
        for N in sizes:
            for seed in seeds:
                dis = sample_disorder(N, 0.3, 1.0, seed)
                for lam in lams:
                    for beta in betas:
                        r = exact.verify_mapping(dis, lam, beta)
                        if not r <= worst:
                            worst, where = r, (N, seed, lam, beta)
        ok = worst < 1e-10
        return ok, f"max |Zq(1-e^-b)/(b Zcl) - 1| = {worst:.2e} at (N, seed, lambda, beta) = {where}"

    return _timed(1, "photon-elimination identity", None if quick else 120.0, run)


# 2 ---------------------------------------------------------------------------

def curie_weiss_root() -> float:
    """Positive root of m = tanh(2 m) by plain bisection."""
    lo, hi = 0.5, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid - math.tanh(2 * mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def check_curie_weiss(quick: bool = False) -> CheckResult:
    def run():
        root = curie_weiss_root()
        sol = solve_rs(RSParams(T=0.5, jtilde0=1.0, J=0.0, lam=1.0))
        dm = abs(sol.m - root)
        dth = abs(sol.theta - sol.m**2)
        dth_root = abs(sol.theta - root**2)
        ok = sol.converged and dm < 1e-4 and dth < 1e-4 and dth_root < 1e-4
        return ok, f"m = {sol.m:.10f} vs root {root:.10f} (|d| = {dm:.1e}); |theta - m^2| = {dth_root:.1e}"

    return _timed(2, "Curie-Weiss limit", 1.0, run)


# 3 ---------------------------------------------------------------------------

def check_critical_lines(quick: bool = False) -> CheckResult:
    def run():
        tc_f = locate_boundary("T", {"jtilde0": 2.0, "J": 1.0}, (1.0, 3.0), tol=1e-5,
                               target=PhaseLabel.FERROMAGNETIC)
        tc_sg = locate_boundary("T", {"jtilde0": 0.0, "J": 1.0}, (0.5, 1.5), tol=1e-5,
                                target=PhaseLabel.SPIN_GLASS)
        ok = abs(tc_f - 2.0) < 1e-3 and abs(tc_sg - 1.0) < 1e-3
        return ok, f"T_c(P/F, jtilde0=2J) = {tc_f:.6f}; T_c(P/SG, jtilde0=0) = {tc_sg:.6f}"

    return _timed(3, "critical lines", 10.0, run)


# 4 ---------------------------------------------------------------------------

_SCAN_CACHE: dict = {}


def matter_scan(quick: bool = False):
    grid = GridSpec(0.0, 2.0, 21, 0.05, 2.0, 20) if quick else GridSpec(0.0, 2.0, 41, 0.05, 2.0, 40)
    if grid not in _SCAN_CACHE:
        _SCAN_CACHE[grid] = scan_matter(grid)
    return grid, _SCAN_CACHE[grid]


def check_topology(quick: bool = False) -> CheckResult:
    def run():
        grid, pts = matter_scan(quick)
        labels = label_grid(pts, grid.axis1_count, grid.axis2_count)
        counts = region_counts(labels)
        i = int(np.argmin(np.abs(grid.axis1() - 1.0)))
        j = int(np.argmin(np.abs(grid.axis2() - 1.0)))
        near = labels_near(labels, i, j, radius=1)
        want = {PhaseLabel.PARAMAGNETIC.value, PhaseLabel.FERROMAGNETIC.value, PhaseLabel.SPIN_GLASS.value}
        ok = counts == {k: 1 for k in want} and near >= want
        return ok, (f"{grid.axis1_count}x{grid.axis2_count} grid, regions {counts}, "
                    f"labels within one cell of (1, 1): {sorted(near)}")

    return _timed(4, "phase-diagram topology", None if quick else 120.0, run)


# 5 ---------------------------------------------------------------------------

def check_optical(quick: bool = False) -> CheckResult:
    def run():
        lam_star = locate_boundary("lambda", {"T": 1.5, "J0": 0.0, "J": 1.0}, (0.0, 2.0), tol=1e-6,
                                   target=PhaseLabel.FERROMAGNETIC)
        d = abs(lam_star - math.sqrt(0.75))
        # lambda = 0, 1/4, ..., 1 lands on jtilde0 = 2 lambda^2 = 0, 1/8, 1/2, 9/8, 2 exactly
        temps = (0.05, 2.0, 6 if quick else 40)
        opt = scan_optical(optical_grid(0.0, 1.0, 5, *temps))
        mat = scan_matter(GridSpec(0.0, 2.0, 17, *temps))
        by_node = {(p.axis1, p.axis2): p for p in mat}
        mismatches, shared = 0, 0
        for p in opt:
            ref = by_node.get((2.0 * p.axis1**2, p.axis2))
            if ref is None:
                continue
            shared += 1
            same = (p.m, p.q, p.free_energy, p.label) == (ref.m, ref.q, ref.free_energy, ref.label)
            same &= p.theta == photon_order(p.m, p.axis1)
            mismatches += not same
        ok = d < 1e-4 and shared == len(opt) and mismatches == 0
        return ok, (f"lambda* = {lam_star:.7f} (|d| = {d:.1e}); "
                    f"{shared} shared nodes, {mismatches} differ")

    return _timed(5, "optical boundary and shift equivalence", 30.0, run)


# 6 ---------------------------------------------------------------------------

def check_mc_vs_exact(quick: bool = False) -> CheckResult:
    trials = 10 if quick else 50
    sweeps = 12_000 if quick else 22_000

    def run():
        bad = []
        for k in range(trials):
            model = build_effective(sample_disorder(8, 0.3, 1.0, 1000 + k), 0.5)
            ref = exact.enumerate_classical(model, 1.0)
            est = run_parallel_tempering(model, MCConfig(sweeps=sweeps, burn_in=2000, ladder=(1.0,), seed=k))
            z1 = (est.mean["mean_abs_m"][0] - ref.mean_abs_m) / est.stderr["mean_abs_m"][0]
            z2 = (est.mean["mean_m2"][0] - ref.mean_s2) / est.stderr["mean_m2"][0]
            if max(abs(z1), abs(z2)) > 3:
                bad.append(k)
        frac = 1 - len(bad) / trials
        return frac >= 0.95, f"{trials - len(bad)}/{trials} trials within 3 SE (failed: {bad})"

    return _timed(6, "Monte Carlo vs enumeration", None if quick else 300.0, run)


# 7 ---------------------------------------------------------------------------

# Ferromagnetic test point: jtilde0 = 2 lambda^2 = 1 with weak disorder.
FS_POINT = dict(T=0.8, J0=0.0, J=0.1, lam=math.sqrt(0.5))


def finite_size_series(sizes, realizations, sweeps=1500, burn_in=500, seed=11, point=FS_POINT):
    """(N, theta_hat - lambda^2 m_RS^2, standard error) for each size."""
    p = point
    ref = solve_rs(RSParams(T=p["T"], jtilde0=p["J0"] + 2 * p["lam"] ** 2, J=p["J"], lam=p["lam"]))
    rows = []
    for N, R in zip(sizes, realizations):
        est = disorder_average(ModelParams(N=N, lam=p["lam"], J0=p["J0"], J=p["J"], T=p["T"]), R,
                               MCConfig(sweeps=sweeps, burn_in=burn_in, ladder=(p["T"],), seed=seed))
        rows.append((N, float(est.mean["theta_hat"][0]) - ref.theta, float(est.stderr["theta_hat"][0])))
    return ref, rows


def strictly_decreasing(rows, sigmas: float = 3.0) -> list[bool]:
    """|d| drops between consecutive sizes by more than ``sigmas`` combined standard errors."""
    return [abs(a[1]) - abs(b[1]) > sigmas * math.hypot(a[2], b[2]) for a, b in zip(rows, rows[1:])]


def check_finite_size(quick: bool = False) -> CheckResult:
    sizes, reps = ((64, 128, 256), (100, 100, 80)) if quick else ((64, 256, 1024), (400, 600, 200))

    def run():
        ref, rows = finite_size_series(sizes, reps)
        steps = strictly_decreasing(rows)
        desc = ", ".join(f"N={N}: {d:+.5f}+-{s:.5f}" for N, d, s in rows)
        return all(steps) and ref.m > 0, f"m_RS = {ref.m:.4f}; theta_hat - lambda^2 m^2: {desc}"

    return _timed(7, "theta finite-size consistency", None if quick else 900.0, run)


# 8 ---------------------------------------------------------------------------

def check_robustness(quick: bool = False) -> CheckResult:
    def run():
        grid, pts = matter_scan(quick)
        fine = with_order(SolverOptions(), 32)
        worst_order, worst_grad, n = 0.0, 0.0, 0
        for p in pts:
            if not p.converged:
                continue
            n += 1
            params = RSParams(T=p.axis2 * grid.J, jtilde0=p.axis1 * grid.J, J=grid.J)
            sol2 = solve_rs(params, fine)
            worst_order = max(worst_order, abs(p.m - sol2.m), abs(p.q - sol2.q))
            worst_grad = max(worst_grad, *map(abs, stationarity(p, params, default_rule(params))))
        ok = n > 0 and worst_order < 1e-10 and worst_grad < 1e-6
        return ok, (f"{n} converged nodes; max order-doubling change {worst_order:.1e}, "
                    f"max |grad f| {worst_grad:.1e}")

    return _timed(8, "quadrature and solver robustness", None, run)


CHECKS = (check_mapping, check_curie_weiss, check_critical_lines, check_topology, check_optical,
          check_mc_vs_exact, check_finite_size, check_robustness)


def run_all(quick: bool = False, stream: TextIO | None = None) -> bool:
    stream = sys.stdout if stream is None else stream
    ok = True
    for check in CHECKS:
        res = check(quick)
        print(res.line(), file=stream, flush=True)
        ok &= res.passed
    return ok
