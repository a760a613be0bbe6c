"""Grid scans of the RS solution and phase-boundary refinement.

Matter diagram: axes (J~0/J, T/J) at fixed J. Optical diagram: axes
(lambda, T) at fixed (J0, J), mapped onto the matter problem through
J~0 = J0 + 2 lambda^2. The superradiant region is exactly the ferromagnetic one.
"""

from __future__ import annotations

import csv
import enum
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence, TextIO

import numpy as np
from scipy import ndimage

from .rs import RSParams, RSSolution, SolverOptions, solve_rs


class PhaseLabel(str, enum.Enum):
    PARAMAGNETIC = "PARAMAGNETIC"
    FERROMAGNETIC = "FERROMAGNETIC"
    SPIN_GLASS = "SPIN_GLASS"
    UNCLASSIFIED = "UNCLASSIFIED"

    @property
    def optical(self) -> str:
        if self is PhaseLabel.UNCLASSIFIED:
            return "UNCLASSIFIED"
        return "SUPERRADIANT" if self is PhaseLabel.FERROMAGNETIC else "SUBRADIANT"

    @property
    def superradiant(self) -> bool:
        return self is PhaseLabel.FERROMAGNETIC


class BracketError(ValueError):
    """Both ends of a bisection bracket carry the same classification."""


@dataclass(frozen=True)
class PhasePoint:
    axis1: float
    axis2: float
    m: float
    q: float
    theta: float
    free_energy: float
    label: PhaseLabel
    converged: bool
    iterations: int


@dataclass(frozen=True)
class GridSpec:
    axis1_min: float
    axis1_max: float
    axis1_count: int
    axis2_min: float
    axis2_max: float
    axis2_count: int
    J: float = 1.0
    J0: float = 0.0
    lam: float = 0.0
    tol: float = 1e-6
    axis1_name: str = "jtilde0/J"
    axis2_name: str = "T/J"

    def __post_init__(self):
        for name in ("axis1", "axis2"):
            lo, hi, n = (getattr(self, f"{name}_{k}") for k in ("min", "max", "count"))
            if n < 2:
                raise ValueError(f"{name}_count must be >= 2, got {n}")
            if not lo < hi:
                raise ValueError(f"{name}_min must be < {name}_max, got [{lo}, {hi}]")

    def axis1(self) -> np.ndarray:
        return np.linspace(self.axis1_min, self.axis1_max, self.axis1_count)

    def axis2(self) -> np.ndarray:
        return np.linspace(self.axis2_min, self.axis2_max, self.axis2_count)


def classify(solution: RSSolution, tol: float = 1e-6) -> PhaseLabel:
    if not solution.converged:
        return PhaseLabel.UNCLASSIFIED
    if abs(solution.m) > tol:
        return PhaseLabel.FERROMAGNETIC
    if solution.q > tol:
        return PhaseLabel.SPIN_GLASS
    return PhaseLabel.PARAMAGNETIC


def _column(args) -> list[PhasePoint]:
    a1, jt0, J, lam, temps, a2_values, tol, options, warm_start = args
    out = []
    prev = None
    # descending T: the previous (hotter) node seeds the next one
    for k in np.argsort(-np.asarray(temps), kind="stable"):
        T = float(temps[k])
        params = RSParams(T=T, jtilde0=jt0, J=J, lam=lam)
        sol = solve_rs(params, options, warm=prev if warm_start else None)
        if sol.converged:
            prev = sol
        out.append((k, PhasePoint(a1, float(a2_values[k]), sol.m, sol.q, sol.theta,
                                  sol.free_energy, classify(sol, tol), sol.converged,
                                  sol.iterations)))
    out.sort(key=lambda kp: kp[0])
    return [p for _, p in out]


def _run_columns(jobs: list, workers: int) -> list[PhasePoint]:
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            cols = list(ex.map(_column, jobs))
    else:
        cols = [_column(j) for j in jobs]
    return [p for col in cols for p in col]


def scan_matter(grid: GridSpec, options: SolverOptions | None = None, warm_start: bool = True,
                workers: int = 1) -> list[PhasePoint]:
    """One PhasePoint per node, ordered axis1-major, axis2 ascending within a column."""
    if not grid.J > 0:
        raise ValueError("scan_matter needs J > 0 to set the units")
    a2 = grid.axis2()
    temps = a2 * grid.J
    jobs = [(float(a1), float(a1) * grid.J, grid.J, grid.lam, temps, a2, grid.tol, options, warm_start)
            for a1 in grid.axis1()]
    return _run_columns(jobs, workers)


def scan_matter_nodes(jtilde0_values: Iterable[float], temps: Sequence[float], J: float,
                      lam: float = 0.0, tol: float = 1e-6, options: SolverOptions | None = None,
                      warm_start: bool = True, workers: int = 1) -> list[PhasePoint]:
    """Matter scan on explicit node values (axis1 = J~0 itself, axis2 = T)."""
    temps = np.asarray(temps, dtype=float)
    jobs = [(float(jt), float(jt), J, lam, temps, temps, tol, options, warm_start)
            for jt in jtilde0_values]
    return _run_columns(jobs, workers)


def scan_optical(grid: GridSpec, options: SolverOptions | None = None, warm_start: bool = True,
                 workers: int = 1) -> list[PhasePoint]:
    """Axes (lambda, T) at fixed J0, J; theta = lambda^2 m^2 attached per node."""
    temps = grid.axis2()
    jobs = []
    for lam in grid.axis1():
        lam = float(lam)
        if lam < 0:
            raise ValueError("lambda axis must be >= 0")
        jobs.append((lam, grid.J0 + 2.0 * lam**2, grid.J, lam, temps, temps, grid.tol, options,
                     warm_start))
    return _run_columns(jobs, workers)


def optical_grid(lam_min, lam_max, lam_count, T_min, T_max, T_count, J0=0.0, J=1.0, tol=1e-6) -> GridSpec:
    return GridSpec(lam_min, lam_max, lam_count, T_min, T_max, T_count, J=J, J0=J0, tol=tol,
                    axis1_name="lambda", axis2_name="T")


def _params_along(scan_axis: str, value: float, fixed: dict) -> RSParams:
    p = dict(fixed)
    J = float(p.get("J", 1.0))
    if scan_axis == "T":
        T = value
        lam = float(p.get("lambda", p.get("lam", 0.0)))
        jt0 = float(p["jtilde0"]) if "jtilde0" in p else float(p.get("J0", 0.0)) + 2 * lam**2
    elif scan_axis in ("lambda", "lam"):
        lam = value
        T = float(p["T"])
        jt0 = float(p.get("J0", 0.0)) + 2 * lam**2
    elif scan_axis == "jtilde0":
        jt0 = value
        T = float(p["T"])
        lam = float(p.get("lambda", p.get("lam", 0.0)))
    else:
        raise ValueError(f"unknown scan axis {scan_axis!r}; expected T, lambda or jtilde0")
    return RSParams(T=T, jtilde0=jt0, J=J, lam=lam)


def locate_boundary(scan_axis: str, fixed_params: dict, bracket: tuple[float, float],
                    tol: float = 1e-4, target: PhaseLabel = PhaseLabel.FERROMAGNETIC,
                    options: SolverOptions | None = None, class_tol: float = 1e-6) -> float:
    """Bisect on ``label == target`` along one control parameter.

    ``fixed_params`` holds the remaining controls (J, and T / J0 / jtilde0 /
    lambda as appropriate).
    """
    lo, hi = map(float, bracket)
    if not lo < hi:
        raise ValueError(f"bracket must satisfy lo < hi, got {bracket}")

    def inside(x: float) -> bool:
        sol = solve_rs(_params_along(scan_axis, x, fixed_params), options)
        lab = classify(sol, class_tol)
        if lab is PhaseLabel.UNCLASSIFIED:
            raise RuntimeError(f"solver did not converge at {scan_axis}={x}")
        return lab is target

    f_lo, f_hi = inside(lo), inside(hi)
    if f_lo == f_hi:
        raise BracketError(
            f"{scan_axis} bracket [{lo}, {hi}] has the same classification at both ends"
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if inside(mid) == f_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def label_grid(points: Sequence[PhasePoint], n1: int, n2: int) -> np.ndarray:
    """Labels reshaped to (axis1, axis2) for points ordered axis1-major."""
    return np.array([p.label.value for p in points], dtype=object).reshape(n1, n2)


def region_counts(labels: np.ndarray) -> dict[str, int]:
    """Number of 4-connected regions per label."""
    out = {}
    for lab in sorted(set(labels.ravel())):
        _, n = ndimage.label(labels == lab)
        out[lab] = int(n)
    return out


def labels_near(labels: np.ndarray, i: int, j: int, radius: int = 1) -> set[str]:
    sub = labels[max(i - radius, 0): i + radius + 1, max(j - radius, 0): j + radius + 1]
    return set(sub.ravel())


def label_flips(points: Sequence[PhasePoint], key: Callable[[PhasePoint], float],
                ) -> list[tuple[float, float, PhaseLabel, PhaseLabel]]:
    """Intervals along one line of nodes where the label changes."""
    pts = sorted(points, key=key)
    return [(key(a), key(b), a.label, b.label) for a, b in zip(pts, pts[1:]) if a.label != b.label]


CSV_FIELDS = ["axis1", "axis2", "m", "q", "theta", "free_energy", "label", "converged", "iterations"]


def _fmt(x) -> str:
    return f"{x:.17g}"


def write_csv(points: Iterable[PhasePoint], fh: TextIO, header_lines: Sequence[str] = ()) -> None:
    for line in header_lines:
        fh.write(f"#! {line}\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for p in points:
        w.writerow([_fmt(p.axis1), _fmt(p.axis2), _fmt(p.m), _fmt(p.q), _fmt(p.theta),
                    _fmt(p.free_energy), p.label.value, str(p.converged).lower(), p.iterations])


def read_csv(fh: TextIO) -> list[PhasePoint]:
    rows = csv.DictReader(line for line in fh if not line.startswith("#"))
    return [PhasePoint(float(r["axis1"]), float(r["axis2"]), float(r["m"]), float(r["q"]),
                       float(r["theta"]), float(r["free_energy"]), PhaseLabel(r["label"]),
                       r["converged"] == "true", int(r["iterations"])) for r in rows]
