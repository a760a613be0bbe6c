"""Replica-symmetric saddle point of the disordered qubit-cavity model.

With the photon eliminated the model is Sherrington-Kirkpatrick with mean
coupling J~0 = J0 + 2 lambda^2. Under the replica-symmetric ansatz the saddle
point conditions reduce to

    m = <tanh(beta H)>_z,   q = <tanh^2(beta H)>_z,   H = J~0 m + J sqrt(q) z,

averaged over a standard normal z, and the free energy per spin is

    f = -(beta J^2 / 4)(1 - q)^2 + (J~0 / 2) m^2 - T <log 2 cosh(beta H)>_z.

Derivation notes: the replicated partition function couples replicas through
beta^2 J^2 sum_{u<v} q_uv s^u s^v + beta J~0 sum_u m_u s^u. Setting q_uv = q and
m_u = m, decoupling the (sum_u s^u)^2 term with one Gaussian field z and taking
n -> 0 gives f above; d f / d m and d f / d q vanish exactly on the fixed point
of the two equations. The auxiliary source used to differentiate with respect
to the photon weight only serves to show that the photon occupation per qubit
tracks m^2; it has no runtime counterpart here. The constant in front of m^2 is
lambda^2 (see ``photon_order``), which the exact small-N trace confirms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .quadrature import QuadratureRule, composite_rule

SNAP_M = 1e-8
FERRO_START = (0.999, 0.999)
ZERO_M_START = (0.0, 0.999)


@dataclass(frozen=True)
class RSParams:
    T: float
    jtilde0: float
    J: float
    lam: float = 0.0

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError(f"T must be > 0, got {self.T!r}")
        if self.J < 0:
            raise ValueError(f"J must be >= 0, got {self.J!r}")
        if self.lam < 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam!r}")

    @property
    def beta(self) -> float:
        return 1.0 / self.T


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-10
    max_iter: int = 100_000
    damping: float = 0.5
    order: int = 16  # Legendre nodes per panel of the composite rule
    newton_after: int = 200

    def __post_init__(self):
        if not 0 < self.damping <= 1:
            raise ValueError(f"damping must be in (0, 1], got {self.damping!r}")
        if self.tol <= 0:
            raise ValueError("tol must be > 0")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass(frozen=True)
class RSSolution:
    m: float
    q: float
    free_energy: float
    theta: float
    converged: bool
    iterations: int
    residual: float
    branch: str


def default_rule(params: RSParams, order: int = 16) -> QuadratureRule:
    """Composite rule whose panels resolve tanh(beta * J * z) at this temperature."""
    return composite_rule(order, params.beta * params.J)


def _fields(m: float, q: float, params: RSParams, rule: QuadratureRule):
    b = params.beta
    spread = params.J * math.sqrt(max(q, 0.0))
    if spread == 0.0:
        return np.array([b * params.jtilde0 * m]), np.ones(1)
    return b * (params.jtilde0 * m + spread * rule.nodes), rule.weights


def rs_map(m: float, q: float, params: RSParams, rule: QuadratureRule) -> tuple[float, float]:
    if q < 0:
        raise ValueError(f"q must be >= 0, got {q!r}")
    a, w = _fields(m, q, params, rule)
    t = np.tanh(a)
    return float(w @ t), float(w @ (t * t))


def _map_and_jacobian(x: np.ndarray, params: RSParams, rule: QuadratureRule):
    m, q = x
    a, w = _fields(m, q, params, rule)
    t = np.tanh(a)
    s2 = 1.0 - t * t
    b = params.beta
    # q-derivatives via Gaussian integration by parts, so sqrt(q) never divides
    bj2 = (b * params.J) ** 2
    jac = np.array(
        [
            [b * params.jtilde0 * (w @ s2), -bj2 * (w @ (t * s2))],
            [2.0 * b * params.jtilde0 * (w @ (t * s2)), bj2 * (w @ (s2 * s2 - 2.0 * t * t * s2))],
        ]
    )
    return np.array([w @ t, w @ (t * t)]), jac


def _log2cosh(a: np.ndarray) -> np.ndarray:
    a = np.abs(a)
    return a + np.log1p(np.exp(-2.0 * a))


def rs_free_energy(m: float, q: float, params: RSParams, rule: QuadratureRule) -> float:
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q must lie in [0, 1], got {q!r}")
    b = params.beta
    a, w = _fields(m, q, params, rule)
    return float(
        -0.25 * b * params.J**2 * (1.0 - q) ** 2
        + 0.5 * params.jtilde0 * m * m
        - (w @ _log2cosh(a)) / b
    )


def photon_order(m: float, lam: float) -> float:
    """Photon occupation per qubit, theta = lambda^2 m^2."""
    return lam * lam * m * m


def _newton(x, params, rule, tol, max_steps=100):
    """Newton on F(x) - x. Returns (x, last_step) or None if it leaves the domain."""
    step_norm = math.inf
    for _ in range(max_steps):
        fx, jac = _map_and_jacobian(x, params, rule)
        g = fx - x
        jg = jac - np.eye(2)
        if x[0] == 0.0:
            # m = 0 is invariant (odd integrand); solve the q equation alone
            if g[1] == 0.0:
                return x, 0.0
            if jg[1, 1] == 0.0:
                return None
            step = np.array([0.0, -g[1] / jg[1, 1]])
        else:
            try:
                step = -np.linalg.solve(jg, g)
            except np.linalg.LinAlgError:
                return None
        if not np.all(np.isfinite(step)):
            return None
        new = x + step
        if new[1] < 0.0:
            new[1] = 0.0
        if abs(new[0]) > 1.0 or new[1] > 1.0:
            return None
        prev_norm, step_norm = step_norm, float(np.max(np.abs(new - x)))
        x = new
        if step_norm < 1e-3 * tol or step_norm == 0.0:
            break
        if step_norm < tol and step_norm >= prev_norm:
            # round-off floor reached
            break
    if step_norm >= tol:
        return None
    return x, step_norm


def _iterate(start, params, rule, opts):
    """Damped fixed-point iteration with a Newton finish. Returns (x, converged, iters, residual).

    A start with m == 0 stays on the m = 0 line exactly (the quadrature sum
    of an odd integrand is only zero up to round-off).
    """
    x = np.array(start, dtype=float)
    hold_zero = x[0] == 0.0
    eta = opts.damping
    upd = math.inf
    for it in range(1, opts.max_iter + 1):
        fx = np.array(rs_map(x[0], x[1], params, rule))
        if hold_zero:
            fx[0] = 0.0
        new = (1.0 - eta) * x + eta * fx
        upd = float(np.max(np.abs(new - x)))
        x = new
        if upd < opts.tol:
            polished = _newton(x, params, rule, opts.tol, max_steps=20)
            if polished is not None:
                x = polished[0]
            return x, True, it, upd
        if it >= opts.newton_after and it % 50 == 0:
            # slow linear convergence near a critical line; Newton is still quadratic
            # (or geometric at a degenerate root) from here
            res = _newton(x.copy(), params, rule, opts.tol)
            if res is not None:
                return res[0], True, it, res[1]
    return x, False, opts.max_iter, upd


def _finish(x, converged, iters, residual, branch, params, rule) -> RSSolution:
    m, q = float(x[0]), float(x[1])
    if abs(m) < SNAP_M:
        m = 0.0
    m = abs(m)  # +-m solutions are degenerate; report m >= 0
    return RSSolution(
        m=m,
        q=q,
        free_energy=rs_free_energy(m, min(max(q, 0.0), 1.0), params, rule),
        theta=photon_order(m, params.lam),
        converged=converged,
        iterations=iters,
        residual=residual,
        branch=branch,
    )


def solve_branch(params: RSParams, start, branch: str, options: SolverOptions | None = None,
                 rule: QuadratureRule | None = None) -> RSSolution:
    opts = options or SolverOptions()
    rule = rule or default_rule(params, opts.order)
    x, ok, it, res = _iterate(start, params, rule, opts)
    return _finish(x, ok, it, res, branch, params, rule)


def solve_rs(params: RSParams, options: SolverOptions | None = None,
             warm: RSSolution | None = None, rule: QuadratureRule | None = None) -> RSSolution:
    """Solve the RS equations from a ferromagnetic and a zero-m start; keep the lower f.

    ``warm`` (a neighbouring grid point's solution) replaces a cold start only
    where it carries information: a nonzero m seeds the ferro branch, a
    nonzero q seeds the zero-m branch.
    """
    opts = options or SolverOptions()
    rule = rule or default_rule(params, opts.order)
    ferro_start, zero_start = FERRO_START, ZERO_M_START
    if warm is not None and warm.converged:
        if warm.m > SNAP_M:
            ferro_start = (warm.m, max(warm.q, warm.m**2))
        if warm.m == 0.0 and warm.q > 1e-6:
            zero_start = (0.0, warm.q)
    cands = [
        solve_branch(params, ferro_start, "ferro-start", opts, rule),
        solve_branch(params, zero_start, "zero-m-branch", opts, rule),
    ]
    if warm is not None and not all(c.converged for c in cands):
        cold = [
            solve_branch(params, FERRO_START, "ferro-start", opts, rule),
            solve_branch(params, ZERO_M_START, "zero-m-branch", opts, rule),
        ]
        cands = [w if w.converged else c for w, c in zip(cands, cold)]
    ok = [c for c in cands if c.converged]
    if not ok:
        # report the iterate closest to a fixed point, flagged unconverged
        return min(cands, key=lambda c: c.residual)
    best = ok[0]
    for c in ok[1:]:
        if c.free_energy < best.free_energy - 1e-14:
            best = c
        elif abs(c.free_energy - best.free_energy) <= 1e-14 and c.m < best.m:
            best = c
    return best


def fixed_point_residual(sol: RSSolution, params: RSParams, rule: QuadratureRule) -> float:
    m2, q2 = rs_map(sol.m, sol.q, params, rule)
    return max(abs(m2 - sol.m), abs(q2 - sol.q))


def stationarity(sol: RSSolution, params: RSParams, rule: QuadratureRule, h: float = 1e-6) -> tuple[float, float]:
    """Finite-difference gradient (df/dm, df/dq) of the RS free energy at ``sol``.

    Central differences, except one-sided second-order stencils when q is
    within ``h`` of the boundary of [0, 1].
    """
    f = lambda m, q: rs_free_energy(m, q, params, rule)
    m, q = sol.m, sol.q
    dm = (f(m + h, q) - f(m - h, q)) / (2 * h)
    if q - h < 0.0:
        dq = (-3 * f(m, q) + 4 * f(m, q + h) - f(m, q + 2 * h)) / (2 * h)
    elif q + h > 1.0:
        dq = (3 * f(m, q) - 4 * f(m, q - h) + f(m, q - 2 * h)) / (2 * h)
    else:
        dq = (f(m, q + h) - f(m, q - h)) / (2 * h)
    return dm, dq


def with_order(options: SolverOptions, order: int) -> SolverOptions:
    return replace(options, order=order)
