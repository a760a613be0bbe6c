"""Exact small-N references.

Two deliberately separate code paths:

* ``enumerate_classical`` walks all 2^N configurations of the effective
  classical model in Gray-code order (one spin flip per step, O(N) update).
* ``quantum_closed_form`` evaluates the full qubit-cavity trace at zero gap.
  There every sigma^X_j commutes with H, so for a fixed configuration with
  total spin S the photon is a displaced oscillator whose levels are shifted
  by -lambda^2 S^2 / N. The sum over configurations is done by brute-force
  bit expansion in numpy, straight from the raw couplings J_ij.

``verify_mapping`` compares the two. The classical coherent-state integral
carries a 1/beta photon factor, the exact trace carries 1/(1 - e^-beta);
everything else must agree to round-off.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numba
import numpy as np
from scipy.special import logsumexp

from .model import DisorderRealization, EffectiveModel, build_effective

MAX_ENUM_N = 24
_BLOCK_BITS = 12


class CapacityError(ValueError):
    """Raised when exhaustive enumeration is requested for too many spins."""


@dataclass(frozen=True)
class ClassicalReport:
    logZcl: float
    free_energy_per_spin: float
    mean_s2: float
    mean_abs_m: float
    beta: float

    def to_json(self) -> str:
        return json.dumps(asdict(self))


@dataclass(frozen=True)
class QuantumReport:
    logZq: float
    theta: float
    bose_occupancy: float
    beta: float

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def _guard(N: int, beta: float) -> None:
    if N > MAX_ENUM_N:
        raise CapacityError(f"N={N} exceeds the enumeration limit of {MAX_ENUM_N} spins")
    if not beta > 0:
        raise ValueError(f"beta must be > 0, got {beta!r}")


@numba.njit(cache=True, parallel=True)
def _gray_blocks(Kmat, beta, block_bits):
    """Per-block (max, scaled sums) of Boltzmann weights over all 2^N states.

    Returns arrays shaped (n_blocks, 4): running max of x = beta * sum K s s,
    and sum of exp(x - max) times 1, sbar^2, |sbar|.
    """
    N = Kmat.shape[0]
    total = 1 << N
    bb = min(block_bits, N)
    bsize = 1 << bb
    nblocks = total // bsize
    out = np.empty((nblocks, 4))
    for b in numba.prange(nblocks):
        t0 = b * bsize
        g = t0 ^ (t0 >> 1)
        s = np.empty(N)
        for i in range(N):
            s[i] = -1.0 if (g >> i) & 1 else 1.0
        h = Kmat @ s
        pair = 0.5 * np.dot(s, h)
        S = 0.0
        for i in range(N):
            S += s[i]
        x = beta * pair
        mx = x
        z0 = 1.0
        sbar = S / N
        z2 = sbar * sbar
        za = abs(sbar)
        for t in range(t0 + 1, t0 + bsize):
            # spin flipped between gray(t-1) and gray(t) is the lowest set bit of t
            i = 0
            tt = t
            while (tt & 1) == 0:
                tt >>= 1
                i += 1
            si = s[i]
            pair -= 2.0 * si * h[i]
            for j in range(N):
                h[j] -= 2.0 * Kmat[i, j] * si
            s[i] = -si
            S -= 2.0 * si
            x = beta * pair
            sbar = S / N
            if x > mx:
                r = math.exp(mx - x)
                z0 = z0 * r + 1.0
                z2 = z2 * r + sbar * sbar
                za = za * r + abs(sbar)
                mx = x
            else:
                w = math.exp(x - mx)
                z0 += w
                z2 += w * sbar * sbar
                za += w * abs(sbar)
        out[b, 0] = mx
        out[b, 1] = z0
        out[b, 2] = z2
        out[b, 3] = za
    return out


def _merge(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    mx = max(a[0], b[0])
    ra = math.exp(a[0] - mx)
    rb = math.exp(b[0] - mx)
    return np.array([mx, a[1] * ra + b[1] * rb, a[2] * ra + b[2] * rb, a[3] * ra + b[3] * rb])


def _tree_reduce(rows: np.ndarray) -> np.ndarray:
    parts = [r for r in rows]
    while len(parts) > 1:
        nxt = [_merge(parts[k], parts[k + 1]) for k in range(0, len(parts) - 1, 2)]
        if len(parts) % 2:
            nxt.append(parts[-1])
        parts = nxt
    return parts[0]


def enumerate_classical(model: EffectiveModel, beta: float) -> ClassicalReport:
    """Exact partition function of the photon-eliminated model, including 1/beta."""
    _guard(model.N, beta)
    blocks = _gray_blocks(np.ascontiguousarray(model.matrix()), float(beta), _BLOCK_BITS)
    mx, z0, z2, za = _tree_reduce(blocks)
    log_sum = mx + math.log(z0)
    logZ = -math.log(beta) - beta * model.offset + log_sum
    return ClassicalReport(
        logZcl=logZ,
        free_energy_per_spin=-logZ / (beta * model.N),
        mean_s2=z2 / z0,
        mean_abs_m=za / z0,
        beta=float(beta),
    )


def _configurations(N: int, start: int, stop: int) -> np.ndarray:
    idx = np.arange(start, stop, dtype=np.int64)
    bits = (idx[:, None] >> np.arange(N, dtype=np.int64)) & 1
    return 1.0 - 2.0 * bits


def quantum_closed_form(disorder: DisorderRealization, lam: float, beta: float) -> QuantumReport:
    """Exact qubit-cavity thermodynamics at zero qubit gap."""
    N = disorder.N
    _guard(N, beta)
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam!r}")
    Jm = disorder.matrix()
    chunk = 1 << 16
    lse_parts, s2_parts = [], []
    for a in range(0, 1 << N, chunk):
        s = _configurations(N, a, min(a + chunk, 1 << N))
        pairs = 0.5 * np.einsum("ci,ij,cj->c", s, Jm, s)
        S = s.sum(axis=1)
        expo = beta * (lam**2 * S**2 / N + pairs)
        lse_parts.append(logsumexp(expo))
        s2_parts.append(logsumexp(expo, b=(S / N) ** 2))
    log_spin = logsumexp(lse_parts)
    mean_s2 = math.exp(logsumexp(s2_parts) - log_spin)
    # free oscillator: sum_n e^{-beta n} = 1 / (1 - e^{-beta})
    log_photon = -math.log(-math.expm1(-beta))
    n_bose = 1.0 / math.expm1(beta)
    return QuantumReport(
        logZq=log_photon + log_spin,
        theta=n_bose / N + lam**2 * mean_s2,
        bose_occupancy=n_bose,
        beta=float(beta),
    )


def verify_mapping(disorder: DisorderRealization, lam: float, beta: float) -> float:
    """|Zq (1 - e^-beta) / (beta Zcl) - 1| for one realization."""
    cl = enumerate_classical(build_effective(disorder, lam), beta)
    qu = quantum_closed_form(disorder, lam, beta)
    log_ratio = qu.logZq + math.log(-math.expm1(-beta)) - cl.logZcl - math.log(beta)
    return abs(math.expm1(log_ratio))
