"""Finite-N Metropolis / parallel-tempering simulation of the effective model.

Two independent replicas run at every ladder rung so the overlap
q = (1/N) sum_i s_i^(1) s_i^(2) can be measured. Local fields
h_i = sum_j K_ij s_j are kept up to date incrementally and checked against
a full recomputation every ``DRIFT_CHECK`` sweeps.

Random streams: chain (rung r, replica a) draws from SeedSequence(seed,
spawn_key=(0, r, a)); swap decisions draw from spawn_key=(1,). Disorder
realization k of an average uses spawn_key=(2, k).
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import TextIO

import numba
import numpy as np

from .model import EffectiveModel, ModelParams, build_effective, check_spins, sample_disorder

DRIFT_CHECK = 1000
DRIFT_TOL = 1e-9


@numba.njit(cache=True)
def _sweep(s, h, K, beta, order, u):
    """One Metropolis sweep in the given site order. Returns (accepted, energy change)."""
    N = s.shape[0]
    acc = 0
    dE_tot = 0.0
    for k in range(N):
        i = order[k]
        dE = 2.0 * s[i] * h[i]
        if dE <= 0.0 or u[k] < math.exp(-beta * dE):
            si = s[i]
            for j in range(N):
                h[j] -= 2.0 * K[i, j] * si
            s[i] = -si
            acc += 1
            dE_tot += dE
    return acc, dE_tot


@numba.njit(cache=True)
def _chunk(S, H, K, betas, perms, us, mags, overlaps):
    """Advance every chain by perms.shape[1] sweeps, recording m per chain and q per rung.

    S, H: (C, N) with chains ordered (rung, replica) -> 2 * rung + replica.
    """
    C, n, N = perms.shape
    acc = np.zeros(C, dtype=np.int64)
    for t in range(n):
        for c in range(C):
            a, _ = _sweep(S[c], H[c], K, betas[c], perms[c, t], us[c, t])
            acc[c] += a
            tot = 0.0
            for i in range(N):
                tot += S[c, i]
            mags[t, c] = tot / N
        for r in range(C // 2):
            dot = 0.0
            for i in range(N):
                dot += S[2 * r, i] * S[2 * r + 1, i]
            overlaps[t, r] = dot / N
    return acc


def _stream(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=key)
    return np.random.Generator(np.random.Philox(ss))


def metropolis_sweep(state, model: EffectiveModel, beta: float, rng: np.random.Generator,
                     fields: np.ndarray | None = None):
    """One sweep of N single-spin proposals in random order.

    Returns ``(new_state, fields, accepted)``; pass ``fields`` back in to keep
    the incremental local fields across calls.
    """
    s = check_spins(state, model.N).copy()
    K = model.matrix()
    h = K @ s if fields is None else np.array(fields, dtype=float)
    order = rng.permutation(model.N)
    u = rng.random(model.N)
    acc, _ = _sweep(s, h, K, float(beta), order, u)
    return s, h, int(acc)


def geometric_ladder(T_min: float, T_max: float, n: int) -> np.ndarray:
    if n == 1:
        return np.array([float(T_min)])
    return np.geomspace(T_min, T_max, n)


@dataclass(frozen=True)
class MCConfig:
    sweeps: int = 20000
    burn_in: int = 2000
    ladder: tuple[float, ...] = (1.0,)
    exchange_interval: int = 1
    seed: int = 0
    block_count: int = 32
    replicas_per_T: int = 2

    def __post_init__(self):
        object.__setattr__(self, "ladder", tuple(float(t) for t in self.ladder))
        if self.replicas_per_T != 2:
            raise ValueError("replicas_per_T is fixed at 2")
        if not 0 <= self.burn_in < self.sweeps:
            raise ValueError(f"burn_in must satisfy 0 <= burn_in < sweeps, got {self.burn_in}, {self.sweeps}")
        if len(self.ladder) < 1 or any(t <= 0 for t in self.ladder):
            raise ValueError("ladder must hold at least one positive temperature")
        if any(b <= a for a, b in zip(self.ladder, self.ladder[1:])):
            raise ValueError("ladder must be strictly ascending")
        if self.exchange_interval < 1:
            raise ValueError("exchange_interval must be >= 1")
        if self.block_count < 8:
            raise ValueError(f"block_count must be >= 8, got {self.block_count}")
        if (self.sweeps - self.burn_in) < self.block_count:
            raise ValueError(
                f"{self.sweeps - self.burn_in} measured sweeps cannot fill {self.block_count} blocks"
            )


OBSERVABLES = ("mean_abs_m", "mean_m2", "q_overlap", "abs_q_overlap", "theta_hat")


@dataclass
class MCEstimates:
    T: np.ndarray
    mean: dict[str, np.ndarray]
    stderr: dict[str, np.ndarray]
    swap_rate: np.ndarray  # rung r -> acceptance of swaps with rung r + 1; nan for the top rung
    N: int
    extra: dict = field(default_factory=dict)

    def summary(self) -> dict:
        out = {
            "N": self.N,
            "T": self.T.tolist(),
            "mean": {k: v.tolist() for k, v in self.mean.items()},
            "stderr": {k: v.tolist() for k, v in self.stderr.items()},
            "swap_rate": [None if not np.isfinite(x) else float(x) for x in self.swap_rate],
        }
        out.update(self.extra)
        return out


def blocking(series: np.ndarray, block_count: int) -> tuple[np.ndarray, np.ndarray]:
    """Mean and blocking standard error along axis 0, dropping the oldest leftover samples."""
    n = series.shape[0]
    L = n // block_count
    if L < 1:
        raise ValueError(f"{n} samples cannot fill {block_count} blocks")
    used = series[n - L * block_count:]
    blocks = used.reshape(block_count, L, *series.shape[1:]).mean(axis=1)
    return blocks.mean(axis=0), blocks.std(axis=0, ddof=1) / math.sqrt(block_count)


def bose_occupancy(beta: float) -> float:
    return 1.0 / math.expm1(beta)


class _Sim:
    """State of a two-replica-per-rung PT run."""

    def __init__(self, model: EffectiveModel, config: MCConfig):
        self.model = model
        self.cfg = config
        self.K = np.ascontiguousarray(model.matrix())
        T = np.asarray(config.ladder)
        self.R = len(T)
        self.betas = np.repeat(1.0 / T, 2)
        self.chain_rngs = [_stream(config.seed, 0, r, a) for r in range(self.R) for a in range(2)]
        self.swap_rng = _stream(config.seed, 1)
        N = model.N
        self.S = np.empty((2 * self.R, N))
        for c, rng in enumerate(self.chain_rngs):
            self.S[c] = rng.choice([-1.0, 1.0], size=N)
        self.H = self.S @ self.K
        self.swap_acc = np.zeros(max(self.R - 1, 0), dtype=np.int64)
        self.swap_try = np.zeros(max(self.R - 1, 0), dtype=np.int64)
        self.flip_acc = np.zeros(2 * self.R, dtype=np.int64)
        self.done = 0

    def energies(self) -> np.ndarray:
        return -0.5 * np.einsum("ci,ci->c", self.S, self.H)

    def advance(self, n: int):
        N = self.model.N
        C = 2 * self.R
        perms = np.empty((C, n, N), dtype=np.int64)
        us = np.empty((C, n, N))
        base = np.tile(np.arange(N, dtype=np.int64), (n, 1))
        for c, rng in enumerate(self.chain_rngs):
            perms[c] = rng.permuted(base, axis=1)
            us[c] = rng.random((n, N))
        mags = np.empty((n, C))
        ovl = np.empty((n, self.R))
        self.flip_acc += _chunk(self.S, self.H, self.K, self.betas, perms, us, mags, ovl)
        before = self.done
        self.done += n
        if self.done // DRIFT_CHECK > before // DRIFT_CHECK:
            self.check_drift()
        return mags, ovl

    def check_drift(self):
        fresh = self.S @ self.K
        drift = float(np.max(np.abs(fresh - self.H)))
        if drift > DRIFT_TOL:
            raise RuntimeError(f"local-field drift {drift:.3e} exceeds {DRIFT_TOL}")
        self.H = fresh

    def exchange(self):
        E = self.energies()
        b = self.betas
        for a in range(2):
            for r in range(self.R - 1):
                c1, c2 = 2 * r + a, 2 * (r + 1) + a
                delta = (b[c1] - b[c2]) * (E[c1] - E[c2])
                self.swap_try[r] += 1
                u = self.swap_rng.random()
                if delta >= 0 or u < math.exp(delta):
                    self.swap_acc[r] += 1
                    self.S[[c1, c2]] = self.S[[c2, c1]]
                    self.H[[c1, c2]] = self.H[[c2, c1]]
                    E[c1], E[c2] = E[c2], E[c1]


def run_parallel_tempering(model: EffectiveModel, config: MCConfig) -> MCEstimates:
    cfg = config
    sim = _Sim(model, cfg)
    N = model.N
    step = cfg.exchange_interval if sim.R > 1 else max(cfg.exchange_interval, 100)
    mag_rows, ovl_rows = [], []
    while sim.done < cfg.sweeps:
        n = min(step, cfg.sweeps - sim.done)
        start = sim.done
        mags, ovl = sim.advance(n)
        keep = max(cfg.burn_in - start, 0)
        if keep < n:
            mag_rows.append(mags[keep:])
            ovl_rows.append(ovl[keep:])
        if sim.R > 1 and sim.done % cfg.exchange_interval == 0:
            sim.exchange()
    mags = np.concatenate(mag_rows).reshape(-1, sim.R, 2)
    ovl = np.concatenate(ovl_rows)
    series = {
        "mean_abs_m": np.abs(mags).mean(axis=2),
        "mean_m2": (mags**2).mean(axis=2),
        "q_overlap": ovl,
        "abs_q_overlap": np.abs(ovl),
    }
    mean, err = {}, {}
    for k, v in series.items():
        mean[k], err[k] = blocking(v, cfg.block_count)
    T = np.asarray(cfg.ladder)
    nB = np.array([bose_occupancy(1.0 / t) for t in T])
    lam2 = model.lam**2
    mean["theta_hat"] = nB / N + lam2 * mean["mean_m2"]
    err["theta_hat"] = lam2 * err["mean_m2"]
    with np.errstate(invalid="ignore", divide="ignore"):
        rate = np.append(sim.swap_acc / np.maximum(sim.swap_try, 1), np.nan)
    if sim.R > 1:
        rate[:-1][sim.swap_try == 0] = np.nan
    return MCEstimates(T=T, mean=mean, stderr=err, swap_rate=rate, N=N,
                       extra={"seed": cfg.seed,
                              "flip_acceptance": (sim.flip_acc / (N * cfg.sweeps)).tolist()})


def realization_seeds(master_seed: int, R: int) -> list[tuple[int, int]]:
    """(disorder seed, MC seed) for each realization, derived from the master seed."""
    out = []
    for k in range(R):
        a, b = np.random.SeedSequence(int(master_seed) & (2**64 - 1), spawn_key=(2, k)).generate_state(
            2, dtype=np.uint64)
        out.append((int(a), int(b)))
    return out


def _one_realization(args) -> MCEstimates:
    params, dseed, mseed, config = args
    dis = sample_disorder(params.N, params.J0, params.J, dseed)
    model = build_effective(dis, params.lam)
    cfg = MCConfig(**{**asdict(config), "seed": mseed})
    return run_parallel_tempering(model, cfg)


def disorder_average(params: ModelParams, R: int, config: MCConfig, workers: int = 1) -> MCEstimates:
    """Quenched average over R realizations; errors are between-realization standard errors."""
    if R < 1:
        raise ValueError(f"R must be >= 1, got {R}")
    seeds = realization_seeds(config.seed, R)
    jobs = [(params, d, m, config) for d, m in seeds]
    if workers > 1 and R > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            runs = list(ex.map(_one_realization, jobs))
    else:
        runs = [_one_realization(j) for j in jobs]
    mean, err = {}, {}
    for k in OBSERVABLES:
        vals = np.array([r.mean[k] for r in runs])
        mean[k] = vals.mean(axis=0)
        if R > 1:
            err[k] = vals.std(axis=0, ddof=1) / math.sqrt(R)
        else:
            err[k] = runs[0].stderr[k]
    rates = np.array([r.swap_rate for r in runs])
    with np.errstate(invalid="ignore"):
        swap = np.nanmean(rates, axis=0) if np.isfinite(rates).any() else rates[0]
    return MCEstimates(T=runs[0].T, mean=mean, stderr=err, swap_rate=swap, N=params.N,
                       extra={"realizations": R, "seeds": [list(s) for s in seeds],
                              "per_realization": [{k: r.mean[k].tolist() for k in OBSERVABLES}
                                                  for r in runs]})


def state_histogram(model: EffectiveModel, beta: float, sweeps: int, seed: int,
                    chunk: int = 100_000) -> np.ndarray:
    """Counts of each configuration (bit i set <=> s_i = -1) visited after every sweep."""
    N = model.N
    if N > 20:
        raise ValueError("state histogram is meant for tiny systems")
    rng = _stream(seed, 3)
    K = np.ascontiguousarray(model.matrix())
    s = rng.choice([-1.0, 1.0], size=N)
    h = K @ s
    counts = np.zeros(1 << N, dtype=np.int64)
    weights = 1 << np.arange(N)
    done = 0
    base = np.tile(np.arange(N, dtype=np.int64), (chunk, 1))
    while done < sweeps:
        n = min(chunk, sweeps - done)
        perms = rng.permuted(base[:n], axis=1)
        us = rng.random((n, N))
        idx = _histogram_chunk(s, h, K, float(beta), perms, us, weights)
        counts += np.bincount(idx, minlength=1 << N)
        done += n
    return counts


@numba.njit(cache=True)
def _histogram_chunk(s, h, K, beta, perms, us, weights):
    n = perms.shape[0]
    out = np.empty(n, dtype=np.int64)
    for t in range(n):
        _sweep(s, h, K, beta, perms[t], us[t])
        code = 0
        for i in range(s.shape[0]):
            if s[i] < 0:
                code += weights[i]
        out[t] = code
    return out


CSV_FIELDS = ["T", "mean_abs_m", "stderr", "mean_m2", "stderr", "q_overlap", "stderr",
              "abs_q_overlap", "stderr", "theta_hat", "stderr", "swap_rate"]


def write_csv(est: MCEstimates, fh: TextIO, header_lines=()) -> None:
    for line in header_lines:
        fh.write(f"#! {line}\n")
    fh.write(",".join(CSV_FIELDS) + "\n")
    for r, T in enumerate(est.T):
        row = [T]
        for k in OBSERVABLES:
            row += [est.mean[k][r], est.stderr[k][r]]
        row.append(est.swap_rate[r])
        fh.write(",".join(f"{x:.17g}" for x in row) + "\n")


def summary_json(est: MCEstimates, config: dict) -> str:
    return json.dumps({"config": config, **est.summary()}, sort_keys=True)
