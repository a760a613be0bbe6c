"""Model parameters, quenched disorder, and the photon-eliminated effective model.

Once the cavity mode is integrated out, the qubits see an Ising model in the
sigma^X basis with couplings ``K_ij = J_ij + 2 lambda^2 / N`` and an additive
energy constant ``-lambda^2``. Everything downstream (enumeration, Monte Carlo,
the replica solver) works on that classical model.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import TextIO

import numpy as np


@dataclass(frozen=True)
class ModelParams:
    N: int
    lam: float = 0.0
    J0: float = 0.0
    J: float = 1.0
    T: float = 1.0
    epsilon: float = 0.0  # qubit gap; kept at zero, the whole mapping relies on it

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N!r}")
        if self.lam < 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam!r}")
        if self.J < 0:
            raise ValueError(f"J must be >= 0, got {self.J!r}")
        if not self.T > 0:
            raise ValueError(f"T must be > 0, got {self.T!r}")
        if self.epsilon != 0:
            raise ValueError("epsilon must be 0: a finite qubit gap is not supported")

    @property
    def beta(self) -> float:
        return 1.0 / self.T

    @property
    def jtilde0(self) -> float:
        return self.J0 + 2.0 * self.lam**2


def n_pairs(N: int) -> int:
    return N * (N - 1) // 2


def pair_indices(N: int) -> tuple[np.ndarray, np.ndarray]:
    """Row-major (i, j) indices, i < j, matching the flat coupling layout."""
    return np.triu_indices(N, k=1)


def _row_stream(seed: int, i: int) -> np.random.Generator:
    # keyed on (seed, row); position within the row supplies j
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=(i,))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True, eq=False)
class DisorderRealization:
    """One frozen draw of the couplings J_ij, stored upper-triangular and flat."""

    N: int
    couplings: np.ndarray
    seed: int
    J0: float
    J: float

    def __post_init__(self):
        c = np.asarray(self.couplings, dtype=np.float64)
        if c.shape != (n_pairs(self.N),):
            raise ValueError(
                f"couplings must have N(N-1)/2 = {n_pairs(self.N)} entries, got shape {c.shape}"
            )
        c.setflags(write=False)
        object.__setattr__(self, "couplings", c)

    def coupling(self, i: int, j: int) -> float:
        if i == j:
            raise ValueError("no self-coupling")
        if i > j:
            i, j = j, i
        # offset of row i in the flat layout
        k = i * self.N - i * (i + 1) // 2 + (j - i - 1)
        return float(self.couplings[k])

    def matrix(self) -> np.ndarray:
        return _symmetric(self.N, self.couplings)

    def dump(self, fh: TextIO) -> None:
        """Write the text format; pair indices are 1-based."""
        fh.write(f"N={self.N}\n")
        fh.write(f"J0={self.J0:.17g}\n")
        fh.write(f"J={self.J:.17g}\n")
        fh.write(f"seed={self.seed}\n")
        ii, jj = pair_indices(self.N)
        for i, j, v in zip(ii, jj, self.couplings):
            fh.write(f"{i + 1} {j + 1} {v:.17g}\n")

    def save(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            self.dump(fh)

    @classmethod
    def load(cls, path: str | Path) -> "DisorderRealization":
        header: dict[str, str] = {}
        rows = []
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if "=" in line:
                    k, v = line.split("=", 1)
                    header[k.strip()] = v.strip()
                else:
                    i, j, v = line.split()
                    rows.append((int(i) - 1, int(j) - 1, float(v)))
        for key in ("N", "J0", "J", "seed"):
            if key not in header:
                raise ValueError(f"disorder file {path} is missing header field {key!r}")
        N = int(header["N"])
        couplings = np.empty(n_pairs(N))
        filled = np.zeros(n_pairs(N), dtype=bool)
        for i, j, v in rows:
            if not 0 <= i < j < N:
                raise ValueError(f"bad pair ({i + 1}, {j + 1}) for N={N}")
            k = i * N - i * (i + 1) // 2 + (j - i - 1)
            couplings[k] = v
            filled[k] = True
        if not filled.all():
            raise ValueError(f"disorder file {path} lists {filled.sum()} of {n_pairs(N)} pairs")
        return cls(N, couplings, int(header["seed"]), float(header["J0"]), float(header["J"]))


def _symmetric(N: int, flat: np.ndarray) -> np.ndarray:
    M = np.zeros((N, N))
    ii, jj = pair_indices(N)
    M[ii, jj] = flat
    M[jj, ii] = flat
    return M


def sample_disorder(N: int, J0: float, J: float, seed: int) -> DisorderRealization:
    """Draw J_ij ~ Normal(J0/N, J^2/N) independently for every pair i < j.

    Each row i has its own Philox stream keyed on ``(seed, i)``, so rows can be
    generated in any order (or in parallel) with identical results.
    """
    if int(N) != N or N < 1:
        raise ValueError(f"N must be a positive integer, got {N!r}")
    if J < 0:
        raise ValueError(f"J must be >= 0, got {J!r}")
    N = int(N)
    mean = J0 / N
    sd = J / np.sqrt(N)
    parts = []
    for i in range(N - 1):
        z = _row_stream(seed, i).standard_normal(N - 1 - i)
        parts.append(mean + sd * z)
    flat = np.concatenate(parts) if parts else np.empty(0)
    return DisorderRealization(N, flat, int(seed), float(J0), float(J))


@dataclass(frozen=True, eq=False)
class EffectiveModel:
    N: int
    K: np.ndarray
    offset: float
    jtilde0: float
    lam: float
    _dense: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        K = np.asarray(self.K, dtype=np.float64)
        K.setflags(write=False)
        object.__setattr__(self, "K", K)
        dense = _symmetric(self.N, K)
        dense.setflags(write=False)
        object.__setattr__(self, "_dense", dense)

    def matrix(self) -> np.ndarray:
        """Symmetric K with zero diagonal (read-only view)."""
        return self._dense


def build_effective(disorder: DisorderRealization, lam: float) -> EffectiveModel:
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam!r}")
    shift = 2.0 * lam**2 / disorder.N
    return EffectiveModel(
        N=disorder.N,
        K=disorder.couplings + shift,
        offset=-(lam**2),
        jtilde0=disorder.J0 + 2.0 * lam**2,
        lam=float(lam),
    )


def check_spins(spins, N: int | None = None) -> np.ndarray:
    s = np.asarray(spins)
    if s.ndim != 1:
        raise ValueError("spin configuration must be one-dimensional")
    if N is not None and s.shape[0] != N:
        raise ValueError(f"spin configuration has length {s.shape[0]}, model has N={N}")
    if not np.all(np.abs(s) == 1):
        raise ValueError("spins must be +1 or -1")
    return s.astype(np.float64)


def effective_energy(model: EffectiveModel, spins) -> float:
    """E(s) = -sum_{i<j} K_ij s_i s_j - lambda^2."""
    s = check_spins(spins, model.N)
    ii, jj = pair_indices(model.N)
    return float(-np.dot(model.K, s[ii] * s[jj]) + model.offset)


def magnetization(spins) -> float:
    s = check_spins(spins)
    return float(s.mean())
