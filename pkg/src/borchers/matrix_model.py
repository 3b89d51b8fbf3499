"""Hermitian one-matrix model with weight ``exp(N tr S(M))``.

``S(M) = sum_p g_p M^p``; the Gaussian model is ``S(M) = -M^2/2``, whose
covariance is ``<M_ij M_kl> = delta_il delta_jk / N``.  Matrix indices are
0-based everywhere.  All moments are normalized expectations; absolute
partition functions (and the group volume from diagonalization) never appear.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import _kernels
from .algebra import SampledSpace
from .errors import (
    ChainNotEquilibrated,
    CoincidentEigenvalues,
    MissingMoments,
    NoConvergence,
    NonNormalizableAction,
    OddMomentRequested,
)
from .states import MatrixModelData, StateFunctional

IndexPair = tuple[int, int]
IndexList = tuple[IndexPair, ...]

N_BATCHES = 20
TARGET_ACCEPTANCE = 0.35


@dataclass(frozen=True)
class MatrixModelSpec:
    """Action, seed and sampler settings.

    ``couplings`` maps a power ``p`` to ``g_p``.  ``burn_in`` defaults to a
    tenth of the requested samples (at least 500 sweeps).
    """

    N: int
    couplings: Mapping[int, float] = field(default_factory=lambda: {2: -0.5})
    seed: int = 0
    sampler: str = "full"
    step: float = 0.5
    burn_in: int | None = None
    chunk: int = 10_000

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be at least 1")
        object.__setattr__(self, "couplings", {int(p): float(g) for p, g in dict(self.couplings).items()})
        if any(p < 0 for p in self.couplings):
            raise ValueError("coupling powers must be nonnegative")
        if self.sampler not in ("full", "eigenvalue"):
            raise ValueError("sampler must be 'full' or 'eigenvalue'")
        if not self.step > 0:
            raise ValueError("step must be positive")

    @classmethod
    def from_dict(cls, doc: dict) -> "MatrixModelSpec":
        known = {"N", "couplings", "seed", "sampler", "step", "burn_in", "chunk"}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown matrix model fields: {sorted(unknown)}")
        kw = dict(doc)
        if "couplings" in kw:
            kw["couplings"] = {int(p): float(g) for p, g in kw["couplings"].items()}
        return cls(**kw)

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "couplings": {str(p): g for p, g in sorted(self.couplings.items())},
            "seed": self.seed,
            "sampler": self.sampler,
            "step": self.step,
            "burn_in": self.burn_in,
            "chunk": self.chunk,
        }

    @property
    def coeffs(self) -> np.ndarray:
        """Dense coefficient vector, index = power."""
        deg = max(self.couplings, default=0)
        c = np.zeros(deg + 1)
        for p, g in self.couplings.items():
            c[p] = g
        return c

    def check_normalizable(self) -> None:
        nonzero = [p for p, g in self.couplings.items() if g != 0]
        top = max(nonzero, default=0)
        if top < 2 or top % 2 or self.couplings[top] >= 0:
            raise NonNormalizableAction(
                "exp(N tr S) is normalizable only if the highest nonzero power is even with a negative coefficient"
            )

    def is_even(self) -> bool:
        return all(g == 0 for p, g in self.couplings.items() if p % 2)

    def dS(self, x):
        return sum(p * g * np.asarray(x, dtype=float) ** (p - 1) for p, g in self.couplings.items() if p >= 1)

    def d2S(self, x):
        return sum(p * (p - 1) * g * np.asarray(x, dtype=float) ** (p - 2) for p, g in self.couplings.items() if p >= 2)


def gaussian(N: int, seed: int = 0, **kw) -> MatrixModelSpec:
    return MatrixModelSpec(N, {2: -0.5}, seed, **kw)


# ---------------------------------------------------------------------------
# moment tables
# ---------------------------------------------------------------------------


def _normalize_index_list(idx) -> IndexList:
    out = tuple((int(i), int(j)) for i, j in idx)
    return out


class MomentTable:
    """Map from index lists ``((i1, j1), (i2, j2), ...)`` to ``(estimate, stderr, n_samples)``.

    :meth:`contract` pairs constant matrices ``A_1..A_n`` with the degree-n
    entries, ``sum (A_1)_{I_1} ... (A_n)_{I_n} K_{I_1...I_n}``.
    """

    def __init__(self, N: int, entries: Mapping, method: str, meta: dict | None = None):
        self.N = int(N)
        self.method = method
        self.meta = dict(meta or {})
        self.entries: dict[IndexList, tuple[complex, float, int]] = {}
        for key, val in entries.items():
            key = _normalize_index_list(key)
            for i, j in key:
                if not (0 <= i < self.N and 0 <= j < self.N):
                    raise ValueError(f"matrix index ({i}, {j}) outside 0..{self.N - 1}")
            est, se, n = val
            self.entries[key] = (complex(est), float(se), int(n))
        self._dense: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        self.equilibrated = True
        self.chain: ChainResult | None = None

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, key) -> tuple[complex, float, int]:
        try:
            return self.entries[_normalize_index_list(key)]
        except KeyError:
            raise MissingMoments(f"no moment for indices {key}") from None

    def value(self, key) -> complex:
        return self[key][0]

    def degrees(self) -> set[int]:
        return {len(k) for k in self.entries}

    def dense(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Degree-n moments as an array of shape ``(N, N) * n`` plus a mask of known entries."""
        if n not in self._dense:
            N = self.N
            K = np.zeros((N, N) * n, dtype=complex)
            known = np.zeros((N, N) * n, dtype=bool)
            for key, (est, _, _) in self.entries.items():
                if len(key) == n:
                    flat = tuple(i for pair in key for i in pair)
                    K[flat] = est
                    known[flat] = True
            K.flags.writeable = False
            known.flags.writeable = False
            self._dense[n] = (K, known)
        return self._dense[n]

    def contract(self, mats: Sequence[np.ndarray]) -> complex:
        n = len(mats)
        if n == 0:
            return 1 + 0j
        mats = [np.asarray(a, dtype=complex) for a in mats]
        for a in mats:
            if a.shape != (self.N, self.N):
                raise ValueError(f"constant values must be {self.N}x{self.N} to pair with this table")
        K, known = self.dense(n)
        weight = mats[0]
        for a in mats[1:]:
            weight = np.multiply.outer(weight, a)
        if np.any((weight != 0) & ~known):
            raise MissingMoments(f"the table lacks degree-{n} moments needed for this contraction")
        return complex(np.sum(weight * K))

    # -- CSV ---------------------------------------------------------
    def to_csv(self, path: str | Path | None = None, comments: Mapping[str, str] | None = None) -> str:
        """Columns ``i1,j1,...,in,jn,re,im,stderr,n_samples``; shorter index lists leave blanks."""
        width = max(self.degrees(), default=2)
        buf = io.StringIO()
        for k, v in {**(comments or {}), "method": self.method, "N": str(self.N)}.items():
            buf.write(f"# {k}: {v}\n")
        w = csv.writer(buf, lineterminator="\n")
        header = [f"{c}{m}" for m in range(1, width + 1) for c in ("i", "j")] + ["re", "im", "stderr", "n_samples"]
        w.writerow(header)
        for key in sorted(self.entries, key=lambda k: (len(k), k)):
            est, se, n = self.entries[key]
            idx = [str(i) for pair in key for i in pair] + [""] * (2 * (width - len(key)))
            w.writerow(idx + [repr(est.real), repr(est.imag), repr(se), str(n)])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def read_csv(cls, path: str | Path, N: int | None = None) -> "MomentTable":
        text = Path(path).read_text()
        meta = {}
        lines = []
        for line in text.splitlines():
            if line.startswith("#"):
                k, _, v = line[1:].partition(":")
                meta[k.strip()] = v.strip()
            elif line.strip():
                lines.append(line)
        reader = csv.DictReader(lines)
        entries = {}
        for row in reader:
            idx = []
            m = 1
            while f"i{m}" in row and row[f"i{m}"] not in ("", None):
                idx.append((int(row[f"i{m}"]), int(row[f"j{m}"])))
                m += 1
            entries[tuple(idx)] = (complex(float(row["re"]), float(row["im"])), float(row["stderr"]), int(row["n_samples"]))
        if N is None:
            if "N" in meta:
                N = int(meta["N"])
            else:
                N = 1 + max((i for key in entries for pair in key for i in pair), default=0)
        return cls(N, entries, meta.get("method", "unknown"), meta)


# ---------------------------------------------------------------------------
# Gaussian (Wick) moments
# ---------------------------------------------------------------------------


def _pairings(items: tuple):
    if not items:
        yield ()
        return
    first, rest = items[0], items[1:]
    for k in range(len(rest)):
        for tail in _pairings(rest[:k] + rest[k + 1 :]):
            yield ((first, rest[k]),) + tail


def _wick(N: int, idx: IndexList) -> Fraction:
    total = Fraction(0)
    for pairing in _pairings(tuple(range(len(idx)))):
        term = Fraction(1)
        for a, b in pairing:
            (i, j), (k, l) = idx[a], idx[b]
            if i != l or j != k:
                term = Fraction(0)
                break
            term /= N
        total += term
    return total


def gaussian_moments_wick(N: int, index_lists: Iterable) -> list[Fraction]:
    """Exact ``<M_{I_1} ... M_{I_n}>`` for ``S = -M^2/2`` by summing Wick pairings."""
    out = []
    for idx in index_lists:
        idx = _normalize_index_list(idx)
        for i, j in idx:
            if not (0 <= i < N and 0 <= j < N):
                raise ValueError(f"matrix index ({i}, {j}) outside 0..{N - 1}")
        if len(idx) % 2:
            warnings.warn(f"odd moment {idx} requested; returning 0", OddMomentRequested, stacklevel=2)
            out.append(Fraction(0))
        else:
            out.append(_wick(N, idx))
    return out


def all_index_lists(N: int, n: int):
    pairs = list(itertools.product(range(N), repeat=2))
    return itertools.product(pairs, repeat=n)


def gaussian_moment_table(N: int, degrees: Iterable[int] = (2,)) -> MomentTable:
    """Complete Wick table for every index list of the given degrees (odd degrees are zero)."""
    entries = {}
    for n in degrees:
        for idx in all_index_lists(N, n):
            entries[idx] = (complex(_wick(N, idx)) if n % 2 == 0 else 0j, 0.0, 0)
    return MomentTable(N, entries, "wick")


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------


def batch_stats(values: np.ndarray, n_batches: int = N_BATCHES) -> tuple[complex, float, bool]:
    """Mean, batch-means standard error and an equilibration flag for one observable.

    The chain is flagged when the first and second halves of the batches
    disagree by more than 5 combined standard errors.  Complex values combine
    the real and imaginary errors in quadrature.
    """
    values = np.asarray(values)
    n = len(values)
    size = n // n_batches
    mean = complex(np.mean(values))
    if size < 1:
        return mean, math.inf, True
    batches = values[: size * n_batches].reshape(n_batches, size).mean(axis=1)

    def se(b):
        return math.hypot(np.std(b.real, ddof=1), np.std(b.imag, ddof=1)) / math.sqrt(len(b))

    half = n_batches // 2
    gap = abs(np.mean(batches[:half]) - np.mean(batches[half:]))
    settled = gap <= 5 * math.hypot(se(batches[:half]), se(batches[half:])) or gap < 1e-14
    return mean, se(batches), settled


@dataclass
class ChainResult:
    samples: np.ndarray
    acceptance: float
    step: float
    burn_in: int


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed)))


def _adapt(step: float, rate: float) -> float:
    return float(step * math.exp(rate - TARGET_ACCEPTANCE))


def _run_chain(spec: MatrixModelSpec, samples: int, kind: str, use_numba: bool | None = None) -> ChainResult:
    """Burn in with step adaptation, then record ``samples`` sweeps."""
    spec.check_normalizable()
    N = spec.N
    coeffs = spec.coeffs
    rng = _rng(spec.seed)
    if kind == "full":
        state = np.zeros((N, N), dtype=complex)
        updates = N * (N + 1) // 2
        shape = (N, N)
        dtype = complex

        def sweep(step, n):
            normals = rng.standard_normal((n, updates, 2))
            uniforms = rng.random((n, updates))
            out = np.empty((n,) + shape, dtype=dtype)
            acc = _kernels.hermitian_sweeps(state, coeffs, N, step, normals, uniforms, out, use_numba)
            return out, acc / (n * updates)

    else:
        state = np.linspace(-1.0, 1.0, N) if N > 1 else np.zeros(1)
        shape = (N,)
        dtype = float

        def sweep(step, n):
            normals = rng.standard_normal((n, N))
            uniforms = rng.random((n, N))
            out = np.empty((n,) + shape, dtype=dtype)
            acc = _kernels.eigenvalue_sweeps(state, coeffs, N, step, normals, uniforms, out, use_numba)
            return out, acc / (n * N)

    step = spec.step
    burn = spec.burn_in if spec.burn_in is not None else max(500, samples // 10)
    done = 0
    while done < burn:
        n = min(100, burn - done)
        _, rate = sweep(step, n)
        step = _adapt(step, rate)
        done += n
    chunks, accepted = [], 0.0
    done = 0
    while done < samples:
        n = min(spec.chunk, samples - done)
        out, rate = sweep(step, n)
        chunks.append(out)
        accepted += rate * n
        done += n
    return ChainResult(np.concatenate(chunks), accepted / samples, step, burn)


def mc_moments(
    spec: MatrixModelSpec,
    index_lists: Iterable,
    samples: int,
    use_numba: bool | None = None,
) -> MomentTable:
    """Metropolis estimates of ``<M_{I_1} ... M_{I_n}>`` with batch-means errors.

    Uses the full-matrix sampler; the same chain serves every index list, so
    the table is a genuine empirical measure.  Odd moments of an even action
    are set to 0 (flagged) rather than sampled.  Deterministic for a fixed seed.
    """
    if samples < 1000:
        raise ValueError("at least 1000 samples are required")
    keys = [_normalize_index_list(idx) for idx in index_lists]
    for key in keys:
        for i, j in key:
            if not (0 <= i < spec.N and 0 <= j < spec.N):
                raise ValueError(f"matrix index ({i}, {j}) outside 0..{spec.N - 1}")
    chain = _run_chain(spec, samples, "full", use_numba)
    M = chain.samples
    entries, unsettled = {}, []
    even = spec.is_even()
    for key in keys:
        if even and len(key) % 2:
            warnings.warn(f"odd moment {key} of an even action is 0; not sampled", OddMomentRequested, stacklevel=2)
            entries[key] = (0j, 0.0, samples)
            continue
        vals = np.ones(len(M), dtype=complex)
        for i, j in key:
            vals = vals * M[:, i, j]
        mean, se, settled = batch_stats(vals)
        entries[key] = (mean, se, samples)
        if not settled:
            unsettled.append(key)
    meta = {"acceptance": f"{chain.acceptance:.4f}", "step": f"{chain.step:.6g}", "burn_in": str(chain.burn_in)}
    if unsettled:
        meta["not_equilibrated"] = str(len(unsettled))
        warnings.warn(f"batch means drift for {len(unsettled)} observables", ChainNotEquilibrated, stacklevel=2)
    table = MomentTable(spec.N, entries, "monte_carlo", meta)
    table.equilibrated = not unsettled
    table.chain = chain
    return table


def mc_trace_moments(spec: MatrixModelSpec, powers: Iterable[int], samples: int, use_numba: bool | None = None) -> dict:
    """``<(1/N) tr M^p>`` with batch-means errors, full-matrix sampler."""
    spec.check_normalizable()
    chain = _run_chain(spec, samples, "full", use_numba)
    out = {}
    for p in powers:
        vals = np.trace(np.linalg.matrix_power(chain.samples, p), axis1=1, axis2=2).real / spec.N
        mean, se, settled = batch_stats(vals)
        out[int(p)] = {"mean": mean.real, "stderr": se, "equilibrated": settled}
    return out


@dataclass
class EigenvalueSample:
    chains: np.ndarray  # (samples, N)
    density: np.ndarray
    edges: np.ndarray
    acceptance: float
    step: float
    equilibrated: bool

    def moment(self, p: int) -> tuple[float, float]:
        """Mean and batch-means error of ``(1/N) sum_k x_k^p``."""
        mean, se, _ = batch_stats(np.mean(self.chains**p, axis=1))
        return mean.real, se


def eigenvalue_sample(
    spec: MatrixModelSpec,
    samples: int,
    bins: int = 60,
    hist_range: tuple[float, float] | None = None,
    use_numba: bool | None = None,
) -> EigenvalueSample:
    """Metropolis over eigenvalues with the squared Vandermonde repulsion."""
    if samples < 1:
        raise ValueError("samples must be positive")
    chain = _run_chain(spec, samples, "eigenvalue", use_numba)
    x = chain.samples
    if hist_range is None:
        hist_range = (float(x.min()), float(x.max()))
    density, edges = np.histogram(x.ravel(), bins=bins, range=hist_range, density=True)
    _, _, settled = batch_stats(np.mean(x**2, axis=1))
    if not settled:
        warnings.warn("eigenvalue chain second moment drifts between halves", ChainNotEquilibrated, stacklevel=2)
    return EigenvalueSample(x, density, edges, chain.acceptance, chain.step, settled)


# ---------------------------------------------------------------------------
# saddle point
# ---------------------------------------------------------------------------


def _check_distinct(x: np.ndarray) -> None:
    if len(np.unique(x)) != len(x):
        raise CoincidentEigenvalues("eigenvalues must be distinct")


def saddle_residual(spec: MatrixModelSpec, x) -> np.ndarray:
    """``S'(x_k) + (1/N) sum_{j != k} 1/(x_k - x_j)``."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if len(x) != spec.N:
        raise ValueError(f"need {spec.N} eigenvalues")
    _check_distinct(x)
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, np.inf)
    return spec.dS(x) + np.sum(1.0 / diff, axis=1) / spec.N


def _saddle_jacobian(spec: MatrixModelSpec, x: np.ndarray) -> np.ndarray:
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, np.inf)
    inv2 = 1.0 / diff**2 / spec.N
    J = inv2.copy()
    J[np.diag_indices_from(J)] = spec.d2S(x) - inv2.sum(axis=1)
    return J


def solve_saddle(spec: MatrixModelSpec, init, tol: float = 1e-10, max_iter: int = 200) -> np.ndarray:
    """Damped Newton on :func:`saddle_residual` with step halving.

    Returns the best iterate; warns :class:`NoConvergence` if ``max|residual|``
    stays above ``tol``.
    """
    x = np.asarray(init, dtype=float).reshape(-1).copy()
    r = saddle_residual(spec, x)
    best = np.max(np.abs(r))
    for _ in range(max_iter):
        if best < tol:
            return x
        dx = np.linalg.lstsq(_saddle_jacobian(spec, x), -r, rcond=None)[0]
        t = 1.0
        while t > 1e-8:
            trial = x + t * dx
            if len(np.unique(trial)) == len(trial):
                rt = saddle_residual(spec, trial)
                if np.max(np.abs(rt)) < best:
                    break
            t /= 2
        else:
            break
        x, r, best = trial, rt, float(np.max(np.abs(rt)))
    if best >= tol:
        warnings.warn(f"saddle solver stopped at max|residual| = {best:.3e}", NoConvergence, stacklevel=2)
    return x


# ---------------------------------------------------------------------------
# state
# ---------------------------------------------------------------------------


def matrix_state_from_model(
    spec: MatrixModelSpec,
    moments: MomentTable,
    space: SampledSpace | None = None,
    source: str | None = None,
) -> StateFunctional:
    """State that vanishes on nonconstant factors and contracts constants against ``moments``.

    ``space`` defaults to a single point of weight 1; constant values must be
    N x N.
    """
    if moments.N != spec.N:
        raise ValueError("moment table and model have different N")
    space = space if space is not None else SampledSpace([[0.0]], [1.0])
    return StateFunctional(MatrixModelData(space, spec.N, moments, source=source))
