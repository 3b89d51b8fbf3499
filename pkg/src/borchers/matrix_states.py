"""Finite-dimensional (matrix) approximations of a reconstructed state.

Two constructions:

* :func:`compress_to_matrix_state` restricts the GNS operators to
  ``H_n = span{Phi(w) Omega : |w| <= n}``; the result reproduces every word
  expectation of length at most ``n``.
* :func:`finite_order_approx` replaces each test function by its weighted-L2
  projection onto the span of a chosen family, so only finitely many
  independent operators appear.
"""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass
from functools import reduce
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .algebra import MatrixTestFunction, _check_space
from .errors import CompressedWord, EmptyChoice, EmptyProbes, IndexOutOfRange, LevelTooLarge
from .gns import GnsRepresentation, gns_construct, vacuum_expectation
from .serialization import complex_to_pairs
from .states import State
from .words import WordBasis, enumerate_words

RANK_TOL = 1e-10


def _rank(mat: np.ndarray, tol: float) -> tuple[int, np.ndarray]:
    if mat.size == 0:
        return 0, np.zeros(0)
    s = np.linalg.svd(mat, compute_uv=False)
    if s[0] == 0:
        return 0, s
    return int(np.count_nonzero(s > tol * s[0])), s


@dataclass(frozen=True, eq=False)
class MatrixState:
    """``(T, w) = <v, beta(f_i1) ... beta(f_in) v>`` with d x d images ``beta``."""

    images: tuple[np.ndarray, ...]
    vector: np.ndarray
    level: int

    @property
    def dim(self) -> int:
        return self.vector.shape[0]

    def operator(self, word: Sequence[int]) -> np.ndarray:
        word = _check_word(word, len(self.images))
        return reduce(np.matmul, (self.images[i] for i in word), np.eye(self.dim, dtype=complex))

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "level": self.level,
            "images": [complex_to_pairs(b) for b in self.images],
            "vector": complex_to_pairs(self.vector),
        }


def _check_word(word, m: int) -> tuple[int, ...]:
    word = tuple(int(i) for i in word)
    for i in word:
        if not 0 <= i < m:
            raise IndexOutOfRange(f"generator index {i} out of range 0..{m - 1}")
    return word


def _require_positive(rep: GnsRepresentation) -> None:
    if rep.krein:
        raise ValueError("matrix-state constructions need a positive (non-Krein) representation")


def level_span(rep: GnsRepresentation, n: int, tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis (columns) of ``span{Phi(w) Omega : |w| <= n}``."""
    vecs = [rep.word_operator(w) @ rep.vacuum for w in enumerate_words(len(rep.ops), n)]
    V = np.stack(vecs, axis=1)
    U, s, _ = np.linalg.svd(V, full_matrices=False)
    r = int(np.count_nonzero(s > tol * s[0])) if s.size and s[0] > 0 else 0
    return U[:, :r]


def compress_to_matrix_state(rep: GnsRepresentation, n: int, tol: float = RANK_TOL) -> MatrixState:
    """Compress the field operators onto ``H_n``; exact for all words of length ``<= n``."""
    _require_positive(rep)
    if n < 0 or n > rep.max_len:
        raise LevelTooLarge(f"level {n} outside 0..{rep.max_len}")
    E = level_span(rep, n, tol)
    images = []
    for op in rep.ops:
        b = E.conj().T @ op @ E
        b.flags.writeable = False
        images.append(b)
    v = E.conj().T @ rep.vacuum
    v.flags.writeable = False
    return MatrixState(tuple(images), v, n)


def eval_matrix_state(ms: MatrixState, word: Sequence[int]) -> complex:
    word = _check_word(word, len(ms.images))
    v = ms.vector
    for i in reversed(word):
        v = ms.images[i] @ v
    return complex(np.vdot(ms.vector, v))


def order_report(rep: GnsRepresentation, probes: Sequence[MatrixTestFunction], tol: float = RANK_TOL) -> dict:
    """Rank of ``probe -> Phi(probe)`` and of the probe family itself."""
    if not probes:
        raise EmptyProbes("at least one probe function is required")
    ops = np.stack([rep.field_operator(p).ravel() for p in probes])
    order, sv = _rank(ops, tol)
    probe_rank, _ = _rank(np.stack([p.flat() for p in probes]), tol)
    return {
        "order": order,
        "probe_rank": probe_rank,
        "n_probes": len(probes),
        "sampled_dimension": probes[0].flat().size,
        "singular_values": sv.tolist(),
    }


def state_order(rep: GnsRepresentation, probes: Sequence[MatrixTestFunction], tol: float = RANK_TOL) -> int:
    """Number of linearly independent operators among ``Phi(probe)`` (0 for the zero family)."""
    return order_report(rep, probes, tol)["order"]


class FiniteOrderState(State):
    """``T(g_1 ... g_m) = <Omega, Phi(P g_1) ... Phi(P g_m) Omega>`` with ``P`` the projection onto the chosen span.

    ``order`` is the rank of ``{Phi(c) : c chosen}``.  Words longer than the
    representation's ``max_len + 1`` use compressed operators.
    """

    def __init__(self, rep: GnsRepresentation, chosen: Sequence[MatrixTestFunction], tol: float = RANK_TOL):
        if not chosen:
            raise EmptyChoice("at least one chosen function is required")
        _require_positive(rep)
        self.rep = rep
        self.chosen = tuple(chosen)
        self.space, self.k = rep.basis.space, rep.basis.k
        for c in self.chosen:
            _check_space(self.space, self.k, c.space, c.k)
        w = np.repeat(self.space.weights, self.k * self.k)
        self._w = w
        self._C = np.stack([c.flat() for c in self.chosen], axis=1)
        gram = self._C.conj().T @ (w[:, None] * self._C)
        self._gram_pinv = np.linalg.pinv(gram, rcond=tol, hermitian=True)
        self._ops = [rep.field_operator(c) for c in self.chosen]
        self.order, self.singular_values = _rank(np.stack([op.ravel() for op in self._ops]), tol)

    def coefficients(self, g: MatrixTestFunction) -> np.ndarray:
        """Coordinates of ``P g`` on the chosen family (minimum-norm solution)."""
        _check_space(self.space, self.k, g.space, g.k)
        rhs = self._C.conj().T @ (self._w * g.flat())
        return self._gram_pinv @ rhs

    def project(self, g: MatrixTestFunction) -> MatrixTestFunction:
        vals = self._C @ self.coefficients(g)
        return MatrixTestFunction(self.space, vals.reshape(g.values.shape))

    def operator(self, g: MatrixTestFunction) -> np.ndarray:
        return sum((c * op for c, op in zip(self.coefficients(g), self._ops)), np.zeros_like(self._ops[0]))

    def term_value(self, factors):
        v = self.rep.vacuum
        for f in reversed(tuple(factors)):
            v = self.operator(f) @ v
        return self.rep.inner(self.rep.vacuum, v)


def finite_order_approx(
    omega: State,
    chosen: Sequence[MatrixTestFunction],
    basis: WordBasis,
    tol: float = RANK_TOL,
    rep: GnsRepresentation | None = None,
) -> FiniteOrderState:
    """Finite-order state built from ``chosen``; agrees with ``omega`` on words in their span.

    The GNS representation of ``omega`` over ``basis`` is built unless one is
    passed in.  Agreement is exact when ``basis`` generates the chosen span
    and the word is no longer than ``basis.max_len + 1``.
    """
    if not chosen:
        raise EmptyChoice("at least one chosen function is required")
    if rep is None:
        rep = gns_construct(omega, basis)
    return FiniteOrderState(rep, chosen, tol)


@dataclass(frozen=True)
class ConvergenceRow:
    level: int
    d_n: int
    max_err_within: float
    max_err_beyond: float


def convergence_report(
    rep: GnsRepresentation, levels: Sequence[int], test_words: Sequence[Sequence[int]], tol: float = RANK_TOL
) -> list[ConvergenceRow]:
    """Per level: dimension of ``H_n`` and the worst deviation on words of length ``<= n`` and ``> n``."""
    exact = {}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CompressedWord)
        for w in test_words:
            w = tuple(w)
            exact[w] = vacuum_expectation(rep, w)
    rows = []
    for n in levels:
        ms = compress_to_matrix_state(rep, n, tol)
        within = beyond = 0.0
        for w, ref in exact.items():
            err = abs(eval_matrix_state(ms, w) - ref)
            if len(w) <= n:
                within = max(within, err)
            else:
                beyond = max(beyond, err)
        rows.append(ConvergenceRow(n, ms.dim, within, beyond))
    return rows


def convergence_csv(
    rows: Sequence[ConvergenceRow], path: str | Path | None = None, comments: Mapping[str, str] | None = None
) -> str:
    buf = io.StringIO()
    for k, v in (comments or {}).items():
        buf.write(f"# {k}: {v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["level", "d_n", "max_err_within", "max_err_beyond"])
    for r in rows:
        w.writerow([r.level, r.d_n, repr(r.max_err_within), repr(r.max_err_beyond)])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text
