"""Finite GNS reconstruction over a word basis.

Word coordinates ``c`` (one entry per generator word) carry the form
``<c, c'> = c^* G c'`` with ``G`` the Gram matrix.  Eigendecomposing ``G`` and
dropping the null directions gives the map ``Q = |L|^(1/2) V^*`` from word
coordinates onto an orthonormal basis of the quotient.  Field operators are
the compressions ``eta B^* A_f B`` with ``B = V |L|^(-1/2)``, where
``A_f[w, w'] = omega(w^* x f x w')`` and ``eta`` is the identity, or the sign
metric when an indefinite form is explicitly allowed.

With this choice ``Phi(f) Q e_w = Q e_{f w}`` holds exactly whenever
``|w| < max_len``, so vacuum expectations are exact up to word length
``max_len + 1``; longer words are compressed and flagged.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import reduce
from typing import Sequence

import numpy as np

from .algebra import BorchersElement, MatrixTestFunction, cross, star
from .errors import CompressedWord, GeneratorsNotClosed, NonPositiveState, NotInvariant, IndexOutOfRange
from .serialization import complex_to_pairs
from .states import State, eval_state, gram_matrix
from .words import WordBasis

DEFAULT_TOL = 1e-10


def build_gram(omega: State, basis: WordBasis) -> np.ndarray:
    """``G[w, w'] = omega(w^* x w')`` over all words of ``basis``."""
    return gram_matrix(omega, basis.elements)


def shifted_gram(omega: State, basis: WordBasis, f: MatrixTestFunction) -> np.ndarray:
    """``A[w, w'] = omega(w^* x f x w')``: matrix elements of left multiplication by ``f``."""
    elements = basis.elements
    F = BorchersElement.monomial([f], max_degree=basis.cap)
    left = [cross(star(e), F) for e in elements]
    A = np.empty((len(elements), len(elements)), dtype=complex)
    for i, u in enumerate(left):
        for j, v in enumerate(elements):
            A[i, j] = eval_state(omega, cross(u, v))
    return A


@dataclass(frozen=True, eq=False)
class GnsRepresentation:
    """Truncated GNS data.

    ``basis_map`` is ``Q`` (dim_H x n_words), ``embedding`` is ``B``
    (n_words x dim_H) with ``B Q`` the projector onto retained directions.
    ``metric`` is the diagonal of the inner product on H: all ones unless the
    representation was built with ``krein=True``.
    """

    gram: np.ndarray
    basis_map: np.ndarray
    embedding: np.ndarray
    ops: tuple[np.ndarray, ...]
    vacuum: np.ndarray
    metric: np.ndarray
    tol: float
    dropped: int
    min_eig: float
    basis: WordBasis
    state: State = field(repr=False)
    krein: bool = False

    @property
    def dim_H(self) -> int:
        return self.basis_map.shape[0]

    @property
    def max_len(self) -> int:
        return self.basis.max_len

    def inner(self, u: np.ndarray, v: np.ndarray) -> complex:
        return complex(np.vdot(u, self.metric * v))

    def word_vector(self, word: Sequence[int]) -> np.ndarray:
        """``[w]`` in H for a stored word, via the coordinate map."""
        word = _check_word(word, len(self.ops))
        if len(word) > self.max_len:
            raise IndexOutOfRange(f"word of length {len(word)} is not stored (max_len={self.max_len})")
        return self.basis_map[:, self.basis.index(word)]

    def word_operator(self, word: Sequence[int]) -> np.ndarray:
        word = _check_word(word, len(self.ops))
        return reduce(np.matmul, (self.ops[i] for i in word), np.eye(self.dim_H, dtype=complex))

    def field_operator(self, f: MatrixTestFunction) -> np.ndarray:
        """Compressed matrix of ``Phi(f)`` for an arbitrary test function."""
        A = shifted_gram(self.state, self.basis, f)
        return self.metric[:, None] * (self.embedding.conj().T @ A @ self.embedding)

    def to_dict(self) -> dict:
        return {
            "dim_H": self.dim_H,
            "dropped": self.dropped,
            "min_eig": self.min_eig,
            "tol": self.tol,
            "krein": self.krein,
            "max_len": self.max_len,
            "n_words": len(self.basis),
            "ops": [complex_to_pairs(op) for op in self.ops],
            "vacuum": complex_to_pairs(self.vacuum),
            "metric": self.metric.tolist(),
        }


def _check_word(word, m: int) -> tuple[int, ...]:
    word = tuple(int(i) for i in word)
    for i in word:
        if not 0 <= i < m:
            raise IndexOutOfRange(f"generator index {i} out of range 0..{m - 1}")
    return word


def _witness(basis: WordBasis, vec: np.ndarray) -> str:
    order = [i for i in np.argsort(-np.abs(vec)) if abs(vec[i]) > 1e-8][:6]
    return " + ".join(f"({vec[i]:.4g}) {basis.describe(basis.words[i])}" for i in order)


def gns_construct(omega: State, basis: WordBasis, tol: float = DEFAULT_TOL, krein: bool = False) -> GnsRepresentation:
    """Quotient the word space by the null directions of the Gram matrix.

    Eigenvalues below ``tol * max|eigenvalue|`` in magnitude are dropped.  A
    negative eigenvalue beyond that threshold raises
    :class:`NonPositiveState` unless ``krein`` is set, in which case the
    indefinite directions are kept and carry a ``-1`` metric sign.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    G = build_gram(omega, basis)
    Gh = (G + G.conj().T) / 2
    lam, V = np.linalg.eigh(Gh)
    scale = float(np.max(np.abs(lam)))
    thr = tol * scale
    min_eig = float(lam[0])
    if min_eig < -thr and not krein:
        witness = _witness(basis, V[:, 0])
        raise NonPositiveState(
            min_eig,
            witness,
            f"Gram matrix has eigenvalue {min_eig:.6g} < 0; omega(a* x a) < 0 for a = {witness}",
        )
    keep = np.abs(lam) > thr if krein else lam > thr
    lam_r, V_r = lam[keep], V[:, keep]
    metric = np.sign(lam_r)
    root = np.sqrt(np.abs(lam_r))
    Q = root[:, None] * V_r.conj().T
    B = V_r / root[None, :]
    ops = []
    for f in basis.generators:
        A = shifted_gram(omega, basis, f)
        op = metric[:, None] * (B.conj().T @ A @ B)
        op.flags.writeable = False
        ops.append(op)
    vacuum = Q[:, 0].copy()
    for arr in (G, Q, B, vacuum):
        arr.flags.writeable = False
    return GnsRepresentation(
        gram=G,
        basis_map=Q,
        embedding=B,
        ops=tuple(ops),
        vacuum=vacuum,
        metric=metric,
        tol=tol,
        dropped=int(np.count_nonzero(~keep)),
        min_eig=min_eig,
        basis=basis,
        state=omega,
        krein=krein,
    )


def vacuum_expectation(rep: GnsRepresentation, word: Sequence[int]) -> complex:
    """``<Omega, Phi(f_i1) ... Phi(f_in) Omega>``; warns for words past the exact range."""
    word = _check_word(word, len(rep.ops))
    if len(word) > rep.max_len:
        warnings.warn(
            f"word of length {len(word)} exceeds max_len={rep.max_len}; value uses compressed operators",
            CompressedWord,
            stacklevel=2,
        )
    v = rep.vacuum
    for i in reversed(word):
        v = rep.ops[i] @ v
    return rep.inner(rep.vacuum, v)


@dataclass(frozen=True)
class SymmetryReport:
    unitarity_error: float
    vacuum_error: float
    invariance_error: float
    closure_residual: float
    tol: float

    @property
    def unitary(self) -> bool:
        return self.unitarity_error <= self.tol

    @property
    def vacuum_fixed(self) -> bool:
        return self.vacuum_error <= self.tol

    def to_dict(self) -> dict:
        return {
            "unitarity_error": self.unitarity_error,
            "vacuum_error": self.vacuum_error,
            "invariance_error": self.invariance_error,
            "closure_residual": self.closure_residual,
            "unitary": self.unitary,
            "vacuum_fixed": self.vacuum_fixed,
        }


def generator_transform(generators: Sequence[MatrixTestFunction], perm: np.ndarray, tol: float = 1e-10) -> tuple[np.ndarray, float]:
    """Matrix ``R`` with ``sigma(f_i) = sum_j R[j, i] f_j``, plus the fit residual."""
    F = np.stack([g.flat() for g in generators], axis=1)
    Fs = np.stack([g.permuted(perm).flat() for g in generators], axis=1)
    R, *_ = np.linalg.lstsq(F, Fs, rcond=None)
    resid = float(np.max(np.abs(F @ R - Fs))) if F.size else 0.0
    scale = max(1.0, float(np.max(np.abs(F))))
    if resid > tol * scale:
        raise GeneratorsNotClosed(f"generator set is not mapped into its span (residual {resid:.3e})")
    return R, resid


def word_action(R: np.ndarray, max_len: int) -> np.ndarray:
    """Block-diagonal ``1 + R + R(x)R + ...`` acting on graded-lexicographic word coordinates."""
    blocks = [reduce(np.kron, [R] * n, np.ones((1, 1), dtype=complex)) for n in range(max_len + 1)]
    size = sum(b.shape[0] for b in blocks)
    S = np.zeros((size, size), dtype=complex)
    start = 0
    for b in blocks:
        n = b.shape[0]
        S[start : start + n, start : start + n] = b
        start += n
    return S


def symmetry_unitary(
    rep: GnsRepresentation,
    *,
    shift=None,
    perm=None,
    tol: float = 1e-10,
) -> tuple[np.ndarray, SymmetryReport]:
    """Matrix on H induced by a lattice shift or a point permutation of the space.

    The generators must be mapped into their own span, and the state must be
    invariant (checked on the Gram matrix).  Returns ``U`` and a report with
    ``max|U^* eta U - eta|`` and ``|U Omega - Omega|``.
    """
    if (shift is None) == (perm is None):
        raise ValueError("give exactly one of shift= or perm=")
    space = rep.basis.space
    if shift is not None:
        perm = space.shift_permutation(shift)
    perm = np.asarray(perm, dtype=np.intp)
    if sorted(perm.tolist()) != list(range(space.size)):
        raise ValueError("perm must be a permutation of the grid indices")
    R, resid = generator_transform(rep.basis.generators, perm, tol)
    S = word_action(R, rep.max_len)
    G = rep.gram
    inv_err = float(np.max(np.abs(S.conj().T @ G @ S - G)))
    if inv_err > tol * max(1.0, float(np.max(np.abs(G)))):
        raise NotInvariant(f"state is not invariant under this map (Gram deviation {inv_err:.3e})")
    U = rep.basis_map @ S @ rep.embedding
    eta = np.diag(rep.metric)
    unit_err = float(np.max(np.abs(U.conj().T @ eta @ U - eta))) if U.size else 0.0
    vac_err = float(np.linalg.norm(U @ rep.vacuum - rep.vacuum))
    return U, SymmetryReport(unit_err, vac_err, inv_err, resid, tol)
