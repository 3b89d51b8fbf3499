"""Wightman data, pulled-back states, and checks of the state axioms.

A state here is composed of two stages.  Wightman data ``W_n`` pair the
degree-n part of an element with a kernel on grid n-tuples, producing a value
in the target matrix algebra; the normalized trace ``tr(.)/k`` then turns it
into a number.  Two pairing rules are supported:

``product``
    multiply all factor values in the target algebra, then trace once.
``tensor``
    keep one matrix slot per factor and trace slot by slot (the
    Hilbert-Schmidt rule for tensor powers).  For ultralocal data each
    delta-paired pair of slots is multiplied and traced together.

For k = 1 the two rules agree.
"""

from __future__ import annotations

import itertools
import json
import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from functools import reduce
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .algebra import (
    BorchersElement,
    MatrixTestFunction,
    SampledSpace,
    _check_space,
    cross,
    product_values,
    star,
    translate,
)
from .errors import (
    DegreeOverflow,
    LambdaOutOfRange,
    SupportsOverlap,
    UnsupportedDegree,
    ZeroEpsilon,
)
from .serialization import complex_from_pairs, complex_to_pairs
from .words import WordBasis

NORMALIZATION_TOL = 1e-12


class TraceMode(str, Enum):
    PRODUCT = "product"
    TENSOR = "tensor"


def _ntrace(a: np.ndarray) -> complex:
    return complex(np.trace(a, axis1=-2, axis2=-1).sum()) / a.shape[-1]


def _weight_tensor(weights: np.ndarray, n: int) -> np.ndarray:
    return reduce(np.multiply.outer, [weights] * n, np.ones(()))


# ---------------------------------------------------------------------------
# Wightman data
# ---------------------------------------------------------------------------


class WightmanData:
    """Base class.  Subclasses implement :meth:`pair` for one elementary term."""

    kind: str = ""

    def __init__(self, space: SampledSpace, k: int):
        self.space = space
        self.k = int(k)

    def pair(self, factors: Sequence[MatrixTestFunction], mode: TraceMode) -> complex:
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {"kind": self.kind}


class ConstantData(WightmanData):
    """``W_n = alpha_n * Id`` independent of position; ``alpha_n = 0`` past the given sequence."""

    kind = "constant"

    def __init__(self, space: SampledSpace, k: int, alpha: Sequence[float]):
        super().__init__(space, k)
        a = np.asarray(alpha, dtype=float).reshape(-1)
        if a.size == 0 or not np.all(np.isfinite(a)):
            raise ValueError("alpha must be a nonempty finite sequence")
        self.alpha = a

    def coefficient(self, n: int) -> float:
        return float(self.alpha[n]) if n < self.alpha.size else 0.0

    def pair(self, factors, mode):
        n = len(factors)
        a = self.coefficient(n)
        if a == 0.0:
            return 0j
        integrals = [f.integral() for f in factors]
        if mode is TraceMode.TENSOR:
            return a * math.prod((_ntrace(F) for F in integrals), start=1 + 0j)
        prod = reduce(np.matmul, integrals, np.eye(self.k, dtype=complex))
        return a * _ntrace(prod)

    def to_dict(self):
        return {"kind": self.kind, "alpha": self.alpha.tolist()}


class UltralocalData(WightmanData):
    """Nested delta pairing ``W_2n = prod_i delta(x_{n+i}, x_{n+1-i}) Id``; odd orders vanish."""

    kind = "ultralocal"

    def pair(self, factors, mode):
        n = len(factors)
        if n == 0:
            return 1 + 0j
        if n % 2:
            return 0j
        q = n // 2
        w = self.space.weights
        if mode is TraceMode.TENSOR:
            out = 1 + 0j
            for r in range(q):
                left, right = factors[q - 1 - r], factors[q + r]
                out *= complex(np.einsum("x,xab,xba->", w, left.values, right.values)) / self.k
            return out
        inner = np.eye(self.k, dtype=complex)
        for r in range(q):
            left, right = factors[q - 1 - r], factors[q + r]
            inner = np.einsum("x,xab,bc,xcd->ad", w, left.values, inner, right.values)
        return _ntrace(inner)


class TabulatedData(WightmanData):
    """Explicit kernels ``W[n]`` of shape ``(M,)*n + (k, k)``.

    In tensor mode the kernel enters through its normalized trace and every
    factor is traced in its own slot.
    """

    kind = "tabulated"

    def __init__(self, space: SampledSpace, k: int, W: dict[int, Any]):
        super().__init__(space, k)
        M = space.size
        table = {}
        for n, arr in W.items():
            n = int(n)
            a = np.array(arr, dtype=complex)
            if a.shape == (M,) * n and k == 1:
                a = a[..., None, None]
            if a.shape != (M,) * n + (k, k):
                raise ValueError(f"W[{n}] must have shape {(M,) * n + (k, k)}, got {a.shape}")
            if not np.all(np.isfinite(a)):
                raise ValueError(f"W[{n}] has non-finite entries")
            a.flags.writeable = False
            table[n] = a
        self.W = table

    @property
    def max_degree(self) -> int:
        return max(self.W, default=0)

    def kernel(self, n: int) -> np.ndarray:
        try:
            return self.W[n]
        except KeyError:
            raise UnsupportedDegree(f"tabulated data has no W[{n}]") from None

    def pair(self, factors, mode):
        n = len(factors)
        Wn = self.kernel(n)
        wt = _weight_tensor(self.space.weights, n)
        if mode is TraceMode.TENSOR:
            s = np.trace(Wn, axis1=-2, axis2=-1) / self.k
            prod = np.ones(())
            for f in factors:
                prod = np.multiply.outer(prod, np.trace(f.values, axis1=1, axis2=2) / self.k)
            return complex(np.sum(wt * s * prod))
        F = product_values(factors, self.k)
        return complex(np.sum(wt * np.einsum("...ab,...ba->...", F, Wn))) / self.k

    def to_dict(self):
        return {"kind": self.kind, "W": {str(n): complex_to_pairs(a) for n, a in sorted(self.W.items())}}


class MatrixModelData(WightmanData):
    """Matrix-model data: zero on any nonconstant factor, moment contraction otherwise.

    ``moments`` must provide ``contract(list_of_matrices) -> complex``.  The
    trace mode does not enter: the contraction already yields a number.
    """

    kind = "matrix_model"

    def __init__(self, space: SampledSpace, k: int, moments, source: str | None = None):
        super().__init__(space, k)
        self.moments = moments
        self.source = source

    def pair(self, factors, mode):
        if not factors:
            return 1 + 0j
        if not all(f.is_constant() for f in factors):
            return 0j
        return complex(self.moments.contract([f.values[0] for f in factors]))

    def to_dict(self):
        return {"kind": self.kind, "moments": self.source}


# ---------------------------------------------------------------------------
# States
# ---------------------------------------------------------------------------


class State:
    """Common interface: linear functional on :class:`BorchersElement`."""

    space: SampledSpace
    k: int

    def term_value(self, factors: Sequence[MatrixTestFunction]) -> complex:
        raise NotImplementedError

    def __call__(self, f: BorchersElement) -> complex:
        return eval_state(self, f)


class StateFunctional(State):
    """Pulled-back state: Wightman data followed by the normalized trace.

    The unit must evaluate to 1; otherwise construction fails.
    """

    def __init__(self, data: WightmanData, trace_mode: TraceMode | str | None = None):
        if trace_mode is None:
            trace_mode = TraceMode.TENSOR if isinstance(data, UltralocalData) else TraceMode.PRODUCT
        self.data = data
        self.trace_mode = TraceMode(trace_mode)
        self.space = data.space
        self.k = data.k
        norm = self.term_value(())
        if abs(norm - 1) > NORMALIZATION_TOL:
            raise ValueError(f"state is not normalized: omega(1) = {norm}")

    @property
    def kind(self) -> str:
        return self.data.kind

    def term_value(self, factors):
        return self.data.pair(tuple(factors), self.trace_mode)

    def to_dict(self) -> dict:
        doc = self.data.to_dict()
        doc["trace_mode"] = self.trace_mode.value
        return doc

    def __repr__(self):
        return f"StateFunctional(kind={self.kind!r}, trace_mode={self.trace_mode.value!r}, k={self.k})"


class MixedState(State):
    def __init__(self, lam: float, first: State, second: State):
        if not 0.0 < lam < 1.0:
            raise LambdaOutOfRange(f"mixing weight must lie in (0, 1), got {lam}")
        _check_space(first.space, first.k, second.space, second.k)
        self.lam = float(lam)
        self.first, self.second = first, second
        self.space, self.k = first.space, first.k

    def term_value(self, factors):
        return self.lam * self.first.term_value(factors) + (1 - self.lam) * self.second.term_value(factors)


class DeformedState(State):
    """Each internal target-algebra product scaled by ``eps``: degree n picks up ``eps**(n-1)``."""

    def __init__(self, base: State, eps: float):
        if eps == 0:
            raise ZeroEpsilon("deformation parameter must be nonzero")
        self.base, self.eps = base, eps
        self.space, self.k = base.space, base.k

    def term_value(self, factors):
        n = len(factors)
        val = self.base.term_value(factors)
        return val if n == 0 else val * self.eps ** (n - 1)


def eval_state(omega: State, f: BorchersElement) -> complex:
    """Sum of coefficient times the pairing of each term with the state."""
    _check_space(omega.space, omega.k, f.space, f.k)
    total = 0j
    for t in f.terms:
        total += t.coeff * omega.term_value(t.factors)
    return total


def sesquilinear(omega: State, f: BorchersElement, g: BorchersElement) -> complex:
    """``omega(f^* x g)``: conjugate-linear in ``f``, linear in ``g``."""
    return eval_state(omega, cross(star(f), g))


def gram_matrix(omega: State, elements: Sequence[BorchersElement]) -> np.ndarray:
    n = len(elements)
    starred = [star(e) for e in elements]
    G = np.empty((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            G[i, j] = eval_state(omega, cross(starred[i], elements[j]))
    return G


def mix_states(lam: float, first: State, second: State) -> MixedState:
    return MixedState(lam, first, second)


def deform_state(omega: State, eps: float) -> DeformedState:
    return DeformedState(omega, eps)


def tensor_product_states(T: StateFunctional, S: StateFunctional, max_degree: int | None = None) -> StateFunctional:
    """Symmetrized product over ordered splittings of the arguments.

    ``(T (x)_s S)_n(x_1..x_n) = sum_{i+j=n} sum_{I} T_i(x_I) S_j(x_J)`` with ``I``
    running over increasing index subsets of size ``i`` and ``J`` its complement.
    Target values multiply as ``T`` then ``S``.  Each entry is summed with
    :func:`math.fsum`, so the result does not depend on summation order.
    """
    for st in (T, S):
        if not isinstance(getattr(st, "data", None), TabulatedData):
            raise TypeError("tensor_product_states needs tabulated states")
    _check_space(T.space, T.k, S.space, S.k)
    if T.trace_mode is not S.trace_mode:
        raise ValueError("both states must use the same trace mode")
    dT, dS = T.data, S.data
    D = max(dT.max_degree, dS.max_degree) if max_degree is None else max_degree
    M, k = T.space.size, T.k
    W = {}
    for n in range(D + 1):
        pieces = []
        for i in range(n + 1):
            j = n - i
            if i not in dT.W or j not in dS.W:
                raise DegreeOverflow(f"degree {n} needs T[{i}] and S[{j}], which are not tabulated")
            Ti, Sj = dT.W[i], dS.W[j]
            for I in itertools.combinations(range(n), i):
                J = tuple(a for a in range(n) if a not in I)
                # T_i over the axes in I, S_j over the axes in J
                t_axes = list(I) + [n, n + 1]
                s_axes = list(J) + [n + 1, n + 2]
                out_axes = list(range(n)) + [n, n + 2]
                pieces.append(np.einsum(Ti, t_axes, Sj, s_axes, out_axes))
        stack = np.stack(pieces)
        re = np.apply_along_axis(math.fsum, 0, stack.real)
        im = np.apply_along_axis(math.fsum, 0, stack.imag)
        W[n] = (re + 1j * im).reshape((M,) * n + (k, k))
    return StateFunctional(TabulatedData(T.space, k, W), T.trace_mode)


# ---------------------------------------------------------------------------
# Axiom checks
# ---------------------------------------------------------------------------


@dataclass
class CheckReport:
    check: str
    passed: bool
    values: dict = field(default_factory=dict)
    witness: str | None = None

    def to_dict(self) -> dict:
        return {"check": self.check, "passed": bool(self.passed), "values": _jsonable(self.values), "witness": self.witness}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(np.real(obj)), float(np.imag(obj))]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def check_positivity(omega: State, generators: Sequence[MatrixTestFunction], max_len: int, tol: float = 1e-10) -> CheckReport:
    """Minimum eigenvalue of the Gram matrix over all generator words up to ``max_len``."""
    basis = WordBasis(tuple(generators), max_len)
    G = gram_matrix(omega, basis.elements)
    herm_err = float(np.max(np.abs(G - G.conj().T)))
    evals, evecs = np.linalg.eigh((G + G.conj().T) / 2)
    lo = float(evals[0])
    values = {"min_eigenvalue": lo, "max_eigenvalue": float(evals[-1]), "n_words": len(basis), "hermiticity_error": herm_err}
    witness = None
    if lo < -tol:
        v = evecs[:, 0]
        values["violating_vector"] = v
        order = np.argsort(-np.abs(v))[:4]
        witness = " + ".join(f"({v[i]:.3g})*{basis.describe(basis.words[i])}" for i in order)
        witness = f"omega(a* x a) = {lo:.3e} for a = {witness}"
    return CheckReport("positivity", lo >= -tol, values, witness)


def check_translation_invariance(
    omega: State,
    generators: Sequence[MatrixTestFunction],
    shifts: Sequence,
    tol: float = 1e-10,
    max_len: int = 2,
) -> CheckReport:
    basis = WordBasis(tuple(generators), max_len)
    worst, where = 0.0, None
    for shift in shifts:
        for word, el in zip(basis.words, basis.elements):
            dev = abs(eval_state(omega, translate(el, shift)) - eval_state(omega, el))
            if dev > worst:
                worst, where = dev, (basis.describe(word), np.asarray(shift, dtype=float).tolist())
    witness = None if worst <= tol else f"word {where[0]} under shift {where[1]} moves by {worst:.3e}"
    return CheckReport("translation", worst <= tol, {"max_deviation": worst, "n_shifts": len(shifts)}, witness)


def check_locality(
    omega: State,
    f: MatrixTestFunction,
    g: MatrixTestFunction,
    sandwiches: Sequence[tuple[BorchersElement, BorchersElement]] | None = None,
    tol: float = 1e-10,
) -> CheckReport:
    """``|omega(u x [f, g] x v)|`` over sandwich pairs; disjoint supports stand in for spacelike."""
    _check_space(f.space, f.k, g.space, g.k)
    overlap = np.intersect1d(f.support(), g.support())
    if overlap.size:
        warnings.warn(f"supports overlap at grid points {overlap.tolist()}", SupportsOverlap, stacklevel=2)
    unit = BorchersElement.unit(f.space, f.k)
    if sandwiches is None:
        sandwiches = [(unit, unit)]
    cap = max([unit.max_degree] + [max(u.max_degree, v.max_degree, u.degree + v.degree + 2) for u, v in sandwiches])
    F = BorchersElement.monomial([f], max_degree=cap)
    G = BorchersElement.monomial([g], max_degree=cap)
    comm = cross(F, G) - cross(G, F)
    worst, where = 0.0, None
    for i, (u, v) in enumerate(sandwiches):
        val = abs(eval_state(omega, cross(cross(u.with_max_degree(cap), comm), v.with_max_degree(cap))))
        if val > worst:
            worst, where = val, i
    witness = None if worst <= tol else f"sandwich #{where} gives |omega(u [f,g] v)| = {worst:.3e}"
    return CheckReport("locality", worst <= tol, {"max_abs": worst, "overlap": overlap.tolist()}, witness)


@dataclass(frozen=True)
class SeminormSpec:
    """Per-degree grid seminorms ``p_n = c_n * ||f_n||`` (``kind`` "l1" or "l2")."""

    kinds: dict[int, str]
    constants: dict[int, float]

    def __post_init__(self):
        for n, c in self.constants.items():
            if not (np.isfinite(c) and c >= 0):
                raise ValueError(f"seminorm constant c_{n} must be finite and nonnegative")
        for kind in self.kinds.values():
            if kind not in ("l1", "l2"):
                raise ValueError(f"unknown seminorm kind {kind!r}")

    @classmethod
    def uniform(cls, kind: str = "l2", c: float = 1.0, max_degree: int = 8) -> "SeminormSpec":
        return cls({n: kind for n in range(max_degree + 1)}, {n: c for n in range(max_degree + 1)})

    def __call__(self, f: BorchersElement, mode: TraceMode = TraceMode.PRODUCT) -> float:
        if not f.terms:
            return 0.0
        if not f.is_homogeneous():
            raise ValueError("seminorms apply to homogeneous elements")
        n = f.degree
        wt = _weight_tensor(f.space.weights, n)
        if mode is TraceMode.TENSOR:
            dense = f.dense(n, "tensor")
            sq = np.sum(np.abs(dense) ** 2, axis=tuple(range(n, dense.ndim))) / f.k**n
        else:
            dense = f.dense(n, "product")
            sq = np.sum(np.abs(dense) ** 2, axis=(-2, -1)) / f.k
        if self.kinds[n] == "l2":
            norm = math.sqrt(float(np.sum(wt * sq)))
        else:
            norm = float(np.sum(wt * np.sqrt(sq)))
        return self.constants[n] * norm


def check_hssc(
    omega: State,
    spec: SeminormSpec,
    samples: Sequence[tuple[BorchersElement, BorchersElement]],
    tol: float = 1e-10,
) -> CheckReport:
    """``|omega(f_n^* x g_m)| <= p_n(f_n) p_m(g_m)`` on sampled homogeneous pairs."""
    mode = getattr(omega, "trace_mode", TraceMode.PRODUCT)
    worst_ratio, violations = 0.0, []
    for i, (f, g) in enumerate(samples):
        lhs = abs(sesquilinear(omega, f, g))
        rhs = spec(f, mode) * spec(g, mode)
        if lhs > rhs + tol:
            violations.append(i)
        if rhs > 0:
            worst_ratio = max(worst_ratio, lhs / rhs)
        elif lhs > tol:
            worst_ratio = math.inf
    witness = f"sample pairs {violations} exceed the seminorm bound" if violations else None
    return CheckReport("hssc", not violations, {"max_ratio": worst_ratio, "violations": violations, "n_samples": len(samples)}, witness)


def check_krein(
    omega: State,
    alpha: np.ndarray,
    samples: Sequence[tuple[MatrixTestFunction, MatrixTestFunction]],
    tol: float = 1e-10,
) -> CheckReport:
    """Krein conditions 1-3 for a linear map ``alpha`` on flattened degree-1 values.

    Condition 4 (continuity of ``p_alpha``) has no meaning on a finite grid
    and is reported as not checked.
    """
    alpha = np.asarray(alpha, dtype=complex)

    def act(f: MatrixTestFunction) -> MatrixTestFunction:
        return MatrixTestFunction(f.space, (alpha @ f.flat()).reshape(f.values.shape))

    def form(a: MatrixTestFunction, b: MatrixTestFunction) -> complex:
        return sesquilinear(omega, BorchersElement.monomial([a]), BorchersElement.monomial([b]))

    c1 = c2 = c3 = 0.0
    p_alpha = []
    for f, g in samples:
        c1 = max(c1, abs(form(act(act(f)), g) - form(f, g)))
        q = form(act(f), f)
        c2 = max(c2, max(0.0, -q.real), abs(q.imag))
        p_alpha.append(math.sqrt(max(q.real, 0.0)))
        c3 = max(c3, abs(form(act(f), g) - form(f, act(g))))
    failed = [name for name, v in (("condition_1", c1), ("condition_2", c2), ("condition_3", c3)) if v > tol]
    values = {
        "condition_1": c1,
        "condition_2": c2,
        "condition_3": c3,
        "condition_4": "not checked",
        "p_alpha": p_alpha,
    }
    return CheckReport("krein", not failed, values, f"violated: {', '.join(failed)}" if failed else None)


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------


def state_from_dict(doc: dict, space: SampledSpace, k: int, base_path: str | Path | None = None) -> StateFunctional:
    """Build a state from ``{"kind": ..., "trace_mode": ...}`` plus kind-specific fields."""
    kind = doc.get("kind")
    mode = doc.get("trace_mode")
    if kind == "constant":
        data = ConstantData(space, k, doc["alpha"])
    elif kind == "ultralocal":
        data = UltralocalData(space, k)
    elif kind == "tabulated":
        W = {int(n): complex_from_pairs(v) for n, v in doc["W"].items()}
        data = TabulatedData(space, k, W)
    elif kind == "matrix_model":
        from .matrix_model import MomentTable

        path = Path(doc["moments"])
        if base_path is not None and not path.is_absolute():
            path = Path(base_path).parent / path
        data = MatrixModelData(space, k, MomentTable.read_csv(path), source=str(doc["moments"]))
    else:
        raise ValueError(f"unknown state kind {kind!r}")
    return StateFunctional(data, mode)
