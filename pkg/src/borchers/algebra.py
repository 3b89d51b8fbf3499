"""Finite model of the field algebra over matrix-valued test functions.

Test functions live on a :class:`SampledSpace`, a weighted point set standing
in for the base manifold; integrals are weighted sums.  Each test function
takes k x k complex matrix values.  A :class:`BorchersElement` is a finite sum
of elementary tensors ``c * f_1 (x) ... (x) f_n`` kept symbolically, so the
cross product is concatenation of factor lists and the involution reverses and
adjoints them.  Nothing is ever expanded into a dense tensor unless asked for.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DegreeOverflow, NotPeriodic, OffLattice, SpaceMismatch
from .serialization import complex_from_pairs, complex_to_pairs

DEFAULT_MAX_DEGREE = 4
COEFF_EPS = 1e-14


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


class SampledSpace:
    """Weighted point set in R^d with optional periodic axes.

    Parameters
    ----------
    points : array_like, shape (M, d) or (M,)
    weights : array_like, shape (M,)
        Positive quadrature weights.
    periods : sequence of (float or None), optional
        Period length per axis; ``None`` means the axis is not periodic.  A
        periodic axis must carry a uniform lattice whose spacing divides the
        period.
    """

    def __init__(self, points, weights, periods: Sequence[float | None] | None = None):
        pts = np.array(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise ValueError("points must be a nonempty (M, d) array")
        w = np.array(weights, dtype=float).reshape(-1)
        if w.shape[0] != pts.shape[0]:
            raise ValueError("one weight per point required")
        if not np.all(np.isfinite(pts)) or not np.all(np.isfinite(w)):
            raise ValueError("points and weights must be finite")
        if np.any(w <= 0):
            raise ValueError("weights must be positive")
        if len({tuple(p) for p in pts}) != len(pts):
            raise ValueError("points must be distinct")
        d = pts.shape[1]
        if periods is None:
            periods = [None] * d
        periods = tuple(None if (p is None or p is False) else float(p) for p in periods)
        if len(periods) != d:
            raise ValueError("one period entry per axis required")
        self.points = _frozen(pts)
        self.weights = _frozen(w)
        self.periods = periods
        self.spacing: tuple[float | None, ...] = tuple(
            self._check_lattice(axis) if per is not None else None for axis, per in enumerate(periods)
        )

    def _check_lattice(self, axis: int) -> float:
        period = self.periods[axis]
        coords = np.unique(self.points[:, axis])
        if period <= 0:
            raise ValueError(f"period on axis {axis} must be positive")
        if len(coords) == 1:
            return period
        steps = np.diff(coords)
        h = steps[0]
        if not np.allclose(steps, h, rtol=1e-9, atol=1e-12):
            raise ValueError(f"periodic axis {axis} is not a uniform lattice")
        if not np.isclose(h * len(coords), period, rtol=1e-9):
            raise ValueError(f"lattice spacing on axis {axis} does not tile the period {period}")
        return float(h)

    @classmethod
    def uniform_lattice(cls, n: int, length: float = 1.0, periodic: bool = True) -> "SampledSpace":
        """``n`` equally spaced points on ``[0, length)`` with weight ``length/n`` each."""
        h = length / n
        return cls(np.arange(n) * h, np.full(n, h), [length if periodic else None])

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.size

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if not isinstance(other, SampledSpace):
            return NotImplemented
        return (
            self.periods == other.periods
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.weights, other.weights)
        )

    def __hash__(self):
        return hash((self.points.tobytes(), self.weights.tobytes(), self.periods))

    def __repr__(self) -> str:
        return f"SampledSpace(M={self.size}, d={self.dim}, periods={self.periods})"

    def grid_delta(self, i: int, j: int) -> float:
        """Discrete delta ``[x_i = x_j] / w_i``."""
        return 1.0 / self.weights[i] if i == j else 0.0

    def index_of(self, point) -> int:
        p = np.asarray(point, dtype=float).reshape(-1)
        dist = np.max(np.abs(self.points - p), axis=1)
        i = int(np.argmin(dist))
        scale = max(1.0, float(np.max(np.abs(self.points))))
        if dist[i] > 1e-9 * scale:
            raise KeyError(f"no grid point at {p}")
        return i

    def shift_permutation(self, shift) -> np.ndarray:
        """Index map ``perm`` with ``perm[i]`` the point ``x_i - shift`` (wrapped).

        A function translated by ``shift`` then has values ``values[perm]``.
        """
        a = np.asarray(shift, dtype=float).reshape(-1)
        if a.shape[0] != self.dim:
            raise ValueError("shift dimension does not match the space")
        for axis, ai in enumerate(a):
            if ai == 0:
                continue
            if self.periods[axis] is None:
                raise NotPeriodic(f"axis {axis} is not periodic")
            h = self.spacing[axis]
            if not np.isclose(ai / h, np.round(ai / h), rtol=0, atol=1e-9):
                raise OffLattice(f"shift {ai} is not a multiple of the spacing {h}")
        src = self.points - a
        for axis, per in enumerate(self.periods):
            if per is not None:
                lo = self.points[:, axis].min()
                src[:, axis] = lo + np.mod(src[:, axis] - lo, per)
                # wrap values that land numerically on the period back to lo
                src[np.isclose(src[:, axis], lo + per, rtol=0, atol=1e-9), axis] = lo
        try:
            return np.array([self.index_of(p) for p in src], dtype=np.intp)
        except KeyError as exc:
            raise OffLattice("point set is not closed under this shift") from exc

    def to_dict(self) -> dict:
        return {
            "points": self.points.tolist(),
            "weights": self.weights.tolist(),
            "periodic": [p if p is not None else None for p in self.periods],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SampledSpace":
        return cls(doc["points"], doc["weights"], doc.get("periodic"))


class MatrixTestFunction:
    """A k x k complex-matrix valued function sampled on a :class:`SampledSpace`."""

    def __init__(self, space: SampledSpace, values):
        vals = np.array(values, dtype=complex)
        if vals.ndim == 1 and vals.shape[0] == space.size:
            vals = vals[:, None, None]
        if vals.ndim != 3 or vals.shape[0] != space.size or vals.shape[1] != vals.shape[2]:
            raise ValueError(f"values must have shape (M, k, k) with M={space.size}, got {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("test function values must be finite")
        self.space = space
        self.values = _frozen(vals)

    @property
    def k(self) -> int:
        return self.values.shape[1]

    @classmethod
    def constant(cls, space: SampledSpace, matrix) -> "MatrixTestFunction":
        m = np.atleast_2d(np.asarray(matrix, dtype=complex))
        return cls(space, np.broadcast_to(m, (space.size,) + m.shape))

    @classmethod
    def delta(cls, space: SampledSpace, index: int, matrix=None, k: int = 1) -> "MatrixTestFunction":
        """Indicator of a single grid point carrying ``matrix`` (identity by default)."""
        m = np.eye(k, dtype=complex) if matrix is None else np.atleast_2d(np.asarray(matrix, dtype=complex))
        vals = np.zeros((space.size,) + m.shape, dtype=complex)
        vals[index] = m
        return cls(space, vals)

    @classmethod
    def from_callable(cls, space: SampledSpace, fn: Callable[[np.ndarray], np.ndarray]) -> "MatrixTestFunction":
        return cls(space, np.array([np.atleast_2d(fn(p)) for p in space.points]))

    def adjoint(self) -> "MatrixTestFunction":
        return MatrixTestFunction(self.space, np.conj(np.swapaxes(self.values, 1, 2)))

    def permuted(self, perm) -> "MatrixTestFunction":
        return MatrixTestFunction(self.space, self.values[np.asarray(perm)])

    def translated(self, shift) -> "MatrixTestFunction":
        return self.permuted(self.space.shift_permutation(shift))

    def integral(self) -> np.ndarray:
        return np.einsum("x,xab->ab", self.space.weights, self.values)

    def is_constant(self) -> bool:
        v = self.values
        return bool(np.allclose(v, v[0], rtol=0, atol=1e-14 * max(1.0, float(np.max(np.abs(v))))))

    def support(self) -> np.ndarray:
        return np.flatnonzero(np.any(np.abs(self.values) > 0, axis=(1, 2)))

    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    def __add__(self, other: "MatrixTestFunction") -> "MatrixTestFunction":
        _check_space(self.space, self.k, other.space, other.k)
        return MatrixTestFunction(self.space, self.values + other.values)

    def __sub__(self, other: "MatrixTestFunction") -> "MatrixTestFunction":
        return self + (-1) * other

    def __mul__(self, c) -> "MatrixTestFunction":
        return MatrixTestFunction(self.space, complex(c) * self.values)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"MatrixTestFunction(M={self.space.size}, k={self.k})"

    def to_dict(self) -> dict:
        doc = self.space.to_dict()
        doc["k"] = self.k
        doc["values"] = complex_to_pairs(self.values)
        return doc

    @classmethod
    def from_dict(cls, doc: dict, space: SampledSpace | None = None) -> "MatrixTestFunction":
        space = space if space is not None else SampledSpace.from_dict(doc)
        vals = complex_from_pairs(doc["values"])
        k = int(doc.get("k", vals.shape[-1] if vals.ndim == 3 else 1))
        return cls(space, vals.reshape(space.size, k, k))


def _check_space(s1: SampledSpace, k1: int, s2: SampledSpace, k2: int) -> None:
    if k1 != k2 or s1 != s2:
        raise SpaceMismatch("operands live on different spaces or matrix sizes")


@dataclass(frozen=True)
class Term:
    """Elementary tensor ``coeff * factors[0] (x) ... (x) factors[-1]``."""

    coeff: complex
    factors: tuple[MatrixTestFunction, ...] = ()

    @property
    def degree(self) -> int:
        return len(self.factors)


class BorchersElement:
    """Finite sum of elementary tensors of matrix test functions.

    ``max_degree`` caps the grading; constructors and products raise
    :class:`DegreeOverflow` instead of truncating.
    """

    def __init__(self, space: SampledSpace, k: int, terms: Iterable[Term] = (), max_degree: int = DEFAULT_MAX_DEGREE):
        self.space = space
        self.k = int(k)
        self.max_degree = int(max_degree)
        kept = []
        for t in terms:
            if abs(t.coeff) < COEFF_EPS:
                continue
            if t.degree > self.max_degree:
                raise DegreeOverflow(f"degree {t.degree} exceeds the cap {self.max_degree}")
            for f in t.factors:
                _check_space(space, self.k, f.space, f.k)
            kept.append(Term(complex(t.coeff), tuple(t.factors)))
        self.terms: tuple[Term, ...] = tuple(kept)

    # -- constructors -------------------------------------------------
    @classmethod
    def unit(cls, space: SampledSpace, k: int, max_degree: int = DEFAULT_MAX_DEGREE) -> "BorchersElement":
        return cls(space, k, [Term(1.0)], max_degree)

    @classmethod
    def scalar(cls, c, space: SampledSpace, k: int, max_degree: int = DEFAULT_MAX_DEGREE) -> "BorchersElement":
        return cls(space, k, [Term(complex(c))], max_degree)

    @classmethod
    def monomial(
        cls, factors: Sequence[MatrixTestFunction], coeff=1.0, max_degree: int = DEFAULT_MAX_DEGREE
    ) -> "BorchersElement":
        if not factors:
            raise ValueError("use BorchersElement.scalar for degree-0 elements")
        f0 = factors[0]
        return cls(f0.space, f0.k, [Term(complex(coeff), tuple(factors))], max_degree)

    # -- structure ----------------------------------------------------
    @property
    def degree(self) -> int:
        return max((t.degree for t in self.terms), default=0)

    def component(self, n: int) -> "BorchersElement":
        return self._like(t for t in self.terms if t.degree == n)

    def is_homogeneous(self) -> bool:
        return len({t.degree for t in self.terms}) <= 1

    def _like(self, terms) -> "BorchersElement":
        return BorchersElement(self.space, self.k, terms, self.max_degree)

    def with_max_degree(self, max_degree: int) -> "BorchersElement":
        return BorchersElement(self.space, self.k, self.terms, max_degree)

    # -- linear structure ---------------------------------------------
    def __add__(self, other: "BorchersElement") -> "BorchersElement":
        if not isinstance(other, BorchersElement):
            return NotImplemented
        _check_space(self.space, self.k, other.space, other.k)
        cap = max(self.max_degree, other.max_degree)
        return BorchersElement(self.space, self.k, self.terms + other.terms, cap)

    def __neg__(self) -> "BorchersElement":
        return self * -1

    def __sub__(self, other: "BorchersElement") -> "BorchersElement":
        return self + (-other)

    def __mul__(self, c) -> "BorchersElement":
        if isinstance(c, BorchersElement):
            return NotImplemented
        c = complex(c)
        return self._like(Term(c * t.coeff, t.factors) for t in self.terms)

    __rmul__ = __mul__

    def __matmul__(self, other: "BorchersElement") -> "BorchersElement":
        return cross(self, other)

    # -- evaluation -----------------------------------------------------
    def dense(self, n: int, mode: str = "product") -> np.ndarray:
        """Degree-``n`` component sampled on all grid n-tuples.

        ``mode="product"`` multiplies the factor values in the target algebra
        (shape ``(M,)*n + (k, k)``); ``mode="tensor"`` keeps one matrix slot
        per factor (shape ``(M,)*n + (k, k)*n``).
        """
        M, k = self.space.size, self.k
        if mode == "product":
            out = np.zeros((M,) * n + (k, k), dtype=complex)
            for t in self.terms:
                if t.degree == n:
                    out += t.coeff * product_values(t.factors, k)
        elif mode == "tensor":
            out = np.zeros((M,) * n + (k, k) * n, dtype=complex)
            for t in self.terms:
                if t.degree == n:
                    out += t.coeff * tensor_values(t.factors)
        else:
            raise ValueError(f"unknown mode {mode!r}")
        return out

    def value_at(self, idx: Sequence[int]) -> np.ndarray:
        """Degree-``len(idx)`` component at the given grid indices (product rule)."""
        n = len(idx)
        out = np.zeros((self.k, self.k), dtype=complex)
        for t in self.terms:
            if t.degree != n:
                continue
            val = reduce(np.matmul, (f.values[i] for f, i in zip(t.factors, idx)), np.eye(self.k, dtype=complex))
            out += t.coeff * val
        return out

    def allclose(self, other: "BorchersElement", atol: float = 1e-12) -> bool:
        """Compare as functions on the grid, under both evaluation rules."""
        _check_space(self.space, self.k, other.space, other.k)
        for n in range(max(self.degree, other.degree) + 1):
            for mode in ("product", "tensor"):
                if not np.allclose(self.dense(n, mode), other.dense(n, mode), rtol=0, atol=atol):
                    return False
        return True

    def __repr__(self) -> str:
        degs = sorted({t.degree for t in self.terms})
        return f"BorchersElement(k={self.k}, terms={len(self.terms)}, degrees={degs})"


def product_values(factors: Sequence[MatrixTestFunction], k: int) -> np.ndarray:
    """``f_1(x_1) f_2(x_2) ... f_n(x_n)`` on all grid tuples, shape ``(M,)*n + (k, k)``."""
    if not factors:
        return np.eye(k, dtype=complex)
    out = factors[0].values
    for f in factors[1:]:
        out = np.einsum("...ab,ybc->...yac", out, f.values)
    return out


def tensor_values(factors: Sequence[MatrixTestFunction]) -> np.ndarray:
    """``f_1(x_1) (x) ... (x) f_n(x_n)``, shape ``(M,)*n + (k, k)*n``."""
    if not factors:
        return np.ones((), dtype=complex)
    n = len(factors)
    out = factors[0].values
    for f in factors[1:]:
        out = np.multiply.outer(out, f.values)
    # reorder (x1, a1, b1, x2, a2, b2, ...) -> (x1..xn, a1, b1, ..., an, bn)
    axes = [3 * i for i in range(n)] + [ax for i in range(n) for ax in (3 * i + 1, 3 * i + 2)]
    return np.transpose(out, axes)


def cross(f: BorchersElement, g: BorchersElement) -> BorchersElement:
    """Graded product: concatenate factor lists term by term."""
    _check_space(f.space, f.k, g.space, g.k)
    cap = max(f.max_degree, g.max_degree)
    terms = []
    for s in f.terms:
        for t in g.terms:
            if s.degree + t.degree > cap:
                raise DegreeOverflow(f"product degree {s.degree + t.degree} exceeds the cap {cap}")
            terms.append(Term(s.coeff * t.coeff, s.factors + t.factors))
    return BorchersElement(f.space, f.k, terms, cap)


def star(f: BorchersElement) -> BorchersElement:
    """Involution: conjugate coefficients, reverse and adjoint the factors."""
    return f._like(Term(np.conj(t.coeff), tuple(x.adjoint() for x in reversed(t.factors))) for t in f.terms)


def translate(f: BorchersElement, shift) -> BorchersElement:
    """Cyclic lattice translation ``f(x_1 - a, ..., x_n - a)``."""
    perm = f.space.shift_permutation(shift)
    return permute(f, perm)


def permute(f: BorchersElement, perm) -> BorchersElement:
    """Pull every factor back along a point permutation: ``g(x_i) = f(x_perm[i])``."""
    perm = np.asarray(perm, dtype=np.intp)
    if sorted(perm.tolist()) != list(range(f.space.size)):
        raise ValueError("perm must be a permutation of the grid indices")
    return f._like(Term(t.coeff, tuple(x.permuted(perm) for x in t.factors)) for t in f.terms)


def killing_pair(f: MatrixTestFunction, g: MatrixTestFunction) -> complex:
    """``sum_x w_x tr(f(x) g(x))``."""
    _check_space(f.space, f.k, g.space, g.k)
    return complex(np.einsum("x,xab,xba->", f.space.weights, f.values, g.values))


def load_test_functions(doc: dict | list) -> list[MatrixTestFunction]:
    """Parse one test function document, or a shared-space generator bundle.

    Accepted shapes::

        {"points", "weights", "periodic", "k", "values"}
        {"points", "weights", "periodic", "k", "generators": [values, ...]}
        [{"points", ...,"values"}, ...]
    """
    if isinstance(doc, list):
        fns = [MatrixTestFunction.from_dict(d) for d in doc]
        space = fns[0].space
        return [MatrixTestFunction(space, f.values) if f.space == space else _raise_mismatch() for f in fns]
    space = SampledSpace.from_dict(doc)
    k = int(doc.get("k", 1))
    if "generators" in doc:
        return [
            MatrixTestFunction(space, complex_from_pairs(v).reshape(space.size, k, k)) for v in doc["generators"]
        ]
    return [MatrixTestFunction.from_dict(doc, space)]


def _raise_mismatch():
    raise SpaceMismatch("test functions in one document must share a space")
