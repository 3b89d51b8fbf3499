"""Two-dimensional SU(N) Yang-Mills from heat-kernel sums over irreps.

Conventions: generators satisfy ``tr_fund(T^a T^b) = delta^{ab} / 2``; the
Casimir and ``(rho, rho)`` are taken in the matching form (simple roots of
squared length 2, so SU(2) has ``C2(fund) = 3/4`` and ``(rho, rho) = 1/2``).
The Boltzmann factor of an irrep is ``exp(-tau * C2)`` with
``tau = e^2 A / 2``.  Sums run over Young diagrams with at most N-1 rows,
shell by shell in the number of boxes.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from .algebra import SampledSpace
from .errors import CutoffTooSmall, IndexOutOfRange, MissingCasimir, TooFewPoints


@dataclass(frozen=True, order=True)
class IrrepLabel:
    """Highest weight of SU(N) as a Young diagram, padded with zeros to length N."""

    N: int
    lam: tuple[int, ...]

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be at least 1")
        lam = tuple(int(x) for x in self.lam)
        if len(lam) > self.N:
            if any(lam[self.N :]):
                raise ValueError(f"SU({self.N}) labels have at most {self.N - 1} nonzero rows")
            lam = lam[: self.N]
        lam = lam + (0,) * (self.N - len(lam))
        if any(x < 0 for x in lam) or any(a < b for a, b in zip(lam, lam[1:])):
            raise ValueError(f"label {lam} is not a nonincreasing sequence of nonnegative integers")
        if lam[-1] != 0:
            raise ValueError(f"SU({self.N}) labels must have lambda_N = 0, got {lam}")
        object.__setattr__(self, "lam", lam)

    @property
    def boxes(self) -> int:
        return sum(self.lam)

    def __str__(self) -> str:
        return "(" + ",".join(map(str, self.lam[: max(1, self.N - 1)])) + ")"


@dataclass(frozen=True)
class SurfaceParams:
    """Genus-g surface of area A with coupling e, truncated at ``cutoff`` boxes.

    ``grid_points`` sets the uniform grid used for the contact delta when no
    explicit space is supplied (weights ``area / grid_points``).
    """

    genus: int
    area: float
    coupling: float
    N: int
    cutoff: int
    grid_points: int = 16

    def __post_init__(self):
        if self.genus < 0:
            raise ValueError("genus must be nonnegative")
        if not self.area > 0 or not self.coupling > 0:
            raise ValueError("area and coupling must be positive")
        if self.N < 1:
            raise ValueError("N must be at least 1")
        if self.cutoff < 0:
            raise ValueError("cutoff must be nonnegative")
        if self.grid_points < 1:
            raise ValueError("grid_points must be positive")

    @classmethod
    def from_tau(cls, genus: int, N: int, tau: float, cutoff: int, area: float = 1.0, **kw) -> "SurfaceParams":
        """Fix the area and choose the coupling so that ``e^2 A / 2 = tau``."""
        if not tau > 0:
            raise ValueError("tau must be positive")
        return cls(genus, area, math.sqrt(2 * tau / area), N, cutoff, **kw)

    @property
    def tau(self) -> float:
        return self.coupling**2 * self.area / 2

    def space(self) -> SampledSpace:
        return SampledSpace.uniform_lattice(self.grid_points, self.area, periodic=False)


@dataclass(frozen=True)
class CorrelatorResult:
    value: complex
    terms_used: int
    tail_estimate: float
    contact: bool = False
    details: dict = field(default_factory=dict, compare=False)


# ---------------------------------------------------------------------------
# representation theory
# ---------------------------------------------------------------------------


def _partitions(n: int, max_part: int, max_rows: int):
    """Partitions of n with parts <= max_part and at most max_rows parts, lexicographically descending."""
    if n == 0:
        yield ()
        return
    if max_rows == 0:
        return
    # the first row must be long enough for the remaining rows to hold the rest
    lowest = -(-n // max_rows)
    for first in range(min(n, max_part), lowest - 1, -1):
        for rest in _partitions(n - first, first, max_rows - 1):
            yield (first,) + rest


def irreps_with_boxes(N: int, n: int) -> list[IrrepLabel]:
    if N == 1:
        return [IrrepLabel(1, ())] if n == 0 else []
    return [IrrepLabel(N, p) for p in _partitions(n, n, N - 1)]


def enumerate_irreps(N: int, cutoff: int | float, mode: str = "boxes") -> list[IrrepLabel]:
    """All labels with ``boxes <= cutoff`` (or ``C2 <= cutoff`` when ``mode="casimir"``).

    Ordered by number of boxes, then lexicographically descending in lambda.
    """
    if cutoff < 0:
        return []
    if mode == "boxes":
        return [lab for n in range(int(cutoff) + 1) for lab in irreps_with_boxes(N, n)]
    if mode != "casimir":
        raise ValueError(f"unknown cutoff mode {mode!r}")
    if N == 1:
        return [IrrepLabel(1, ())]
    # with at most N-1 rows, C2 >= n^2 / (2N(N-1)), which bounds the box count
    max_boxes = math.isqrt(int(math.floor(2 * N * (N - 1) * cutoff))) + 1
    return [lab for n in range(max_boxes + 1) for lab in irreps_with_boxes(N, n) if casimir2(lab) <= cutoff]


def weyl_dimension(label: IrrepLabel) -> int:
    lam, N = label.lam, label.N
    num = den = 1
    for i in range(N):
        for j in range(i + 1, N):
            num *= lam[i] - lam[j] + j - i
            den *= j - i
    q, r = divmod(num, den)
    assert r == 0
    return q


def casimir2(label: IrrepLabel) -> Fraction:
    """Quadratic Casimir with ``tr_fund(T^a T^b) = delta^{ab}/2``."""
    N, n = label.N, label.boxes
    s = sum(l * (l + N + 1 - 2 * i) for i, l in enumerate(label.lam, start=1))
    return Fraction(1, 2) * (s - Fraction(n * n, N))


def rho_norm(N: int) -> Fraction:
    """``(rho, rho) = N(N^2 - 1)/12`` with simple roots of squared length 2."""
    return Fraction(N * (N * N - 1), 12)


def shifted_weight_norm(label: IrrepLabel) -> Fraction:
    """``(l + rho, l + rho) = 2 C2(l) + (rho, rho)`` in the same form as :func:`rho_norm`."""
    return 2 * casimir2(label) + rho_norm(label.N)


def su_generators(N: int) -> np.ndarray:
    """Generalized Gell-Mann matrices divided by 2, shape ``(N^2 - 1, N, N)``.

    Order: symmetric off-diagonal, antisymmetric off-diagonal for each pair
    ``j < k``, then the diagonal ones.
    """
    gens = []
    for j in range(N):
        for k in range(j + 1, N):
            s = np.zeros((N, N), dtype=complex)
            s[j, k] = s[k, j] = 1
            a = np.zeros((N, N), dtype=complex)
            a[j, k], a[k, j] = -1j, 1j
            gens += [s / 2, a / 2]
    for l in range(1, N):
        d = np.zeros((N, N), dtype=complex)
        d[np.arange(l), np.arange(l)] = 1
        d[l, l] = -l
        gens.append(d * math.sqrt(2 / (l * (l + 1))) / 2)
    return np.array(gens).reshape(N * N - 1, N, N)


# ---------------------------------------------------------------------------
# heat-kernel sums
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _IrrepTable:
    labels: list[IrrepLabel]
    boxes: np.ndarray
    weights: np.ndarray  # dim^(2-2g) exp(-tau C2)
    c2: np.ndarray
    shifted: np.ndarray

    @property
    def Z(self) -> float:
        return math.fsum(self.weights)

    def shell_sums(self) -> np.ndarray:
        return np.array([math.fsum(self.weights[self.boxes == n]) for n in range(int(self.boxes.max()) + 1)])


def _table(params: SurfaceParams) -> _IrrepTable:
    labels = enumerate_irreps(params.N, params.cutoff)
    tau, g = params.tau, params.genus
    c2 = np.array([float(casimir2(l)) for l in labels])
    dims = np.array([float(weyl_dimension(l)) for l in labels])
    weights = dims ** (2 - 2 * g) * np.exp(-tau * c2)
    shifted = 2 * c2 + float(rho_norm(params.N))
    boxes = np.array([l.boxes for l in labels])
    return _IrrepTable(labels, boxes, weights, c2, shifted)


def _tail(values: np.ndarray, boxes: np.ndarray) -> float:
    last = int(boxes.max())
    return abs(math.fsum(values[boxes == last])) if last > 0 else 0.0


def partition_function(params: SurfaceParams, tol: float | None = None) -> CorrelatorResult:
    """``Z = sum_l dim(l)^(2-2g) exp(-tau C2(l))`` up to ``params.cutoff`` boxes.

    ``tail_estimate`` is the magnitude of the last included shell.  When
    ``tol`` is given and the tail exceeds it, :class:`CutoffTooSmall` is
    warned.
    """
    t = _table(params)
    shells = t.shell_sums()
    Z = math.fsum(shells)
    tail = float(abs(shells[-1])) if len(shells) > 1 else 0.0
    if tol is not None and tail > tol:
        warnings.warn(f"last shell contributes {tail:.3e} > tol {tol:.3e}", CutoffTooSmall, stacklevel=2)
    return CorrelatorResult(Z, len(t.labels), tail, details={"shells": shells.tolist()})


def pq_coefficients(a: int, b: int, N: int) -> tuple[Fraction, Fraction]:
    """Color coefficients ``(p^{ab}, m^{ab})`` of the two-point function; indices start at 1."""
    _check_color(a, N)
    _check_color(b, N)
    if a == b:
        return Fraction(1, N), Fraction(0)
    return Fraction(-1, N * (N - 1)), Fraction(1, N * (N - 1))


def _check_color(a: int, N: int) -> None:
    if not 1 <= a <= N * N - 1:
        raise IndexOutOfRange(f"color index {a} outside 1..{N * N - 1}")


def _grid_delta(params: SurfaceParams, x: int, y: int, space: SampledSpace | None) -> float:
    space = space if space is not None else params.space()
    for i in (x, y):
        if not 0 <= i < space.size:
            raise IndexOutOfRange(f"grid index {i} outside 0..{space.size - 1}")
    return space.grid_delta(x, y)


def two_point_xi(
    a: int, b: int, x: int, y: int, params: SurfaceParams, space: SampledSpace | None = None
) -> complex:
    """``<xi^a(x) xi^b(y)>`` on a genus-g surface, truncated at ``params.cutoff`` boxes.

    ``(e^4/Z) sum_l dim^(2-2g) exp(-tau C2) [ (rho,rho) delta^{ab}/N^2 delta(x,y)
    - (p^{ab} (l+rho)^2 + m^{ab} n^2) ]`` with ``n`` the box count of ``l``.
    Color indices start at 1, grid indices at 0.
    """
    N = params.N
    p, m = pq_coefficients(a, b, N)
    delta = _grid_delta(params, x, y, space)
    t = _table(params)
    contact = float(rho_norm(N)) / N**2 * delta if a == b else 0.0
    bracket = contact - (float(p) * t.shifted + float(m) * t.boxes.astype(float) ** 2)
    return complex(params.coupling**4 * math.fsum(t.weights * bracket) / t.Z)


def gauge_invariant_two_point(
    params: SurfaceParams, x: int, y: int, space: SampledSpace | None = None
) -> CorrelatorResult:
    """``sum_{a,b} <xi^a(x) xi^b(y)> tr(T^a T^b)``.  For ``x == y`` the contact term is kept and flagged."""
    N = params.N
    T = su_generators(N)
    killing = np.einsum("aij,bji->ab", T, T).real
    t = _table(params)
    total = 0.0
    for a in range(1, N * N):
        for b in range(1, N * N):
            kab = killing[a - 1, b - 1]
            if abs(kab) > 1e-14:
                total += kab * two_point_xi(a, b, x, y, params, space).real
    bracket_tail = _tail(t.weights * t.shifted, t.boxes) * params.coupling**4 / t.Z
    return CorrelatorResult(total, len(t.labels), bracket_tail, contact=(x == y))


CasimirFn = Callable[[IrrepLabel], float]


def two_p_point(
    params: SurfaceParams,
    p: int,
    f_coeffs: Sequence,
    casimirs: Mapping[int, CasimirFn] | None = None,
    f0=None,
) -> CorrelatorResult:
    """``(e^{4p}/Z) sum_l dim^(2-2g) exp(-tau C2) [f0 + sum_{i=1..p} f_i C_{2i}(l)]``.

    Each ``f_i`` is a number or a callable of ``(rho, rho)``.  ``C_2`` is
    built in; ``C_{2i}`` for ``i >= 2`` must be supplied in ``casimirs``.
    ``f0`` multiplies the constant ``C_0 = 1``.
    """
    if p < 1 or len(f_coeffs) != p:
        raise ValueError("need p >= 1 and exactly p coefficients")
    casimirs = dict(casimirs or {})
    casimirs.setdefault(1, lambda lab: float(casimir2(lab)))
    for i in range(1, p + 1):
        if i not in casimirs:
            raise MissingCasimir(f"no evaluator for the Casimir of degree {2 * i}")
    rr = rho_norm(params.N)

    def coeff(f):
        return float(f(rr)) if callable(f) else float(f)

    t = _table(params)
    bracket = np.full(len(t.labels), coeff(f0) if f0 is not None else 0.0)
    for i, f in enumerate(f_coeffs, start=1):
        ci = coeff(f)
        if ci:
            bracket = bracket + ci * np.array([float(casimirs[i](lab)) for lab in t.labels])
    scale = params.coupling ** (4 * p) / t.Z
    value = scale * math.fsum(t.weights * bracket)
    return CorrelatorResult(value, len(t.labels), _tail(t.weights * bracket, t.boxes) * scale)


def su2_haar_inner(j1: float, j2: float, quadrature_points: int = 256) -> float:
    """``int_0^pi chi_j1 chi_j2 (2/pi) sin^2(theta) d theta`` by Gauss-Legendre."""
    if quadrature_points < 64:
        raise TooFewPoints(f"need at least 64 quadrature points, got {quadrature_points}")
    twice = []
    for j in (j1, j2):
        tj = 2 * Fraction(j).limit_denominator(2)
        if tj != 2 * j or tj < 0 or tj.denominator != 1:
            raise ValueError(f"spin {j} is not a nonnegative half-integer")
        twice.append(int(tj))
    nodes, wts = np.polynomial.legendre.leggauss(quadrature_points)
    theta = (nodes + 1) * np.pi / 2
    # chi_j sin(theta) = sin((2j+1) theta)
    integrand = (2 / np.pi) * np.sin((twice[0] + 1) * theta) * np.sin((twice[1] + 1) * theta)
    return float(np.pi / 2 * np.dot(wts, integrand))
