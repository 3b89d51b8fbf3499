"""Metropolis sweeps for the Hermitian one-matrix model.

Each kernel is written once as plain Python over numpy arrays and compiled
with numba when it is enabled.  Random numbers are drawn by the caller and
passed in, so a given seed feeds both paths the same stream.
"""

from __future__ import annotations

import numpy as np

from ._jit import USE_NUMBA, njit, register_jitable


@register_jitable
def poly_trace(M, coeffs):
    """``sum_p coeffs[p] Re tr(M^p)`` for a Hermitian ``M``."""
    n = M.shape[0]
    total = 0.0
    if coeffs.shape[0] > 0:
        total += coeffs[0] * n
    P = np.eye(n, dtype=np.complex128)
    for p in range(1, coeffs.shape[0]):
        P = P @ M
        if coeffs[p] != 0.0:
            tr = 0.0
            for i in range(n):
                tr += P[i, i].real
            total += coeffs[p] * tr
    return total

@register_jitable
def poly(x, coeffs):
    out = 0.0
    xp = 1.0
    for p in range(coeffs.shape[0]):
        out += coeffs[p] * xp
        xp *= x
    return out


def _hermitian_sweeps_py(M, coeffs, scale, step, normals, uniforms, out):
    """Single-entry updates of a Hermitian matrix under ``exp(scale * tr S(M))``.

    One sweep visits the N diagonal entries and then the N(N-1)/2 upper
    off-diagonal pairs.  ``normals`` has shape (sweeps, updates, 2),
    ``uniforms`` (sweeps, updates); the matrix after each sweep is stored in
    ``out``.  Returns the number of accepted proposals.
    """
    n = M.shape[0]
    accepted = 0
    current = poly_trace(M, coeffs)
    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    for s in range(normals.shape[0]):
        u = 0
        for i in range(n):
            old = M[i, i]
            M[i, i] = old + step * normals[s, u, 0]
            trial = poly_trace(M, coeffs)
            if np.log(uniforms[s, u]) < scale * (trial - current):
                current = trial
                accepted += 1
            else:
                M[i, i] = old
            u += 1
        for i in range(n):
            for j in range(i + 1, n):
                old = M[i, j]
                d = step * inv_sqrt2 * (normals[s, u, 0] + 1j * normals[s, u, 1])
                M[i, j] = old + d
                M[j, i] = np.conj(old + d)
                trial = poly_trace(M, coeffs)
                if np.log(uniforms[s, u]) < scale * (trial - current):
                    current = trial
                    accepted += 1
                else:
                    M[i, j] = old
                    M[j, i] = np.conj(old)
                u += 1
        out[s] = M
    return accepted


def _eigenvalue_sweeps_py(x, coeffs, scale, step, normals, uniforms, out):
    """Metropolis on eigenvalues with log-weight ``2 sum_{i<j} log|x_i - x_j| + scale sum S(x_k)``."""
    n = x.shape[0]
    accepted = 0
    for s in range(normals.shape[0]):
        for k in range(n):
            old = x[k]
            new = old + step * normals[s, k]
            delta = scale * (poly(new, coeffs) - poly(old, coeffs))
            collide = False
            for j in range(n):
                if j != k:
                    dn = abs(new - x[j])
                    if dn == 0.0:
                        collide = True
                        break
                    delta += 2.0 * (np.log(dn) - np.log(abs(old - x[j])))
            if not collide and np.log(uniforms[s, k]) < delta:
                x[k] = new
                accepted += 1
        out[s] = x
    return accepted


_hermitian_sweeps_nb = njit(cache=True)(_hermitian_sweeps_py)
_eigenvalue_sweeps_nb = njit(cache=True)(_eigenvalue_sweeps_py)


def _pick(use_numba, compiled, plain):
    return compiled if (USE_NUMBA if use_numba is None else use_numba) else plain


def hermitian_sweeps(M, coeffs, scale, step, normals, uniforms, out, use_numba: bool | None = None) -> int:
    fn = _pick(use_numba, _hermitian_sweeps_nb, _hermitian_sweeps_py)
    return int(fn(M, coeffs, float(scale), float(step), normals, uniforms, out))


def eigenvalue_sweeps(x, coeffs, scale, step, normals, uniforms, out, use_numba: bool | None = None) -> int:
    fn = _pick(use_numba, _eigenvalue_sweeps_nb, _eigenvalue_sweeps_py)
    return int(fn(x, coeffs, float(scale), float(step), normals, uniforms, out))
