import json
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from borchers import (
    BorchersElement,
    ConstantData,
    MatrixTestFunction,
    SampledSpace,
    StateFunctional,
    UltralocalData,
    compress_to_matrix_state,
    convergence_report,
    eval_matrix_state,
    eval_state,
    finite_order_approx,
    gns_construct,
    state_order,
    vacuum_expectation,
)
from borchers.errors import CompressedWord, EmptyChoice, EmptyProbes, IndexOutOfRange, LevelTooLarge
from borchers.matrix_states import convergence_csv, level_span, order_report
from borchers.words import WordBasis, enumerate_words

from conftest import random_function


def _rep(seed, kind="constant", k=2, max_len=2):
    rng = np.random.default_rng(seed)
    space = SampledSpace.uniform_lattice(3)
    if kind == "constant":
        om = StateFunctional(ConstantData(space, k, [1, 0.5, 1, 0.5, 1, 0.5]))
        gens = (random_function(space, k, rng), random_function(space, k, rng))
    else:
        om = StateFunctional(UltralocalData(space, k))
        gens = (random_function(space, k, rng),)
    return gns_construct(om, WordBasis(gens, max_len))


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["constant", "ultralocal"]))
def test_compression_exact_within_level(seed, kind):
    rep = _rep(seed, kind)
    m = len(rep.ops)
    for n in range(rep.max_len + 1):
        ms = compress_to_matrix_state(rep, n)
        assert ms.level == n
        for w in enumerate_words(m, n):
            assert abs(eval_matrix_state(ms, w) - vacuum_expectation(rep, w)) < 1e-10


def test_level_spans_grow(rng):
    rep = _rep(3)
    dims = [level_span(rep, n).shape[1] for n in range(rep.max_len + 1)]
    assert dims[0] == 1 and dims == sorted(dims) and dims[-1] == rep.dim_H
    ms = compress_to_matrix_state(rep, 1)
    assert ms.dim == dims[1]
    np.testing.assert_allclose(ms.operator((0, 1)), ms.images[0] @ ms.images[1])
    json.dumps(ms.to_dict())
    with pytest.raises(IndexOutOfRange):
        eval_matrix_state(ms, (5,))


def test_level_bounds_and_krein():
    rep = _rep(1)
    with pytest.raises(LevelTooLarge):
        compress_to_matrix_state(rep, rep.max_len + 1)
    with pytest.raises(LevelTooLarge):
        compress_to_matrix_state(rep, -1)
    space = SampledSpace.uniform_lattice(3)
    f = MatrixTestFunction(space, [1.0, 2.0, 0.5])
    krein = gns_construct(StateFunctional(ConstantData(space, 1, [1, 0, -1])), WordBasis((f,), 1), krein=True)
    with pytest.raises(ValueError):
        compress_to_matrix_state(krein, 1)


def test_state_order_counts(grid4, rng):
    deltas = [MatrixTestFunction.delta(grid4, i) for i in range(4)]
    ul = gns_construct(StateFunctional(UltralocalData(grid4, 1)), WordBasis(tuple(deltas), 1))
    assert state_order(ul, deltas) == 4
    const = gns_construct(StateFunctional(ConstantData(grid4, 1, [1, 1, 1])), WordBasis(tuple(deltas), 1))
    assert state_order(const, deltas) == 1
    rep = order_report(const, deltas)
    assert rep["probe_rank"] == 4 and rep["n_probes"] == 4 and rep["sampled_dimension"] == 4
    with pytest.raises(EmptyProbes):
        state_order(const, [])


def test_finite_order_agrees_on_chosen_span(grid4, rng):
    chosen = [random_function(grid4, 1, rng), random_function(grid4, 1, rng)]
    om = StateFunctional(ConstantData(grid4, 1, [1, 1, 1, 1, 1, 1]))
    basis = WordBasis(tuple(chosen), 2)
    fo = finite_order_approx(om, chosen, basis)
    g = 2 * chosen[0] - 1j * chosen[1]
    np.testing.assert_allclose(fo.project(g).values, g.values, atol=1e-12)
    p = fo.project(random_function(grid4, 1, rng))
    np.testing.assert_allclose(fo.project(p).values, p.values, atol=1e-12)
    for word in ([g], [g, chosen[0]], [chosen[1], g, g]):
        el = BorchersElement.monomial(word)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", CompressedWord)
            assert eval_state(fo, el) == pytest.approx(eval_state(om, el), abs=1e-10)
    assert fo.order == 1  # the constant state only sees integrals
    with pytest.raises(EmptyChoice):
        finite_order_approx(om, [], basis)


def test_finite_order_projection_discards_orthogonal_part(grid4):
    chosen = [MatrixTestFunction.delta(grid4, 0), MatrixTestFunction.delta(grid4, 1)]
    om = StateFunctional(UltralocalData(grid4, 1))
    fo = finite_order_approx(om, chosen, WordBasis(tuple(chosen), 1))
    g = MatrixTestFunction(grid4, [1.0, 2.0, 3.0, 4.0])
    np.testing.assert_allclose(fo.project(g).values[:, 0, 0], [1, 2, 0, 0], atol=1e-12)
    assert fo.order == 2


def test_convergence_report_and_csv(tmp_path):
    rep = _rep(5, "ultralocal", k=2, max_len=2)
    words = enumerate_words(1, 3)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CompressedWord)
        rows = convergence_report(rep, [0, 1, 2], words)
    assert [r.level for r in rows] == [0, 1, 2]
    assert all(r.max_err_within < 1e-10 for r in rows)
    assert rows[0].d_n == 1
    text = convergence_csv(rows, tmp_path / "c.csv", {"config_hash": "abc"})
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines[0] == "# config_hash: abc" and lines[1] == "level,d_n,max_err_within,max_err_beyond"
    assert text.count("\n") == 5
