import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from borchers import (
    BorchersElement,
    ConstantData,
    MatrixTestFunction,
    SampledSpace,
    SeminormSpec,
    StateFunctional,
    TabulatedData,
    TraceMode,
    UltralocalData,
    check_hssc,
    check_krein,
    check_locality,
    check_positivity,
    check_translation_invariance,
    deform_state,
    eval_state,
    gaussian_moment_table,
    mix_states,
    sesquilinear,
    tensor_product_states,
)
from borchers.errors import (
    DegreeOverflow,
    LambdaOutOfRange,
    SupportsOverlap,
    UnsupportedDegree,
    ZeroEpsilon,
)
from borchers.states import MatrixModelData, gram_matrix, state_from_dict

from conftest import random_function


def ntr(a):
    return np.trace(a) / a.shape[0]


def mono(*fs, cap=6):
    return BorchersElement.monomial(list(fs), max_degree=cap)


# ---------------------------------------------------------------------------
# pairings against explicit formulas
# ---------------------------------------------------------------------------


def test_constant_product_and_tensor_modes(grid4, rng):
    f, g = random_function(grid4, 2, rng), random_function(grid4, 2, rng)
    data = ConstantData(grid4, 2, [1, 0.3, 0.7])
    F, G = f.integral(), g.integral()
    prod = StateFunctional(data, "product")
    tens = StateFunctional(data, "tensor")
    assert eval_state(prod, mono(f, g)) == pytest.approx(0.7 * ntr(F @ G), abs=1e-14)
    assert eval_state(tens, mono(f, g)) == pytest.approx(0.7 * ntr(F) * ntr(G), abs=1e-14)
    assert eval_state(prod, mono(f)) == pytest.approx(0.3 * ntr(F), abs=1e-14)
    assert eval_state(prod, mono(f, g, f)) == 0  # past the given alpha


def test_ultralocal_product_mode_nested_loops(grid3, rng):
    fs = [random_function(grid3, 2, rng) for _ in range(4)]
    om = StateFunctional(UltralocalData(grid3, 2), "product")
    w = grid3.weights
    inner = sum(w[x] * fs[1].values[x] @ fs[2].values[x] for x in range(3))
    outer = sum(w[y] * fs[0].values[y] @ inner @ fs[3].values[y] for y in range(3))
    assert eval_state(om, mono(*fs)) == pytest.approx(ntr(outer), abs=1e-13)
    assert eval_state(om, mono(*fs[:3])) == 0


def test_ultralocal_tensor_mode_rainbow_pairs(grid3, rng):
    fs = [random_function(grid3, 2, rng) for _ in range(4)]
    om = StateFunctional(UltralocalData(grid3, 2))
    assert om.trace_mode is TraceMode.TENSOR
    w = grid3.weights

    def pair(a, b):
        return sum(w[x] * ntr(a.values[x] @ b.values[x]) for x in range(3))

    assert eval_state(om, mono(*fs)) == pytest.approx(pair(fs[1], fs[2]) * pair(fs[0], fs[3]), abs=1e-13)


def test_tabulated_modes(grid3, rng):
    W2 = rng.standard_normal((3, 3, 2, 2)) + 1j * rng.standard_normal((3, 3, 2, 2))
    data = TabulatedData(grid3, 2, {0: np.eye(2), 2: W2})
    f, g = random_function(grid3, 2, rng), random_function(grid3, 2, rng)
    w = grid3.weights
    prod = sum(w[x] * w[y] * ntr(f.values[x] @ g.values[y] @ W2[x, y]) for x in range(3) for y in range(3))
    tens = sum(w[x] * w[y] * ntr(W2[x, y]) * ntr(f.values[x]) * ntr(g.values[y]) for x in range(3) for y in range(3))
    assert eval_state(StateFunctional(data, "product"), mono(f, g)) == pytest.approx(prod, abs=1e-13)
    assert eval_state(StateFunctional(data, "tensor"), mono(f, g)) == pytest.approx(tens, abs=1e-13)
    with pytest.raises(UnsupportedDegree):
        eval_state(StateFunctional(data), mono(f))


def test_tabulated_validation(grid3):
    TabulatedData(grid3, 1, {0: 1.0, 1: np.ones(3)})  # scalar kernels accepted for k = 1
    with pytest.raises(ValueError):
        TabulatedData(grid3, 2, {1: np.ones(3)})
    with pytest.raises(ValueError):
        TabulatedData(grid3, 1, {1: [np.inf, 0, 0]})


def test_normalization_enforced(grid3):
    with pytest.raises(ValueError):
        StateFunctional(ConstantData(grid3, 1, [2.0]))
    with pytest.raises(ValueError):
        StateFunctional(TabulatedData(grid3, 1, {0: 0.5}))


def test_matrix_model_data(grid3, rng):
    table = gaussian_moment_table(2, (2,))
    om = StateFunctional(MatrixModelData(grid3, 2, table))
    A = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    B = rng.standard_normal((2, 2))
    a, b = MatrixTestFunction.constant(grid3, A), MatrixTestFunction.constant(grid3, B)
    # <tr(A^T M) tr(B^T M)> = sum A_ij B_kl delta_il delta_jk / N
    expected = np.sum(A * B.T) / 2
    assert eval_state(om, mono(a, b)) == pytest.approx(expected, abs=1e-14)
    assert eval_state(om, mono(a, random_function(grid3, 2, rng))) == 0


# ---------------------------------------------------------------------------
# structural properties
# ---------------------------------------------------------------------------

SPACE = SampledSpace.uniform_lattice(3)
STATES = {
    "constant": StateFunctional(ConstantData(SPACE, 2, [1, 0.5, 1, 0.5, 1])),
    "ultralocal": StateFunctional(UltralocalData(SPACE, 2)),
    "ultralocal_product": StateFunctional(UltralocalData(SPACE, 2), "product"),
}


@settings(max_examples=20, deadline=None)
@given(st.sampled_from(sorted(STATES)), st.integers(0, 2**32 - 1))
def test_sesquilinear_form_is_hermitian(name, seed):
    rng = np.random.default_rng(seed)
    om = STATES[name]
    f = mono(random_function(SPACE, 2, rng), random_function(SPACE, 2, rng))
    g = mono(random_function(SPACE, 2, rng)) + mono(random_function(SPACE, 2, rng), random_function(SPACE, 2, rng))
    assert sesquilinear(om, f, g) == pytest.approx(np.conj(sesquilinear(om, g, f)), abs=1e-12)
    assert sesquilinear(om, f, 2j * g) == pytest.approx(2j * sesquilinear(om, f, g), abs=1e-12)
    assert sesquilinear(om, 2j * f, g) == pytest.approx(-2j * sesquilinear(om, f, g), abs=1e-12)


def test_gram_matrix_hermitian(rng):
    els = [BorchersElement.unit(SPACE, 2, 6)] + [mono(random_function(SPACE, 2, rng)) for _ in range(3)]
    G = gram_matrix(STATES["constant"], els)
    np.testing.assert_allclose(G, G.conj().T, atol=1e-13)


def test_ultralocal_not_positive_on_squares():
    # the unit together with two degree-2 delta words already gives an indefinite Gram matrix
    s = SampledSpace.uniform_lattice(2)
    d = [MatrixTestFunction.delta(s, i) for i in range(2)]
    om = StateFunctional(UltralocalData(s, 1))
    els = [BorchersElement.unit(s, 1)] + [mono(x, x) for x in d]
    G = gram_matrix(om, els)
    np.testing.assert_allclose(G.real, [[1, 0.5, 0.5], [0.5, 0.25, 0], [0.5, 0, 0.25]], atol=1e-14)
    assert np.linalg.eigvalsh(G)[0] < -0.17


def test_mix_states(grid3, rng):
    a = StateFunctional(ConstantData(grid3, 1, [1, 1, 1]))
    b = StateFunctional(ConstantData(grid3, 1, [1, 0, 2]))
    f = random_function(grid3, 1, rng)
    m = mix_states(0.25, a, b)
    for e in (mono(f), mono(f, f)):
        assert eval_state(m, e) == pytest.approx(0.25 * eval_state(a, e) + 0.75 * eval_state(b, e))
    assert eval_state(m, BorchersElement.unit(grid3, 1)) == 1
    for lam in (0, 1, -0.1, 1.5):
        with pytest.raises(LambdaOutOfRange):
            mix_states(lam, a, b)


def test_deform_state_scaling(grid3, rng):
    base = StateFunctional(ConstantData(grid3, 2, [1, 1, 1, 1]))
    fs = [random_function(grid3, 2, rng) for _ in range(3)]
    d = deform_state(base, 0.3)
    for n in range(4):
        e = mono(*fs[:n]) if n else BorchersElement.unit(grid3, 2)
        assert eval_state(d, e) == pytest.approx(0.3 ** max(n - 1, 0) * eval_state(base, e), abs=1e-14)
    with pytest.raises(ZeroEpsilon):
        deform_state(base, 0)


def test_tensor_product_normalized_and_degree_checked(grid3):
    T = StateFunctional(TabulatedData(grid3, 1, {0: 1, 1: np.ones(3), 2: np.ones((3, 3))}))
    S = StateFunctional(TabulatedData(grid3, 1, {0: 1, 1: np.arange(3.0), 2: np.eye(3)}))
    P = tensor_product_states(T, S)
    assert eval_state(P, BorchersElement.unit(grid3, 1)) == 1
    np.testing.assert_allclose(P.data.kernel(1)[:, 0, 0], 1 + np.arange(3.0))
    with pytest.raises(DegreeOverflow):
        tensor_product_states(T, S, max_degree=5)
    with pytest.raises(TypeError):
        tensor_product_states(T, StateFunctional(ConstantData(grid3, 1, [1])))


# ---------------------------------------------------------------------------
# checks
# ---------------------------------------------------------------------------


def test_positivity_pass_and_witness(grid4, rng):
    gens = [random_function(grid4, 1, rng) for _ in range(2)]
    good = StateFunctional(ConstantData(grid4, 1, [1, 1, 1, 1, 1]))
    rep = check_positivity(good, gens, 2)
    assert rep.passed and rep.values["min_eigenvalue"] > -1e-10 and rep.witness is None
    bad = StateFunctional(ConstantData(grid4, 1, [1, 0, -1]))
    rep = check_positivity(bad, gens, 1)
    assert not rep.passed
    assert "omega(a* x a)" in rep.witness
    v = rep.values["violating_vector"]
    basis_els = [BorchersElement.unit(grid4, 1)] + [mono(g) for g in gens]
    a = sum((c * e for c, e in zip(v, basis_els)), BorchersElement(grid4, 1, (), 6))
    assert sesquilinear(bad, a, a).real < 0
    json.loads(rep.to_json())


def test_translation_check(grid4, rng):
    gens = [random_function(grid4, 1, rng)]
    shifts = [0.25, 0.5]
    assert check_translation_invariance(StateFunctional(UltralocalData(grid4, 1)), gens, shifts).passed
    tab = StateFunctional(TabulatedData(grid4, 1, {0: 1, 1: [1, 0, 0, 0], 2: np.zeros((4, 4))}))
    rep = check_translation_invariance(tab, gens, shifts, max_len=1)
    assert not rep.passed and "shift" in rep.witness


def test_locality_check(grid4, rng):
    f = MatrixTestFunction.delta(grid4, 0, rng.standard_normal((2, 2)), k=2)
    g = MatrixTestFunction.delta(grid4, 2, rng.standard_normal((2, 2)), k=2)
    ul = StateFunctional(UltralocalData(grid4, 2))
    u = BorchersElement.monomial([f], max_degree=4)
    assert check_locality(ul, f, g, [(u, u)]).passed
    noncomm = StateFunctional(ConstantData(grid4, 2, [1, 0, 1, 1]), "product")
    h = BorchersElement.monomial([random_function(grid4, 2, rng)], max_degree=4)
    unit = BorchersElement.unit(grid4, 2)
    assert check_locality(noncomm, f, g).passed  # trace of a commutator
    assert not check_locality(noncomm, f, g, [(h, unit)]).passed
    with pytest.warns(SupportsOverlap):
        check_locality(ul, f, f)


def test_hssc_check(grid4, rng):
    om = StateFunctional(ConstantData(grid4, 1, [1, 1, 1]))
    fs = [mono(random_function(grid4, 1, rng)) for _ in range(3)]
    samples = [(a, b) for a in fs for b in fs]
    assert check_hssc(om, SeminormSpec.uniform("l2", 1.0), samples).passed
    rep = check_hssc(om, SeminormSpec.uniform("l1", 1e-3), samples)
    assert not rep.passed and rep.values["violations"]


def test_seminorm_values(grid4):
    f = MatrixTestFunction(grid4, np.array([1.0, 2.0, 0.0, -2.0]))
    e = mono(f)
    assert SeminormSpec.uniform("l2", 2.0)(e) == pytest.approx(2 * np.sqrt(9 / 4))
    assert SeminormSpec.uniform("l1")(e) == pytest.approx(5 / 4)
    with pytest.raises(ValueError):
        SeminormSpec({1: "sup"}, {1: 1.0})
    with pytest.raises(ValueError):
        SeminormSpec({1: "l2"}, {1: -1.0})
    with pytest.raises(ValueError):
        SeminormSpec.uniform()(e + BorchersElement.unit(grid4, 1))


def test_krein_check(grid4, rng):
    om = StateFunctional(ConstantData(grid4, 1, [1, 0, 1]))
    gens = [random_function(grid4, 1, rng) for _ in range(2)]
    samples = [(f, g) for f in gens for g in gens]
    rep = check_krein(om, np.eye(4), samples)
    assert rep.passed and rep.values["condition_4"] == "not checked"
    assert len(rep.values["p_alpha"]) == 4
    rep = check_krein(om, -np.eye(4), samples)
    assert not rep.passed and "condition_2" in rep.witness


def test_state_from_dict(grid3, tmp_path):
    s = state_from_dict({"kind": "constant", "alpha": [1, 0, 1], "trace_mode": "tensor"}, grid3, 2)
    assert s.kind == "constant" and s.trace_mode is TraceMode.TENSOR
    assert state_from_dict({"kind": "ultralocal"}, grid3, 1).trace_mode is TraceMode.TENSOR
    tab = state_from_dict({"kind": "tabulated", "W": {"0": [1, 0]}}, grid3, 1)
    assert tab.data.max_degree == 0
    gaussian_moment_table(2, (2,)).to_csv(tmp_path / "m.csv")
    (tmp_path / "state.json").write_text("{}")
    mm = state_from_dict({"kind": "matrix_model", "moments": "m.csv"}, grid3, 2, base_path=tmp_path / "state.json")
    assert mm.kind == "matrix_model" and mm.to_dict()["moments"] == "m.csv"
    with pytest.raises(ValueError):
        state_from_dict({"kind": "free"}, grid3, 1)
