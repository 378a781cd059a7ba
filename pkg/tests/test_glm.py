import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sprayopt.glm import (
    DEFAULT_REGISTRY,
    GENERAL_SPACE,
    MODEL_NAMES,
    WC_CO_CR_SPACE,
    GammaLogLinearModel,
    ModelOverflowError,
    ModelRegistry,
    ModelTerm,
    ParameterSpace,
    ParameterVector,
    convexity_report,
    denormalize,
    get_model,
    normalize,
    parse_coefficient_table,
    predict_all,
)

coded_points = arrays(np.float64, 5, elements=st.floats(-1, 1))


def fd_gradient(f, z, h=1e-6):
    g = np.zeros(5)
    for i in range(5):
        e = np.zeros(5)
        e[i] = h
        g[i] = (f(z + e) - f(z - e)) / (2 * h)
    return g


def fd_hessian(grad, z, h=1e-5):
    H = np.zeros((5, 5))
    for i in range(5):
        e = np.zeros(5)
        e[i] = h
        H[:, i] = (grad(z + e) - grad(z - e)) / (2 * h)
    return H


def rel_err(a, b):
    return np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-12)


class TestCoding:
    def test_center_maps_to_origin(self):
        np.testing.assert_allclose(normalize([60, 230, 0.94, 100, 683]), np.zeros(5), atol=1e-12)

    def test_published_desirability_point(self):
        np.testing.assert_allclose(normalize([45, 200, 1.04, 80, 751]), [-1, -1, 1, -0.8, 1], atol=1e-12)

    def test_problem_ii_point(self):
        z = normalize([49.10, 259.22, 0.84, 101.01, 727.73])
        np.testing.assert_allclose(z, [-0.7267, 0.9740, -1, 0.0404, 0.6578], atol=5e-5)

    def test_denormalize_center_and_corner(self):
        np.testing.assert_allclose(denormalize(np.zeros(5)), [60, 230, 0.94, 100, 683])
        np.testing.assert_allclose(denormalize(np.ones(5)), [75, 260, 1.04, 125, 751])

    @given(arrays(np.float64, 5, elements=st.floats(0, 1)))
    def test_round_trip(self, u):
        x = WC_CO_CR_SPACE.lower + u * (WC_CO_CR_SPACE.upper - WC_CO_CR_SPACE.lower)
        back = denormalize(normalize(x))
        np.testing.assert_allclose(back, x, rtol=1e-12)

    @pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
    def test_non_finite_rejected(self, bad):
        x = np.array([60, 230, 0.94, 100, 683.0])
        x[2] = bad
        with pytest.raises(ValueError):
            normalize(x)
        with pytest.raises(ValueError):
            denormalize(np.where(np.isfinite(x), 0.0, bad))

    def test_wrong_shape_rejected(self):
        with pytest.raises(ValueError):
            normalize([1, 2, 3])

    def test_batched(self):
        X = np.array([[60, 230, 0.94, 100, 683], [75, 260, 1.04, 125, 751]])
        np.testing.assert_allclose(normalize(X), [[0] * 5, [1] * 5], atol=1e-12)

    def test_parameter_vector(self):
        p = ParameterVector.from_array([45, 200, 1.04, 80, 751])
        assert p.lam == 1.04
        np.testing.assert_allclose(normalize(p), [-1, -1, 1, -0.8, 1], atol=1e-12)


class TestParameterSpace:
    def test_default_coding(self):
        s = WC_CO_CR_SPACE
        np.testing.assert_allclose(s.center, [60, 230, 0.94, 100, 683])
        np.testing.assert_allclose(s.half_range, [15, 30, 0.1, 25, 68])
        np.testing.assert_allclose(s.coded_lower, -1)
        np.testing.assert_allclose(s.coded_upper, 1)

    def test_general_space_keeps_material_coding(self):
        np.testing.assert_array_equal(GENERAL_SPACE.center, WC_CO_CR_SPACE.center)
        assert np.all(GENERAL_SPACE.coded_lower < -1)

    def test_lower_must_be_below_upper(self):
        with pytest.raises(ValueError):
            ParameterSpace([1, 1, 1, 1, 1], [2, 2, 1, 2, 2])

    def test_contains(self):
        assert WC_CO_CR_SPACE.contains([45, 200, 1.04, 80, 751])
        assert not WC_CO_CR_SPACE.contains([44, 200, 1.04, 80, 751])

    def test_dict_round_trip(self):
        assert ParameterSpace.from_dict(GENERAL_SPACE.to_dict()) == GENERAL_SPACE

    def test_arrays_read_only(self):
        with pytest.raises(ValueError):
            WC_CO_CR_SPACE.lower[0] = 0


class TestTerms:
    def test_interaction_indices_sorted(self):
        assert ModelTerm("interaction", (3, 1), 0.5).indices == (1, 3)

    @pytest.mark.parametrize("kind, idx", [("interaction", (2, 2)), ("linear", (7,)), ("quadratic", (0, 1)),
                                           ("intercept", (0,)), ("cubic", (0,))])
    def test_invalid_terms(self, kind, idx):
        with pytest.raises(ValueError):
            ModelTerm(kind, idx, 1.0)

    def test_duplicate_terms_rejected(self):
        with pytest.raises(ValueError):
            GammaLogLinearModel("dup", (ModelTerm("linear", (0,), 1.0), ModelTerm("linear", (0,), 2.0)))


class TestCoefficients:
    def test_bit_match_table(self):
        table = parse_coefficient_table()
        assert table["velocity"][0] == 6.1297
        assert table["porosity"][12] == -0.0233
        assert len(table["porosity"]) == 13
        assert len(table["hardness"]) == 8

    def test_every_model_present(self):
        assert set(DEFAULT_REGISTRY) == set(MODEL_NAMES)
        assert len(MODEL_NAMES) == 8

    def test_roughness_drops_unused_coefficient(self):
        coefs = [t.coefficient for t in get_model("roughness").terms]
        assert -0.0242 not in coefs
        assert -0.0665 in coefs
        assert len(coefs) == 10

    def test_model_coefficients_come_from_table(self):
        table = parse_coefficient_table()
        for name in MODEL_NAMES:
            used = [t.coefficient for t in get_model(name).terms]
            assert all(c in table[name] for c in used)

    def test_registry_json_round_trip(self):
        again = ModelRegistry.from_json(DEFAULT_REGISTRY.to_json())
        z = np.random.default_rng(0).uniform(-1, 1, (10, 5))
        for name in MODEL_NAMES:
            np.testing.assert_array_equal(again[name].predict(z), DEFAULT_REGISTRY[name].predict(z))
        assert json.loads(DEFAULT_REGISTRY.to_json())["models"][0]["name"] == "velocity"

    def test_unknown_model(self):
        with pytest.raises(KeyError, match="unknown model"):
            get_model("colour")


class TestPredict:
    def test_center_is_exp_intercept(self):
        for name in MODEL_NAMES:
            model = get_model(name)
            beta0 = parse_coefficient_table()[name][0]
            assert model.predict(np.zeros(5)) == pytest.approx(np.exp(beta0), rel=1e-14)

    def test_problem_ii_hardness_and_temperature(self):
        z = normalize([49.10, 259.22, 0.84, 101.01, 727.73])
        assert get_model("hardness").predict(z) == pytest.approx(604.71, rel=5e-3)
        assert get_model("temperature").predict(z) == pytest.approx(1690.97, rel=2e-3)

    def test_problem_iii_porosity(self):
        z = normalize([45.02, 259.96, 1.04, 120.01, 638.88])
        assert get_model("porosity").predict(z) == pytest.approx(14.57, rel=5e-3)

    @given(arrays(np.float64, 5, elements=st.floats(-50, 50)))
    def test_strictly_positive(self, z):
        for name in MODEL_NAMES:
            assert get_model(name).predict(z) > 0

    def test_overflow_rejected(self):
        with pytest.raises(ModelOverflowError):
            get_model("porosity").predict(np.full(5, 1e4))

    def test_non_finite_coded_rejected(self):
        with pytest.raises(ValueError):
            get_model("hardness").predict([0, 0, np.nan, 0, 0])

    def test_batch_shape(self):
        z = np.zeros((4, 3, 5))
        assert get_model("hardness").predict(z).shape == (4, 3)
        assert isinstance(get_model("hardness").predict(np.zeros(5)), float)

    def test_predict_all(self):
        out = predict_all([60, 230, 0.94, 100, 683])
        assert list(out) == list(MODEL_NAMES)
        assert out["hardness"] == pytest.approx(np.exp(6.3520))


class TestDerivatives:
    def test_intercept_only(self):
        m = GammaLogLinearModel("const", (ModelTerm("intercept", (), 1.5),))
        np.testing.assert_array_equal(m.gradient(np.full(5, 0.3)), np.zeros(5))
        np.testing.assert_array_equal(m.hessian(np.full(5, 0.3)), np.zeros((5, 5)))

    def test_pure_linear_chain_rule(self):
        m = GammaLogLinearModel("lin", (ModelTerm("intercept", (), 0.2), ModelTerm("linear", (0,), 0.7)))
        z = np.array([0.4, 0, 0, 0, 0])
        assert m.gradient(z)[0] == pytest.approx(0.7 * np.exp(0.2 + 0.7 * 0.4))
        np.testing.assert_array_equal(m.gradient(z)[1:], 0)

    def test_hardness_curvature_structure(self):
        B = get_model("hardness").curvature
        np.testing.assert_array_equal(np.diag(B), 0)
        assert B[2, 3] == B[3, 2] == -0.0216
        assert B[2, 4] == B[4, 2] == 0.0248
        mask = np.ones((5, 5), bool)
        mask[[2, 3, 2, 4], [3, 2, 4, 2]] = False
        np.testing.assert_array_equal(B[mask], 0)

    @pytest.mark.parametrize("name", MODEL_NAMES)
    def test_gradient_matches_finite_differences(self, name):
        m = get_model(name)
        for z in np.random.default_rng(1).uniform(-1, 1, (100, 5)):
            assert rel_err(m.gradient(z), fd_gradient(m.predict, z)) < 1e-5

    @pytest.mark.parametrize("name", MODEL_NAMES)
    def test_hessian_matches_finite_differences(self, name):
        m = get_model(name)
        for z in np.random.default_rng(2).uniform(-1, 1, (100, 5)):
            H = m.hessian(z)
            np.testing.assert_array_equal(H, H.T)
            assert rel_err(H, fd_hessian(m.gradient, z)) < 1e-4

    def test_batched_derivatives(self):
        m = get_model("porosity")
        Z = np.random.default_rng(3).uniform(-1, 1, (7, 5))
        np.testing.assert_allclose(m.gradient(Z)[4], m.gradient(Z[4]))
        np.testing.assert_allclose(m.hessian(Z)[4], m.hessian(Z[4]))


class TestConvexity:
    def test_positive_quadratics_without_interactions(self):
        terms = (ModelTerm("intercept", (), 0.0),) + tuple(ModelTerm("quadratic", (i,), 0.3) for i in range(5))
        rep = convexity_report(GammaLogLinearModel("bowl", terms))
        assert rep.positive_definite
        assert rep.witness is None

    def test_hardness_is_indefinite(self):
        rep = convexity_report(get_model("hardness"))
        assert rep.classification == "indefinite"
        assert np.linalg.eigvalsh(get_model("hardness").hessian(rep.witness))[0] < 0
        assert np.linalg.eigvalsh(get_model("hardness").curvature)[0] < 0

    def test_intercept_only_is_not_positive_definite(self):
        rep = convexity_report(GammaLogLinearModel("const", (ModelTerm("intercept", (), 1.0),)))
        assert rep.classification == "positive-semidefinite"
        assert not rep.positive_definite

    def test_sample_count(self):
        rep = convexity_report(get_model("velocity"), n_samples=64)
        assert rep.n_samples == 64 + 32 + 1


def test_model_dict_round_trip():
    m = get_model("porosity")
    again = GammaLogLinearModel.from_dict(m.to_dict())
    assert again.formula() == m.formula()
    assert "exp(" in m.formula() or "2.7056" in m.formula()
