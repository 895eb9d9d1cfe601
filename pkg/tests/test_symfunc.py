import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from radialflow.errors import AdmissibilityError
from radialflow.symfunc import (
    CurvatureSpec,
    InvSigmaK,
    PowerScaled,
    SigmaK,
    check_structure,
    cone_margin,
    elementary_symmetric,
    eval_F,
    grad_F,
    in_cone,
    log_hessian,
    sample_cone,
)

ALL_SPECS = [SigmaK(1), SigmaK(2), InvSigmaK(1), InvSigmaK(2), PowerScaled(SigmaK(1), 2), PowerScaled(SigmaK(2), 0.5)]

positive = st.floats(0.05, 10.0)


class TestEvaluation:
    def test_normalization(self):
        for spec in ALL_SPECS:
            assert eval_F(spec, np.ones(2)) == pytest.approx(1.0, abs=1e-12)

    def test_examples(self):
        assert eval_F(SigmaK(1), np.array([1.0, 1.0])) == 1.0
        assert eval_F(SigmaK(1), np.array([2.0, 4.0])) == 3.0
        assert eval_F(SigmaK(2), np.array([2.0, 3.0])) == 6.0
        assert eval_F(InvSigmaK(1), np.array([1.0, 2.0])) == pytest.approx(4.0 / 3.0, rel=1e-15)

    def test_harmonic_mean_oracle(self):
        kappa = np.array([[0.3, 2.0], [1.5, 1.5], [7.0, 0.1]])
        expected = 2.0 / (1.0 / kappa[:, 0] + 1.0 / kappa[:, 1])
        assert np.allclose(eval_F(InvSigmaK(1), kappa), expected, rtol=1e-14)

    def test_elementary_symmetric_three_variables(self):
        lam = np.array([1.0, 2.0, 3.0])
        assert [float(s) for s in elementary_symmetric(lam, 3)] == [1.0, 6.0, 11.0, 6.0]

    def test_higher_dimension_normalization(self):
        for k in (1, 2, 3):
            assert eval_F(SigmaK(k, n=3), np.ones(3)) == pytest.approx(1.0)

    def test_outside_cone_raises(self):
        with pytest.raises(AdmissibilityError):
            eval_F(SigmaK(2), np.array([-0.5, 1.0]))
        with pytest.raises(AdmissibilityError):
            eval_F(InvSigmaK(1), np.array([0.0, 1.0]))

    def test_wrong_length_raises(self):
        with pytest.raises(ValueError):
            eval_F(SigmaK(1), np.array([1.0, 2.0, 3.0]))

    @settings(max_examples=50, deadline=None)
    @given(positive, positive)
    def test_symmetry(self, a, b):
        for spec in ALL_SPECS:
            assert eval_F(spec, np.array([a, b])) == eval_F(spec, np.array([b, a]))

    @settings(max_examples=50, deadline=None)
    @given(positive, positive, st.floats(0.25, 4.0))
    def test_homogeneity(self, a, b, t):
        for spec in ALL_SPECS:
            kappa = np.array([a, b])
            scaled = t**spec.degree * eval_F(spec, kappa)
            assert abs(eval_F(spec, t * kappa) - scaled) <= 1e-10 * scaled


class TestGradient:
    def test_sigma1_constant(self):
        for kappa in ([1.0, 2.0], [-0.3, 5.0]):
            assert np.array_equal(grad_F(SigmaK(1), np.array(kappa)), [0.5, 0.5])

    def test_sigma2_example(self):
        assert np.array_equal(grad_F(SigmaK(2), np.array([2.0, 3.0])), [3.0, 2.0])

    @pytest.mark.parametrize("spec", ALL_SPECS, ids=str)
    def test_euler_identity(self, spec):
        kappa = sample_cone(spec, 200, np.random.default_rng(3))
        lhs = np.sum(kappa * grad_F(spec, kappa), axis=-1)
        F = eval_F(spec, kappa)
        assert np.max(np.abs(lhs - spec.degree * F) / F) <= 1e-10

    @pytest.mark.parametrize("spec", ALL_SPECS, ids=str)
    def test_matches_finite_differences(self, spec):
        kappa = sample_cone(spec, 100, np.random.default_rng(4), step=1e-3)
        h = 1e-6
        fd = np.stack(
            [(eval_F(spec, kappa + h * e) - eval_F(spec, kappa - h * e)) / (2 * h) for e in np.eye(2)], -1
        )
        g = grad_F(spec, kappa)
        assert np.max(np.abs(fd - g) / np.maximum(np.abs(g), 1e-3)) <= 1e-6

    @pytest.mark.parametrize("spec", ALL_SPECS, ids=str)
    def test_monotone_in_cone(self, spec):
        kappa = sample_cone(spec, 500, np.random.default_rng(5))
        assert np.all(grad_F(spec, kappa) > 0)


class TestCone:
    def test_unit_vector_in_every_cone(self):
        assert all(in_cone(spec, np.ones(2)) for spec in ALL_SPECS)

    def test_examples(self):
        k = np.array([-0.5, 1.0])
        assert in_cone(SigmaK(1), k)
        assert not in_cone(SigmaK(2), k)
        assert not in_cone(SigmaK(2), np.array([0.0, 1.0]))

    def test_normalized_margin(self):
        # min over j <= k of S_j / C(n, j)
        assert cone_margin(SigmaK(1), np.ones(2)) == 1.0
        assert cone_margin(SigmaK(2), np.array([0.5, 0.5])) == 0.25
        assert cone_margin(SigmaK(2), np.array([3.0, 4.0])) == 3.5
        assert cone_margin(InvSigmaK(1), np.array([0.2, 3.0])) == 0.2

    def test_boundary_degeneracy(self):
        # along a ray towards the boundary kappa_1 = 0, SigmaK(2) decreases to zero
        s = np.linspace(1.0, 1e-8, 40)
        vals = eval_F(SigmaK(2), np.stack([s, np.ones_like(s)], -1))
        assert np.all(np.diff(vals) < 0)
        assert vals[-1] < 1e-7

    def test_power_shares_base_cone(self):
        spec = PowerScaled(SigmaK(2), 0.5)
        assert spec.cone == "garding:2"
        assert spec.degree == 1.0

    def test_samples_lie_in_cone_with_unit_norm(self):
        for spec in ALL_SPECS:
            kappa = sample_cone(spec, 300, np.random.default_rng(6))
            assert kappa.shape == (300, 2)
            assert np.all(in_cone(spec, kappa))
            assert np.allclose(np.linalg.norm(kappa, axis=1), 1.0)


class TestSpecValidation:
    @pytest.mark.parametrize(
        "kwargs",
        [dict(kind="sigma_k", k=3, n=2), dict(kind="sigma_k", k=0), dict(kind="cubic"), dict(kind="power")],
    )
    def test_rejects(self, kwargs):
        with pytest.raises(ValueError):
            CurvatureSpec(**kwargs)

    def test_rejects_nonpositive_alpha(self):
        with pytest.raises(ValueError):
            PowerScaled(SigmaK(1), 0.0)

    def test_degree(self):
        assert SigmaK(2).degree == 2
        assert PowerScaled(SigmaK(1), 2).degree == 2
        assert PowerScaled(InvSigmaK(2), 1.5).degree == 3


class TestStructure:
    @pytest.mark.parametrize("spec", [SigmaK(1), SigmaK(2), InvSigmaK(1), PowerScaled(SigmaK(1), 2)], ids=str)
    def test_acceptance_specs_pass(self, spec):
        rep = check_structure(spec, sample_count=1000, seed=0)
        assert rep.passed
        assert rep.samples == 1000
        assert rep.min_gradient > 0
        assert rep.homogeneity_defect <= 1e-10
        assert rep.max_log_hessian_eig <= 1e-6
        assert rep.normalization_defect <= 1e-12

    def test_sigma1_log_hessian_negative_semidefinite(self):
        # log of a linear function: Hessian -grad grad^T / F^2 has eigenvalues <= 0
        assert check_structure(SigmaK(1)).max_log_hessian_eig <= 1e-6

    def test_log_hessian_oracle(self):
        # log(k1 k2) has Hessian diag(-1/k1^2, -1/k2^2)
        kappa = np.array([[0.5, 2.0], [1.0, 3.0]])
        got = log_hessian(SigmaK(2), kappa)
        for h, (a, b) in zip(got, kappa):
            assert np.allclose(h, np.diag([-1 / a**2, -1 / b**2]), rtol=1e-6, atol=1e-8)

    def test_sample_count_floor(self):
        with pytest.raises(ValueError):
            check_structure(SigmaK(1), sample_count=10)

    def test_reproducible(self):
        a = check_structure(InvSigmaK(1), seed=7)
        b = check_structure(InvSigmaK(1), seed=7)
        assert a == b
