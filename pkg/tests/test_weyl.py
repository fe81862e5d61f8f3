"""Phase algebra, Gaussian evaluation, Segal conversion, and the Weyl KMS check."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mdlab.duality import real_axis_factor
from mdlab.minkowski import FieldModel, bump_test_function
from mdlab.quasifree import GroundStructure, StructureError, build_thermal
from mdlab.subspaces import RealifiedSpace
from mdlab.weyl import (
    ModelWeylSpace,
    RealifiedWeylSpace,
    SegalWord,
    WeylWord,
    evaluate_quasifree,
    factor_decompose,
    free_dynamics,
    gram_positivity_report,
    kms_boundary_check,
    segal_from_weyl,
    weyl_from_segal,
    weyl_multiply,
    weyl_star,
)

COTH_HALF = (math.e + 1.0) / (math.e - 1.0)


def flat_space(n=4, ground=False):
    g = GroundStructure(np.linspace(1.0, 2.0, n)) if ground else None
    return RealifiedWeylSpace(RealifiedSpace(n), g)


def lattice(n=16):
    return FieldModel(n_points=n, length=float(n), mass=1.0, n_times=48,
                      t_extent=12.0)


class TestRelations:
    def test_identity_is_unit(self):
        space = flat_space()
        w = WeylWord(1.0, np.arange(8.0))
        prod = weyl_multiply(space, w, WeylWord.identity(8))
        assert prod.phase == pytest.approx(w.phase)
        np.testing.assert_allclose(prod.label, w.label)

    def test_star_inverts(self):
        space = flat_space()
        w = WeylWord(1.0, np.linspace(-1, 1, 8))
        assert weyl_multiply(space, w, weyl_star(w)).is_identity()

    def test_star_is_involution_and_antihomomorphism(self):
        space = flat_space()
        rng = np.random.default_rng(0)
        wf = WeylWord(np.exp(0.3j), rng.standard_normal(8))
        wg = WeylWord(np.exp(-1.1j), rng.standard_normal(8))
        twice = weyl_star(weyl_star(wf))
        assert twice.phase == pytest.approx(wf.phase)
        lhs = weyl_star(weyl_multiply(space, wf, wg))
        rhs = weyl_multiply(space, weyl_star(wg), weyl_star(wf))
        assert lhs.phase == pytest.approx(rhs.phase, abs=1e-13)
        np.testing.assert_allclose(lhs.label, rhs.label)

    @given(st.integers(0, 10 ** 6))
    @settings(max_examples=30, deadline=None)
    def test_associativity_cocycle(self, seed):
        rng = np.random.default_rng(seed)
        space = flat_space()
        a, b, c = (WeylWord(1.0, rng.standard_normal(8)) for _ in range(3))
        left = weyl_multiply(space, weyl_multiply(space, a, b), c)
        right = weyl_multiply(space, a, weyl_multiply(space, b, c))
        assert abs(left.phase - right.phase) < 1e-12
        np.testing.assert_allclose(left.label, right.label, atol=1e-12)

    def test_unit_phase_enforced(self):
        with pytest.raises(Exception):
            WeylWord(2.0, np.zeros(4))


class TestDynamics:
    def test_t0_identity(self):
        space = flat_space(ground=True)
        w = WeylWord(1.0, np.arange(8.0))
        out = free_dynamics(space, w, 0.0)
        np.testing.assert_allclose(out.label, w.label, atol=1e-14)

    def test_group_law(self):
        space = flat_space(ground=True)
        rng = np.random.default_rng(1)
        w = WeylWord(1.0, rng.standard_normal(8))
        once = free_dynamics(space, free_dynamics(space, w, 0.4), -0.4)
        np.testing.assert_allclose(once.label, w.label, atol=1e-12)
        ab = free_dynamics(space, free_dynamics(space, w, 0.25), 0.5)
        direct = free_dynamics(space, w, 0.75)
        np.testing.assert_allclose(ab.label, direct.label, atol=1e-10)

    def test_dynamics_is_symplectomorphism_on_lattice(self):
        model = lattice()
        space = ModelWeylSpace(model)
        rng = np.random.default_rng(2)
        f = space.word_from_test_function(bump_test_function(
            model, "compact", t_center=-0.5, t_width=1.8, x_center=5.0, x_width=2.5))
        g = space.word_from_test_function(bump_test_function(
            model, "compact", t_center=0.7, t_width=1.6, x_center=11.0, x_width=2.0))
        before = space.sigma(f.label, g.label)
        after = space.sigma(space.evolve_label(f.label, 1.3),
                            space.evolve_label(g.label, 1.3))
        assert abs(after - before) < 1e-9 * max(1.0, abs(before))

    def test_missing_dynamics_rejected(self):
        space = flat_space(ground=False)
        with pytest.raises(StructureError):
            free_dynamics(space, WeylWord.identity(8), 1.0)


class TestQuasifreeEvaluation:
    def test_identity_word(self):
        space = flat_space(ground=True)
        val = evaluate_quasifree(space, WeylWord.identity(8), space.ground)
        assert val == pytest.approx(1.0)

    def test_thermal_variance_enhancement(self):
        # single mode at beta*omega = 1: exponent ratio = coth(1/2)
        space = flat_space(n=1, ground=False)
        ground = GroundStructure(np.array([1.0]))
        thermal = build_thermal(ground, 1.0)
        w = WeylWord(1.0, np.array([0.7, -0.2]))
        cold = -2.0 * math.log(evaluate_quasifree(space, w, ground).real)
        hot = -2.0 * math.log(evaluate_quasifree(space, w, thermal).real)
        assert hot / cold == pytest.approx(COTH_HALF, rel=1e-12)

    def test_cauchy_schwarz_of_state(self):
        space = flat_space(ground=True)
        rng = np.random.default_rng(3)
        for _ in range(10):
            w = WeylWord(1.0, rng.standard_normal(8))
            lhs = evaluate_quasifree(space, weyl_multiply(space, weyl_star(w), w),
                                     space.ground).real
            rhs = abs(evaluate_quasifree(space, w, space.ground)) ** 2
            assert lhs + 1e-12 >= rhs

    def test_gram_positivity(self):
        space = flat_space(ground=True)
        thermal = build_thermal(space.ground, 0.8)
        rng = np.random.default_rng(4)
        words = [WeylWord(1.0, rng.standard_normal(8)) for _ in range(4)]
        rep = gram_positivity_report(space, words, thermal)
        assert rep["passed"], rep

    def test_invalid_structure_rejected(self):
        space = flat_space()
        with pytest.raises(StructureError):
            evaluate_quasifree(space, WeylWord.identity(8), object())


class TestSegalConversion:
    def test_roundtrip_preserves_phase_and_label(self):
        space = flat_space(n=5)
        factor = real_axis_factor(5)
        rng = np.random.default_rng(5)
        for _ in range(20):
            w = WeylWord(np.exp(1j * rng.uniform(0, 2 * np.pi)),
                         rng.standard_normal(10))
            back = weyl_from_segal(space, segal_from_weyl(space, factor, w))
            assert abs(back.phase - w.phase) < 1e-12
            np.testing.assert_allclose(back.label, w.label, atol=1e-12)

    def test_decomposition_is_unique_and_clean(self):
        space = flat_space(n=5)
        factor = real_axis_factor(5)
        rng = np.random.default_rng(6)
        v = rng.standard_normal(10)
        v1, v2 = factor_decompose(space, factor, v)
        j = space.space.complex_structure
        np.testing.assert_allclose(v1 + j @ v2, v, atol=1e-12)
        assert np.linalg.norm(v1 - factor.project(v1)) < 1e-10
        assert np.linalg.norm(v2 - factor.project(v2)) < 1e-10

    def test_pure_generators(self):
        # U(v1) = W(v1) and V(v2) = W(J v2), with no extra phase
        space = flat_space(n=3)
        rng = np.random.default_rng(7)
        factor = real_axis_factor(3)
        v1 = factor.frame @ rng.standard_normal(3)
        v2 = factor.frame @ rng.standard_normal(3)
        w_u = weyl_from_segal(space, SegalWord(1.0, v1, np.zeros(6)))
        assert w_u.phase == pytest.approx(1.0)
        np.testing.assert_allclose(w_u.label, v1)
        w_v = weyl_from_segal(space, SegalWord(1.0, np.zeros(6), v2))
        assert w_v.phase == pytest.approx(1.0)
        np.testing.assert_allclose(w_v.label, space.space.complex_structure @ v2)

    def test_weyl_form_ccr_exchange_phase(self):
        # U(v1)V(v2) U(v3)V(v4) = U(v1+v3)V(v2+v4) times the exchange phase
        # of commuting V(v2) past U(v3); the cocycle is the oracle
        space = flat_space(n=4)
        factor = real_axis_factor(4)
        j = space.space.complex_structure
        rng = np.random.default_rng(8)
        v = [factor.frame @ rng.standard_normal(4) for _ in range(4)]
        lhs = weyl_multiply(space,
                            weyl_from_segal(space, SegalWord(1.0, v[0], v[1])),
                            weyl_from_segal(space, SegalWord(1.0, v[2], v[3])))
        rhs = weyl_from_segal(space, SegalWord(1.0, v[0] + v[2], v[1] + v[3]))
        exchange = np.exp(-1j * space.sigma(j @ v[1], v[2]))
        assert abs(lhs.phase - rhs.phase * exchange) < 1e-12
        np.testing.assert_allclose(lhs.label, rhs.label, atol=1e-12)

    def test_label_outside_decomposition_rejected(self):
        space = flat_space(n=3)
        thin = real_axis_factor(3)
        # restrict the factor to a proper subspace: decomposition must fail
        from mdlab.subspaces import RealSubspace
        partial = RealSubspace(thin.frame[:, :1])
        with pytest.raises(Exception):
            factor_decompose(space, partial, np.ones(6))


class TestWeylKms:
    def test_zero_second_argument(self):
        space = flat_space(n=2)
        thermal = build_thermal(GroundStructure(np.array([1.0, 1.5])), 1.0)
        wf = WeylWord(1.0, np.array([0.4, -0.1, 0.2, 0.0]))
        rep = kms_boundary_check(space, thermal, wf, WeylWord.identity(4),
                                 np.linspace(-1, 1, 5))
        assert rep["max_boundary_deviation"] < 1e-14

    def test_single_mode_real_pair(self):
        space = flat_space(n=1)
        thermal = build_thermal(GroundStructure(np.array([1.0])), 1.0)
        w = WeylWord(1.0, np.array([0.9, 0.0]))
        rep = kms_boundary_check(space, thermal, w, w, np.linspace(-2, 2, 9))
        assert rep["max_boundary_deviation"] < 1e-10

    def test_lattice_bump_pair(self):
        model = lattice(32)
        thermal = model.thermal(1.0)
        space = ModelWeylSpace(model)
        wf = space.word_from_test_function(bump_test_function(
            model, "compact", t_center=-0.8, t_width=2.0, x_center=9.0, x_width=4.0))
        wg = space.word_from_test_function(bump_test_function(
            model, "compact", t_center=0.5, t_width=2.0, x_center=21.0, x_width=4.0))
        rep = kms_boundary_check(space, thermal, wf, wg, np.linspace(-3, 3, 13))
        assert rep["passed"]
        assert rep["max_boundary_deviation"] < 1e-8
        # the opposite strip orientation genuinely fails; the report carries it
        assert rep["opposite_orientation_residual"] > 1e-6

    def test_state_norm_matches_doubling(self):
        # 2 * (-log state(W(f))) = ||K^beta f||^2, the coth-weighted ground norm
        model = lattice(16)
        thermal = model.thermal(0.7)
        space = ModelWeylSpace(model)
        wf = space.word_from_test_function(bump_test_function(
            model, "compact", t_center=0.2, t_width=1.8, x_center=7.0, x_width=3.0))
        val = evaluate_quasifree(space, wf, thermal)
        u = space.one_particle(wf.label)
        ku = thermal.k_beta(u)
        assert -2.0 * math.log(val.real) == pytest.approx(
            float(np.vdot(ku, ku).real), rel=1e-12)
