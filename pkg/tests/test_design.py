import numpy as np
import pytest

from synthdesign import design, numerics
from synthdesign.design import (
    DesignAssignment,
    DesignConfig,
    SignCoherenceWarning,
    WeightVector,
    build_gram,
    iterate_step,
    orient,
    run_design,
    simplified_weights,
    spectral_init,
)
from synthdesign.errors import (
    DegenerateDiagonalError,
    DegenerateWeightsError,
    DimensionMismatchError,
    NonFiniteError,
)
from synthdesign.oracle import brute_force_design
from synthdesign.simulate import generate_realizable


class TestBuildGram:
    def test_zero_data_ridge_only(self):
        np.testing.assert_allclose(build_gram(np.zeros((2, 3)), 1.0, 0.0), np.eye(2))

    def test_zero_data_penalty_only(self):
        np.testing.assert_allclose(build_gram(np.zeros((2, 3)), 0.0, 1.0), np.ones((2, 2)))

    def test_hand_multiplied(self):
        c = build_gram(np.array([[1.0, 0.0], [0.0, 1.0]]), 0.5, 0.0)
        np.testing.assert_allclose(c, np.diag([1.5, 1.5]))

    def test_units_as_rows(self):
        # 3 units, 5 periods: the Gram must be 3x3 whichever way T compares to N.
        y = np.arange(15.0).reshape(3, 5)
        assert build_gram(y, 1.0, 1.0).shape == (3, 3)

    def test_symmetry(self):
        rng = np.random.default_rng(0)
        c = build_gram(rng.standard_normal((5, 7)), 0.3, 2.0)
        np.testing.assert_array_equal(c, c.T)

    def test_dimension_errors(self):
        with pytest.raises(DimensionMismatchError):
            build_gram(np.zeros(3), 1.0, 0.0)
        with pytest.raises(DimensionMismatchError):
            build_gram(np.zeros((1, 4)), 1.0, 0.0)

    def test_nonfinite_error(self):
        y = np.zeros((2, 2))
        y[0, 0] = np.inf
        with pytest.raises(NonFiniteError):
            build_gram(y, 1.0, 0.0)


class TestSpectralInit:
    def test_zero_entry_takes_positive_sign(self):
        out = spectral_init(np.diag([1.0, 4.0]))
        np.testing.assert_array_equal(out.signs, [1, 1])
        assert not out.oriented

    def test_scale_invariance(self):
        rng = np.random.default_rng(1)
        base = rng.standard_normal((5, 5))
        c = base @ base.T + 5 * np.eye(5)
        a = spectral_init(c)
        b = spectral_init(10.0 * c)
        np.testing.assert_array_equal(a.signs, b.signs)

    def test_matches_oracle_on_noiseless_instance(self):
        inst = generate_realizable(6, 4, 150, epsilon=0.5, noise_sd=0.0, seed=0)
        y = inst.panel.panel.pre
        cfg = DesignConfig().resolved(y)
        c = build_gram(y, cfg.alpha, cfg.lam)
        init = spectral_init(c).signs
        best = brute_force_design(c).best_signs.signs
        assert np.array_equal(init, best) or np.array_equal(init, -best)


class TestIterateStep:
    def test_identity_fixed_point(self):
        y = DesignAssignment(np.array([1, -1, 1]))
        out = iterate_step(np.eye(3), y, DesignConfig(alpha=1.0, lam=0.0, variant="spcd"))
        np.testing.assert_array_equal(out.signs, y.signs)

    def test_sign_equivariance_generic(self):
        rng = np.random.default_rng(2)
        base = rng.standard_normal((5, 5))
        c_inv = numerics.invert_spd(base @ base.T + 5 * np.eye(5))
        cfg = DesignConfig(alpha=1.0, lam=0.0, variant="spcd")
        y = DesignAssignment(np.array([1, 1, -1, 1, -1]))
        plus = iterate_step(c_inv, y, cfg)
        minus = iterate_step(c_inv, y.flipped(), cfg)
        np.testing.assert_array_equal(minus.signs, -plus.signs)

    def test_hand_case_with_exact_zero(self):
        c_inv = np.array([[2.0, 1.0, 0.0], [1.0, 2.0, 1.0], [0.0, 1.0, 2.0]])
        y = DesignAssignment(np.array([1, -1, 1]))
        out = iterate_step(c_inv, y, DesignConfig(alpha=1.0, lam=0.0, variant="spcd"))
        # (C_inv) y = (1, 0, 1): the zero takes the positive sign.
        np.testing.assert_array_equal(out.signs, [1, 1, 1])

    def test_normspcd_divides_by_diagonal(self):
        c_inv = np.diag([4.0, 1.0])
        y = DesignAssignment(np.array([1, -1]))
        cfg = DesignConfig(alpha=1.0, lam=0.0, variant="normspcd")
        out = iterate_step(c_inv, y, cfg)
        # d = (2, 1); step = sgn(diag(4,1) @ (1/2, -1)) = sgn((2, -1)).
        np.testing.assert_array_equal(out.signs, [1, -1])

    def test_degenerate_diagonal(self):
        c_inv = np.diag([1.0, 1e-30])
        y = DesignAssignment(np.array([1, -1]))
        cfg = DesignConfig(alpha=1.0, lam=0.0, variant="normspcd")
        with pytest.raises(DegenerateDiagonalError):
            iterate_step(c_inv, y, cfg)


class TestSimplifiedWeights:
    def test_identity_matrix(self):
        w = simplified_weights(np.eye(4), DesignAssignment(np.array([1, -1, 1, -1])))
        np.testing.assert_allclose(w.values, [0.5, 0.5, 0.5, 0.5])
        assert w.normalization == "l1-two"

    def test_hand_case(self):
        w = simplified_weights(np.diag([3.0, 1.0]), DesignAssignment(np.array([1, -1])))
        np.testing.assert_allclose(w.values, [1.5, 0.5])
        assert np.sum(np.abs(w.values)) == pytest.approx(2.0, abs=1e-12)

    def test_l1_always_two(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            base = rng.standard_normal((6, 6))
            c_inv = numerics.invert_spd(base @ base.T + 6 * np.eye(6))
            signs = rng.choice([-1, 1], size=6)
            if np.all(signs == signs[0]):
                signs[0] = -signs[0]
            with np.testing.suppress_warnings() as sup:
                sup.filter(SignCoherenceWarning)
                w = simplified_weights(c_inv, DesignAssignment(signs))
            assert np.sum(np.abs(w.values)) == pytest.approx(2.0, abs=1e-10)

    def test_warns_on_sign_mismatch(self):
        c_inv = np.array([[1.0, -2.0], [-2.0, 1.0]])
        # C_inv y = (-1, -1) for y = (1, 1): signs disagree.
        with pytest.warns(SignCoherenceWarning):
            simplified_weights(c_inv, DesignAssignment(np.array([1, 1])))

    def test_degenerate_weights(self):
        c_inv = np.array([[1.0, -1.0], [-1.0, 1.0]])
        # C_inv y = 0 exactly for y = (1, 1).
        with pytest.raises(DegenerateWeightsError):
            simplified_weights(c_inv, DesignAssignment(np.array([1, 1])))


class TestOrient:
    def test_majority_positive(self):
        out = orient(DesignAssignment(np.array([1, 1, -1])))
        assert out.oriented
        np.testing.assert_array_equal(out.treated_mask(), [False, False, True])

    def test_tie_treats_plus_group(self):
        out = orient(DesignAssignment(np.array([1, -1])))
        np.testing.assert_array_equal(out.treated_mask(), [True, False])

    def test_mirror(self):
        out = orient(DesignAssignment(np.array([-1, -1, 1])))
        np.testing.assert_array_equal(out.treated_mask(), [False, False, True])

    def test_treated_group_never_larger(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            n = int(rng.integers(2, 12))
            signs = rng.choice([-1, 1], size=n)
            if np.all(signs == signs[0]):
                signs[0] = -signs[0]
            out = orient(DesignAssignment(signs))
            assert np.count_nonzero(out.treated_mask()) <= (n + 1) // 2

    def test_double_orientation_rejected(self):
        with pytest.raises(ValueError):
            orient(orient(DesignAssignment(np.array([1, -1]))))


class TestDesignConfig:
    def test_resolved_defaults_scale_with_data(self):
        y = np.full((4, 5), 2.0)
        cfg = DesignConfig().resolved(y)
        trace_scale = np.sum(y * y) / 4
        assert cfg.alpha == pytest.approx(0.1 * trace_scale)
        assert cfg.lam == pytest.approx(100.0 * trace_scale)

    def test_explicit_values_kept(self):
        cfg = DesignConfig(alpha=1.0, lam=2.0).resolved(np.ones((3, 3)))
        assert (cfg.alpha, cfg.lam) == (1.0, 2.0)

    def test_both_zero_rejected(self):
        with pytest.raises(ValueError):
            DesignConfig(alpha=0.0, lam=0.0)

    def test_zero_data_defaults_rejected(self):
        with pytest.raises(ValueError):
            DesignConfig().resolved(np.zeros((3, 4)))

    def test_invalid_variant(self):
        with pytest.raises(ValueError):
            DesignConfig(variant="power")


class TestRunDesign:
    def test_two_units_forced_split(self):
        rng = np.random.default_rng(5)
        y = rng.standard_normal((2, 6))
        sol = run_design(y)
        assert sol.converged
        assert sol.iterations <= 2
        assert set(sol.assignment.signs.tolist()) == {-1, 1}

    def test_matches_oracle_on_noiseless_instance(self):
        inst = generate_realizable(6, 4, 200, epsilon=0.5, noise_sd=0.01, seed=6)
        y = inst.panel.panel.pre
        sol = run_design(y, DesignConfig(variant="normspcd"))
        cfg = DesignConfig().resolved(y)
        best = brute_force_design(build_gram(y, cfg.alpha, cfg.lam)).best_signs.signs
        got = sol.assignment.signs
        assert np.array_equal(got, best) or np.array_equal(got, -best)

    def test_monotone_trace_spcd(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            n = int(rng.integers(3, 9))
            t = int(rng.integers(2, 30))
            y = rng.standard_normal((n, t))
            sol = run_design(y, DesignConfig(variant="spcd"))
            trace = sol.objective_trace
            assert np.all(np.diff(trace) >= -1e-12 * np.abs(trace[:-1]))

    def test_fixed_point_certificate(self):
        rng = np.random.default_rng(8)
        y = rng.standard_normal((7, 15))
        cfg = DesignConfig(variant="normspcd")
        sol = run_design(y, cfg)
        assert sol.converged
        assert sol.fixed_point_residual == 0.0
        resolved = cfg.resolved(y)
        c_inv = numerics.invert_spd(build_gram(y, resolved.alpha, resolved.lam))
        stepped = iterate_step(c_inv, DesignAssignment(sol.assignment.signs), resolved)
        np.testing.assert_array_equal(stepped.signs, sol.assignment.signs)

    def test_quotient_equivariance_via_flip(self):
        inst = generate_realizable(8, 6, 100, epsilon=0.5, noise_sd=0.05, seed=9)
        y = inst.panel.panel.pre
        cfg = DesignConfig(variant="spcd").resolved(y)
        c = build_gram(y, cfg.alpha, cfg.lam)
        c_inv = numerics.invert_spd(c)
        y0 = spectral_init(c)
        a, _, _, _ = design._iterate_to_fixed_point(c_inv, y0.signs, cfg)
        b, _, _, _ = design._iterate_to_fixed_point(c_inv, -y0.signs, cfg)
        assert np.array_equal(a, b) or np.array_equal(a, -b)
        np.testing.assert_array_equal(
            orient(DesignAssignment(a)).treated_mask(),
            orient(DesignAssignment(b)).treated_mask(),
        )

    def test_permutation_equivariance(self):
        inst = generate_realizable(7, 5, 120, epsilon=0.5, noise_sd=0.02, seed=10)
        y = inst.panel.panel.pre
        perm = np.random.default_rng(11).permutation(7)
        base = run_design(y, DesignConfig(variant="normspcd"))
        permuted = run_design(y[perm], DesignConfig(variant="normspcd"))
        np.testing.assert_array_equal(permuted.assignment.signs, base.assignment.signs[perm])
        np.testing.assert_allclose(permuted.weights.values, base.weights.values[perm], rtol=1e-9)

    def test_scaling_invariance_of_assignment(self):
        rng = np.random.default_rng(12)
        y = rng.standard_normal((6, 20))
        cfg = DesignConfig().resolved(y)
        scale = 3.7
        scaled_cfg = DesignConfig(alpha=cfg.alpha * scale**2, lam=cfg.lam * scale**2)
        base = run_design(y, cfg)
        scaled = run_design(scale * y, scaled_cfg)
        np.testing.assert_array_equal(scaled.assignment.signs, base.assignment.signs)

    def test_iteration_cap_returns_unconverged(self):
        rng = np.random.default_rng(13)
        y = rng.standard_normal((8, 4))
        sol = run_design(y, DesignConfig(max_iters=1, variant="spcd"))
        assert isinstance(sol.converged, bool)
        if not sol.converged:
            assert sol.iterations == 1

    def test_deterministic(self):
        rng = np.random.default_rng(14)
        y = rng.standard_normal((6, 10))
        a = run_design(y)
        b = run_design(y)
        np.testing.assert_array_equal(a.assignment.signs, b.assignment.signs)
        np.testing.assert_array_equal(a.weights.values, b.weights.values)


class TestWeightVector:
    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            WeightVector(np.array([-0.5, 1.5]), "l1-two")

    def test_allows_roundoff_negative(self):
        w = WeightVector(np.array([-1e-12, 2.0]), "l1-two")
        assert w.values[0] == -1e-12

    def test_rejects_unknown_normalization(self):
        with pytest.raises(ValueError):
            WeightVector(np.array([1.0]), "unit")


class TestDesignAssignment:
    def test_rejects_bad_entries(self):
        with pytest.raises(ValueError):
            DesignAssignment(np.array([1, 0, -1]))

    def test_rejects_single_unit(self):
        with pytest.raises(ValueError):
            DesignAssignment(np.array([1]))

    def test_treated_mask_requires_orientation(self):
        with pytest.raises(ValueError):
            DesignAssignment(np.array([1, -1])).treated_mask()
