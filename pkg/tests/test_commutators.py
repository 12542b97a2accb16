"""Commutator lab tests: identities, closed-form oracle, ensembles."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from schrobvp.commutators import (
    CommutatorTrial,
    commutator_apply,
    decomposition_audit,
    derivative_identity_residual,
    estimate_constant,
    fractional_commutator,
    splitting_residual,
    trial_coefficient,
    trial_field,
)
from schrobvp.errors import ConfigError, ValidationError
from schrobvp.spectral import (
    Grid1D,
    SpectralField,
    lp_norm,
    mode_field,
    random_band_field,
)

GRID = Grid1D(1024, 8 * np.pi)


def sample_pair(seed=3, band=48):
    a = trial_coefficient(GRID, band, seed)
    f = trial_field(GRID, band, seed + 500)
    return a, f


class TestTrialValidation:
    def test_bad_operator(self):
        a, f = sample_pair()
        with pytest.raises(ConfigError):
            CommutatorTrial(operator="Q", a=a, f=f)

    def test_negative_order(self):
        a, f = sample_pair()
        with pytest.raises(ConfigError):
            CommutatorTrial(operator="+", a=a, f=f, l=-1)

    def test_endpoint_exponent(self):
        a, f = sample_pair()
        with pytest.raises(ConfigError):
            CommutatorTrial(operator="+", a=a, f=f, p=1.0)

    def test_out_of_band_field(self):
        a, _ = sample_pair()
        spiky = SpectralField.from_hat(
            GRID, np.eye(GRID.n)[GRID.n // 2 - 1] * GRID.n
        )
        with pytest.raises(ValidationError, match="cutoff"):
            CommutatorTrial(operator="+", a=a, f=spiky)

    def test_complex_coefficient_rejected(self):
        a, f = sample_pair()
        with pytest.raises(ValidationError, match="real"):
            CommutatorTrial(operator="+", a=a * (1 + 0.5j), f=f)


class TestCommutatorApply:
    def test_constant_coefficient_vanishes(self):
        _, f = sample_pair()
        for op in ("+", "-", "H"):
            out = commutator_apply(
                CommutatorTrial(operator=op, a=np.full(GRID.n, 3.0), f=f, m=1)
            )
            assert out.norm_l2() < 1e-12 * f.norm_l2()

    def test_splitting_identity(self):
        a, f = sample_pair(seed=9)
        scale = np.max(np.abs(a)) * f.norm_l2()
        assert splitting_residual(a, f, m=1) < 1e-12 * scale
        assert splitting_residual(a, f, m=2) < 1e-10 * scale

    def test_derivative_transform_identity(self):
        a, f = sample_pair(seed=11)
        scale = np.max(np.abs(a)) * f.norm_l2()
        assert derivative_identity_residual(a, f) < 1e-10 * scale

    def test_single_mode_closed_form(self):
        # a = sin(x), f = e^{ix}: the product a f' has exactly two modes,
        # and the commutator with P+ collapses to the constant 1/2, so
        # the ratio against |a'|_inf |f|_2 is exactly 1/2
        a = np.sin(GRID.x)
        f = mode_field(GRID, 8)
        out = commutator_apply(CommutatorTrial(operator="+", a=a, f=f, m=1))
        expected = 0.5 * np.sqrt(2 * GRID.half_length)
        assert abs(out.norm_l2() - expected) < 1e-10 * expected
        ratio = out.norm_l2() / (1.0 * f.norm_l2())
        assert abs(ratio - 0.5) < 1e-10

    def test_single_mode_degenerate_case(self):
        # f = e^{-ix}: both pieces of the split land on nonpositive
        # frequencies and the commutator is identically zero
        a = np.sin(GRID.x)
        f = mode_field(GRID, -8)
        out = commutator_apply(CommutatorTrial(operator="+", a=a, f=f, m=1))
        assert out.norm_l2() < 1e-12 * f.norm_l2()

    @settings(max_examples=20, deadline=None)
    @given(st.floats(min_value=0.1, max_value=10.0))
    def test_homogeneity_in_coefficient(self, s):
        a, f = sample_pair(seed=21)
        base = commutator_apply(CommutatorTrial(operator="+", a=a, f=f, m=1))
        scaled = commutator_apply(CommutatorTrial(operator="+", a=s * a, f=f, m=1))
        diff = (scaled - s * base).norm_l2()
        assert diff < 1e-12 * max(1.0, s) * base.norm_l2()


class TestEstimateConstant:
    def test_first_order_ensemble_stable(self):
        est = estimate_constant(
            "+", [(0, 1)], Grid1D(2048, 8 * np.pi),
            n_trials=100, bandwidth=64, seed=0,
        )[(0, 1)]
        assert est.ensemble == 100
        assert np.isfinite(est.max_ratio) and est.max_ratio > 0
        assert est.stability_factor <= 1.1
        assert est.skipped == 0

    def test_zeroth_order_operator_norm_bound(self):
        est = estimate_constant(
            "+", [(0, 0)], GRID, n_trials=50, bandwidth=48,
            seed=2, check_stability=False,
        )[(0, 0)]
        assert np.all(est.ratios <= 2.0 + 1e-12)

    def test_mirror_symmetry(self):
        # reflecting the field spectrum swaps the roles of the two
        # projections; per-trial ratios agree to rounding
        grid = Grid1D(1024, 8 * np.pi)
        for seed in range(5):
            a = trial_coefficient(grid, 48, 100 + seed)
            f = trial_field(grid, 48, 200 + seed)
            mirrored = SpectralField(grid, np.conj(f.values))
            r_plus = lp_norm(
                commutator_apply(CommutatorTrial(operator="+", a=a, f=f, m=1)), 2.0
            )
            r_minus = lp_norm(
                commutator_apply(
                    CommutatorTrial(operator="-", a=a, f=mirrored, m=1)
                ),
                2.0,
            )
            assert abs(r_plus - r_minus) < 1e-10 * max(r_plus, 1e-30)

    def test_deterministic_given_seed(self):
        kw = dict(n_trials=5, bandwidth=32, seed=7, check_stability=False)
        one = estimate_constant("H", [(1, 0)], GRID, **kw)[(1, 0)]
        two = estimate_constant("H", [(1, 0)], GRID, **kw)[(1, 0)]
        assert np.array_equal(one.ratios, two.ratios)

    def test_bandwidth_guard(self):
        with pytest.raises(ConfigError, match="cutoff"):
            estimate_constant("+", [(0, 1)], Grid1D(128, 8.0), bandwidth=64)


class TestDecompositionAudit:
    def test_identities_on_random_inputs(self):
        grid = Grid1D(1024, 8 * np.pi)
        a = SpectralField(grid, trial_coefficient(grid, 40, 31))
        f = trial_field(grid, 40, 32)
        audit = decomposition_audit(a, f, m=1)
        assert audit.residual_low_part < 1e-12 * audit.scale
        assert audit.residual_inner_support < 1e-12 * audit.scale
        assert audit.residual_diagonal_support < 1e-12 * audit.scale
        assert audit.residual_reconstruction < 1e-10 * audit.scale
        # the farthest sub-diagonal pairs a low coefficient block with a
        # field block two octaves up; their product cannot reach the
        # positive side
        assert audit.diagonal_norms[-2] < 1e-12 * audit.scale
        assert audit.near_diagonal.norm_l2() > 0

    def test_mean_rejected(self):
        grid = Grid1D(512, 8 * np.pi)
        a = SpectralField(grid, trial_coefficient(grid, 30, 41) + 0.5)
        f = trial_field(grid, 30, 42)
        with pytest.raises(ValidationError, match="mean"):
            decomposition_audit(a, f)


class TestFractionalCommutator:
    def test_constraint_violations(self):
        a, f = sample_pair()
        with pytest.raises(ConfigError):
            fractional_commutator(a, f, alpha=1.0, beta_exp=0.5)
        with pytest.raises(ConfigError):
            fractional_commutator(a, f, alpha=0.5, beta_exp=0.0)
        with pytest.raises(ConfigError):
            fractional_commutator(a, f, alpha=0.5, beta_exp=0.75)
        with pytest.raises(ConfigError):
            fractional_commutator(a, f, alpha=0.0, beta_exp=0.5, q=2.0, delta=0.4)

    def test_constant_coefficient(self):
        _, f = sample_pair()
        res = fractional_commutator(np.full(GRID.n, 1.5), f, 0.0, 0.5)
        assert res.lhs < 1e-12 * f.norm_l2()
        assert res.ratio == 0.0

    def test_reduction_identity(self):
        a, f = sample_pair(seed=51)
        res = fractional_commutator(a, f, alpha=0.5, beta_exp=0.25)
        assert res.reduction_residual < 1e-10 * f.norm_l2()

    def test_ensemble_bounded_and_refinement_stable(self):
        grid = Grid1D(1024, 8 * np.pi)
        fine = Grid1D(2048, 8 * np.pi)
        for pair in ((0.0, 0.5), (0.5, 0.25), (0.5, 0.5)):
            maxes = []
            for g in (grid, fine):
                rs = []
                for seed in range(50):
                    a = trial_coefficient(g, 48, 300 + seed)
                    f = trial_field(g, 48, 600 + seed)
                    rs.append(fractional_commutator(a, f, *pair).ratio)
                maxes.append(max(rs))
            assert maxes[0] < 3.0
            assert maxes[1] <= 1.1 * maxes[0]
