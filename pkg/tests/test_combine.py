"""Ensemble combiners: geometric/arithmetic fusion and voting."""

from __future__ import annotations

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from snnens.combine import am_combine, am_mv_combine, gm_poisson, mv_combine, ngm


class TestNgm:
    def test_single_member_identity(self):
        p = np.array([[0.3, 0.7]])
        assert_allclose(ngm(p), [0.3, 0.7], rtol=1e-12)

    def test_symmetric_members_fuse_to_uniform(self):
        members = np.array([[0.8, 0.2], [0.2, 0.8]])
        assert_allclose(ngm(members), [0.5, 0.5], rtol=1e-12)

    def test_idempotent_on_identical_members(self):
        p = np.array([0.1, 0.6, 0.3])
        assert_allclose(ngm(np.stack([p, p, p])), p, rtol=1e-12)

    def test_degenerate_weights_select_one_member(self):
        members = np.array([[0.9, 0.1], [0.2, 0.8]])
        assert_allclose(ngm(members, np.array([1.0, 0.0])), [0.9, 0.1], rtol=1e-12)

    def test_output_is_a_distribution(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            m = rng.integers(1, 8)
            c = rng.integers(2, 12)
            q = rng.dirichlet(np.ones(c), m)
            out = ngm(q)
            assert np.all(out >= 0)
            assert out.sum() == pytest.approx(1.0, abs=1e-9)

    def test_zero_entry_suppresses_the_class_without_breaking_the_sum(self):
        members = np.array([[0.0, 1.0], [0.5, 0.5]])
        out = ngm(members)
        assert out[0] < 1e-100
        assert out.sum() == pytest.approx(1.0, abs=1e-9)

    def test_weight_validation(self):
        members = np.array([[0.5, 0.5], [0.5, 0.5]])
        with pytest.raises(ValueError):
            ngm(members, np.array([0.7, 0.7]))


class TestGmPoisson:
    def test_identical_members_unchanged(self):
        lam = np.array([[2.0, 5.0], [1.0, 3.0]])
        assert_allclose(gm_poisson(np.stack([lam, lam])), lam, rtol=1e-12)

    def test_pairwise_geometric_mean(self):
        members = np.array([[[1.0]], [[4.0]]])
        assert_allclose(gm_poisson(members), [[2.0]], rtol=1e-12)

    def test_homogeneous_in_scale(self):
        rng = np.random.default_rng(1)
        members = rng.uniform(0.5, 9.0, (3, 4, 2))
        assert_allclose(gm_poisson(3.0 * members), 3.0 * gm_poisson(members),
                        rtol=1e-12)

    def test_no_normalization_applied(self):
        members = np.array([[[10.0, 10.0]], [[10.0, 10.0]]])
        assert_allclose(gm_poisson(members), [[10.0, 10.0]])

    def test_never_exceeds_arithmetic_mean(self):
        rng = np.random.default_rng(2)
        for _ in range(300):
            m = rng.integers(1, 9)
            members = rng.uniform(1e-6, 50.0, (m, 3, 2))
            w = rng.dirichlet(np.ones(m))
            gm = gm_poisson(members, w)
            am = np.einsum("m,mcw->cw", w, members)
            assert np.all(gm <= am + 1e-12)

    def test_below_floor_entries_rejected(self):
        with pytest.raises(ValueError):
            gm_poisson(np.zeros((1, 1, 1)))


class TestAmCombine:
    def test_single_member_single_window_argmax(self):
        res = am_combine(np.array([[[1.0], [5.0], [2.0]]]))
        assert res.predicted == 1

    def test_mean_with_tie_break(self):
        members = np.array([[[1.0], [3.0]], [[3.0], [1.0]]])
        res = am_combine(members)
        assert_allclose(res.scores, [2.0, 2.0])
        assert res.predicted == 0

    def test_mean_runs_over_members_and_windows(self):
        members = np.array([[[1.0, 3.0], [0.0, 0.0]], [[5.0, 7.0], [0.0, 0.0]]])
        res = am_combine(members)
        assert_allclose(res.scores, [4.0, 0.0])

    def test_all_zero_degenerate(self):
        res = am_combine(np.zeros((2, 3, 1)))
        assert res.predicted == 0
        assert res.degenerate


class TestMvCombine:
    def test_unanimous(self):
        assert mv_combine(np.array([[2], [2], [2]]), n_classes=3) == 2

    def test_majority_across_windows_of_one_member(self):
        assert mv_combine(np.array([[0, 1, 1]]), n_classes=2) == 1

    def test_two_member_tie_breaks_low(self):
        assert mv_combine(np.array([[0], [1]]), n_classes=2) == 0

    def test_votes_are_nested_members_first(self):
        # Per-member majorities are (0, 1, 1) -> 1. A flat vote over all nine
        # window votes would give 0 (five zeros vs four ones).
        votes = np.array([[0, 0, 1], [1, 1, 0], [1, 1, 0]])
        assert mv_combine(votes, n_classes=2) == 1

    def test_out_of_range_votes_rejected(self):
        with pytest.raises(ValueError):
            mv_combine(np.array([[5]]), n_classes=3)


class TestAmMvCombine:
    def test_single_window_equals_am_prediction(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            members = rng.uniform(0, 10, (rng.integers(1, 6), rng.integers(2, 7), 1))
            assert am_mv_combine(members).predicted == am_combine(members).predicted

    def test_majority_of_window_winners(self):
        # Window winners across the mean rates: classes 2, 2, 5 -> majority 2.
        members = np.zeros((1, 6, 3))
        members[0, 2, 0] = 4.0
        members[0, 2, 1] = 4.0
        members[0, 5, 2] = 4.0
        assert am_mv_combine(members).predicted == 2

    def test_can_disagree_with_am_when_one_window_dominates(self):
        # One member's huge count wins window 0 for class 0 and drags the
        # all-window mean with it; windows 1 and 2 still vote class 1.
        members = np.array([
            [[100.0, 0.0, 0.0], [0.0, 1.0, 1.0]],
            [[0.0, 0.5, 0.5], [0.0, 2.0, 2.0]],
        ])
        assert am_combine(members).predicted == 0
        assert am_mv_combine(members).predicted == 1


class TestPermutationEquivariance:
    def test_all_combiners_commute_with_class_relabeling(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            m, c, w = rng.integers(1, 5), rng.integers(2, 6), rng.integers(1, 4)
            rates = rng.uniform(0.1, 10.0, (m, c, w))
            probs = rng.dirichlet(np.ones(c), m)
            perm = rng.permutation(c)

            assert_allclose(ngm(probs)[perm], ngm(probs[:, perm]), rtol=1e-9)
            assert_allclose(gm_poisson(rates)[perm], gm_poisson(rates[:, perm]),
                            rtol=1e-9)
            assert_allclose(am_combine(rates).scores[perm],
                            am_combine(rates[:, perm]).scores, rtol=1e-12)

            # Predictions map through the permutation when the winner is unique.
            scores = am_combine(rates).scores
            if (scores == scores.max()).sum() == 1:
                assert perm[am_combine(rates[:, perm]).predicted] == \
                    am_combine(rates).predicted
