"""Plasticity rule: weight updates, traces, threshold adaptation."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from snnens.stdp import StdpParams, apply_stdp_on_postspike, stdp_delta, update_trace

P = StdpParams()


class TestStdpParams:
    def test_defaults(self):
        assert (P.eta, P.x_tar, P.w_max, P.mu) == (0.01, 0.4, 1.0, 1.0)
        assert (P.tau_trace_ms, P.theta_plus_mv, P.tau_theta_ms) == (20.0, 0.05, 1e7)

    @pytest.mark.parametrize(
        "kw",
        [dict(eta=-0.1), dict(x_tar=-1.0), dict(w_max=0.0), dict(mu=0.0),
         dict(mu=1.5), dict(tau_trace_ms=0.0), dict(theta_plus_mv=-0.1)],
    )
    def test_invalid_params_rejected(self, kw):
        with pytest.raises(ValueError):
            StdpParams(**kw)


class TestStdpDelta:
    def test_zero_at_target_trace(self):
        assert stdp_delta(0.5, P.x_tar, P) == 0.0

    def test_zero_at_weight_ceiling(self):
        assert stdp_delta(P.w_max, 1.0, P) == 0.0

    def test_direct_substitution(self):
        # 0.01 * (1.0 - 0.4) * (1.0 - 0.5)^1
        assert stdp_delta(0.5, 1.0, P) == pytest.approx(0.003, rel=1e-12)

    def test_depression_below_target(self):
        assert stdp_delta(0.5, 0.0, P) < 0

    def test_monotone_decreasing_in_weight(self):
        w = np.linspace(0.0, 1.0, 50)
        d = stdp_delta(w, 1.0, P)
        assert np.all(np.diff(d) < 0)

    def test_vectorized_matches_scalar(self):
        w = np.array([0.1, 0.6, 0.9])
        out = stdp_delta(w, 0.8, P)
        assert_allclose(out, [stdp_delta(float(x), 0.8, P) for x in w])

    def test_fractional_mu(self):
        p = StdpParams(mu=0.5)
        assert stdp_delta(0.75, 1.0, p) == pytest.approx(0.01 * 0.6 * 0.5)


class TestUpdateTrace:
    def test_exponential_decay(self):
        assert update_trace(1.0, 20.0, 20.0, False) == pytest.approx(
            math.exp(-1.0), rel=1e-12
        )

    def test_spike_increments_from_rest(self):
        assert update_trace(0.0, 1.0, 20.0, True) == 1.0

    def test_back_to_back_spikes_approach_two(self):
        x = update_trace(0.0, 1e-9, 20.0, True)
        x = update_trace(x, 1e-9, 20.0, True)
        assert x == pytest.approx(2.0, abs=1e-9)

    def test_multi_step_decay_matches_closed_form(self):
        x = 1.0
        for _ in range(40):
            x = update_trace(x, 0.5, 20.0, False)
        assert abs(x - math.exp(-20.0 / 20.0)) < 1e-12

    def test_vectorized_spike_mask(self):
        x = update_trace(np.zeros(3), 1.0, 20.0, np.array([True, False, True]))
        assert_array_equal(x, [1.0, 0.0, 1.0])

    def test_rejects_nonpositive_dt(self):
        with pytest.raises(ValueError):
            update_trace(1.0, 0.0, 20.0, False)


class TestApplyStdpOnPostspike:
    def test_traces_at_target_leave_weights_unchanged(self):
        w = np.full((4, 2), 0.5)
        theta = np.zeros(2)
        apply_stdp_on_postspike(w, theta, np.array([0, 1]), np.full(4, P.x_tar), P)
        assert_array_equal(w, np.full((4, 2), 0.5))
        assert_allclose(theta, [P.theta_plus_mv] * 2)

    def test_only_active_synapse_grows(self):
        p = StdpParams(x_tar=0.0)
        w = np.full((3, 1), 0.5)
        theta = np.zeros(1)
        apply_stdp_on_postspike(w, theta, np.array([0]),
                                np.array([1.0, 0.0, 0.0]), p)
        assert w[0, 0] > 0.5
        assert_array_equal(w[1:, 0], [0.5, 0.5])

    def test_non_spiking_columns_untouched(self):
        w = np.full((3, 4), 0.5)
        theta = np.zeros(4)
        apply_stdp_on_postspike(w, theta, np.array([2]), np.ones(3), P)
        assert_array_equal(w[:, [0, 1, 3]], np.full((3, 3), 0.5))
        assert w[0, 2] > 0.5
        assert_array_equal(theta, [0.0, 0.0, P.theta_plus_mv, 0.0])

    def test_empty_spike_set_is_a_no_op(self):
        w = np.full((2, 2), 0.3)
        theta = np.zeros(2)
        apply_stdp_on_postspike(w, theta, np.array([], dtype=np.int64),
                                np.ones(2), P)
        assert_array_equal(w, np.full((2, 2), 0.3))
        assert_array_equal(theta, np.zeros(2))

    @given(
        w0=st.floats(min_value=0.0, max_value=1.0),
        x=st.floats(min_value=0.0, max_value=10.0),
        mu=st.floats(min_value=0.05, max_value=1.0),
        eta=st.floats(min_value=0.0, max_value=5.0),
    )
    @settings(max_examples=300, deadline=None)
    def test_updated_weights_stay_in_the_box(self, w0, x, mu, eta):
        p = StdpParams(eta=eta, mu=mu)
        w = np.full((1, 1), w0)
        theta = np.zeros(1)
        apply_stdp_on_postspike(w, theta, np.array([0]), np.array([x]), p)
        assert 0.0 <= w[0, 0] <= p.w_max

    @given(x=st.floats(min_value=0.0, max_value=5.0))
    @settings(max_examples=200, deadline=None)
    def test_delta_sign_follows_trace_vs_target(self, x):
        d = stdp_delta(0.5, x, P)
        if x > P.x_tar:
            assert d > 0
        elif x < P.x_tar:
            assert d < 0
        else:
            assert d == 0
