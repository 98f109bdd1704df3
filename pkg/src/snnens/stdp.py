"""Trace-based plasticity rule and homeostatic threshold adaptation.

The weight update is applied when a postsynaptic (excitatory) neuron spikes:

    dw = eta * (x_pre - x_tar) * (w_max - w) ** mu

where x_pre is the presynaptic trace at that moment. Traces decay
exponentially and jump by +1 on each presynaptic spike. Synapses whose
presynaptic trace sits below the target x_tar are depressed (and eventually
disconnect at the 0 clamp); more active ones grow toward w_max. Each spike
also raises the neuron's adaptive threshold offset theta by theta_plus, which
decays with the (very long) time constant tau_theta, so chronically winning
neurons become harder to excite and the winner-take-all circuit stays
balanced.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class StdpParams:
    eta: float = 0.01           # learning rate
    x_tar: float = 0.4          # target presynaptic trace at a postsyn spike
    w_max: float = 1.0          # weight ceiling (and clamp range [0, w_max])
    mu: float = 1.0             # weight-dependence exponent, in (0, 1]
    tau_trace_ms: float = 20.0  # presynaptic trace decay constant
    theta_plus_mv: float = 0.05  # threshold bump per postsynaptic spike
    tau_theta_ms: float = 1e7   # threshold decay constant

    def __post_init__(self) -> None:
        if self.eta < 0:
            raise ValueError("eta must be >= 0")
        if self.x_tar < 0:
            raise ValueError("x_tar must be >= 0")
        if self.w_max <= 0:
            raise ValueError("w_max must be > 0")
        if not (0 < self.mu <= 1):
            raise ValueError("mu must be in (0, 1]")
        if self.tau_trace_ms <= 0 or self.tau_theta_ms <= 0:
            raise ValueError("time constants must be > 0")
        if self.theta_plus_mv < 0:
            raise ValueError("theta_plus_mv must be >= 0")


def stdp_delta(w, x_pre, p: StdpParams):
    """Raw weight change eta*(x_pre - x_tar)*(w_max - w)^mu (caller clamps)."""
    w = np.asarray(w, dtype=np.float64)
    base = p.w_max - w
    if p.mu == 1.0:
        dep = base
    else:
        dep = np.power(np.maximum(base, 0.0), p.mu)
    out = p.eta * (np.asarray(x_pre, dtype=np.float64) - p.x_tar) * dep
    return out if out.ndim else float(out)


def update_trace(x, dt_ms: float, tau_trace_ms: float, presyn_spiked):
    """Exponential trace decay over dt, then +1 for each presynaptic spike."""
    if dt_ms <= 0:
        raise ValueError("dt_ms must be > 0")
    x = np.asarray(x, dtype=np.float64)
    out = x * np.exp(-dt_ms / tau_trace_ms) + np.asarray(presyn_spiked, dtype=np.float64)
    return out if out.ndim else float(out)


def apply_stdp_on_postspike(w_input_exc: np.ndarray, theta_mv: np.ndarray,
                            spiked_exc: np.ndarray, x_pre: np.ndarray,
                            p: StdpParams) -> None:
    """Update, in place, the input weights and theta of just-spiked neurons.

    w_input_exc: (n_input, n_exc) plastic weights; theta_mv: (n_exc,) adaptive
    threshold offsets; spiked_exc: indices of excitatory neurons that spiked
    this step; x_pre: (n_input,) presynaptic traces. Weights are clamped to
    [0, w_max] after the update.
    """
    if spiked_exc.size == 0:
        return
    cols = w_input_exc[:, spiked_exc]
    cols += stdp_delta(cols, x_pre[:, None], p)
    np.clip(cols, 0.0, p.w_max, out=cols)
    w_input_exc[:, spiked_exc] = cols
    theta_mv[spiked_exc] += p.theta_plus_mv
