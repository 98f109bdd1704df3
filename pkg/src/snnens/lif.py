"""Conductance-based leaky integrate-and-fire neurons and network simulation.

The membrane equation integrated here is

    tau_m * dv/dt = (v_rest - v) + g_e * (E_exc - v) + g_i * (E_inh - v)

with dimensionless synaptic conductances g_e, g_i that decay exponentially
(tau_ge, tau_gi) and jump by the synaptic weight when a spike arrives.
Integration uses the exact exponential update for conductances and explicit
Euler for the membrane, default dt 0.5 ms. A spike resets v to v_reset and
opens an absolute refractory window tau_ref during which the membrane is
clamped while conductances keep evolving.

The network topology is the three-layer winner-take-all circuit: an input
layer of Poisson spike sources feeds all-to-all plastic weights into an
excitatory layer; each excitatory neuron drives one inhibitory partner
through a strong static one-to-one weight, and each inhibitory neuron
laterally inhibits every excitatory neuron except its partner. Spikes between
layers propagate with a one-step delay to avoid same-step causality cycles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .core import SpikeRecord, SpikeTrain
from .stdp import StdpParams, apply_stdp_on_postspike


class IntegrationError(RuntimeError):
    """Non-finite membrane state encountered during integration."""


@dataclass(frozen=True)
class LifParams:
    """Single-neuron parameters. Potentials in mV, time constants in ms."""

    tau_m_ms: float = 100.0
    v_rest_mv: float = -65.0
    v_reset_mv: float = -65.0
    v_th_mv: float = -52.0
    e_exc_mv: float = 0.0
    e_inh_mv: float = -100.0
    tau_ge_ms: float = 1.0
    tau_gi_ms: float = 2.0
    tau_ref_ms: float = 5.0

    def __post_init__(self) -> None:
        if not (self.e_inh_mv <= self.v_reset_mv <= self.v_rest_mv
                < self.v_th_mv <= self.e_exc_mv):
            raise ValueError(
                "potentials must satisfy E_inh <= v_reset <= v_rest < v_th <= E_exc"
            )
        for name in ("tau_m_ms", "tau_ge_ms", "tau_gi_ms", "tau_ref_ms"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")

    @staticmethod
    def excitatory_defaults() -> "LifParams":
        return LifParams()

    @staticmethod
    def inhibitory_defaults() -> "LifParams":
        # Faster membrane and shorter refractory period than the excitatory
        # layer; the inhibitory pool must react within the lateral loop delay.
        return LifParams(tau_m_ms=10.0, tau_ref_ms=2.0)


@dataclass(frozen=True)
class NeuronState:
    v_mv: float
    g_e: float = 0.0
    g_i: float = 0.0
    refractory_remaining_ms: float = 0.0

    def __post_init__(self) -> None:
        if self.g_e < 0 or self.g_i < 0:
            raise ValueError("conductances must be >= 0")
        if self.refractory_remaining_ms < 0:
            raise ValueError("refractory_remaining_ms must be >= 0")


def resting_state(params: LifParams) -> NeuronState:
    return NeuronState(v_mv=params.v_rest_mv)


def step_neuron(state: NeuronState, params: LifParams, dt_ms: float,
                exc_in: float = 0.0, inh_in: float = 0.0,
                theta_mv: float = 0.0) -> tuple[NeuronState, bool]:
    """Advance one neuron by one step; returns (new state, spiked).

    Order within the step: conductances are incremented by the arriving input
    and decayed exponentially; then, unless refractory, the membrane advances
    one explicit-Euler step and is compared against v_th + theta. A crossing
    resets v to v_reset and arms the refractory timer. During the refractory
    window v stays clamped at v_reset while input still feeds and decays the
    conductances.
    """
    if dt_ms <= 0:
        raise ValueError("dt_ms must be > 0")
    if exc_in < 0 or inh_in < 0:
        raise ValueError("conductance increments must be >= 0")
    g_e = (state.g_e + exc_in) * math.exp(-dt_ms / params.tau_ge_ms)
    g_i = (state.g_i + inh_in) * math.exp(-dt_ms / params.tau_gi_ms)
    spiked = False
    if state.refractory_remaining_ms > 0:
        v = params.v_reset_mv
        refrac = max(0.0, state.refractory_remaining_ms - dt_ms)
    else:
        v = state.v_mv + (dt_ms / params.tau_m_ms) * (
            (params.v_rest_mv - state.v_mv)
            + g_e * (params.e_exc_mv - state.v_mv)
            + g_i * (params.e_inh_mv - state.v_mv)
        )
        v = max(v, params.e_inh_mv)
        refrac = 0.0
        if v >= params.v_th_mv + theta_mv:
            spiked = True
            v = params.v_reset_mv
            refrac = params.tau_ref_ms
    if not math.isfinite(v):
        raise IntegrationError("membrane potential became non-finite")
    return replace(state, v_mv=v, g_e=g_e, g_i=g_i,
                   refractory_remaining_ms=refrac), spiked


def poisson_encode(intensities, max_rate_hz: float, duration_ms: float,
                   seed) -> list[SpikeTrain]:
    """Homogeneous Poisson spike trains, one per input value.

    Each input value in [0, 255] emits spikes at rate
    value / 255 * max_rate_hz over [0, duration_ms). Deterministic given the
    seed (int, SeedSequence, or Generator).
    """
    x = np.asarray(intensities, dtype=np.float64).reshape(-1)
    if np.any(x < 0) or np.any(x > 255):
        raise ValueError("intensities must lie in [0, 255]")
    if max_rate_hz <= 0:
        raise ValueError("max_rate_hz must be > 0")
    if duration_ms <= 0:
        raise ValueError("duration_ms must be > 0")
    rng = np.random.default_rng(seed)
    lam = x / 255.0 * max_rate_hz * (duration_ms / 1000.0)
    counts = rng.poisson(lam)
    trains: list[SpikeTrain] = []
    for i, n in enumerate(counts):
        if n == 0:
            trains.append(SpikeTrain(neuron_id=i, times_ms=np.empty(0)))
            continue
        # np.unique sorts and drops exact float collisions (measure-zero), so
        # the strictly-ascending invariant holds unconditionally.
        times = np.unique(rng.uniform(0.0, duration_ms, size=int(n)))
        trains.append(SpikeTrain(neuron_id=i, times_ms=times))
    return trains


@dataclass
class DiehlCookNetwork:
    """Three-layer winner-take-all network state.

    Persistent state is the plastic input->excitatory weight matrix and the
    per-excitatory adaptive threshold offsets theta; membrane variables are
    scratch state re-initialized at rest for every presentation, so results
    never depend on presentation order.
    """

    n_input: int
    n_exc: int
    w_input_exc: np.ndarray          # (n_input, n_exc), in [0, w_max]
    w_exc_inh: float                 # static one-to-one drive
    w_inh_exc: float                 # static lateral inhibition weight
    theta_mv: np.ndarray             # (n_exc,), >= 0
    exc_params: LifParams = field(default_factory=LifParams.excitatory_defaults)
    inh_params: LifParams = field(default_factory=LifParams.inhibitory_defaults)
    w_max: float = 1.0

    @property
    def n_inh(self) -> int:
        return self.n_exc

    def copy(self) -> "DiehlCookNetwork":
        return DiehlCookNetwork(
            n_input=self.n_input, n_exc=self.n_exc,
            w_input_exc=self.w_input_exc.copy(), w_exc_inh=self.w_exc_inh,
            w_inh_exc=self.w_inh_exc, theta_mv=self.theta_mv.copy(),
            exc_params=self.exc_params, inh_params=self.inh_params,
            w_max=self.w_max,
        )


def threshold_drive(params: LifParams) -> float:
    """Smallest constant excitatory conductance whose fixed point reaches v_th."""
    return (params.v_rest_mv - params.v_th_mv) / (params.v_th_mv - params.e_exc_mv)


def impulse_threshold_drive(params: LifParams, dt_ms: float = 0.5) -> float:
    """Smallest single-step conductance impulse that fires a resting neuron.

    Unlike a held conductance, a spike-delivered increment decays with tau_ge
    while the membrane is still integrating, so the impulse threshold is well
    above ``threshold_drive``. Found by bisection with the actual discrete
    stepper so the answer honors the integrator, not an idealization.
    """
    horizon_steps = int(5.0 * max(params.tau_m_ms, params.tau_ge_ms) / dt_ms) + 1

    def fires(g0: float) -> bool:
        state = resting_state(params)
        for k in range(horizon_steps):
            state, spiked = step_neuron(state, params, dt_ms,
                                        exc_in=g0 if k == 0 else 0.0)
            if spiked:
                return True
        return False

    lo = threshold_drive(params)
    hi = lo
    for _ in range(60):
        if fires(hi):
            break
        hi *= 2.0
    else:
        raise IntegrationError("no finite impulse drive fires this neuron")
    for _ in range(50):
        mid = 0.5 * (lo + hi)
        if fires(mid):
            hi = mid
        else:
            lo = mid
    return hi


def build_diehl_cook(n_input: int, n_exc: int,
                     exc_params: LifParams | None = None,
                     inh_params: LifParams | None = None,
                     w_max: float = 1.0, init_seed=0,
                     w_exc_inh: float | None = None,
                     w_inh_exc: float = 1.0,
                     dt_ms: float = 0.5) -> DiehlCookNetwork:
    """Construct the network with fresh random plastic weights.

    Plastic weights are drawn uniformly from (0, 0.3 * w_max] so initial
    activity stays modest. The static one-to-one excitatory->inhibitory weight
    defaults to 10x the inhibitory impulse threshold drive (at dt_ms), which
    makes a single excitatory spike reliably fire its inhibitory partner;
    lateral inhibition defaults to a unit conductance weight. Both are
    overridable: dense, high-intensity inputs need stronger lateral inhibition
    for the winner-take-all competition to stay selective.
    """
    if n_input < 1 or n_exc < 1:
        raise ValueError("n_input and n_exc must be >= 1")
    exc_params = exc_params or LifParams.excitatory_defaults()
    inh_params = inh_params or LifParams.inhibitory_defaults()
    rng = np.random.default_rng(init_seed)
    # 1 - U[0,1) lands in (0, 1], keeping every initial weight strictly positive.
    w = (1.0 - rng.random((n_input, n_exc))) * (0.3 * w_max)
    return DiehlCookNetwork(
        n_input=n_input, n_exc=n_exc, w_input_exc=w,
        w_exc_inh=(10.0 * impulse_threshold_drive(inh_params, dt_ms)
                   if w_exc_inh is None else w_exc_inh),
        w_inh_exc=w_inh_exc,
        theta_mv=np.zeros(n_exc),
        exc_params=exc_params, inh_params=inh_params, w_max=w_max,
    )


def _input_schedule(input_trains, n_input: int, dt_ms: float,
                    n_steps: int) -> tuple[np.ndarray, np.ndarray]:
    """Flatten input trains into step-sorted (start offsets, neuron ids)."""
    ids_parts = []
    bins_parts = []
    for train in input_trains:
        t = train.times_ms
        if t.size == 0:
            continue
        b = np.floor(t / dt_ms).astype(np.int64)
        keep = (b >= 0) & (b < n_steps)
        if not np.all(keep):
            b = b[keep]
        ids_parts.append(np.full(b.size, train.neuron_id, dtype=np.int64))
        bins_parts.append(b)
    if not bins_parts:
        starts = np.zeros(n_steps + 1, dtype=np.int64)
        return starts, np.empty(0, dtype=np.int64)
    bins = np.concatenate(bins_parts)
    ids = np.concatenate(ids_parts)
    order = np.argsort(bins, kind="stable")
    bins = bins[order]
    ids = ids[order]
    starts = np.searchsorted(bins, np.arange(n_steps + 1))
    return starts, ids


def simulate(network: DiehlCookNetwork, input_trains, duration_ms: float,
             dt_ms: float = 0.5, plasticity: StdpParams | None = None,
             example_id: str = "", trial: int = 0) -> SpikeRecord:
    """Run one presentation and return the excitatory layer's spike record.

    Input spikes are binned to the step grid and delivered as excitatory
    conductance increments weighted by the plastic matrix; excitatory and
    inhibitory spikes propagate to the other layer with a one-step delay.
    Dynamic state starts at rest. Network state (weights, theta) is mutated
    only when ``plasticity`` is given. An excitatory threshold crossing during
    step k is recorded at time k * dt_ms.
    """
    if len(input_trains) != network.n_input:
        raise ValueError(
            f"expected {network.n_input} input trains, got {len(input_trains)}"
        )
    if dt_ms <= 0 or duration_ms <= 0:
        raise ValueError("dt_ms and duration_ms must be > 0")
    n_steps = int(duration_ms / dt_ms + 1e-9)
    ep, ip = network.exc_params, network.inh_params
    n_exc = network.n_exc

    d_ge_e = math.exp(-dt_ms / ep.tau_ge_ms)
    d_gi_e = math.exp(-dt_ms / ep.tau_gi_ms)
    d_ge_i = math.exp(-dt_ms / ip.tau_ge_ms)
    d_gi_i = math.exp(-dt_ms / ip.tau_gi_ms)
    k_exc = dt_ms / ep.tau_m_ms
    k_inh = dt_ms / ip.tau_m_ms

    v_e = np.full(n_exc, ep.v_rest_mv)
    ge_e = np.zeros(n_exc)
    gi_e = np.zeros(n_exc)
    ref_e = np.zeros(n_exc)
    v_i = np.full(n_exc, ip.v_rest_mv)
    ge_i = np.zeros(n_exc)
    gi_i = np.zeros(n_exc)
    ref_i = np.zeros(n_exc)

    starts, ids = _input_schedule(input_trains, network.n_input, dt_ms, n_steps)
    w = network.w_input_exc
    theta = network.theta_mv

    train_on = plasticity is not None
    if train_on:
        trace_decay = math.exp(-dt_ms / plasticity.tau_trace_ms)
        theta_decay = math.exp(-dt_ms / plasticity.tau_theta_ms)
        x_pre = np.zeros(network.n_input)

    prev_exc = np.empty(0, dtype=np.int64)   # exc spikes from the last step
    prev_inh_total = 0.0                     # inh spike count from last step
    prev_inh_mask = np.zeros(n_exc)          # 1.0 where the partner spiked
    spike_steps: list[np.ndarray] = []
    spike_ids: list[np.ndarray] = []

    for k in range(n_steps):
        lo, hi = starts[k], starts[k + 1]
        if train_on:
            x_pre *= trace_decay
        if hi > lo:
            in_ids = ids[lo:hi]
            ge_e += w[in_ids].sum(axis=0)
            if train_on:
                np.add.at(x_pre, in_ids, 1.0)
        ge_e *= d_ge_e
        # Lateral inhibition from last step's inhibitory spikes, partner excluded.
        if prev_inh_total:
            gi_e += network.w_inh_exc * (prev_inh_total - prev_inh_mask)
        gi_e *= d_gi_e

        frozen = ref_e > 0
        v_e += k_exc * ((ep.v_rest_mv - v_e) + ge_e * (ep.e_exc_mv - v_e)
                        + gi_e * (ep.e_inh_mv - v_e))
        np.maximum(v_e, ep.e_inh_mv, out=v_e)
        if frozen.any():
            v_e[frozen] = ep.v_reset_mv
            ref_e[frozen] -= dt_ms
            np.maximum(ref_e, 0.0, out=ref_e)
        spiked_e = np.flatnonzero((v_e >= ep.v_th_mv + theta) & ~frozen)
        if spiked_e.size:
            v_e[spiked_e] = ep.v_reset_mv
            ref_e[spiked_e] = ep.tau_ref_ms
            spike_steps.append(np.full(spiked_e.size, k, dtype=np.int64))
            spike_ids.append(spiked_e)
            if train_on:
                apply_stdp_on_postspike(w, theta, spiked_e, x_pre, plasticity)
        if train_on:
            theta *= theta_decay

        # Inhibitory layer: driven one-to-one by last step's excitatory spikes.
        if prev_exc.size:
            ge_i[prev_exc] += network.w_exc_inh
        ge_i *= d_ge_i
        gi_i *= d_gi_i
        frozen_i = ref_i > 0
        v_i += k_inh * ((ip.v_rest_mv - v_i) + ge_i * (ip.e_exc_mv - v_i)
                        + gi_i * (ip.e_inh_mv - v_i))
        np.maximum(v_i, ip.e_inh_mv, out=v_i)
        if frozen_i.any():
            v_i[frozen_i] = ip.v_reset_mv
            ref_i[frozen_i] -= dt_ms
            np.maximum(ref_i, 0.0, out=ref_i)
        spiked_i = (v_i >= ip.v_th_mv) & ~frozen_i
        n_spiked_i = int(np.count_nonzero(spiked_i))
        if n_spiked_i:
            v_i[spiked_i] = ip.v_reset_mv
            ref_i[spiked_i] = ip.tau_ref_ms

        if not (np.isfinite(v_e).all() and np.isfinite(v_i).all()):
            raise IntegrationError(f"non-finite membrane state at step {k}")

        prev_exc = spiked_e
        prev_inh_total = float(n_spiked_i)
        prev_inh_mask = spiked_i.astype(np.float64)

    if spike_ids:
        all_ids = np.concatenate(spike_ids)
        all_times = np.concatenate(spike_steps).astype(np.float64) * dt_ms
    else:
        all_ids = np.empty(0, dtype=np.int64)
        all_times = np.empty(0)
    trains = tuple(all_times[all_ids == j] for j in range(n_exc))
    return SpikeRecord(example_id=example_id, trial=trial,
                       duration_ms=float(duration_ms), label=None, trains=trains)
