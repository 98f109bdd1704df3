"""Unsupervised training, recording, and class assignment for the network.

Training presents Poisson-encoded examples one at a time with plasticity
enabled; labels are never used during this phase. Assignment then presents
the training set with plasticity off and pins each excitatory neuron to the
class it responded to most, which is what turns the unsupervised network into
a classifier at decode time.

All randomness is seeded per (member_seed, phase, pass_or_trial, example), so
any processing order — including parallel execution — produces identical
results.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .core import PopulationMap, SpikeRecord
from .decode import assign_from_counts
from .lif import DiehlCookNetwork, poisson_encode, simulate
from .stdp import StdpParams

# Seed-derivation namespaces; distinct phases draw independent input noise.
_PHASE_TRAIN = 0
_PHASE_RECORD = 1


@dataclass(frozen=True)
class EncodeParams:
    """Poisson input encoding and integration settings."""

    max_rate_hz: float = 63.75   # rate for a 255-intensity input
    duration_ms: float = 350.0
    dt_ms: float = 0.5


def derived_rng(member_seed: int, phase: int, a: int, b: int) -> np.random.Generator:
    """Deterministic per-(member, phase, pass/trial, example) generator."""
    if member_seed < 0:
        raise ValueError("seeds must be >= 0")
    return np.random.default_rng(np.random.SeedSequence([member_seed, phase, a, b]))


def train_unsupervised(network: DiehlCookNetwork, images, stdp: StdpParams,
                       encode: EncodeParams, seed: int, passes: int = 1,
                       progress=None) -> DiehlCookNetwork:
    """Train in place over ``images`` (shape (N, n_input), values in [0,255]).

    Each example is Poisson-encoded with its own derived seed and simulated
    with plasticity on; weights and theta persist across examples. Returns the
    same (mutated) network.
    """
    x = np.asarray(images, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != network.n_input:
        raise ValueError(f"images must be (N, {network.n_input})")
    if x.shape[0] == 0:
        raise ValueError("dataset must be nonempty")
    for p in range(passes):
        for i in range(x.shape[0]):
            rng = derived_rng(seed, _PHASE_TRAIN, p, i)
            trains = poisson_encode(x[i], encode.max_rate_hz, encode.duration_ms, rng)
            simulate(network, trains, encode.duration_ms, encode.dt_ms,
                     plasticity=stdp, example_id=f"train-{i:05d}", trial=0)
            if progress is not None:
                progress(p, i)
    return network


def record_dataset(network: DiehlCookNetwork, images, labels, encode: EncodeParams,
                   seed: int, trials: int = 1, tag: str = "ex",
                   progress=None) -> list[SpikeRecord]:
    """Record responses with plasticity off: ``trials`` records per example.

    Input noise is drawn per (seed, trial, example), so records are
    reproducible independently of order. Labels may be None for an unlabeled
    split.
    """
    x = np.asarray(images, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != network.n_input:
        raise ValueError(f"images must be (N, {network.n_input})")
    if labels is not None and len(labels) != x.shape[0]:
        raise ValueError("labels length must match images")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    out: list[SpikeRecord] = []
    for i in range(x.shape[0]):
        label = None if labels is None else int(labels[i])
        for t in range(trials):
            rng = derived_rng(seed, _PHASE_RECORD, t, i)
            trains = poisson_encode(x[i], encode.max_rate_hz, encode.duration_ms, rng)
            rec = simulate(network, trains, encode.duration_ms, encode.dt_ms,
                           plasticity=None, example_id=f"{tag}-{i:05d}", trial=t)
            out.append(replace(rec, label=label))
            if progress is not None:
                progress(i, t)
    return out


def assign_classes(records, n_classes: int) -> tuple[PopulationMap, list[int]]:
    """Build a PopulationMap from labeled plasticity-off records."""
    recs = [r for r in records if r.label is not None]
    if not recs:
        raise ValueError("assignment needs labeled records")
    totals = np.stack([r.total_counts() for r in recs])
    y = np.array([r.label for r in recs], dtype=np.int64)
    return assign_from_counts(totals, y, n_classes)
