"""Shared domain types for spike data and their validity checks.

Everything downstream (simulation, decoding, combination) exchanges the types
defined here: spike trains and records, decode-window layouts, and the plain
ndarray conventions for rate matrices, class probabilities, Poisson means, and
member weights. Numeric containers are bare float64 arrays validated by the
``check_*`` helpers rather than wrapper classes, so they compose directly with
numpy and scikit-learn code.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Floor applied when estimated rates are used as Poisson means; keeps KL terms
# and geometric means finite when a neuron was silent for a class.
LAMBDA_FLOOR = 1e-6

# Floor applied to probabilities inside geometric combination and KL; an exact
# zero would otherwise veto a class irreversibly through the product.
PROB_FLOOR = 1e-300


@dataclass(frozen=True)
class SpikeTrain:
    """Spike times of one neuron, in milliseconds, strictly ascending."""

    neuron_id: int
    times_ms: np.ndarray

    def __post_init__(self) -> None:
        times = np.asarray(self.times_ms, dtype=np.float64)
        object.__setattr__(self, "times_ms", times)
        if times.ndim != 1:
            raise ValueError("spike times must be a 1-D array")
        if self.neuron_id < 0:
            raise ValueError("neuron_id must be >= 0")

    def __len__(self) -> int:
        return int(self.times_ms.size)


@dataclass(frozen=True)
class SpikeRecord:
    """Output spike trains of one simulation trial.

    ``trains`` is dense: one entry per neuron, indexed 0..n_neurons-1, with
    empty arrays for silent neurons (never absent entries). ``label`` is None
    for unlabeled recordings.
    """

    example_id: str
    trial: int
    duration_ms: float
    label: int | None
    trains: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        object.__setattr__(
            self,
            "trains",
            tuple(np.asarray(t, dtype=np.float64).reshape(-1) for t in self.trains),
        )

    @property
    def n_neurons(self) -> int:
        return len(self.trains)

    def total_counts(self) -> np.ndarray:
        """Per-neuron spike counts over the whole interval."""
        return np.array([t.size for t in self.trains], dtype=np.float64)


@dataclass(frozen=True)
class WindowSpec:
    """Contiguous, non-overlapping, left-closed right-open decode windows.

    n_windows = floor(duration_ms / window_ms); spikes in a trailing remainder
    (when the duration is not a multiple of the window) are discarded so that
    all windows are identically sized.
    """

    window_ms: float
    duration_ms: float

    def __post_init__(self) -> None:
        if not (self.window_ms > 0 and math.isfinite(self.window_ms)):
            raise ValueError("window_ms must be positive and finite")
        if not (self.duration_ms > 0 and math.isfinite(self.duration_ms)):
            raise ValueError("duration_ms must be positive and finite")
        if self.n_windows < 1:
            raise ValueError("window_ms longer than duration_ms: no complete window")

    @property
    def n_windows(self) -> int:
        # Tiny epsilon so e.g. 350.0 / 0.35 style float residue cannot drop a
        # window that is exactly present.
        return int(self.duration_ms / self.window_ms + 1e-9)


def count_in_windows(times_ms: np.ndarray, windows: WindowSpec) -> np.ndarray:
    """Spike count per window for one train; trailing-remainder spikes dropped."""
    times = np.asarray(times_ms, dtype=np.float64)
    w = windows.n_windows
    if times.size == 0:
        return np.zeros(w, dtype=np.float64)
    idx = np.floor(times / windows.window_ms).astype(np.int64)
    idx = idx[(idx >= 0) & (idx < w)]
    return np.bincount(idx, minlength=w).astype(np.float64)


@dataclass(frozen=True)
class PopulationMap:
    """Assignment of each output neuron to the class it responds to most."""

    assignment: np.ndarray  # shape (n_neurons,), int class indices
    n_classes: int
    # Neurons that never spiked during assignment; parked on class 0.
    forced_default: tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        a = np.asarray(self.assignment, dtype=np.int64)
        object.__setattr__(self, "assignment", a)
        if a.ndim != 1:
            raise ValueError("assignment must be 1-D")
        if self.n_classes < 1:
            raise ValueError("n_classes must be >= 1")
        if a.size and (a.min() < 0 or a.max() >= self.n_classes):
            raise ValueError("assignment contains out-of-range class indices")

    @property
    def n_neurons(self) -> int:
        return int(self.assignment.size)

    def members(self, c: int) -> np.ndarray:
        """Neuron indices assigned to class ``c``."""
        return np.flatnonzero(self.assignment == c)

    def require_full(self) -> None:
        """Raise if any class has no member neuron (undecodable map)."""
        present = np.bincount(self.assignment, minlength=self.n_classes)
        missing = np.flatnonzero(present == 0)
        if missing.size:
            raise DecodeError(
                f"classes without member neurons: {missing.tolist()}"
            )


class DecodeError(ValueError):
    """A decode operation was asked to run on an undecodable configuration."""


class CombinationError(ValueError):
    """Ensemble combination could not produce a valid distribution."""


def check_rate_matrix(counts, n_neurons: int | None = None,
                      n_windows: int | None = None) -> np.ndarray:
    """Validate a (n_neurons, n_windows) matrix of mean spike counts."""
    r = np.asarray(counts, dtype=np.float64)
    if r.ndim != 2:
        raise ValueError(f"rate matrix must be 2-D, got shape {r.shape}")
    if n_neurons is not None and r.shape[0] != n_neurons:
        raise ValueError(f"expected {n_neurons} neurons, got {r.shape[0]}")
    if n_windows is not None and r.shape[1] != n_windows:
        raise ValueError(f"expected {n_windows} windows, got {r.shape[1]}")
    if not np.all(np.isfinite(r)):
        raise ValueError("rate matrix has non-finite entries")
    if np.any(r < 0):
        raise ValueError("rate matrix has negative entries")
    return r


def check_probabilities(p, n_classes: int | None = None, tol: float = 1e-9) -> np.ndarray:
    """Validate a length-C probability vector (entries >= 0, sums to 1)."""
    q = np.asarray(p, dtype=np.float64)
    if q.ndim != 1:
        raise ValueError(f"probability vector must be 1-D, got shape {q.shape}")
    if n_classes is not None and q.size != n_classes:
        raise ValueError(f"expected {n_classes} classes, got {q.size}")
    if not np.all(np.isfinite(q)):
        raise ValueError("probabilities have non-finite entries")
    if np.any(q < 0):
        raise ValueError("probabilities have negative entries")
    if abs(float(q.sum()) - 1.0) > tol:
        raise ValueError(f"probabilities sum to {q.sum()!r}, not 1")
    return q


def check_poisson_means(lam, floor: float = LAMBDA_FLOOR) -> np.ndarray:
    """Validate a (n_classes, n_windows) matrix of Poisson means >= floor."""
    m = np.asarray(lam, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"Poisson means must be 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("Poisson means have non-finite entries")
    if np.any(m < floor):
        raise ValueError(f"Poisson means below the floor {floor}")
    return m


def check_member_weights(weights, n_members: int, tol: float = 1e-12) -> np.ndarray:
    """Validate ensemble member weights (>= 0, sum to 1); None means uniform."""
    if weights is None:
        return np.full(n_members, 1.0 / n_members)
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (n_members,):
        raise ValueError(f"expected {n_members} member weights, got shape {w.shape}")
    if not np.all(np.isfinite(w)):
        raise ValueError("member weights have non-finite entries")
    if np.any(w < 0):
        raise ValueError("member weights must be >= 0")
    if abs(float(w.sum()) - 1.0) > tol:
        raise ValueError(f"member weights sum to {w.sum()!r}, not 1")
    return w


def floor_rates(x, floor: float = LAMBDA_FLOOR) -> np.ndarray:
    """Clip rate entries up to the Poisson-mean floor."""
    return np.maximum(np.asarray(x, dtype=np.float64), floor)


def validate_record(record: SpikeRecord) -> list[str]:
    """Return every invariant violation found in ``record`` (empty list = ok).

    Diagnostic only: never raises. Checked invariants: positive duration,
    non-negative trial index, per-train 1-D float times that are strictly
    ascending and inside [0, duration_ms], and finite values throughout.
    """
    violations: list[str] = []
    if not (record.duration_ms > 0 and math.isfinite(record.duration_ms)):
        violations.append(f"duration_ms {record.duration_ms!r} not positive and finite")
    if record.trial < 0:
        violations.append(f"trial index {record.trial} negative")
    if record.label is not None and record.label < 0:
        violations.append(f"label {record.label} negative")
    for j, times in enumerate(record.trains):
        if times.size == 0:
            continue
        if not np.all(np.isfinite(times)):
            violations.append(f"neuron {j}: non-finite spike time")
            continue
        if np.any(np.diff(times) <= 0):
            violations.append(f"neuron {j}: times not strictly ascending")
        if times[0] < 0 or (
            math.isfinite(record.duration_ms) and times[-1] > record.duration_ms
        ):
            violations.append(f"neuron {j}: time out of range [0, duration_ms]")
    return violations
