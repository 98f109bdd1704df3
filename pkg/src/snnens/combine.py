"""Ensemble combination rules.

Two geometric combiners carry the error guarantee: ``ngm`` fuses class
probability vectors into a normalized weighted geometric mean, and
``gm_poisson`` fuses per-class per-window Poisson means into their weighted
geometric mean (no normalization; means are unconstrained). The baselines
``am_combine``, ``mv_combine``, and ``am_mv_combine`` average or vote without
any guarantee. All ties break toward the lowest class index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    CombinationError,
    LAMBDA_FLOOR,
    PROB_FLOOR,
    check_member_weights,
    check_probabilities,
)


@dataclass(frozen=True)
class CombinedScores:
    """Per-class scores plus the argmax prediction (ties -> lowest index)."""

    scores: np.ndarray
    predicted: int
    degenerate: bool = False


def ngm(members, weights=None) -> np.ndarray:
    """Normalized weighted geometric mean of M probability vectors.

    members: array-like (M, C), each row a probability vector.
    weights: length-M, >= 0, summing to 1; None means uniform.

    Entries are floored at 1e-300 before the product so a finite-arithmetic
    zero cannot irreversibly veto a class; the result is renormalized over
    classes. Computed in log space.
    """
    q = np.asarray(members, dtype=np.float64)
    if q.ndim != 2:
        raise ValueError(f"members must be (M, C), got shape {q.shape}")
    m, _ = q.shape
    if m < 1:
        raise ValueError("need at least one member")
    for row in q:
        check_probabilities(row)
    w = check_member_weights(weights, m)
    log_q = np.log(np.maximum(q, PROB_FLOOR))
    log_score = w @ log_q
    shifted = log_score - log_score.max()
    unnorm = np.exp(shifted)
    z = unnorm.sum()
    if not (np.isfinite(z) and z > 0):
        raise CombinationError("all classes zeroed in the geometric combination")
    return unnorm / z


def gm_poisson(members, weights=None) -> np.ndarray:
    """Entrywise weighted geometric mean of M Poisson-mean matrices.

    members: array-like (M, C, W) with entries >= the Poisson-mean floor.
    Returns a (C, W) matrix; no normalization is applied.
    """
    lam = np.asarray(members, dtype=np.float64)
    if lam.ndim != 3:
        raise ValueError(f"members must be (M, C, W), got shape {lam.shape}")
    m = lam.shape[0]
    if m < 1:
        raise ValueError("need at least one member")
    if not np.all(np.isfinite(lam)):
        raise ValueError("Poisson means have non-finite entries")
    if np.any(lam < LAMBDA_FLOOR):
        raise ValueError(f"Poisson means below the floor {LAMBDA_FLOOR}")
    w = check_member_weights(weights, m)
    return np.exp(np.tensordot(w, np.log(lam), axes=1))


def am_combine(member_rates) -> CombinedScores:
    """Arithmetic-mean combiner: score(c) = mean over members and windows."""
    r = np.asarray(member_rates, dtype=np.float64)
    if r.ndim != 3:
        raise ValueError(f"member rates must be (M, C, W), got shape {r.shape}")
    if np.any(r < 0) or not np.all(np.isfinite(r)):
        raise ValueError("member rates must be finite and >= 0")
    scores = r.mean(axis=(0, 2))
    degenerate = bool(np.all(scores == 0.0))
    return CombinedScores(scores=scores, predicted=int(np.argmax(scores)),
                          degenerate=degenerate)


def _majority(votes: np.ndarray, n_classes: int) -> int:
    counts = np.bincount(votes, minlength=n_classes)
    return int(np.argmax(counts))  # first max = lowest class index


def mv_combine(member_votes, n_classes: int) -> int:
    """Majority-vote combiner over per-member per-window class votes.

    member_votes: (M, W) integer class indices. Each member is first collapsed
    to one vote by majority over its windows, then the members vote; every tie
    breaks toward the lowest class index.
    """
    v = np.asarray(member_votes, dtype=np.int64)
    if v.ndim != 2:
        raise ValueError(f"votes must be (M, W), got shape {v.shape}")
    if v.size and (v.min() < 0 or v.max() >= n_classes):
        raise ValueError("votes contain out-of-range class indices")
    per_member = np.array([_majority(row, n_classes) for row in v])
    return _majority(per_member, n_classes)


def am_mv_combine(member_rates) -> CombinedScores:
    """Mean rates over members per window, argmax per window, then vote.

    Returns the per-window vote winners in ``scores`` (as vote counts per
    class) with the majority-vote prediction.
    """
    r = np.asarray(member_rates, dtype=np.float64)
    if r.ndim != 3:
        raise ValueError(f"member rates must be (M, C, W), got shape {r.shape}")
    if np.any(r < 0) or not np.all(np.isfinite(r)):
        raise ValueError("member rates must be finite and >= 0")
    n_classes = r.shape[1]
    mean_rates = r.mean(axis=0)  # (C, W)
    votes = np.argmax(mean_rates, axis=0)  # per-window winner, lowest-tie
    counts = np.bincount(votes, minlength=n_classes).astype(np.float64)
    return CombinedScores(scores=counts, predicted=_majority(votes, n_classes),
                          degenerate=bool(np.all(mean_rates == 0.0)))
