"""Error decompositions for ensembles, verified as exact identities.

For an ensemble built by (normalized) weighted geometric combination, the
divergence between a target and the ensemble splits exactly into the weighted
average member divergence minus a diversity term:

    ensemble_error = avg_member_error - ambiguity

with ambiguity >= 0 because each of its terms is itself a divergence. Three
variants are provided: squared error for weighted-mean regression ensembles,
categorical KL for probability ensembles fused by ``ngm``, and Poisson KL for
rate ensembles fused by ``gm_poisson``. Each returns an AdReport carrying the
three terms and the floating-point residual of the identity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

from .core import (
    LAMBDA_FLOOR,
    PROB_FLOOR,
    check_member_weights,
    check_probabilities,
)
from .combine import gm_poisson, ngm


@dataclass(frozen=True)
class AdReport:
    """The three decomposition terms and the identity residual.

    residual = |ensemble_error - (avg_member_error - ambiguity)|; it measures
    floating-point error only, since the identity is exact algebraically.
    """

    ensemble_error: float
    avg_member_error: float
    ambiguity: float
    residual: float


def _report(ensemble_error: float, avg_member_error: float,
            ambiguity: float) -> AdReport:
    residual = abs(ensemble_error - (avg_member_error - ambiguity))
    return AdReport(ensemble_error=float(ensemble_error),
                    avg_member_error=float(avg_member_error),
                    ambiguity=float(ambiguity),
                    residual=float(residual))


def ad_regression(y: float, preds, weights=None) -> AdReport:
    """Squared-error decomposition for a weighted-mean regression ensemble."""
    f = np.asarray(preds, dtype=np.float64)
    if f.ndim != 1 or f.size < 1:
        raise ValueError("preds must be a non-empty 1-D array")
    w = check_member_weights(weights, f.size)
    f_bar = float(w @ f)
    ensemble = (y - f_bar) ** 2
    avg_member = float(w @ (y - f) ** 2)
    ambiguity = float(w @ (f_bar - f) ** 2)
    return _report(ensemble, avg_member, ambiguity)


def kl_categorical(p, q) -> float:
    """KL divergence sum_c p_c ln(p_c / q_c) in nats.

    q is floored at 1e-300; terms with p_c = 0 contribute 0.
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValueError("p and q must have the same shape")
    q = np.maximum(q, PROB_FLOOR)
    return float(np.sum(xlogy(p, p) - xlogy(p, q)))


def ad_categorical(target, members, weights=None) -> AdReport:
    """Categorical KL decomposition for an ngm-combined probability ensemble.

    target: length-C probability vector; members: (M, C) rows of probability
    vectors. The ensemble distribution is ngm(members, weights); the identity
    ensemble = avg_member - ambiguity is exact for that combiner.
    """
    p = check_probabilities(np.asarray(target, dtype=np.float64))
    q = np.asarray(members, dtype=np.float64)
    if q.ndim != 2:
        raise ValueError(f"members must be (M, C), got shape {q.shape}")
    if q.shape[1] != p.size:
        raise ValueError("target and members disagree on the class count")
    w = check_member_weights(weights, q.shape[0])
    q_bar = ngm(q, w)
    ensemble = kl_categorical(p, q_bar)
    avg_member = float(sum(wi * kl_categorical(p, qi) for wi, qi in zip(w, q)))
    ambiguity = float(sum(wi * kl_categorical(q_bar, qi) for wi, qi in zip(w, q)))
    return _report(ensemble, avg_member, ambiguity)


def kl_poisson(lam, lam_hat):
    """Poisson KL rate divergence lam*ln(lam/lam_hat) + lam_hat - lam (nats).

    Entrywise on arrays. lam = 0 returns lam_hat (the 0*ln(0) = 0 convention);
    lam_hat must be at or above the Poisson-mean floor.
    """
    lam = np.asarray(lam, dtype=np.float64)
    lam_hat = np.asarray(lam_hat, dtype=np.float64)
    if np.any(lam < 0):
        raise ValueError("target means must be >= 0")
    if np.any(lam_hat < LAMBDA_FLOOR):
        raise ValueError(f"estimated means below the floor {LAMBDA_FLOOR}")
    out = xlogy(lam, lam / lam_hat) + lam_hat - lam
    return out if out.ndim else float(out)


def ad_poisson(target, members, weights=None) -> AdReport:
    """Poisson KL decomposition for a gm_poisson-combined rate ensemble.

    target: (C, W) true means (>= 0; zeros follow the 0*ln(0) = 0 convention,
    callers that floor targets first are also fine); members: (M, C, W) with
    entries >= the Poisson-mean floor. All terms are summed over classes and
    windows. Exact for the geometric-mean combiner with the same weights.
    """
    lam = np.asarray(target, dtype=np.float64)
    members = np.asarray(members, dtype=np.float64)
    if members.ndim != 3:
        raise ValueError(f"members must be (M, C, W), got shape {members.shape}")
    if lam.shape != members.shape[1:]:
        raise ValueError("target and members disagree on (classes, windows)")
    w = check_member_weights(weights, members.shape[0])
    lam_bar = gm_poisson(members, w)
    ensemble = float(np.sum(kl_poisson(lam, lam_bar)))
    avg_member = float(sum(
        wi * np.sum(kl_poisson(lam, mi)) for wi, mi in zip(w, members)
    ))
    ambiguity = float(sum(
        wi * np.sum(kl_poisson(lam_bar, mi)) for wi, mi in zip(w, members)
    ))
    return _report(ensemble, avg_member, ambiguity)
