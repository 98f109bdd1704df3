"""Spike-train decoders: from spike counts to class scores and probabilities.

Five interpretation methods over windowed spike counts:

- highest mean firing rate over class populations (``hmfr_decode``),
- its normalized variant (``normalize``: softmax / activity / max),
- a naive-Bayes decoder assuming per-window Poisson counts (``fit_bayes`` /
  ``bayes_decode``),
- the population-vector ratio score (``fit_pv`` / ``pv_decode``),
- per-class geometric-mean rate fusion with per-window voting (``cfr_decode``).

The module-level functions carry the math over plain arrays; the sklearn-style
estimators at the bottom (``HmfrDecoder``, ``BayesDecoder``, ``PvDecoder``,
``CfrDecoder``) wrap them for stacked count tensors X of shape
(n_examples, n_neurons, n_windows). All ties break toward the lowest index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln
from sklearn.base import BaseEstimator, ClassifierMixin

from .core import (
    LAMBDA_FLOOR,
    PopulationMap,
    WindowSpec,
    check_probabilities,
    check_rate_matrix,
    count_in_windows,
    floor_rates,
)


class FitError(ValueError):
    """A decoder could not be fitted on the supplied training data."""


@dataclass(frozen=True)
class DecodeResult:
    """Class scores plus the argmax prediction.

    ``degenerate`` is set when the top score was not unique, i.e. the
    prediction fell to the lowest-index tie-break.
    """

    scores: np.ndarray
    predicted: int
    degenerate: bool = False


def _argmax_result(scores: np.ndarray) -> DecodeResult:
    predicted = int(np.argmax(scores))  # first max = lowest index
    degenerate = bool(np.count_nonzero(scores == scores[predicted]) > 1)
    return DecodeResult(scores=scores, predicted=predicted, degenerate=degenerate)


def estimate_rates(records, windows: WindowSpec) -> np.ndarray:
    """Mean spike count per neuron and window over K trials of one example.

    All records must agree on neuron count and duration. Returns a
    (n_neurons, n_windows) matrix.
    """
    recs = list(records)
    if not recs:
        raise ValueError("need at least one record")
    n_neurons = recs[0].n_neurons
    duration = recs[0].duration_ms
    out = np.zeros((n_neurons, windows.n_windows))
    for rec in recs:
        if rec.n_neurons != n_neurons or rec.duration_ms != duration:
            raise ValueError("records disagree on neuron count or duration")
        for j, times in enumerate(rec.trains):
            out[j] += count_in_windows(times, windows)
    out /= len(recs)
    return out


def hmfr_decode(rates, pop: PopulationMap) -> DecodeResult:
    """Score each class by the mean total count over its member neurons."""
    rates = check_rate_matrix(rates, n_neurons=pop.n_neurons)
    pop.require_full()
    totals = rates.sum(axis=1)
    scores = np.array([totals[pop.members(c)].mean() for c in range(pop.n_classes)])
    return _argmax_result(scores)


def normalize(scores, method: str = "softmax") -> np.ndarray:
    """Turn nonnegative class scores into a probability vector.

    softmax: e^{r_c} / sum; activity: r_c / sum r; max: r_c / r_max then
    renormalized to sum 1 (the raw ratios are available via ``max_ratios``).
    All-zero scores map to the uniform distribution under activity/max.
    """
    s = np.asarray(scores, dtype=np.float64)
    if s.ndim != 1 or s.size < 1:
        raise ValueError(f"scores must be a nonempty 1-D vector, got shape {s.shape}")
    if not np.all(np.isfinite(s)) or np.any(s < 0):
        raise ValueError("scores must be finite and >= 0")
    if method == "softmax":
        e = np.exp(s - s.max())
        return e / e.sum()
    if method == "activity":
        total = s.sum()
        if total == 0.0:
            return np.full(s.size, 1.0 / s.size)
        return s / total
    if method == "max":
        top = s.max()
        if top == 0.0:
            return np.full(s.size, 1.0 / s.size)
        ratios = s / top
        return ratios / ratios.sum()
    raise ValueError(f"unknown normalization method {method!r}")


def max_ratios(scores) -> np.ndarray:
    """Raw r_c / r_max diagnostic (does not sum to 1); all-zero input -> zeros."""
    s = np.asarray(scores, dtype=np.float64)
    top = s.max()
    if top == 0.0:
        return np.zeros(s.size)
    return s / top


@dataclass(frozen=True)
class BayesModel:
    """Fitted per-neuron per-class per-window Poisson mean counts.

    f has shape (n_neurons, n_classes, n_windows) with every entry at or above
    the Poisson-mean floor; priors is a length-n_classes distribution.
    """

    f: np.ndarray
    priors: np.ndarray

    def __post_init__(self) -> None:
        f = np.asarray(self.f, dtype=np.float64)
        object.__setattr__(self, "f", f)
        if f.ndim != 3:
            raise ValueError(f"f must be (J, C, W), got shape {f.shape}")
        if not np.all(np.isfinite(f)) or np.any(f < LAMBDA_FLOOR):
            raise ValueError(f"f entries must be finite and >= {LAMBDA_FLOOR}")
        object.__setattr__(
            self, "priors", check_probabilities(self.priors, n_classes=f.shape[1])
        )

    @property
    def n_neurons(self) -> int:
        return int(self.f.shape[0])

    @property
    def n_classes(self) -> int:
        return int(self.f.shape[1])

    @property
    def n_windows(self) -> int:
        return int(self.f.shape[2])


def fit_bayes_counts(counts, y, n_classes: int | None = None,
                     prior: str = "uniform") -> BayesModel:
    """Fit a BayesModel from a labeled (N, J, W) count tensor.

    f[j, c, w] = mean count of neuron j in window w over class-c examples,
    floored; priors are uniform or the empirical class frequencies.
    """
    x = np.asarray(counts, dtype=np.float64)
    yy = np.asarray(y, dtype=np.int64)
    if x.ndim != 3 or yy.shape != (x.shape[0],):
        raise ValueError("counts must be (N, J, W) with matching labels")
    c_total = int(yy.max()) + 1 if n_classes is None else n_classes
    if yy.size and (yy.min() < 0 or yy.max() >= c_total):
        raise ValueError("labels out of range")
    f = np.empty((x.shape[1], c_total, x.shape[2]))
    for c in range(c_total):
        mask = yy == c
        if not mask.any():
            raise FitError(f"class {c} has no training examples")
        f[:, c, :] = x[mask].mean(axis=0)
    f = floor_rates(f)
    if prior == "uniform":
        priors = np.full(c_total, 1.0 / c_total)
    elif prior == "empirical":
        priors = np.bincount(yy, minlength=c_total) / yy.size
    else:
        raise ValueError(f"unknown prior {prior!r}")
    return BayesModel(f=f, priors=priors)


def fit_bayes(records, windows: WindowSpec, n_classes: int | None = None,
              prior: str = "uniform") -> BayesModel:
    """Fit a BayesModel from labeled spike records."""
    recs = [r for r in records if r.label is not None]
    if not recs:
        raise FitError("fitting needs labeled records")
    counts = np.stack([estimate_rates([r], windows) for r in recs])
    y = np.array([r.label for r in recs], dtype=np.int64)
    return fit_bayes_counts(counts, y, n_classes=n_classes, prior=prior)


def bayes_decode(rates, model: BayesModel) -> DecodeResult:
    """Poisson naive-Bayes posterior over classes from observed counts.

    Log-likelihood per class sums n*ln f - f - ln Gamma(n+1) over neurons and
    windows, with n the observed mean count rounded to the nearest integer
    (multi-trial means need not be integral; single-trial counts already are).
    The posterior is the softmax of log-likelihood + log-prior; ``scores``
    holds the posterior probabilities.
    """
    rates = check_rate_matrix(rates, n_neurons=model.n_neurons,
                              n_windows=model.n_windows)
    n = np.rint(rates)
    log_f = np.log(model.f)
    log_lik = (
        np.einsum("jw,jcw->c", n, log_f)
        - model.f.sum(axis=(0, 2))
        - gammaln(n + 1.0).sum()
    )
    log_post = log_lik + np.log(model.priors)
    e = np.exp(log_post - log_post.max())
    posterior = e / e.sum()
    return _argmax_result(check_probabilities(posterior))


@dataclass(frozen=True)
class PvModel:
    """Per-neuron class-preference weights: expected total count per class."""

    w: np.ndarray  # (n_neurons, n_classes), >= 0

    def __post_init__(self) -> None:
        w = np.asarray(self.w, dtype=np.float64)
        object.__setattr__(self, "w", w)
        if w.ndim != 2:
            raise ValueError(f"w must be (J, C), got shape {w.shape}")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError("weights must be finite and >= 0")

    @property
    def n_neurons(self) -> int:
        return int(self.w.shape[0])

    @property
    def n_classes(self) -> int:
        return int(self.w.shape[1])

    @property
    def inert(self) -> np.ndarray:
        """Neurons whose weight row has no positive entry (never spiked)."""
        return ~(self.w > 0).any(axis=1)


def fit_pv_counts(totals, y, n_classes: int | None = None) -> PvModel:
    """Fit PV weights from (N, J) per-example total counts and labels."""
    x = np.asarray(totals, dtype=np.float64)
    yy = np.asarray(y, dtype=np.int64)
    if x.ndim != 2 or yy.shape != (x.shape[0],):
        raise ValueError("totals must be (N, J) with matching labels")
    c_total = int(yy.max()) + 1 if n_classes is None else n_classes
    if yy.size and (yy.min() < 0 or yy.max() >= c_total):
        raise ValueError("labels out of range")
    w = np.empty((x.shape[1], c_total))
    for c in range(c_total):
        mask = yy == c
        if not mask.any():
            raise FitError(f"class {c} has no training examples")
        w[:, c] = x[mask].mean(axis=0)
    return PvModel(w=w)


def fit_pv(records, n_classes: int | None = None) -> PvModel:
    """Fit PV weights from labeled spike records (total counts per neuron)."""
    recs = [r for r in records if r.label is not None]
    if not recs:
        raise FitError("fitting needs labeled records")
    totals = np.stack([r.total_counts() for r in recs])
    y = np.array([r.label for r in recs], dtype=np.int64)
    return fit_pv_counts(totals, y, n_classes=n_classes)


def pv_decode(rates, model: PvModel) -> DecodeResult:
    """Population-vector score: sum_j w[j,c]*r_j / sum_j r_j.

    r_j is the window-summed mean count of neuron j, so the score is invariant
    to scaling all counts by a common positive factor. Zero total activity
    yields uniform scores with the degenerate flag set.
    """
    rates = check_rate_matrix(rates, n_neurons=model.n_neurons)
    r = rates.sum(axis=1)
    total = r.sum()
    if total == 0.0:
        scores = np.full(model.n_classes, 1.0 / model.n_classes)
        return DecodeResult(scores=scores, predicted=0, degenerate=True)
    return _argmax_result((model.w.T @ r) / total)


@dataclass(frozen=True)
class TargetRates:
    """One-hot target rate matrix: the true class row at r_max, others zero.

    Exact zeros are kept here; flooring happens only where the matrix enters
    a KL term or geometric mean.
    """

    lam: np.ndarray  # (n_classes, n_windows)
    label: int
    r_max: float

    def __post_init__(self) -> None:
        lam = np.asarray(self.lam, dtype=np.float64)
        object.__setattr__(self, "lam", lam)
        if lam.ndim != 2:
            raise ValueError(f"lam must be (C, W), got shape {lam.shape}")
        if not (0 <= self.label < lam.shape[0]):
            raise ValueError("label out of range")
        if not (self.r_max > 0 and np.isfinite(self.r_max)):
            raise ValueError("r_max must be positive and finite")
        hot = np.zeros_like(lam)
        hot[self.label] = self.r_max
        if not np.array_equal(lam, hot):
            raise ValueError("lam must be r_max on the label row and 0 elsewhere")


def encode_targets(label: int, n_classes: int, r_max: float,
                   windows: WindowSpec) -> TargetRates:
    """One-hot (n_classes, n_windows) target: label row = r_max, rest 0."""
    if not 0 <= label < n_classes:
        raise ValueError(f"label {label} out of range for {n_classes} classes")
    lam = np.zeros((n_classes, windows.n_windows))
    lam[label] = r_max
    return TargetRates(lam=lam, label=label, r_max=r_max)


@dataclass(frozen=True)
class CfrResult:
    """Per-class geometric-mean rates with per-window votes and the winner."""

    lam_bar: np.ndarray          # (n_classes, n_windows) fused Poisson means
    window_predicted: np.ndarray  # (n_windows,) per-window argmax class
    predicted: int


def cfr_from_rates(rates, pop: PopulationMap) -> CfrResult:
    """Fuse per-neuron rate estimates into per-class rates and vote.

    Per class and window the fused rate is the geometric mean over the class's
    member neurons (estimates floored first); each window votes for its argmax
    class and the majority wins, ties toward the lowest index at both stages.
    """
    rates = check_rate_matrix(rates, n_neurons=pop.n_neurons)
    pop.require_full()
    log_rates = np.log(floor_rates(rates))
    lam_bar = np.exp(
        np.stack([log_rates[pop.members(c)].mean(axis=0)
                  for c in range(pop.n_classes)])
    )
    votes = np.argmax(lam_bar, axis=0)
    counts = np.bincount(votes, minlength=pop.n_classes)
    return CfrResult(lam_bar=lam_bar, window_predicted=votes,
                     predicted=int(np.argmax(counts)))


def cfr_decode(records, pop: PopulationMap, windows: WindowSpec) -> CfrResult:
    """Estimate rates over K trials of one example, then fuse and vote."""
    return cfr_from_rates(estimate_rates(records, windows), pop)


def assign_from_counts(totals, y, n_classes: int) -> tuple[PopulationMap, list[int]]:
    """Assign each neuron the class with the highest mean response.

    totals: (N, n_neurons) per-example spike counts; y: (N,) labels. Ties go
    to the lowest class index; neurons silent across every class are parked on
    class 0 and returned in the diagnostics list.
    """
    totals = np.asarray(totals, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if totals.ndim != 2 or y.shape != (totals.shape[0],):
        raise ValueError("totals must be (N, J) with matching labels")
    if y.size and (y.min() < 0 or y.max() >= n_classes):
        raise ValueError("labels out of range")
    n_neurons = totals.shape[1]
    response = np.zeros((n_classes, n_neurons))
    for c in range(n_classes):
        mask = y == c
        if mask.any():
            response[c] = totals[mask].mean(axis=0)
    assignment = np.argmax(response, axis=0)  # first max = lowest class
    silent = np.flatnonzero(~response.any(axis=0))
    assignment[silent] = 0
    pop = PopulationMap(assignment=assignment, n_classes=n_classes,
                        forced_default=tuple(int(j) for j in silent))
    return pop, [int(j) for j in silent]


# --- scikit-learn estimator layer over (n_examples, n_neurons, n_windows) ---


def _check_count_tensor(X) -> np.ndarray:
    x = np.asarray(X, dtype=np.float64)
    if x.ndim != 3:
        raise ValueError(f"X must be (n_examples, n_neurons, n_windows), "
                         f"got shape {x.shape}")
    if not np.all(np.isfinite(x)) or np.any(x < 0):
        raise ValueError("X must be finite and >= 0")
    return x


def _check_X_y(X, y) -> tuple[np.ndarray, np.ndarray]:
    x = _check_count_tensor(X)
    yy = np.asarray(y)
    if yy.shape != (x.shape[0],):
        raise ValueError("y must be 1-D and match X")
    if x.shape[0] == 0:
        raise ValueError("need at least one example")
    return x, yy


class _CountDecoderMixin(ClassifierMixin):
    """Shared predict plumbing: subclasses define _decode_one(rates)."""

    def predict(self, X):
        x = self._check_predict_input(X)
        idx = np.array([self._decode_one(rates).predicted for rates in x])
        return self.classes_[idx]

    def _check_predict_input(self, X) -> np.ndarray:
        if not hasattr(self, "classes_"):
            raise FitError("decoder is not fitted")
        return _check_count_tensor(X)


class HmfrDecoder(_CountDecoderMixin, BaseEstimator):
    """Highest-mean-firing-rate classifier over learned class populations.

    fit() assigns each neuron to the class it responds to most; predict()
    scores classes by the mean total count of their member neurons.
    predict_proba() applies the chosen normalization to the scores.
    """

    def __init__(self, norm: str = "softmax"):
        self.norm = norm

    def fit(self, X, y):
        x, yy = _check_X_y(X, y)
        self.classes_, y_idx = np.unique(yy, return_inverse=True)
        self.population_, self.silent_neurons_ = assign_from_counts(
            x.sum(axis=2), y_idx, len(self.classes_)
        )
        self.population_.require_full()
        return self

    def _decode_one(self, rates) -> DecodeResult:
        return hmfr_decode(rates, self.population_)

    def predict_proba(self, X):
        x = self._check_predict_input(X)
        return np.stack(
            [normalize(self._decode_one(r).scores, self.norm) for r in x]
        )


class BayesDecoder(_CountDecoderMixin, BaseEstimator):
    """Poisson naive-Bayes classifier over per-window spike counts."""

    def __init__(self, prior: str = "uniform"):
        self.prior = prior

    def fit(self, X, y):
        x, yy = _check_X_y(X, y)
        self.classes_, y_idx = np.unique(yy, return_inverse=True)
        self.model_ = fit_bayes_counts(x, y_idx, len(self.classes_), self.prior)
        return self

    def _decode_one(self, rates) -> DecodeResult:
        return bayes_decode(rates, self.model_)

    def predict_proba(self, X):
        x = self._check_predict_input(X)
        return np.stack([self._decode_one(r).scores for r in x])


class PvDecoder(_CountDecoderMixin, BaseEstimator):
    """Population-vector classifier: activity-weighted class preferences."""

    def fit(self, X, y):
        x, yy = _check_X_y(X, y)
        self.classes_, y_idx = np.unique(yy, return_inverse=True)
        self.model_ = fit_pv_counts(x.sum(axis=2), y_idx, len(self.classes_))
        return self

    def _decode_one(self, rates) -> DecodeResult:
        return pv_decode(rates, self.model_)

    def decision_function(self, X):
        x = self._check_predict_input(X)
        return np.stack([self._decode_one(r).scores for r in x])


class CfrDecoder(_CountDecoderMixin, BaseEstimator):
    """Geometric-mean rate-fusion classifier with per-window majority vote."""

    def fit(self, X, y):
        x, yy = _check_X_y(X, y)
        self.classes_, y_idx = np.unique(yy, return_inverse=True)
        self.population_, self.silent_neurons_ = assign_from_counts(
            x.sum(axis=2), y_idx, len(self.classes_)
        )
        self.population_.require_full()
        return self

    def _decode_one(self, rates) -> CfrResult:
        return cfr_from_rates(rates, self.population_)
