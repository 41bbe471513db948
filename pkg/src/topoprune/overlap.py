"""Expected overlap between a layer's spanning tree and its largest weights.

Three routes to the same quantity: a closed-form lower bound on the
expected overlap fraction, the probability of a given overlap between two
*random* weight subsets (a chance baseline), and a seeded simulation on
i.i.d. random layers.
"""

import csv
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._validation import check_count
from .pruning import measure_overlap

__all__ = [
    "overlap_lower_bound",
    "overlap_lower_bound_sparse",
    "random_overlap_pmf",
    "random_overlap_tail",
    "overlap_count_for_fraction",
    "OverlapEstimate",
    "monte_carlo_overlap",
    "trial_generator",
]


def overlap_lower_bound(m, n):
    """Lower bound on the expected spanning-tree / top-alpha overlap fraction.

    ``1 / (m + n - 1) * sum_{i=0}^{j} (m - i)(n - i) / (mn - i)`` with
    ``j = min(m, n)``; exactly 1 when ``j == 1``.
    """
    return overlap_lower_bound_sparse(m, n, 1.0)


def overlap_lower_bound_sparse(m, n, sparsity=1.0):
    """Overlap bound for a layer holding only a fraction ``sparsity`` of weights.

    Every denominator ``mn - i`` becomes ``sparsity * mn - i`` and the
    result is clipped at 1. ``sparsity=1`` recovers the dense bound.

    Raises
    ------
    ValueError
        If ``sparsity`` is outside (0, 1] or leaves fewer weights than a
        spanning tree needs.
    """
    m = check_count(m, "m", minimum=1)
    n = check_count(n, "n", minimum=1)
    p = float(sparsity)
    if not 0 < p <= 1:
        raise ValueError(f"sparsity must be in (0, 1], got {sparsity}")
    alpha = m + n - 1
    # relative slack lets p = alpha / mn through despite round-off
    if p * m * n < alpha * (1 - 1e-12):
        raise ValueError(
            f"{p} * {m} * {n} weights cannot hold a spanning tree of {alpha} edges"
        )
    j = min(m, n)
    if j == 1:
        return 1.0
    total = math.fsum((m - i) * (n - i) / (p * m * n - i) for i in range(j + 1))
    return min(1.0, total / alpha)


def _check_overlap_args(m, n, alpha, w):
    m = check_count(m, "m", minimum=1)
    n = check_count(n, "n", minimum=1)
    alpha = check_count(alpha, "alpha")
    w = check_count(w, "w")
    if alpha > m * n:
        raise ValueError(f"alpha={alpha} exceeds the {m * n} weights")
    if w > alpha:
        raise ValueError(f"w={w} exceeds alpha={alpha}")
    return m, n, alpha, w


def _log_pmf(total, alpha, w):
    if alpha == 0:
        return 0.0 if w == 0 else -math.inf
    log_binom = math.lgamma(alpha + 1) - math.lgamma(w + 1) - math.lgamma(alpha - w + 1)
    hit = w * math.log(alpha / total) if w else 0.0
    if alpha - w == 0:
        miss = 0.0
    elif alpha == total:
        return -math.inf
    else:
        miss = (alpha - w) * math.log((total - alpha) / total)
    return log_binom + hit + miss


def random_overlap_pmf(m, n, alpha, w):
    """Probability that two random alpha-subsets of an m x n layer share exactly w weights.

    Binomial approximation ``C(alpha, w) q^w (1 - q)^(alpha - w)`` with
    ``q = alpha / mn``, evaluated in log space.
    """
    m, n, alpha, w = _check_overlap_args(m, n, alpha, w)
    return math.exp(_log_pmf(m * n, alpha, w))


def random_overlap_tail(m, n, alpha, w):
    """Probability of at least ``w`` shared weights (sum of the pmf from w to alpha)."""
    m, n, alpha, w = _check_overlap_args(m, n, alpha, w)
    if w == 0:
        return 1.0
    terms = [math.exp(_log_pmf(m * n, alpha, i)) for i in range(w, alpha + 1)]
    return min(1.0, math.fsum(terms))


def overlap_count_for_fraction(fraction, alpha):
    """Whole number of weights making up ``fraction`` of ``alpha`` (rounded down)."""
    frac = Fraction(str(fraction))
    if not 0 <= frac <= 1:
        raise ValueError(f"fraction must be in [0, 1], got {fraction}")
    return int(math.floor(frac * check_count(alpha, "alpha")))


@dataclass(frozen=True)
class OverlapEstimate:
    m: int
    n: int
    dist: str
    trials: int
    seed: int
    fractions: np.ndarray

    @property
    def mean_overlap(self):
        return float(self.fractions.mean())

    @property
    def std_dev(self):
        if self.trials < 2:
            return 0.0
        return float(self.fractions.std(ddof=1))

    @property
    def standard_error(self):
        return self.std_dev / math.sqrt(self.trials)

    def to_dict(self, include_trials=True):
        out = {
            "m": self.m,
            "n": self.n,
            "dist": self.dist,
            "trials": self.trials,
            "seed": self.seed,
            "mean_overlap": self.mean_overlap,
            "std_dev": self.std_dev,
            "standard_error": self.standard_error,
        }
        if include_trials:
            out["fractions"] = self.fractions.tolist()
        return out

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["trial", "fraction"])
            for i, x in enumerate(self.fractions.tolist()):
                writer.writerow([i, repr(x)])


_DISTRIBUTIONS = {
    "uniform01": lambda rng, shape: rng.random(shape),
    "gaussian-abs": lambda rng, shape: np.abs(rng.standard_normal(shape)),
}


def trial_generator(seed, trial):
    """Independent Philox stream for one trial, keyed on ``(seed, trial)``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, trial])))


def monte_carlo_overlap(m, n, dist="uniform01", trials=200, seed=0):
    """Simulate the overlap fraction on i.i.d. random layers.

    Each trial draws an ``m x n`` weight matrix from its own
    :func:`trial_generator` stream, so results do not depend on the order in
    which trials run.
    """
    m = check_count(m, "m", minimum=1)
    n = check_count(n, "n", minimum=1)
    trials = check_count(trials, "trials", minimum=1)
    seed = check_count(seed, "seed")
    try:
        draw = _DISTRIBUTIONS[dist]
    except KeyError:
        raise ValueError(f"unknown distribution {dist!r}; choose from {sorted(_DISTRIBUTIONS)}") from None
    fractions = np.empty(trials)
    for t in range(trials):
        W = draw(trial_generator(seed, t), (m, n))
        fractions[t] = measure_overlap(W).fraction
    return OverlapEstimate(m, n, dist, trials, seed, fractions)
