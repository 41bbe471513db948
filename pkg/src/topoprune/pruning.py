"""Magnitude and topology-preserving pruning masks, IMP schedules and loops.

All pruning here is local: each layer is scored on its own weights.
"""

import csv
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_count, check_weights
from .graph import edge_order, max_spanning_forest, normalize_weights
from .persistence import (
    neural_persistence,
    normalized_neural_persistence,
    superlevel_filtration,
)

__all__ = [
    "PruneMask",
    "ImpSchedule",
    "OverlapReport",
    "InfeasibleKeepError",
    "InfeasibleScheduleError",
    "magnitude_mask",
    "timp_mask",
    "top_k_flat",
    "build_imp_schedule",
    "measure_overlap",
    "run_iterative",
    "MagnitudePruner",
    "TopologicalPruner",
]


class InfeasibleKeepError(ValueError):
    """Requested keep count is smaller than the spanning forest."""

    def __init__(self, keep, alpha):
        self.keep = keep
        self.alpha = alpha
        super().__init__(
            f"keep={keep} is below alpha={alpha}, the spanning-tree size; "
            "topology cannot be preserved past the critical compression ratio"
        )


class InfeasibleScheduleError(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        first = self.violations[0]
        super().__init__(
            f"{len(self.violations)} schedule entries fall below the spanning-tree size, "
            f"first: round {first[0]}, layer {first[1]} keeps {first[2]} < alpha={first[3]}"
        )


@dataclass(frozen=True)
class PruneMask:
    bits: np.ndarray
    method: str

    @property
    def shape(self):
        return self.bits.shape

    @property
    def nnz(self):
        return int(np.count_nonzero(self.bits))

    def apply(self, W):
        return np.asarray(W) * self.bits


def _flat_abs(W):
    absw = np.abs(W).ravel()
    return absw, np.arange(absw.size, dtype=np.int64)


def top_k_flat(W, k):
    """Flat indices of the ``k`` largest-magnitude entries.

    Ties go to the lower row-major index.
    """
    absw, flat = _flat_abs(W)
    return edge_order(absw, flat)[:k]


def magnitude_mask(W, keep):
    """Keep the ``keep`` largest-magnitude weights of a layer."""
    W = check_weights(W)
    keep = check_count(keep, "keep")
    if keep > W.size:
        raise ValueError(f"keep={keep} exceeds the {W.size} weights in the layer")
    bits = np.zeros(W.size, dtype=np.uint8)
    bits[top_k_flat(W, keep)] = 1
    return PruneMask(bits.reshape(W.shape), "MP")


def timp_mask(W, keep, truncate=False):
    """Topology-preserving mask: the spanning forest plus the largest others.

    Parameters
    ----------
    W : array-like of shape (m, n)
    keep : int
        Total number of weights to retain.
    truncate : bool, default=False
        When ``keep`` is smaller than the forest, keep the ``keep`` forest
        edges with the largest persistence instead of raising. The result
        no longer preserves the diagram.

    Raises
    ------
    InfeasibleKeepError
        If ``keep`` is below the forest size and ``truncate`` is False.
    """
    W = check_weights(W)
    keep = check_count(keep, "keep")
    if keep > W.size:
        raise ValueError(f"keep={keep} exceeds the {W.size} weights in the layer")
    forest = max_spanning_forest(normalize_weights(W))
    alpha = len(forest)
    bits = np.zeros(W.size, dtype=np.uint8)
    tree = forest.flat_indices
    if keep < alpha:
        if not truncate:
            raise InfeasibleKeepError(keep, alpha)
        # persistence is 1 - w', so the lowest forest weights persist longest
        bits[tree[np.lexsort((tree, forest.weights))[:keep]]] = 1
        return PruneMask(bits.reshape(W.shape), "TIMP")
    bits[tree] = 1
    extra = keep - alpha
    if extra:
        absw, flat = _flat_abs(W)
        rest = np.flatnonzero(bits == 0)
        order = rest[edge_order(absw[rest], flat[rest])]
        bits[order[:extra]] = 1
    return PruneMask(bits.reshape(W.shape), "TIMP")


@dataclass(frozen=True)
class ImpSchedule:
    """Absolute per-round, per-layer keep counts.

    ``keep_counts[r - 1][k]`` is the number of weights layer ``k`` keeps
    after pruning round ``r``.
    """

    layer_sizes: tuple
    alphas: tuple
    sparsity_percent: float
    rounds: int
    iterations: int
    keep_counts: tuple
    mode: str = "original"

    @property
    def violations(self):
        """``(round, layer, keep, alpha)`` entries that drop below the forest size."""
        out = []
        for r, row in enumerate(self.keep_counts, start=1):
            for k, (keep, alpha) in enumerate(zip(row, self.alphas)):
                if alpha is not None and keep < alpha:
                    out.append((r, k, keep, alpha))
        return out

    @property
    def feasible(self):
        return not self.violations

    def to_dict(self):
        return {
            "layer_sizes": list(self.layer_sizes),
            "alphas": list(self.alphas),
            "sparsity_percent": self.sparsity_percent,
            "rounds": self.rounds,
            "iterations": self.iterations,
            "mode": self.mode,
            "keep_counts": [list(row) for row in self.keep_counts],
            "feasible": self.feasible,
        }


def _ceil_fraction(x):
    return -((-x.numerator) // x.denominator)


def build_imp_schedule(layers, sparsity, rounds, iterations=1, mode="original"):
    """Keep counts for iterative pruning towards ``sparsity`` percent.

    Parameters
    ----------
    layers : sequence
        Per layer either a weight count or an ``(m, n)`` shape. Shapes let
        the schedule check each keep count against ``m + n - 1``.
    sparsity : float
        Target percentage of weights removed, ``0 <= sparsity < 100``.
    rounds : int
        Number of prune/retrain rounds.
    iterations : int
        Training iterations per round.
    mode : {"original", "remaining"}
        ``"original"`` removes ``sparsity / rounds`` percent of the original
        count each round, so round ``r`` keeps
        ``ceil(count * (1 - r * sparsity / (100 * rounds)))``.
        ``"remaining"`` removes a constant fraction of what is left, so round
        ``r`` keeps ``ceil(count * (1 - sparsity / 100) ** (r / rounds))``.
    """
    rounds = check_count(rounds, "rounds", minimum=1)
    iterations = check_count(iterations, "iterations", minimum=1)
    p = Fraction(str(sparsity))
    if not 0 <= p < 100:
        raise ValueError(f"sparsity must be in [0, 100), got {sparsity}")
    if mode not in ("original", "remaining"):
        raise ValueError(f"unknown schedule mode {mode!r}")

    sizes, alphas = [], []
    for layer in layers:
        if isinstance(layer, (tuple, list)):
            m, n = (check_count(v, "layer dimension", minimum=1) for v in layer)
            sizes.append(m * n)
            alphas.append(m + n - 1)
        else:
            sizes.append(check_count(layer, "layer size", minimum=1))
            alphas.append(None)

    keep_counts = []
    for r in range(1, rounds + 1):
        row = []
        for count in sizes:
            if mode == "original" or r == rounds:
                frac = 1 - Fraction(r, rounds) * p / 100 if mode == "original" else 1 - p / 100
                row.append(_ceil_fraction(count * frac))
            else:
                row.append(math.ceil(count * float(1 - p / 100) ** (r / rounds)))
        keep_counts.append(tuple(row))

    if p > 0:
        prev = sizes
        for r, row in enumerate(keep_counts, start=1):
            for k, (a, b) in enumerate(zip(prev, row)):
                if b >= a:
                    raise ValueError(
                        f"layer {k} keeps {b} weights in round {r}, not fewer than the "
                        f"previous {a}; use fewer rounds for a layer this small"
                    )
            prev = row

    schedule = ImpSchedule(
        layer_sizes=tuple(sizes),
        alphas=tuple(alphas),
        sparsity_percent=float(sparsity),
        rounds=rounds,
        iterations=iterations,
        keep_counts=tuple(keep_counts),
        mode=mode,
    )
    if not schedule.feasible:
        r, k, keep, alpha = schedule.violations[0]
        warnings.warn(
            f"schedule keeps {keep} < {alpha} weights in layer {k} at round {r}: beyond the "
            "critical compression ratio, topology-preserving pruning is infeasible",
            stacklevel=2,
        )
    return schedule


@dataclass(frozen=True)
class OverlapReport:
    layer_id: str
    alpha: int
    overlap_count: int
    mst_weights: np.ndarray = field(repr=False)
    top_alpha_weights: np.ndarray = field(repr=False)

    @property
    def fraction(self):
        return self.overlap_count / self.alpha

    def to_dict(self, include_values=False):
        out = {
            "layer_id": self.layer_id,
            "alpha": self.alpha,
            "overlap_count": self.overlap_count,
            "fraction": self.fraction,
        }
        if include_values:
            out["mst_weights"] = self.mst_weights.tolist()
            out["top_alpha_weights"] = self.top_alpha_weights.tolist()
        return out

    def to_csv(self, path):
        """Long-format export of the normalized values in both edge sets."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["layer_id", "set", "rank", "weight"])
            for name, values in (("mst", self.mst_weights), ("top_alpha", self.top_alpha_weights)):
                for rank, v in enumerate(values.tolist()):
                    writer.writerow([self.layer_id, name, rank, repr(v)])


def measure_overlap(W, layer_id="layer"):
    """Overlap between a layer's spanning forest and its top-alpha weights.

    ``alpha`` is the forest size (``m + n - 1`` for a layer without zeros).

    Raises
    ------
    ValueError
        For an all-zero layer.
    """
    g = normalize_weights(W)
    if g.degenerate:
        raise ValueError("all-zero layer: overlap undefined")
    forest = max_spanning_forest(g)
    alpha = len(forest)
    top = edge_order(g.weights, np.arange(g.n_edges, dtype=np.int64))[:alpha]
    overlap = np.intersect1d(top, forest.flat_indices, assume_unique=True).size
    return OverlapReport(
        layer_id=str(layer_id),
        alpha=alpha,
        overlap_count=int(overlap),
        mst_weights=forest.weights.copy(),
        top_alpha_weights=g.weights[top],
    )


def _layer_metrics(W, p):
    g = normalize_weights(W)
    diagram = superlevel_filtration(g)
    return neural_persistence(diagram, p), normalized_neural_persistence(diagram, p)


def run_iterative(loop, weights, schedule, train, p=2, truncate=False):
    """Alternate masking and retraining for ``schedule.rounds`` rounds.

    Parameters
    ----------
    loop : {"imp", "timp"}
        Mask rule: magnitude only, or spanning forest plus magnitude.
    weights : callable
        Returns the current list of layer weight matrices (views or copies).
    schedule : ImpSchedule
    train : callable
        ``train(masks)`` trains the network for ``schedule.iterations``
        iterations with ``masks`` (a list of uint8 arrays, or None for the
        dense first round) held at zero, and returns a dict that may hold
        ``train_loss`` and ``val_loss``.
    p : float
        Norm order for neural persistence.

    Returns
    -------
    list of dict
        One row per round per layer. Round 0 is the initial dense training.
        ``np_before`` and ``np_masked`` are the layer's neural persistence
        right before and right after masking; ``np`` is after retraining.
    """
    loop = loop.lower()
    if loop not in ("imp", "timp"):
        raise ValueError(f"loop must be 'imp' or 'timp', got {loop!r}")
    if loop == "timp" and not truncate and not schedule.feasible:
        raise InfeasibleScheduleError(schedule.violations)
    n_layers = len(schedule.layer_sizes)
    if len(weights()) != n_layers:
        raise ValueError("schedule and network disagree on the number of layers")

    rows = []

    def record(round_idx, masks, before, masked, losses):
        current = weights()
        nps = [_layer_metrics(W, p) for W in current]
        total = float(sum(raw for raw, _ in nps))
        for k, W in enumerate(current):
            nnz = int(np.count_nonzero(W)) if masks is None else int(np.count_nonzero(masks[k]))
            size = schedule.layer_sizes[k]
            try:
                overlap = measure_overlap(W).fraction
            except ValueError:
                overlap = float("nan")
            rows.append({
                "round": round_idx,
                "layer": k,
                "keep": size if masks is None else schedule.keep_counts[round_idx - 1][k],
                "nnz": nnz,
                "sparsity": 1.0 - nnz / size,
                "np_before": before[k],
                "np_masked": masked[k],
                "np": nps[k][0],
                "normalized_np": nps[k][1],
                "total_np": total,
                "overlap": overlap,
                "train_loss": losses.get("train_loss", float("nan")),
                "val_loss": losses.get("val_loss", float("nan")),
            })

    nan = [float("nan")] * n_layers
    losses = train(None) or {}
    record(0, None, nan, nan, losses)

    for r in range(1, schedule.rounds + 1):
        current = [np.array(W, copy=True) for W in weights()]
        before = [_layer_metrics(W, p)[0] for W in current]
        keeps = schedule.keep_counts[r - 1]
        if loop == "imp":
            masks = [magnitude_mask(W, keep).bits for W, keep in zip(current, keeps)]
        else:
            masks = [timp_mask(W, keep, truncate=truncate).bits for W, keep in zip(current, keeps)]
        masked = [_layer_metrics(W * M, p)[0] for W, M in zip(current, masks)]
        losses = train(masks) or {}
        record(r, masks, before, masked, losses)
    return rows


def _resolve_keep(keep, size):
    if isinstance(keep, (float, np.floating)):
        if 0 < keep < 1:
            return math.ceil(keep * size)
        if not float(keep).is_integer():
            raise ValueError(f"fractional keep must be in (0, 1), got {keep}")
        keep = int(keep)
    return check_count(keep, "keep")


class MagnitudePruner(TransformerMixin, BaseEstimator):
    """Local magnitude pruning of one weight matrix.

    Parameters
    ----------
    keep : int or float, default=0.1
        Number of weights kept, or the kept fraction when a float in (0, 1).

    Attributes
    ----------
    mask_ : PruneMask
    keep_ : int
    """

    def __init__(self, keep=0.1):
        self.keep = keep

    def fit(self, X, y=None):
        X = check_weights(X)
        self.keep_ = _resolve_keep(self.keep, X.size)
        self.mask_ = magnitude_mask(X, self.keep_)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "mask_")
        X = check_weights(X)
        if X.shape != self.mask_.shape:
            raise ValueError(f"expected weights of shape {self.mask_.shape}, got {X.shape}")
        return self.mask_.apply(X)


class TopologicalPruner(MagnitudePruner):
    """Topology-preserving pruning: keeps the maximum spanning tree first.

    Parameters
    ----------
    keep : int or float, default=0.1
        Number of weights kept, or the kept fraction when a float in (0, 1).
    truncate : bool, default=False
        Allow ``keep`` below the tree size (drops topology preservation).

    Attributes
    ----------
    mask_ : PruneMask
    keep_ : int
    alpha_ : int
        Size of the spanning forest of the fitted weights.
    """

    def __init__(self, keep=0.1, truncate=False):
        super().__init__(keep=keep)
        self.truncate = truncate

    def fit(self, X, y=None):
        X = check_weights(X)
        self.keep_ = _resolve_keep(self.keep, X.size)
        self.mask_ = timp_mask(X, self.keep_, truncate=self.truncate)
        self.alpha_ = len(max_spanning_forest(normalize_weights(X)))
        self.n_features_in_ = X.shape[1]
        return self
