"""Zeroth-order persistence diagrams and neural persistence."""

import csv
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_norm_order, check_weights
from .graph import max_spanning_forest, normalize_weights

__all__ = [
    "PersistenceDiagram",
    "NpReport",
    "superlevel_filtration",
    "neural_persistence",
    "normalized_neural_persistence",
    "total_neural_persistence",
    "layer_report",
    "NeuralPersistence",
]


@dataclass(frozen=True)
class PersistenceDiagram:
    """Multiset of (birth, death) pairs.

    For a super-level filtration every point sits on or below the
    diagonal, i.e. ``birth >= death``.
    """

    births: np.ndarray
    deaths: np.ndarray

    def __post_init__(self):
        if self.births.shape != self.deaths.shape:
            raise ValueError("births and deaths must have the same length")

    @classmethod
    def from_points(cls, points):
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        return cls(pts[:, 0].copy(), pts[:, 1].copy())

    def __len__(self):
        return int(self.births.size)

    @property
    def persistence(self):
        return np.abs(self.deaths - self.births)

    def to_array(self):
        return np.column_stack([self.births, self.deaths])

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["birth", "death"])
            for b, d in zip(self.births.tolist(), self.deaths.tolist()):
                writer.writerow([repr(b), repr(d)])


def superlevel_filtration(g, forest=None):
    """Zeroth-order diagram of the super-level filtration of a layer graph.

    All ``m + n`` vertices are present at threshold 1. Every edge the
    maximum spanning forest accepts at weight ``w'`` merges two components
    and contributes the point ``(1, w')``. The component that never dies is
    left out, so a connected layer yields ``m + n - 1`` points.

    An all-zero layer has no edges; it is assigned ``m + n - 1`` points at
    ``(0, 0)`` so that its neural persistence is 0.
    """
    if g.degenerate:
        k = g.m + g.n - 1
        return PersistenceDiagram(np.zeros(k), np.zeros(k))
    if forest is None:
        forest = max_spanning_forest(g)
    deaths = forest.weights.copy()
    return PersistenceDiagram(np.ones_like(deaths), deaths)


def neural_persistence(diagram, p=2):
    """p-norm of the point persistences of a diagram (0 when empty)."""
    p = check_norm_order(p)
    pers = diagram.persistence
    if pers.size == 0:
        return 0.0
    if np.isinf(p):
        return float(pers.max())
    return float(np.sum(pers**p) ** (1.0 / p))


def normalized_neural_persistence(diagram, p=2):
    """Neural persistence divided by its maximum ``len(diagram) ** (1/p)``.

    Each zeroth-order point has persistence at most 1, so the result lies
    in [0, 1].
    """
    raw = neural_persistence(diagram, p)
    k = len(diagram)
    if k == 0:
        return 0.0
    return raw / k ** (1.0 / check_norm_order(p))


@dataclass(frozen=True)
class NpReport:
    layer_id: str
    raw_np: float
    normalized_np: float
    point_count: int

    def to_dict(self):
        return {
            "layer_id": self.layer_id,
            "raw_np": self.raw_np,
            "normalized_np": self.normalized_np,
            "point_count": self.point_count,
        }


def total_neural_persistence(reports):
    """Network neural persistence: sum of the per-layer raw values."""
    return float(sum(r.raw_np for r in reports))


def layer_report(W, p=2, layer_id="layer"):
    """Compute an :class:`NpReport` straight from a raw weight matrix."""
    diagram = superlevel_filtration(normalize_weights(W))
    return NpReport(
        layer_id=str(layer_id),
        raw_np=neural_persistence(diagram, p),
        normalized_np=normalized_neural_persistence(diagram, p),
        point_count=len(diagram),
    )


class NeuralPersistence(TransformerMixin, BaseEstimator):
    """Neural persistence of a single layer's weight matrix.

    ``fit`` takes the raw weight matrix of one layer (rows = inputs,
    columns = outputs) and stores its spanning forest and diagram;
    ``transform`` returns the ``(k, 2)`` persistence diagram array.

    Parameters
    ----------
    p : float, default=2
        Order of the norm taken over point persistences.

    Attributes
    ----------
    layer_ : BipartiteLayer
    forest_ : SpanningForest
    diagram_ : PersistenceDiagram
    persistence_ : float
        Raw neural persistence.
    normalized_persistence_ : float
        Neural persistence scaled into [0, 1].
    """

    def __init__(self, p=2):
        self.p = p

    def fit(self, X, y=None):
        check_norm_order(self.p)
        X = check_weights(X)
        self.layer_ = normalize_weights(X)
        self.forest_ = max_spanning_forest(self.layer_)
        self.diagram_ = superlevel_filtration(self.layer_, self.forest_)
        self.persistence_ = neural_persistence(self.diagram_, self.p)
        self.normalized_persistence_ = normalized_neural_persistence(self.diagram_, self.p)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "diagram_")
        return superlevel_filtration(normalize_weights(X)).to_array()

    def score(self, X, y=None):
        """Neural persistence of ``X`` (higher means more structure)."""
        check_is_fitted(self, "diagram_")
        return neural_persistence(superlevel_filtration(normalize_weights(X)), self.p)
