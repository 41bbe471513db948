"""Topologically critical compression ratios.

The critical ratio of a layer is ``|W| / |MST|``: its weight count over the
number of edges in its maximum spanning tree. Pruning past it necessarily
loses zeroth-order topology.

Convolutions are treated as a single input/output channel pair unrolled
into a Toeplitz matrix: ``m`` padded input pixels, ``n`` output pixels and
``n * f1 * f2`` non-zero weights.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_count, check_weights
from .graph import max_spanning_forest, normalize_weights

__all__ = [
    "DenseSpec",
    "RecurrentSpec",
    "Conv2dSpec",
    "ArchSpec",
    "LayerCompression",
    "CompressionReport",
    "eta_tau_dense",
    "eta_tau_recurrent",
    "conv_toeplitz_dims",
    "eta_tau_conv",
    "eta_tau_network",
    "eta_tau_empirical",
    "layer_counts",
    "display_round",
]


@dataclass(frozen=True)
class DenseSpec:
    in_features: int
    out_features: int
    name: str | None = None
    kind = "dense"

    def __post_init__(self):
        check_count(self.in_features, "in", minimum=1)
        check_count(self.out_features, "out", minimum=1)


@dataclass(frozen=True)
class RecurrentSpec:
    hidden: int
    name: str | None = None
    kind = "recurrent"

    def __post_init__(self):
        check_count(self.hidden, "hidden", minimum=1)


@dataclass(frozen=True)
class Conv2dSpec:
    spatial: tuple
    kernel: tuple
    stride: tuple = (1, 1)
    pad: tuple = (0, 0)
    name: str | None = None
    kind = "conv2d"

    def __post_init__(self):
        for attr, minimum in (("spatial", 1), ("kernel", 1), ("stride", 1), ("pad", 0)):
            value = tuple(getattr(self, attr))
            if len(value) != 2:
                raise ValueError(f"conv2d {attr} must have two entries, got {value!r}")
            for v in value:
                check_count(v, f"conv2d {attr}", minimum=minimum)
            object.__setattr__(self, attr, value)
        for s, f, p in zip(self.spatial, self.kernel, self.pad):
            if s + 2 * p < f:
                raise ValueError(
                    f"kernel {self.kernel} does not fit padded input "
                    f"{tuple(s + 2 * q for s, q in zip(self.spatial, self.pad))}"
                )


@dataclass(frozen=True)
class ArchSpec:
    layers: tuple
    name: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if not self.layers:
            raise ValueError("architecture needs at least one layer")


def eta_tau_dense(m, n):
    """Critical ratio of a fully connected ``m -> n`` layer: mn / (m + n - 1)."""
    m = check_count(m, "m", minimum=1)
    n = check_count(n, "n", minimum=1)
    return m * n / (m + n - 1)


def eta_tau_recurrent(hidden):
    """Critical ratio of a recurrent layer with ``hidden`` units: l^2 / (2l - 1)."""
    hidden = check_count(hidden, "hidden", minimum=1)
    return hidden * hidden / (2 * hidden - 1)


def conv_toeplitz_dims(spec, drop_unit_offset=False):
    """Vertex counts ``(m, n)`` of a convolution's Toeplitz graph.

    ``m`` is the padded input size and ``n`` the output size,
    ``prod(floor((s + 2 pad - f) / t) + 1)``. With ``drop_unit_offset=True``
    the ``+ 1`` is dropped, which undercounts outputs; it exists for
    comparison only.
    """
    m = 1
    n = 1
    for s, f, t, p in zip(spec.spatial, spec.kernel, spec.stride, spec.pad):
        padded = s + 2 * p
        if padded < f:
            raise ValueError(f"kernel size {f} exceeds padded input {padded}")
        out = (padded - f) // t + (0 if drop_unit_offset else 1)
        if out < 1:
            raise ValueError(
                f"output size without the unit offset is {out} for input {s}, kernel {f}, "
                f"stride {t}, pad {p}"
            )
        m *= padded
        n *= out
    return m, n


def eta_tau_conv(spec, drop_unit_offset=False):
    """Critical ratio of a convolution: n f1 f2 / (m + n - 1)."""
    weights, mst = layer_counts(spec, drop_unit_offset=drop_unit_offset)
    return weights / mst


def layer_counts(spec, drop_unit_offset=False):
    """``(weight_count, mst_count)`` of a layer spec."""
    if isinstance(spec, DenseSpec):
        m, n = spec.in_features, spec.out_features
        return m * n, m + n - 1
    if isinstance(spec, RecurrentSpec):
        h = spec.hidden
        return h * h, 2 * h - 1
    if isinstance(spec, Conv2dSpec):
        m, n = conv_toeplitz_dims(spec, drop_unit_offset=drop_unit_offset)
        return n * spec.kernel[0] * spec.kernel[1], m + n - 1
    raise TypeError(f"unknown layer spec {type(spec).__name__}")


def display_round(x, places=5):
    """Round for display; Python's ``round`` is round-half-to-even."""
    return round(float(x), places)


@dataclass(frozen=True)
class LayerCompression:
    layer_id: str
    kind: str
    weight_count: int
    mst_count: int

    @property
    def eta_tau(self):
        return self.weight_count / self.mst_count

    def to_dict(self):
        return {
            "layer_id": self.layer_id,
            "kind": self.kind,
            "weight_count": self.weight_count,
            "mst_count": self.mst_count,
            "eta_tau": self.eta_tau,
        }


@dataclass(frozen=True)
class CompressionReport:
    layers: tuple = field(default_factory=tuple)

    @property
    def total_weights(self):
        return sum(layer.weight_count for layer in self.layers)

    @property
    def total_mst(self):
        return sum(layer.mst_count for layer in self.layers)

    @property
    def final_eta_tau(self):
        return self.total_weights / self.total_mst

    def to_dict(self):
        return {
            "layers": [layer.to_dict() for layer in self.layers],
            "total_weights": self.total_weights,
            "total_mst": self.total_mst,
            "final_eta_tau": self.final_eta_tau,
        }

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["layer_id", "kind", "weight_count", "mst_count", "eta_tau"])
            for layer in self.layers:
                writer.writerow([layer.layer_id, layer.kind, layer.weight_count,
                                 layer.mst_count, repr(layer.eta_tau)])
            writer.writerow(["final", "network", self.total_weights, self.total_mst,
                             repr(self.final_eta_tau)])


def eta_tau_network(arch, drop_unit_offset=False):
    """Per-layer and aggregate critical ratios of an architecture.

    The aggregate is ``sum(weights) / sum(mst)`` over layers, not a mean of
    per-layer ratios.
    """
    if not isinstance(arch, ArchSpec):
        arch = ArchSpec(tuple(arch))
    rows = []
    for i, spec in enumerate(arch.layers, start=1):
        weights, mst = layer_counts(spec, drop_unit_offset=drop_unit_offset)
        rows.append(LayerCompression(spec.name or f"{spec.kind}_{i}", spec.kind, weights, mst))
    return CompressionReport(tuple(rows))


def eta_tau_empirical(W):
    """Critical ratio measured on an actual weight matrix.

    Counts non-zero weights over the edges of the maximum spanning forest
    of the non-zero subgraph. For a fully dense matrix this equals
    :func:`eta_tau_dense`.
    """
    W = check_weights(W)
    nnz = int(np.count_nonzero(W))
    if nnz == 0:
        raise ValueError("all-zero layer has no graph; critical ratio undefined")
    forest = max_spanning_forest(normalize_weights(W))
    return nnz / len(forest)
