"""Zeroth-order topology of neural-network layers and topology-aware pruning."""

__version__ = "0.1.0"

from .compression import (
    ArchSpec,
    CompressionReport,
    Conv2dSpec,
    DenseSpec,
    RecurrentSpec,
    conv_toeplitz_dims,
    eta_tau_conv,
    eta_tau_dense,
    eta_tau_empirical,
    eta_tau_network,
    eta_tau_recurrent,
)
from .graph import BipartiteLayer, SpanningForest, UnionFind, max_spanning_forest, normalize_weights
from .overlap import (
    OverlapEstimate,
    monte_carlo_overlap,
    overlap_lower_bound,
    overlap_lower_bound_sparse,
    random_overlap_pmf,
    random_overlap_tail,
)
from .persistence import (
    NeuralPersistence,
    NpReport,
    PersistenceDiagram,
    layer_report,
    neural_persistence,
    normalized_neural_persistence,
    superlevel_filtration,
    total_neural_persistence,
)
from .pruning import (
    ImpSchedule,
    MagnitudePruner,
    OverlapReport,
    PruneMask,
    TopologicalPruner,
    build_imp_schedule,
    magnitude_mask,
    measure_overlap,
    run_iterative,
    timp_mask,
)

__all__ = [name for name in dir() if not name.startswith("_")]
