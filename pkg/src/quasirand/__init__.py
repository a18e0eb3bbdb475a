"""Generalized quasirandom graphs: block-model sampling, modularity spectra,
spectral clustering, multiway discrepancy and subgraph statistics."""

from .graph import Partition, WeightedGraph, read_edge_list, write_edge_list
from .model import ModelGraph, load_model, model_spectrum
from .generator import SampleSpec, sample
from .spectra import normalized_modularity_matrix, spectral_summary
from .clustering import KVarianceClustering, WeightedKMeans, k_variance
from .discrepancy import (min_k_discrepancy, partition_discrepancy_exact,
                          partition_discrepancy_heuristic)
from .subgraphs import hom_count, hom_density

__version__ = "0.1.0"

__all__ = [
    "KVarianceClustering", "ModelGraph", "Partition", "SampleSpec", "WeightedGraph",
    "WeightedKMeans", "hom_count", "hom_density", "k_variance", "load_model",
    "min_k_discrepancy", "model_spectrum", "normalized_modularity_matrix",
    "partition_discrepancy_exact", "partition_discrepancy_heuristic", "read_edge_list",
    "sample", "spectral_summary", "write_edge_list",
]
