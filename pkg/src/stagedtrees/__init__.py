"""Staged trees: construction, Bayesian Dirichlet scoring, equivalence operators and learning."""

from ._kernels import BACKEND
from .equivalence import (
    ResizeSpec,
    TransformStep,
    TransformTrace,
    Twin,
    bounded_equivalence_search,
    canonical_form,
    canonical_key,
    find_contractions,
    find_twins,
    map_dataset,
    resize_contract,
    staged_tree_isomorphic,
    swap,
)
from .errors import (
    DocumentError,
    OperatorError,
    RoutingError,
    StagedTreeError,
    StagingError,
    TreeStructureError,
)
from .io import TreeDocument, dump_document, load_dataset, load_tree, parse_document, save_tree
from .learning import LearnConfig, LearnResult, ahc_learn, score_delta
from .scoring import (
    METHODS,
    HyperParams,
    PosteriorParams,
    bd_log_score,
    bdepu_hyper,
    csbdeu_alt_hyper,
    csbdeu_hyper,
    hyperparameters,
    score,
    sequential_oracle_log_score,
    stage_posterior,
)
from .tree import (
    Dataset,
    Edge,
    EdgeCounts,
    EventTree,
    StagedTree,
    ValidationReport,
    build_product_tree,
    build_tree_from_paths,
    dataset_from_counts,
    path_count,
    route_dataset,
    route_record,
    validate_staged_tree,
)

__version__ = "0.1.0"
