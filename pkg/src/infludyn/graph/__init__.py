"""Dynamic-network data model, centrality, labeling and the synthetic generator."""
from .bundle import load_network, save_network
from .centrality import (
    augment_with_pagerank,
    component_labels,
    connected_components,
    pagerank_per_component,
    pagerank_scores,
)
from .generator import GeneratorConfig, generate_synthetic
from .labels import label_nodes, parse_label_mode, relabel
from .network import (
    COLOR_NAMES,
    DynamicNetwork,
    EdgeColor,
    ReferralEvent,
    Snapshot,
    Violation,
    check_snapshot,
    edge_weight,
    validate_monotone,
)
