from .ann import ann_per_subcarrier_equalize, ann_per_subcarrier_train, build_ann
from .dbp import dbp_equalize
from .linear import linear_equalize
from .network import (
    GroupedNetwork,
    GroupPlan,
    build_network,
    case_plan,
    equalize_grouped,
    load_network,
    network_from_bytes,
    network_to_bytes,
    save_network,
    sigmoid_split,
)
from .rprop import TrainingConfig, TrainingDiverged, TrainingRecord, train_rprop

__all__ = [
    "GroupPlan", "GroupedNetwork", "TrainingConfig", "TrainingDiverged", "TrainingRecord",
    "ann_per_subcarrier_equalize", "ann_per_subcarrier_train", "build_ann", "build_network",
    "case_plan", "dbp_equalize", "equalize_grouped", "linear_equalize", "load_network",
    "network_from_bytes", "network_to_bytes", "save_network", "sigmoid_split", "train_rprop",
]
