"""Per-subcarrier ANN baseline: one single-input network per data subcarrier.

It shares the grouped network machinery with a plan of singleton groups, so
each network has 3*M hidden units and the total budget matches the grouped
equalizer.
"""
import numpy as np

from .network import GroupedNetwork, build_network, case_plan, equalize_grouped
from .rprop import TrainingConfig, TrainingRecord, train_rprop


def build_ann(n_subcarriers: int, order: int, seed: int) -> GroupedNetwork:
    return build_network(case_plan("per_subcarrier", n_subcarriers), order, seed)


def ann_per_subcarrier_train(tx_training: np.ndarray, rx_training: np.ndarray, order: int,
                             cfg: TrainingConfig) -> tuple[GroupedNetwork, TrainingRecord]:
    net = build_ann(np.shape(tx_training)[1], order, cfg.seed)
    return train_rprop(net, tx_training, rx_training, cfg)


def ann_per_subcarrier_equalize(net: GroupedNetwork, rx: np.ndarray) -> np.ndarray:
    return equalize_grouped(net, rx)
