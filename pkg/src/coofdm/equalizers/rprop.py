"""Resilient back-propagation for the complex grouped networks.

Every real and imaginary part is a separate real parameter with its own step
size.  The update is the sign-based Rprop without weight backtracking: a
gradient sign flip shrinks the step and suppresses that parameter's update
for one iteration (iRprop-).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .._kernels import K
from .network import GroupedNetwork


class TrainingDiverged(FloatingPointError):
    pass


@dataclass(frozen=True)
class TrainingConfig:
    overhead_fraction: float = 0.10
    delta0: float = 0.07         # initial per-weight step (the learning-rate scale)
    eta_plus: float = 1.2
    eta_minus: float = 0.5
    delta_min: float = 1e-6
    delta_max: float = 50.0
    stop_threshold: float = 0.0  # stop once the cost reaches this value
    plateau_tol: float = 1e-6    # ... or changes less than this over plateau_window epochs
    plateau_window: int = 10
    max_epochs: int = 500
    seed: int = 1
    validation_fraction: float = 0.0  # > 0 holds out rows and keeps the best-validation weights
    validation_patience: int = 6

    def validate(self) -> None:
        if not 0 < self.overhead_fraction < 1:
            raise ValueError("overhead_fraction must lie in (0, 1)")
        if not 0 < self.eta_minus < 1 < self.eta_plus:
            raise ValueError("Rprop factors need 0 < eta_minus < 1 < eta_plus")
        if not 0 < self.delta_min <= self.delta0 <= self.delta_max:
            raise ValueError("need 0 < delta_min <= delta0 <= delta_max")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if self.plateau_window < 1:
            raise ValueError("plateau_window must be >= 1")
        if not 0 <= self.validation_fraction < 1:
            raise ValueError("validation_fraction must lie in [0, 1)")
        if self.validation_patience < 1:
            raise ValueError("validation_patience must be >= 1")

    def __post_init__(self):
        self.validate()


@dataclass
class TrainingRecord:
    cost_per_epoch: list = field(default_factory=list)
    epochs_run: int = 0
    converged: bool = False
    validation_cost_per_epoch: list = field(default_factory=list)
    best_epoch: int | None = None


def train_rprop(net: GroupedNetwork, tx_training: np.ndarray, rx_training: np.ndarray,
                cfg: TrainingConfig) -> tuple[GroupedNetwork, TrainingRecord]:
    """Full-batch Rprop on the mean squared symbol error.

    Returns a trained copy of ``net``; the input network is left untouched.
    ``cost_per_epoch[i]`` is the cost evaluated before update ``i``.

    With ``cfg.validation_fraction > 0`` a seeded random subset of the rows is
    held out.  Training then also stops after ``validation_patience`` epochs
    without a new best validation cost, and the best-validation weights are
    returned.
    """
    tx = np.asarray(tx_training, dtype=complex)
    rx = np.asarray(rx_training, dtype=complex)
    if tx.shape != rx.shape:
        raise ValueError(f"training targets {tx.shape} and inputs {rx.shape} differ")
    if tx.shape[0] == 0:
        raise ValueError("no training symbols")

    val = None
    if cfg.validation_fraction > 0:
        n_val = max(1, round(cfg.validation_fraction * tx.shape[0]))
        if n_val >= tx.shape[0]:
            raise ValueError("validation split leaves no training rows")
        held = np.zeros(tx.shape[0], dtype=bool)
        held[np.random.default_rng(cfg.seed).permutation(tx.shape[0])[:n_val]] = True
        val = (rx[held], tx[held])
        tx, rx = tx[~held], rx[~held]

    out = net.copy()
    w = out.theta.view(np.float64)
    step = np.full_like(w, cfg.delta0)
    g_prev = np.zeros_like(w)
    rec = TrainingRecord()
    win = cfg.plateau_window
    for epoch in range(cfg.max_epochs):
        cost, grad = out.cost_and_gradient(rx, tx)
        if not np.isfinite(cost) or not np.all(np.isfinite(grad)):
            raise TrainingDiverged(f"non-finite cost or gradient at epoch {epoch} (cost={cost})")
        rec.cost_per_epoch.append(cost)
        rec.epochs_run = epoch + 1
        if val is not None:
            v = out.cost(*val)
            rec.validation_cost_per_epoch.append(v)
            if rec.best_epoch is None or v < rec.validation_cost_per_epoch[rec.best_epoch]:
                rec.best_epoch = epoch
                best = out.theta.copy()
            elif epoch - rec.best_epoch >= cfg.validation_patience:
                break
        if cost <= cfg.stop_threshold:
            rec.converged = True
            break
        if len(rec.cost_per_epoch) > win and (
                abs(rec.cost_per_epoch[-1 - win] - cost) < cfg.plateau_tol):
            rec.converged = True
            break
        K.rprop(w, grad.view(np.float64), g_prev, step,
                cfg.eta_plus, cfg.eta_minus, cfg.delta_min, cfg.delta_max)
    if val is not None:
        out.theta[:] = best
    if not np.all(np.isfinite(out.theta)):
        raise TrainingDiverged("non-finite weights after training")
    return out, rec
