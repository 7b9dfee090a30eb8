"""Desk-scale synthetic spike classification tasks.

Each class owns a disjoint group of input channels. A sample of class ``c``
drives its own group at rate ``p_on`` per step and every other channel at
``p_off`` (Bernoulli per step), so co-firing of class-matched channels is
informative by construction. The shuffled variant permutes the labels,
which removes any input-label relationship.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class SpikeDataset:
    x: np.ndarray  # (N, C_in, T) uint8
    y: np.ndarray  # (N,) int64

    def __len__(self):
        return len(self.y)


def poisson_patterns(rng, labels, n_classes, group_size, timesteps, p_on, p_off):
    n = len(labels)
    c_in = n_classes * group_size
    rates = np.full((n, c_in), p_off)
    for k in range(n_classes):
        rates[labels == k, k * group_size:(k + 1) * group_size] = p_on
    return (rng.random((n, c_in, timesteps)) < rates[:, :, None]).astype(np.uint8)


def make_task(
    name: str = "informative",
    n_train: int = 200,
    n_test: int = 400,
    n_classes: int = 4,
    group_size: int = 10,
    timesteps: int = 4,
    p_on: float = 0.5,
    p_off: float = 0.1,
    seed: int = 0,
) -> tuple[SpikeDataset, SpikeDataset]:
    """Build (train, test) splits.

    ``name`` is ``"informative"``, ``"shuffled"`` (train and test labels
    permuted independently of the inputs) or ``"silent"`` (all-zero inputs,
    so every hooked layer has constant synchrony).
    """
    rng = np.random.default_rng(seed)
    splits = []
    for n in (n_train, n_test):
        y = np.arange(n) % n_classes
        rng.shuffle(y)
        x = poisson_patterns(rng, y, n_classes, group_size, timesteps, p_on, p_off)
        if name == "shuffled":
            y = rng.permutation(y)
        elif name == "silent":
            x[:] = 0
        elif name != "informative":
            raise ValueError(f"unknown task {name!r}")
        splits.append(SpikeDataset(x=x, y=y.astype(np.int64)))
    return splits[0], splits[1]
