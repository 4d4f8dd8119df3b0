"""Pure-Python (numpy) implementations of the hot kernels.

These are the reference versions; the compiled module ``_ckernels`` must
return identical arrays for identical inputs.
"""

from __future__ import annotations

import numpy as np


def conjugacy_class_labels(table: np.ndarray, inverse: np.ndarray) -> np.ndarray:
    """Label each element by its conjugacy class, numbering classes by first element."""
    n = table.shape[0]
    labels = np.full(n, -1, dtype=np.int64)
    everything = np.arange(n)
    next_label = 0
    for x in range(n):
        if labels[x] >= 0:
            continue
        # g^-1 x g for every g
        orbit = table[table[inverse, x], everything]
        labels[orbit] = next_label
        next_label += 1
    return labels


def pair_class_histogram(row: np.ndarray, class_of: np.ndarray, num_classes: int) -> np.ndarray:
    """Count pairs (class of h, class of row[h]) over all h."""
    flat = class_of * num_classes + class_of[row]
    counts = np.bincount(flat, minlength=num_classes * num_classes)
    return counts.reshape(num_classes, num_classes).astype(np.int64)


def support_closure(
    pair_ptr: np.ndarray,
    support_index: np.ndarray,
    involution: np.ndarray,
    seed: np.ndarray,
) -> np.ndarray:
    """Smallest member mask containing ``seed`` closed under involution and product support.

    ``pair_ptr`` and ``support_index`` are a CSR layout over pairs ``a*n + b``.
    """
    n = involution.shape[0]
    members = seed.astype(bool).copy()
    members[involution[members]] = True
    while True:
        current = np.flatnonzero(members)
        pairs = (current[:, None] * n + current[None, :]).ravel()
        starts = pair_ptr[pairs]
        lengths = pair_ptr[pairs + 1] - starts
        total = int(lengths.sum())
        grown = members.copy()
        if total:
            offsets = np.repeat(starts - np.cumsum(lengths) + lengths, lengths)
            grown[support_index[offsets + np.arange(total)]] = True
        grown[involution[grown]] = True
        if np.array_equal(grown, members):
            return members.astype(np.uint8)
        members = grown
