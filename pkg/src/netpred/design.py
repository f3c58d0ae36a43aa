"""Nodewise design matrices: continuous columns raw, categorical columns one-hot."""

from __future__ import annotations

from typing import NamedTuple, Optional, Sequence

import numpy as np

from netpred.data import encode_categorical


class Predictor(NamedTuple):
    """Source of one design column: a variable, its category (or None) and a lag."""

    var: int
    category: Optional[int] = None
    lag: int = 0


def predictor_map(spec: Sequence, variables: Sequence[int], lag: int = 0) -> list:
    out = []
    for j in variables:
        v = spec[j]
        if v.is_categorical:
            out.extend(Predictor(j, k, lag) for k in range(1, v.levels + 1))
        else:
            out.append(Predictor(j, None, lag))
    return out


def design_matrix(values: np.ndarray, spec: Sequence, variables: Sequence[int]) -> np.ndarray:
    """Columns for ``variables`` in :func:`predictor_map` order."""
    blocks = []
    for j in variables:
        v = spec[j]
        col = values[:, j]
        if v.is_categorical:
            blocks.append(encode_categorical(col, v.levels))
        else:
            blocks.append(col[:, None])
    if not blocks:
        return np.empty((values.shape[0], 0))
    return np.hstack(blocks)
