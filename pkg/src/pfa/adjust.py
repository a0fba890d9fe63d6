"""Dependence-adjusted p-values.

Subtracting the estimated common component ``b_i^T w_hat`` and rescaling by
``a_i`` leaves a statistic with unit variance under the null but a larger
signal-to-noise ratio, so hypotheses get re-ranked using the correlation
structure.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .fdp import pvalues


@dataclass(frozen=True, eq=False)
class AdjustedResult:
    adjusted_p: np.ndarray
    adjusted_z: np.ndarray
    ranking: np.ndarray  # hypothesis indices, most significant first

    def ranks(self):
        """1-based rank of every hypothesis."""
        r = np.empty_like(self.ranking)
        r[self.ranking] = np.arange(1, self.ranking.size + 1)
        return r


def adjusted_pvalues(z, model, w_hat):
    """``2 Phi(-|a_i (z_i - b_i^T w_hat)|)`` for every hypothesis."""
    zvec = np.asarray(getattr(z, "z", z), dtype=float)
    w = np.asarray(getattr(w_hat, "w_hat", w_hat), dtype=float).ravel()
    if zvec.shape[0] != model.p:
        raise DimensionMismatch(f"{zvec.shape[0]} statistics for a model of dimension {model.p}")
    if w.shape[0] != model.k:
        raise DimensionMismatch(f"{w.shape[0]} factors for a model with k={model.k}")
    adj_z = model.standardizers * (zvec - model.eta(w))
    adj_p = pvalues(adj_z)
    ranking = np.argsort(adj_p, kind="stable")
    return AdjustedResult(adj_p, adj_z, ranking)
