"""Numeric inner loops, with numba and pure-numpy implementations.

Set ``STAGEDTREES_DISABLE_NUMBA=1`` before import to force the numpy path.
Both implementations stay importable (``*_numpy`` / ``*_numba``) so they can
be compared against each other; the unsuffixed names are the selected backend.

Stage data is passed flattened: ``alpha`` and ``counts`` hold every stage's
edge vector back to back and ``offsets[j]:offsets[j + 1]`` slices stage ``j``.
"""

from __future__ import annotations

import math
import os

import numpy as np
from scipy.special import gammaln

__all__ = [
    "BACKEND",
    "HAVE_NUMBA",
    "bd_log_score_flat",
    "sequential_log_score_flat",
    "merge_deltas",
]

_DISABLED = os.environ.get("STAGEDTREES_DISABLE_NUMBA", "").strip().lower() in {
    "1",
    "true",
    "yes",
    "on",
}

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False


# -- numpy ------------------------------------------------------------------


def bd_log_score_numpy(alpha, counts, offsets):
    if len(offsets) < 2:
        return 0.0
    starts = offsets[:-1]
    a_bar = np.add.reduceat(alpha, starts)
    n_bar = np.add.reduceat(counts, starts)
    total = gammaln(a_bar).sum() - gammaln(a_bar + n_bar).sum()
    total += (gammaln(alpha + counts) - gammaln(alpha)).sum()
    return float(total)


def sequential_log_score_numpy(alpha, edge_stage, stage_alpha, steps, record_offsets):
    seen = np.zeros(len(alpha))
    seen_stage = np.zeros(len(stage_alpha))
    total = 0.0
    for i in range(len(record_offsets) - 1):
        for p in range(record_offsets[i], record_offsets[i + 1]):
            e = steps[p]
            j = edge_stage[e]
            total += math.log((alpha[e] + seen[e]) / (stage_alpha[j] + seen_stage[j]))
            seen[e] += 1.0
            seen_stage[j] += 1.0
    return total


def _stage_terms_numpy(A, N):
    a_bar = A.sum(axis=-1)
    n_bar = N.sum(axis=-1)
    return (
        gammaln(a_bar)
        - gammaln(a_bar + n_bar)
        + (gammaln(A + N) - gammaln(A)).sum(axis=-1)
    )


def merge_deltas_numpy(A, N):
    """Score change of merging every pair of rows; ``A``/``N`` are ``(m, r)``."""
    single = _stage_terms_numpy(A, N)
    merged = _stage_terms_numpy(A[:, None, :] + A[None, :, :], N[:, None, :] + N[None, :, :])
    out = merged - single[:, None] - single[None, :]
    np.fill_diagonal(out, -np.inf)
    return out


# -- numba ------------------------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True)
    def bd_log_score_numba(alpha, counts, offsets):
        total = 0.0
        for j in range(len(offsets) - 1):
            a_bar = 0.0
            n_bar = 0.0
            for p in range(offsets[j], offsets[j + 1]):
                a_bar += alpha[p]
                n_bar += counts[p]
                total += math.lgamma(alpha[p] + counts[p]) - math.lgamma(alpha[p])
            total += math.lgamma(a_bar) - math.lgamma(a_bar + n_bar)
        return total

    @njit(cache=True)
    def sequential_log_score_numba(alpha, edge_stage, stage_alpha, steps, record_offsets):
        seen = np.zeros(len(alpha))
        seen_stage = np.zeros(len(stage_alpha))
        total = 0.0
        for i in range(len(record_offsets) - 1):
            for p in range(record_offsets[i], record_offsets[i + 1]):
                e = steps[p]
                j = edge_stage[e]
                total += math.log((alpha[e] + seen[e]) / (stage_alpha[j] + seen_stage[j]))
                seen[e] += 1.0
                seen_stage[j] += 1.0
        return total

    @njit(cache=True)
    def _stage_term_numba(a, n):
        a_bar = 0.0
        n_bar = 0.0
        t = 0.0
        for k in range(len(a)):
            a_bar += a[k]
            n_bar += n[k]
            t += math.lgamma(a[k] + n[k]) - math.lgamma(a[k])
        return t + math.lgamma(a_bar) - math.lgamma(a_bar + n_bar)

    @njit(cache=True)
    def merge_deltas_numba(A, N):
        m = A.shape[0]
        single = np.empty(m)
        for i in range(m):
            single[i] = _stage_term_numba(A[i], N[i])
        out = np.full((m, m), -np.inf)
        for i in range(m):
            for j in range(i + 1, m):
                d = _stage_term_numba(A[i] + A[j], N[i] + N[j]) - single[i] - single[j]
                out[i, j] = d
                out[j, i] = d
        return out


if HAVE_NUMBA and not _DISABLED:
    BACKEND = "numba"
    bd_log_score_flat = bd_log_score_numba
    sequential_log_score_flat = sequential_log_score_numba
    merge_deltas = merge_deltas_numba
else:
    BACKEND = "numpy"
    bd_log_score_flat = bd_log_score_numpy
    sequential_log_score_flat = sequential_log_score_numpy
    merge_deltas = merge_deltas_numpy
