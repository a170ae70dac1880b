"""Sparse-code access structure: codebook-to-subcarrier maps.

A codebook occupies a fixed set of U subcarriers; the map is the binary
incidence matrix q with one column per codebook.  Orthogonal access is the
special case of one codebook per subcarrier.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np


@dataclass
class CodebookMap:
    """Binary subcarrier incidence of each codebook.

    q : (N, C) with q[n, c] = 1 when codebook c occupies subcarrier n
    """

    q: np.ndarray

    @property
    def num_subcarriers(self) -> int:
        return self.q.shape[0]

    @property
    def num_codebooks(self) -> int:
        return self.q.shape[1]

    @property
    def degree(self) -> int:
        return int(self.q[:, 0].sum())

    def support(self, c: int) -> np.ndarray:
        return np.flatnonzero(self.q[:, c])

    def validate(self) -> list[str]:
        problems = []
        q = self.q
        if not np.isin(q, (0, 1)).all():
            problems.append("q entries must be binary")
        degrees = q.sum(axis=0)
        if not (degrees == degrees[0]).all():
            problems.append("all codebooks must occupy the same number of subcarriers")
        cols = {tuple(col) for col in q.T}
        if len(cols) != q.shape[1]:
            problems.append("codebook supports must be distinct")
        row = q.sum(axis=1)
        if row.max() - row.min() > 1:
            problems.append("subcarrier loads must differ by at most 1")
        if q.shape[1] > 1 and (row == q.shape[1]).any():
            problems.append("no subcarrier may belong to every codebook")
        return problems


def build_codebook_map(num_subcarriers: int, num_codebooks: int, degree: int) -> CodebookMap:
    """Pick ``num_codebooks`` distinct supports of size ``degree``.

    Starts from the lexicographically first supports and then swaps single
    subcarriers from overloaded rows to underloaded ones until the row sums
    differ by at most 1.
    """
    N, C, U = num_subcarriers, num_codebooks, degree
    if not 1 <= U < N:
        raise ValueError("degree must satisfy 1 <= U < N")
    subsets = list(itertools.combinations(range(N), U))
    if C > len(subsets):
        raise ValueError("more codebooks than distinct supports")
    chosen = [frozenset(s) for s in subsets[:C]]
    chosen_set = set(chosen)

    def row_loads() -> np.ndarray:
        loads = np.zeros(N, dtype=np.int64)
        for s in chosen:
            for n in s:
                loads[n] += 1
        return loads

    for _ in range(10 * N * C):
        loads = row_loads()
        if loads.max() - loads.min() <= 1:
            break
        # any move from a row at least 2 above another strictly reduces the
        # load imbalance
        done = False
        order_hi = sorted(range(N), key=lambda n: (-loads[n], n))
        order_lo = sorted(range(N), key=lambda n: (loads[n], n))
        for hi in order_hi:
            for lo in order_lo:
                if loads[hi] < loads[lo] + 2:
                    continue
                for i, s in enumerate(chosen):
                    if hi in s and lo not in s:
                        swapped = (s - {hi}) | {lo}
                        if swapped in chosen_set:
                            continue
                        chosen_set.remove(s)
                        chosen_set.add(swapped)
                        chosen[i] = swapped
                        done = True
                        break
                if done:
                    break
            if done:
                break
        if not done:
            raise RuntimeError("could not balance subcarrier loads")

    q = np.zeros((N, C), dtype=np.int8)
    for c, s in enumerate(chosen):
        q[sorted(s), c] = 1
    return CodebookMap(q=q)


def ofdma_map(num_subcarriers: int) -> CodebookMap:
    """Orthogonal baseline: one single-subcarrier codebook per subcarrier."""
    return CodebookMap(q=np.eye(num_subcarriers, dtype=np.int8))


def reuse_count(rho: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Scheduled-user count per subcarrier.

    rho : (B, C, K) binary scheduling indicator
    q : (N, C) codebook map

    Returns (N,) with entry n equal to sum_{b,c,k} rho[b,c,k] * q[n,c].
    """
    per_codebook = rho.sum(axis=(0, 2))  # (C,)
    return q.astype(np.int64) @ per_codebook
