"""Relatedness screening from scaled genotypes.

Pairwise Pearson correlations between individual columns (over SNPs) feed
a threshold graph; its connected components of size >= 2 are the inferred
families. Sibling pairs correlate near 0.5, unrelated pairs near 0, so the
default threshold sits between the two modes.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, ZeroVarianceColumn
from .model import FamilyStructure

DEFAULT_ETA = 0.4


@dataclass(frozen=True, eq=False)
class RelatednessGraph:
    """Edges (j1, j2, corr) with j1 < j2 and corr above the threshold."""

    n: int
    eta: float
    edges: tuple


def pairwise_correlations(X):
    """(n, n) correlation matrix of individual columns over SNPs."""
    v = X.values
    if v.shape[0] < 2:
        raise DimensionMismatch("correlations need at least 2 SNPs")
    c = v - v.mean(axis=0)[None, :]
    norms = np.sqrt(np.einsum("ij,ij->j", c, c))
    dead = norms == 0.0
    if dead.any():
        raise ZeroVarianceColumn(
            f"{int(dead.sum())} constant genotype column(s), e.g. index "
            f"{int(np.flatnonzero(dead)[0])}"
        )
    c /= norms[None, :]
    corr = c.T @ c
    corr += corr.T
    corr /= 2.0
    np.clip(corr, -1.0, 1.0, out=corr)
    np.fill_diagonal(corr, 1.0)
    return corr


def relatedness_graph(corr, eta=DEFAULT_ETA):
    """Threshold graph over the strict upper triangle of corr."""
    n = corr.shape[0]
    i, j = np.nonzero(np.triu(corr, 1) > eta)
    edges = tuple(
        (int(a), int(b), float(corr[a, b])) for a, b in zip(i, j)
    )
    return RelatednessGraph(n, float(eta), edges)


def detect_families(corr, eta=DEFAULT_ETA):
    """Families = connected components of the eta-threshold graph.

    Components of size 1 stay singletons. Representatives (for the
    unrelated set) are chosen per family as the member with the smallest
    mean absolute correlation to its co-members, ties to the lowest index.
    """
    if corr.ndim != 2 or corr.shape[0] != corr.shape[1]:
        raise DimensionMismatch(f"correlation matrix must be square, got {corr.shape}")
    n = corr.shape[0]
    parent = np.arange(n)

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    i, j = np.nonzero(np.triu(corr, 1) > eta)
    for a, b in zip(i, j):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    groups = {}
    for a in range(n):
        groups.setdefault(find(a), []).append(a)
    families = [m for _, m in sorted(groups.items()) if len(m) >= 2]
    fam = FamilyStructure(n, families)
    reps = [_representative(corr, members) for members in fam.families]
    return fam.with_representatives(reps)


def _representative(corr, members):
    """Member with the smallest mean |corr| to the rest of its family."""
    members = list(members)
    block = np.abs(corr[np.ix_(members, members)]).copy()
    np.fill_diagonal(block, 0.0)
    means = block.sum(axis=1) / (len(members) - 1)
    return members[int(np.argmin(means))]


def select_unrelated_set(fam, X):
    """Choose family representatives from the data's correlations.

    Returns a new FamilyStructure whose unrelated_indices() realize U:
    all singletons plus, per family, the member least correlated (mean
    absolute) with its co-members.
    """
    v = X.values
    reps = []
    for members in fam.families:
        cols = v[:, list(members)]
        c = cols - cols.mean(axis=0)[None, :]
        norms = np.sqrt(np.einsum("ij,ij->j", c, c))
        if (norms == 0.0).any():
            raise ZeroVarianceColumn(
                f"constant column inside family {members}"
            )
        c /= norms[None, :]
        block = c.T @ c
        np.clip(block, -1.0, 1.0, out=block)
        np.fill_diagonal(block, 1.0)
        local = _representative(block, list(range(len(members))))
        reps.append(members[local])
    return fam.with_representatives(reps)
