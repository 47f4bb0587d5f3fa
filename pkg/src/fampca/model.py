"""Core data model: genotype matrices, standardization, families, covariance.

Conventions used throughout the package:

- Genotype matrices are SNP-major: shape (p, n) with one row per SNP and
  one column per individual. Entries are minor-allele counts 0/1/2, with
  -1 marking a missing call.
- Scaling standardizes each SNP row to mean 0 and variance 1 (divisor
  n - 1), so each row of the scaled matrix sums to 0 and has squared norm
  n - 1.
- The individual-by-individual covariance M = Xc' Xc / (p - 1) is formed
  from the column-centered scaled matrix, which makes M singular (rank at
  most n - 1) whenever X was row-standardized first.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    MissingGenotypes,
    MonomorphicSnp,
)

MISSING = -1

ROW_STANDARDIZED = "row-standardized"
COLUMN_CENTERED = "column-centered"
WHITENED = "whitened"
_KINDS = (ROW_STANDARDIZED, COLUMN_CENTERED, WHITENED)


@dataclass(frozen=True, eq=False)
class GenotypeMatrix:
    """A (p, n) matrix of allele counts with row and column identifiers."""

    values: np.ndarray
    snp_ids: tuple
    individual_ids: tuple

    def __post_init__(self):
        v = self.values
        if v.ndim != 2:
            raise DimensionMismatch(f"genotype values must be 2-d, got {v.ndim}-d")
        if v.shape != (len(self.snp_ids), len(self.individual_ids)):
            raise DimensionMismatch(
                f"genotype shape {v.shape} does not match "
                f"{len(self.snp_ids)} SNP ids x {len(self.individual_ids)} individual ids"
            )
        if v.shape[0] < 2 or v.shape[1] < 2:
            raise DimensionMismatch(
                f"need at least 2 SNPs and 2 individuals, got {v.shape}"
            )
        if v.dtype != np.int8:
            raise DimensionMismatch(f"genotype dtype must be int8, got {v.dtype}")
        if len(set(self.snp_ids)) != len(self.snp_ids):
            raise DimensionMismatch("snp_ids contain duplicates")
        if len(set(self.individual_ids)) != len(self.individual_ids):
            raise DimensionMismatch("individual_ids contain duplicates")
        bad = (v < -1) | (v > 2)
        if bad.any():
            i, j = np.argwhere(bad)[0]
            raise DimensionMismatch(
                f"genotype entry out of range at row {i}, column {j}: {v[i, j]}"
            )

    @property
    def p(self):
        return self.values.shape[0]

    @property
    def n(self):
        return self.values.shape[1]

    @property
    def missing_mask(self):
        return self.values == MISSING


@dataclass(frozen=True, eq=False)
class ScaledMatrix:
    """A (p, n) float matrix produced by scaling or a downstream transform."""

    values: np.ndarray
    kind: str
    snp_ids: tuple
    individual_ids: tuple

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise DimensionMismatch(f"unknown scaled-matrix kind {self.kind!r}")
        v = self.values
        if v.ndim != 2 or v.shape != (len(self.snp_ids), len(self.individual_ids)):
            raise DimensionMismatch(
                f"scaled values shape {v.shape} does not match id lengths"
            )

    @property
    def p(self):
        return self.values.shape[0]

    @property
    def n(self):
        return self.values.shape[1]

    def with_values(self, values, kind=None):
        """Same identifiers, new values (and optionally a new kind)."""
        return ScaledMatrix(values, kind or self.kind, self.snp_ids, self.individual_ids)


@dataclass(frozen=True, eq=False)
class CovarianceMatrix:
    """Individual-by-individual covariance of scaled genotypes.

    source is "raw" for covariance_matrix output and "substituted" once
    co-family entries have been replaced. n_variants records the p used
    as the averaging denominator's basis, needed to convert eigenvalues
    back to the singular-value scale of the underlying data matrix.
    """

    values: np.ndarray
    source: str
    n_variants: int

    def __post_init__(self):
        v = self.values
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise DimensionMismatch(f"covariance must be square, got {v.shape}")
        if self.source not in ("raw", "substituted"):
            raise DimensionMismatch(f"unknown covariance source {self.source!r}")

    @property
    def n(self):
        return self.values.shape[0]


class FamilyStructure:
    """Partition of individuals 0..n-1 into singletons and families.

    families are disjoint index tuples of size >= 2; everyone else is a
    singleton. representatives, when set, holds one member index per
    family and defines the unrelated set U = singletons + representatives.
    """

    def __init__(self, n, families, representatives=None):
        self.n = int(n)
        fams = []
        seen = set()
        for members in families:
            members = tuple(sorted(int(j) for j in members))
            if len(members) < 2:
                raise DimensionMismatch(
                    f"family {members} has fewer than 2 members"
                )
            for j in members:
                if j < 0 or j >= self.n:
                    raise DimensionMismatch(f"family member index {j} out of range")
                if j in seen:
                    raise DimensionMismatch(f"individual {j} appears in two families")
                seen.add(j)
            fams.append(members)
        self.families = tuple(fams)
        self.singletons = tuple(j for j in range(self.n) if j not in seen)
        if representatives is not None:
            representatives = tuple(int(r) for r in representatives)
            if len(representatives) != len(self.families):
                raise DimensionMismatch(
                    "need exactly one representative per family"
                )
            for r, members in zip(representatives, self.families):
                if r not in members:
                    raise DimensionMismatch(
                        f"representative {r} is not a member of its family"
                    )
        self.representatives = representatives

    def __eq__(self, other):
        return (
            isinstance(other, FamilyStructure)
            and self.n == other.n
            and self.families == other.families
            and self.representatives == other.representatives
        )

    def __repr__(self):
        return (
            f"FamilyStructure(n={self.n}, families={len(self.families)}, "
            f"members={self.n_family_members})"
        )

    @property
    def n_families(self):
        return len(self.families)

    @property
    def n_family_members(self):
        return sum(len(f) for f in self.families)

    @property
    def family_members(self):
        """All family-member indices, family by family, ascending within."""
        return tuple(j for fam in self.families for j in fam)

    def unrelated_indices(self):
        """U: singletons plus one representative per family, sorted.

        Falls back to the lowest-index member when representatives were
        never chosen (relatedness.select_unrelated_set picks them from
        correlations).
        """
        reps = self.representatives
        if reps is None:
            reps = tuple(members[0] for members in self.families)
        return np.array(sorted(self.singletons + reps), dtype=np.int64)

    def projected_indices(self):
        """Complement of the unrelated set: family members left out of U."""
        u = set(self.unrelated_indices().tolist())
        return np.array([j for j in range(self.n) if j not in u], dtype=np.int64)

    def family_of(self):
        """(n,) array: family index per individual, -1 for singletons."""
        out = np.full(self.n, -1, dtype=np.int64)
        for k, members in enumerate(self.families):
            out[list(members)] = k
        return out

    def size_class(self):
        """(n,) array: family size per individual, 0 for singletons."""
        out = np.zeros(self.n, dtype=np.int64)
        for members in self.families:
            out[list(members)] = len(members)
        return out

    def with_representatives(self, representatives):
        return FamilyStructure(self.n, self.families, representatives)

    def restrict(self, indices):
        """The structure induced on X[:, indices] (indices sorted unique).

        Families keep only their members that survive; groups reduced to
        one member become singletons.
        """
        indices = np.asarray(indices, dtype=np.int64)
        pos = {int(j): i for i, j in enumerate(indices)}
        fams = []
        for members in self.families:
            kept = [pos[j] for j in members if j in pos]
            if len(kept) >= 2:
                fams.append(kept)
        return FamilyStructure(len(indices), fams)


def scale_genotypes(G, missing_policy="mean_impute"):
    """Standardize each SNP row to mean 0, variance 1 (divisor n - 1).

    missing_policy "mean_impute" replaces missing calls with the row mean
    of the observed calls before standardizing; "reject" raises
    MissingGenotypes if anything is missing. Rows with zero variance
    after imputation raise MonomorphicSnp (use drop_monomorphic first).
    """
    if missing_policy not in ("mean_impute", "reject"):
        raise DimensionMismatch(f"unknown missing policy {missing_policy!r}")
    if G.n < 2:
        raise DimensionMismatch("scaling needs at least 2 individuals")
    mask = G.missing_mask
    if mask.any():
        if missing_policy == "reject":
            raise MissingGenotypes(
                f"{int(mask.sum())} missing genotype(s) with policy 'reject'"
            )
        x = G.values.astype(np.float64)
        obs = ~mask
        counts = obs.sum(axis=1)
        dead = counts == 0
        sums = np.where(obs, x, 0.0).sum(axis=1)
        means = np.divide(sums, counts, out=np.zeros(G.p), where=~dead)
        x[mask] = np.broadcast_to(means[:, None], x.shape)[mask]
    else:
        x = G.values.astype(np.float64)
        means = x.mean(axis=1)
        dead = np.zeros(G.p, dtype=bool)
    x -= means[:, None]
    ss = np.einsum("ij,ij->i", x, x)
    bad = dead | (ss == 0.0)
    if bad.any():
        raise MonomorphicSnp(np.flatnonzero(bad))
    x /= np.sqrt(ss / (G.n - 1))[:, None]
    return ScaledMatrix(x, ROW_STANDARDIZED, G.snp_ids, G.individual_ids)


def drop_monomorphic(G):
    """Remove SNP rows that scale_genotypes would reject.

    Returns (filtered GenotypeMatrix, tuple of dropped row indices).
    A row is dropped when its observed calls are all equal (zero variance
    survives mean imputation) or when every call is missing.
    """
    v = G.values
    obs = ~G.missing_mask
    counts = obs.sum(axis=1)
    lo = np.where(obs, v, np.int8(2)).min(axis=1)
    hi = np.where(obs, v, np.int8(0)).max(axis=1)
    constant = (counts == 0) | (lo >= hi)
    keep = ~constant
    filtered = GenotypeMatrix(
        np.ascontiguousarray(G.values[keep]),
        tuple(s for s, k in zip(G.snp_ids, keep) if k),
        G.individual_ids,
    )
    return filtered, tuple(np.flatnonzero(constant).tolist())


def column_center(X):
    """Subtract each individual column's mean over SNPs."""
    v = X.values - X.values.mean(axis=0)[None, :]
    return X.with_values(v, COLUMN_CENTERED)


def covariance_matrix(X):
    """M = Xc' Xc / (p - 1) with Xc the column-centered values.

    Accepts a row-standardized (or whitened) matrix, centering columns
    internally, or an already column-centered one. Output is symmetrized
    to remove BLAS round-off asymmetry.
    """
    if X.p < 2:
        raise DimensionMismatch("covariance needs at least 2 SNPs")
    if X.kind == COLUMN_CENTERED:
        v = X.values
    else:
        v = X.values - X.values.mean(axis=0)[None, :]
    m = v.T @ v
    m += m.T
    m /= 2.0 * (X.p - 1)
    return CovarianceMatrix(m, "raw", X.p)
