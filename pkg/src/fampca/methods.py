"""Ancestry-score methods that tolerate family structure.

All methods consume a scaled (p, n) matrix X and return per-individual
scores for the leading components, ordered like X's columns:

- naive:  right singular vectors of the column-centered X; family blocks
          distort these.
- sp:     decompose the singletons only, project everyone onto that basis.
- pcair:  like sp but decompose the unrelated set U (singletons plus one
          representative per family), projecting the rest.
- fw:     whiten each family block to identity within-family correlation,
          restore per-column moments, then decompose as usual.
- fw-geo: geometric variant of fw; rotates each member's direction away
          from the family mean until members sit at the angle unrelated
          vectors would occupy.
- ms:     replace co-family covariance entries by the global off-diagonal
          median and eigendecompose the repaired covariance.
- cpw:    linear transform of the family columns chosen so the transformed
          data's covariance reproduces the ms-repaired covariance.
- fa:     collapse each family to a single average pseudo-individual,
          decompose singletons + averages, and project everyone.

Decompositions operate on the column-centered matrix, so with no families
every method degenerates to naive exactly.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    DegenerateFamily,
    DimensionMismatch,
    NumericalError,
    ParseError,
    TooFewSingletons,
)
from .linalg import sym_eig, sym_inv_sqrt, sym_sqrt_psd, thin_svd
from .model import (
    WHITENED,
    CovarianceMatrix,
    ScaledMatrix,
    covariance_matrix,
)
from .relatedness import select_unrelated_set

METHODS = ("naive", "sp", "pcair", "fw", "fw-geo", "ms", "cpw", "fa")

DEFAULT_RIDGE = 0.001


@dataclass(frozen=True, eq=False)
class AncestryResult:
    """Scores (n, k), descending nonnegative values (k,), optional (p, k)
    variant-side basis for methods that have one."""

    method: str
    scores: np.ndarray
    values: np.ndarray
    individual_ids: tuple
    loadings: np.ndarray | None = None

    @property
    def n(self):
        return self.scores.shape[0]

    @property
    def k(self):
        return self.scores.shape[1]


def _centered(X):
    return X.values - X.values.mean(axis=0)[None, :]


def _project(xc, u, d, method, ids):
    if d.size and d[-1] <= d[0] * 1e-12:
        raise NumericalError(f"{method}: projection basis is rank deficient")
    scores = (xc.T @ u) / d[None, :] if d.size else np.empty((xc.shape[1], 0))
    return AncestryResult(method, scores, d, ids, loadings=u)


def naive_scores(X, k):
    """Right singular vectors of the column-centered X."""
    xc = _centered(X)
    u, d, v = thin_svd(xc, k)
    return AncestryResult("naive", v, d, X.individual_ids, loadings=u)


def singleton_projection(X, fam, k):
    """Decompose the singleton columns, project all individuals."""
    s = list(fam.singletons)
    if len(s) < 2:
        raise TooFewSingletons(f"singleton projection needs >= 2, have {len(s)}")
    xc = _centered(X)
    u, d, _ = thin_svd(xc[:, s], k)
    return _project(xc, u, d, "sp", X.individual_ids)


def pcair_lite(X, fam, k):
    """Decompose the unrelated set U, project all individuals.

    Representatives are taken from fam when present, otherwise chosen by
    select_unrelated_set (least-correlated member per family).
    """
    if fam.representatives is None and fam.n_families:
        fam = select_unrelated_set(fam, X)
    uidx = fam.unrelated_indices()
    if uidx.size < 2:
        raise TooFewSingletons(f"unrelated set has {uidx.size} member(s)")
    xc = _centered(X)
    u, d, _ = thin_svd(xc[:, uidx], k)
    return _project(xc, u, d, "pcair", X.individual_ids)


# === family whitening ===


def _match_moments(cols, target_mean, target_sd):
    """Affinely map each column to the given mean and sd over SNPs."""
    mu = cols.mean(axis=0)
    sd = cols.std(axis=0, ddof=1)
    if (sd == 0.0).any():
        raise DegenerateFamily("whitened family column is constant")
    return target_mean[None, :] + target_sd[None, :] * (cols - mu[None, :]) / sd[None, :]


def family_whiten(X, fam):
    """Whiten each family block to identity within-family correlation.

    Columns are standardized over SNPs, multiplied by the inverse square
    root of their correlation matrix, then restored to their original
    mean and variance. Singleton columns pass through untouched.
    """
    p = X.p
    if p < 2:
        raise DimensionMismatch("family whitening needs at least 2 SNPs")
    v = X.values.copy()
    for members in fam.families:
        idx = list(members)
        cols = v[:, idx]
        mu = cols.mean(axis=0)
        sd = cols.std(axis=0, ddof=1)
        if (sd == 0.0).any():
            raise DegenerateFamily(f"constant column inside family {members}")
        w = (cols - mu[None, :]) / sd[None, :]
        r = w.T @ w / (p - 1)
        r = (r + r.T) / 2.0
        np.fill_diagonal(r, 1.0)
        wt = w @ sym_inv_sqrt(r)
        v[:, idx] = _match_moments(wt, mu, sd)
    return X.with_values(v, WHITENED)


def rotation_angle(n_f):
    """Angle between a coordinate axis and the equiangular diagonal in n_f
    dimensions: arccos(1 / sqrt(n_f))."""
    return math.acos(1.0 / math.sqrt(n_f))


def _rotate_family(cols):
    """Rotate member columns away from their mean direction.

    Each unit column is written as its component along the family-mean
    direction plus an orthogonal remainder; the output direction mixes the
    two at the target angle, and the original column norm is kept.
    Returns the rotated columns (moments not yet restored).
    """
    norms = np.sqrt(np.einsum("ij,ij->j", cols, cols))
    if (norms == 0.0).any():
        raise DegenerateFamily("zero-norm column in family")
    z = cols / norms[None, :]
    xbar = cols.mean(axis=1)
    nb = float(np.sqrt(xbar @ xbar))
    if nb <= 1e-12 * norms.mean():
        raise DegenerateFamily("family mean vector vanishes")
    zbar = xbar / nb
    along = zbar @ z
    resid = z - zbar[:, None] * along[None, :]
    rnorms = np.sqrt(np.einsum("ij,ij->j", resid, resid))
    if (rnorms <= 1e-12).any():
        raise DegenerateFamily("family member parallel to the family mean")
    resid /= rnorms[None, :]
    theta = rotation_angle(cols.shape[1])
    target = math.cos(theta) * zbar[:, None] + math.sin(theta) * resid
    return target * norms[None, :]


def family_rotate(X, fam):
    """Geometric whitening: rotate members to the unrelated-pair angle.

    After rotation each column is recentered and rescaled to its original
    mean and variance, like family_whiten.
    """
    v = X.values.copy()
    for members in fam.families:
        idx = list(members)
        cols = v[:, idx]
        mu = cols.mean(axis=0)
        sd = cols.std(axis=0, ddof=1)
        if (sd == 0.0).any():
            raise DegenerateFamily(f"constant column inside family {members}")
        v[:, idx] = _match_moments(_rotate_family(cols), mu, sd)
    return X.with_values(v, WHITENED)


# === covariance substitution and preserving whitening ===


def matrix_substitution(M, fam, include_diagonal=False):
    """Replace co-family covariance entries by the global median.

    The median is taken over all off-diagonal entries of M (set
    include_diagonal to fold the diagonal in as well) and written into
    both triangles for every within-family pair.
    """
    m = M.values.copy()
    n = m.shape[0]
    if fam.n != n:
        raise DimensionMismatch(
            f"family structure covers {fam.n} individuals, covariance has {n}"
        )
    if include_diagonal:
        med = float(np.median(m))
    else:
        iu = np.triu_indices(n, 1)
        med = float(np.median(m[iu]))
    for members in fam.families:
        idx = list(members)
        for a in range(len(idx)):
            for b in range(a + 1, len(idx)):
                m[idx[a], idx[b]] = med
                m[idx[b], idx[a]] = med
    return CovarianceMatrix(m, "substituted", M.n_variants)


def ms_scores(M, k, individual_ids=None):
    """Leading eigenvectors of a (substituted) covariance matrix.

    Values are reported on the singular-value scale of the underlying
    data matrix, sqrt((p - 1) * eigenvalue), so they are comparable with
    the SVD-based methods; trailing eigenvalues are clamped at zero.
    """
    w, q = sym_eig(M.values, k)
    d = np.sqrt(np.maximum(w, 0.0) * (M.n_variants - 1))
    return AncestryResult("ms", q, d, individual_ids)


def cpw(X, fam, k=None, ridge=DEFAULT_RIDGE):
    """Covariance-preserving whitening.

    Builds the block transform Y = [X_S, X_S C + X_F D] whose column-
    centered covariance equals the substituted covariance. ridge is added
    to the covariance diagonal before solving; the default compensates
    for the rank deficiency row-standardized data always has (its
    covariance annihilates the all-ones vector). Pass ridge=0 for
    genuinely full-rank inputs.

    Returns (whitened ScaledMatrix, AncestryResult from the SVD of Y).
    """
    n = X.n
    if k is None:
        k = min(X.p, n)
    sidx = list(fam.singletons)
    fidx = list(fam.family_members)
    v = X.values
    y = v.copy()
    if fidx:
        m = covariance_matrix(X).values
        if ridge:
            m = m + ridge * np.eye(n)
        mt = matrix_substitution(
            CovarianceMatrix(m, "raw", X.p), fam
        ).values
        m11 = m[np.ix_(sidx, sidx)]
        m12 = m[np.ix_(sidx, fidx)]
        m22 = m[np.ix_(fidx, fidx)]
        mt22 = mt[np.ix_(fidx, fidx)]
        if sidx:
            a = np.linalg.solve(m11, m12)
            s = m12.T @ a
            s = (s + s.T) / 2.0
        else:
            a = np.empty((0, len(fidx)))
            s = np.zeros((len(fidx), len(fidx)))
        # For row-centered data no exact transform exists: M annihilates
        # the ones vector, so M22 - S is ridge-small along the pooled
        # family direction while substitution removes the full co-family
        # covariance there, leaving mt22 - s indefinite in exactly that
        # direction. The PSD projection drops the unattainable part and
        # spreads a deviation of order |lambda_min| / n_F over the family
        # block; everywhere else the solution is exact.
        d = sym_inv_sqrt(m22 - s) @ sym_sqrt_psd(mt22 - s)
        c = a @ (np.eye(len(fidx)) - d)
        y[:, fidx] = v[:, sidx] @ c + v[:, fidx] @ d
    ym = X.with_values(y, WHITENED)
    u, dvals, vscores = thin_svd(y, k)
    return ym, AncestryResult("cpw", vscores, dvals, X.individual_ids, loadings=u)


# === family averaging ===


def _family_average_columns(xc, families):
    """One pseudo-column per family: the unit mean direction scaled to the
    members' average column norm."""
    cols = []
    for members in families:
        block = xc[:, list(members)]
        norms = np.sqrt(np.einsum("ij,ij->j", block, block))
        xbar = block.mean(axis=1)
        nb = float(np.sqrt(xbar @ xbar))
        if nb == 0.0:
            raise DegenerateFamily(f"family {tuple(members)} mean vector vanishes")
        cols.append((xbar / nb) * norms.mean())
    return np.column_stack(cols) if cols else np.empty((xc.shape[0], 0))


def family_average_scores(X, fam, k):
    """Replace families by average pseudo-individuals, then project.

    The decomposition runs on [X_S, family averages]; every original
    individual is projected onto its basis.
    """
    xc = _centered(X)
    s = list(fam.singletons)
    xa = np.concatenate([xc[:, s], _family_average_columns(xc, fam.families)], axis=1)
    if xa.shape[1] < 1:
        raise TooFewSingletons("family averaging needs at least one column")
    u, d, _ = thin_svd(xa, k)
    return _project(xc, u, d, "fa", X.individual_ids)


def compute_scores(X, fam, method, k, ridge=DEFAULT_RIDGE, include_diagonal=False):
    """Dispatch on a method name from METHODS; returns an AncestryResult."""
    if method == "naive":
        return naive_scores(X, k)
    if method == "sp":
        return singleton_projection(X, fam, k)
    if method == "pcair":
        return pcair_lite(X, fam, k)
    if method == "fw":
        res = naive_scores(family_whiten(X, fam), k)
        return replace(res, method="fw")
    if method == "fw-geo":
        res = naive_scores(family_rotate(X, fam), k)
        return replace(res, method="fw-geo")
    if method == "ms":
        mt = matrix_substitution(covariance_matrix(X), fam, include_diagonal)
        res = ms_scores(mt, k)
        return replace(res, individual_ids=X.individual_ids)
    if method == "cpw":
        return cpw(X, fam, k, ridge)[1]
    if method == "fa":
        return family_average_scores(X, fam, k)
    raise ParseError(f"unknown method {method!r}; choose from {METHODS}")
