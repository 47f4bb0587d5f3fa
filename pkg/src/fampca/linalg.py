"""Dense decompositions with a fixed sign convention.

Every routine canonicalizes eigen/singular vector signs so repeated runs
and cross-method comparisons are deterministic: within each column of the
individual-side basis, the entry of largest magnitude is made positive
(ties broken by lowest row index), and the variant-side basis follows.
"""

import numpy as np

from .errors import ConvergenceFailure, DimensionMismatch, NotPositiveDefinite

CLAMP_TOL = 1e-8  # eigenvalues above -CLAMP_TOL are treated as 0
POSDEF_EPS = 1e-10  # smallest eigenvalue an inverse square root will accept


def _canonical_signs(v, follow=None):
    """Flip columns of v (and follow) in place per the sign convention."""
    if v.shape[1] == 0:
        return
    anchor = np.argmax(np.abs(v), axis=0)
    flip = v[anchor, np.arange(v.shape[1])] < 0
    v[:, flip] *= -1.0
    if follow is not None:
        follow[:, flip] *= -1.0


def thin_svd(a, k=None):
    """Leading-k SVD of a (p, n) array: returns (U, d, V).

    U is (p, k), d the descending singular values, V (n, k); signs follow
    the module convention applied to V's columns.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise DimensionMismatch(f"thin_svd needs a matrix, got {a.ndim}-d")
    r = min(a.shape)
    if k is None:
        k = r
    if not 0 <= k <= r:
        raise DimensionMismatch(f"k={k} outside [0, {r}] for shape {a.shape}")
    if k == 0:
        return (
            np.empty((a.shape[0], 0)),
            np.empty(0),
            np.empty((a.shape[1], 0)),
        )
    try:
        u, d, vt = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as e:
        raise ConvergenceFailure(f"SVD failed: {e}") from None
    u = np.ascontiguousarray(u[:, :k])
    d = d[:k].copy()
    v = np.ascontiguousarray(vt[:k].T)
    _canonical_signs(v, follow=u)
    return u, d, v


def sym_eig(m, k=None):
    """Leading-k eigenpairs of a symmetric matrix: (values, vectors).

    Values descend; vector signs follow the module convention.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"sym_eig needs a square matrix, got {m.shape}")
    n = m.shape[0]
    if k is None:
        k = n
    if not 0 <= k <= n:
        raise DimensionMismatch(f"k={k} outside [0, {n}]")
    if k == 0:
        return np.empty(0), np.empty((n, 0))
    try:
        w, q = np.linalg.eigh(m)
    except np.linalg.LinAlgError as e:
        raise ConvergenceFailure(f"eigendecomposition failed: {e}") from None
    w = w[::-1][:k].copy()
    q = np.ascontiguousarray(q[:, ::-1][:, :k])
    _canonical_signs(q)
    return w, q


def _clamped_eigh(m, context):
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"{context} needs a square matrix, got {m.shape}")
    try:
        w, q = np.linalg.eigh(m)
    except np.linalg.LinAlgError as e:
        raise ConvergenceFailure(f"{context}: eigendecomposition failed: {e}") from None
    if w.size and w[0] < -CLAMP_TOL:
        raise NotPositiveDefinite(
            f"{context}: eigenvalue {w[0]:.3e} below -{CLAMP_TOL:g}"
        )
    return np.maximum(w, 0.0), q


def sym_sqrt(m):
    """Symmetric square root; tolerates eigenvalues down to -1e-8 (clamped)."""
    w, q = _clamped_eigh(m, "sym_sqrt")
    out = (q * np.sqrt(w)) @ q.T
    return (out + out.T) / 2.0


def sym_sqrt_psd(m):
    """Square root of the nearest positive semidefinite matrix.

    All negative eigenvalues are projected to zero, however large. Meant
    for targets that are provably unattainable in some directions, where
    the PSD projection is the best achievable substitute; use sym_sqrt
    when indefiniteness indicates a bug.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"sym_sqrt_psd needs a square matrix, got {m.shape}")
    try:
        w, q = np.linalg.eigh(m)
    except np.linalg.LinAlgError as e:
        raise ConvergenceFailure(
            f"sym_sqrt_psd: eigendecomposition failed: {e}"
        ) from None
    out = (q * np.sqrt(np.maximum(w, 0.0))) @ q.T
    return (out + out.T) / 2.0


def sym_inv_sqrt(m):
    """Symmetric inverse square root; requires eigenvalues >= 1e-10."""
    w, q = _clamped_eigh(m, "sym_inv_sqrt")
    if w.size and w[0] < POSDEF_EPS:
        raise NotPositiveDefinite(
            f"sym_inv_sqrt: eigenvalue {w[0]:.3e} below {POSDEF_EPS:g}"
        )
    out = (q / np.sqrt(w)) @ q.T
    return (out + out.T) / 2.0
