"""Evaluation metrics for ancestry scores.

- swiss: fraction of a score column's variance that stays within strata
  (0 = strata perfectly separated, 1 = no separation). Summaries average
  the first five components.
- rse: dispersion of related individuals' scores around their stratum's
  unrelated mean, relative to the unrelated individuals' own dispersion;
  near 1 when family members behave like everyone else, below 1 under
  shrinkage, above 1 when families distort components.
- instability: per-component relative squared difference between a
  method's family scores and a gold standard where each family member is
  decomposed alone with the singletons.
- individual_scree: per-individual squared projections with loess-
  smoothed log10 curves.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import (
    DegenerateColumn,
    DimensionMismatch,
    EmptyStratumPart,
    InsufficientPoints,
    TooFewSingletons,
)
from .methods import compute_scores, naive_scores
from .model import FamilyStructure, ScaledMatrix

LOG_GUARD = 1e-300
DEFAULT_SPAN = 0.3
DEFAULT_L = 6


def swiss(scores, strata):
    """Within-stratum sum of squares over total, per component."""
    scores = np.asarray(scores, dtype=np.float64)
    strata = np.asarray(strata)
    if scores.ndim != 2 or strata.shape[0] != scores.shape[0]:
        raise DimensionMismatch(
            f"scores {scores.shape} vs {strata.shape[0]} stratum labels"
        )
    total = ((scores - scores.mean(axis=0)) ** 2).sum(axis=0)
    if (total == 0.0).any():
        raise DegenerateColumn(
            f"constant score column(s) {np.flatnonzero(total == 0.0).tolist()}"
        )
    within = np.zeros(scores.shape[1])
    for lab in np.unique(strata):
        part = scores[strata == lab]
        within += ((part - part.mean(axis=0)) ** 2).sum(axis=0)
    return within / total


def swiss_mean(scores, strata, n_components=5):
    vals = swiss(scores, strata)
    return float(vals[: min(n_components, vals.size)].mean())


def rse(scores, strata, related, unrelated):
    """Relative squared-error of related vs unrelated score dispersion.

    Per stratum, deviations are taken from the stratum's unrelated mean
    and scaled by (count - 1); stratum terms are then summed and the
    square root of the ratio returned, per component. Strata contribute
    to a side only when they have at least 2 members on that side; a
    stratum with related members but no unrelated ones (no reference
    mean), a stratum with exactly one related member, or an empty side
    overall raises EmptyStratumPart.
    """
    scores = np.asarray(scores, dtype=np.float64)
    strata = np.asarray(strata)
    related = np.asarray(related, dtype=np.int64)
    unrelated = np.asarray(unrelated, dtype=np.int64)
    if scores.ndim != 2 or strata.shape[0] != scores.shape[0]:
        raise DimensionMismatch(
            f"scores {scores.shape} vs {strata.shape[0]} stratum labels"
        )
    if related.size == 0:
        raise EmptyStratumPart("no related individuals to evaluate")
    if np.intersect1d(related, unrelated).size:
        raise DimensionMismatch("related and unrelated sets overlap")
    k = scores.shape[1]
    numer = np.zeros(k)
    denom = np.zeros(k)
    for lab in np.unique(strata):
        in_lab = strata == lab
        rel = related[in_lab[related]]
        unrel = unrelated[in_lab[unrelated]]
        if rel.size and unrel.size == 0:
            raise EmptyStratumPart(
                f"stratum {lab!r} has related members but no unrelated reference"
            )
        if rel.size == 1:
            raise EmptyStratumPart(
                f"stratum {lab!r} has a single related member; need >= 2"
            )
        if unrel.size == 0:
            continue
        center = scores[unrel].mean(axis=0)
        if rel.size >= 2:
            numer += ((scores[rel] - center) ** 2).sum(axis=0) / (rel.size - 1)
        if unrel.size >= 2:
            denom += ((scores[unrel] - center) ** 2).sum(axis=0) / (unrel.size - 1)
    if not denom.all():
        raise EmptyStratumPart("no stratum provided an unrelated dispersion")
    return np.sqrt(numer / denom)


def rse_mean(scores, strata, related, unrelated, n_components=5):
    vals = rse(scores, strata, related, unrelated)
    return float(vals[: min(n_components, vals.size)].mean())


def split_for_method(fam, method):
    """(related, unrelated) index sets a method is evaluated against.

    pcair leaves its unrelated set U in place and projects the rest, so
    it is judged on the (projected, U) split; every other method on
    (family members, singletons).
    """
    if method == "pcair":
        return fam.projected_indices(), fam.unrelated_indices()
    related = np.array(sorted(fam.family_members), dtype=np.int64)
    unrelated = np.array(fam.singletons, dtype=np.int64)
    return related, unrelated


# === instability ===


@dataclass(frozen=True, eq=False)
class InstabilityReport:
    """Per-component instability with the matrices behind it.

    gold and comparison are (n_family_members, L), rows ordered family by
    family (ascending member index within each family).
    """

    method: str
    values: np.ndarray
    gold: np.ndarray
    comparison: np.ndarray
    member_indices: tuple


def align_component_signs(scores, reference, n_rows):
    """Flip score columns so each correlates positively with reference.

    Agreement is measured over the first n_rows rows (the shared
    singleton block of two decompositions). Returns a flipped copy.
    """
    s = scores.copy()
    a = s[:n_rows] - s[:n_rows].mean(axis=0)
    b = reference[:n_rows] - reference[:n_rows].mean(axis=0)
    flip = np.einsum("ij,ij->j", a, b) < 0.0
    s[:, flip] *= -1.0
    return s


def instability_index(comparison, gold):
    """Sum of squared gold-vs-comparison gaps over squared comparison."""
    comparison = np.asarray(comparison, dtype=np.float64)
    gold = np.asarray(gold, dtype=np.float64)
    if comparison.shape != gold.shape:
        raise DimensionMismatch(
            f"comparison {comparison.shape} vs gold {gold.shape}"
        )
    denom = (comparison**2).sum(axis=0)
    if (denom == 0.0).any():
        raise DegenerateColumn("comparison scores are zero for some component")
    return ((comparison - gold) ** 2).sum(axis=0) / denom


def _crossing_risk(values, rel_tol=0.01):
    """Indices l where component l and l+1 have nearly equal values."""
    v = np.asarray(values, dtype=np.float64)
    if v.size < 2:
        return []
    denom = np.maximum(np.abs(v[:-1]), LOG_GUARD)
    return np.flatnonzero(np.abs(v[:-1] - v[1:]) / denom < rel_tol).tolist()


def instability(X, fam, method, L=DEFAULT_L, gold_reading="row", **method_kwargs):
    """Replacement instability of a method's family scores.

    The gold standard decomposes X restricted to singletons plus one
    family member at a time (that individual's scores are what a
    decomposition free of family structure would give). The comparison
    runs the method on singletons plus one whole family at a time. Signs
    are aligned per component against the first gold run over the shared
    singleton rows.

    gold_reading "row" takes the held-out individual's score row from
    the leading L components. The alternative "last-column" reading
    (kept for auditability; it is how one formula is typed in the
    source material) uses the individual's entry in the very last
    component of its run, replicated across l.

    method may be a name from methods.METHODS or a callable
    (X_sub, fam_sub, L) -> AncestryResult.
    """
    if gold_reading not in ("row", "last-column"):
        raise DimensionMismatch(f"unknown gold_reading {gold_reading!r}")
    sidx = list(fam.singletons)
    n_s = len(sidx)
    if n_s < 2:
        raise TooFewSingletons(f"instability needs >= 2 singletons, have {n_s}")
    if fam.n_families == 0:
        raise DimensionMismatch("instability needs at least one family")
    if L > min(X.p, n_s + 1):
        raise DimensionMismatch(
            f"L = {L} exceeds the rank of the per-individual decompositions"
        )
    members = list(fam.family_members)
    crossings = 0

    gold = np.empty((len(members), L))
    reference = None
    for pos, j in enumerate(members):
        cols = sidx + [j]
        sub = _restrict(X, cols)
        if gold_reading == "row":
            res = naive_scores(sub, L)
        else:
            res = naive_scores(sub, min(X.p, len(cols)))
        crossings += len(_crossing_risk(res.values[:L]))
        if reference is None:
            reference = res.scores[:n_s, :L].copy()
        aligned = align_component_signs(res.scores[:, :L], reference, n_s)
        if gold_reading == "row":
            gold[pos] = aligned[-1]
        else:
            gold[pos] = res.scores[-1, -1]

    comp = np.empty_like(gold)
    pos = 0
    for fmembers in fam.families:
        cols = sidx + list(fmembers)
        sub = _restrict(X, cols)
        sub_fam = FamilyStructure(
            len(cols), [range(n_s, len(cols))]
        )
        if callable(method):
            res = method(sub, sub_fam, L)
            name = getattr(res, "method", "callable")
        else:
            res = compute_scores(sub, sub_fam, method, L, **method_kwargs)
            name = method
        crossings += len(_crossing_risk(res.values[:L]))
        aligned = align_component_signs(res.scores[:, :L], reference, n_s)
        comp[pos : pos + len(fmembers)] = aligned[n_s:]
        pos += len(fmembers)

    if crossings:
        warnings.warn(
            f"instability: {crossings} near-crossing(s) of adjacent component "
            "values (< 1% apart); component index alignment may be unstable",
            stacklevel=2,
        )
    values = instability_index(comp, gold)
    return InstabilityReport(name, values, gold, comp, tuple(members))


def _restrict(X, cols):
    return ScaledMatrix(
        np.ascontiguousarray(X.values[:, cols]),
        X.kind,
        X.snp_ids,
        tuple(X.individual_ids[c] for c in cols),
    )


# === individual scree ===


def loess_smooth(xs, ys, span=DEFAULT_SPAN):
    """Classical loess: degree-1 local fits, tricube weights.

    The window holds the ceil(span * m) nearest neighbors of each x
    (at least 2). xs must be strictly increasing.
    """
    xs = np.ascontiguousarray(xs, dtype=np.float64)
    ys = np.ascontiguousarray(ys, dtype=np.float64)
    if xs.ndim != 1 or xs.shape != ys.shape:
        raise DimensionMismatch(f"xs {xs.shape} vs ys {ys.shape}")
    if not 0.0 < span <= 1.0:
        raise DimensionMismatch(f"span must be in (0, 1], got {span}")
    m = xs.size
    if m < 2:
        raise InsufficientPoints(f"loess needs >= 2 points, got {m}")
    if (np.diff(xs) <= 0).any():
        raise DimensionMismatch("xs must be strictly increasing")
    q = max(2, math.ceil(span * m))
    return _kernels.loess_fit(xs, ys, q)


def individual_scree(result, span=DEFAULT_SPAN):
    """(raw, smoothed) matrices of per-individual scree curves.

    raw[j, l] = (score_jl * value_l)^2; smoothed rows are loess fits of
    log10(raw + 1e-300) against the component index, left on the log10
    scale. A single-component result smooths to its own log10 value.
    """
    raw = (result.scores * result.values[None, :]) ** 2
    logs = np.log10(raw + LOG_GUARD)
    if result.k == 0:
        return raw, logs
    if result.k == 1:
        return raw, logs.copy()
    xs = np.arange(1, result.k + 1, dtype=np.float64)
    smooth = np.empty_like(logs)
    for j in range(logs.shape[0]):
        smooth[j] = loess_smooth(xs, logs[j], span)
    return raw, smooth
