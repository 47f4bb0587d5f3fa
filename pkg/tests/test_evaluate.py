import warnings

import numpy as np
import pytest

from fampca.errors import (
    DegenerateColumn,
    DimensionMismatch,
    EmptyStratumPart,
    InsufficientPoints,
    TooFewSingletons,
)
from fampca.evaluate import (
    align_component_signs,
    individual_scree,
    instability,
    instability_index,
    loess_smooth,
    rse,
    rse_mean,
    split_for_method,
    swiss,
    swiss_mean,
)
from fampca.methods import AncestryResult, naive_scores
from fampca.model import (
    ROW_STANDARDIZED,
    FamilyStructure,
    ScaledMatrix,
    drop_monomorphic,
    scale_genotypes,
)
from fampca.simulate import simulate_census_dataset


def _mk(values):
    values = np.asarray(values, dtype=np.float64)
    p, n = values.shape
    return ScaledMatrix(
        values,
        ROW_STANDARDIZED,
        tuple(f"s{i}" for i in range(p)),
        tuple(f"i{j}" for j in range(n)),
    )


def test_swiss_is_one_for_single_stratum():
    rng = np.random.default_rng(1)
    scores = rng.standard_normal((30, 4))
    vals = swiss(scores, np.ones(30))
    assert np.allclose(vals, 1.0, atol=1e-12)


def test_swiss_is_zero_for_separated_constant_strata():
    scores = np.array([[0.0], [0.0], [5.0], [5.0], [9.0], [9.0]])
    vals = swiss(scores, np.array([1, 1, 2, 2, 3, 3]))
    assert vals[0] == 0.0


def test_swiss_hand_anova():
    strata = np.array([1, 1, 1, 2, 2, 2])
    a = np.array([[0.0], [0.0], [1.0], [10.0], [10.0], [11.0]])
    # within SS = 2/3 + 2/3; total SS = 322 - 32^2/6
    want_a = (4.0 / 3.0) / (322.0 - 32.0**2 / 6.0)
    assert swiss(a, strata)[0] == pytest.approx(want_a, rel=1e-12)
    assert swiss(a, strata)[0] == pytest.approx(0.0088106, rel=1e-4)

    b = np.array([[0.0], [0.0], [1.0], [11.0], [11.0], [12.0]])
    want_b = (4.0 / 3.0) / (387.0 - 35.0**2 / 6.0)
    assert swiss(b, strata)[0] == pytest.approx(want_b, rel=1e-12)
    assert swiss(b, strata)[0] == pytest.approx(0.007293, rel=1e-4)


def test_swiss_affine_invariance():
    rng = np.random.default_rng(2)
    scores = rng.standard_normal((40, 3))
    strata = rng.integers(1, 4, size=40)
    base = swiss(scores, strata)
    shifted = swiss(2.5 * scores - 7.0, strata)
    assert np.allclose(base, shifted, atol=1e-12)
    assert swiss_mean(scores, strata) == pytest.approx(base[:3].mean())


def test_swiss_errors():
    scores = np.column_stack([np.ones(6), np.arange(6.0)])
    with pytest.raises(DegenerateColumn):
        swiss(scores, np.array([1, 1, 1, 2, 2, 2]))
    with pytest.raises(DimensionMismatch):
        swiss(np.arange(12.0).reshape(6, 2), np.array([1, 1, 2, 2]))


def test_rse_hand_example_is_zero():
    scores = np.array([[0.0], [2.0], [1.0], [1.0], [1.0]])
    strata = np.ones(5)
    vals = rse(scores, strata, related=[2, 3, 4], unrelated=[0, 1])
    assert vals[0] == 0.0


def test_rse_exchangeable_near_one():
    rng = np.random.default_rng(2024)
    n_u, n_r, k = 400, 400, 3
    scores = rng.standard_normal((n_u + n_r, k))
    strata = np.array([1] * ((n_u + n_r) // 2) + [2] * ((n_u + n_r) // 2))
    perm = rng.permutation(n_u + n_r)
    vals = rse(scores, strata, perm[:n_r], perm[n_r:])
    print(f"exchangeable rse: {np.round(vals, 4)}")
    assert np.abs(vals - 1.0).max() < 0.1


def test_rse_shift_and_scale_invariance():
    rng = np.random.default_rng(3)
    scores = rng.standard_normal((60, 2))
    strata = np.repeat([1, 2], 30)
    related = np.arange(0, 20)
    unrelated = np.arange(20, 60)
    base = rse(scores, strata, related, unrelated)
    moved = rse(3.0 * scores + 11.0, strata, related, unrelated)
    assert np.allclose(base, moved, atol=1e-12)
    assert rse_mean(scores, strata, related, unrelated) == pytest.approx(
        base.mean()
    )


def test_rse_error_cases():
    rng = np.random.default_rng(4)
    scores = rng.standard_normal((10, 2))
    strata = np.repeat([1, 2], 5)
    with pytest.raises(DimensionMismatch, match="overlap"):
        rse(scores, strata, [0, 1, 2], [2, 3, 4])
    with pytest.raises(EmptyStratumPart):
        rse(scores, strata, [], [0, 1, 2])
    # stratum 1 has related members but no unrelated reference
    with pytest.raises(EmptyStratumPart):
        rse(scores, strata, [0, 1], [5, 6, 7])
    # a single related member in a stratum has no dispersion
    with pytest.raises(EmptyStratumPart):
        rse(scores, strata, [0], [1, 2, 5, 6])


def test_split_for_method():
    fam = FamilyStructure(8, ((1, 2), (5, 6)), representatives=(2, 5))
    related, unrelated = split_for_method(fam, "ms")
    assert related.tolist() == [1, 2, 5, 6]
    assert unrelated.tolist() == [0, 3, 4, 7]
    projected, kept = split_for_method(fam, "pcair")
    assert projected.tolist() == [1, 6]
    assert sorted(kept.tolist()) == [0, 2, 3, 4, 5, 7]


def test_instability_index_identities():
    rng = np.random.default_rng(5)
    w = rng.standard_normal((6, 4))
    assert np.all(instability_index(w, w) == 0.0)
    flipped = align_component_signs(-w, w, 4)
    assert np.array_equal(flipped, w)
    assert np.all(instability_index(w, flipped) == 0.0)
    with pytest.raises(DimensionMismatch):
        instability_index(w, w[:, :2])
    with pytest.raises(DegenerateColumn):
        instability_index(np.zeros((3, 2)), np.ones((3, 2)))


def test_instability_gold_like_callable_scores_zero():
    sim = simulate_census_dataset(19, [2, 3], 12, K=2, p=300)
    G, _ = drop_monomorphic(sim.genotypes)
    S = scale_genotypes(G)
    fam = sim.pedigree

    def gold_like(sub, sub_fam, L):
        n_s = sub.n - sub_fam.n_family_members
        sidx = list(range(n_s))
        ref = None
        rows = []
        first_values = None
        for j in range(n_s, sub.n):
            cols = sidx + [j]
            red = ScaledMatrix(
                np.ascontiguousarray(sub.values[:, cols]),
                sub.kind,
                sub.snp_ids,
                tuple(sub.individual_ids[c] for c in cols),
            )
            res = naive_scores(red, L)
            if ref is None:
                ref = res.scores[:n_s, :L].copy()
                first_values = res.values[:L]
            aligned = align_component_signs(res.scores[:, :L], ref, n_s)
            rows.append(aligned[-1])
        scores = np.vstack([ref, np.vstack(rows)])
        return AncestryResult("gold-like", scores, first_values, sub.individual_ids)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        report = instability(S, fam, gold_like, L=4)
    assert report.values.max() < 1e-12
    assert report.method == "gold-like"
    assert report.member_indices == tuple(sorted(fam.family_members))


def test_instability_ms_and_cpw_agree_on_census():
    sim = simulate_census_dataset(3, [2] * 6 + [3] * 2 + [4], 80, K=5, p=800)
    G, _ = drop_monomorphic(sim.genotypes)
    S = scale_genotypes(G)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rep_ms = instability(S, sim.pedigree, "ms")
        rep_cpw = instability(S, sim.pedigree, "cpw")
    rel = np.abs(rep_ms.values - rep_cpw.values) / np.maximum(
        rep_ms.values, rep_cpw.values
    )
    print(f"ms vs cpw instability reldiff: {np.round(rel, 4)}")
    assert np.all(rel[:4] < 0.10)
    assert rep_ms.gold.shape == (sim.pedigree.n_family_members, 6)


def test_instability_emits_near_crossing_warning():
    sim = simulate_census_dataset(3, [2] * 6 + [3] * 2 + [4], 80, K=5, p=800)
    G, _ = drop_monomorphic(sim.genotypes)
    S = scale_genotypes(G)
    with pytest.warns(UserWarning, match="near-crossing"):
        instability(S, sim.pedigree, "ms")


def test_instability_validation():
    sim = simulate_census_dataset(23, [2], 10, K=1, p=120)
    G, _ = drop_monomorphic(sim.genotypes)
    S = scale_genotypes(G)
    fam = sim.pedigree
    with pytest.raises(DimensionMismatch, match="exceeds the rank"):
        instability(S, fam, "ms", L=50)
    with pytest.raises(DimensionMismatch, match="gold_reading"):
        instability(S, fam, "ms", gold_reading="diagonal")
    nofam = FamilyStructure(S.n, ())
    with pytest.raises(DimensionMismatch, match="family"):
        instability(S, nofam, "ms")
    tiny = FamilyStructure(3, ((0, 1),))
    rng = np.random.default_rng(0)
    with pytest.raises(TooFewSingletons):
        instability(_mk(rng.standard_normal((40, 3))), tiny, "ms")


def test_instability_last_column_reading_runs():
    sim = simulate_census_dataset(23, [2], 10, K=1, p=120)
    G, _ = drop_monomorphic(sim.genotypes)
    S = scale_genotypes(G)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        report = instability(S, sim.pedigree, "ms", L=3, gold_reading="last-column")
    assert report.values.shape == (3,)
    assert np.isfinite(report.values).all()
    # the last-column reading replicates one entry across l
    assert np.allclose(report.gold, report.gold[:, :1])


def test_loess_reproduces_linear_data():
    xs = np.linspace(0.0, 5.0, 40)
    ys = 2.0 * xs - 3.0
    assert np.allclose(loess_smooth(xs, ys, 0.3), ys, atol=1e-9)
    three = np.array([0.0, 1.0, 2.0])
    assert np.allclose(loess_smooth(three, 4 * three, 1.0), 4 * three, atol=1e-9)


def test_loess_smooths_noisy_sine():
    rng = np.random.default_rng(7)
    m = 200
    xs = np.linspace(0.0, 4 * np.pi, m)
    truth = np.sin(xs)
    ys = truth + 0.3 * rng.standard_normal(m)
    fit = loess_smooth(xs, ys, 0.3)
    rmse_fit = np.sqrt(((fit - truth) ** 2).mean())
    rmse_raw = np.sqrt(((ys - truth) ** 2).mean())
    print(f"loess rmse: fit={rmse_fit:.4f} raw={rmse_raw:.4f}")
    assert rmse_fit < rmse_raw
    assert rmse_fit < 0.265


def test_loess_validation():
    with pytest.raises(InsufficientPoints):
        loess_smooth(np.array([1.0]), np.array([2.0]), 0.5)
    xs = np.array([0.0, 1.0, 1.0])
    with pytest.raises(DimensionMismatch, match="increasing"):
        loess_smooth(xs, xs, 0.5)
    good = np.array([0.0, 1.0, 2.0])
    with pytest.raises(DimensionMismatch, match="span"):
        loess_smooth(good, good, 0.0)
    with pytest.raises(DimensionMismatch, match="span"):
        loess_smooth(good, good, 1.5)


def test_individual_scree_column_sums():
    rng = np.random.default_rng(9)
    X = _mk(rng.standard_normal((100, 12)))
    res = naive_scores(X, 6)
    raw, smooth = individual_scree(res)
    assert np.allclose(raw.sum(axis=0), res.values**2, atol=1e-8)
    assert raw.shape == smooth.shape == (12, 6)


def test_individual_scree_small_k():
    rng = np.random.default_rng(10)
    X = _mk(rng.standard_normal((50, 5)))
    res = naive_scores(X, 1)
    raw, smooth = individual_scree(res)
    assert np.allclose(smooth, np.log10(raw + 1e-300), atol=1e-12)

    empty = AncestryResult("naive", np.empty((5, 0)), np.empty(0), tuple("abcde"))
    raw0, smooth0 = individual_scree(empty)
    assert raw0.shape == smooth0.shape == (5, 0)


def test_individual_scree_constant_row():
    scores = np.full((3, 8), 0.5)
    values = np.full(8, 2.0)
    res = AncestryResult("naive", scores, values, ("a", "b", "c"))
    raw, smooth = individual_scree(res)
    assert np.allclose(raw, 1.0, atol=1e-15)
    assert np.allclose(smooth, 0.0, atol=1e-10)
