"""Stratified genotype simulator with sibship families.

Population model
----------------
- Ancestral minor-allele frequencies follow the increasing triangular
  density on [maf_lo, maf_hi] (inverse CDF lo + (hi - lo) * sqrt(u)),
  mean lo + 2/3 (hi - lo).
- Each stratum's per-SNP frequency drifts from the ancestral one by a
  Balding-Nichols beta(q (1-fst)/fst, (1-q)(1-fst)/fst) draw.
- Founders carry latent standard-normal chains with blockwise AR(1)
  dependence: within each block of `block` SNPs the lag-1 correlation is
  +-rho, the sign drawn once per block and shared by everyone, so the
  local dependence survives into population-level genotype correlation.
  Chains restart at block boundaries.
- Latent values become genotypes stratum by stratum, SNP by SNP: the
  individuals are ranked (ties broken by a random key drawn once per
  founder x SNP) and split at the Hardy-Weinberg counts
  round(m (1-q)^2) and round(m ((1-q)^2 + 2 q (1-q))) into 0 / 1 / 2.
- Each family's two parents are founders of one stratum consumed without
  replacement (the tail of the stratum's founder pool, pairwise in
  order; founders are i.i.d. so this matches random selection). Parent
  haplotypes are reconstructed by randomly splitting alleles at
  heterozygous sites; every child receives one recombined haplotype per
  parent, with crossovers between consecutive SNPs at probability
  mean_recombinations / (p - 1). Parents never appear in the output.

Draw order (one PCG64 stream from the seed)
-------------------------------------------
1. p uniforms -> ancestral frequencies
2. (p, K) betas -> stratum frequencies (skipped when fst = 0)
3. ceil(p / block) fair bits -> block signs
4. (n_founders, p) normals -> latent chains, founders stratum-major
5. (n_founders, p) uniforms -> ranking tiebreak keys
6. per stratum, per family, in order: p fair bits (father's split),
   p fair bits (mother's split), then per child: one fair bit (father
   start), p - 1 uniforms (father crossovers), one fair bit (mother
   start), p - 1 uniforms (mother crossovers)

Output columns are stratum-major: each stratum lists its singleton
founders first, then its families' children family by family.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import InfeasibleDesign, ParseError
from .model import FamilyStructure, GenotypeMatrix

BALANCED = "balanced"
UNBALANCED = "unbalanced"


@dataclass(frozen=True)
class SimConfig:
    """Simulation parameters; defaults give the desk-scale balanced design."""

    seed: int
    n: int = 500
    K: int = 5
    prop: float = 0.2
    n_f: int = 3
    design: str = BALANCED
    p: int = 5000
    fst: float = 0.01
    rho: float = 0.2
    block: int = 20
    maf_lo: float = 0.38
    maf_hi: float = 0.50
    mean_recombinations: float = 30.0


@dataclass(frozen=True, eq=False)
class SimOutput:
    genotypes: GenotypeMatrix
    strata: np.ndarray  # (n,) 1-based stratum index per output column
    pedigree: FamilyStructure
    freqs: np.ndarray  # (p, K) per-stratum frequencies
    config: SimConfig


def half_triangular_ppf(u, lo, hi):
    """Inverse CDF of the increasing triangular density on [lo, hi]."""
    return lo + (hi - lo) * np.sqrt(u)


def draw_ancestral_freqs(p, lo, hi, rng):
    if not 0.0 < lo < hi < 1.0:
        raise InfeasibleDesign(f"need 0 < maf_lo < maf_hi < 1, got [{lo}, {hi}]")
    return half_triangular_ppf(rng.random(p), lo, hi)


def draw_subpop_freqs(q, fst, K, rng):
    """Balding-Nichols drift of ancestral frequencies, (p, K)."""
    if not 0.0 <= fst < 1.0:
        raise InfeasibleDesign(f"need 0 <= fst < 1, got {fst}")
    q = np.asarray(q, dtype=np.float64)
    if fst == 0.0:
        return np.repeat(q[:, None], K, axis=1)
    scale = (1.0 - fst) / fst
    return rng.beta(q[:, None] * scale, (1.0 - q[:, None]) * scale, size=(q.size, K))


def simulate_latent_blocks(n, p, rho, block, rng):
    """(n, p) latent chains; see the module docstring for the model."""
    if not 0.0 <= rho < 1.0:
        raise InfeasibleDesign(f"need 0 <= rho < 1, got {rho}")
    if block < 1:
        raise InfeasibleDesign(f"need block >= 1, got {block}")
    n_blocks = -(-p // block)
    signs = (rng.integers(0, 2, size=n_blocks) * 2 - 1).astype(np.float64)
    z = rng.standard_normal((n, p))
    return _kernels.ar1_fill(z, signs, rho, block)


def latent_to_genotypes(z, q, tiebreak):
    """Rank-based Hardy-Weinberg conversion within one stratum.

    z and tiebreak are (m, p); q is the (p,) stratum frequency vector.
    Returns (m, p) int8 genotypes with exact per-SNP genotype counts.
    """
    m, p = z.shape
    order = np.lexsort((tiebreak, z), axis=0)
    hom_ref = (1.0 - q) ** 2
    het = 2.0 * q * (1.0 - q)
    t0 = np.rint(m * hom_ref).astype(np.int64)
    t1 = np.rint(m * (hom_ref + het)).astype(np.int64)
    pos = np.arange(m, dtype=np.int64)[:, None]
    code = ((pos >= t0[None, :]).astype(np.int8) + (pos >= t1[None, :]).astype(np.int8))
    g = np.empty((m, p), dtype=np.int8)
    np.put_along_axis(g, order, code, axis=0)
    return g


def split_haplotypes(genotype, bits):
    """Split one parent's genotype row into two haplotypes.

    bits supplies one fair bit per SNP deciding which haplotype carries
    the minor allele at heterozygous sites.
    """
    hap_a = ((genotype == 2) | ((genotype == 1) & (bits == 1))).astype(np.int8)
    hap_b = (genotype - hap_a).astype(np.int8)
    return hap_a, hap_b


def crossover_rate(p, mean_recombinations):
    if p < 2:
        raise InfeasibleDesign("meiosis needs p >= 2")
    rate = mean_recombinations / (p - 1)
    if not 0.0 <= rate <= 1.0:
        raise InfeasibleDesign(
            f"mean_recombinations={mean_recombinations} infeasible for p={p}; "
            f"need p >= {math.ceil(mean_recombinations) + 1}"
        )
    return rate


def draw_meiosis(rng, p, rate):
    """One meiosis: (start haplotype bit, (p-1,) crossover indicators)."""
    start = int(rng.integers(0, 2))
    cross = (rng.random(p - 1) < rate).astype(np.uint8)
    return start, cross


def simulate_sibship(father, mother, n_children, mean_recombinations, rng):
    """Genotypes of n_children full siblings, (n_children, p) int8.

    father and mother are (p,) genotype rows from the same stratum's
    founder pool.
    """
    father = np.ascontiguousarray(father, dtype=np.int8)
    mother = np.ascontiguousarray(mother, dtype=np.int8)
    p = father.shape[0]
    rate = crossover_rate(p, mean_recombinations)
    fa = split_haplotypes(father, rng.integers(0, 2, size=p, dtype=np.int8))
    mo = split_haplotypes(mother, rng.integers(0, 2, size=p, dtype=np.int8))
    out = np.empty((n_children, p), dtype=np.int8)
    for c in range(n_children):
        start, cross = draw_meiosis(rng, p, rate)
        paternal = _kernels.transmit(fa[0], fa[1], start, cross)
        start, cross = draw_meiosis(rng, p, rate)
        maternal = _kernels.transmit(mo[0], mo[1], start, cross)
        out[c] = paternal + maternal
    return out


def _feasible_members(n, prop, n_f):
    """Validate that n * prop is an integral multiple of n_f."""
    exact = n * prop
    members = int(round(exact))
    if abs(exact - members) > 1e-9 or members % n_f != 0:
        nearest = int(round(exact / n_f)) * n_f
        raise InfeasibleDesign(
            f"n*prop = {exact:g} family members cannot form sibships of {n_f}",
            suggestion=(
                f"{nearest} members = {nearest // n_f} families "
                f"(prop = {nearest / n:g})"
            ),
        )
    return members


def _allocate(cfg):
    """Per-stratum (n_singletons, n_families) for the configured design."""
    if cfg.design not in (BALANCED, UNBALANCED):
        raise InfeasibleDesign(f"unknown design {cfg.design!r}")
    if cfg.K < 1 or cfg.n < 2:
        raise InfeasibleDesign(f"need K >= 1 and n >= 2, got K={cfg.K}, n={cfg.n}")
    if not 0.0 <= cfg.prop < 1.0:
        raise InfeasibleDesign(f"need 0 <= prop < 1, got {cfg.prop}")
    if cfg.n_f < 2:
        raise InfeasibleDesign(f"need sibship size >= 2, got {cfg.n_f}")
    if cfg.n % cfg.K != 0:
        raise InfeasibleDesign(
            f"n = {cfg.n} not divisible into K = {cfg.K} equal strata",
            suggestion=f"n = {cfg.n - cfg.n % cfg.K} or {cfg.n + cfg.K - cfg.n % cfg.K}",
        )
    members = _feasible_members(cfg.n, cfg.prop, cfg.n_f)
    n_families = members // cfg.n_f
    per_stratum = cfg.n // cfg.K
    if cfg.design == BALANCED:
        base, extra = divmod(n_families, cfg.K)
        fams = [base + (1 if k < extra else 0) for k in range(cfg.K)]
    else:
        fams = [n_families] + [0] * (cfg.K - 1)
    active = cfg.K if cfg.design == BALANCED else 1
    cap = active * (per_stratum // cfg.n_f) * cfg.n_f
    singles = []
    for k, f_k in enumerate(fams):
        s_k = per_stratum - f_k * cfg.n_f
        if s_k < 0:
            raise InfeasibleDesign(
                f"stratum {k + 1} holds {f_k} families x {cfg.n_f} = "
                f"{f_k * cfg.n_f} members but only {per_stratum} slots",
                suggestion=f"prop <= {cap / cfg.n:g}",
            )
        singles.append(s_k)
    return singles, [[cfg.n_f] * f_k for f_k in fams]


def simulate_dataset(cfg):
    """Simulate a full stratified dataset per the configured design."""
    singles, family_sizes = _allocate(cfg)
    return _simulate(cfg, singles, family_sizes)


def simulate_census_dataset(
    seed,
    family_sizes,
    n_singletons,
    K=5,
    p=5000,
    fst=0.01,
    rho=0.2,
    block=20,
    maf_lo=0.38,
    maf_hi=0.50,
    mean_recombinations=30.0,
):
    """Simulate an explicit family-size census instead of a uniform design.

    family_sizes lists every family's size (>= 2 each); families go to
    strata round-robin in the given order, singletons are spread as
    evenly as possible (earlier strata take the remainder).
    """
    sizes = [int(s) for s in family_sizes]
    if any(s < 2 for s in sizes):
        raise InfeasibleDesign("census family sizes must all be >= 2")
    per_stratum_fams = [[] for _ in range(K)]
    for i, s in enumerate(sizes):
        per_stratum_fams[i % K].append(s)
    base, extra = divmod(int(n_singletons), K)
    singles = [base + (1 if k < extra else 0) for k in range(K)]
    n = int(n_singletons) + sum(sizes)
    cfg = SimConfig(
        seed=seed,
        n=n,
        K=K,
        prop=sum(sizes) / n,
        n_f=min(sizes) if sizes else 2,
        design=BALANCED,
        p=p,
        fst=fst,
        rho=rho,
        block=block,
        maf_lo=maf_lo,
        maf_hi=maf_hi,
        mean_recombinations=mean_recombinations,
    )
    return _simulate(cfg, singles, per_stratum_fams)


def _simulate(cfg, singles, family_sizes):
    """Engine shared by the design and census entry points.

    singles[k] is stratum k's singleton count; family_sizes[k] lists the
    sizes of stratum k's families.
    """
    K = len(singles)
    crossover_rate(cfg.p, cfg.mean_recombinations)  # fail fast before drawing
    founders_per = [
        singles[k] + 2 * len(family_sizes[k]) for k in range(K)
    ]
    n_founders = sum(founders_per)
    if n_founders < 1:
        raise InfeasibleDesign("design produces no individuals")
    n_out = sum(singles) + sum(sum(f) for f in family_sizes)

    rng = np.random.default_rng(cfg.seed)
    q_anc = draw_ancestral_freqs(cfg.p, cfg.maf_lo, cfg.maf_hi, rng)
    freqs = draw_subpop_freqs(q_anc, cfg.fst, K, rng)
    latent = simulate_latent_blocks(n_founders, cfg.p, cfg.rho, cfg.block, rng)
    tiebreak = rng.random((n_founders, cfg.p))

    rows = np.empty((n_out, cfg.p), dtype=np.int8)
    strata = np.empty(n_out, dtype=np.int64)
    families = []
    out_at = 0
    founder_at = 0
    for k in range(K):
        m_k = founders_per[k]
        if m_k == 0:
            continue
        pool = latent_to_genotypes(
            latent[founder_at : founder_at + m_k],
            freqs[:, k],
            tiebreak[founder_at : founder_at + m_k],
        )
        founder_at += m_k
        s_k = singles[k]
        rows[out_at : out_at + s_k] = pool[:s_k]
        strata[out_at : out_at + s_k] = k + 1
        out_at += s_k
        parent_at = s_k
        for size in family_sizes[k]:
            father = pool[parent_at]
            mother = pool[parent_at + 1]
            parent_at += 2
            kids = simulate_sibship(father, mother, size, cfg.mean_recombinations, rng)
            rows[out_at : out_at + size] = kids
            strata[out_at : out_at + size] = k + 1
            families.append(tuple(range(out_at, out_at + size)))
            out_at += size
    assert out_at == n_out and founder_at == n_founders

    width = max(4, len(str(n_out)))
    ids = tuple(f"I{j + 1:0{width}d}" for j in range(n_out))
    snp_width = max(4, len(str(cfg.p)))
    snps = tuple(f"snp{i + 1:0{snp_width}d}" for i in range(cfg.p))
    geno = GenotypeMatrix(np.ascontiguousarray(rows.T), snps, ids)
    pedigree = FamilyStructure(n_out, families)
    return SimOutput(geno, strata, pedigree, freqs, cfg)


def config_from_mapping(mapping, seed):
    """Build a SimConfig from a flat string mapping (CLI config file)."""
    kinds = {
        "n": int,
        "K": int,
        "prop": float,
        "n_f": int,
        "design": str,
        "p": int,
        "fst": float,
        "rho": float,
        "block": int,
        "maf_lo": float,
        "maf_hi": float,
        "mean_recombinations": float,
        "seed": int,
    }
    kwargs = {"seed": seed}
    for key, raw in mapping.items():
        if key not in kinds:
            raise ParseError(
                f"unknown simulation key {key!r}; valid keys: {sorted(kinds)}"
            )
        if key == "seed":
            continue  # the CLI seed always wins
        try:
            kwargs[key] = kinds[key](raw)
        except ValueError:
            raise ParseError(f"bad value for {key!r}: {raw!r}") from None
    return SimConfig(**kwargs)
