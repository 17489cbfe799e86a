"""Scenario generators for the simulation study.

All scenarios share the longitudinal response model: environment factors are
multivariate normal with AR-1 correlation (first column split at its median
into a binary exposure), errors are exchangeable within subject with marginal
variance one, and the true coefficient vector is sparse with magnitudes drawn
uniformly from a configured range.  Scenarios differ in the genetic matrix:

* GENE_EXPRESSION_AR1 - continuous columns, AR-1 correlation across genes.
* DICHOTOMIZED_SNP    - scenario-1 draws cut at their empirical 30th/70th
                        percentiles into genotypes 0/1/2.
* LD_SNP              - genotypes from a haplotype model: the first locus is
                        Hardy-Weinberg, each following locus is drawn from the
                        conditional genotype distribution implied by adjacent
                        two-locus haplotype frequencies with a given minor
                        allele frequency and LD correlation r.

The true support places whole groups, main-only, interaction-only, and partial
patterns; with defaults it spends 25 genetic nonzeros as 6 main effects plus 19
interactions, and the intercept and all environment coefficients are nonzero,
for 31 nonzero coefficients in total.

Everything is driven by ``numpy.random.Generator`` streams spawned from integer
seeds, so identical seeds give bit-identical datasets regardless of thread
count or replicate scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import List, Tuple, Union

import numpy as np

from .correlation import Correlation, true_correlation
from .datamodel import LongitudinalDataset, design_dim, expand_design

SeedLike = Union[int, np.random.SeedSequence, np.random.Generator, None]


class Scenario(Enum):
    GENE_EXPRESSION_AR1 = "gene-expression-ar1"
    DICHOTOMIZED_SNP = "dichotomized-snp"
    LD_SNP = "ld-snp"

    @classmethod
    def from_name(cls, name: str) -> "Scenario":
        try:
            return cls(name.strip().lower())
        except ValueError:
            choices = ", ".join(s.value for s in cls)
            raise ValueError(f"unknown scenario {name!r}; choose one of {choices}")


@dataclass(frozen=True)
class ScenarioConfig:
    """Data-generating configuration; defaults match the study design."""

    scenario: Scenario = Scenario.GENE_EXPRESSION_AR1
    n: int = 400
    k: int = 5
    p: int = 200
    q: int = 5
    rho_x: float = 0.8          # AR-1 correlation of covariates
    tau: float = 0.8            # exchangeable error correlation
    maf: float = 0.3            # minor allele frequency (LD_SNP)
    ld_r: float = 0.3           # LD correlation between adjacent loci (LD_SNP)
    n_true: int = 25            # nonzero genetic coordinates
    coef_low: float = 0.3
    coef_high: float = 0.7
    error_scale: float = 1.0    # 0 gives noise-free responses
    seed: int = 0

    def __post_init__(self):
        if min(self.n, self.k, self.p, self.q) < 1:
            raise ValueError("n, k, p, q must all be positive")
        if not 0.0 <= self.rho_x < 1.0 or not 0.0 <= self.tau < 1.0:
            raise ValueError("rho_x and tau must lie in [0, 1)")
        if not 0 <= self.n_true <= self.p * (self.q + 1):
            raise ValueError("n_true exceeds the number of genetic coordinates")
        if self.coef_low > self.coef_high:
            raise ValueError("coefficient range is inverted")
        if self.error_scale < 0:
            raise ValueError("error_scale must be non-negative")
        if self.scenario is Scenario.LD_SNP:
            haplotype_frequencies(self.maf, self.maf, self.ld_r)  # validates


@dataclass(frozen=True)
class SimulatedTruth:
    """Dataset plus the generating coefficients and support."""

    dataset: LongitudinalDataset
    beta_true: np.ndarray
    true_main: Tuple[int, ...]
    true_inter: Tuple[Tuple[int, int], ...]
    config: ScenarioConfig


def _rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _mvn_rows(n: int, corr: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    chol = np.linalg.cholesky(corr)
    return rng.standard_normal((n, corr.shape[0])) @ chol.T


def _median_split(col: np.ndarray) -> np.ndarray:
    # Strictly-above split: exactly half the subjects get 1 when n is even.
    return (col > np.median(col)).astype(float)


def gen_environment(config: ScenarioConfig, rng: np.random.Generator) -> np.ndarray:
    """(n, k, q) environment tensor, constant over time, first column binary."""
    base = _mvn_rows(config.n, true_correlation(Correlation.AR1, config.q, config.rho_x), rng)
    base[:, 0] = _median_split(base[:, 0])
    return np.repeat(base[:, None, :], config.k, axis=1)


def haplotype_frequencies(q_a: float, q_b: float, r: float) -> np.ndarray:
    """Two-locus haplotype frequencies (AB, Ab, aB, ab) for LD correlation r."""
    delta = r * np.sqrt(q_a * (1 - q_a) * q_b * (1 - q_b))
    freqs = np.array([
        q_a * q_b + delta,
        q_a * (1 - q_b) - delta,
        (1 - q_a) * q_b - delta,
        (1 - q_a) * (1 - q_b) + delta,
    ])
    if np.any(freqs < 0):
        raise ValueError(
            f"LD correlation r={r} is infeasible at allele frequencies ({q_a}, {q_b})"
        )
    return freqs


def conditional_genotype_matrix(maf: float, r: float) -> np.ndarray:
    """P(next genotype = j | current genotype = i) under random haplotype pairing.

    Genotypes count minor alleles (0, 1, 2).  A subject's two haplotypes are
    independent draws from the four-haplotype distribution; the joint genotype
    table of two adjacent loci follows by enumeration, and each locus stays
    Hardy-Weinberg marginally.
    """
    freqs = haplotype_frequencies(maf, maf, r)
    has_a = np.array([1, 1, 0, 0])     # haplotypes AB, Ab, aB, ab
    has_b = np.array([1, 0, 1, 0])
    joint = np.zeros((3, 3))
    for h1 in range(4):
        for h2 in range(4):
            g1 = has_a[h1] + has_a[h2]
            g2 = has_b[h1] + has_b[h2]
            joint[g1, g2] += freqs[h1] * freqs[h2]
    return joint / joint.sum(axis=1, keepdims=True)


def hardy_weinberg_probs(maf: float) -> np.ndarray:
    """P(genotype = 0, 1, 2) at one locus."""
    return np.array([(1 - maf) ** 2, 2 * maf * (1 - maf), maf ** 2])


def _sample_categorical(probs: np.ndarray, rng: np.random.Generator, size: int) -> np.ndarray:
    u = rng.random(size)
    return (u[:, None] > np.cumsum(probs)[:-1]).sum(axis=1)


def gen_ld_snps(n: int, p: int, maf: float, r: float, rng: np.random.Generator) -> np.ndarray:
    """(n, p) genotype matrix chained pairwise along adjacent loci."""
    geno = np.empty((n, p), dtype=float)
    geno[:, 0] = _sample_categorical(hardy_weinberg_probs(maf), rng, n)
    cond = conditional_genotype_matrix(maf, r)
    cum = np.cumsum(cond, axis=1)
    for v in range(1, p):
        u = rng.random(n)
        prev = geno[:, v - 1].astype(int)
        geno[:, v] = (u[:, None] > cum[prev, :-1]).sum(axis=1)
    return geno


def _dichotomize_three(x: np.ndarray) -> np.ndarray:
    """Cut each column at its 30th/70th percentiles into 0/1/2."""
    lo = np.quantile(x, 0.3, axis=0)
    hi = np.quantile(x, 0.7, axis=0)
    return np.where(x <= lo, 0.0, np.where(x <= hi, 1.0, 2.0))


def gen_genetic(config: ScenarioConfig, rng: np.random.Generator) -> np.ndarray:
    """(n, p) genetic matrix per scenario."""
    if config.scenario is Scenario.LD_SNP:
        return gen_ld_snps(config.n, config.p, config.maf, config.ld_r, rng)
    expr = _mvn_rows(config.n, true_correlation(Correlation.AR1, config.p, config.rho_x), rng)
    if config.scenario is Scenario.DICHOTOMIZED_SNP:
        return _dichotomize_three(expr)
    return expr


def gen_covariates(config: ScenarioConfig, rng: SeedLike = None) -> Tuple[np.ndarray, np.ndarray]:
    """(env, gen) pair drawn in a fixed order from one stream."""
    r = _rng(rng)
    env = gen_environment(config, r)
    gen = gen_genetic(config, r)
    return env, gen


def _support_patterns(n_true: int, q: int) -> List[Tuple[int, int]]:
    """(has_main, n_inter) per affected group.

    Spends roughly 6/25 of the budget on main effects and fills whole groups
    first, so the defaults span whole-group, main-only, and interaction-only
    patterns: 25 nonzeros become three full groups, three lone mains, and one
    interaction-only group of four.
    """
    if n_true == 0:
        return []
    if q == 0:
        return [(1, 0)] * n_true
    mains = min(max(1, round(n_true * 6 / 25)), n_true)
    inters = n_true - mains
    full = min(mains, inters // q)
    pats: List[Tuple[int, int]] = [(1, q)] * full
    mains -= full
    inters -= full * q
    while inters > 0:
        take = min(inters, q)
        pats.append((0, take))
        inters -= take
    pats.extend([(1, 0)] * mains)
    # interaction-only groups go between full groups, so their coordinates
    # always have a same-slot causal neighbour once placed on a chain
    if full and len(pats) > full:
        head, tail = pats[:full], pats[full:]
        part = [pat for pat in tail if pat[0] == 0]
        rest = [pat for pat in tail if pat[0] == 1]
        if part:
            pats = head[:-1] + part + [head[-1]] + rest
    return pats


def _place_groups(n_pats: int, p: int, r: np.random.Generator) -> np.ndarray:
    """Factor indices for the affected groups: one chain of neighbours.

    The affected factors sit on consecutive columns at a random offset, so
    every causal column has strongly correlated causal neighbours, the way a
    disease locus sits inside a correlated block of markers.  Counts above
    eight split into blocks of four-or-fewer kept well apart; when p is too
    small for spaced blocks they pack from the left instead.
    """
    if n_pats <= 8:
        sizes = [n_pats]
    else:
        sizes = [4] * (n_pats // 4)
        rem = n_pats % 4
        if rem == 1:
            sizes[-1] = 3
            rem = 2
        if rem:
            sizes.append(rem)
    n_blocks = len(sizes)
    offsets = np.concatenate([[0], np.cumsum(sizes[:-1])]).astype(int)
    span = p - sum(sizes)
    if span < n_blocks:
        starts = offsets
    else:
        ends = np.asarray(sizes) - 1
        for _ in range(200):
            starts = np.sort(r.choice(span, size=n_blocks, replace=False))
            starts += offsets
            # Gaps of at least 8 keep cross-block correlation below 0.17.
            gaps = starts[1:] - (starts[:-1] + ends[:-1])
            if n_blocks < 2 or np.min(gaps) >= 8:
                break
    groups = []
    for s, size in zip(starts, sizes):
        groups.extend(range(int(s), int(s) + size))
    return np.array(groups)


def gen_truth(config: ScenarioConfig, rng: SeedLike = None):
    """Draw (beta_true, true_main, true_inter) for one replicate."""
    r = _rng(rng)
    q, p = config.q, config.p
    d = design_dim(p, q)
    pats = _support_patterns(config.n_true, q)
    if len(pats) > p:
        raise ValueError("support placement needs more groups than p provides")

    def draw(size=None):
        return r.uniform(config.coef_low, config.coef_high, size)

    beta = np.zeros(d)
    beta[0] = draw()
    beta[1 : 1 + q] = draw(q)
    groups = _place_groups(len(pats), p, r)
    mains: List[int] = []
    inters: List[Tuple[int, int]] = []
    for (has_main, n_inter), v in zip(pats, groups):
        start = 1 + q + v * (q + 1)
        if has_main:
            beta[start] = draw()
            mains.append(int(v))
        slots = r.choice(q, size=n_inter, replace=False) if n_inter else []
        for u in np.sort(slots):
            beta[start + 1 + int(u)] = draw()
            inters.append((int(v), int(u)))
    return beta, tuple(sorted(mains)), tuple(sorted(inters))


def gen_response(
    config: ScenarioConfig,
    env: np.ndarray,
    gen: np.ndarray,
    beta_true: np.ndarray,
    rng: SeedLike = None,
) -> LongitudinalDataset:
    """Assemble the dataset: y = W beta + exchangeable errors."""
    r = _rng(rng)
    shell = LongitudinalDataset(response=np.zeros((config.n, config.k)), env=env, gen=gen)
    mean = expand_design(shell).w @ beta_true
    eps = _mvn_rows(config.n, true_correlation(Correlation.EXCHANGEABLE, config.k, config.tau), r)
    y = mean + config.error_scale * eps
    return LongitudinalDataset(response=y, env=env, gen=gen)


def simulate_scenario(config: ScenarioConfig, seed: SeedLike = None) -> SimulatedTruth:
    """Generate one replicate; ``seed`` defaults to ``config.seed``."""
    r = _rng(config.seed if seed is None else seed)
    env, gen = gen_covariates(config, r)
    beta, mains, inters = gen_truth(config, r)
    data = gen_response(config, env, gen, beta, r)
    return SimulatedTruth(dataset=data, beta_true=beta, true_main=mains,
                          true_inter=inters, config=config)


def simulate_validation(truth: SimulatedTruth, seed: SeedLike = None) -> LongitudinalDataset:
    """Fresh covariates and errors under the same true coefficients."""
    r = _rng(seed)
    env, gen = gen_covariates(truth.config, r)
    return gen_response(truth.config, env, gen, truth.beta_true, r)


def replicate_seed(master_seed: int, replicate: int, stream: int = 0) -> np.random.SeedSequence:
    """Deterministic per-replicate stream, independent of scheduling."""
    return np.random.SeedSequence(entropy=master_seed, spawn_key=(replicate, stream))


def delete_observations(
    data: LongitudinalDataset,
    fraction: float,
    seed: SeedLike = None,
    min_keep: int = 1,
) -> LongitudinalDataset:
    """Randomly mark a fraction of observed cells missing.

    Every subject keeps at least ``min_keep`` observed time points, so the
    unbalanced dataset stays valid.
    """
    if not 0.0 <= fraction < 1.0:
        raise ValueError("fraction must lie in [0, 1)")
    r = _rng(seed)
    observed = data.observed.copy()
    cells = np.argwhere(observed)
    quota = int(np.floor(fraction * len(cells)))
    per_subject = observed.sum(axis=1)
    for idx in r.permutation(len(cells)):
        if quota == 0:
            break
        i, j = cells[idx]
        if per_subject[i] > min_keep:
            observed[i, j] = False
            per_subject[i] -= 1
            quota -= 1
    return LongitudinalDataset(response=data.response, env=data.env,
                               gen=data.gen, observed=observed)
