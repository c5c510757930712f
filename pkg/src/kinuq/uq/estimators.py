"""Monte Carlo and control-variate multilevel Monte Carlo field estimators.

The multilevel estimator combines L mesh levels as

    prod_{i=0}^{L-1} lam_i E_{M0}[q_(0)]
      + sum_{l=1}^{L-1} prod_{i=l}^{L-1} lam_i E_{Ml}[q_(l) - lam_{l-1} q_(l-1)],

with lam_{L-1} = 1 and each remaining coefficient the per-cell regression
slope of the fine level on the coarse one, estimated from that level's
coupled samples.  Level differences are formed on the coarse grid of each
pair (conservative restriction of the fine field); the combined field is
assembled on the coarsest grid, where the lam = 1 combination telescopes to
the finest-level sample mean exactly.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError
from .metrics import restrict
from .sampling import draw_samples

QUANTITIES = ("rho", "ux", "uy", "temp")


@dataclass(frozen=True)
class LevelSpec:
    level: int
    n_cells: int
    dt: float
    samples: int

    def __post_init__(self):
        if self.n_cells < 4 or self.samples < 1 or self.dt <= 0:
            raise ConfigError(f"bad level spec {self}")


def check_nesting(levels) -> None:
    for a, b in zip(levels, levels[1:]):
        if b.n_cells != 2 * a.n_cells:
            raise ConfigError(
                f"levels must refine by 2: {a.n_cells} -> {b.n_cells}")


def mc_estimate(q_samples) -> np.ndarray:
    """Pointwise arithmetic mean of the sampled fields."""
    return np.mean(np.stack([np.asarray(q) for q in q_samples]), axis=0)


def lambda_coeff(ql, ql_prev, ddof: int = 0):
    """Per-cell regression slope of fine-level samples on coarse-level ones.

    Returns (lam, degenerate) where degenerate marks cells whose coarse
    sample variance vanishes; lam falls back to 1 there (plain telescoping).
    """
    ql = np.stack([np.asarray(q) for q in ql])
    qp = np.stack([np.asarray(q) for q in ql_prev])
    if ql.shape != qp.shape or ql.shape[0] < 2:
        raise ConfigError("need >= 2 paired samples of matching shape")
    dl = ql - ql.mean(axis=0)
    dp = qp - qp.mean(axis=0)
    cov = (dl * dp).sum(axis=0)
    var = (dp * dp).sum(axis=0)
    degenerate = var <= 0.0
    lam = np.where(degenerate, 1.0, cov / np.where(degenerate, 1.0, var))
    return lam, degenerate


@dataclass
class MlmcEstimate:
    levels: list
    combined: dict                    # quantity -> field on the coarsest grid
    combined_sq: dict                 # same combination applied to q^2
    lambdas: list                     # per pair: quantity -> field on coarse grid
    level_means: list                 # per level: quantity -> mean field
    level_variances: list             # per level: quantity -> sample variance field
    degenerate_cells: int = 0
    negative_variance_cells: int = 0
    model_runs: int = 0
    wall_clock: float = 0.0
    warnings: list = field(default_factory=list)
    pair_samples: list = field(default_factory=list)  # per pair: q -> (fine, coarse)
    level_walls: list = field(default_factory=list)   # seconds spent per level

    def variance(self, quantity: str) -> np.ndarray:
        """V[q] = E[q^2] - E[q]^2 with both expectations taken by the active
        estimator; negative values clip to zero (counted)."""
        v = self.combined_sq[quantity] - self.combined[quantity] ** 2
        neg = v < 0.0
        self.negative_variance_cells += int(neg.sum())
        return np.where(neg, 0.0, v)

    def std(self, quantity: str) -> np.ndarray:
        return np.sqrt(self.variance(quantity))


def mlmc_estimate(levels, model_runner, master_seed: int, dim: int,
                  quantities=QUANTITIES, share_samples: bool = False,
                  scalar_lambda: bool = False, force_unit_lambda: bool = False,
                  batch_runner=None):
    """Control-variate MLMC over the given level hierarchy.

    model_runner(z, level) must return {quantity: field of level.n_cells}.
    Level l >= 1 runs its samples coupled on the (l, l-1) mesh pair.
    share_samples reuses the level-0 stream on every level (testing hook for
    the telescoping identity); scalar_lambda averages the regression
    coefficient over the domain instead of keeping a field.  batch_runner,
    when given, evaluates a list of (z, level) tasks (possibly in parallel)
    and returns the results in order.
    """
    levels = list(levels)
    check_nesting(levels)
    if batch_runner is None:
        def batch_runner(tasks):
            return [model_runner(z, lv) for z, lv in tasks]
    t0 = time.perf_counter()
    n0 = levels[0].n_cells
    runs = 0

    level_means, level_variances, lambdas = [], [], []
    pair_terms = []     # per level l>=1: quantity -> mean of (R q_l - lam q_{l-1})
    pair_terms_sq = []
    lambdas_sq = []
    pair_samples = []

    level_walls = []
    t_level = time.perf_counter()
    samples0 = draw_samples(levels[0].samples, dim, master_seed, purpose=0)
    fields0 = batch_runner([(s.z, levels[0]) for s in samples0])
    runs += len(fields0)
    level_walls.append(time.perf_counter() - t_level)
    level_means.append({q: mc_estimate([f[q] for f in fields0]) for q in quantities})
    level_variances.append({
        q: np.var(np.stack([f[q] for f in fields0]), axis=0) for q in quantities})

    degenerate = 0
    for l in range(1, len(levels)):
        t_level = time.perf_counter()
        purpose = 0 if share_samples else l
        samples = draw_samples(levels[l].samples, dim, master_seed, purpose=purpose)
        tasks = [(s.z, lv) for s in samples for lv in (levels[l], levels[l - 1])]
        results = batch_runner(tasks)
        fine = results[0::2]
        coarse = results[1::2]
        runs += 2 * len(samples)
        level_walls.append(time.perf_counter() - t_level)
        lam_q, lam_sq_q, term_q, term_sq_q = {}, {}, {}, {}
        pairs_q = {}
        for q in quantities:
            fv = [restrict(f[q], levels[l - 1].n_cells) for f in fine]
            cv = [c[q] for c in coarse]
            pairs_q[q] = (np.stack(fv), np.stack(cv))
            if force_unit_lambda:
                lam = np.ones(levels[l - 1].n_cells)
                lam_sq = np.ones(levels[l - 1].n_cells)
            else:
                lam, deg = lambda_coeff(fv, cv)
                lam_sq, deg_sq = lambda_coeff([f**2 for f in fv], [c**2 for c in cv])
                degenerate += int(deg.sum())
                if scalar_lambda:
                    lam = np.full_like(lam, lam.mean())
                    lam_sq = np.full_like(lam_sq, lam_sq.mean())
            lam_q[q] = lam
            lam_sq_q[q] = lam_sq
            term_q[q] = mc_estimate([f - lam * c for f, c in zip(fv, cv)])
            term_sq_q[q] = mc_estimate([f**2 - lam_sq * c**2 for f, c in zip(fv, cv)])
        lambdas.append(lam_q)
        lambdas_sq.append(lam_sq_q)
        pair_terms.append(term_q)
        pair_terms_sq.append(term_sq_q)
        pair_samples.append(pairs_q)
        level_means.append({q: mc_estimate([restrict(f[q], levels[l - 1].n_cells)
                                            for f in fine]) for q in quantities})
        level_variances.append({
            q: np.var(np.stack([restrict(f[q], levels[l - 1].n_cells) for f in fine]),
                      axis=0) for q in quantities})

    combined = _combine(level_means[0], pair_terms, lambdas, n0, quantities)
    mean0_sq = {q: mc_estimate([f[q] ** 2 for f in fields0]) for q in quantities}
    combined_sq = _combine(mean0_sq, pair_terms_sq, lambdas_sq, n0, quantities)

    return MlmcEstimate(
        levels=levels,
        combined=combined,
        combined_sq=combined_sq,
        lambdas=lambdas,
        level_means=level_means,
        level_variances=level_variances,
        degenerate_cells=degenerate,
        model_runs=runs,
        wall_clock=time.perf_counter() - t0,
        pair_samples=pair_samples,
        level_walls=level_walls,
    )


def _combine(mean0, pair_terms, lambdas, n0, quantities):
    """Assemble the telescoped combination on the coarsest grid."""
    out = {}
    for q in quantities:
        lam0 = [restrict(lam[q], n0) for lam in lambdas]   # lam_{L-1}=1 implicit
        pref = np.ones(n0)
        for lam in lam0:
            pref = pref * lam
        est = pref * mean0[q]
        for l, term in enumerate(pair_terms, start=1):
            pref_l = np.ones(n0)
            for lam in lam0[l:]:
                pref_l *= lam
            est = est + pref_l * restrict(term[q], n0)
        out[q] = est
    return out


def variance_field(samples) -> np.ndarray:
    """Plain-MC variance: E[q^2] and E[q] estimated separately, then
    subtracted; negative round-off values clip to zero."""
    stack = np.stack([np.asarray(q) for q in samples])
    v = mc_estimate(stack**2) - mc_estimate(stack) ** 2
    return np.where(v < 0.0, 0.0, v)
