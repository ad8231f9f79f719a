"""Monte Carlo estimators and hypothesis tests against the closed-form moments.

Every replicate draws from its own stream, derived from ``(seed, tag, r)``
with :class:`numpy.random.SeedSequence`. Vectorised direct samplers use one
stream per fixed-size block of replicates instead. Results are assembled in
replicate order, so the thread count never changes a reported number.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import stats as sps

from . import moments
from .coalescent import sample_total_lengths
from .coupling import (
    MAX_LEAVES,
    build_context,
    pi_k_corner,
    pi_s_corner,
    pi_union,
    sample_coupled_sk,
)
from .errors import InvalidParameter, ScaleLimit
from .ewens import (
    cycle_counts,
    exact_cycle_pmf,
    feller_cycle_counts,
    sample_crp_batch,
    sample_segregating_sites_batch,
)
from .geometry import Rect, RectUnion, validate_union
from .harmonic import floor_power

__all__ = [
    "DEFAULT_SEED",
    "MIN_REPLICATES",
    "MCConfig",
    "TestReport",
    "CountTable",
    "default_threads",
    "replicate_rng",
    "run_replicates",
    "simulate_counts",
    "ks_statistic",
    "gumbel_cdf",
    "chisquare_gof",
    "poisson_chisquare",
    "estimate_void_probability",
    "estimate_mean_count",
    "coupling_discrepancy",
    "coupling_decay",
    "gumbel_ks",
    "poisson_gof",
    "joint_equality",
    "ewens_consistency",
    "moment_agreement",
]

DEFAULT_SEED = 0x5EED
MIN_REPLICATES = 100
BLOCK = 1024

# stream tags; one per kind of draw so suites never share random numbers by accident
TAG_COUPLED = 0
TAG_GUMBEL = 1
TAG_CRP = 2
TAG_FELLER = 3
TAG_DIRECT_S = 4
TAG_DIRECT_SK = 5
TAG_DIRECT_K = 6

KS_CRIT_5 = 1.36
KS_CRIT_1 = 1.63


@dataclass(frozen=True)
class MCConfig:
    n: int
    replicates: int
    seed: int = DEFAULT_SEED
    t1_max: float = 1.0
    t2_max: float = 1.0

    def __post_init__(self):
        if self.n < 2:
            raise InvalidParameter(f"n must be >= 2, got {self.n}")
        if self.replicates < MIN_REPLICATES:
            raise InvalidParameter(
                f"replicates must be >= {MIN_REPLICATES}, got {self.replicates}")
        if not 0 <= self.seed < 2**64:
            raise InvalidParameter(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if not (self.t1_max > 0 and self.t2_max > 0):
            raise InvalidParameter("t1_max and t2_max must be positive")
        if floor_power(self.n, self.t2_max) > MAX_LEAVES:
            raise ScaleLimit(
                f"floor(n**t2_max) exceeds {MAX_LEAVES} for n={self.n}, t2_max={self.t2_max}")

    @property
    def leaves(self) -> int:
        return floor_power(self.n, self.t2_max)


@dataclass
class TestReport:
    name: str
    estimate: float
    std_error: float
    reference: float
    tolerance: float
    passed: bool
    replicates: int
    seed: int
    n: int
    details: dict = field(default_factory=dict)

    __test__ = False  # not a pytest class

    def to_dict(self) -> dict:
        return asdict(self)

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return (f"[{mark}] {self.name}: estimate={self.estimate:.6g} "
                f"reference={self.reference:.6g} tol={self.tolerance:.3g} "
                f"se={self.std_error:.3g}")


def default_threads() -> int:
    env = os.environ.get("COALPP_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def replicate_rng(seed: int, tag: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(tag, index)))


def run_replicates(count: int, fn: Callable[[int], object],
                   threads: int | None = None) -> list:
    """Evaluate ``fn(r)`` for ``r = 0..count-1`` and return results in order."""
    threads = threads or default_threads()
    if threads <= 1 or count < 2:
        return [fn(r) for r in range(count)]
    size = max(1, math.ceil(count / (4 * threads)))
    chunks = [range(a, min(count, a + size)) for a in range(0, count, size)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = pool.map(lambda ch: [fn(r) for r in ch], chunks)
        return [x for part in parts for x in part]


def _blocked(count: int, seed: int, tag: int,
             draw: Callable[[int, np.random.Generator], np.ndarray],
             threads: int | None = None) -> np.ndarray:
    """Vectorised draws in fixed blocks of :data:`BLOCK` replicates, one stream per block."""
    blocks = range(math.ceil(count / BLOCK))

    def one(b: int) -> np.ndarray:
        size = min(BLOCK, count - b * BLOCK)
        return draw(size, replicate_rng(seed, tag, b))

    parts = run_replicates(len(blocks), one, threads)
    return np.concatenate(parts) if parts else np.empty(0)


def _as_region(region) -> RectUnion:
    if isinstance(region, Rect):
        return RectUnion((region,))
    if isinstance(region, tuple) and len(region) == 2 and not isinstance(region[0], Rect):
        return RectUnion((Rect(0.0, region[0], 0.0, region[1]),))
    return validate_union(region)


def _is_corner(u: RectUnion) -> bool:
    return len(u) == 1 and u.rects[0].s1 == 0 and u.rects[0].s2 == 0


@dataclass(frozen=True)
class CountTable:
    """Per-replicate S and K counts, shape ``(replicates, regions)``."""

    s: np.ndarray
    k: np.ndarray

    def get(self, which: str) -> np.ndarray:
        if which == "S":
            return self.s
        if which == "K":
            return self.k
        raise InvalidParameter(f"which must be 'S' or 'K', got {which!r}")


def simulate_counts(cfg: MCConfig, regions: Sequence, threads: int | None = None) -> CountTable:
    """Build one coupled context per replicate and evaluate both measures on each region."""
    unions = [_as_region(r) for r in regions]

    def one(r: int) -> np.ndarray:
        ctx = build_context(cfg.n, cfg.t1_max, cfg.t2_max, replicate_rng(cfg.seed, TAG_COUPLED, r))
        out = np.empty((2, len(unions)), dtype=np.int64)
        for i, u in enumerate(unions):
            out[0, i] = pi_union(ctx, "S", u)
            out[1, i] = pi_union(ctx, "K", u)
        return out

    rows = run_replicates(cfg.replicates, one, threads)
    arr = np.stack(rows) if rows else np.empty((0, 2, len(unions)), dtype=np.int64)
    return CountTable(arr[:, 0, :], arr[:, 1, :])


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    x = np.asarray(x, dtype=np.float64)
    if x.size < 2:
        return float(x.mean()) if x.size else 0.0, 0.0
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def _binomial_se(p: float, count: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / count)


def _var_se(x: np.ndarray) -> tuple[float, float]:
    """Sample variance and its large-sample standard error ``sqrt((mu4 - s^4) / N)``."""
    x = np.asarray(x, dtype=np.float64)
    var = float(x.var(ddof=1))
    mu4 = float(np.mean((x - x.mean()) ** 4))
    return var, math.sqrt(max(mu4 - var * var, 0.0) / x.size)


def _check(name: str, estimate: float, se: float, reference: float, tolerance: float,
           cfg_like: tuple[int, int, int], z: float = 3.0, **details) -> TestReport:
    reps, seed, n = cfg_like
    tol = max(tolerance, z * se)
    return TestReport(name, estimate, se, reference, tol,
                      bool(abs(estimate - reference) <= tol), reps, seed, n, dict(details))


# ---------------------------------------------------------------------------
# goodness-of-fit helpers


def gumbel_cdf(x):
    return np.exp(-np.exp(-np.asarray(x, dtype=np.float64)))


def ks_statistic(samples, cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    """Two-sided Kolmogorov-Smirnov distance between the empirical CDF and ``cdf``."""
    x = np.sort(np.asarray(samples, dtype=np.float64))
    size = x.size
    if size == 0:
        raise InvalidParameter("need at least one sample")
    f = cdf(x)
    i = np.arange(1, size + 1)
    return float(max(np.max(i / size - f), np.max(f - (i - 1) / size)))


def chisquare_gof(observed: np.ndarray, probs: np.ndarray, min_expected: float = 5.0
                  ) -> tuple[float, int, float]:
    """Pearson chi-square of ``observed`` cell counts against ``probs``.

    Adjacent cells are merged (from the right) until every expected count is
    at least ``min_expected``. Returns ``(statistic, dof, p_value)``.
    """
    observed = np.asarray(observed, dtype=np.float64)
    probs = np.asarray(probs, dtype=np.float64)
    total = observed.sum()
    expected = probs * total
    obs_cells: list[float] = []
    exp_cells: list[float] = []
    acc_o = acc_e = 0.0
    for o, e in zip(observed[::-1], expected[::-1]):
        acc_o += o
        acc_e += e
        if acc_e >= min_expected:
            obs_cells.append(acc_o)
            exp_cells.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0 or acc_o > 0:
        if exp_cells:
            obs_cells[-1] += acc_o
            exp_cells[-1] += acc_e
        else:
            obs_cells.append(acc_o)
            exp_cells.append(acc_e)
    o = np.array(obs_cells)
    e = np.array(exp_cells)
    dof = len(o) - 1
    if dof < 1:
        return 0.0, 0, 1.0
    stat = float(np.sum((o - e) ** 2 / e))
    return stat, dof, float(sps.chi2.sf(stat, dof))


def poisson_chisquare(counts: np.ndarray, mean: float, tail: int = 5) -> tuple[float, int, float]:
    """Chi-square of integer ``counts`` against Poisson(``mean``), cells ``0..tail-1`` and ``>= tail``."""
    counts = np.asarray(counts, dtype=np.int64)
    if mean == 0:
        return 0.0, 0, 1.0 if not counts.any() else 0.0
    observed = np.bincount(np.minimum(counts, tail), minlength=tail + 1).astype(np.float64)
    probs = sps.poisson.pmf(np.arange(tail), mean)
    probs = np.append(probs, sps.poisson.sf(tail - 1, mean))
    return chisquare_gof(observed, probs)


# ---------------------------------------------------------------------------
# coupled-field suites


def estimate_void_probability(cfg: MCConfig, u, which: str = "S", tolerance: float = 0.02,
                              threads: int | None = None, table: CountTable | None = None,
                              column: int = 0) -> TestReport:
    """Fraction of replicates where the measure of ``u`` is zero, against ``exp(-area)``.

    ``table``/``column`` reuse counts already produced by :func:`simulate_counts`.
    """
    u = _as_region(u)
    if table is None:
        table = simulate_counts(cfg, [u], threads)
        column = 0
    counts = table.get(which)[:, column]
    p = float(np.mean(counts == 0))
    se = _binomial_se(p, counts.size)
    details = {"region": _region_text(u), "which": which}
    if which == "S" or all(r.s1 == 0 for r in u):
        details["finite_n_reference"] = moments.void_probability_exact(cfg.n, u)
    return _check(f"void[{which}] {_region_text(u)}", p, se,
                  moments.limit_void_probability(u), tolerance,
                  (counts.size, cfg.seed, cfg.n), **details)


def estimate_mean_count(cfg: MCConfig, region, which: str = "S", rel_tolerance: float = 0.05,
                        threads: int | None = None, table: CountTable | None = None,
                        column: int = 0) -> TestReport:
    """Sample mean of the measure of ``region`` against its area and the finite-n mean."""
    u = _as_region(region)
    if table is None:
        table = simulate_counts(cfg, [u], threads)
        column = 0
    counts = table.get(which)[:, column]
    mean, se = _mean_se(counts)
    exact = moments.exact_mean_union(cfg.n, u, which)
    exact_ok = abs(mean - exact) <= 3 * se or (se == 0 and mean == exact)
    report = _check(f"mean[{which}] {_region_text(u)}", mean, se, moments.limit_mean(u),
                    rel_tolerance * u.area, (counts.size, cfg.seed, cfg.n),
                    region=_region_text(u), which=which, corner=_is_corner(u),
                    finite_n_reference=exact, finite_n_passed=bool(exact_ok))
    report.passed = report.passed and bool(exact_ok)
    return report


def coupling_discrepancy(cfg: MCConfig, t: tuple[float, float],
                         threads: int | None = None) -> TestReport:
    """Mean and positivity rate of ``S - K`` on the corner ``[0, t)``."""
    t1, t2 = t

    def one(r: int) -> int:
        ctx = build_context(cfg.n, cfg.t1_max, cfg.t2_max, replicate_rng(cfg.seed, TAG_COUPLED, r))
        return pi_s_corner(ctx, t) - pi_k_corner(ctx, t)

    delta = np.array(run_replicates(cfg.replicates, one, threads), dtype=np.int64)
    return _delta_report(cfg, t, delta)


def _delta_report(cfg: MCConfig, t, delta: np.ndarray) -> TestReport:
    mean, se = _mean_se(delta)
    p = float(np.mean(delta > 0))
    exact = moments.mean_delta(cfg.n, t)
    return _check(f"delta mean n={cfg.n} t=({t[0]:g},{t[1]:g})", mean, se, exact, 0.0,
                  (delta.size, cfg.seed, cfg.n),
                  prob_positive=p, prob_positive_se=_binomial_se(p, delta.size),
                  prob_positive_exact=moments.prob_delta_positive(cfg.n, t),
                  markov_bound=exact, delta_min=int(delta.min()) if delta.size else 0)


def coupling_decay(ns: Sequence[int], replicates: int, seed: int = DEFAULT_SEED,
                   t: tuple[float, float] = (1.0, 1.0), threads: int | None = None,
                   known: dict[int, TestReport] | None = None,
                   t1_max: float | None = None, t2_max: float | None = None) -> TestReport:
    """Estimated mean discrepancy along increasing ``n``; passes when strictly decreasing.

    ``known`` maps ``n`` to a report already computed for that scale.
    """
    known = known or {}
    t1_max = t1_max if t1_max is not None else max(t[0], 1e-12)
    t2_max = t2_max if t2_max is not None else max(t[1], 1e-12)
    reports = [known[n] if n in known else
               coupling_discrepancy(MCConfig(n, replicates, seed, t1_max, t2_max), t, threads)
               for n in ns]
    means = [r.estimate for r in reports]
    exact = [moments.mean_delta(n, t) for n in ns]
    decreasing = all(a > b for a, b in zip(means, means[1:]))
    steps = [b - a for a, b in zip(means, means[1:])]
    return TestReport(f"delta decay n={list(ns)}", float(max(steps)) if steps else 0.0,
                      max(r.std_error for r in reports), 0.0, 0.0, decreasing,
                      replicates, seed, int(ns[-1]),
                      {"ns": list(ns), "means": means, "exact": exact,
                       "std_errors": [r.std_error for r in reports]})


def poisson_gof(cfg: MCConfig, rects: Sequence[Rect], which: str = "S",
                alpha: float = 0.01, max_corr: float = 0.05,
                threads: int | None = None, table: CountTable | None = None,
                columns: Sequence[int] | None = None) -> TestReport:
    """Chi-square of each rectangle's counts against Poisson(area) plus pairwise correlations."""
    rects = list(validate_union(rects))
    if table is None:
        table = simulate_counts(cfg, rects, threads)
        columns = range(len(rects))
    counts = table.get(which)[:, list(columns)]
    pvalues = []
    for i, r in enumerate(rects):
        _, _, p = poisson_chisquare(counts[:, i], r.area)
        pvalues.append(p)
    corrs = []
    for i in range(len(rects)):
        for j in range(i + 1, len(rects)):
            a, b = counts[:, i], counts[:, j]
            if a.std() == 0 or b.std() == 0:
                corrs.append(0.0)
            else:
                corrs.append(float(np.corrcoef(a, b)[0, 1]))
    min_p = min(pvalues) if pvalues else 1.0
    worst = max((abs(c) for c in corrs), default=0.0)
    passed = min_p > alpha and worst <= max_corr
    return TestReport(f"poisson-gof[{which}] {';'.join(_rect_text(r) for r in rects)}",
                      min_p, 0.0, 1.0, 1.0 - alpha, passed, counts.shape[0], cfg.seed, cfg.n,
                      {"p_values": pvalues, "correlations": corrs, "max_abs_corr": worst,
                       "max_corr": max_corr, "alpha": alpha})


def joint_equality(cfg: MCConfig, rects: Sequence[Rect], threads: int | None = None,
                   table: CountTable | None = None,
                   columns: Sequence[int] | None = None) -> TestReport:
    """Rate at which S and K agree on every rectangle.

    Since ``S - K`` is a nonnegative measure, disagreement anywhere implies
    disagreement on the enclosing corner, whose probability is at most its
    expected discrepancy.
    """
    rects = list(validate_union(rects))
    if table is None:
        table = simulate_counts(cfg, rects, threads)
        columns = range(len(rects))
    cols = list(columns)
    equal = np.all(table.s[:, cols] == table.k[:, cols], axis=1)
    p = float(np.mean(equal))
    se = _binomial_se(p, equal.size)
    u = RectUnion(tuple(rects))
    envelope = u.bounds()
    bound = moments.mean_delta(cfg.n, envelope)
    tol = bound + 3 * se
    return TestReport(f"joint-equality {';'.join(_rect_text(r) for r in rects)}", p, se, 1.0,
                      tol, bool(1.0 - p <= tol), equal.size, cfg.seed, cfg.n,
                      {"envelope": list(envelope), "markov_bound": bound,
                       "prob_unequal_exact_envelope": moments.prob_delta_positive(cfg.n, envelope)})


# ---------------------------------------------------------------------------
# direct-draw suites


def gumbel_ks(cfg: MCConfig, threads: int | None = None, level: float = 0.01) -> TestReport:
    """KS distance of ``L_m / 2 - log m`` to the standard Gumbel CDF."""
    m = cfg.leaves
    if m < 100:
        raise InvalidParameter(f"need floor(n**t2_max) >= 100, got {m}")
    totals = _blocked(cfg.replicates, cfg.seed, TAG_GUMBEL,
                      lambda size, rng: sample_total_lengths(m, size, rng), threads)
    residuals = totals / 2.0 - math.log(m)
    return _gumbel_report(residuals, cfg.seed, cfg.n, m, level)


def _gumbel_report(residuals: np.ndarray, seed: int, n: int, m: int, level: float) -> TestReport:
    d = ks_statistic(residuals, gumbel_cdf)
    crit = {0.01: KS_CRIT_1, 0.05: KS_CRIT_5}[level] / math.sqrt(residuals.size)
    return TestReport(f"gumbel-ks m={m}", d, 0.0, 0.0, crit, bool(d <= crit),
                      int(residuals.size), seed, n, {"m": m, "level": level})


def ewens_consistency(n_sub: int, t1: float, replicates: int, seed: int = DEFAULT_SEED,
                      alpha: float = 0.01, threads: int | None = None) -> TestReport:
    """CRP and Feller cycle counts against the exact Stirling pmf."""
    if n_sub > 12:
        raise InvalidParameter(f"n_sub must be <= 12, got {n_sub}")
    if replicates < MIN_REPLICATES:
        raise InvalidParameter(f"replicates must be >= {MIN_REPLICATES}, got {replicates}")
    pmf = exact_cycle_pmf(n_sub, t1)
    crp = _blocked(replicates, seed, TAG_CRP,
                   lambda size, rng: cycle_counts(sample_crp_batch(n_sub, t1, size, rng)), threads)
    feller = _blocked(replicates, seed, TAG_FELLER,
                      lambda size, rng: feller_cycle_counts(n_sub, t1, size, rng), threads)
    out = {}
    for name, draws in (("crp", crp), ("feller", feller)):
        observed = np.bincount(draws.astype(np.int64), minlength=n_sub + 1)[1:]
        stat, dof, p = chisquare_gof(observed, pmf.probs)
        out[name] = {"statistic": stat, "dof": dof, "p_value": p}
    min_p = min(out["crp"]["p_value"], out["feller"]["p_value"])
    return TestReport(f"ewens n={n_sub} t1={t1:g}", min_p, 0.0, 1.0, 1.0 - alpha,
                      bool(min_p > alpha), replicates, seed, n_sub, out)


def moment_agreement(m: int, t1: float, replicates: int, seed: int = DEFAULT_SEED,
                     threads: int | None = None) -> list[TestReport]:
    """Direct draws of S, K and coupled S - K against the exact moment formulas.

    ``m`` is a leaf count, so ``n = m`` and ``t2 = 1`` in the formulas.
    """
    if replicates < MIN_REPLICATES:
        raise InvalidParameter(f"replicates must be >= {MIN_REPLICATES}, got {replicates}")
    if m < 2:
        raise InvalidParameter(f"m must be >= 2, got {m}")
    t = (t1, 1.0)
    s = _blocked(replicates, seed, TAG_DIRECT_S,
                 lambda size, rng: sample_segregating_sites_batch(m, t1, size, rng), threads)
    k = _blocked(replicates, seed, TAG_DIRECT_K,
                 lambda size, rng: feller_cycle_counts(m, t1, size, rng), threads)
    pairs = np.array(run_replicates(
        replicates, lambda r: sample_coupled_sk(m, t1, replicate_rng(seed, TAG_DIRECT_SK, r)),
        threads), dtype=np.int64)
    d = pairs[:, 0] - pairs[:, 1]
    prov = (replicates, seed, m)
    tag = f"m={m} t1={t1:g}"
    mean, se = _mean_se(s)
    var, var_se = _var_se(s)
    kmean, kse = _mean_se(k)
    dvar, dvar_se = _var_se(d)
    return [
        _check(f"mean S {tag}", mean, se, moments.mean_s(m, t), 0.0, prov),
        _check(f"var S {tag}", var, var_se, moments.var_s(m, t), 0.0, prov),
        _check(f"mean K {tag}", kmean, kse, moments.mean_k(m, t), 0.0, prov),
        _check(f"var S-K {tag}", dvar, dvar_se, moments.var_s_minus_k(m, t), 0.0, prov),
    ]


def _rect_text(r: Rect) -> str:
    return f"[{r.s1:g},{r.u1:g})x[{r.s2:g},{r.u2:g})"


def _region_text(u: RectUnion) -> str:
    return "+".join(_rect_text(r) for r in u) or "empty"
