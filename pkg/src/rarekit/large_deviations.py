"""Lower-bound checks for precise large deviations of heavy-tailed vector sums.

For independent nonnegative summands and ``x >= gamma n`` the ratio::

    P[S_n in (x + n c) A] / sum_i P[X_i in (x + n c) A]

should stay asymptotically above 1. Random sums ``S_N(t)`` with Poisson
``N(t)`` use exactly ``floor(lambda t)`` terms in the denominator. The
infimum over ``x`` is reported as the minimum over the supplied grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy import stats

from . import mc
from .mc import EstimateCI, InfeasibleError
from .rare_sets import RareSet
from .vectors import VectorModel, fa_tail_exact, fa_tail_mc, sample_vector

MIN_EXPECTED_HITS = 100
SAMPLEWISE_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class LdpScenario:
    models: Sequence[VectorModel]
    set: RareSet
    gamma: float
    shift_c: float = 0.0
    lam: Optional[float] = None

    def __post_init__(self):
        models = tuple(self.models)
        if not models:
            raise ValueError("need at least one claim model")
        for m in models:
            if m.dim != self.set.dim:
                raise ValueError("all models must share the set dimension")
        if not (math.isfinite(self.gamma) and self.gamma > 0):
            raise ValueError("gamma must be positive")
        if not self.gamma > -self.shift_c:
            raise ValueError(f"need gamma > -shift_c, got gamma={self.gamma}, shift_c={self.shift_c}")
        if self.lam is not None and not self.lam > 0:
            raise ValueError("Poisson rate lam must be positive")
        object.__setattr__(self, "models", models)

    def model(self, i: int) -> VectorModel:
        """Model of summand ``i`` (0-based); the list is cycled."""
        return self.models[i % len(self.models)]

    def counting_mean(self, t: float) -> float:
        if self.lam is None:
            raise ValueError("scenario has no counting process rate")
        return self.lam * t

    def to_json(self) -> dict:
        return {"models": [m.to_json() for m in self.models], "set": self.set.to_json(),
                "gamma": self.gamma, "shift_c": self.shift_c, "lam": self.lam}


def _tail(model: VectorModel, A: RareSet, x: float) -> Optional[float]:
    v = fa_tail_exact(model, A, x)
    return None if v is None else float(v)


# --- dependence condition ---------------------------------------------------


@dataclass
class DependenceScan:
    rows: List[tuple]
    decreasing: bool
    flagged: bool


def dependence_condition_scan(s: LdpScenario, n_grid: Sequence[int], seed: int = 0, n_samples: int = 10**6,
                              threads: int = 1) -> DependenceScan:
    """``sup_i x P[X_i in xA]`` at ``x = gamma n`` for independent summands.

    Under independence the conditional probability factorizes, so the
    condition reduces to ``x P[X in xA] -> 0``. The scan is flagged when the
    sequence fails to decrease strictly over the top half of ``n_grid``.
    """
    ns = sorted(int(n) for n in n_grid)
    if len(ns) < 2 or ns[0] < 2:
        raise ValueError("n_grid needs at least two summand counts >= 2")
    rows = []
    for n in ns:
        x = s.gamma * n
        vals = []
        for i in range(min(n, len(s.models))):
            p = _tail(s.model(i), s.set, x)
            if p is None:
                p = fa_tail_mc(s.model(i), s.set, x, seed, n_samples, threads).value
            vals.append(x * p)
        rows.append((n, float(x), float(max(vals))))
    top = [v for _, _, v in rows[len(rows) // 2:]]
    if len(top) < 2:
        top = [v for _, _, v in rows[-2:]]
    decreasing = all(b < a * (1 - 1e-9) for a, b in zip(top, top[1:]))
    return DependenceScan(rows, decreasing, not decreasing)


# --- weak equivalence -------------------------------------------------------


@dataclass
class WeakEquivalence:
    c1: float
    c2: float
    log_slope: float
    violated: bool
    ratios: List[List[float]] = field(default_factory=list)


SLOPE_TOL = 0.02


def weak_equivalence_check(models: Sequence[VectorModel], A: RareSet, x_grid: Sequence[float]) -> WeakEquivalence:
    """Extreme tail ratios against the first (reference) model over the grid.

    ``log_slope`` is the steepest log-log drift of any ratio across the grid;
    a drift beyond ``SLOPE_TOL`` means the ratio tends to 0 or infinity and
    the assumption ``0 < c1 <= c2 < inf`` is reported as violated.
    """
    xs = np.asarray(x_grid, dtype=float)
    if xs.size < 2:
        raise ValueError("x_grid needs at least two points")
    ref = models[0]
    ref_tail = np.array([_need(ref, A, x) for x in xs])
    for x, v in zip(xs, ref_tail):
        if v <= 0:
            raise ValueError(f"reference tail vanishes at x={x:.6g}")
    ratios = [np.array([_need(m, A, x) for x in xs]) / ref_tail for m in models]
    lx = np.log(xs)
    slopes = []
    for r in ratios:
        if (r <= 0).any():
            slopes.append(-math.inf)
        else:
            slopes.append(float(np.polyfit(lx, np.log(r), 1)[0]))
    worst = max(slopes, key=abs)
    c1 = float(min(r.min() for r in ratios))
    c2 = float(max(r.max() for r in ratios))
    violated = bool(c1 <= 0 or not math.isfinite(c2) or abs(worst) > SLOPE_TOL)
    return WeakEquivalence(c1, c2, worst, violated, [r.tolist() for r in ratios])


def _need(model, A, x):
    p = _tail(model, A, x)
    if p is None:
        raise ValueError("weak_equivalence_check needs analytic tails for every model")
    return p


# --- ratio estimators -------------------------------------------------------


@dataclass
class LdpRow:
    x: float
    shifted: float
    ratio: EstimateCI
    numerator: EstimateCI
    denominator: float
    bonferroni_lower: float
    bonferroni_ok: bool

    def to_json(self) -> dict:
        return {"x": self.x, "shifted_x": self.shifted, "ratio": self.ratio.value, "se": self.ratio.std_error,
                "numerator": self.numerator.value, "numerator_se": self.numerator.std_error,
                "denominator": self.denominator, "bonferroni_lower": self.bonferroni_lower,
                "bonferroni_ok": self.bonferroni_ok}


@dataclass
class LdpResult:
    rows: List[LdpRow]
    n_terms: int
    n_samples: int
    seed: int
    samplewise_violations: int
    extra: dict = field(default_factory=dict)

    @property
    def min_ratio(self) -> float:
        return min(r.ratio.value for r in self.rows)

    @property
    def argmin(self) -> float:
        return min(self.rows, key=lambda r: r.ratio.value).x

    @property
    def grid(self) -> List[float]:
        return [r.x for r in self.rows]


def _denominator_terms(s: LdpScenario, n_terms: int, y: float) -> np.ndarray:
    # probabilities of the first n_terms summands; None entries are not allowed
    out = np.empty(n_terms)
    cache = {}
    for i in range(n_terms):
        k = i % len(s.models)
        if k not in cache:
            p = _tail(s.models[k], s.set, y)
            if p is None:
                raise ValueError("analytic P[X in xA] unavailable for a summand model; use MrvRay or axis-aligned models")
            cache[k] = p
        out[i] = cache[k]
    return out


def _bonferroni(p: np.ndarray) -> float:
    s1 = float(p.sum())
    return s1 - 0.5 * (s1 * s1 - float((p * p).sum()))


def _shifted_grid(s: LdpScenario, xs: np.ndarray, scale: float) -> np.ndarray:
    ys = xs + scale * s.shift_c
    if (ys <= 0).any():
        raise ValueError("shifted capital x + n c must be positive")
    return ys


def _check_feasible(xs, ys, expected_fn, n_samples):
    for x, y in zip(xs, ys):
        hits = n_samples * expected_fn(y)
        if hits < MIN_EXPECTED_HITS:
            raise InfeasibleError(
                f"grid point x={x:.6g} expects {hits:.3g} hits with n_samples={n_samples}; need >= {MIN_EXPECTED_HITS}"
            )


def _sum_kernel(s: LdpScenario, ys: np.ndarray, counts_fn):
    A = s.set

    def chunk(rng, size):
        counts = counts_fn(rng, size)
        total = np.zeros((size, A.dim))
        best = np.zeros(size)
        top = int(counts.max()) if size else 0
        idx = np.arange(size)
        for i in range(top):
            idx = idx[counts[idx] > i]
            x = sample_vector(s.model(i), rng, idx.size)
            total[idx] += x
            best[idx] = np.maximum(best[idx], A.support_value(x))
        y = A.support_value(total)
        viol = int((y < best * (1 - SAMPLEWISE_RTOL)).sum())
        return np.concatenate([(y[:, None] > ys[None, :]).sum(axis=0), [viol]]).astype(np.int64)

    return chunk


def _rows(xs, ys, hits, n_samples, seed, denom_fn, bonf_fn):
    rows = []
    for x, y, h in zip(xs, ys, hits):
        num = mc.binomial_estimate(int(h), n_samples, seed)
        den = denom_fn(y)
        lower = bonf_fn(y)
        rows.append(LdpRow(float(x), float(y), num.scaled(1.0 / den), num, float(den), float(lower),
                           bool(num.value >= lower - 3 * num.std_error)))
    return rows


def ldp_ratio_fixed_n(s: LdpScenario, n: int, x_grid: Sequence[float], seed: int, n_samples: int,
                      threads: int = 1) -> LdpResult:
    """``P_hat[S_n in (x + n c)A] / sum_{i<=n} P[X_i in (x + n c)A]`` on ``x_grid``.

    The denominator is analytic. The Bonferroni lower bound
    ``sum p_i - sum_{i<j} p_i p_j`` is checked within ``3 sigma``, and every
    sample is checked for ``Y_A(S_n) >= max_i Y_A(X_i)``.
    """
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    xs = np.asarray(x_grid, dtype=float)
    if xs.ndim != 1 or xs.size == 0:
        raise ValueError("x_grid must be a nonempty list")
    low = s.gamma * n
    if (xs < low * (1 - 1e-12)).any():
        raise ValueError(f"x_grid must lie in [gamma n, inf) = [{low:.6g}, inf)")
    ys = _shifted_grid(s, xs, n)
    terms = {float(y): _denominator_terms(s, n, y) for y in ys}
    _check_feasible(xs, ys, lambda y: terms[float(y)].sum(), n_samples)
    chunk = _sum_kernel(s, ys, lambda rng, size: np.full(size, n, dtype=np.int64))
    out = mc.sum_chunks(mc.map_chunks(chunk, seed, n_samples, threads))
    rows = _rows(xs, ys, out[:-1], n_samples, seed, lambda y: terms[float(y)].sum(),
                 lambda y: _bonferroni(terms[float(y)]))
    return LdpResult(rows, n, n_samples, seed, int(out[-1]))


def ldp_ratio_random_sum(s: LdpScenario, t: float, x_grid: Sequence[float], seed: int, n_samples: int,
                         threads: int = 1) -> LdpResult:
    """``P_hat[S_N(t) in (x + c lambda(t))A] / sum_{i<=floor(lambda(t))} P[X_i in (x + c lambda(t))A]``.

    ``N(t)`` is Poisson with mean ``lambda(t) = lam t``, independent of the
    summands. The Bonferroni bound is averaged over the Poisson law of ``N``.
    """
    mean = s.counting_mean(t)
    n_terms = int(math.floor(mean))
    if n_terms < 1:
        raise ValueError("lambda(t) must be >= 1 so that the denominator has a term")
    xs = np.asarray(x_grid, dtype=float)
    if xs.ndim != 1 or xs.size == 0:
        raise ValueError("x_grid must be a nonempty list")
    if (xs < s.gamma * mean * (1 - 1e-12)).any():
        raise ValueError(f"x_grid must lie in [gamma lambda(t), inf) = [{s.gamma * mean:.6g}, inf)")
    ys = _shifted_grid(s, xs, mean)
    n_hi = int(stats.poisson.isf(1e-12, mean)) + 1
    pmf = stats.poisson.pmf(np.arange(n_hi + 1), mean)
    probs = {float(y): _denominator_terms(s, n_hi, y) for y in ys}

    def bonf(y):
        p = probs[float(y)]
        c1, c2 = np.concatenate([[0.0], np.cumsum(p)]), np.concatenate([[0.0], np.cumsum(p * p)])
        return float(np.sum(pmf * (c1 - 0.5 * (c1 * c1 - c2))))

    def expected(y):
        p = probs[float(y)]
        return float(np.sum(pmf * np.concatenate([[0.0], np.cumsum(p)])))

    _check_feasible(xs, ys, expected, n_samples)
    chunk = _sum_kernel(s, ys, lambda rng, size: rng.poisson(mean, size))
    out = mc.sum_chunks(mc.map_chunks(chunk, seed, n_samples, threads))
    rows = _rows(xs, ys, out[:-1], n_samples, seed, lambda y: probs[float(y)][:n_terms].sum(), bonf)
    return LdpResult(rows, n_terms, n_samples, seed, int(out[-1]))
