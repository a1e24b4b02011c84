"""Scale mixtures ``Theta * X`` with FGM conditional dependence on ``Y_A``.

The FGM copula ``C(u, v) = uv(1 + theta(1-u)(1-v))`` joins the copula
coordinate ``U`` of the claim driver (``Y_A``, or the radius ``R`` for
:class:`~rarekit.vectors.MrvRay`, which induces the same dependence on
``Y_A = R s(W)``) with the coordinate ``V`` of ``Theta``. As ``U -> 1``::

    P[U > u | V = v] / (1 - u)  ->  1 + theta (2v - 1),

so ``h(t) = 1 + theta (2 F_Theta(t) - 1)``, bounded by ``1 + |theta|``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy import integrate, special

from . import mc
from .mc import EstimateCI
from .rare_sets import RareSet
from .tails import BoundedUniform, Degenerate, Exponential, Pareto, TailModel, model_from_json
from .vectors import (
    IndependentMarginals,
    MrvRay,
    VectorModel,
    fa_isf,
    fa_tail_exact,
    sample_vector,
    vector_model_from_json,
)

THETA_CAP = 0.99


@dataclass(frozen=True)
class FgmCoupling:
    theta_model: TailModel
    fgm_theta: float = 0.0

    def __post_init__(self):
        if not isinstance(self.theta_model, TailModel):
            raise TypeError("theta_model must be a TailModel")
        if not (math.isfinite(self.fgm_theta) and abs(self.fgm_theta) <= THETA_CAP):
            raise ValueError(f"fgm_theta must lie in [-{THETA_CAP}, {THETA_CAP}], got {self.fgm_theta}")

    @property
    def bound(self) -> float:
        """Upper bound ``K`` of ``h``."""
        return 1.0 + abs(self.fgm_theta)

    @property
    def independent(self) -> bool:
        return self.fgm_theta == 0.0 or isinstance(self.theta_model, Degenerate)

    def h(self, t) -> np.ndarray:
        # mid-distribution form: reduces to 2F(t) - 1 off atoms and to h = 1 at
        # the atom of a degenerate Theta
        t = np.asarray(t, dtype=float)
        lo, hi = self.theta_model.support
        if (t < lo).any() or (t > hi).any():
            bad = t[(t < lo) | (t > hi)].ravel()[0]
            raise ValueError(f"t={bad:.6g} lies outside the support [{lo}, {hi}] of Theta")
        m = self.theta_model
        return 1.0 + self.fgm_theta * (m.cdf(t) + m.cdf_left(t) - 1.0)

    def sample_theta(self, rng: np.random.Generator, n: int):
        """``(theta, v)``: draws of Theta and their copula coordinates."""
        vbar = 1.0 - rng.random(n)
        return self.theta_model.isf(vbar), 1.0 - vbar

    def conditional_survival_uniform(self, v: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Draw ``1 - U`` given ``V = v`` under the FGM copula.

        Inverts ``u (1 + a(1-u)) = w`` with ``a = theta (1 - 2v)`` in the
        cancellation-free form for ``1 - u``.
        """
        wbar = 1.0 - rng.random(v.shape[0])
        if self.fgm_theta == 0.0:
            return wbar
        a = self.fgm_theta * (1.0 - 2.0 * v)
        return 2.0 * wbar / ((1.0 - a) + np.sqrt((1.0 - a) ** 2 + 4.0 * a * wbar))

    def to_json(self) -> dict:
        return {"theta": self.theta_model.to_json(), "fgm_theta": self.fgm_theta}

    @classmethod
    def from_json(cls, obj: dict) -> "FgmCoupling":
        return cls(model_from_json(obj["theta"]), float(obj.get("fgm_theta", 0.0)))


@dataclass(frozen=True)
class MixturePair:
    vector_model: VectorModel
    set: RareSet
    coupling: FgmCoupling

    def __post_init__(self):
        if self.vector_model.dim != self.set.dim:
            raise ValueError("vector model and set dimensions differ")

    def to_json(self) -> dict:
        return {"vector_model": self.vector_model.to_json(), "set": self.set.to_json(), "coupling": self.coupling.to_json()}

    @classmethod
    def from_json(cls, obj: dict, A: Optional[RareSet] = None) -> "MixturePair":
        A = A if A is not None else RareSet.from_json(obj["set"])
        return cls(vector_model_from_json(obj["vector_model"]), A, FgmCoupling.from_json(obj["coupling"]))


def h_value(c: FgmCoupling, t: float) -> float:
    return float(c.h(t))


def claims_given_v(model: VectorModel, coupling: FgmCoupling, v: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Claim vectors drawn conditionally on the copula coordinates ``v`` of Theta."""
    n = v.shape[0]
    if isinstance(model, MrvRay):
        ubar = coupling.conditional_survival_uniform(v, rng)
        r = model.radius.isf(ubar)
        return r[:, None] * model.rays[model.ray_index(rng, n)]
    if coupling.fgm_theta == 0.0 or model.deterministic:
        return sample_vector(model, rng, n)
    raise ValueError("coupled vector sampling needs an MrvRay claim model (or fgm_theta = 0)")


def sample_scaled(p: MixturePair, rng: np.random.Generator, n: int):
    """``(theta, X)`` joint draws, ``X`` as an ``(n, d)`` array."""
    theta, v = p.coupling.sample_theta(rng, n)
    return theta, claims_given_v(p.vector_model, p.coupling, v, rng)


def sample_pair(p: MixturePair, rng: np.random.Generator, n: int):
    """Joint draws ``(theta, y_a, theta * y_a)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    model = p.vector_model
    if isinstance(model, MrvRay) or p.coupling.fgm_theta == 0.0 or model.deterministic:
        theta, x = sample_scaled(p, rng, n)
        y = p.set.support_value(x)
    elif isinstance(model, IndependentMarginals) and p.set.axis_coefficients() is not None:
        theta, v = p.coupling.sample_theta(rng, n)
        y = fa_isf(model, p.set, p.coupling.conditional_survival_uniform(v, rng))
    else:
        raise ValueError("coupled sampling needs an exact F_A quantile; use an MrvRay claim model")
    return theta, y, theta * y


# --- Breiman constants ------------------------------------------------------


def _check_moment(m: TailModel, alpha: float):
    if not (m.moment_finite(alpha * (1 + 1e-9)) or m.moment_finite(alpha + 1e-6)):
        raise ValueError(
            f"E[Theta^p] is infinite for every p > alpha={alpha} under {m.family}; "
            "the Breiman constant needs a finite moment for some p > alpha"
        )


def breiman_constant(c: FgmCoupling, alpha: float) -> float:
    """``E[Theta^alpha h(Theta)]``, closed form where available else quadrature."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    m, th = c.theta_model, c.fgm_theta
    _check_moment(m, alpha)
    if isinstance(m, Degenerate):
        return float(m.c**alpha)
    if isinstance(m, BoundedUniform):
        return float(m.upper**alpha * ((1 - th) / (alpha + 1) + 2 * th / (alpha + 2)))
    if isinstance(m, Pareto):
        k = alpha / m.alpha
        return float(m.scale**alpha * ((1 - th) / (1 - k) + 2 * th / ((1 - k) * (2 - k))))
    if isinstance(m, Exponential):
        lam = m.rate
        g = special.gamma(alpha + 1)
        mom = g / lam**alpha
        cross = lam * g / (2 * lam) ** (alpha + 1)
        return float((1 - th) * mom + 2 * th * (mom - cross))
    return breiman_constant_quantile_quad(c, alpha)


V_BREAKS = np.array([0.5, 0.1, 1e-2, 1e-3, 1e-4, 1e-6, 1e-8, 1e-10])


def _piecewise_quad(f, breaks, epsrel: float) -> float:
    # adaptive quadrature on consecutive break intervals; the last one may be infinite
    total = 0.0
    for a, b in zip(breaks[:-1], breaks[1:]):
        if b > a:
            total += integrate.quad(f, a, b, limit=200, epsabs=1e-13, epsrel=epsrel)[0]
    return float(total)


def _t_breaks(m: TailModel) -> list:
    lo, hi = m.support
    inner = [float(m.isf(q)) for q in V_BREAKS] if not math.isfinite(hi) else [float(m.isf(0.5))]
    return [lo, *sorted(set(inner)), hi]


def breiman_constant_quantile_quad(c: FgmCoupling, alpha: float) -> float:
    """``int_0^1 Q(v)^alpha (1 + theta(2v - 1)) dv`` with ``Q`` the quantile of Theta."""
    _check_moment(c.theta_model, alpha)
    m, th = c.theta_model, c.fgm_theta
    # in q = 1 - v, so the integrable singularity sits at q = 0 without cancellation
    f = lambda q: float(m.isf(q)) ** alpha * (1.0 + th * (1.0 - 2.0 * q))  # noqa: E731
    return _piecewise_quad(f, [0.0, *V_BREAKS[::-1], 1.0], 1e-12)


def breiman_constant_density_quad(c: FgmCoupling, alpha: float) -> float:
    """``int t^alpha h(t) f(t) dt`` over the support of a continuous Theta."""
    m = c.theta_model
    _check_moment(m, alpha)
    return _piecewise_quad(lambda t: t**alpha * float(c.h(t)) * float(m.pdf(t)), _t_breaks(m), 1e-12)


def expected_h(c: FgmCoupling) -> float:
    """``E[h(Theta)]`` by quadrature against the density of a continuous Theta."""
    m = c.theta_model
    return _piecewise_quad(lambda t: float(c.h(t)) * float(m.pdf(t)), _t_breaks(m), 1e-13)


# --- exact mixture tails ----------------------------------------------------


def mixture_tail_exact(p: MixturePair, x: float) -> Optional[float]:
    """``P[Theta Y_A > x]`` for the FGM construction, or ``None``.

    Integrates the closed-form conditional survival
    ``P[U > u | V = v] = (1-u)(1 - a u)``, ``a = theta(1 - 2v)``, over ``v``.
    """
    model, c = p.vector_model, p.coupling
    if isinstance(c.theta_model, Degenerate):
        return fa_tail_exact(model, p.set, x / c.theta_model.c)
    if not isinstance(model, MrvRay):
        if c.fgm_theta != 0.0:
            return None
        if fa_tail_exact(model, p.set, 1.0) is None:
            return None
    th, m = c.fgm_theta, c.theta_model

    def ubar_at(v, s):
        t = float(m.isf(1.0 - v))
        if t <= 0:
            return 0.0
        return float(radius_tail(x / (s * t)))

    if isinstance(model, MrvRay):
        terms = [(w, s) for w, s in zip(model.weights, model.ray_scales(p.set)) if s > 0]
        radius_tail = model.radius.tail
        kink = lambda s: float(m.cdf(x / (s * model.scale)))  # noqa: E731
    else:
        terms = [(1.0, 1.0)]
        radius_tail = lambda z: fa_tail_exact(model, p.set, z)  # noqa: E731
        kink = lambda s: None  # noqa: E731

    total = 0.0
    for w, s in terms:
        def integrand(v, s=s):
            ub = ubar_at(v, s)
            return ub * (1.0 - th * (1.0 - 2.0 * v) * (1.0 - ub))

        k = kink(s)
        pts = [k] if k is not None and 0.0 < k < 1.0 else None
        val, _ = integrate.quad(integrand, 0.0, 1.0, points=pts, limit=400, epsabs=1e-15, epsrel=1e-11)
        total += w * val
    return float(total)


# --- Monte Carlo checks -----------------------------------------------------


def verify_breiman(p: MixturePair, alpha: float, x_grid: Sequence[float], seed: int, n: int,
                   threads: int = 1) -> List[tuple]:
    """``(x, ratio)`` with ratio ``P[Theta Y_A > x] / (E[Theta^alpha h] P[Y_A > x])``."""
    if not isinstance(p.vector_model, MrvRay):
        raise ValueError("verify_breiman needs an MrvRay claim model")
    xs = np.asarray(x_grid, dtype=float)
    const = breiman_constant(p.coupling, alpha)

    def chunk(rng, size):
        _, _, prod = sample_pair(p, rng, size)
        return (prod[:, None] > xs[None, :]).sum(axis=0)

    hits = mc.sum_chunks(mc.map_chunks(chunk, seed, n, threads))
    out = []
    for x, h in zip(xs, hits):
        est = mc.binomial_estimate(int(h), n, seed)
        out.append((float(x), est.scaled(1.0 / (const * fa_tail_exact(p.vector_model, p.set, x)))))
    return out


def pair_tail(p: MixturePair, x: float) -> Optional[float]:
    return mixture_tail_exact(p, x)


@dataclass
class SumCheckRow:
    x: float
    ratio: EstimateCI
    numerator: EstimateCI
    denominator: float
    analytic_denominator: bool
    single_terms: List[float]
    bonferroni_lower: float
    bonferroni_ok: bool
    ya_sum_ratio: Optional[float]

    def to_json(self) -> dict:
        return {
            "x": self.x,
            "ratio": self.ratio.value,
            "ratio_se": self.ratio.std_error,
            "numerator": self.numerator.value,
            "numerator_se": self.numerator.std_error,
            "denominator": self.denominator,
            "analytic_denominator": self.analytic_denominator,
            "single_terms": self.single_terms,
            "bonferroni_lower": self.bonferroni_lower,
            "bonferroni_ok": self.bonferroni_ok,
            "ya_sum_ratio": self.ya_sum_ratio,
        }


@dataclass
class SumCheck:
    rows: List[SumCheckRow]
    n_samples: int
    seed: int
    subadditivity_violations: int = 0
    extra: dict = field(default_factory=dict)

    def ratios(self) -> List[tuple]:
        return [(r.x, r.ratio) for r in self.rows]


def _common_set(pairs: Sequence[MixturePair]) -> RareSet:
    if not pairs:
        raise ValueError("need at least one pair")
    A = pairs[0].set
    for q in pairs[1:]:
        if q.set.dim != A.dim or q.vector_model.dim != A.dim:
            raise ValueError("dimension mismatch across pairs")
        if q.set != A:
            raise ValueError("all pairs must share the same rare set")
    return A


SUBADD_RTOL = 1e-12


def _simulate_sum(pairs, xs, seed, n, threads):
    A = pairs[0].set
    m = len(pairs)
    nx = xs.size

    def chunk(rng, size):
        total = np.zeros((size, A.dim))
        ya_total = np.zeros(size)
        single = np.zeros((size, nx), dtype=np.int64)
        for p in pairs:
            theta, x = sample_scaled(p, rng, size)
            v = theta[:, None] * x
            total += v
            y = A.support_value(v)
            ya_total += y
            single += y[:, None] > xs[None, :]
        ys = A.support_value(total)
        hit = ys[:, None] > xs[None, :]
        hit_ya = ya_total[:, None] > xs[None, :]
        viol = int((ys > ya_total * (1 + SUBADD_RTOL) + 1e-300).sum())
        return np.concatenate([
            hit.sum(axis=0), hit_ya.sum(axis=0), single.sum(axis=0),
            (single**2).sum(axis=0), (hit * single).sum(axis=0), [viol],
        ]).astype(np.int64)

    s = mc.sum_chunks(mc.map_chunks(chunk, seed, n, threads))
    return {
        "hits": s[:nx], "hits_ya": s[nx:2 * nx], "single": s[2 * nx:3 * nx],
        "single_sq": s[3 * nx:4 * nx], "cross": s[4 * nx:5 * nx], "viol": int(s[-1]),
    }


def _ratio_from_sums(sn, sd, sdd, snd, n, seed) -> EstimateCI:
    mn, md = sn / n, sd / n
    if md == 0:
        raise mc.InfeasibleError("Monte Carlo denominator has no hits")
    r = mn / md
    vn = mn - mn * mn
    vd = sdd / n - md * md
    cov = snd / n - mn * md
    var = max(vn - 2 * r * cov + r * r * vd, 0.0) / (md * md * n)
    return EstimateCI(float(r), float(math.sqrt(var)), int(n), int(seed))


def _sum_rows(pairs, xs, sims, seed, n, terms_fn):
    rows = []
    for j, x in enumerate(xs):
        num = mc.binomial_estimate(int(sims["hits"][j]), n, seed)
        singles = [terms_fn(p, x) for p in pairs]
        analytic = all(s is not None for s in singles)
        if analytic:
            den = float(sum(singles))
            if den <= 0.0:
                raise mc.InfeasibleError(f"single-term probabilities vanish at x={x}")
            ratio = num.scaled(1.0 / den)
            probs = [pair_tail(p, x) for p in pairs]
            probs = None if any(q is None for q in probs) else np.array(probs, dtype=float)
        else:
            den = float(sims["single"][j]) / n
            ratio = _ratio_from_sums(float(sims["hits"][j]), float(sims["single"][j]),
                                     float(sims["single_sq"][j]), float(sims["cross"][j]), n, seed)
            probs = None
        if probs is None:
            # Bonferroni bound from empirical marginals, iid pairs treated alike
            probs = np.full(len(pairs), den / len(pairs))
        bonf = float(probs.sum() - 0.5 * (probs.sum() ** 2 - (probs**2).sum()))
        ya = float(sims["hits_ya"][j] / sims["hits"][j]) if sims["hits"][j] else None
        rows.append(SumCheckRow(float(x), ratio, num, den, analytic,
                                [None if s is None else float(s) for s in singles],
                                bonf, bool(num.value >= bonf - 3 * num.std_error), ya))
    return rows


def sbj_sum_ratio(pairs: Sequence[MixturePair], x_grid: Sequence[float], seed: int, n: int,
                  threads: int = 1) -> SumCheck:
    """Single-big-jump ratio ``P[sum Theta_i X_i in xA] / sum_i P[Theta_i X_i in xA]``.

    Numerator by direct simulation of the vector sum; denominator analytic
    where :func:`mixture_tail_exact` applies, else estimated on the same
    samples (delta-method error). Also counts samples violating the
    subadditivity ``Y_A(sum v_i) <= sum Y_A(v_i)`` beyond rounding.
    """
    if n < 10**4:
        raise ValueError("sbj_sum_ratio needs n >= 10^4")
    _common_set(pairs)
    xs = np.asarray(x_grid, dtype=float)
    sims = _simulate_sum(pairs, xs, seed, n, threads)
    rows = _sum_rows(pairs, xs, sims, seed, n, pair_tail)
    return SumCheck(rows, n, seed, sims["viol"])


def mrv_weighted_sum_check(pairs: Sequence[MixturePair], x_grid: Sequence[float], seed: int, n: int,
                           alphas: Optional[Sequence[float]] = None, threads: int = 1) -> SumCheck:
    """Sum tail against ``sum_i E[Theta_i^alpha_i h_i(Theta_i)] P[X_i in xA]``."""
    _common_set(pairs)
    if not all(isinstance(p.vector_model, MrvRay) for p in pairs):
        raise ValueError("mrv_weighted_sum_check needs MrvRay claim models")
    if alphas is None:
        alphas = [p.vector_model.alpha for p in pairs]
    if len(alphas) != len(pairs):
        raise ValueError("one alpha per pair")
    for a, p in zip(alphas, pairs):
        if a != p.vector_model.alpha:
            raise ValueError(f"alpha {a} disagrees with the claim model index {p.vector_model.alpha}")
    consts = {id(p): breiman_constant(p.coupling, a) for p, a in zip(pairs, alphas)}
    xs = np.asarray(x_grid, dtype=float)
    sims = _simulate_sum(pairs, xs, seed, n, threads)

    def term(p, x):
        return consts[id(p)] * fa_tail_exact(p.vector_model, p.set, x)

    rows = _sum_rows(pairs, xs, sims, seed, n, term)
    return SumCheck(rows, n, seed, sims["viol"], {"breiman_constants": [consts[id(p)] for p in pairs]})


def mrv_asymptotic_terms(pairs: Sequence[MixturePair], x: float) -> List[float]:
    """Individual right-hand-side terms ``E[Theta_i^alpha_i h_i] P[X_i in xA]``."""
    return [breiman_constant(p.coupling, p.vector_model.alpha) * fa_tail_exact(p.vector_model, p.set, x)
            for p in pairs]
