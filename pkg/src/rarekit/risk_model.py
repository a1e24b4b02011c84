"""Multivariate compound Poisson risk model with constant interest force.

Claims ``X_i`` arrive at the epochs ``tau_i`` of a Poisson(lambda) process and
are discounted by ``exp(-r tau_i)``. Each claim is FGM-coupled with its own
inter-arrival time ``Theta_i = tau_i - tau_{i-1}`` through the same machinery
as :mod:`rarekit.mixtures`. The discounted surplus is::

    U(s) = x l + P(s) - D_r(s),   P_i(s) = c_i (1 - exp(-r s)) / r,

with constant premium rates ``c_i``. Between claims ``U`` only increases and
the ruin set ``L`` is decreasing, so ruin can first happen at a claim epoch,
and ``U(tau_k) in L`` iff ``Y_A(D_r(tau_k) - P(tau_k)) > x`` with ``A = l - L``.
One ruin statistic per path therefore covers a whole grid of capitals.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy import stats
from scipy.special import roots_legendre

from . import mc
from .mc import EstimateCI
from .mixtures import FgmCoupling, claims_given_v
from .rare_sets import RareSet, RuinKind, RuinSet, ruin_set_to_rare_set
from .tails import Exponential
from .vectors import MrvRay, VectorModel, fa_tail_exact

POISSON_TAIL_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class RiskConfig:
    lam: float
    horizon: float
    interest: float
    claim_model: VectorModel
    allocation: Sequence[float]
    ruin_set: RuinSet
    premium_rates: Optional[Sequence[float]] = None
    fgm_theta: float = 0.0

    def __post_init__(self):
        for name in ("lam", "horizon"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v}")
        if not (math.isfinite(self.interest) and self.interest >= 0):
            raise ValueError(f"interest must be >= 0, got {self.interest}")
        d = self.claim_model.dim
        if self.ruin_set.dim != d:
            raise ValueError("ruin set and claim model dimensions differ")
        c = np.zeros(d) if self.premium_rates is None else np.array(self.premium_rates, dtype=float)
        if c.shape != (d,) or not np.isfinite(c).all() or (c < 0).any():
            raise ValueError(f"premium_rates must be {d} finite nonnegative constants")
        c.setflags(write=False)
        object.__setattr__(self, "premium_rates", c)
        l = np.array(self.allocation, dtype=float)
        l.setflags(write=False)
        object.__setattr__(self, "allocation", l)
        object.__setattr__(self, "rare_set", ruin_set_to_rare_set(l, self.ruin_set))
        object.__setattr__(self, "coupling", FgmCoupling(Exponential(self.lam), self.fgm_theta))

    @property
    def dim(self) -> int:
        return self.claim_model.dim

    @property
    def mean_claims(self) -> float:
        return self.lam * self.horizon

    def premium_income(self, s) -> np.ndarray:
        """Discounted premium income ``P(s)``, shape ``s.shape + (d,)``."""
        s = np.asarray(s, dtype=float)
        if self.interest == 0:
            g = s
        else:
            g = -np.expm1(-self.interest * s) / self.interest
        return g[..., None] * self.premium_rates

    def replace(self, **kw) -> "RiskConfig":
        base = dict(lam=self.lam, horizon=self.horizon, interest=self.interest, claim_model=self.claim_model,
                    allocation=self.allocation, ruin_set=self.ruin_set, premium_rates=self.premium_rates,
                    fgm_theta=self.fgm_theta)
        base.update(kw)
        return RiskConfig(**base)

    def to_json(self) -> dict:
        return {
            "lambda": self.lam, "horizon": self.horizon, "interest": self.interest,
            "claim_model": self.claim_model.to_json(), "allocation": self.allocation.tolist(),
            "ruin_set": self.ruin_set.to_json(), "premium_rates": self.premium_rates.tolist(),
            "fgm_theta": self.fgm_theta,
        }


@dataclass
class PathRecord:
    arrivals: np.ndarray
    claims: np.ndarray
    discounted: np.ndarray
    net_claims: np.ndarray
    ruin_statistic: float

    @property
    def n_claims(self) -> int:
        return self.arrivals.size

    def surplus(self, cfg: RiskConfig, x: float) -> np.ndarray:
        """``U(tau_k)`` right after each claim, shape ``(N, d)``."""
        return x * cfg.allocation - self.net_claims

    def ruined(self, x: float) -> bool:
        return bool(self.ruin_statistic > x)


def simulate_path(cfg: RiskConfig, rng: np.random.Generator) -> PathRecord:
    t, d = cfg.horizon, cfg.dim
    taus, claims = [], []
    tau = 0.0
    while True:
        theta, v = cfg.coupling.sample_theta(rng, 1)
        tau += float(theta[0])
        if tau > t:
            break
        taus.append(tau)
        claims.append(claims_given_v(cfg.claim_model, cfg.coupling, v, rng)[0])
    tau_arr = np.array(taus)
    x = np.array(claims).reshape(-1, d)
    disc = x * np.exp(-cfg.interest * tau_arr)[:, None]
    net = np.cumsum(disc, axis=0) - cfg.premium_income(tau_arr)
    stat = float(cfg.rare_set.support_value(net).max()) if tau_arr.size else -math.inf
    return PathRecord(tau_arr, x, disc.sum(axis=0), net, stat)


def _ruin_kernel(cfg: RiskConfig, rng: np.random.Generator, size: int):
    """Vectorized paths: ruin statistics with and without premiums, plus claim counts."""
    A, t, r = cfg.rare_set, cfg.horizon, cfg.interest
    tau = np.zeros(size)
    D = np.zeros((size, cfg.dim))
    stat_p = np.full(size, -np.inf)
    stat_0 = np.full(size, -np.inf)
    count = np.zeros(size, dtype=np.int64)
    alive = np.arange(size)
    while alive.size:
        theta, v = cfg.coupling.sample_theta(rng, alive.size)
        tau_new = tau[alive] + theta
        keep = tau_new <= t
        alive, tau_new, v = alive[keep], tau_new[keep], v[keep]
        if not alive.size:
            break
        tau[alive] = tau_new
        x = claims_given_v(cfg.claim_model, cfg.coupling, v, rng)
        D[alive] += x * np.exp(-r * tau_new)[:, None]
        count[alive] += 1
        stat_0[alive] = np.maximum(stat_0[alive], A.support_value(D[alive]))
        net = D[alive] - cfg.premium_income(tau_new)
        stat_p[alive] = np.maximum(stat_p[alive], A.support_value(net))
    return stat_p, stat_0, count


def ruin_statistics(cfg: RiskConfig, seed: int, n_paths: int):
    """All per-path statistics ``(with_premiums, without_premiums, N(t))`` for one seed."""
    parts = mc.map_chunks(lambda rng, size: _ruin_kernel(cfg, rng, size), seed, n_paths)
    return tuple(np.concatenate([p[k] for p in parts]) for k in range(3))


@dataclass
class RuinScanRow:
    x: float
    psi: EstimateCI
    psi_no_premium: EstimateCI
    prediction: float
    ratio: EstimateCI

    def to_json(self) -> dict:
        return {
            "x": self.x, "psi_hat": self.psi.value, "se": self.psi.std_error,
            "psi_no_premium": self.psi_no_premium.value, "se_no_premium": self.psi_no_premium.std_error,
            "prediction": self.prediction, "ratio": self.ratio.value, "ratio_se": self.ratio.std_error,
        }


@dataclass
class RuinScan:
    rows: List[RuinScanRow]
    constant: float
    n_paths: int
    seed: int
    premium_violations: int
    mean_claims: float
    extra: dict = field(default_factory=dict)


def _ruin_counts(cfg, xs, seed, n_paths, threads):
    def chunk(rng, size):
        sp, s0, cnt = _ruin_kernel(cfg, rng, size)
        return np.concatenate([
            (sp[:, None] > xs[None, :]).sum(axis=0), (s0[:, None] > xs[None, :]).sum(axis=0),
            [int((sp > s0).sum()), int(cnt.sum())],
        ]).astype(np.int64)

    s = mc.sum_chunks(mc.map_chunks(chunk, seed, n_paths, threads))
    nx = xs.size
    return s[:nx], s[nx:2 * nx], int(s[-2]), int(s[-1])


def ruin_probability_mc(cfg: RiskConfig, x, seed: int, n_paths: int, threads: int = 1):
    """Finite-horizon ruin probability; a grid of capitals shares the same paths."""
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if (xs <= 0).any():
        raise ValueError("initial capital x must be positive")
    hits, _, _, _ = _ruin_counts(cfg, xs, seed, n_paths, threads)
    est = [mc.binomial_estimate(int(h), n_paths, seed) for h in hits]
    return est[0] if np.ndim(x) == 0 else est


# --- asymptotic constants ---------------------------------------------------


def _kappa(cfg: RiskConfig, alpha: Optional[float]) -> float:
    return 0.0 if alpha is None else alpha * cfg.interest


def _constant_mc(cfg: RiskConfig, kappa: float, seed: int, n_paths: int, threads: int) -> EstimateCI:
    c, t = cfg.coupling, cfg.horizon

    def chunk(rng, size):
        tau = np.zeros(size)
        g = np.zeros(size)
        alive = np.arange(size)
        while alive.size:
            theta, v = c.sample_theta(rng, alive.size)
            tau_new = tau[alive] + theta
            keep = tau_new <= t
            alive, tau_new, theta = alive[keep], tau_new[keep], theta[keep]
            tau[alive] = tau_new
            g[alive] += c.h(theta) * np.exp(-kappa * tau_new)
        return np.array([g.sum(), (g * g).sum()])

    s = mc.sum_chunks(mc.map_chunks(chunk, seed, n_paths, threads))
    return mc.mean_estimate(float(s[0]), float(s[1]), n_paths, seed)


def constant_C0(cfg: RiskConfig, seed: int, n_paths: int, threads: int = 1) -> EstimateCI:
    """Monte Carlo ``E[sum_{tau_i <= t} h(Theta_i)]``; the interest rate is ignored."""
    return _constant_mc(cfg, 0.0, seed, n_paths, threads)


def constant_Cr(cfg: RiskConfig, alpha: float, seed: int, n_paths: int, threads: int = 1) -> EstimateCI:
    """Monte Carlo ``E[sum_{tau_i <= t} h(Theta_i) exp(-alpha r tau_i)]``."""
    _check_mrv(cfg, alpha)
    if not cfg.interest > 0:
        raise ValueError("constant_Cr needs r > 0; use constant_C0")
    return _constant_mc(cfg, alpha * cfg.interest, seed, n_paths, threads)


def _check_mrv(cfg: RiskConfig, alpha: float):
    m = cfg.claim_model
    if not isinstance(m, MrvRay):
        raise ValueError("the r > 0 constant needs an MrvRay claim model")
    if alpha != m.alpha:
        raise ValueError(f"alpha {alpha} disagrees with the claim model index {m.alpha}")


def _expm1_ratio(a: float, t: float) -> float:
    """``(1 - exp(-a t)) / a`` with its ``a -> 0`` limit."""
    return t if a == 0 else -math.expm1(-a * t) / a


def constant_closed_form(lam: float, t: float, kappa: float, fgm_theta: float) -> float:
    """``E[sum_{tau_i <= t} h(Theta_i) exp(-kappa tau_i)]`` for FGM-coupled Exp(lam) gaps.

    With ``G(v) = E[h(Theta) exp(-kappa Theta); Theta <= v]`` the renewal
    equation of the Poisson process gives
    ``C = G(t) + lam int_0^t exp(-kappa u) G(t - u) du``, evaluated in closed form.
    """
    th = fgm_theta
    b1, b2 = lam + kappa, 2 * lam + kappa
    k1, k2 = (1 + th) * lam / b1, -2 * th * lam / b2

    def G(v):
        return k1 * -math.expm1(-b1 * v) + k2 * -math.expm1(-b2 * v)

    def conv(b):
        # int_0^t exp(-kappa u) (1 - exp(-b (t - u))) du, b > kappa
        return _expm1_ratio(kappa, t) - (math.exp(-kappa * t) - math.exp(-b * t)) / (b - kappa)

    return float(G(t) + lam * (k1 * conv(b1) + k2 * conv(b2)))


def poisson_truncation(mean: float, tol: float = POISSON_TAIL_TOL) -> int:
    """Smallest ``n`` with ``P[N > n] < tol``."""
    n = int(stats.poisson.ppf(1.0 - tol, mean))
    while stats.poisson.sf(n, mean) >= tol:
        n += 1
    while n > 0 and stats.poisson.sf(n - 1, mean) < tol:
        n -= 1
    return n


GAUSS_POINTS = {1: 24, 2: 16, 3: 12, 4: 10, 5: 8, 6: 8}
QMC_LOG2_POINTS = 16
QMC_SEED = 20240601


@dataclass
class NestedQuadrature:
    value: float
    n_max: int
    tail_mass: float
    warning: Optional[str] = None
    terms: List[float] = field(default_factory=list)


def _order_stat_mean(g, n: int, t: float) -> float:
    """``E[g(tau)]`` over the order statistics of ``n`` uniforms on ``(0, t)``."""
    if n <= max(GAUSS_POINTS):
        z, w = roots_legendre(GAUSS_POINTS[n])
        u, w = 0.5 * (z + 1.0), 0.5 * w
        grids = np.meshgrid(*([u] * n), indexing="ij")
        weights = np.prod(np.meshgrid(*([w] * n), indexing="ij"), axis=0).ravel()
        us = np.stack([gr.ravel() for gr in grids], axis=1)
        # tau_n = t u_n, tau_k = tau_{k+1} u_k; Jacobian t tau_n ... tau_2 against density n!/t^n
        tau = np.empty_like(us)
        tau[:, n - 1] = t * us[:, n - 1]
        for k in range(n - 2, -1, -1):
            tau[:, k] = tau[:, k + 1] * us[:, k]
        jac = t * np.prod(tau[:, 1:], axis=1) if n > 1 else np.full(us.shape[0], t)
        return float(np.sum(weights * jac * g(tau)) * math.factorial(n) / t**n)
    sob = stats.qmc.Sobol(d=n, scramble=True, seed=QMC_SEED + n)
    tau = np.sort(t * sob.random_base2(QMC_LOG2_POINTS), axis=1)
    return float(np.mean(g(tau)))


def constant_nested_quadrature(cfg: RiskConfig, alpha: Optional[float] = None,
                               n_max: Optional[int] = None) -> NestedQuadrature:
    """Truncated series ``sum_n P[N(t)=n] E[sum_i h(s_i) exp(-kappa tau_i) | N(t)=n]``.

    Given ``N(t) = n`` the epochs are uniform order statistics on ``(0, t)``
    and ``s_i`` their gaps. Low ``n`` use tensor Gauss-Legendre rules, higher
    ``n`` a fixed scrambled Sobol rule. ``alpha=None`` gives ``C_0``.
    """
    t, mean = cfg.horizon, cfg.mean_claims
    kappa = _kappa(cfg, alpha) if alpha is not None else 0.0
    needed = poisson_truncation(mean)
    n_max = needed if n_max is None else int(n_max)
    tail = float(stats.poisson.sf(n_max, mean))
    warn = None
    if tail >= POISSON_TAIL_TOL:
        warn = f"n_max={n_max} leaves Poisson tail mass {tail:.3g} >= {POISSON_TAIL_TOL:g}; use n_max >= {needed}"
        warnings.warn(warn, RuntimeWarning, stacklevel=2)
    c = cfg.coupling

    def g(tau):
        s = np.diff(tau, axis=1, prepend=0.0)
        return np.sum(c.h(s) * np.exp(-kappa * tau), axis=1)

    terms = [float(stats.poisson.pmf(n, mean)) * _order_stat_mean(g, n, t) for n in range(1, n_max + 1)]
    return NestedQuadrature(float(math.fsum(terms)), n_max, tail, warn, terms)


def poisson_series_mean(mean: float, n_max: int) -> float:
    """``sum_{n <= n_max} n P[N = n]``, the ``h = 1`` nested sum."""
    n = np.arange(n_max + 1)
    return float(math.fsum(n * stats.poisson.pmf(n, mean)))


# --- asymptotics ------------------------------------------------------------


def asymptotic_constant(cfg: RiskConfig, alpha: Optional[float]) -> float:
    """``C_r`` (``r > 0``) or ``C_0`` evaluated in closed form."""
    if cfg.interest > 0:
        _check_mrv(cfg, alpha)
        return constant_closed_form(cfg.lam, cfg.horizon, alpha * cfg.interest, cfg.fgm_theta)
    return constant_closed_form(cfg.lam, cfg.horizon, 0.0, cfg.fgm_theta)


def ruin_asymptotic(cfg: RiskConfig, alpha: Optional[float], x) -> float:
    """``C * P[X in xA]`` with ``A = l - L``."""
    tail = fa_tail_exact(cfg.claim_model, cfg.rare_set, x)
    if tail is None:
        raise ValueError("no exact P[X in xA] for this claim model and ruin set; use an MrvRay claim model")
    return asymptotic_constant(cfg, alpha) * tail


def ruin_ratio_scan(cfg: RiskConfig, alpha: Optional[float], x_grid: Sequence[float], seed: int,
                    n_paths: int, threads: int = 1) -> RuinScan:
    """Ratio ``psi_hat(x) / (C * P[X in xA])`` along ``x_grid``.

    Ruin with and without premiums is evaluated on the same paths; a path
    ruined with premiums but not without counts as a monotonicity violation.
    """
    xs = np.asarray(x_grid, dtype=float)
    if xs.ndim != 1 or xs.size == 0 or (xs <= 0).any():
        raise ValueError("x_grid must be a nonempty list of positive capitals")
    const = asymptotic_constant(cfg, alpha)
    hits, hits0, viol, total_claims = _ruin_counts(cfg, xs, seed, n_paths, threads)
    rows = []
    for x, h, h0 in zip(xs, hits, hits0):
        pred = const * fa_tail_exact(cfg.claim_model, cfg.rare_set, float(x))
        psi = mc.binomial_estimate(int(h), n_paths, seed)
        rows.append(RuinScanRow(float(x), psi, mc.binomial_estimate(int(h0), n_paths, seed), float(pred),
                                psi.scaled(1.0 / pred)))
    return RuinScan(rows, const, n_paths, seed, viol, total_claims / n_paths)


def total_sum_config(**kw) -> RiskConfig:
    d = kw["claim_model"].dim
    kw.setdefault("ruin_set", RuinSet(RuinKind.TOTAL_SUM_NEGATIVE, d))
    kw.setdefault("allocation", np.full(d, 1.0 / d))
    return RiskConfig(**kw)
