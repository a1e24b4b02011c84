"""Univariate tail models, tail ratios, Matuszewska indexes and class tables."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import ClassVar, Dict, Optional, Sequence, Tuple, Type

import numpy as np
from scipy import special

INF = math.inf


class TailUnderflowError(ValueError):
    pass


class TailModel:
    """Base class: a distribution on [0, inf) given through its survival function.

    Subclasses supply ``log_tail`` and ``isf`` (inverse survival function);
    everything else is derived from those two.
    """

    family: ClassVar[str]
    continuous: ClassVar[bool] = True

    def log_tail(self, x):
        raise NotImplementedError

    def isf(self, q):
        raise NotImplementedError

    def pdf(self, x):
        raise NotImplementedError(f"{self.family} has no density")

    @property
    def support(self) -> Tuple[float, float]:
        raise NotImplementedError

    def moment_finite(self, p: float) -> bool:
        return True

    def tail(self, x):
        return np.exp(self.log_tail(x))

    def cdf(self, x):
        return -np.expm1(self.log_tail(x))

    def cdf_left(self, x):
        """P[V < x]; differs from ``cdf`` only at atoms."""
        return self.cdf(x)

    def ppf(self, v):
        return self.isf(1.0 - np.asarray(v, dtype=float))

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        # 1 - U lies in (0, 1], which keeps isf finite
        return self.isf(1.0 - rng.random(n))

    def to_json(self) -> dict:
        return {"family": self.family, **asdict(self)}


def _positive(name, value):
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")


@dataclass(frozen=True)
class Pareto(TailModel):
    alpha: float
    scale: float = 1.0
    family: ClassVar[str] = "pareto"

    def __post_init__(self):
        _positive("alpha", self.alpha)
        _positive("scale", self.scale)

    @property
    def support(self):
        return (self.scale, INF)

    def log_tail(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            return np.where(x < self.scale, 0.0, -self.alpha * np.log(np.maximum(x, self.scale) / self.scale))

    def tail(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < self.scale, 1.0, (np.maximum(x, self.scale) / self.scale) ** -self.alpha)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < self.scale, 0.0, self.alpha / self.scale * (np.maximum(x, self.scale) / self.scale) ** (-self.alpha - 1))

    def isf(self, q):
        return self.scale * np.asarray(q, dtype=float) ** (-1.0 / self.alpha)

    def moment_finite(self, p):
        return p < self.alpha


@dataclass(frozen=True)
class LogNormal(TailModel):
    mu: float = 0.0
    sigma: float = 1.0
    family: ClassVar[str] = "lognormal"

    def __post_init__(self):
        _positive("sigma", self.sigma)

    @property
    def support(self):
        return (0.0, INF)

    def log_tail(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            z = (np.log(np.where(x > 0, x, 1.0)) - self.mu) / self.sigma
        return np.where(x > 0, special.log_ndtr(-z), 0.0)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        xs = np.where(x > 0, x, 1.0)
        z = (np.log(xs) - self.mu) / self.sigma
        return np.where(x > 0, np.exp(-0.5 * z * z) / (xs * self.sigma * math.sqrt(2 * math.pi)), 0.0)

    def isf(self, q):
        return np.exp(self.mu - self.sigma * special.ndtri(np.asarray(q, dtype=float)))


@dataclass(frozen=True)
class WeibullHeavy(TailModel):
    shape: float
    scale: float = 1.0
    family: ClassVar[str] = "weibull_heavy"

    def __post_init__(self):
        if not 0 < self.shape < 1:
            raise ValueError(f"shape must lie in (0, 1), got {self.shape!r}")
        _positive("scale", self.scale)

    @property
    def support(self):
        return (0.0, INF)

    def log_tail(self, x):
        x = np.asarray(x, dtype=float)
        return -(np.maximum(x, 0.0) / self.scale) ** self.shape

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        z = np.maximum(x, 1e-300) / self.scale
        return np.where(x > 0, self.shape / self.scale * z ** (self.shape - 1) * np.exp(-z**self.shape), 0.0)

    def isf(self, q):
        return self.scale * (-np.log(np.asarray(q, dtype=float))) ** (1.0 / self.shape)


@dataclass(frozen=True)
class LogPareto(TailModel):
    """Tail ``(1 + ln x)^(-beta)`` on ``x >= 1``; slowly varying."""

    beta: float
    family: ClassVar[str] = "log_pareto"

    def __post_init__(self):
        _positive("beta", self.beta)

    @property
    def support(self):
        return (1.0, INF)

    def log_tail(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 1.0, 0.0, -self.beta * np.log1p(np.log(np.maximum(x, 1.0))))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        xs = np.maximum(x, 1.0)
        return np.where(x < 1.0, 0.0, self.beta * (1 + np.log(xs)) ** (-self.beta - 1) / xs)

    def isf(self, q):
        # quantiles beyond the float range come out as inf
        with np.errstate(over="ignore"):
            return np.exp(np.asarray(q, dtype=float) ** (-1.0 / self.beta) - 1.0)

    def moment_finite(self, p):
        return p <= 0


@dataclass(frozen=True)
class BoundedUniform(TailModel):
    upper: float = 1.0
    family: ClassVar[str] = "bounded_uniform"

    def __post_init__(self):
        _positive("upper", self.upper)

    @property
    def support(self):
        return (0.0, self.upper)

    def log_tail(self, x):
        x = np.asarray(x, dtype=float)
        s = np.clip(1.0 - x / self.upper, 0.0, 1.0)
        with np.errstate(divide="ignore"):
            return np.log(s)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where((x >= 0) & (x <= self.upper), 1.0 / self.upper, 0.0)

    def isf(self, q):
        return self.upper * (1.0 - np.asarray(q, dtype=float))


@dataclass(frozen=True)
class Degenerate(TailModel):
    c: float
    family: ClassVar[str] = "degenerate"
    continuous: ClassVar[bool] = False

    def __post_init__(self):
        _positive("c", self.c)

    @property
    def support(self):
        return (self.c, self.c)

    def log_tail(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < self.c, 0.0, -INF)

    def cdf_left(self, x):
        return np.where(np.asarray(x, dtype=float) > self.c, 1.0, 0.0)

    def isf(self, q):
        return np.full(np.shape(q), float(self.c))

    def sample(self, rng, n):
        return np.full(n, float(self.c))


@dataclass(frozen=True)
class Exponential(TailModel):
    """Light-tailed helper; the inter-arrival law of the Poisson risk model."""

    rate: float = 1.0
    family: ClassVar[str] = "exponential"

    def __post_init__(self):
        _positive("rate", self.rate)

    @property
    def support(self):
        return (0.0, INF)

    def log_tail(self, x):
        return -self.rate * np.maximum(np.asarray(x, dtype=float), 0.0)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0, self.rate * np.exp(-self.rate * np.maximum(x, 0.0)), 0.0)

    def isf(self, q):
        return -np.log(np.asarray(q, dtype=float)) / self.rate


FAMILIES: Dict[str, Type[TailModel]] = {
    cls.family: cls for cls in (Pareto, LogNormal, WeibullHeavy, LogPareto, BoundedUniform, Degenerate, Exponential)
}


def model_from_json(obj: dict) -> TailModel:
    obj = dict(obj)
    family = obj.pop("family", None)
    if family not in FAMILIES:
        raise ValueError(f"unknown tail family {family!r}; expected one of {sorted(FAMILIES)}")
    return FAMILIES[family](**obj)


# --- operations -------------------------------------------------------------


def tail(model: TailModel, x: float) -> float:
    return float(model.tail(x))


def sample(model: TailModel, rng: np.random.Generator, n: int) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be >= 1")
    return model.sample(rng, n)


def _log_ratio(model: TailModel, b: float, x: np.ndarray) -> np.ndarray:
    lo = model.log_tail(x)
    hi = model.log_tail(b * x)
    bad = ~np.isfinite(lo) | ~np.isfinite(hi)
    if bad.any():
        i = int(np.argmax(bad))
        where = x[i] if not np.isfinite(lo[i]) else b * x[i]
        raise TailUnderflowError(f"tail of {model.family} underflows to zero at x={where:.6g}")
    return hi - lo


def tail_ratio(model: TailModel, b: float, x_grid: Sequence[float]) -> np.ndarray:
    """Pointwise ``V(bx) / V(x)`` for ``b > 1``.

    Raises when a grid point lies outside the support of the model.
    """
    if not b > 1:
        raise ValueError(f"b must exceed 1, got {b}")
    x = np.asarray(x_grid, dtype=float)
    if x.ndim != 1 or x.size == 0 or (x <= 0).any() or (np.diff(x) <= 0).any():
        raise ValueError("x_grid must be positive and strictly increasing")
    lo, hi = model.support
    out = (x < lo) | (x >= hi) if hi < INF else x < lo
    if out.any():
        raise ValueError(f"x={x[np.argmax(out)]:.6g} lies outside the support of {model.family}")
    lr = _log_ratio(model, b, x)
    num, den = model.tail(b * x), model.tail(x)
    # direct division where both tails are normal floats, log space otherwise
    direct = (num >= np.finfo(float).tiny) & (den >= np.finfo(float).tiny)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(direct, num / den, np.exp(lr))


def geometric_grid(x_max: float, decades: float = 2.0, per_decade: int = 32) -> np.ndarray:
    n = int(round(decades * per_decade))
    return x_max * 10.0 ** (np.arange(-n, 1) / per_decade)


def matuszewska_index_curves(model: TailModel, b_grid: Sequence[float], x_max: float,
                             decades: float = 2.0, per_decade: int = 32) -> Tuple[np.ndarray, np.ndarray]:
    """Finite-x proxies ``j^-(b), j^+(b)`` for each ``b`` in ``b_grid``.

    The liminf/limsup of ``V(bx)/V(x)`` are replaced by min/max over a
    geometric grid covering the top ``decades`` decades below ``x_max``.
    """
    b_arr = np.asarray(b_grid, dtype=float)
    if b_arr.size == 0 or (b_arr <= 1).any() or (np.diff(b_arr) <= 0).any():
        raise ValueError("b_grid must be increasing with every b > 1")
    xs = geometric_grid(x_max, decades, per_decade)
    j_minus = np.empty(b_arr.size)
    j_plus = np.empty(b_arr.size)
    for k, b in enumerate(b_arr):
        lr = _log_ratio(model, b, xs)
        j_minus[k] = -lr.max() / math.log(b)
        j_plus[k] = -lr.min() / math.log(b)
    return j_minus, j_plus


def _report_index(curve: np.ndarray) -> float:
    last = float(curve[-1])
    if last > 10 and curve.size > 1 and last > curve[-2]:
        return INF
    return last


def matuszewska_estimate(model: TailModel, b_grid: Sequence[float], x_max: float) -> Tuple[float, float]:
    """Estimate ``(J^-, J^+)`` at the largest ``b``.

    An index is reported as ``inf`` once it exceeds 10 and is still
    increasing in ``b`` (rapid variation).
    """
    j_minus, j_plus = matuszewska_index_curves(model, b_grid, x_max)
    return _report_index(j_minus), _report_index(j_plus)


@dataclass(frozen=True)
class ClassProfile:
    in_K: bool
    in_D: bool
    in_L: bool
    in_S: bool
    in_PD: bool
    in_C: bool
    rv_index: Optional[float]
    j_minus: float
    j_plus: float

    def __post_init__(self):
        if self.j_minus > self.j_plus:
            raise ValueError("j_minus must not exceed j_plus")
        if self.in_D != math.isfinite(self.j_plus):
            raise ValueError("in_D must coincide with a finite upper index")
        if self.in_PD != (self.j_minus > 0):
            raise ValueError("in_PD must coincide with a positive lower index")

    @property
    def in_A(self) -> bool:
        return self.in_S and self.in_PD

    @property
    def in_T(self) -> bool:
        return self.in_L and self.in_PD

    def to_json(self) -> dict:
        def enc(v):
            return "infinity" if isinstance(v, float) and math.isinf(v) else v

        d = {k: enc(v) for k, v in asdict(self).items()}
        d.update(in_A=self.in_A, in_T=self.in_T)
        return d


def class_profile(model: TailModel) -> ClassProfile:
    """Known analytic class memberships of each implemented family."""
    if isinstance(model, Pareto):
        a = float(model.alpha)
        return ClassProfile(True, True, True, True, True, True, a, a, a)
    if isinstance(model, (LogNormal, WeibullHeavy)):
        return ClassProfile(True, False, True, True, True, False, INF, INF, INF)
    if isinstance(model, LogPareto):
        return ClassProfile(True, True, True, True, False, True, None, 0.0, 0.0)
    if isinstance(model, Exponential):
        return ClassProfile(False, False, False, False, True, False, INF, INF, INF)
    if isinstance(model, (BoundedUniform, Degenerate)):
        return ClassProfile(False, False, False, False, True, False, None, INF, INF)
    raise TypeError(f"no class table for {type(model).__name__}")
