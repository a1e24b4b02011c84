"""Multivariate claim models and the tail ``P[X in xA]``.

Two model kinds are provided:

* :class:`IndependentMarginals` -- independent components, each a
  :class:`~rarekit.tails.TailModel`.
* :class:`MrvRay` -- ``X = R * W`` with Pareto radius ``R`` and a discrete
  spectral measure: ``W = W_k`` with probability ``w_k``, every ``W_k`` on the
  unit simplex. This is multivariate regularly varying with limit measure
  ``mu(A) = sum_k w_k s_k^alpha`` where ``s_k = max_{p in I_A} p.W_k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from . import mc
from .rare_sets import RareSet
from .tails import Degenerate, Pareto, TailModel, model_from_json


@dataclass(frozen=True)
class IndependentMarginals:
    marginals: Tuple[TailModel, ...]

    def __post_init__(self):
        m = tuple(self.marginals)
        if not m or not all(isinstance(v, TailModel) for v in m):
            raise ValueError("IndependentMarginals needs at least one TailModel marginal")
        object.__setattr__(self, "marginals", m)

    @property
    def dim(self) -> int:
        return len(self.marginals)

    @property
    def deterministic(self) -> bool:
        return all(isinstance(v, Degenerate) for v in self.marginals)

    def to_json(self) -> dict:
        return {"kind": "independent", "marginals": [v.to_json() for v in self.marginals]}


@dataclass(frozen=True, eq=False)
class MrvRay:
    alpha: float
    weights: np.ndarray
    rays: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ValueError("alpha must be positive")
        w = np.array(self.weights, dtype=float).ravel()
        W = np.array(self.rays, dtype=float)
        if W.ndim == 1:
            W = W[None, :]
        if W.shape[0] != w.size or w.size == 0:
            raise ValueError("need one weight per ray")
        if (w <= 0).any() or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("ray weights must be positive and sum to 1")
        if (W < 0).any() or np.abs(W.sum(axis=1) - 1.0).max() > 1e-12:
            raise ValueError("ray directions must lie on the unit simplex")
        Pareto(self.alpha, self.scale)  # validates scale
        for arr in (w, W):
            arr.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "rays", W)
        object.__setattr__(self, "_cumw", np.cumsum(w))

    @property
    def dim(self) -> int:
        return self.rays.shape[1]

    @property
    def radius(self) -> Pareto:
        return Pareto(self.alpha, self.scale)

    def ray_scales(self, A: RareSet) -> np.ndarray:
        """``s_k = max_p p.W_k`` for every ray."""
        _check_dim(self, A)
        return A.support_value(self.rays)

    def ray_index(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.weights.size == 1:
            return np.zeros(n, dtype=np.intp)
        k = np.searchsorted(self._cumw, rng.random(n), side="right")
        return np.minimum(k, self.weights.size - 1)

    def to_json(self) -> dict:
        return {
            "kind": "mrv_ray",
            "alpha": self.alpha,
            "radius": self.radius.to_json(),
            "rays": [{"w": float(w), "dir": d.tolist()} for w, d in zip(self.weights, self.rays)],
        }


VectorModel = Union[IndependentMarginals, MrvRay]


def vector_model_from_json(obj: dict) -> VectorModel:
    kind = obj.get("kind")
    if kind == "independent":
        return IndependentMarginals(tuple(model_from_json(m) for m in obj["marginals"]))
    if kind == "mrv_ray":
        alpha = float(obj["alpha"])
        radius = obj.get("radius", {"family": "pareto", "alpha": alpha, "scale": 1.0})
        r = model_from_json(radius)
        if not isinstance(r, Pareto) or r.alpha != alpha:
            raise ValueError("mrv_ray radius must be a Pareto with the model's alpha")
        rays = obj["rays"]
        return MrvRay(alpha, [ray["w"] for ray in rays], [ray["dir"] for ray in rays], r.scale)
    raise ValueError(f"unknown vector model kind {kind!r}")


def _check_dim(model: VectorModel, A: RareSet):
    if model.dim != A.dim:
        raise ValueError(f"model dimension {model.dim} does not match set dimension {A.dim}")


@dataclass(frozen=True)
class YaSampleBatch:
    values: np.ndarray
    set: RareSet
    model: VectorModel
    seed: Optional[int] = None


def sample_vector(model: VectorModel, rng: np.random.Generator, n: int) -> np.ndarray:
    """``n`` independent draws as an ``(n, d)`` array."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if isinstance(model, MrvRay):
        k = model.ray_index(rng, n)
        r = model.radius.sample(rng, n)
        return r[:, None] * model.rays[k]
    return np.column_stack([m.sample(rng, n) for m in model.marginals])


def ya_sample(model: VectorModel, A: RareSet, rng, n: int) -> YaSampleBatch:
    _check_dim(model, A)
    seed = None
    if not isinstance(rng, np.random.Generator):
        seed = mc.check_seed(rng)
        rng = np.random.default_rng(seed)
    return YaSampleBatch(A.support_value(sample_vector(model, rng, n)), A, model, seed)


def fa_tail_exact(model: VectorModel, A: RareSet, x):
    """Closed-form ``P[X in xA]`` or ``None`` when no closed form is implemented.

    Closed forms: :class:`MrvRay` on any set; independent marginals on sets
    whose directions are all axis-aligned; deterministic vectors on any set.
    """
    _check_dim(model, A)
    xa = np.asarray(x, dtype=float)
    if (xa <= 0).any():
        raise ValueError("x must be positive")
    if isinstance(model, MrvRay):
        s = model.ray_scales(A)
        out = np.zeros_like(xa)
        for w, sk in zip(model.weights, s):
            if sk > 0:
                out = out + w * model.radius.tail(xa / sk)
    elif model.deterministic:
        point = np.array([m.c for m in model.marginals])
        out = np.where(A.support_value(point) > xa, 1.0, 0.0)
    else:
        coef = A.axis_coefficients()
        if coef is None:
            return None
        log_keep = np.zeros_like(xa)
        with np.errstate(divide="ignore"):
            for m, c in zip(model.marginals, coef):
                if c > 0:
                    log_keep = log_keep + np.log1p(-m.tail(xa / c))
        out = -np.expm1(log_keep)
    return float(out) if out.ndim == 0 else out


def mu_measure(model: VectorModel, A: RareSet) -> float:
    """Limit measure ``mu(A) = sum_k w_k s_k^alpha`` of an :class:`MrvRay` model."""
    if not isinstance(model, MrvRay):
        raise TypeError("mu_measure is defined for MrvRay models only")
    s = model.ray_scales(A)
    return float(np.sum(model.weights * s**model.alpha))


def fa_tail_mc(model: VectorModel, A: RareSet, x, seed: int, n: int, threads: int = 1):
    """Monte Carlo ``P[X in xA]`` with binomial standard error.

    ``x`` may be a scalar or a grid; a grid shares one set of samples and
    returns a list of estimates.
    """
    if n < 100:
        raise ValueError("fa_tail_mc needs n >= 100")
    _check_dim(model, A)
    xs = np.atleast_1d(np.asarray(x, dtype=float))

    def chunk(rng, size):
        y = A.support_value(sample_vector(model, rng, size))
        return (y[:, None] > xs[None, :]).sum(axis=0)

    hits = mc.sum_chunks(mc.map_chunks(chunk, seed, n, threads))
    est = [mc.binomial_estimate(int(h), n, seed) for h in hits]
    return est[0] if np.ndim(x) == 0 else est


def fa_isf(model: VectorModel, A: RareSet, q) -> np.ndarray:
    """Inverse of ``x -> P[X in xA]`` for continuous independent axis-aligned models.

    Solved by bisection on ``log x`` between bracketing marginal quantiles.
    """
    if not isinstance(model, IndependentMarginals) or A.axis_coefficients() is None:
        raise ValueError("fa_isf needs an IndependentMarginals model on an axis-aligned set")
    if not all(m.continuous for m in model.marginals):
        raise ValueError("fa_isf needs continuous marginals")
    _check_dim(model, A)
    q = np.asarray(q, dtype=float)
    coef = A.axis_coefficients()
    active = [(m, c) for m, c in zip(model.marginals, coef) if c > 0]
    lo = np.max([c * m.isf(q) for m, c in active], axis=0)
    hi = np.max([c * m.isf(q / len(active)) for m, c in active], axis=0)
    lo, hi = np.log(np.maximum(lo, 1e-300)), np.log(np.maximum(hi, 1e-300))
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        above = fa_tail_exact(model, A, np.exp(mid)) > q
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
    return np.exp(0.5 * (lo + hi))
