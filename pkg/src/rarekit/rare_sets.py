"""Polyhedral rare sets ``A = {x : p.x > 1 for some p in I_A}`` and ruin sets."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True, eq=False)
class RareSet:
    """Open, increasing set represented by a finite family of directions.

    Each row of ``directions`` is a nonnegative, nonzero vector ``p``; a point
    ``x`` belongs to ``u * A`` iff ``max_p p.x > u``.
    """

    directions: np.ndarray

    def __post_init__(self):
        p = np.array(self.directions, dtype=float)
        if p.ndim == 1:
            p = p[None, :]
        if p.ndim != 2 or p.shape[0] == 0 or p.shape[1] == 0:
            raise ValueError("directions must be a nonempty list of equal-length vectors")
        if not np.isfinite(p).all() or (p < 0).any():
            raise ValueError("directions must be finite and componentwise nonnegative")
        if (p.sum(axis=1) == 0).any():
            raise ValueError("zero direction: the origin would lie in the closure of A")
        p.setflags(write=False)
        object.__setattr__(self, "directions", p)

    @property
    def dim(self) -> int:
        return self.directions.shape[1]

    def __eq__(self, other):
        return isinstance(other, RareSet) and np.array_equal(self.directions, other.directions)

    def __hash__(self):
        return hash(self.directions.tobytes())

    def __repr__(self):
        return f"RareSet({self.directions.tolist()})"

    def support_value(self, x) -> np.ndarray:
        """``max_p p.x`` along the last axis of ``x``."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise ValueError(f"vector of length {x.shape[-1]} does not match set dimension {self.dim}")
        if self.directions.shape[0] == 1:
            return x @ self.directions[0]
        return (x @ self.directions.T).max(axis=-1)

    def axis_coefficients(self):
        """Per-axis coefficient ``c_i`` if every direction is a multiple of a unit vector, else ``None``.

        For such sets ``x in uA`` iff ``c_i x_i > u`` for some ``i``.
        """
        p = self.directions
        if ((p > 0).sum(axis=1) != 1).any():
            return None
        return p.max(axis=0)

    def to_json(self) -> dict:
        return {"directions": self.directions.tolist(), "dim": self.dim}

    @classmethod
    def from_json(cls, obj: dict) -> "RareSet":
        a = cls(obj["directions"])
        if "dim" in obj and int(obj["dim"]) != a.dim:
            raise ValueError(f"dim={obj['dim']} disagrees with direction length {a.dim}")
        return a


class RuinKind(enum.Enum):
    ANY_COMPONENT_NEGATIVE = "any_component"
    TOTAL_SUM_NEGATIVE = "total_sum"


@dataclass(frozen=True)
class RuinSet:
    kind: RuinKind
    dim: int

    def __post_init__(self):
        object.__setattr__(self, "kind", RuinKind(self.kind))
        if int(self.dim) < 1:
            raise ValueError("dim must be a positive integer")

    def contains(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if self.kind is RuinKind.TOTAL_SUM_NEGATIVE:
            return u.sum(axis=-1) < 0
        return (u < 0).any(axis=-1)

    def to_json(self) -> dict:
        return {"kind": self.kind.value, "dim": self.dim}

    @classmethod
    def from_json(cls, obj: dict) -> "RuinSet":
        return cls(RuinKind(obj["kind"]), int(obj["dim"]))


def support_value(A: RareSet, x: Sequence[float]) -> float:
    return float(A.support_value(np.asarray(x, dtype=float)))


def contains(A: RareSet, x: Sequence[float], u: float) -> bool:
    if not u > 0:
        raise ValueError(f"u must be positive, got {u}")
    return bool(support_value(A, x) > u)


def scale_set(A: RareSet, c: float) -> RareSet:
    """The set ``cA``, i.e. directions ``p / c``."""
    if not c > 0:
        raise ValueError(f"c must be positive, got {c}")
    return RareSet(A.directions / c)


def ruin_set_to_rare_set(l: Sequence[float], L: RuinSet) -> RareSet:
    """Rare set ``A = l - L`` for capital allocation ``l``."""
    w = np.asarray(l, dtype=float)
    if w.ndim != 1 or w.size != L.dim:
        raise ValueError(f"allocation must have length {L.dim}")
    if (w <= 0).any():
        raise ValueError("allocation weights must be positive")
    if abs(w.sum() - 1.0) > 1e-12:
        raise ValueError(f"allocation weights must sum to 1, got {w.sum()!r}")
    if L.kind is RuinKind.TOTAL_SUM_NEGATIVE:
        return RareSet(np.ones((1, L.dim)))
    return RareSet(np.diag(1.0 / w))
