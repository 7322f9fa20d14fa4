"""Multi-indices of fixed order, lexicographic order and symmetric lifts.

Every vector in R^{M_d} in this package is addressed by the members of
:class:`MultiIndexSet` in ascending lexicographic order, so position ``0`` of
a lift for ``k = 2`` is the monomial ``x_2^d`` and the last position is
``x_1^d``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import InvalidParameterError

MultiIndex = tuple  # tuple of k non-negative ints


def _check_kd(k, d):
    if int(k) != k or k < 1:
        raise InvalidParameterError(f"k must be an integer >= 1, got {k!r}")
    if int(d) != d or d < 1:
        raise InvalidParameterError(f"d must be an integer >= 1, got {d!r}")


def _compositions(total, parts):
    # ascending lex: first coordinate grows slowest
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


class MultiIndexSet:
    """The ordered set of multi-indices of order ``d`` in ``k`` variables."""

    def __init__(self, k: int, d: int):
        _check_kd(k, d)
        self.k = int(k)
        self.d = int(d)
        self.members: tuple = tuple(_compositions(self.d, self.k))
        self.position = {alpha: i for i, alpha in enumerate(self.members)}
        exps = np.array(self.members, dtype=np.int64).reshape(len(self.members), self.k)
        exps.setflags(write=False)
        self.exponents = exps
        w = np.array([multinomial(self.d, a) for a in self.members], dtype=float)
        w.setflags(write=False)
        self.weights = w

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __getitem__(self, i):
        return self.members[i]

    def __eq__(self, other):
        return isinstance(other, MultiIndexSet) and (self.k, self.d) == (other.k, other.d)

    def __hash__(self):
        return hash((MultiIndexSet, self.k, self.d))

    def __repr__(self):
        return f"MultiIndexSet(k={self.k}, d={self.d}, size={len(self)})"

    def labels(self):
        """Serialized multi-indices, e.g. ``'2-0-1'``, used as CSV headers."""
        return ["-".join(str(a) for a in alpha) for alpha in self.members]


@lru_cache(maxsize=None)
def enumerate_multiindices(k: int, d: int) -> MultiIndexSet:
    return MultiIndexSet(k, d)


def lex_compare(alpha: Sequence[int], beta: Sequence[int]) -> int:
    """Return -1, 0 or 1 as ``alpha`` is less than, equal to or greater than ``beta``.

    The first differing coordinate decides.
    """
    if len(alpha) != len(beta):
        raise InvalidParameterError(
            f"multi-indices have different lengths {len(alpha)} and {len(beta)}")
    for a, b in zip(alpha, beta):
        if a != b:
            return -1 if a < b else 1
    return 0


def multinomial(d: int, alpha: Sequence[int]) -> int:
    """Exact multinomial coefficient ``d! / prod(alpha_i!)``."""
    if any(a < 0 for a in alpha) or sum(alpha) != d:
        raise InvalidParameterError(f"multi-index {tuple(alpha)} does not have order {d}")
    out = math.factorial(d)
    for a in alpha:
        out //= math.factorial(a)
    return out


@dataclass(frozen=True)
class ParityPairSet:
    """Lex-ordered pairs (alpha < beta) of M_d whose sum has an odd coordinate.

    ``positions`` holds index pairs into the owning :class:`MultiIndexSet`.
    """
    index_set: MultiIndexSet
    positions: tuple

    def __len__(self):
        return len(self.positions)

    @property
    def pairs(self):
        m = self.index_set.members
        return [(m[i], m[j]) for i, j in self.positions]

    def rows(self):
        return np.array([i for i, _ in self.positions], dtype=np.intp)

    def cols(self):
        return np.array([j for _, j in self.positions], dtype=np.intp)

    def odd_sets(self):
        """For each pair, the (1-based) coordinates where alpha + beta is odd."""
        return [frozenset(i + 1 for i, (a, b) in enumerate(zip(al, be)) if (a + b) % 2)
                for al, be in self.pairs]


@lru_cache(maxsize=None)
def odd_parity_pairs(k: int, d: int) -> ParityPairSet:
    mset = enumerate_multiindices(k, d)
    exps = mset.exponents
    positions = []
    for i in range(len(mset)):
        for j in range(i + 1, len(mset)):
            if np.any((exps[i] + exps[j]) % 2):
                positions.append((i, j))
    return ParityPairSet(mset, tuple(positions))


@dataclass(frozen=True)
class SymVector:
    """Coordinates ``b_alpha`` indexed by a :class:`MultiIndexSet`."""
    coords: np.ndarray
    index_set: MultiIndexSet

    def __post_init__(self):
        if np.shape(self.coords) != (len(self.index_set),):
            raise InvalidParameterError(
                f"expected {len(self.index_set)} coordinates, got shape {np.shape(self.coords)}")

    def __getitem__(self, alpha):
        return self.coords[self.index_set.position[tuple(alpha)]]


def lift_array(X, d: int) -> np.ndarray:
    """Rows of ``X`` (shape (m, k)) mapped to their monomial vectors, shape (m, |M_d|)."""
    X = np.asarray(X, dtype=float)
    squeeze = X.ndim == 1
    X = np.atleast_2d(X)
    mset = enumerate_multiindices(X.shape[1], d)
    # powers table: P[:, i, e] = x_i ** e
    powers = X[:, :, None] ** np.arange(d + 1)[None, None, :]
    out = np.ones((X.shape[0], len(mset)))
    for i in range(mset.k):
        out *= powers[:, i, mset.exponents[:, i]]
    return out[0] if squeeze else out


def tensor_lift(x, d: int) -> SymVector:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise InvalidParameterError("tensor_lift expects a single vector")
    _check_kd(x.shape[0], d)
    return SymVector(lift_array(x, d), enumerate_multiindices(x.shape[0], d))


def weighted_inner(a: SymVector, b: SymVector) -> float:
    if a.index_set != b.index_set:
        raise InvalidParameterError(f"index sets differ: {a.index_set} vs {b.index_set}")
    return float(np.dot(a.index_set.weights * a.coords, b.coords))


def sign_character(delta, index_set: MultiIndexSet) -> np.ndarray:
    """``delta^alpha`` for every member alpha, as a float vector of +-1."""
    delta = np.asarray(delta)
    return np.prod(np.where(index_set.exponents % 2 == 1, delta[None, :], 1), axis=1).astype(float)
