"""Deterministic direction sets on the unit sphere of R^k.

All sets returned here are closed under every coordinate sign flip, exactly in
floating point. Sign-flip closure is what makes sampled dual norms, lifted
clouds and the resulting quadratic forms transform exactly under the group
{+-1}^k.
"""
from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np
from scipy.stats import qmc
from scipy.special import ndtri

from .errors import InvalidParameterError


def sign_vectors(k: int) -> np.ndarray:
    """All 2^k sign vectors, starting from (1, ..., 1)."""
    return np.array(list(itertools.product((1.0, -1.0), repeat=k)))


def _circle(m: int) -> np.ndarray:
    # quarter-turn rotations and the swap (x, y) -> (y, x) are exact, so build
    # the first quadrant from its lower half and rotate
    q = m // 4
    half = q // 2
    theta = 0.5 * np.pi * np.arange(half + 1) / q
    lower = np.column_stack([np.cos(theta), np.sin(theta)])
    if q % 2 == 0 and q > 0:
        lower[half] = np.sqrt(0.5)
    quad = np.empty((q, 2))
    quad[: half + 1] = lower[: min(half + 1, q)]
    for i in range(half + 1, q):
        quad[i] = lower[q - i][::-1]
    rot = [quad]
    for _ in range(3):
        prev = rot[-1]
        rot.append(np.column_stack([-prev[:, 1], prev[:, 0]]))
    return np.vstack(rot)


@lru_cache(maxsize=64)
def _directions(k: int, m: int, seed: int) -> np.ndarray:
    if k == 1:
        out = np.array([[1.0], [-1.0]])
    elif k == 2:
        out = _circle(m)
    else:
        signs = sign_vectors(k)
        half = signs[signs[:, 0] > 0]
        base_count = -(-m // len(signs))
        sampler = qmc.Sobol(k, scramble=True, seed=seed)
        u = sampler.random_base2(max(0, (base_count - 1).bit_length()))[:base_count]
        g = np.abs(ndtri(np.clip(u, 1e-12, 1 - 1e-12)))
        g /= np.linalg.norm(g, axis=1)[:, None]
        first = np.vstack([g * s for s in half])
        out = np.vstack([first, -first])
    out.setflags(write=False)
    return out


def sphere_directions(k: int, m: int, seed: int = 0) -> np.ndarray:
    """Quasi-uniform unit vectors in R^k, shape (m', k) with m' >= m.

    ``k == 2``: ``m`` is rounded up to a multiple of 4 and the angles are
    ``2 pi j / m`` in increasing order starting at 0. ``k >= 3``: a scrambled
    Sobol set in the positive orthant, replicated over all sign patterns, so
    ``m`` is rounded up to a multiple of ``2^k``. ``k == 1`` gives ``{+1, -1}``.
    In every case the second half of the rows is exactly the negation of the
    first half.
    """
    if k < 1:
        raise InvalidParameterError(f"k must be >= 1, got {k}")
    if m < 2:
        raise InvalidParameterError(f"need at least 2 directions, got {m}")
    if k == 2:
        m = -(-m // 4) * 4
    return _directions(int(k), int(m), int(seed))


def spacing(k: int, count: int) -> float:
    """Typical angular gap between neighbours in a set of ``count`` directions."""
    if k == 1:
        return 1.0
    if k == 2:
        return 2 * np.pi / count
    area = 2 * np.pi ** (k / 2) / _gamma(k / 2)
    return float((area / count) ** (1.0 / (k - 1)))


def _gamma(x):
    from math import gamma
    return gamma(x)
