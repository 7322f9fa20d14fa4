"""Norms on R^n: declarative specs, dual norms, restriction to frames,
unconditional averaging and the two-sided distance to it.

Every norm object evaluates row-wise: ``norm.evaluate(X)`` takes an array of
shape ``(m, dim)`` and returns ``m`` values. ``norm(x)`` accepts a single
vector as well.
"""
from __future__ import annotations

import json
import math

import numpy as np
from scipy.spatial import ConvexHull
from scipy.spatial import QhullError
from scipy.stats import ortho_group, special_ortho_group

from .errors import (DimensionMismatchError, InvalidFrameError,
                     InvalidParameterError, ResourceError)
from .sphere import sign_vectors, spacing, sphere_directions

DUAL_GRID_SIZE = 2 ** 12
DUAL_REFINE_STEPS = 80
DUAL_STEP_FLOOR = 1e-14
MAX_UNCONDITIONAL_DIM = 20


def _rows(X, dim):
    X = np.asarray(X, dtype=float)
    if X.shape[-1] != dim:
        raise DimensionMismatchError(f"expected vectors of length {dim}, got shape {X.shape}")
    return X


class Norm:
    """Base class. Subclasses implement :meth:`evaluate`; :meth:`dual` falls
    back to a sampled supremum when no closed form is known."""

    dim: int
    analytic_dual = False

    def evaluate(self, X):
        raise NotImplementedError

    def __call__(self, x):
        x = _rows(x, self.dim)
        if x.ndim == 1:
            return float(self.evaluate(x[None, :])[0])
        return self.evaluate(x)

    def dual(self, y):
        y = _rows(y, self.dim)
        vals = self.dual_rows(np.atleast_2d(y))
        return float(vals[0]) if y.ndim == 1 else vals

    def dual_rows(self, Y):
        return sampled_dual(self, Y)

    def evaluate_composed(self, Z, L):
        """Values of ``z -> ||L z||`` for rows ``z`` of ``Z``; ``L`` has shape (dim, k)."""
        return self.evaluate(Z @ L.T)


def dual_grid_size(k):
    return min(DUAL_GRID_SIZE, 64 * 2 ** k)


def sampled_dual(norm, Y, grid_size=None, refine_steps=DUAL_REFINE_STEPS):
    """Dual norm by maximizing <z, y>/||z|| over a sphere grid, then refining
    around the best grid point.

    The ratio is quasi-concave on the sphere (its superlevel sets are convex
    cones), so the grid only has to land in the right basin. For ``k = 2``
    the refinement is a golden-section search in the angle, exact up to
    round-off even at kinks of the unit ball. For ``k >= 3`` it is a
    step-halving pattern search over coordinate and diagonal moves, and the
    result is a lower bound whose error is second order in the final step
    for smooth norms.
    """
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    k = norm.dim
    if k == 1:
        return np.abs(Y[:, 0]) / norm.evaluate(np.ones((1, 1)))[0]
    Z = sphere_directions(k, grid_size or dual_grid_size(k))
    boundary = Z / norm.evaluate(Z)[:, None]
    scores = Y @ boundary.T
    j = np.argmax(scores, axis=1)
    best = scores[np.arange(len(Y)), j]
    if k == 2:
        return _golden_refine(norm, Y, Z[j], 2 * np.pi / len(Z), best)
    return _pattern_refine(norm, Y, Z[j].copy(), spacing(k, len(Z)), best, refine_steps)


def _ratio_at_angle(norm, Y, theta):
    Z = np.column_stack([np.cos(theta), np.sin(theta)])
    return np.einsum("bk,bk->b", Z, Y) / norm.evaluate(Z)


def _golden_refine(norm, Y, z0, width, best):
    # the maximum lies within one grid spacing of the best grid direction
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    centre = np.arctan2(z0[:, 1], z0[:, 0])
    a, b = centre - width, centre + width
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = _ratio_at_angle(norm, Y, c), _ratio_at_angle(norm, Y, d)
    best = np.maximum(best, np.maximum(fc, fd))
    while np.max(b - a) > DUAL_STEP_FLOOR:
        left = fc >= fd
        # keep [a, d] where the left probe wins, [c, b] otherwise
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        new_c, new_d = b - invphi * (b - a), a + invphi * (b - a)
        probe = np.where(left, new_c, new_d)
        fp = _ratio_at_angle(norm, Y, probe)
        fd, fc = np.where(left, fc, fp), np.where(left, fp, fd)
        c, d = np.where(left, new_c, d), np.where(left, c, new_d)
        best = np.maximum(best, fp)
    return best


def _pattern_refine(norm, Y, z, step0, best, refine_steps):
    # poll directions are re-rotated every iteration so that some direction
    # eventually lines up with any ridge of the unit sphere
    k = Y.shape[1]
    rng = np.random.default_rng(0)
    eye = np.eye(k)
    diag = np.array([s * eye[i] + t * eye[j] for i in range(k) for j in range(i + 1, k)
                     for s in (1, -1) for t in (1, -1)]) / np.sqrt(2.0)
    base = np.vstack([eye, -eye, diag])
    step = np.full(len(Y), step0)
    for _ in range(refine_steps):
        moves = base @ special_ortho_group.rvs(k, random_state=rng)
        trials = z[:, None, :] + step[:, None, None] * moves[None, :, :]
        flat = trials.reshape(-1, k)
        vals = (np.einsum("btk,bk->bt", trials, Y)
                / norm.evaluate(flat).reshape(len(Y), len(moves)))
        t = np.argmax(vals, axis=1)
        cand = vals[np.arange(len(Y)), t]
        better = cand > best
        znew = trials[np.arange(len(Y)), t]
        znew /= np.linalg.norm(znew, axis=1)[:, None]
        z = np.where(better[:, None], znew, z)
        best = np.where(better, cand, best)
        step = np.where(better, np.minimum(2.0 * step, step0), 0.5 * step)
        if step.max() < DUAL_STEP_FLOOR:
            break
    return best


# --------------------------------------------------------------------------
# declarative specs

_KINDS = {}


def _register(cls):
    _KINDS[cls.kind] = cls
    return cls


class NormSpec(Norm):
    kind = None

    @property
    def dimension(self):
        return self.dim

    def to_dict(self):
        raise NotImplementedError

    @staticmethod
    def from_dict(data):
        try:
            cls = _KINDS[data["kind"]]
        except KeyError:
            raise InvalidParameterError(f"unknown norm kind in {data!r}") from None
        return cls._from_dict(data)

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @staticmethod
    def from_json(text):
        return NormSpec.from_dict(json.loads(text))

    def __repr__(self):
        return f"{type(self).__name__}({self.to_json()})"


def _p_to_json(p):
    return "inf" if math.isinf(p) else p


def _p_from_json(p):
    return math.inf if p == "inf" else float(p)


def _conjugate(p):
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


def _lp(X, p):
    if math.isinf(p):
        return np.max(np.abs(X), axis=1)
    if p == 1:
        return np.sum(np.abs(X), axis=1)
    if p == 2:
        return np.sqrt(np.einsum("ij,ij->i", X, X))
    A = np.abs(X)
    scale = np.max(A, axis=1)
    safe = np.where(scale > 0, scale, 1.0)
    return scale * np.sum((A / safe[:, None]) ** p, axis=1) ** (1.0 / p)


@_register
class LpNorm(NormSpec):
    kind = "lp"
    analytic_dual = True

    def __init__(self, n, p):
        p = _p_from_json(p)
        if not p >= 1:
            raise InvalidParameterError(f"p must be >= 1, got {p}")
        if n < 1:
            raise InvalidParameterError(f"dimension must be >= 1, got {n}")
        self.dim = int(n)
        self.p = p

    def evaluate(self, X):
        return _lp(np.atleast_2d(X), self.p)

    def dual_rows(self, Y):
        return _lp(Y, _conjugate(self.p))

    def to_dict(self):
        return {"kind": self.kind, "n": self.dim, "p": _p_to_json(self.p)}

    @classmethod
    def _from_dict(cls, data):
        return cls(data["n"], data["p"])


@_register
class WeightedLpNorm(NormSpec):
    """``||x|| = ||(w_1 x_1, ..., w_n x_n)||_p`` with positive weights."""
    kind = "weighted_lp"
    analytic_dual = True

    def __init__(self, weights, p):
        w = np.asarray(weights, dtype=float)
        if w.ndim != 1 or not np.all(w > 0):
            raise InvalidParameterError("weights must be a vector of positive numbers")
        p = _p_from_json(p)
        if not p >= 1:
            raise InvalidParameterError(f"p must be >= 1, got {p}")
        self.weights = w
        self.dim = len(w)
        self.p = p

    def evaluate(self, X):
        return _lp(np.atleast_2d(X) * self.weights, self.p)

    def dual_rows(self, Y):
        return _lp(Y / self.weights, _conjugate(self.p))

    def to_dict(self):
        return {"kind": self.kind, "weights": self.weights.tolist(), "p": _p_to_json(self.p)}

    @classmethod
    def _from_dict(cls, data):
        return cls(data["weights"], data["p"])


@_register
class PolytopeGauge(NormSpec):
    """Gauge of ``conv{+-v : v in V}``.

    Evaluated through the facet inequalities of the hull, so the generators
    must span R^n. The dual norm is ``max_v |<v, y>|``.
    """
    kind = "polytope"
    analytic_dual = True

    def __init__(self, generators):
        V = np.atleast_2d(np.asarray(generators, dtype=float))
        self.generators = V
        self.dim = V.shape[1]
        if np.linalg.matrix_rank(V) < self.dim:
            raise InvalidParameterError("generators do not span R^n; the gauge is not a norm")
        if self.dim == 1:
            self._normals = np.array([[1.0], [-1.0]]) / np.max(np.abs(V))
        else:
            try:
                hull = ConvexHull(np.vstack([V, -V]))
            except QhullError as exc:
                raise InvalidParameterError(f"cannot build hull of generators: {exc}") from None
            a, b = hull.equations[:, :-1], hull.equations[:, -1]
            # facets a.x + b <= 0, origin interior => b < 0
            self._normals = a / (-b)[:, None]

    def evaluate(self, X):
        return np.maximum(np.max(np.atleast_2d(X) @ self._normals.T, axis=1), 0.0)

    def dual_rows(self, Y):
        return np.max(np.abs(Y @ self.generators.T), axis=1)

    def to_dict(self):
        return {"kind": self.kind, "generators": self.generators.tolist()}

    @classmethod
    def _from_dict(cls, data):
        return cls(data["generators"])


def _is_unconditional(norm, trials=32, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((trials, norm.dim))
    S = rng.choice([-1.0, 1.0], size=X.shape)
    a, b = norm.evaluate(X), norm.evaluate(X * S)
    return np.allclose(a, b, rtol=1e-12, atol=0)


@_register
class RotatedUnconditional(NormSpec):
    """``||x|| = base(Q^T x)`` for a base norm unconditional in the standard
    axes; the result is unconditional in the basis of columns of ``Q``."""
    kind = "rotated"

    def __init__(self, base, q=None, q_seed=None):
        if not isinstance(base, NormSpec):
            base = NormSpec.from_dict(base)
        if not _is_unconditional(base):
            raise InvalidParameterError("base norm is not unconditional in the standard axes")
        if (q is None) == (q_seed is None):
            raise InvalidParameterError("give exactly one of q or q_seed")
        self.base = base
        self.dim = base.dim
        self.q_seed = q_seed
        if q is None:
            Q = ortho_group.rvs(self.dim, random_state=int(q_seed)) if self.dim > 1 else np.ones((1, 1))
        else:
            Q = np.asarray(q, dtype=float)
        if Q.shape != (self.dim, self.dim) or not np.allclose(Q.T @ Q, np.eye(self.dim), atol=1e-10):
            raise InvalidParameterError("q must be an orthogonal matrix of the base dimension")
        self.Q = Q
        self.analytic_dual = base.analytic_dual

    def evaluate(self, X):
        return self.base.evaluate(np.atleast_2d(X) @ self.Q)

    def evaluate_composed(self, Z, L):
        return self.base.evaluate_composed(Z, self.Q.T @ L)

    def dual_rows(self, Y):
        return self.base.dual_rows(Y @ self.Q)

    def to_dict(self):
        out = {"kind": self.kind, "base": self.base.to_dict()}
        if self.q_seed is not None:
            out["q_seed"] = self.q_seed
        else:
            out["q"] = self.Q.tolist()
        return out

    @classmethod
    def _from_dict(cls, data):
        return cls(data["base"], q=data.get("q"), q_seed=data.get("q_seed"))


@_register
class SmoothRandom(NormSpec):
    """``||x|| = (sum_j <v_j, x>^(2q))^(1/(2q))`` over seeded Gaussian ``v_j``.

    ``count`` defaults to ``2 n``; ``q`` is the smoothing exponent.
    """
    kind = "smooth_random"

    def __init__(self, n, seed, count=None, q=2):
        if n < 1 or q < 1 or int(q) != q:
            raise InvalidParameterError("need n >= 1 and integer q >= 1")
        self.dim = int(n)
        self.seed = int(seed)
        self.count = int(count) if count is not None else 2 * self.dim
        if self.count < self.dim:
            raise InvalidParameterError("count must be at least n for a norm")
        self.q = int(q)
        self.vectors = np.random.default_rng(self.seed).standard_normal((self.count, self.dim))
        if np.linalg.matrix_rank(self.vectors) < self.dim:
            raise InvalidParameterError("random family does not span R^n")

    def _from_projections(self, P):
        return _lp(P, 2.0 * self.q)

    def evaluate(self, X):
        return self._from_projections(np.atleast_2d(X) @ self.vectors.T)

    def evaluate_composed(self, Z, L):
        return self._from_projections(Z @ (self.vectors @ L).T)

    def gradient(self, x):
        x = _rows(x, self.dim)
        p = self.vectors @ x
        val = self(x)
        return (p / val) ** (2 * self.q - 1) @ self.vectors

    def to_dict(self):
        return {"kind": self.kind, "n": self.dim, "seed": self.seed,
                "count": self.count, "q": self.q}

    @classmethod
    def _from_dict(cls, data):
        return cls(data["n"], data["seed"], data.get("count"), data.get("q", 2))


def eval_norm(spec: Norm, x) -> float:
    x = _rows(x, spec.dim)
    if x.ndim != 1:
        raise InvalidParameterError("eval_norm expects a single vector")
    return spec(x)


def eval_dual(spec: Norm, y) -> float:
    y = _rows(y, spec.dim)
    if y.ndim != 1:
        raise InvalidParameterError("eval_dual expects a single vector")
    return spec.dual(y)


# --------------------------------------------------------------------------
# derived norms on R^k

def check_frame(U, n=None, tol=1e-8):
    U = np.asarray(U, dtype=float)
    if U.ndim != 2 or U.shape[1] > U.shape[0]:
        raise InvalidFrameError(f"a frame is an (n, k) array with k <= n, got shape {U.shape}")
    if n is not None and U.shape[0] != n:
        raise InvalidFrameError(f"frame lives in R^{U.shape[0]}, norm in R^{n}")
    if not np.allclose(U.T @ U, np.eye(U.shape[1]), atol=tol, rtol=0):
        raise InvalidFrameError("frame columns are not orthonormal")
    return U


class RestrictedNorm(Norm):
    """``||x||_U = ||sum_i x_i U_i||``; ``frame`` holds ``U_i`` as columns."""

    def __init__(self, parent, frame):
        self.parent = parent
        self.frame = check_frame(frame, parent.dim)
        self.dim = self.frame.shape[1]

    def evaluate(self, X):
        return self.parent.evaluate_composed(np.atleast_2d(X), self.frame)

    def evaluate_composed(self, Z, L):
        return self.parent.evaluate_composed(Z, self.frame @ L)


def restrict_norm(spec, U) -> RestrictedNorm:
    return RestrictedNorm(spec, U)


class SignFlippedNorm(Norm):
    """``x -> base(delta * x)``."""

    def __init__(self, base, delta):
        self.base = base
        self.delta = np.asarray(delta, dtype=float)
        if self.delta.shape != (base.dim,) or not np.all(np.abs(self.delta) == 1):
            raise InvalidParameterError("delta must be a vector of +-1 of the norm's dimension")
        self.dim = base.dim
        self.analytic_dual = base.analytic_dual

    def evaluate(self, X):
        return self.base.evaluate(np.atleast_2d(X) * self.delta)

    def dual_rows(self, Y):
        if self.base.analytic_dual:
            return self.base.dual_rows(Y * self.delta)
        return sampled_dual(self, Y)


class ScaledNorm(Norm):
    def __init__(self, base, factor):
        if not factor > 0:
            raise InvalidParameterError("scale factor must be positive")
        self.base = base
        self.factor = float(factor)
        self.dim = base.dim
        self.analytic_dual = base.analytic_dual

    def evaluate(self, X):
        return self.factor * self.base.evaluate(X)

    def dual_rows(self, Y):
        if self.base.analytic_dual:
            return self.base.dual_rows(Y) / self.factor
        return sampled_dual(self, Y)


class UnconditionalAverage(Norm):
    """Average of ``base(delta * x)`` over all ``2^k`` sign vectors.

    Values are sorted before summation so the result is bitwise invariant
    under sign flips of ``x``.
    """

    def __init__(self, base):
        if base.dim > MAX_UNCONDITIONAL_DIM:
            raise ResourceError(
                f"unconditional average needs 2^{base.dim} evaluations per point; "
                f"limit is k <= {MAX_UNCONDITIONAL_DIM}")
        self.base = base
        self.dim = base.dim
        self._signs = sign_vectors(self.dim)

    def evaluate(self, X):
        X = np.atleast_2d(X)
        vals = np.stack([self.base.evaluate(X * s) for s in self._signs])
        return np.sort(vals, axis=0).sum(axis=0) / len(self._signs)


def unconditionalize(base) -> UnconditionalAverage:
    return UnconditionalAverage(base)


def epsilon_of(base, samples=4096, seed=0) -> float:
    """Smallest ``eps`` with ``(1-eps)|||x||| <= base(x) <= (1+eps)|||x|||``
    on a deterministic sample of the unit sphere."""
    if samples < 100:
        raise InvalidParameterError("epsilon_of needs at least 100 samples")
    X = sphere_directions(base.dim, samples, seed)
    rho = base.evaluate(X) / UnconditionalAverage(base).evaluate(X)
    return float(max(rho.max() - 1.0, 1.0 - rho.min(), 0.0))


def epsilon_converged(base, samples=4096, seed=0, rel=0.01, max_samples=2 ** 16):
    """Double the sample count until the estimate moves by less than ``rel``.

    Returns ``(eps, samples_used)``.
    """
    eps = epsilon_of(base, samples, seed)
    while samples < max_samples:
        samples *= 2
        nxt = epsilon_of(base, samples, seed)
        if abs(nxt - eps) <= rel * max(abs(eps), 1e-12):
            return nxt, samples
        eps = nxt
    return eps, samples


class FoldedNorm(Norm):
    """``(x_1..x_m) -> ||(x_1, -x_1, ..., x_m, -x_m)||``."""

    def __init__(self, spec):
        if spec.dim % 2:
            raise InvalidParameterError(f"folding needs an even dimension, got {spec.dim}")
        self.parent = spec
        self.dim = spec.dim // 2

    def evaluate(self, X):
        X = np.atleast_2d(X)
        Y = np.empty((X.shape[0], 2 * self.dim))
        Y[:, 0::2] = X
        Y[:, 1::2] = -X
        return self.parent.evaluate(Y)


def fold_to_signed(spec) -> FoldedNorm:
    """Halve the dimension of a permutation-invariant norm; the caller vouches
    for permutation invariance."""
    return FoldedNorm(spec)
