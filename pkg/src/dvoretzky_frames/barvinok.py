"""Polynomial approximation of a norm on R^k through lifted dual-sphere samples.

Pipeline: sample the dual unit sphere, lift each sample to its degree-``d``
monomial vector, take the minimum-volume centered ellipsoid of the lifted
cloud, and read off the matrix ``A`` of the degree-``2d`` form
``Q(x) = sum_{a,b} A_ab x^(a+b)``. With the enclosing (rather than inscribed)
ellipsoid the two-sided bound reads ``||x||^(2d) <= Q(x) <= |M_d| ||x||^(2d)``
up to sampling slack.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ConditioningError, InvalidParameterError, ResourceError
from .lowner import solve_centered_mvee
from .multiindex import (MultiIndexSet, enumerate_multiindices, lift_array,
                         odd_parity_pairs, sign_character)
from .norms import SignFlippedNorm
from .sphere import sphere_directions

SAMPLES_PER_INDEX = 64
MAX_INDEX_SET = 200
MAX_CONDITION = 1e12


@dataclass
class LiftedCloud:
    """Lifts of dual-sphere samples, one representative per antipodal pair.

    The full cloud is ``representatives`` together with their negations.
    """
    directions: np.ndarray  # (r, k) one sample per +- pair
    representatives: np.ndarray  # (r, |M_d|) lifts of the directions
    index_set: MultiIndexSet
    source_norm: object = None

    @property
    def d(self):
        return self.index_set.d

    @property
    def points(self):
        return np.vstack([self.representatives, -self.representatives])

    def __len__(self):
        return 2 * len(self.representatives)


@dataclass
class CenteredEllipsoid:
    """``{a : a^T M a <= 1}`` in raw monomial coordinates."""
    shape: np.ndarray
    inverse_shape: np.ndarray
    weights: np.ndarray
    gap: float
    iterations: int
    index_set: MultiIndexSet = None

    @staticmethod
    def from_shape(M, index_set=None):
        """Wrap a given positive definite shape matrix (no solve involved)."""
        M = np.asarray(M, dtype=float)
        Minv = np.linalg.inv(M)
        return CenteredEllipsoid(M, 0.5 * (Minv + Minv.T), None, 0.0, 0, index_set)

    def contains(self, points, tol=0.0):
        points = np.atleast_2d(points)
        vals = np.einsum("ij,jk,ik->i", points, self.shape, points)
        return vals <= 1.0 + tol


@dataclass
class QuadFormA:
    entries: np.ndarray
    index_set: MultiIndexSet

    def __call__(self, x):
        return poly_eval(self, x)

    def odd_entries(self):
        pairs = odd_parity_pairs(self.index_set.k, self.index_set.d)
        return self.entries[pairs.rows(), pairs.cols()]


def default_sample_count(k, d):
    return SAMPLES_PER_INDEX * len(enumerate_multiindices(k, d))


def dual_sphere_samples(norm_k, m, seed=0):
    """``m`` (rounded up, see :func:`sphere_directions`) points with unit dual
    norm, obtained by radially normalizing quasi-uniform directions. The
    second half of the rows is the negation of the first half."""
    Z = sphere_directions(norm_k.dim, m, seed)
    reps = Z[: len(Z) // 2]
    y = reps / np.atleast_1d(norm_k.dual(reps))[:, None]
    return np.vstack([y, -y])


def _canonical(Y):
    # flip each row so its first nonzero coordinate is positive
    nz = np.argmax(Y != 0, axis=1)
    sgn = np.sign(Y[np.arange(len(Y)), nz])
    sgn[sgn == 0] = 1.0
    return Y * sgn[:, None]


def lift_cloud(samples, d, source_norm=None) -> LiftedCloud:
    if int(d) != d or d < 1 or d % 2 == 0:
        raise InvalidParameterError(f"the lift degree must be a positive odd integer, got {d}")
    Y = _canonical(np.atleast_2d(np.asarray(samples, dtype=float)))
    _, first = np.unique(Y, axis=0, return_index=True)
    Y = Y[np.sort(first)]
    return LiftedCloud(Y, lift_array(Y, d), enumerate_multiindices(Y.shape[1], d), source_norm)


def lowner_ellipsoid(cloud, tol=1e-9, weights=None) -> CenteredEllipsoid:
    """Minimum-volume origin-centered ellipsoid containing the cloud.

    ``cloud`` is a :class:`LiftedCloud` or an array of points (the set is
    treated as symmetric). ``weights`` warm-starts the design.
    """
    if isinstance(cloud, LiftedCloud):
        P, mset = cloud.representatives, cloud.index_set
        if len(mset) > MAX_INDEX_SET:
            raise ResourceError(f"|M_d| = {len(mset)} exceeds {MAX_INDEX_SET}")
        scale = np.sqrt(mset.weights)
    else:
        P, mset = np.atleast_2d(np.asarray(cloud, dtype=float)), None
        scale = np.ones(P.shape[1])
    if not tol > 0:
        raise InvalidParameterError("tol must be positive")
    # solve in coordinates where the lift is norm-preserving
    sol = solve_centered_mvee(P * scale, tol=tol, weights=weights)
    D = P.shape[1]
    M = sol.shape * np.outer(scale, scale)
    S = sol.weights > 0
    Minv = D * (P[S].T * sol.weights[S]) @ P[S]
    return CenteredEllipsoid(M, 0.5 * (Minv + Minv.T), sol.weights, sol.gap,
                             sol.iterations, mset)


def quadform_from_ellipsoid(E: CenteredEllipsoid) -> QuadFormA:
    """``A = W M^{-1} W`` with ``W`` the diagonal of multinomial weights."""
    mset = E.index_set
    if mset is None:
        raise InvalidParameterError("ellipsoid carries no multi-index set")
    ev = np.linalg.eigvalsh(E.inverse_shape)
    if ev[0] <= 0 or ev[-1] / ev[0] > MAX_CONDITION:
        cond = np.inf if ev[0] <= 0 else ev[-1] / ev[0]
        raise ConditioningError(f"ellipsoid shape has condition number {cond:.3e}")
    w = mset.weights
    A = E.inverse_shape * np.outer(w, w)
    return QuadFormA(0.5 * (A + A.T), mset)


def poly_eval(A: QuadFormA, x):
    """``Q(x) = sum_{a,b} A_ab x^(a+b)`` for a vector or rows of ``x``."""
    x = np.asarray(x, dtype=float)
    v = lift_array(x, A.index_set.d)
    if v.ndim == 1:
        return float(v @ A.entries @ v)
    return np.einsum("ij,jk,ik->i", v, A.entries, v)


def norm_quadform(norm_k, d, samples=None, seed=0, tol=1e-9, weights=None):
    """Run the full pipeline; returns ``(A, ellipsoid, cloud)``."""
    m = samples if samples is not None else default_sample_count(norm_k.dim, d)
    cloud = lift_cloud(dual_sphere_samples(norm_k, m, seed), d, norm_k)
    E = lowner_ellipsoid(cloud, tol=tol, weights=weights)
    return quadform_from_ellipsoid(E), E, cloud


def stable_quadform(norm_k, d, samples=None, seed=0, tol=1e-9, rel=0.005, max_samples=2 ** 16):
    """Double the dual sample count until ``A`` moves by less than ``rel``
    (max-norm, relative). Returns ``(A, ellipsoid, cloud, samples_used)``."""
    m = samples if samples is not None else default_sample_count(norm_k.dim, d)
    A, E, cloud = norm_quadform(norm_k, d, m, seed, tol)
    while 2 * m <= max_samples:
        m *= 2
        A2, E2, cloud2 = norm_quadform(norm_k, d, m, seed, tol)
        change = np.abs(A2.entries - A.entries).max() / np.abs(A.entries).max()
        A, E, cloud = A2, E2, cloud2
        if change < rel:
            break
    return A, E, cloud, m


def sandwich_check(A: QuadFormA, norm_k, samples=4096, seed=0):
    """Empirical ``(min, max)`` of ``Q(x) / ||x||^(2d)`` over the unit sphere."""
    X = sphere_directions(norm_k.dim, samples, seed)
    ratio = poly_eval(A, X) / norm_k.evaluate(X) ** (2 * A.index_set.d)
    return float(ratio.min()), float(ratio.max())


def equivariance_residual(norm_k, delta, d, samples=None, seed=0, tol=1e-9):
    """``max |A(delta-norm) - delta^(a+b) A| / max|A|`` with the flipped
    norm's dual samples taken as the delta-image of the base samples."""
    delta = np.asarray(delta, dtype=float)
    m = samples if samples is not None else default_sample_count(norm_k.dim, d)
    Y = dual_sphere_samples(norm_k, m, seed)
    A = quadform_from_ellipsoid(lowner_ellipsoid(lift_cloud(Y, d, norm_k), tol))
    flipped = SignFlippedNorm(norm_k, delta)
    Af = quadform_from_ellipsoid(lowner_ellipsoid(lift_cloud(Y * delta, d, flipped), tol))
    chi = sign_character(delta, A.index_set)
    expected = A.entries * np.outer(chi, chi)
    return float(np.abs(Af.entries - expected).max() / np.abs(A.entries).max())


def equivariance_check(norm_k, delta, d, tol=1e-6, **kwargs) -> bool:
    return equivariance_residual(norm_k, delta, d, **kwargs) <= tol


def dump_matrix_csv(path, matrix, index_set: MultiIndexSet):
    """Write a matrix indexed by ``M_d x M_d`` with multi-index headers."""
    labels = index_set.labels()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([""] + labels)
        for lab, row in zip(labels, np.asarray(matrix)):
            writer.writerow([lab] + [repr(float(v)) for v in row])
