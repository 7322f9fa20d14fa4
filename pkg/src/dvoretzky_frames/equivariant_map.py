"""An explicit sign-equivariant map on the Stiefel manifold and checks of its
zero set.

The sign group ``{+-1}^k`` acts on frames by flipping frame vectors and on
``R^N`` (``N = nk - k(k+1)/2``) through one character ``w_A(g) = prod_{i in A}
g_i`` per coordinate. Which characters occur is recorded in a
:class:`FormalSum`, split by maximal element into parts ``S_1..S_k``. The
map has coordinates ``f_ij``, ``1 <= i <= k``, ``1 <= j <= n - i``:

* ``f_ij(U) = U_{i,i+j} * prod_{r in A_ij, r != i} U_{r,r}`` for ``j <= |S_i|``,
  where ``A_ij`` is the ``j``-th subset of ``S_i``;
* ``f_ij(U) = U_{i,i+j}`` otherwise.

Here ``U_{i,m}`` is the ``m``-th coordinate of the frame vector ``U_i``. Its
zeros are the ``2^k`` frames ``(+-e_1, ..., +-e_k)`` and zero is a regular
value.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, InvalidParameterError, PreconditionError
from .multiindex import ParityPairSet
from .sphere import sign_vectors
from .stiefel import (least_squares_descent, random_frame, retract,
                      stiefel_dimension, tangent_basis)

ZERO_TOL = 1e-10
DEDUP_DISTANCE = 1e-4
RANK_RTOL = 1e-6
JACOBIAN_STEP = 1e-6


def _subset(A):
    A = tuple(sorted(int(a) for a in A))
    if not A:
        raise InvalidParameterError("formal sums have no empty subsets")
    if A[0] < 1 or len(set(A)) != len(A):
        raise InvalidParameterError(f"subsets hold distinct indices >= 1, got {A}")
    return A


class FormalSum:
    """Multiplicities ``m_A`` of non-empty subsets ``A`` of ``{1..k}``."""

    def __init__(self, terms=None):
        self.terms = {}
        for A, m in dict(terms or {}).items():
            if int(m) != m or m < 0:
                raise InvalidParameterError(f"multiplicity of {A} must be a non-negative integer")
            if m:
                key = _subset(A)
                self.terms[key] = self.terms.get(key, 0) + int(m)

    def __len__(self):
        return sum(self.terms.values())

    def __eq__(self, other):
        return isinstance(other, FormalSum) and self.terms == other.terms

    def __repr__(self):
        body = " + ".join(f"{m}*{set(A)}" for A, m in sorted(self.terms.items()))
        return f"FormalSum({body or '0'})"

    def expanded(self):
        """Subsets repeated by multiplicity, in sorted subset order."""
        return [A for A in sorted(self.terms) for _ in range(self.terms[A])]


def parity_representation(pairs: ParityPairSet) -> FormalSum:
    """Count the odd-coordinate sets of the parity pairs."""
    counts = {}
    for A in pairs.odd_sets():
        counts[tuple(sorted(A))] = counts.get(tuple(sorted(A)), 0) + 1
    return FormalSum(counts)


@dataclass(frozen=True)
class MaxSplit:
    """``parts[i - 1]`` lists the subsets whose maximal element is ``i``."""
    parts: tuple

    @property
    def k(self):
        return len(self.parts)

    def sizes(self):
        return [len(p) for p in self.parts]

    def to_formal_sum(self):
        counts = {}
        for part in self.parts:
            for A in part:
                counts[A] = counts.get(A, 0) + 1
        return FormalSum(counts)

    @staticmethod
    def from_parts(parts):
        clean = []
        for i, part in enumerate(parts, start=1):
            subsets = tuple(_subset(A) for A in part)
            for A in subsets:
                if A[-1] != i:
                    raise InvalidParameterError(f"subset {A} placed in S_{i} has maximum {A[-1]}")
            clean.append(subsets)
        return MaxSplit(tuple(clean))


def split_by_max(tau: FormalSum, n: int, k: int) -> MaxSplit:
    """Partition ``tau`` by maximal element; each part must fit in ``n - k``."""
    parts = [[] for _ in range(k)]
    for A in tau.expanded():
        if A[-1] > k:
            raise InvalidParameterError(f"subset {A} exceeds k={k}")
        parts[A[-1] - 1].append(A)
    split = MaxSplit(tuple(tuple(p) for p in parts))
    _check_capacity(split, n, k)
    return split


def _check_capacity(split, n, k):
    for i, size in enumerate(split.sizes(), start=1):
        if size > n - k:
            raise CapacityError(f"|S_{i}| = {size} exceeds n - k = {n - k}")


@dataclass(frozen=True)
class EquivariantMapSpec:
    n: int
    k: int
    split: MaxSplit

    def __post_init__(self):
        if not 1 <= self.k <= self.n:
            raise InvalidParameterError(f"need 1 <= k <= n, got n={self.n}, k={self.k}")
        if self.split.k != self.k:
            raise InvalidParameterError(f"split has {self.split.k} parts, expected k={self.k}")
        _check_capacity(self.split, self.n, self.k)

    @property
    def N(self):
        return stiefel_dimension(self.n, self.k)


class EquivariantMap:
    """Evaluator for the map described by an :class:`EquivariantMapSpec`.

    ``layout[c] = (i, j)`` (1-based) and ``characters[c]`` is the subset whose
    character acts on output coordinate ``c``.
    """

    def __init__(self, spec: EquivariantMapSpec):
        self.spec = spec
        n, k = spec.n, spec.k
        self.layout, self.characters = [], []
        rows, cols, extra = [], [], []
        for i in range(1, k + 1):
            part = spec.split.parts[i - 1]
            for j in range(1, n - i + 1):
                A = part[j - 1] if j <= len(part) else (i,)
                self.layout.append((i, j))
                self.characters.append(A)
                rows.append(i + j - 1)
                cols.append(i - 1)
                extra.append([r - 1 for r in A if r != i])
        self._rows = np.array(rows, dtype=np.intp)
        self._cols = np.array(cols, dtype=np.intp)
        self._extra = extra
        assert len(self.layout) == spec.N

    @property
    def N(self):
        return self.spec.N

    def __call__(self, U):
        U = np.asarray(U, dtype=float)
        out = U[self._rows, self._cols].copy()
        diag = np.diag(U[: self.spec.k])
        for c, rs in enumerate(self._extra):
            for r in rs:
                out[c] *= diag[r]
        return out

    def character_signs(self, g):
        g = np.asarray(g, dtype=float)
        return np.array([np.prod(g[[a - 1 for a in A]]) for A in self.characters])

    def evaluate(self, U, state=None):
        r = self(U)
        return _Residual(float(r @ r), r)


@dataclass
class _Residual:
    value: float
    residual: np.ndarray
    weights: object = None


def build_f(spec: EquivariantMapSpec) -> EquivariantMap:
    return EquivariantMap(spec)


def equivariance_residual(f: EquivariantMap, U, g):
    """``max |f(g.U) - w(g) f(U)|`` with ``w(g)`` the coordinate characters."""
    U = np.asarray(U, dtype=float)
    return float(np.max(np.abs(f(U * np.asarray(g, dtype=float)) - f.character_signs(g) * f(U)),
                        initial=0.0))


def find_zeros(f: EquivariantMap, n, k, restarts, tol=ZERO_TOL, seed=0, max_iters=100):
    """Multistart least squares for zeros of ``f``; near-duplicates (plain
    Frobenius distance below :data:`DEDUP_DISTANCE`) are merged.

    Zeros are returned in the order first found.
    """
    if (n, k) != (f.spec.n, f.spec.k):
        raise InvalidParameterError("(n, k) does not match the map")
    if restarts < 8 * 2 ** k:
        raise PreconditionError(f"need at least {8 * 2 ** k} restarts for k={k}")
    zeros = []
    for index in range(restarts):
        U0 = random_frame(n, k, np.random.default_rng([seed, index]))
        U, val, _, _ = least_squares_descent(f, U0, max_iters, tol * tol, JACOBIAN_STEP)
        if np.sqrt(val) > tol:
            continue
        if all(np.linalg.norm(U - Z) >= DEDUP_DISTANCE for Z in zeros):
            zeros.append(U)
    return zeros


def is_signed_standard_frame(U, tol=1e-6):
    n, k = U.shape
    target = np.zeros((n, k))
    target[np.arange(k), np.arange(k)] = np.sign(np.diag(U[:k]))
    return bool(np.all(np.diag(U[:k]) != 0) and np.max(np.abs(U - target)) <= tol)


def tangent_jacobian(f: EquivariantMap, U, h=JACOBIAN_STEP):
    basis = tangent_basis(U)
    cols = [(f(retract(U, h * B)) - f(retract(U, -h * B))) / (2 * h) for B in basis]
    return np.array(cols).T


def jacobian_rank_at(f: EquivariantMap, U, zero_tol=1e-6):
    """Numerical rank of ``df`` on an orthonormal tangent basis at a zero."""
    U = np.asarray(U, dtype=float)
    if np.linalg.norm(f(U)) > zero_tol:
        raise PreconditionError("jacobian rank is only checked at approximate zeros")
    sv = np.linalg.svd(tangent_jacobian(f, U), compute_uv=False)
    return int(np.sum(sv > RANK_RTOL * sv[0]))


def diagonal_derivative(U, h=JACOBIAN_STEP, directions=8, seed=0):
    """Largest central-difference derivative of ``U_{i,i}`` along retraction
    curves through ``U`` in random unit tangent directions."""
    k = U.shape[1]
    basis = tangent_basis(U)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(directions):
        c = rng.standard_normal(len(basis))
        D = np.tensordot(c / np.linalg.norm(c), basis, axes=1)
        Up, Um = retract(U, h * D), retract(U, -h * D)
        deriv = (np.diag(Up[:k]) - np.diag(Um[:k])) / (2 * h)
        worst = max(worst, float(np.max(np.abs(deriv))))
    return worst


def verify_map(spec: EquivariantMapSpec, restarts=None, seed=0, tol=ZERO_TOL):
    """Run every check on the zero set of the map and return a JSON-ready dict."""
    n, k = spec.n, spec.k
    f = build_f(spec)
    restarts = restarts if restarts is not None else 8 * 2 ** k
    zeros = find_zeros(f, n, k, restarts, tol, seed)
    ranks, signed = [], []
    for Z in zeros:
        signed.append(is_signed_standard_frame(Z))
        ranks.append(jacobian_rank_at(f, Z))
    rng = np.random.default_rng(seed)
    probes = [random_frame(n, k, rng) for _ in range(4)] + zeros
    equiv = max((equivariance_residual(f, U, g) for U in probes for g in sign_vectors(k)),
                default=0.0)
    diag = max((diagonal_derivative(Z, seed=seed) for Z in zeros), default=0.0)
    checks = {
        "zero_count": len(zeros) == 2 ** k,
        "signed_frames": all(signed),
        "ranks": all(r == spec.N for r in ranks),
        "equivariance": equiv <= 1e-12,
        "diagonal_derivatives": diag <= JACOBIAN_STEP,
    }
    return {
        "n": n,
        "k": k,
        "N": spec.N,
        "split_sizes": spec.split.sizes(),
        "split": [[list(A) for A in part] for part in spec.split.parts],
        "restarts": restarts,
        "zeros_found": len(zeros),
        "zeros_expected": 2 ** k,
        "zeros": [np.round(Z, 12).tolist() for Z in zeros],
        "signed_standard": signed,
        "ranks": ranks,
        "equivariance_residual": equiv,
        "diagonal_derivative_max": diag,
        "checks": checks,
        "passed": all(checks.values()),
    }
