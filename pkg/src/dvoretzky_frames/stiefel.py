"""Frames, the sign-flip action, and the search for frames whose restricted
norm has a parity-even polynomial approximation.

A frame is an ``(n, k)`` array with orthonormal columns ``U_1..U_k``. The
objective at ``U`` is the sum of squares of the entries ``A_ab(U)`` with
``a + b`` having an odd coordinate, where ``A(U)`` comes from the lifted
ellipsoid of the restricted norm. It is minimized by a damped Gauss-Newton
iteration on the residual vector, with finite-difference Jacobians over an
orthonormal tangent basis and a QR retraction.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .barvinok import (default_sample_count, dual_sphere_samples, lift_cloud,
                       lowner_ellipsoid, quadform_from_ellipsoid)
from .errors import (ConditioningError, ConvergenceError, DegenerateCloudError,
                     InfeasibleInstanceError, InvalidParameterError)
from .multiindex import odd_parity_pairs
from .norms import check_frame, epsilon_of, restrict_norm
from .sphere import sphere_directions

ORTHO_TOL = 1e-10
ELLIPSOID_TOL = 1e-12
# a restart stops once this many accepted steps fail to halve the objective
STALL_WINDOW = 6


# --------------------------------------------------------------------------
# frames and the group action

def orthonormalize(U):
    """QR re-orthonormalization with the sign convention ``diag(R) > 0``."""
    Q, R = np.linalg.qr(np.asarray(U, dtype=float))
    s = np.sign(np.diag(R))
    s[s == 0] = 1.0
    return Q * s


def random_frame(n, k, rng):
    """Haar-distributed frame from a numpy Generator."""
    return orthonormalize(rng.standard_normal((n, k)))


def group_action(g, U):
    """``(g_1 U_1, ..., g_k U_k)``."""
    g = np.asarray(g, dtype=float)
    U = np.asarray(U, dtype=float)
    if g.shape != (U.shape[1],) or not np.all(np.abs(g) == 1):
        raise InvalidParameterError("g must be a vector of +-1 with one entry per frame vector")
    return U * g


def stiefel_dimension(n, k):
    return n * k - k * (k + 1) // 2


def tangent_project(U, G):
    """Project ``G`` onto the tangent space ``{D : U^T D skew}`` at ``U``."""
    UtG = U.T @ G
    return G - U @ (0.5 * (UtG + UtG.T))


def tangent_basis(U):
    """Frobenius-orthonormal basis of the tangent space at ``U``, shape
    ``(N, n, k)``: rotations inside the frame first, then moves out of it."""
    n, k = U.shape
    Q = np.linalg.qr(U, mode="complete")[0]
    perp = Q[:, k:]
    basis = []
    for i in range(k):
        for j in range(i + 1, k):
            B = np.zeros((n, k))
            B[:, j] = U[:, i] / np.sqrt(2.0)
            B[:, i] = -U[:, j] / np.sqrt(2.0)
            basis.append(B)
    for a in range(n - k):
        for j in range(k):
            B = np.zeros((n, k))
            B[:, j] = perp[:, a]
            basis.append(B)
    return np.array(basis).reshape(-1, n, k)


def retract(U, step):
    return orthonormalize(U + step)


# --------------------------------------------------------------------------
# degree bookkeeping

def _dim_budget_ok(n, k, d):
    D = comb(d + k - 1, k - 1)
    return D * D <= 2 * (n - k) and len(odd_parity_pairs(k, d)) <= n - k


def feasibility(n, k, d):
    """True iff ``binom(d+k-1, k-1)^2 / 2 <= n - k`` and ``|E_d| <= n - k``."""
    if k < 2:
        raise InvalidParameterError("feasibility is defined for k >= 2")
    if d < 1 or d % 2 == 0:
        raise InvalidParameterError(f"d must be a positive odd integer, got {d}")
    return _dim_budget_ok(n, k, d)


def zero_exists(n, k, d):
    """``|E_d| <= n - k``: the count under which a parity zero is guaranteed.
    Weaker than :func:`feasibility`, which also bounds ``|M_d|``."""
    if d < 1 or d % 2 == 0:
        raise InvalidParameterError(f"d must be a positive odd integer, got {d}")
    return len(odd_parity_pairs(k, d)) <= n - k


def choose_degree(n, k):
    """Largest odd ``d`` with :func:`feasibility` true."""
    if k < 2:
        raise InvalidParameterError("choose_degree needs k >= 2")
    best = None
    d = 1
    # the binomial grows without bound in d, so the scan terminates
    while comb(d + k - 1, k - 1) ** 2 <= 2 * (n - k):
        if _dim_budget_ok(n, k, d):
            best = d
        d += 2
    if best is None:
        raise InfeasibleInstanceError(f"no odd degree is feasible for n={n}, k={k}")
    return best


def theory_epsilon(k, d):
    """``|M_d|^(1/(2d)) - 1``."""
    return comb(d + k - 1, k - 1) ** (1.0 / (2 * d)) - 1.0


def bound_eps_shape(n, k):
    """``n^(-1/(3(k-1)))``, the decay shape of the guaranteed epsilon."""
    return n ** (-1.0 / (3 * (k - 1)))


# --------------------------------------------------------------------------
# objective

@dataclass
class ObjectiveValue:
    value: float  # normalized: sum of odd entries squared / ||A||_F^2
    residual: np.ndarray  # odd entries / ||A||_F
    quadform: object
    weights: np.ndarray


class FrameObjective:
    """Evaluate the parity objective of a norm on R^n at frames.

    The k-dimensional sample directions are fixed at construction, so the
    lifted clouds at nearby frames are in one-to-one correspondence and the
    ellipsoid solve can be warm-started from a previous design.

    Each frame is first mapped to a canonical point of its sign orbit (every
    column's largest entry positive) and the residual is mapped back with the
    sign character of each pair, so the value is exactly invariant under the
    sign action. ``quadform`` refers to the canonical frame.
    """

    def __init__(self, spec, k, d, samples=None, seed=0, tol=ELLIPSOID_TOL):
        if k < 1 or k > spec.dim:
            raise InvalidParameterError(f"need 1 <= k <= n, got k={k}, n={spec.dim}")
        self.spec = spec
        self.n = spec.dim
        self.k = k
        self.d = d
        self.samples = samples if samples is not None else default_sample_count(k, d)
        self.seed = seed
        self.tol = tol
        self.pairs = odd_parity_pairs(k, d)
        self._odd = [sorted(i - 1 for i in A) for A in self.pairs.odd_sets()]
        # touch the cache so threads share one read-only array
        sphere_directions(k, self.samples, seed)

    def evaluate(self, U, weights=None) -> ObjectiveValue:
        U = np.asarray(U, dtype=float)
        lead = U[np.argmax(np.abs(U), axis=0), np.arange(U.shape[1])]
        signs = np.where(lead < 0, -1.0, 1.0)
        chi = np.array([np.prod(signs[idx]) for idx in self._odd])
        norm = restrict_norm(self.spec, U * signs)
        Y = dual_sphere_samples(norm, self.samples, self.seed)
        E = lowner_ellipsoid(lift_cloud(Y, self.d), tol=self.tol, weights=weights)
        A = quadform_from_ellipsoid(E)
        r = A.entries[self.pairs.rows(), self.pairs.cols()] / np.linalg.norm(A.entries)
        return ObjectiveValue(float(r @ r), chi * r, A, E.weights)

    def __call__(self, U):
        return self.evaluate(U).value

    def raw(self, U):
        """Unnormalized sum of squared odd entries."""
        ov = self.evaluate(U)
        return ov.value * float(np.sum(ov.quadform.entries ** 2))


def objective(U, spec, d, samples=None, seed=0, normalized=True):
    U = check_frame(U, spec.dim)
    f = FrameObjective(spec, U.shape[1], d, samples, seed)
    return f(U) if normalized else f.raw(U)


# --------------------------------------------------------------------------
# search

@dataclass
class SolverOptions:
    restarts: int = 16
    max_iters: int = 50
    tol_g: float = 1e-8
    fd_step: float = 1e-5
    seed: int = 0
    threads: int = 1
    dual_samples: int = None
    verify_samples: int = 4096

    def __post_init__(self):
        if self.restarts < 1 or self.max_iters < 0:
            raise InvalidParameterError("restarts must be >= 1 and max_iters >= 0")
        if not (self.tol_g > 0 and self.fd_step > 0):
            raise InvalidParameterError("tol_g and fd_step must be positive")


@dataclass
class RestartResult:
    index: int
    frame: np.ndarray
    objective_value: float
    iterations: int
    converged: bool
    history: list = field(default_factory=list)
    failure: str = None
    achieved_eps: float = None

    def rank(self):
        # converged frames first, ordered by achieved eps; then by objective
        if self.converged:
            return (0, self.achieved_eps, self.objective_value, self.index)
        return (1, self.objective_value, 0.0, self.index)


@dataclass
class SearchResult:
    frame: np.ndarray
    objective_value: float
    iterations: int
    restarts_used: int
    achieved_eps: float
    theory_eps: float
    converged: bool
    restarts: list = field(default_factory=list)


def fd_jacobian(f, U, basis, h, weights=None):
    """Central differences of the normalized residual along ``basis``."""
    cols = []
    for B in basis:
        rp = f.evaluate(retract(U, h * B), weights).residual
        rm = f.evaluate(retract(U, -h * B), weights).residual
        cols.append((rp - rm) / (2 * h))
    return np.array(cols).T


def least_squares_descent(f, U, max_iters, tol, fd_step):
    """Damped Gauss-Newton on the Stiefel manifold with a monotone
    backtracking line search.

    ``f.evaluate(U, state)`` must return an object with ``value`` (the sum of
    squares of ``residual``), ``residual`` and ``weights`` (warm-start state
    handed back to later calls, possibly ``None``). Returns
    ``(frame, value, iterations, history)``; ``history`` holds the accepted
    objective values.
    """
    n, k = U.shape
    h = fd_step * np.sqrt(k)
    cur = f.evaluate(U)
    history = [cur.value]
    lam = 1e-8
    it = 0
    while cur.value > tol and it < max_iters:
        it += 1
        basis = tangent_basis(U)
        J = fd_jacobian(f, U, basis, h, cur.weights)
        r = cur.residual
        JJ = J @ J.T
        accepted = False
        for _ in range(30):
            # minimum-norm damped step in tangent coordinates
            reg = lam * max(np.trace(JJ) / len(JJ), 1e-300)
            s = -J.T @ np.linalg.solve(JJ + reg * np.eye(len(JJ)), r)
            t = 1.0
            while t > 1e-4:
                V = retract(U, t * np.tensordot(s, basis, axes=1))
                try:
                    trial = f.evaluate(V, cur.weights)
                except (DegenerateCloudError, ConditioningError, ConvergenceError):
                    trial = None
                if trial is not None and trial.value < cur.value:
                    accepted = True
                    break
                t *= 0.5
            if accepted:
                break
            lam *= 100.0
        if not accepted:
            break
        lam = max(lam * (0.1 if t == 1.0 else 10.0), 1e-12)
        U, cur = V, trial
        history.append(cur.value)
        if len(history) > STALL_WINDOW and history[-1] > 0.5 * history[-1 - STALL_WINDOW]:
            break
    return U, cur.value, it, history


def _run_restart(f, opts, index, U0):
    try:
        U, val, it, hist = least_squares_descent(f, U0, opts.max_iters, opts.tol_g, opts.fd_step)
    except (DegenerateCloudError, ConditioningError, ConvergenceError) as exc:
        return RestartResult(index, U0, np.inf, 0, False, [], f"{type(exc).__name__}: {exc}")
    converged = val <= opts.tol_g
    eps = None
    if converged:
        eps = epsilon_of(restrict_norm(f.spec, U), opts.verify_samples, opts.seed)
    return RestartResult(index, U, val, it, converged, hist, achieved_eps=eps)


def solve_frame(spec, n, k, d, opts: SolverOptions = None, start=None) -> SearchResult:
    """Multistart search for a frame with normalized objective ``<= tol_g``.

    Every restart runs to completion. Among converged restarts the one with
    the smallest achieved epsilon wins, ties going to the lower objective and
    then the lower restart index; without any converged restart the lowest
    objective wins. ``start`` adds a caller-supplied frame as restart 0 ahead
    of the random ones.
    """
    opts = opts or SolverOptions()
    if spec.dim != n:
        raise InvalidParameterError(f"norm lives in R^{spec.dim}, expected n={n}")
    if not zero_exists(n, k, d):
        raise InfeasibleInstanceError(f"(n={n}, k={k}, d={d}): |E_d| exceeds n - k")
    f = FrameObjective(spec, k, d, opts.dual_samples, opts.seed)

    def job(index):
        if start is not None and index == 0:
            U0 = check_frame(orthonormalize(start), n)
        else:
            rng = np.random.default_rng([opts.seed, index - (start is not None)])
            U0 = random_frame(n, k, rng)
        return _run_restart(f, opts, index, U0)

    total = opts.restarts + (start is not None)
    if opts.threads > 1:
        with ThreadPoolExecutor(opts.threads) as pool:
            results = list(pool.map(job, range(total)))
    else:
        results = [job(i) for i in range(total)]
    best = min(results, key=RestartResult.rank)
    if not np.isfinite(best.objective_value):
        raise DegenerateCloudError("every restart hit a degenerate restricted norm")
    eps = best.achieved_eps
    if eps is None:
        eps = epsilon_of(restrict_norm(spec, best.frame), opts.verify_samples, opts.seed)
    return SearchResult(best.frame, best.objective_value, best.iterations, total,
                        eps, theory_epsilon(k, d), best.converged, results)
