"""Minimum-volume origin-centered ellipsoid containing a symmetric point set.

Solved through its dual, the D-optimal design problem

    maximize log det X(u),  X(u) = sum_i u_i p_i p_i^T,  u in the simplex,

whose optimum gives the ellipsoid ``{a : a^T M a <= 1}`` with
``M = X(u)^{-1} / D``. First-order (Frank-Wolfe with away steps) iterations
bring the weights near the optimum; Newton steps on the active support then
finish the solve to near machine precision, so the ellipsoid depends smoothly
on the points.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.optimize import brentq

from . import _kernels
from .errors import ConvergenceError, DegenerateCloudError

RANK_TOL = 1e-10
FW_TOL = 1e-5
FW_CHUNK = 2000
POLISH_TOL = 1e-13
# lstsq cutoff for the Newton model; near-null directions go to _null_step
MODEL_RCOND = 1e-15


@dataclass
class LownerSolution:
    shape: np.ndarray  # M
    weights: np.ndarray  # optimal design u, sums to 1
    gap: float  # max_i p_i^T M p_i - 1
    iterations: int
    newton_steps: int


def _leverages(P, u):
    S = u > 0
    X = (P[S].T * u[S]) @ P[S]
    L = np.linalg.cholesky(X)
    Q = solve_triangular(L, P.T, lower=True)
    return X, Q, np.einsum("ij,ij->j", Q, Q)


def _gaps(g, u, D):
    return g.max() / D - 1.0, 1.0 - g[u > 0].min() / D


def _logdet(P, u):
    S = u > 0
    X = (P[S].T * u[S]) @ P[S]
    sign, val = np.linalg.slogdet(X)
    return val if sign > 0 else -np.inf


def _polish(P, u, tol, max_steps=60):
    """Damped Newton on the support; returns (u, converged, steps).

    Iterates until the optimality measures reach ``POLISH_TOL`` or stop
    improving, and reports convergence against ``tol``.
    """
    D = P.shape[1]
    u = u.copy()
    best = np.inf
    stalls = 0
    support = np.count_nonzero(u)
    for step in range(max_steps):
        try:
            _, Q, g = _leverages(P, u)
        except np.linalg.LinAlgError:
            return u, False, step
        eps = max(_gaps(g, u, D))
        if eps <= POLISH_TOL:
            return u, True, step
        # dropping support points counts as progress even if eps stays put
        shrunk = np.count_nonzero(u) < support
        support = np.count_nonzero(u)
        if eps < 0.5 * best or shrunk:
            best, stalls = min(eps, best), 0
        else:
            stalls += 1
            if stalls >= 3:
                return u, best <= tol, step
        act = np.flatnonzero((u > 0) | (g > D * (1.0 + POLISH_TOL)))
        G = Q[:, act].T @ Q[:, act]
        target = np.zeros_like(u)
        target[act] = _model_step(G ** 2, g[act], u[act])
        direction = target - u
        f0 = _logdet(P, u)
        t = 1.0
        while t > 1e-12:
            trial = target if t == 1.0 else u + t * direction
            trial = np.where(trial > 0, trial, 0.0)
            if _logdet(P, trial) >= f0 - 1e-14 * abs(f0):
                break
            t *= 0.5
        else:
            return u, best <= tol, step
        u = trial / trial.sum()
        if max(_gaps(_leverages(P, u)[2], u, D)) > 0.5 * eps:
            # Newton is blind along near-null directions; walk them instead
            for _ in range(np.count_nonzero(u)):
                nxt = _null_step(P, u)
                if nxt is u:
                    break
                u = nxt
    _, _, g = _leverages(P, u)
    return u, max(_gaps(g, u, D)) <= tol, max_steps


def _null_step(P, u, rtol=1e-6):
    """Move along near-null directions of the Newton Hessian on the support.

    The Hessian is the Gram matrix of the lifted points ``q_i q_i^T`` (in
    whitened coordinates), so a near-dependency of size ``s`` among them shows
    up only as an eigenvalue ``s^2`` that is lost to round-off, and the Newton
    step stalls. These directions are found from the singular values of the
    lifted points themselves. The gradient is projected onto them, and the
    exactly concave 1-D problem ``log det(I + t C)`` is solved up to the
    simplex boundary. The worst violator outside the support may enter.
    """
    _, Q, g = _leverages(P, u)
    S = np.flatnonzero(u > 0)
    j = int(np.argmax(g))
    if u[j] == 0 and g[j] > Q.shape[0] * (1.0 + POLISH_TOL):
        S = np.append(S, j)
    if len(S) < 2:
        return u
    Qs = Q[:, S]
    B = np.einsum("ai,bi->abi", Qs, Qs).reshape(-1, len(S))
    Z = np.linalg.svd(np.ones((1, len(S))))[2][1:].T
    _, sv, Vt = np.linalg.svd(B @ Z, full_matrices=False)
    null = Vt[sv <= rtol * sv[0]].T
    if null.shape[1] == 0:
        return u
    v = Z @ (null @ (null.T @ (Z.T @ g[S])))
    if not np.any(v < 0):
        return u
    mu = np.linalg.eigvalsh((Qs * v) @ Qs.T)
    t_max = float(np.min(-u[S][v < 0] / v[v < 0]))
    if t_max <= 0:
        return u

    def slope(t):
        return float(np.sum(mu / (1.0 + t * mu)))

    if slope(0.0) <= 0:
        return u
    t = t_max if slope(t_max) >= 0 else brentq(slope, 0.0, t_max, xtol=1e-14 * t_max)
    w = u.copy()
    w[S] = np.maximum(u[S] + t * v, 0.0)
    return w / w.sum()


def _model_step(H, g, w):
    """Minimize the Newton model ``x.H.x/2 - 2 g.x`` over the simplex.

    (``H w = g`` holds at the expansion point, which removes the linear
    term in ``w``.) Primal active-set method started from the feasible ``w``;
    singular ``H`` (more support points than the design needs) is handled by
    minimum-norm solves of the KKT system.
    """
    free = w > 0
    if not free.any():
        free[:] = True
    w = w.copy()
    for _ in range(4 * len(w) + 4):
        F = np.flatnonzero(free)
        n = len(F)
        K = np.zeros((n + 1, n + 1))
        K[:n, :n] = H[np.ix_(F, F)]
        K[:n, n] = K[n, :n] = 1.0
        rhs = np.append(2.0 * g[F], 1.0)
        sol = np.linalg.lstsq(K, rhs, rcond=MODEL_RCOND)[0]
        x = np.zeros_like(w)
        x[F] = sol[:n]
        if np.all(x[F] >= 0):
            w = x
            grad = H @ w - 2.0 * g
            nu = -sol[n]
            reduced = np.where(free, np.inf, grad - nu)
            j = int(np.argmin(reduced))
            if reduced[j] >= -1e-12 * np.abs(grad).max():
                return w
            free[j] = True
            continue
        neg = F[x[F] < 0]
        ratios = w[neg] / (w[neg] - x[neg])
        i = int(np.argmin(ratios))
        w = w + ratios[i] * (x - w)
        w[neg[i]] = 0.0
        w[w < 0] = 0.0
        free[neg[i]] = False
    return w


def check_spanning(P):
    sv = np.linalg.svd(P, compute_uv=False)
    if len(sv) < P.shape[1] or sv[-1] <= RANK_TOL * sv[0]:
        raise DegenerateCloudError(
            f"cloud of {P.shape[0]} points does not span R^{P.shape[1]}")


def solve_centered_mvee(P, tol=1e-9, weights=None, max_iter=100_000, backend=None):
    """Centered minimum-volume ellipsoid of the symmetric set ``{+-p_i}``.

    ``P`` holds one representative per antipodal pair. ``weights`` warm-starts
    the design (e.g. from a nearby cloud with the same indexing).
    """
    P = np.ascontiguousarray(P, dtype=float)
    m, D = P.shape
    check_spanning(P)
    fw = _kernels.get_fw_iterate(backend)
    iterations = newton = 0

    if weights is not None and np.shape(weights) == (m,) and np.sum(weights) > 0:
        u0 = np.where(np.asarray(weights) > 0, weights, 0.0).astype(float)
        u0 /= u0.sum()
        u, ok, steps = _polish(P, u0, tol)
        newton += steps
        if ok:
            return _finish(P, u, iterations, newton)
        u = np.full(m, 1.0 / m) if not np.all(np.isfinite(u)) else u
        try:
            _leverages(P, u)
        except np.linalg.LinAlgError:
            u = np.full(m, 1.0 / m)
    else:
        u = np.full(m, 1.0 / m)

    fw_tol = FW_TOL
    while iterations < max_iter:
        X, Q, g = _leverages(P, u)
        Xinv = np.linalg.inv(X)
        Xinv = 0.5 * (Xinv + Xinv.T)
        g = np.ascontiguousarray(g)
        chunk = min(FW_CHUNK, max_iter - iterations)
        it, eps_plus, eps_minus = fw(P, u, Xinv, g, fw_tol, chunk)
        iterations += it
        u[u < 0] = 0.0
        u /= u.sum()
        up, ok, steps = _polish(P, u, tol)
        newton += steps
        if ok:
            return _finish(P, up, iterations, newton)
        if eps_plus <= fw_tol and eps_minus <= fw_tol:
            fw_tol *= 0.1
    _, _, g = _leverages(P, u)
    gap = g.max() / D - 1.0
    if gap <= tol:
        return _finish(P, u, iterations, newton)
    raise ConvergenceError(
        f"ellipsoid iterations exhausted ({iterations}); relative gap {gap:.3e} > {tol:.1e}",
        gap=gap)


def _finish(P, u, iterations, newton):
    D = P.shape[1]
    X, _, g = _leverages(P, u)
    M = np.linalg.inv(X) / D
    M = 0.5 * (M + M.T)
    return LownerSolution(M, u, float(g.max() / D - 1.0), iterations, newton)
