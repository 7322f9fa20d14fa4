import numpy as np
import pytest

from dvoretzky_frames.errors import InfeasibleInstanceError, InvalidParameterError
from dvoretzky_frames.norms import LpNorm, RotatedUnconditional, SmoothRandom, WeightedLpNorm
from dvoretzky_frames.sphere import sign_vectors
from dvoretzky_frames.stiefel import (FrameObjective, SolverOptions, choose_degree,
                                      feasibility, group_action, objective, random_frame,
                                      retract, solve_frame, stiefel_dimension, tangent_basis,
                                      tangent_project, theory_epsilon, zero_exists)


def frame(n, k, seed=0):
    return random_frame(n, k, np.random.default_rng(seed))


def test_group_action():
    U = frame(5, 3)
    np.testing.assert_array_equal(group_action([1, 1, 1], U), U)
    V = group_action([1, -1, 1], U)
    np.testing.assert_array_equal(V[:, 1], -U[:, 1])
    np.testing.assert_array_equal(V[:, [0, 2]], U[:, [0, 2]])
    rng = np.random.default_rng(1)
    for _ in range(10):
        g, h = rng.choice([-1, 1], 3), rng.choice([-1, 1], 3)
        np.testing.assert_array_equal(group_action(g, group_action(h, U)),
                                      group_action(g * h, U))
    with pytest.raises(InvalidParameterError):
        group_action([1, 0.5, 1], U)


def test_feasibility_and_degree():
    assert feasibility(34, 2, 7)
    assert not feasibility(10, 2, 5)
    assert not feasibility(5, 3, 1)
    assert choose_degree(34, 2) == 7
    assert choose_degree(10, 2) == 3
    # 6^2 / 2 = 18 needs n - 2 >= 18
    assert choose_degree(18, 2) == 3
    assert choose_degree(20, 2) == 5
    with pytest.raises(InfeasibleInstanceError):
        choose_degree(5, 3)
    assert zero_exists(8, 2, 3) and not feasibility(8, 2, 3)


def test_theory_epsilon():
    assert theory_epsilon(1, 5) == 0.0
    assert theory_epsilon(2, 3) == pytest.approx(4 ** (1 / 6) - 1)
    assert theory_epsilon(2, 7) == pytest.approx(8 ** (1 / 14) - 1)
    assert theory_epsilon(2, 7) == pytest.approx(0.1602, abs=1e-4)


def test_tangent_projection():
    U = frame(6, 3)
    G = np.random.default_rng(2).standard_normal((6, 3))
    P = tangent_project(U, G)
    np.testing.assert_allclose(tangent_project(U, P), P, atol=1e-14)
    np.testing.assert_allclose(tangent_project(U, U), 0, atol=1e-14)
    # normal space at U is {U S : S symmetric}
    for i in range(3):
        for j in range(i, 3):
            S = np.zeros((3, 3))
            S[i, j] = S[j, i] = 1
            assert abs(np.sum(P * (U @ S))) <= 1e-12


def test_tangent_basis_is_orthonormal_and_tangent():
    U = frame(7, 3)
    B = tangent_basis(U)
    assert len(B) == stiefel_dimension(7, 3) == 15
    gram = np.einsum("aij,bij->ab", B, B)
    np.testing.assert_allclose(gram, np.eye(len(B)), atol=1e-12)
    for b in B:
        np.testing.assert_allclose(tangent_project(U, b), b, atol=1e-12)


def test_retraction_keeps_orthonormality():
    U = frame(9, 4)
    step = tangent_project(U, np.random.default_rng(3).standard_normal((9, 4)))
    V = retract(U, 0.3 * step)
    assert np.abs(V.T @ V - np.eye(4)).max() <= 1e-10


def test_objective_zero_cases():
    assert objective(frame(6, 2), LpNorm(6, 2), 3) <= 1e-10
    assert objective(np.eye(5)[:, :2], LpNorm(5, 1), 3) <= 1e-10
    assert objective(np.eye(5)[:, :2], WeightedLpNorm([1, 2, 3, 4, 5], 3), 5) <= 1e-10
    spec = RotatedUnconditional(LpNorm(8, 1), q_seed=0)
    assert objective(spec.Q[:, :2], spec, 3) <= 1e-10


def test_objective_positive_for_generic_norm():
    assert objective(frame(6, 2), SmoothRandom(6, 1), 3) > 1e-6


def test_objective_sign_invariance_is_exact():
    f = FrameObjective(SmoothRandom(6, 1), 2, 3)
    U = frame(6, 2, 4)
    v = f(U)
    for g in sign_vectors(2):
        assert f(group_action(g, U)) == v


def test_objective_raw_and_normalized():
    U = frame(6, 2, 5)
    spec = SmoothRandom(6, 2)
    raw = objective(U, spec, 3, normalized=False)
    norm = objective(U, spec, 3)
    assert raw > norm > 0


def test_solve_frame_euclidean():
    res = solve_frame(LpNorm(10, 2), 10, 2, 3, SolverOptions(restarts=2))
    assert res.iterations == 0
    assert res.objective_value <= 1e-10
    assert res.achieved_eps <= 1e-6
    assert res.converged


def test_solve_frame_from_known_zero_neighbourhood():
    spec = RotatedUnconditional(LpNorm(8, 1), q_seed=1)
    start = spec.Q[:, :2] + 0.01 * np.random.default_rng(0).standard_normal((8, 2))
    res = solve_frame(spec, 8, 2, 3, SolverOptions(restarts=1, seed=1), start=start)
    first = res.restarts[0]
    assert first.converged
    assert all(b <= a for a, b in zip(first.history, first.history[1:]))
    assert np.abs(res.frame.T @ res.frame - np.eye(2)).max() <= 1e-10


def test_solve_frame_infeasible():
    with pytest.raises(InfeasibleInstanceError):
        solve_frame(LpNorm(5, 1), 5, 2, 5)
    with pytest.raises(InvalidParameterError):
        solve_frame(LpNorm(5, 1), 6, 2, 3)


def test_solve_frame_independent_of_threads():
    spec = SmoothRandom(6, 3)
    opts = dict(restarts=3, max_iters=3, seed=5)
    a = solve_frame(spec, 6, 2, 3, SolverOptions(threads=1, **opts))
    b = solve_frame(spec, 6, 2, 3, SolverOptions(threads=3, **opts))
    np.testing.assert_array_equal(a.frame, b.frame)
    assert a.objective_value == b.objective_value
    assert [r.objective_value for r in a.restarts] == [r.objective_value for r in b.restarts]
