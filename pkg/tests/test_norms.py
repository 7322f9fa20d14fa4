import numpy as np
import pytest

from dvoretzky_frames.errors import InvalidFrameError, InvalidParameterError, ResourceError
from dvoretzky_frames.norms import (LpNorm, Norm, NormSpec, PolytopeGauge, RotatedUnconditional,
                                    ScaledNorm, SmoothRandom, UnconditionalAverage,
                                    WeightedLpNorm, epsilon_converged, epsilon_of, eval_dual,
                                    eval_norm, fold_to_signed, restrict_norm, sampled_dual,
                                    unconditionalize)


class SkewMax(Norm):
    """max(|x1|, |x1 + x2|), not unconditional."""
    dim = 2

    def evaluate(self, X):
        X = np.atleast_2d(X)
        return np.maximum(np.abs(X[:, 0]), np.abs(X[:, 0] + X[:, 1]))


def test_norm_values():
    assert eval_norm(LpNorm(2, 1), [3, -4]) == 7
    assert eval_norm(LpNorm(2, np.inf), [3, -4]) == 4
    for spec in [LpNorm(3, 1.5), SmoothRandom(3, 0), PolytopeGauge(np.eye(3))]:
        assert eval_norm(spec, np.zeros(3)) == 0
    assert eval_norm(PolytopeGauge([[1, 0], [0, 1]]), [1, 1]) == pytest.approx(2.0)
    assert eval_norm(WeightedLpNorm([2.0, 3.0], 2), [1, 1]) == pytest.approx(np.sqrt(13))


def test_dual_values():
    assert eval_dual(LpNorm(2, 1), [3, -4]) == 4
    x = np.array([0.3, -1.2, 2.0])
    assert eval_dual(LpNorm(3, 2), x) == pytest.approx(np.linalg.norm(x))
    assert eval_dual(PolytopeGauge([[1, 0], [0, 1]]), [2, 5]) == pytest.approx(5.0)
    assert eval_dual(WeightedLpNorm([2.0, 4.0], 1), [2, 2]) == pytest.approx(1.0)


@pytest.mark.parametrize("spec", [LpNorm(2, 1), LpNorm(2, 1.5), LpNorm(2, np.inf), LpNorm(2, 4),
                                  PolytopeGauge([[1, 0.2], [0.3, 1], [1, -1]]),
                                  WeightedLpNorm([1.0, 3.0], 3)])
def test_sampled_dual_matches_analytic_in_the_plane(spec):
    Y = np.random.default_rng(0).standard_normal((200, 2))
    np.testing.assert_allclose(sampled_dual(spec, Y), spec.dual_rows(Y), rtol=1e-12)


def test_sampled_dual_smooth_three_dimensional():
    spec = LpNorm(3, 4)
    Y = np.random.default_rng(1).standard_normal((100, 3))
    np.testing.assert_allclose(sampled_dual(spec, Y), spec.dual_rows(Y), rtol=1e-10)


def test_sampled_dual_is_a_lower_bound():
    spec = PolytopeGauge(np.random.default_rng(0).standard_normal((5, 3)))
    Y = np.random.default_rng(1).standard_normal((100, 3))
    assert np.all(sampled_dual(spec, Y) <= spec.dual_rows(Y) * (1 + 1e-12))


def test_norm_axioms_on_samples():
    rng = np.random.default_rng(3)
    for spec in [SmoothRandom(4, 2), PolytopeGauge(rng.standard_normal((6, 4))),
                 RotatedUnconditional(LpNorm(4, 3), q_seed=1)]:
        X, Y = rng.standard_normal((50, 4)), rng.standard_normal((50, 4))
        assert np.all(spec.evaluate(X + Y) <= spec.evaluate(X) + spec.evaluate(Y) + 1e-12)
        np.testing.assert_allclose(spec.evaluate(-2.5 * X), 2.5 * spec.evaluate(X), rtol=1e-12)


def test_spec_round_trip():
    specs = [LpNorm(3, np.inf), LpNorm(2, 1), WeightedLpNorm([1.0, 2.0], 3),
             PolytopeGauge([[1, 0], [1, 1]]), SmoothRandom(5, 7),
             RotatedUnconditional(LpNorm(4, 1), q_seed=3)]
    for spec in specs:
        again = NormSpec.from_json(spec.to_json())
        assert again.to_json() == spec.to_json()
        Z = np.random.default_rng(0).standard_normal((10, spec.dim))
        np.testing.assert_array_equal(again.evaluate(Z), spec.evaluate(Z))
    with pytest.raises(InvalidParameterError):
        NormSpec.from_dict({"kind": "nope"})


def test_invalid_specs():
    with pytest.raises(InvalidParameterError):
        LpNorm(2, 0.5)
    with pytest.raises(InvalidParameterError):
        PolytopeGauge([[1, 0], [2, 0]])
    with pytest.raises(InvalidParameterError):
        RotatedUnconditional(SmoothRandom(3, 0), q_seed=0)


def test_restricted_norm_examples():
    l1 = LpNorm(3, 1)
    X = np.random.default_rng(0).standard_normal((20, 2))
    np.testing.assert_allclose(restrict_norm(l1, np.eye(3)[:, :2]).evaluate(X), np.abs(X).sum(1))
    U = np.column_stack([[1, 1, 0], [0, 0, 1]]) / np.array([np.sqrt(2), 1])
    np.testing.assert_allclose(restrict_norm(l1, U).evaluate(X),
                               np.sqrt(2) * np.abs(X[:, 0]) + np.abs(X[:, 1]), rtol=1e-14)
    Q = np.linalg.qr(np.random.default_rng(1).standard_normal((5, 2)))[0]
    np.testing.assert_allclose(restrict_norm(LpNorm(5, 2), Q).evaluate(X),
                               np.linalg.norm(X, axis=1), rtol=1e-14)
    with pytest.raises(InvalidFrameError):
        restrict_norm(l1, np.ones((3, 2)))


def test_unconditional_average():
    X = np.random.default_rng(0).standard_normal((30, 3))
    lp = LpNorm(3, 3)
    np.testing.assert_allclose(unconditionalize(lp).evaluate(X), lp.evaluate(X), rtol=1e-14)
    avg = unconditionalize(SkewMax())
    assert avg([1.0, 1.0]) == pytest.approx(1.5)
    x = np.array([[0.3, -0.7]])
    for d in [(1, 1), (1, -1), (-1, 1), (-1, -1)]:
        assert avg.evaluate(x * d)[0] == avg.evaluate(x)[0]


def test_unconditional_average_dimension_guard():
    with pytest.raises(ResourceError):
        UnconditionalAverage(LpNorm(21, 2))


def test_epsilon_of():
    assert epsilon_of(LpNorm(3, 1)) <= 1e-12
    assert epsilon_of(LpNorm(2, 2)) <= 1e-12
    eps, used = epsilon_converged(SkewMax(), samples=1024, rel=1e-3)
    assert eps > 0.05
    assert abs(epsilon_of(SkewMax(), used) - epsilon_of(SkewMax(), 2 * used)) <= 1e-3 * eps
    with pytest.raises(InvalidParameterError):
        epsilon_of(LpNorm(2, 2), samples=10)


def test_scaled_norm():
    s = ScaledNorm(LpNorm(2, 1), 2.0)
    assert s([1.0, 1.0]) == 4.0
    assert s.dual([1.0, 1.0]) == 0.5


def test_folding():
    X = np.random.default_rng(0).standard_normal((10, 2))
    np.testing.assert_allclose(fold_to_signed(LpNorm(4, 1)).evaluate(X), 2 * np.abs(X).sum(1))
    np.testing.assert_allclose(fold_to_signed(LpNorm(4, np.inf)).evaluate(X), np.abs(X).max(1))
    X3 = np.random.default_rng(1).standard_normal((10, 3))
    np.testing.assert_allclose(fold_to_signed(LpNorm(6, 2)).evaluate(X3),
                               np.sqrt(2) * np.linalg.norm(X3, axis=1))
    with pytest.raises(InvalidParameterError):
        fold_to_signed(LpNorm(3, 2))


def test_smooth_random_gradient():
    spec = SmoothRandom(4, 5)
    x = np.random.default_rng(0).standard_normal(4)
    h = 1e-6
    fd = np.array([(spec(x + h * e) - spec(x - h * e)) / (2 * h) for e in np.eye(4)])
    np.testing.assert_allclose(spec.gradient(x), fd, rtol=1e-6)
