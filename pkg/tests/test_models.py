import numpy as np
import pytest

from seqdisc import (
    DesignSpace,
    ExperimentDataset,
    NoiseModel,
    ParameterSpace,
    ParametricModel,
)
from seqdisc.exceptions import OutOfBounds


@pytest.fixture
def toy_model():
    return ParametricModel(
        name="line",
        design_space=DesignSpace(np.array([[0.0, 10.0]])),
        parameter_space=ParameterSpace(np.array([[0.0, 1.0], [0.0, 1.0]])),
        output_dim=1,
        evaluator=lambda x, th: np.array([th[0] * x[0] + th[1]]),
    )


def test_box_contains_and_clip():
    box = DesignSpace(np.array([[0.0, 1.0], [-2.0, 2.0]]))
    assert box.dim == 2
    assert box.contains(np.array([0.5, 0.0]))
    assert box.contains(np.array([1.0, 2.0]))  # closed box
    assert not box.contains(np.array([1.1, 0.0]))
    clipped = box.clip(np.array([5.0, -7.0]))
    assert np.allclose(clipped, [1.0, -2.0])


def test_box_rejects_bad_bounds():
    with pytest.raises(ValueError):
        DesignSpace(np.array([[1.0, 0.0]]))


def test_model_evaluate_checks_boxes(toy_model):
    y = toy_model.evaluate(np.array([2.0]), np.array([0.5, 0.25]))
    assert np.allclose(y, [1.25])
    with pytest.raises(OutOfBounds):
        toy_model.evaluate(np.array([11.0]), np.array([0.5, 0.25]))
    with pytest.raises(OutOfBounds):
        toy_model.evaluate(np.array([2.0]), np.array([1.5, 0.25]))


def test_model_batch_matches_loop(toy_model):
    rng = np.random.default_rng(0)
    X = rng.uniform(0, 10, size=(7, 1))
    Th = rng.uniform(0, 1, size=(7, 2))
    F = toy_model.evaluate_batch(X, Th)
    for n in range(7):
        assert np.allclose(F[n], toy_model.evaluate(X[n], Th[n]))


def test_model_batch_broadcasts_single_theta(toy_model):
    X = np.array([[1.0], [2.0]])
    F = toy_model.evaluate_batch(X, np.array([0.5, 0.0]))
    assert np.allclose(F[:, 0], [0.5, 1.0])


def test_noise_model_validates_spd():
    with pytest.raises(ValueError):
        NoiseModel(np.array([[1.0, 2.0], [2.0, 1.0]]))  # indefinite
    with pytest.raises(ValueError):
        NoiseModel(np.array([[1.0, 0.5], [0.0, 1.0]]))  # asymmetric


def test_noise_model_inverse_and_sampling():
    cov = np.array([[0.35, 0.0], [0.0, 2.3e-3]])
    nm = NoiseModel(cov)
    assert np.allclose(nm.inverse @ cov, np.eye(2), atol=1e-12)
    draws = nm.sample(np.random.default_rng(3), 200_000)
    sample_cov = np.cov(draws.T)
    assert np.allclose(np.diag(sample_cov), np.diag(cov), rtol=2e-2)
    assert abs(sample_cov[0, 1]) < 5e-4


def test_dataset_append_and_views():
    ds = ExperimentDataset(DesignSpace(np.array([[0.0, 1.0]])), output_dim=2)
    ds.append(np.array([0.2]), np.array([1.0, 2.0]), tag="initial")
    ds.append(np.array([0.8]), np.array([3.0, 4.0]), tag="designed")
    assert len(ds) == 2
    assert ds.X.shape == (2, 1) and ds.Y.shape == (2, 2)
    assert ds.tags == ("initial", "designed")
    with pytest.raises(OutOfBounds):
        ds.append(np.array([2.0]), np.array([0.0, 0.0]))


def test_dataset_records_round_trip():
    space = DesignSpace(np.array([[0.0, 1.0]]))
    ds = ExperimentDataset(space, output_dim=1)
    ds.append(np.array([0.5]), np.array([1.5]))
    clone = ExperimentDataset.from_records(space, 1, ds.to_records())
    assert np.array_equal(clone.X, ds.X)
    assert np.array_equal(clone.Y, ds.Y)
    assert clone.tags == ds.tags
