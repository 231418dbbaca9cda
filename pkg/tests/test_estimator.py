import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from robustsvm import AdversarialKernelSVM, Model
from robustsvm.synthetic import gaussian_blobs


@pytest.fixture(scope="module")
def fitted():
    ds = gaussian_blobs(200, 21)
    est = AdversarialKernelSVM(
        C=1.0, gamma=6.0, epsilon=0.2, schedule="diminishing", step_size=1.0,
        iterations=60, batch_size=8, block_size=32, random_state=3,
    )
    return est.fit(ds.features, ds.labels), ds


def test_fit_predict_accuracy(fitted):
    est, ds = fitted
    assert est.score(ds.features, ds.labels) > 0.9
    labels = est.predict(ds.features[:10])
    assert set(np.unique(labels)).issubset({-1, 1})


def test_decision_function_consistent_with_predict(fitted):
    est, ds = fitted
    scores = est.decision_function(ds.features[:20])
    assert np.array_equal(est.predict(ds.features[:20]), np.where(scores >= 0, 1, -1))


def test_classes_attribute(fitted):
    est, _ = fitted
    assert np.array_equal(est.classes_, [-1, 1])
    assert est.n_features_in_ == 2


def test_input_gradient_shape(fitted):
    est, ds = fitted
    grads = est.input_gradient(ds.features[:7])
    assert grads.shape == (7, 2)


def test_unfitted_raises():
    est = AdversarialKernelSVM()
    with pytest.raises(NotFittedError):
        est.predict(np.zeros((1, 2)))


def test_get_set_params_round_trip():
    est = AdversarialKernelSVM(C=3.0, gamma=0.5, epsilon=0.1)
    params = est.get_params()
    assert params["C"] == 3.0 and params["gamma"] == 0.5
    est.set_params(C=5.0)
    assert est.C == 5.0
    cloned = clone(est)
    assert cloned.get_params() == est.get_params()


def test_combined_schedule_string(fitted):
    _, ds = fitted
    est = AdversarialKernelSVM(schedule="constant:0.1", iterations=10, batch_size=8, block_size=8)
    est.fit(ds.features, ds.labels)
    from robustsvm.config import Constant

    assert est.model_.config.schedule == Constant(0.1)


def test_invalid_schedule():
    ds = gaussian_blobs(30, 2)
    est = AdversarialKernelSVM(schedule="warmup")
    with pytest.raises(ValueError):
        est.fit(ds.features, ds.labels)


def test_invalid_labels_rejected():
    ds = gaussian_blobs(30, 2)
    est = AdversarialKernelSVM(iterations=5, batch_size=4, block_size=4)
    with pytest.raises(ValueError):
        est.fit(ds.features, np.zeros(30))


def test_save_and_from_model(fitted, tmp_path):
    est, ds = fitted
    path = tmp_path / "model.rsvm"
    est.save(path)
    restored = AdversarialKernelSVM.from_model(Model.load(path))
    assert np.array_equal(restored.predict(ds.features[:25]), est.predict(ds.features[:25]))
    assert restored.get_params()["C"] == est.get_params()["C"]


def test_sklearn_pipeline_compatibility(fitted):
    from sklearn.pipeline import make_pipeline

    _, ds = fitted
    pipe = make_pipeline(AdversarialKernelSVM(gamma=6.0, iterations=20, batch_size=8, block_size=16))
    pipe.fit(ds.features, ds.labels)
    assert pipe.score(ds.features, ds.labels) > 0.8
