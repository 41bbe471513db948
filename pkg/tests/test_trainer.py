import numpy as np
import pytest
from sklearn.base import clone
from sklearn.linear_model import LogisticRegression

from topoprune.trainer import (
    DeskMLPClassifier,
    DenseNet,
    TrainConfig,
    TrainingDivergedError,
    backward,
    cross_entropy,
    forward,
    init_dense_net,
    load_checkpoint,
    make_desk_dataset,
    save_checkpoint,
    train,
)

from _oracles import finite_difference


def zero_net(sizes, activation="relu"):
    return DenseNet(
        [np.zeros((a, b)) for a, b in zip(sizes[:-1], sizes[1:])],
        [np.zeros(b) for b in sizes[1:]],
        activation,
    )


def test_zero_net_gives_uniform_output():
    probs, _ = forward(zero_net([5, 4, 3]), np.random.default_rng(0).normal(size=(7, 5)))
    np.testing.assert_allclose(probs, 1 / 3, rtol=0, atol=1e-15)


def test_forward_shapes_and_normalization():
    net = init_dense_net([6, 8, 4, 3], "tanh", seed=1)
    probs, cache = forward(net, np.random.default_rng(1).normal(size=(10, 6)))
    assert probs.shape == (10, 3)
    np.testing.assert_allclose(probs.sum(axis=1), 1.0, rtol=0, atol=1e-12)
    assert [a.shape for a in cache["activations"]] == [(10, 6), (10, 8), (10, 4), (10, 3)]


def test_forward_rejects_wrong_width():
    with pytest.raises(ValueError, match="width"):
        forward(init_dense_net([4, 2]), np.ones((3, 5)))


def test_cross_entropy_uniform():
    assert cross_entropy(np.full((4, 2), 0.5), np.array([0, 1, 1, 0])) == pytest.approx(np.log(2))


@pytest.mark.parametrize("activation", ["tanh", "relu"])
def test_gradients_match_finite_differences(activation):
    rng = np.random.default_rng(7)
    net = init_dense_net([5, 6, 4, 3], activation, seed=7)
    X = rng.normal(size=(9, 5))
    y = rng.integers(0, 3, size=9)
    gW, gb = backward(net, forward(net, X)[1], y)

    def loss():
        return cross_entropy(forward(net, X)[0], y)

    worst = 0.0
    for params, grads in ((net.weights, gW), (net.biases, gb)):
        for P, G in zip(params, grads):
            num = finite_difference(loss, P)
            rel = np.abs(num - G) / np.maximum(1e-8, np.abs(num) + np.abs(G))
            worst = max(worst, rel.max())
    assert worst < 1e-6


def test_masked_gradients_are_zero():
    net = init_dense_net([4, 3, 2], seed=0)
    mask = np.ones((4, 3))
    mask[1] = 0
    net.set_masks([mask, None])
    gW, _ = backward(net, forward(net, np.ones((2, 4)))[1], np.array([0, 1]))
    assert np.all(gW[0][1] == 0)


def test_zero_learning_rate_leaves_weights():
    X, y = make_desk_dataset(64, 6, random_state=0)
    net = init_dense_net([6, 5, 2], seed=0)
    before = net.copy()
    train(net, X, y, TrainConfig(seed=0, learning_rate=0.0, iterations=20))
    for a, b in zip(net.weights + net.biases, before.weights + before.biases):
        np.testing.assert_array_equal(a, b)


def test_training_is_deterministic():
    X, y = make_desk_dataset(200, 8, random_state=3)
    runs = []
    for _ in range(2):
        net = init_dense_net([8, 16, 2], seed=5)
        _, losses = train(net, X, y, TrainConfig(seed=5, iterations=50))
        runs.append((net.weights[0].tobytes(), losses.tobytes()))
    assert runs[0] == runs[1]


def test_masks_stay_zero_during_training():
    X, y = make_desk_dataset(120, 6, random_state=1)
    net = init_dense_net([6, 10, 2], seed=1)
    rng = np.random.default_rng(1)
    masks = [(rng.random((6, 10)) < 0.5).astype(float), None]
    train(net, X, y, TrainConfig(seed=1, iterations=100), masks=masks)
    assert np.all(net.weights[0][masks[0] == 0] == 0)
    assert np.count_nonzero(net.weights[0]) == np.count_nonzero(masks[0])


def test_linear_data_is_learned():
    X, y = make_desk_dataset(600, 20, kind="linear", random_state=0)
    net = init_dense_net([20, 16, 2], seed=0)
    _, losses = train(net, X, y, TrainConfig(seed=0, iterations=400))
    acc = np.mean(np.argmax(forward(net, X)[0], axis=1) == y)
    reference = LogisticRegression().fit(X, y).score(X, y)
    assert acc >= 0.95
    assert acc >= reference - 0.02
    assert losses[-50:].mean() < losses[:50].mean()


def test_moons_dataset_shape_and_scaling():
    X, y = make_desk_dataset(300, 20, random_state=2)
    assert X.shape == (300, 20) and set(np.unique(y)) == {0, 1}
    np.testing.assert_allclose(X.mean(axis=0), 0, atol=1e-12)
    np.testing.assert_allclose(X.std(axis=0), 1, atol=1e-12)


def test_unknown_dataset_kind():
    with pytest.raises(ValueError):
        make_desk_dataset(kind="spirals")


def test_divergence_detected():
    X, y = make_desk_dataset(100, 6, random_state=0)
    net = init_dense_net([6, 32, 2], seed=0)
    with np.errstate(all="ignore"), pytest.raises(TrainingDivergedError) as info:
        train(net, X * 1e6, y, TrainConfig(seed=0, learning_rate=1e6, iterations=200))
    assert info.value.iteration >= 0


@pytest.mark.parametrize("kwargs", [{"iterations": 0}, {"learning_rate": -1}, {"batch_size": 0}])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        TrainConfig(**kwargs)


def test_net_shape_validation():
    with pytest.raises(ValueError):
        DenseNet([np.zeros((3, 2)), np.zeros((3, 2))], [np.zeros(2), np.zeros(2)])
    with pytest.raises(ValueError):
        DenseNet([np.zeros((3, 2))], [np.zeros(3)])
    with pytest.raises(ValueError):
        DenseNet([np.zeros((3, 2))], [np.zeros(2)], activation="sigmoid")


def test_checkpoint_round_trip(tmp_path):
    net = init_dense_net([5, 4, 2], "tanh", seed=3)
    mask = np.ones((5, 4))
    mask[0, 0] = 0
    net.set_masks([mask, None])
    save_checkpoint(net, tmp_path, seed=3)
    back = load_checkpoint(tmp_path)
    assert back.activation == "tanh"
    for a, b in zip(net.weights + net.biases, back.weights + back.biases):
        assert a.tobytes() == b.tobytes()
    np.testing.assert_array_equal(back.masks[0], mask)
    assert back.masks[1] is None


def test_classifier_fit_predict():
    X, y = make_desk_dataset(400, 20, kind="linear", random_state=4)
    labels = np.where(y == 1, "b", "a")
    clf = DeskMLPClassifier(hidden_layer_sizes=(16,), max_iter=300, random_state=4).fit(X, labels)
    assert list(clf.classes_) == ["a", "b"]
    assert clf.score(X, labels) >= 0.95
    assert [W.shape for W in clf.coefs_] == [(20, 16), (16, 2)]
    assert clf.loss_curve_.shape == (300,)


def test_classifier_params_and_clone():
    clf = DeskMLPClassifier(hidden_layer_sizes=(8, 4), activation="tanh")
    params = clone(clf).get_params()
    assert params["hidden_layer_sizes"] == (8, 4) and params["activation"] == "tanh"


def test_classifier_rejects_feature_mismatch():
    X, y = make_desk_dataset(60, 6, random_state=0)
    clf = DeskMLPClassifier(hidden_layer_sizes=(4,), max_iter=5).fit(X, y)
    with pytest.raises(ValueError):
        clf.predict(np.ones((2, 7)))
