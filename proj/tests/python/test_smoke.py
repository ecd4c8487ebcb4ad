import numpy as np
import pytest

import topofiltr as tf


def test_two_points_have_one_finite_h0_bar():
    d0, d1 = tf.rips_persistence(np.array([[0.0, 0, 0], [1, 0, 0]]), max_edge=2.0)
    assert d0["pairs"].tolist() == [[0.0, 1.0]]
    assert d0["essential_births"] == [0.0]
    assert d1["pairs"].shape == (0, 2)


def test_square_has_one_loop():
    pts = np.array([[0.0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]])
    _, d1 = tf.rips_persistence(pts, max_edge=3.0)
    assert d1["pairs"].tolist() == [[1.0, pytest.approx(np.sqrt(2))]]


def test_metrics_on_small_diagrams():
    a = np.array([[0.0, 1.0]])
    assert tf.wasserstein2(a, a) == 0.0
    assert tf.bottleneck(a, tf.empty_diagram()) == pytest.approx(0.5)
    assert tf.wasserstein2(a, tf.empty_diagram()) == pytest.approx(np.sqrt(0.5))
    img = tf.persistence_image(np.array([[0.2, 0.6]]), resolution=20, sigma=0.05)
    assert img.shape == (20, 20)
    assert tf.pie(a * 0.5, a * 0.5) == 0.0


def test_hungarian_and_loss():
    rows, cost = tf.hungarian(np.array([[4.0, 1, 3], [2, 0, 5], [3, 2, 2]]))
    assert rows == [1, 0, 2] and cost == 5.0
    target = np.array([[0.1, 0.5], [0.2, 0.9]])
    pred = np.array([[0.1, 0.5, 30.0], [0.2, 0.9, 30.0], [0.4, 0.4, -30.0]])
    loss = tf.total_loss(pred, target)
    assert loss["recon"] == 0.0 and loss["diag"] == 0.0
    assert loss["exist"] < 1e-12
    grad = tf.loss_gradients(pred, target)
    assert grad.shape == (3, 3)
    assert np.abs(grad).max() < 1e-12


def test_vectorize_cka_probe():
    rng = np.random.default_rng(0)
    diagrams = [np.array([[0.0, 0.3], [0.1, 0.2]]), np.array([[0.0, 0.5]])]
    v = tf.topk_vectorize(diagrams, k=3)
    assert v.shape[0] == 2
    a = rng.normal(size=(50, 8))
    assert tf.linear_cka(a, a) == pytest.approx(1.0, abs=1e-12)
    x = np.vstack([rng.normal(-3, 1, size=(30, 2)), rng.normal(3, 1, size=(30, 2))])
    r = tf.train_linear_probe(x, [0] * 30 + [1] * 30, folds=5, steps=200)
    assert r["mean_accuracy"] > 0.95


def test_errors_are_translated():
    with pytest.raises(tf.TopoError, match="invalid-parameter"):
        tf.hungarian(np.zeros((3, 2)))


def test_decoder_orders_pairs(tmp_path):
    config = '{"num_queries": 12, "feature_dim": 16, "model_dim": 8, "heads": 2, "layers": 2, "ffn_dim": 16, ' \
             '"pos_hidden": 8, "head_hidden": 8, "pair_head_layers": 3, "norm": "post", "norm_eps": 1e-5}'
    tf.init_weights(tmp_path / "w.json", seed=3, config_json=config)
    model = tf.FiltrModel(tmp_path / "w.json")
    assert tf.decoder_config(model)["num_queries"] == 12
    rng = np.random.default_rng(1)
    tokens, centers = rng.normal(size=(10, 16)), rng.uniform(-1, 1, size=(10, 3))
    pred = model.predict([tokens], centers)
    assert pred.shape == (12, 3)
    assert np.all(pred[:, 1] > pred[:, 0])
    perm = rng.permutation(10)
    assert np.allclose(model.predict([tokens[perm]], centers[perm]), pred, atol=1e-10)


def test_generate_and_verify(tmp_path):
    manifest, clouds = tf.generate_dataset(2, seed=5, out_dir=tmp_path, points=256, beta0_max=2)
    assert len(manifest["samples"]) == 2 and len(clouds) == 2
    for s, c in zip(manifest["samples"], clouds):
        assert c.shape == (256, 3)
        report = tf.verify_mesh(tmp_path / s["mesh"])
        assert report["manifold"]
        assert report["beta0"] == s["beta0"]
        assert report["genus"] == s["genus"]
