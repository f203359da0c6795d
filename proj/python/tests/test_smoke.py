import math

import numpy as np
import pytest

import scumwatch as sw


def test_patch_grid_round_trip():
    rng = np.random.default_rng(0)
    frame = rng.integers(0, 256, size=(720, 1280, 3), dtype=np.uint8)
    cropped = sw.crop_far_region(frame)
    assert cropped.shape == (512, 1280, 3)
    np.testing.assert_array_equal(cropped, frame[208:])
    patches = sw.extract_patches(cropped)
    assert len(patches) == 20
    np.testing.assert_array_equal(patches[7], cropped[128:256, 512:768])
    with pytest.raises(sw.DimensionMismatch):
        sw.crop_far_region(frame[:, :1000])


def test_mixup_and_cutout():
    a = np.full((128, 256, 3), 100, np.uint8)
    b = np.full((128, 256, 3), 200, np.uint8)
    img, label = sw.mixup(a, (1, 0, 0), b, (0, 1, 0), 0.5)
    assert (img == 150).all()
    assert label == pytest.approx((0.5, 0.5, 0.0))
    img, label, (x0, y0, x1, y1) = sw.cutout(a, (0, 1, 0), 0.5, seed=3)
    assert list(label) == [0.0, 1.0, 0.0]
    assert (img == 128).all(axis=2).sum() == (x1 - x0) * (y1 - y0) <= 128 * 128


def test_ricap_label_is_area_weighted():
    imgs = [np.full((128, 256, 3), 10 * (m + 1), np.uint8) for m in range(4)]
    labels = [(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 0, 0)]
    out, label = sw.ricap(imgs, labels, seed=11)
    assert math.isclose(sum(label), 1.0, abs_tol=1e-9)
    areas = [(out[:, :, 0] == 10 * (m + 1)).sum() / (128 * 256) for m in range(4)]
    assert label[0] == pytest.approx(areas[0] + areas[3])
    assert label[1] == pytest.approx(areas[1])


def test_beta_moments():
    xs = sw.sample_beta(0.2, 100000, seed=1)
    assert abs(xs.mean() - 0.5) <= 0.01
    assert abs(xs.var() - 0.2**2 / (0.4**2 * 1.4)) <= 0.01
    with pytest.raises(sw.InvalidParam):
        sw.sample_beta(0.0, 1)


def test_index_chain_worked_example():
    probs = np.tile([0.0, 0.0, 1.0], (20, 1))
    probs[[1, 8, 14]] = [0.0, 1.0, 0.0]
    m = sw.assemble_matrix(probs)
    assert m.shape == (4, 5)
    mask = sw.binarize(sw.render_heatmap(m), 128)
    ratio, scum, river = sw.compute_ratio(mask)
    assert f"{ratio:.3f}" == "15.000"
    assert scum == 3 * 128 * 256
    assert river == 20 * 128 * 256
    low = sw.apply_probability_floor(np.full((4, 5), 0.005), 0.01)
    assert not low.any()
    res = sw.analyze_probabilities(probs)
    assert res["ratio_percent"] == 15.0


def test_train_predict_and_serialize(tmp_path):
    images, labels = sw.generate_synthetic_dataset(4, seed=2)
    assert len(images) == 12 and images[0].shape == (128, 256, 3)
    fresh = sw.TinyConvNet(seed=1)
    assert fresh.predict(images[0]) == pytest.approx((1 / 3, 1 / 3, 1 / 3))
    net, losses, acc = sw.train(images, labels, epochs=1, seed=5)
    assert len(losses) == 1 and math.isfinite(losses[0])
    assert 0.0 <= acc <= 1.0
    p = net.predict(images[3])
    assert sum(p) == pytest.approx(1.0)
    path = tmp_path / "m.bin"
    net.save(path)
    assert sw.TinyConvNet.load(path) == net
    assert sw.TinyConvNet.from_bytes(net.to_bytes()) == net
    assert net.parameter_count < 100000
    assert sw.soft_cross_entropy((1 / 3, 1 / 3, 1 / 3), (0, 1, 0)) == pytest.approx(math.log(3))


def test_metrics():
    m = sw.compute_metrics([[8, 2, 0], [1, 9, 0], [0, 0, 10]])
    assert m["accuracy"] == pytest.approx(0.9)
    assert m["precision"][1] == pytest.approx(9 / 11)
    assert m["c1_recall"] == pytest.approx(0.9)


def test_cli_exit_codes(tmp_path):
    code, _, err = sw.run_cli(["train", "--manifest", str(tmp_path / "missing.txt")])
    assert code == 2 and "missing.txt" in err
    code, out, _ = sw.run_cli(["synth", "dataset", "--output-dir", str(tmp_path / "d"), "--n-per-class", "2"])
    assert code == 0 and (tmp_path / "d" / "manifest.txt").exists()
