"""Image I/O, synthetic scenes, noise and permutation-invariant scoring."""

import numpy as np
import pytest

from peanoseg.imaging import (BadFormat, BadShape, LabelImage, ObservedImage,
                              TooManyClasses, TooManyLevels,
                              blocks_and_stripes, count_levels, error_rate,
                              load_grayscale, load_labels, load_observed,
                              random_walks, rings, save_observed,
                              save_segmentation, stripes, synth_noise)
from peanoseg.scan import GridShape


def write_p2(path, grid, maxval=255):
    h, w = grid.shape
    body = "\n".join(" ".join(str(v) for v in row) for row in grid)
    path.write_text(f"P2\n# test image\n{w} {h}\n{maxval}\n{body}\n")


def label_image(grid, n_classes):
    grid = np.asarray(grid, dtype=np.int64)
    shape = GridShape.from_order(grid.shape[0].bit_length() - 1)
    return LabelImage(shape, grid.ravel(), n_classes)


# ---------------------------------------------------------------------------
# I/O

def test_load_p2_identity(tmp_path):
    grid = np.arange(16).reshape(4, 4)
    write_p2(tmp_path / "a.pgm", grid)
    obs = load_grayscale(tmp_path / "a.pgm")
    assert obs.shape.side == 4
    np.testing.assert_array_equal(obs.values, np.arange(16, dtype=float))


def test_load_p5_round_trip(tmp_path):
    labels = label_image([[1, 2, 2, 1], [1, 1, 2, 2], [2, 1, 1, 1], [2, 2, 1, 2]], 2)
    save_segmentation(labels, tmp_path / "s.pgm")
    back = load_labels(tmp_path / "s.pgm", 2)
    np.testing.assert_array_equal(back.labels, labels.labels)
    raw = load_grayscale(tmp_path / "s.pgm")
    assert set(np.unique(raw.values)) == {0.0, 255.0}


def test_save_three_class_intensities(tmp_path):
    labels = label_image([[1, 2], [3, 1]], 3)
    save_segmentation(labels, tmp_path / "s.pgm")
    raw = load_grayscale(tmp_path / "s.pgm")
    assert set(np.unique(raw.values)) == {0.0, 128.0, 255.0}


def test_single_class_renders_black(tmp_path):
    labels = label_image([[1, 1], [1, 1]], 1)
    save_segmentation(labels, tmp_path / "s.pgm")
    raw = load_grayscale(tmp_path / "s.pgm")
    assert set(np.unique(raw.values)) == {0.0}


def test_bad_magic_and_missing_file(tmp_path):
    (tmp_path / "x.pgm").write_text("P6\n2 2\n255\nbinary")
    with pytest.raises(BadFormat):
        load_grayscale(tmp_path / "x.pgm")
    with pytest.raises(BadFormat):
        load_grayscale(tmp_path / "nope.pgm")


def test_truncated_and_out_of_range(tmp_path):
    (tmp_path / "t.pgm").write_text("P2\n2 2\n255\n1 2 3\n")
    with pytest.raises(BadFormat):
        load_grayscale(tmp_path / "t.pgm")
    (tmp_path / "r.pgm").write_text("P2\n2 2\n10\n1 2 3 11\n")
    with pytest.raises(BadFormat):
        load_grayscale(tmp_path / "r.pgm")


def test_bad_shape_without_crop(tmp_path):
    write_p2(tmp_path / "a.pgm", np.zeros((3, 3), dtype=int))
    with pytest.raises(BadShape):
        load_grayscale(tmp_path / "a.pgm")
    write_p2(tmp_path / "b.pgm", np.zeros((4, 8), dtype=int))
    with pytest.raises(BadShape):
        load_grayscale(tmp_path / "b.pgm")


def test_center_crop_offsets(tmp_path):
    # a 300x300 gradient: the 256 crop starts at offset (22, 22)
    grid = (np.arange(300)[:, None] + np.arange(300)[None, :]) % 256
    write_p2(tmp_path / "big.pgm", grid)
    obs = load_grayscale(tmp_path / "big.pgm", crop=True)
    assert obs.shape.side == 256
    np.testing.assert_array_equal(obs.grid(), grid[22:278, 22:278])


def test_load_labels_mappings(tmp_path):
    write_p2(tmp_path / "b.pgm", np.array([[0, 255], [255, 0]]))
    img = load_labels(tmp_path / "b.pgm", 2)
    np.testing.assert_array_equal(img.labels, [1, 2, 2, 1])
    write_p2(tmp_path / "c.pgm", np.zeros((2, 2), dtype=int))
    img = load_labels(tmp_path / "c.pgm", 2)
    np.testing.assert_array_equal(img.labels, [1, 1, 1, 1])
    write_p2(tmp_path / "d.pgm", np.array([[0, 128], [255, 0]]))
    with pytest.raises(TooManyLevels):
        load_labels(tmp_path / "d.pgm", 2)
    assert count_levels(tmp_path / "d.pgm") == 3


def test_observed_npy_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    obs = ObservedImage(GridShape.from_order(3), rng.normal(0, 1, 64))
    save_observed(obs, tmp_path / "y.npy")
    back = load_observed(tmp_path / "y.npy")
    np.testing.assert_array_equal(back.values, obs.values)
    # the PGM route quantizes but keeps the shape
    save_observed(obs, tmp_path / "y.pgm")
    back = load_observed(tmp_path / "y.pgm")
    assert back.shape.side == 8


# ---------------------------------------------------------------------------
# noise and scoring

def test_save_to_missing_directory_raises_oserror(tmp_path):
    labels = label_image([[1, 2], [2, 1]], 2)
    with pytest.raises(OSError):
        save_segmentation(labels, tmp_path / "no" / "dir" / "s.pgm")


def test_synth_noise_deterministic_and_floored():
    truth = label_image(np.ones((4, 4), dtype=int), 1)
    a = synth_noise(truth, [5.0], [0.0], seed=3)
    b = synth_noise(truth, [5.0], [0.0], seed=3)
    np.testing.assert_array_equal(a.values, b.values)
    assert np.all(np.abs(a.values - 5.0) < 1e-2)


def test_synth_noise_moments():
    grid = np.ones((128, 128), dtype=int)
    grid[:, 64:] = 2
    truth = label_image(grid, 2)
    obs = synth_noise(truth, [0.0, 1.0], [1.0, 1.0], seed=11)
    for cls, mean in ((1, 0.0), (2, 1.0)):
        vals = obs.values[truth.labels == cls]
        n = vals.size
        assert n >= 8000
        assert abs(vals.mean() - mean) < 3.0 / np.sqrt(n)
        assert abs(vals.var() - 1.0) < 3.0 * np.sqrt(2.0 / n)


def test_error_rate_goldens():
    truth = label_image([[1, 1, 2, 2]] * 4, 2)
    assert error_rate(truth, truth) == 0.0
    swapped = LabelImage(truth.shape, 3 - truth.labels, 2)
    assert error_rate(truth, swapped) == 0.0
    flipped = truth.labels.copy()
    flipped[:3] = 3 - flipped[:3]
    pred = LabelImage(truth.shape, flipped, 2)
    assert error_rate(truth, pred) == pytest.approx(3 / 16)


def test_error_rate_bounds_and_errors():
    truth = label_image([[1, 2], [2, 1]], 2)
    other = label_image([[1, 1], [1, 1]], 2)
    e = error_rate(truth, other)
    assert 0.0 <= e <= 1.0
    with pytest.raises(TooManyClasses):
        error_rate(label_image([[1, 2], [2, 1]], 9),
                   label_image([[1, 2], [2, 1]], 9))
    with pytest.raises(ValueError):
        error_rate(truth, label_image(np.ones((4, 4), dtype=int), 2))


# ---------------------------------------------------------------------------
# synthetic scenes

def test_stripes_layout():
    img = stripes(3, width=2)
    grid = img.grid()
    assert np.all(grid[0] == 1) and np.all(grid[1] == 1)
    assert np.all(grid[2] == 2) and np.all(grid[3] == 2)
    assert set(np.unique(grid)) == {1, 2}


def test_rings_layout():
    img = rings(4, width=3)
    grid = img.grid()
    assert set(np.unique(grid)) == {1, 2}
    # center cell sits in ring 0, a cell 3.5 away in ring 1
    assert grid[8, 8] == 1
    assert grid[4, 8] == 2


def test_blocks_and_stripes_mixes_scales():
    img = blocks_and_stripes(5, stripe_width=2)
    grid = img.grid()
    assert np.all(grid[:16, :16] == 1)
    assert np.all(grid[:16, 16:] == 2)
    assert np.array_equal(np.unique(grid[16:18]), [1])
    assert np.array_equal(np.unique(grid[18:20]), [2])


def test_random_walks_deterministic():
    a = random_walks(5, seed=9)
    b = random_walks(5, seed=9)
    np.testing.assert_array_equal(a.labels, b.labels)
    assert set(np.unique(a.labels)) == {1, 2}
