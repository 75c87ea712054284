import os

import numpy as np
import pytest

from malalab.parallel import batch_sizes, map_batches
from malalab.utils.moments import estimate_power_mean, power_mean
from malalab.utils.streams import SEED_MAX, child_seed, stream
from malalab.utils.trajectory_io import (
    csv_columns,
    read_binary,
    trajectory_rows,
    write_binary,
    write_csv,
)


def _draw(index: int, size: int) -> np.ndarray:
    return stream(17, "batch", index).standard_normal(size)


# --- streams ------------------------------------------------------------------


def test_stream_is_keyed():
    a = stream(42, "chain", 0).random(5)
    b = stream(42, "chain", 0).random(5)
    c = stream(42, "chain", 1).random(5)
    d = stream(42, "replicas", 0).random(5)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)


def test_stream_accepts_full_u64_range():
    stream(0).random()
    stream(SEED_MAX).random()
    with pytest.raises(ValueError):
        stream(SEED_MAX + 1)
    with pytest.raises(ValueError):
        stream(1, -3)


def test_child_seed_is_stable():
    assert child_seed(7, "dim", 4) == child_seed(7, "dim", 4)
    assert child_seed(7, "dim", 4) != child_seed(7, "dim", 8)
    assert 0 <= child_seed(SEED_MAX, "dim", 32) <= SEED_MAX


# --- power means --------------------------------------------------------------


def test_power_mean_values():
    assert power_mean(np.array([1.0, 2.0]), 2) == pytest.approx(np.sqrt(2.5))
    assert power_mean(np.array([-2.0, -2.0]), 3) == pytest.approx(-2.0)
    assert power_mean(np.zeros(4), 2) == 0.0


def test_power_mean_large_values_stay_finite():
    values = np.full(1000, 1e3)
    values[::2] = 2e3
    result = power_mean(values, 8)
    assert np.isfinite(result)
    assert 1e3 < result < 2e3


def test_power_mean_along_axis():
    values = np.array([[1.0, 1.0], [3.0, 3.0]])
    np.testing.assert_allclose(power_mean(values, 4, axis=-1), [1.0, 3.0])


def test_bootstrap_interval_brackets_estimate():
    x = stream(3, "bootstrap-test").standard_normal(5000) ** 2
    est = estimate_power_mean(x, 1, stream(3, "bootstrap"), n_resamples=200)
    assert est.ci_lo <= est.estimate <= est.ci_hi
    assert est.n_samples == 5000
    assert est.estimate == pytest.approx(1.0, abs=0.1)


def test_bootstrap_degenerate_sample():
    est = estimate_power_mean(np.full(100, 2.0), 2, stream(0))
    assert (est.estimate, est.ci_lo, est.ci_hi) == (2.0, 2.0, 2.0)


# --- batches ------------------------------------------------------------------


def test_batch_sizes_cover_total():
    assert batch_sizes(0) == []
    assert batch_sizes(120_000) == [(0, 50_000), (1, 50_000), (2, 20_000)]
    assert sum(size for _, size in batch_sizes(12_345, 1000)) == 12_345


def test_map_batches_ignores_worker_count():
    batches = batch_sizes(2500, 1000)
    serial = np.concatenate(map_batches(_draw, batches, workers=1))
    parallel = np.concatenate(map_batches(_draw, batches, workers=2))
    np.testing.assert_array_equal(serial, parallel)


# --- trajectory files ---------------------------------------------------------


def test_csv_layout(tmp_path):
    positions = np.array([[0.0, 1.0], [0.5, 1.5]])
    path = write_csv(tmp_path / "t.csv", np.array([0, 1]), positions, np.array([False, True]))
    lines = path.read_text().splitlines()
    assert lines[0] == "step,q_1,q_2,accepted"
    assert lines[1] == "0,0.0,1.0,0"
    assert lines[2] == "1,0.5,1.5,1"
    assert csv_columns(3) == ["step", "q_1", "q_2", "q_3", "accepted"]
    assert list(trajectory_rows(np.array([4]), np.array([[2.0]]), np.array([1]))) == [(4, 2.0, 1)]


def test_binary_file(tmp_path):
    positions = stream(1).standard_normal((7, 3))
    path = write_binary(tmp_path / "t.bin", positions)
    assert os.path.getsize(path) == 17 + 7 * 3 * 8
    assert path.read_bytes()[:5] == b"MALA1"
    np.testing.assert_array_equal(read_binary(path), positions)


def test_binary_file_rejects_corruption(tmp_path):
    path = write_binary(tmp_path / "t.bin", np.ones((2, 2)))
    raw = path.read_bytes()
    (tmp_path / "bad_magic.bin").write_bytes(b"XXXXX" + raw[5:])
    (tmp_path / "short.bin").write_bytes(raw[:-8])
    (tmp_path / "tiny.bin").write_bytes(raw[:4])
    for name in ("bad_magic.bin", "short.bin", "tiny.bin"):
        with pytest.raises(ValueError):
            read_binary(tmp_path / name)
