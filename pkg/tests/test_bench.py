"""Benchmark table tests: normalization, limits, CSV round trips."""
import csv

import numpy as np
import pytest

from patchseg.bench import (
    run_alpha_sweep,
    run_benchmark_gd_vs_svd,
    write_benchmark_csv,
    write_sweep_csv,
)
from patchseg.mosaic import MosaicSpec, TextureDescriptor as TD
from patchseg.segment import SegmentationConfig


@pytest.fixture(scope="module")
def small_report():
    rng = np.random.default_rng(0)
    images = [rng.random((16, 16)) for _ in range(2)]
    return run_benchmark_gd_vs_svd(images, m=5, K_range=range(1, 5)), images


def test_each_image_worst_cell_is_exactly_one(small_report):
    report, images = small_report
    for idx in range(len(images)):
        cells = [max(r["err_gd_norm"], r["err_oracle_norm"])
                 for r in report["rows"] if r["image"] == idx]
        assert max(cells) == 1.0


def test_oracle_error_nonincreasing_in_K(small_report):
    report, images = small_report
    for idx in range(len(images)):
        errs = [r["err_oracle"] for r in sorted(
            (r for r in report["rows"] if r["image"] == idx), key=lambda r: r["K"])]
        assert all(b <= a + 1e-12 for a, b in zip(errs, errs[1:]))


def test_gd_tracks_oracle(small_report):
    report, _ = small_report
    assert report["max_gap_norm"] <= 0.05
    for r in report["rows"]:
        assert r["err_gd"] >= r["err_oracle"] - 1e-9  # oracle is the optimum


def test_report_bookkeeping(small_report):
    report, images = small_report
    assert report["m"] == 5
    assert report["K_list"] == [1, 2, 3, 4]
    assert len(report["rows"]) == len(images) * 4
    assert len(report["wall_time_per_image"]) == len(images)
    assert all(t > 0 for t in report["wall_time_per_image"])


def test_full_rank_basis_reconstructs_exactly():
    rng = np.random.default_rng(1)
    img = rng.random((12, 12))
    report = run_benchmark_gd_vs_svd([img], m=3, K_range=[9])
    row = report["rows"][0]
    assert abs(row["err_oracle"]) < 1e-9
    assert abs(row["err_gd"]) < 1e-9


def test_constant_image_single_vector_suffices():
    img = np.full((12, 12), 0.4)
    report = run_benchmark_gd_vs_svd([img], m=3, K_range=[1, 2])
    for r in report["rows"]:
        assert abs(r["err_oracle"]) < 1e-12
        assert abs(r["err_gd"]) < 1e-6  # gd stops at its tolerance, not at 0


def test_zero_image_rejected():
    from patchseg.basis import DegenerateRegionError

    with pytest.raises(DegenerateRegionError):
        run_benchmark_gd_vs_svd([np.zeros((12, 12))], m=3, K_range=[1])


def test_k_range_validation():
    img = np.random.default_rng(2).random((10, 10))
    with pytest.raises(ValueError):
        run_benchmark_gd_vs_svd([img], m=3, K_range=[])
    with pytest.raises(ValueError):
        run_benchmark_gd_vs_svd([img], m=3, K_range=[10])
    with pytest.raises(ValueError):
        run_benchmark_gd_vs_svd([img], m=3, K_range=[0, 1])


def test_benchmark_csv_round_trip(small_report, tmp_path):
    report, _ = small_report
    path = str(tmp_path / "bench.csv")
    write_benchmark_csv(path, report)
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == len(report["rows"])
    assert float(rows[0]["err_gd_norm"]) == pytest.approx(report["rows"][0]["err_gd_norm"])
    assert rows[3]["K"] == str(report["rows"][3]["K"])


# ---- coupling-weight sweep ----

def test_alpha_sweep_structure(tmp_path):
    spec = MosaicSpec(48, TD("flat", {"level": 0.3}), TD("flat", {"level": 0.7}),
                      template="disk")
    cfg = SegmentationConfig(m=7, K=1, nu=1.0, sigma=20.0, max_steps=40)
    report = run_alpha_sweep([spec], alphas=(0.5, 1.0), cfg=cfg)
    assert len(report["rows"]) == 2
    assert set(report["mean_by_alpha"]) == {0.5, 1.0}
    for r in report["rows"]:
        assert 0.0 <= r["error_rate"] <= 0.5
        assert r["steps"] <= 40
    path = str(tmp_path / "sweep.csv")
    write_sweep_csv(path, report)
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2
    assert float(rows[0]["alpha"]) == 0.5


def test_alpha_sweep_rejects_bad_alpha():
    spec = MosaicSpec(48, TD("flat", {"level": 0.3}), TD("flat", {"level": 0.7}))
    with pytest.raises(ValueError):
        run_alpha_sweep([spec], alphas=(1.5,))
