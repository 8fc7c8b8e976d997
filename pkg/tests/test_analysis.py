"""Spectral statistics, distance/noise scores, and report arithmetic."""

import numpy as np
import pytest

from ljlayer.analysis import (
    ANISOTROPY_FLOOR_DB,
    Scores,
    SpectralStats,
    band_mean,
    distance_score,
    distance_score_filtered,
    increment_report,
    peak_radius,
    periodogram,
    radial_stats,
    write_periodogram_pgm,
    write_profile_csv,
)
from ljlayer.metrics import PERIODIC_UNIT


def radial_stats_reference(grid):
    """Loop-based oracle for the annulus reduction."""
    fmax = (grid.shape[0] - 1) // 2
    bins = {r: [] for r in range(1, fmax + 1)}
    for i in range(grid.shape[0]):
        for j in range(grid.shape[1]):
            r = int(round(np.hypot(i - fmax, j - fmax)))
            if 1 <= r <= fmax:
                bins[r].append(grid[i, j])
    power = np.array([np.mean(bins[r]) for r in range(1, fmax + 1)])
    var = np.array([np.mean(np.square(bins[r])) - np.mean(bins[r]) ** 2
                    for r in range(1, fmax + 1)])
    return power, np.maximum(var, 0.0)


# -------------------------------------------------------------- periodogram

def test_single_point_spectrum_is_flat_one():
    grid = periodogram(np.array([[0.37, 0.81]]), fmax=4)
    np.testing.assert_allclose(grid, 1.0, atol=1e-12)


def test_dc_bin_equals_n():
    cloud = np.random.default_rng(0).random((57, 2))
    grid = periodogram(cloud, fmax=3)
    assert grid[3, 3] == pytest.approx(57.0, rel=1e-12)


def test_lattice_spectrum_peaks_at_multiples():
    m = 4
    ij = np.mgrid[0:m, 0:m].reshape(2, -1).T / m
    grid = periodogram(ij, fmax=2 * m)
    f = np.arange(-2 * m, 2 * m + 1)
    on_lattice = (f[:, None] % m == 0) & (f[None, :] % m == 0)
    assert np.allclose(grid[on_lattice], m * m, atol=1e-8)
    assert np.abs(grid[~on_lattice]).max() < 1e-8


def test_periodogram_translation_and_wrap_invariance():
    cloud = np.random.default_rng(1).random((40, 2))
    base = periodogram(cloud, fmax=6)
    shifted = periodogram(cloud + 0.25, fmax=6)
    wrapped = periodogram(np.mod(cloud + 3.0, 1.0), fmax=6)
    np.testing.assert_allclose(shifted, base, atol=1e-8)
    np.testing.assert_allclose(wrapped, base, atol=1e-8)


def test_periodogram_permutation_invariance():
    rng = np.random.default_rng(2)
    cloud = rng.random((30, 2))
    perm = rng.permutation(30)
    np.testing.assert_allclose(
        periodogram(cloud[perm], fmax=5), periodogram(cloud, fmax=5), atol=1e-9
    )


def test_periodogram_validation():
    with pytest.raises(ValueError):
        periodogram(np.zeros((0, 2)))
    with pytest.raises(ValueError):
        periodogram(np.zeros((4, 3)))
    with pytest.raises(ValueError):
        periodogram(np.array([[0.1, np.nan]]))
    with pytest.raises(ValueError):
        periodogram(np.zeros((4, 2)), fmax=0)


# ------------------------------------------------------------- radial stats

def test_radial_reduction_matches_loop_oracle():
    rng = np.random.default_rng(3)
    grid = rng.random((13, 13)) * 10  # fmax = 6
    stats = radial_stats([grid])
    power_ref, var_ref = radial_stats_reference(grid)
    np.testing.assert_allclose(stats.radial_power, power_ref, rtol=1e-12)
    expected = np.where(power_ref > 0, 10 * np.log10(var_ref / power_ref**2), -np.inf)
    np.testing.assert_allclose(stats.anisotropy_db,
                               np.maximum(expected, ANISOTROPY_FLOOR_DB), rtol=1e-9)
    np.testing.assert_array_equal(stats.radii, np.arange(1, 7))
    assert stats.runs == 1


def test_radial_stats_averages_runs():
    rng = np.random.default_rng(4)
    grids = [rng.random((9, 9)) for _ in range(3)]
    stats = radial_stats(grids)
    mean = radial_stats([np.mean(grids, axis=0)])
    np.testing.assert_allclose(stats.grid, np.mean(grids, axis=0), rtol=1e-12)
    np.testing.assert_allclose(stats.radial_power, mean.radial_power, rtol=1e-12)
    assert stats.runs == 3


def test_constant_grid_hits_anisotropy_floor():
    stats = radial_stats([np.full((11, 11), 2.5)])
    np.testing.assert_allclose(stats.radial_power, 2.5)
    np.testing.assert_array_equal(stats.anisotropy_db,
                                  np.full(5, ANISOTROPY_FLOOR_DB))
    assert peak_radius(stats) == 1  # all equal: tie goes to the lowest radius


def test_radial_stats_validation():
    with pytest.raises(ValueError):
        radial_stats([])
    with pytest.raises(ValueError):
        radial_stats([np.zeros((4, 4))])  # even size has no center bin
    with pytest.raises(ValueError):
        radial_stats([np.zeros((5, 7))])
    with pytest.raises(ValueError):
        radial_stats([np.zeros((5, 5)), np.zeros((7, 7))])


def test_peak_radius_and_band_mean():
    grid = np.zeros((11, 11))
    grid[5, 8] = 60.0  # a single hot bin at radius 3
    stats = radial_stats([grid])
    assert peak_radius(stats) == 3
    assert band_mean(stats, 3, 3) == pytest.approx(stats.radial_power[2])
    assert band_mean(stats, 1, 2) == pytest.approx(stats.radial_power[:2].mean())
    with pytest.raises(ValueError):
        band_mean(stats, 0.2, 0.4)  # no annulus in that range


def test_white_noise_radial_power_is_flat_near_one():
    grids = [periodogram(np.random.default_rng(s).random((256, 2)), fmax=16)
             for s in range(10)]
    stats = radial_stats(grids)
    assert band_mean(stats, 3, 16) == pytest.approx(1.0, abs=0.15)


# ------------------------------------------------------------------- scores

def test_distance_score_two_points():
    assert distance_score(np.array([[0.0, 0.0], [0.25, 0.0]])) == 0.25


def test_distance_score_periodic():
    cloud = np.array([[0.05, 0.5], [0.95, 0.5]])
    assert distance_score(cloud, PERIODIC_UNIT) == pytest.approx(0.1)
    assert distance_score(cloud) == pytest.approx(0.9)


def test_distance_score_is_mean_over_points():
    cloud = np.array([[0.0, 0.0], [1.0, 0.0], [1.2, 0.0]])
    # nearest distances: 1.0, 0.2, 0.2
    assert distance_score(cloud) == pytest.approx((1.0 + 0.2 + 0.2) / 3)
    with pytest.raises(ValueError):
        distance_score(np.array([[0.0, 0.0]]))


def test_filtered_score_skips_gated_points():
    cloud = np.array([[0.0, 0, 0], [0.1, 0, 0], [5.0, 0, 0], [5.1, 0, 0]])
    nrm = np.array([[0.0, 0, 1], [0.0, 0, 1], [0.0, 0, -1], [0.0, 0, -1]])
    # both clusters pair internally; the opposite-normal cluster never mixes
    assert distance_score_filtered(cloud, nrm) == pytest.approx(0.1)
    lonely = np.array([[0.0, 0, 1], [0.0, 0, -1], [0.0, 0, 1], [0.0, 0, -1]])
    got = distance_score_filtered(cloud, lonely)  # pairs are now (0,2), (1,3)
    assert got == pytest.approx(5.0)


def test_filtered_score_all_gated_raises():
    cloud = np.array([[0.0, 0, 0], [1.0, 0, 0]])
    nrm = np.array([[0.0, 0, 1.0], [0.0, 0, -1.0]])
    with pytest.raises(ValueError):
        distance_score_filtered(cloud, nrm)


# ------------------------------------------------------------------ reports

def test_increment_arithmetic():
    rep = increment_report(Scores(distance=0.02, noise=0.010),
                           Scores(distance=0.04, noise=0.011))
    assert rep.distance_increment == pytest.approx(1.0)     # +100%
    assert rep.noise_increment == pytest.approx(0.1)        # +10%
    assert rep.ratio == pytest.approx(0.1)
    assert rep.distance_score_base == 0.02
    assert rep.noise_score_ljl == 0.011


def test_increment_ratio_none_without_distance_gain():
    rep = increment_report(Scores(0.02, 0.01), Scores(0.015, 0.02))
    assert rep.distance_increment == pytest.approx(-0.25)
    assert rep.ratio is None
    rep = increment_report(Scores(0.02, 0.01), Scores(0.02, 0.02))
    assert rep.ratio is None  # zero increment has no defined tradeoff


def test_increment_zero_baseline_rejected():
    with pytest.raises(ValueError):
        increment_report(Scores(0.0, 0.01), Scores(0.1, 0.01))
    with pytest.raises(ValueError):
        increment_report(Scores(0.1, 0.0), Scores(0.1, 0.01))


# ------------------------------------------------------------------ writers

def test_profile_csv_format(tmp_path):
    stats = radial_stats([periodogram(np.random.default_rng(5).random((20, 2)), fmax=4)])
    path = tmp_path / "profile.csv"
    write_profile_csv(stats, path)
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "radius,radial_power,anisotropy_db"
    assert len(lines) == 5  # header + one row per annulus
    r, p, a = lines[1].split(",")
    assert int(r) == 1
    assert float(p) == pytest.approx(stats.radial_power[0], rel=1e-8)
    assert float(a) == pytest.approx(stats.anisotropy_db[0], rel=1e-8)


def test_pgm_format(tmp_path):
    grid = periodogram(np.random.default_rng(6).random((30, 2)), fmax=3)
    stats = radial_stats([grid])
    path = tmp_path / "spec.pgm"
    write_periodogram_pgm(stats, path)
    tokens = path.read_text().split()
    assert tokens[0] == "P2"
    w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    assert (w, h, maxval) == (7, 7, 255)
    pix = np.array([int(t) for t in tokens[4:]]).reshape(h, w)
    assert pix.min() >= 0 and pix.max() == 255
    assert pix[3, 3] == 255  # the DC bin dominates every other frequency


def test_pgm_accepts_raw_grid(tmp_path):
    path = tmp_path / "raw.pgm"
    write_periodogram_pgm(np.zeros((3, 3)), path)
    tokens = path.read_text().split()
    assert tokens[:4] == ["P2", "3", "3", "255"]
    assert all(t == "0" for t in tokens[4:])


def test_spectral_stats_arrays_are_frozen():
    stats = radial_stats([np.full((5, 5), 1.0)])
    assert isinstance(stats, SpectralStats)
    with pytest.raises(ValueError):
        stats.radial_power[0] = 9.0
    with pytest.raises(ValueError):
        stats.grid[0, 0] = 9.0
