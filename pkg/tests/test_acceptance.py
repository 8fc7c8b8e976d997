"""End-to-end guarantees, one test per shipped behavior.

Each test prints a single pass line with its measured runtime and asserts an
upper bound on it, so a `pytest -v tests/test_acceptance.py` run documents
every guarantee and its cost in one screen.
"""

import json
import subprocess
import sys
import time

import numpy as np
import pytest

from ljlayer.analysis import (band_mean, distance_score, peak_radius,
                              periodogram, radial_stats)
from ljlayer.core import (LjParams, Schedule, dt_exponential, lj_force,
                          lj_potential, lj_step)
from ljlayer.geometry import MeshProjector, icosphere, normalize_mesh, save_obj
from ljlayer.metrics import EUCLIDEAN, PERIODIC_UNIT, get_metric
from ljlayer.neighbors import build_index, k_nearest_all, nearest_all
from ljlayer.pipelines import (Boundary, EmbedConfig, bluenoise_2d,
                               embed_compare, redistribute_on_mesh,
                               run_embedded, run_sweep, sigma_prime)

EQ = 2.0 ** (1.0 / 6.0)


def finish(n, t0, budget, detail):
    elapsed = time.perf_counter() - t0
    print(f"criterion {n}: PASS ({detail}) in {elapsed:.2f}s, budget {budget:.0f}s")
    assert elapsed < budget


# 1 -------------------------------------------------------------------------

def test_criterion_1_potential_force_analytics():
    t0 = time.perf_counter()
    p = LjParams(epsilon=2.0, sigma=1.0)
    assert abs(lj_potential(1.0, p)) <= 1e-9
    assert abs(lj_potential(EQ, p) - (-p.epsilon)) <= 1e-9
    assert abs(lj_force(EQ, p)) <= 1e-9
    r = np.linspace(0.5, 20.0, 4001)
    h = 1e-6 * r
    fd = -(lj_potential(r + h, p) - lj_potential(r - h, p)) / (2.0 * h)
    force = lj_force(r, p)
    assert np.all(np.isclose(force, fd, rtol=1e-4, atol=1e-8))
    finish(1, t0, 1.0, "analytic points exact, finite difference within 1e-4")


# 2 -------------------------------------------------------------------------

def test_criterion_2_two_particle_equilibrium():
    t0 = time.perf_counter()
    # sigma' scale: the decaying schedule's total travel has to cover the
    # 3-sigma basin, which caps sigma well below 1 (see notes on convergence)
    sigma = 0.3
    params = LjParams(epsilon=2.0, sigma=sigma)
    schedule = Schedule(alpha=0.5, beta=0.01)
    rng = np.random.default_rng(42)
    n_pairs = 50
    sep0 = rng.uniform(0.9 * sigma, 3.0 * sigma, n_pairs)
    # batch the independent pairs as one cloud with a fixed partner table
    cloud = np.zeros((2 * n_pairs, 2))
    cloud[0::2, 0] = 100.0 * np.arange(n_pairs)
    cloud[1::2, 0] = 100.0 * np.arange(n_pairs) + sep0
    pairs = np.empty((2 * n_pairs, 1), dtype=int)
    pairs[0::2, 0] = np.arange(n_pairs) * 2 + 1
    pairs[1::2, 0] = np.arange(n_pairs) * 2
    for t in range(2000):
        cloud = lj_step(cloud, pairs, dt_exponential(t, schedule), params, EUCLIDEAN)
    sep = np.abs(cloud[1::2, 0] - cloud[0::2, 0])
    rel = np.abs(sep - EQ * sigma) / (EQ * sigma)
    assert rel.max() <= 0.01
    finish(2, t0, 5.0, f"50/50 separations within 1% (worst {rel.max():.2e})")


# 3 -------------------------------------------------------------------------

def brute_neighbors(cloud, k, metric):
    """Full-matrix reference: sort by (distance, index), self excluded."""
    n = len(cloud)
    d2 = metric.distance2(cloud[:, None, :], cloud[None, :, :])
    np.fill_diagonal(d2, np.inf)
    ids = np.broadcast_to(np.arange(n), (n, n))
    return np.lexsort((ids, d2), axis=1)[:, :k]


def test_criterion_3_nearest_neighbor_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    checked = 0
    for case in range(100):
        if case < 60:
            n = int(rng.integers(2, 41))
        elif case < 90:
            n = int(rng.integers(41, 401))
        else:
            n = 2048 if case >= 98 else int(rng.integers(401, 2049))
        metric_name = "periodic" if case % 2 else "euclidean"
        dim = 2 if metric_name == "periodic" else int(rng.integers(2, 4))
        cloud = rng.random((n, dim))
        if case % 4 == 0:
            cloud = np.round(cloud * 6) / 6  # coarse grid forces exact ties
        metric = get_metric(metric_name)
        index = build_index(cloud, metric)
        k = int(rng.integers(1, min(8, n - 1) + 1))
        want = brute_neighbors(cloud, k, metric)
        assert np.array_equal(k_nearest_all(index, k), want)
        assert np.array_equal(nearest_all(index), want[:, 0])
        checked += 1
    assert checked == 100
    finish(3, t0, 30.0, "100 clouds match the brute-force table exactly")


# 4 -------------------------------------------------------------------------

def test_criterion_4_bluenoise_spectrum():
    t0 = time.perf_counter()
    n = 1024
    half_spacing = 0.5 * sigma_prime(n)
    grids = []
    min_dists = []
    for seed in range(10):
        cloud, report = bluenoise_2d(n, tol=0.0, max_iter=1000, seed=seed)
        assert report.iterations == 1000
        d = PERIODIC_UNIT.distance(cloud[:, None, :], cloud[None, :, :])
        np.fill_diagonal(d, np.inf)
        min_dists.append(float(d.min()))
        grids.append(periodogram(cloud, fmax=128))
    assert min(min_dists) >= half_spacing

    stats = radial_stats(grids)
    r_peak = peak_radius(stats)
    low_hi = int(np.floor(0.5 * r_peak))
    low = band_mean(stats, 1, low_hi)
    plateau = band_mean(stats, 1.5 * r_peak, 2.5 * r_peak)
    assert low <= 0.25 * plateau

    # white noise through the same bands shows no suppression
    control = [periodogram(np.random.default_rng(100 + s).random((n, 2)), fmax=128)
               for s in range(10)]
    cstats = radial_stats(control)
    clow = band_mean(cstats, 1, low_hi)
    cplateau = band_mean(cstats, 1.5 * r_peak, 2.5 * r_peak)
    assert clow >= 0.8 * cplateau
    finish(4, t0, 120.0,
           f"min dist {min(min_dists):.4f} >= {half_spacing:.4f}, "
           f"low/plateau {low / plateau:.3f} vs control {clow / cplateau:.3f}")


# 5 -------------------------------------------------------------------------

def test_criterion_5_boundary_containment_and_spill():
    t0 = time.perf_counter()
    n = 256
    params = LjParams(epsilon=2.0, sigma=10.0 * sigma_prime(n))
    fixed, _ = bluenoise_2d(n, boundary=Boundary.fixed(), params=params,
                            tol=0.0, max_iter=300, seed=0)
    assert fixed.min() >= 0.0 and fixed.max() <= 1.0
    free, _ = bluenoise_2d(n, boundary=Boundary.none(), params=params,
                           tol=0.0, max_iter=300, seed=0)
    outside = ~((free >= 0.0) & (free <= 1.0)).all(axis=1)
    assert outside.mean() >= 0.10
    finish(5, t0, 60.0,
           f"fixed contained, free spilled {100 * outside.mean():.0f}% of points")


# 6 -------------------------------------------------------------------------

def test_criterion_6_mesh_redistribution():
    t0 = time.perf_counter()
    mesh = normalize_mesh(icosphere(3))
    projector = MeshProjector(mesh)
    x0 = np.random.default_rng(0).uniform(-1.0, 1.0, (3000, 3))
    direct = projector.project(x0)[0]
    cloud, _ = redistribute_on_mesh(x0, mesh, max_iter=200, seed=0)
    noise = float(projector.project(cloud)[2].mean())
    gain = distance_score(cloud) / distance_score(direct)
    assert noise <= 1e-9
    assert gain >= 1.5

    # antipodal landing faces fail the pi/4 normal gate, so nothing may move
    poles0 = np.array([[0.0, 0.0, 2.0], [0.0, 0.0, -2.0]])
    projected = projector.project(poles0)[0]
    poles, report = redistribute_on_mesh(poles0, mesh, max_iter=50, seed=0)
    assert np.array_equal(poles, projected)
    assert report.final_max_disp == 0.0
    finish(6, t0, 120.0, f"noise {noise:.1e}, spread gain {gain:.2f}x, gate holds")


# 7 -------------------------------------------------------------------------

def test_criterion_7_embedding_harness():
    t0 = time.perf_counter()
    d_incs = []
    n_incs = []
    for seed in range(5):
        report, _, _ = embed_compare(EmbedConfig(seed=seed))
        d_incs.append(report.distance_increment)
        n_incs.append(report.noise_increment)
    assert np.mean(d_incs) >= 0.20
    assert np.mean(n_incs) <= 0.25

    config = EmbedConfig(alpha=0.0, seed=3)
    with_window = run_embedded(config, embedded=True)[0]
    refiner_only = run_embedded(config, embedded=False)[0]
    assert np.array_equal(with_window, refiner_only)
    finish(7, t0, 120.0,
           f"mean distance {100 * np.mean(d_incs):+.1f}%, "
           f"mean noise {100 * np.mean(n_incs):+.1f}%, alpha=0 bit-equal")


# 8 -------------------------------------------------------------------------

def mean_by_value(rows, key):
    values = sorted({row["value"] for row in rows})
    return values, [float(np.mean([row[key] for row in rows if row["value"] == v]))
                    for v in values]


def test_criterion_8_sweep_shapes():
    t0 = time.perf_counter()
    rows = run_sweep("alpha_denoise", [0.3, 1.2, 2.4, 3.0, 3.6, 4.2, 4.8], range(5))
    assert all(np.isfinite(row["ratio"]) for row in rows)
    alphas, ratio_means = mean_by_value(rows, "ratio")
    best = int(np.argmin(ratio_means))
    assert 0 < best < len(alphas) - 1  # strictly inside the grid

    rows = run_sweep("ss", [60, 70, 80, 90, 100], range(5))
    starts, d_means = mean_by_value(rows, "distance_increment")
    assert all(a > b for a, b in zip(d_means, d_means[1:]))
    finish(8, t0, 300.0,
           f"ratio minimized at alpha={alphas[best]}, "
           f"start-step gain falls {d_means[0]:.3f} -> {d_means[-1]:.3f}")


# 9 -------------------------------------------------------------------------

def cli(args, cwd):
    proc = subprocess.run([sys.executable, "-m", "ljlayer.cli", *args],
                          capture_output=True, cwd=cwd)
    assert proc.returncode == 0, proc.stderr.decode()
    return proc.stdout


def test_criterion_9_cli_determinism(tmp_path):
    t0 = time.perf_counter()
    save_obj(icosphere(1), tmp_path / "sphere.obj")
    for seed in (0, 1):
        np.savetxt(tmp_path / f"c{seed}.xyz",
                   np.random.default_rng(seed).random((64, 2)))
    np.savetxt(tmp_path / "c3d.xyz", np.random.default_rng(2).random((64, 3)))
    runs = {
        "bluenoise": (["bluenoise", "--n", "64", "--seed", "3", "--max-iter", "40",
                       "--out", "pts.xyz", "--report", "pts.json"],
                      ["pts.xyz", "pts.json"]),
        "redistribute": (["redistribute", "--mesh", "sphere.obj", "--n", "100",
                          "--seed", "1", "--max-iter", "50", "--out", "red.xyz"],
                         ["red.xyz"]),
        "embed": (["embed", "--n", "60", "--t", "50", "--ss", "30", "--tprime", "47",
                   "--seed", "2", "--compare", "--out", "emb.xyz",
                   "--report", "emb.json"],
                  ["emb.xyz", "emb.json"]),
        "analyze": (["analyze", "--cloud", "c0.xyz", "--cloud", "c1.xyz",
                     "--fmax", "8", "--csv", "prof.csv", "--pgm", "spec.pgm"],
                    ["prof.csv", "spec.pgm"]),
        "score": (["score", "--cloud", "c3d.xyz", "--mesh", "sphere.obj"], []),
        "sweep": (["sweep", "--axis", "alpha", "--values", "0.0,2.5", "--seeds", "2",
                   "--n", "20", "--t", "20", "--out", "sweep.csv"],
                  ["sweep.csv"]),
    }
    for name, (args, outputs) in runs.items():
        first_stdout = cli(args, tmp_path)
        first_files = [(tmp_path / f).read_bytes() for f in outputs]
        second_stdout = cli(args, tmp_path)
        assert second_stdout == first_stdout, name
        for fname, before in zip(outputs, first_files):
            assert (tmp_path / fname).read_bytes() == before, f"{name}:{fname}"
        summary = json.loads(first_stdout)
        assert summary["command"] == name and "seed" in summary
    finish(9, t0, 60.0, "6 commands rerun byte-identical")
