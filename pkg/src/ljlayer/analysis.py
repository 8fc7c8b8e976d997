"""Evaluation tools: distance scores, spectral statistics, increment reports.

The spectral side works on periodograms sampled on the integer frequency
lattice [-F, F]^2 of the unit torus.  Radial profiles use annuli of width one
(rounded integer radius); the DC bin is kept in the grid but excluded from
every profile.  Anisotropy is reported in dB and floored at -100 so that
zero-variance annuli stay finite in serialized output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .metrics import EUCLIDEAN, get_metric
from .neighbors import build_index, nearest_all, nearest_normal_filtered_all

__all__ = [
    "SpectralStats",
    "Scores",
    "ScoreReport",
    "distance_score",
    "distance_score_filtered",
    "periodogram",
    "radial_stats",
    "peak_radius",
    "band_mean",
    "increment_report",
    "write_profile_csv",
    "write_periodogram_pgm",
]

ANISOTROPY_FLOOR_DB = -100.0


def distance_score(cloud, metric=EUCLIDEAN) -> float:
    """Mean distance from each point to its nearest neighbor."""
    metric = get_metric(metric)
    x = np.asarray(cloud, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("distance_score needs at least 2 points")
    nn = nearest_all(build_index(x, metric))
    return float(metric.distance(x, x[nn]).mean())


def distance_score_filtered(cloud, normals, theta_max: float = np.pi / 4) -> float:
    """Mean distance to the nearest neighbor whose normal lies within theta_max.

    Points with no qualifying neighbor are left out of the mean entirely.
    """
    x = np.asarray(cloud, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("distance_score_filtered needs at least 2 points")
    nn = nearest_normal_filtered_all(x, normals, theta_max)
    ok = nn >= 0
    if not ok.any():
        raise ValueError("no point has a neighbor within the normal-angle gate")
    d = np.sqrt(((x[ok] - x[nn[ok]]) ** 2).sum(axis=1))
    return float(d.mean())


def periodogram(cloud, fmax: int = 128):
    """Periodogram |sum_j exp(-2 pi i f.x_j)|^2 / N on the integer lattice.

    Returns a (2*fmax+1, 2*fmax+1) grid; entry [i, j] belongs to frequency
    (fx, fy) = (i - fmax, j - fmax).  Coordinates are interpreted on the unit
    torus, so wrapping points changes nothing.  The DC bin (center) always
    equals N and is excluded from radial profiles downstream.
    """
    x = np.asarray(cloud, dtype=float)
    if x.ndim != 2 or x.shape[1] != 2 or x.shape[0] < 1:
        raise ValueError(f"periodogram expects a nonempty (n, 2) cloud, got {x.shape}")
    if not np.isfinite(x).all():
        raise ValueError("cloud contains non-finite coordinates")
    if not (isinstance(fmax, (int, np.integer)) and fmax >= 1):
        raise ValueError(f"fmax must be an integer >= 1, got {fmax!r}")
    freqs = np.arange(-fmax, fmax + 1)
    ex = np.exp(-2j * np.pi * np.outer(freqs, x[:, 0]))
    ey = np.exp(-2j * np.pi * np.outer(freqs, x[:, 1]))
    amp = ex @ ey.T
    return (amp.real * amp.real + amp.imag * amp.imag) / x.shape[0]


@dataclass(frozen=True)
class SpectralStats:
    """Radially averaged spectral summary of one or more periodogram grids."""

    grid: np.ndarray           # mean periodogram over runs, (2F+1, 2F+1)
    radii: np.ndarray          # integer annulus radii 1..F
    radial_power: np.ndarray   # mean power per annulus
    anisotropy_db: np.ndarray  # 10*log10(var/mean^2) per annulus, floored
    runs: int


def radial_stats(grids) -> SpectralStats:
    """Average grids over runs, then reduce to per-annulus power and anisotropy."""
    grids = [np.asarray(g, dtype=float) for g in grids]
    if len(grids) == 0:
        raise ValueError("radial_stats needs at least one grid")
    shape = grids[0].shape
    if len(shape) != 2 or shape[0] != shape[1] or shape[0] < 3 or shape[0] % 2 == 0:
        raise ValueError(f"grids must be odd square 2D arrays, got shape {shape}")
    for g in grids[1:]:
        if g.shape != shape:
            raise ValueError("all grids must share one shape")
    fmax = (shape[0] - 1) // 2
    mean_grid = grids[0].copy()
    for g in grids[1:]:
        mean_grid += g
    mean_grid /= len(grids)

    f = np.arange(-fmax, fmax + 1)
    rad = np.rint(np.sqrt(f[:, None] ** 2 + f[None, :] ** 2)).astype(np.intp)
    keep = (rad >= 1) & (rad <= fmax)
    r = rad[keep]
    p = mean_grid[keep]
    counts = np.bincount(r, minlength=fmax + 1)[1:]
    power = np.bincount(r, weights=p, minlength=fmax + 1)[1:] / counts
    mom2 = np.bincount(r, weights=p * p, minlength=fmax + 1)[1:] / counts
    var = np.maximum(mom2 - power * power, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        anis = np.where(power > 0, 10.0 * np.log10(var / (power * power)), -np.inf)
    anis = np.maximum(anis, ANISOTROPY_FLOOR_DB)

    for a in (mean_grid, power, anis):
        a.setflags(write=False)
    radii = np.arange(1, fmax + 1)
    radii.setflags(write=False)
    return SpectralStats(
        grid=mean_grid,
        radii=radii,
        radial_power=power,
        anisotropy_db=anis,
        runs=len(grids),
    )


def peak_radius(stats: SpectralStats) -> int:
    """Radius of the annulus with the largest mean power (lowest radius on ties)."""
    return int(stats.radii[np.argmax(stats.radial_power)])


def band_mean(stats: SpectralStats, lo: float, hi: float) -> float:
    """Mean radial power over annuli with lo <= radius <= hi (inclusive)."""
    sel = (stats.radii >= lo) & (stats.radii <= hi)
    if not sel.any():
        raise ValueError(f"no annulus has radius in [{lo}, {hi}]")
    return float(stats.radial_power[sel].mean())


@dataclass(frozen=True)
class Scores:
    """Final distance and noise scores of one run."""

    distance: float
    noise: float


@dataclass(frozen=True)
class ScoreReport:
    """Paired comparison of a baseline run against its LJL-embedded twin."""

    distance_score_base: float
    distance_score_ljl: float
    noise_score_base: float
    noise_score_ljl: float
    distance_increment: float
    noise_increment: float
    ratio: float | None  # noise_increment / distance_increment; None unless > 0 denominator


def increment_report(base: Scores, ljl: Scores) -> ScoreReport:
    """Relative increments (ljl - base)/base and their noise/distance ratio."""
    if base.distance == 0 or base.noise == 0:
        raise ValueError("baseline scores must be nonzero to form relative increments")
    d_inc = (ljl.distance - base.distance) / base.distance
    n_inc = (ljl.noise - base.noise) / base.noise
    ratio = n_inc / d_inc if d_inc > 0 else None
    return ScoreReport(
        distance_score_base=base.distance,
        distance_score_ljl=ljl.distance,
        noise_score_base=base.noise,
        noise_score_ljl=ljl.noise,
        distance_increment=d_inc,
        noise_increment=n_inc,
        ratio=ratio,
    )


def write_profile_csv(stats: SpectralStats, path):
    """One row per annulus under the header radius,radial_power,anisotropy_db."""
    with open(path, "w") as fh:
        fh.write("radius,radial_power,anisotropy_db\n")
        for r, p, a in zip(stats.radii, stats.radial_power, stats.anisotropy_db):
            fh.write(f"{int(r)},{p:.9g},{a:.9g}\n")


def write_periodogram_pgm(stats, path):
    """8-bit ASCII PGM of the mean periodogram, log-scaled and max-normalized."""
    grid = stats.grid if isinstance(stats, SpectralStats) else np.asarray(stats, dtype=float)
    if grid.ndim != 2:
        raise ValueError("periodogram grid must be 2D")
    levels = np.log1p(np.maximum(grid, 0.0))
    top = levels.max()
    if top > 0:
        levels = levels / top
    pix = np.rint(255.0 * levels).astype(int)
    with open(path, "w") as fh:
        fh.write(f"P2\n{grid.shape[1]} {grid.shape[0]}\n255\n")
        for row in pix:
            fh.write(" ".join(str(v) for v in row) + "\n")
