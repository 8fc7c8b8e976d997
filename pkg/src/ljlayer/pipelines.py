"""End-to-end procedures built on the pair-dynamics core.

Three pipelines:

* ``bluenoise_2d``       - rearrange random points in the unit square into a
                           blue-noise distribution (periodic, fixed, or no
                           boundary).
* ``redistribute_on_mesh`` - spread a 3D cloud evenly over a triangle mesh,
                           gating each point's update by the normal-angle test
                           and re-projecting after every step.
* ``embed_refine``       - interleave pair-dynamics steps into an iterative
                           refiner over a step window, with the adaptive step
                           size driven by the refiner's own displacement.

``SurfaceRefiner`` is a small stand-in for learned refiners: it contracts
points toward a target surface while injecting decaying Gaussian noise.  The
embed/sweep harness at the bottom pairs refiner-only runs against embedded
runs under shared random streams, so any difference is attributable to the
embedded dynamics alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .analysis import Scores, distance_score, increment_report
from .core import LjParams, Schedule, dt_adaptive, dt_exponential, lj_step
from .geometry import MeshProjector, TriangleMesh
from .metrics import EUCLIDEAN, PERIODIC_UNIT
from .neighbors import build_index, k_nearest_all

__all__ = [
    "Boundary",
    "RefineWindow",
    "RunReport",
    "EmbedConfig",
    "UnitSphere",
    "MeshSurface",
    "SurfaceRefiner",
    "sigma_prime",
    "bluenoise_2d",
    "redistribute_on_mesh",
    "embed_refine",
    "toy_refiner",
    "run_embedded",
    "embed_compare",
    "run_sweep",
    "write_sweep_csv",
]

_BOUNDARY_KINDS = ("none", "fixed", "periodic")


@dataclass(frozen=True)
class Boundary:
    """Unit-square boundary handling applied after every update step."""

    kind: str = "periodic"

    def __post_init__(self):
        if self.kind not in _BOUNDARY_KINDS:
            raise ValueError(f"boundary kind must be one of {_BOUNDARY_KINDS}, got {self.kind!r}")

    @classmethod
    def none(cls) -> "Boundary":
        return cls("none")

    @classmethod
    def fixed(cls) -> "Boundary":
        return cls("fixed")

    @classmethod
    def periodic(cls) -> "Boundary":
        return cls("periodic")

    @property
    def metric(self):
        return PERIODIC_UNIT if self.kind == "periodic" else EUCLIDEAN

    def apply(self, points):
        if self.kind == "fixed":
            return np.clip(points, 0.0, 1.0)
        if self.kind == "periodic":
            return np.mod(points, 1.0)
        return points


@dataclass(frozen=True)
class RefineWindow:
    """Step window [start, stop] (1-based, inclusive) within a run of `total` steps.

    start/stop may both be None, meaning the dynamics never activate; that is
    how "refiner only" is represented rather than by an out-of-range start.
    """

    total: int
    start: int | None
    stop: int | None

    def __post_init__(self):
        if not (isinstance(self.total, (int, np.integer)) and self.total >= 0):
            raise ValueError(f"total must be a nonnegative integer, got {self.total!r}")
        if (self.start is None) != (self.stop is None):
            raise ValueError("start and stop must be both set or both None")
        if self.start is not None:
            if not (isinstance(self.start, (int, np.integer)) and isinstance(self.stop, (int, np.integer))):
                raise ValueError("start and stop must be integers")
            if not (1 <= self.start <= self.stop <= self.total):
                raise ValueError(
                    f"window must satisfy 1 <= start <= stop <= total, "
                    f"got start={self.start}, stop={self.stop}, total={self.total}"
                )

    @classmethod
    def disabled(cls, total: int) -> "RefineWindow":
        return cls(total, None, None)

    @classmethod
    def default_window(cls, total: int) -> "RefineWindow":
        """start = 0.6*total, stop = 0.95*total (rounded, clamped to valid range)."""
        if total < 1:
            return cls.disabled(total)
        stop = min(total, max(1, round(0.95 * total)))
        start = min(stop, max(1, round(0.6 * total)))
        return cls(total, start, stop)

    @property
    def enabled(self) -> bool:
        return self.start is not None

    def active(self, t: int) -> bool:
        return self.start is not None and self.start <= t <= self.stop


@dataclass(frozen=True)
class RunReport:
    """What a pipeline did: iteration count, last displacement, score traces."""

    iterations: int
    final_max_disp: float
    seed: int | None
    distance_trace: np.ndarray
    noise_trace: np.ndarray | None = None

    def __post_init__(self):
        if len(self.distance_trace) != self.iterations:
            raise ValueError("distance trace length must equal iterations executed")
        if self.noise_trace is not None and len(self.noise_trace) != self.iterations:
            raise ValueError("noise trace length must equal iterations executed")

    def to_dict(self) -> dict:
        trace: dict = {"distance_score": [float(v) for v in self.distance_trace]}
        if self.noise_trace is not None:
            trace["noise_score"] = [float(v) for v in self.noise_trace]
        return {
            "iterations": self.iterations,
            "final_max_disp": self.final_max_disp,
            "seed": self.seed,
            "trace": trace,
        }


def sigma_prime(n: int) -> float:
    """Hexagonal-packing spacing estimate sqrt(2 / (sqrt(3) n)) for n points."""
    if not (isinstance(n, (int, np.integer)) and n >= 2):
        raise ValueError(f"sigma_prime needs an integer point count >= 2, got {n!r}")
    return math.sqrt(2.0 / (math.sqrt(3.0) * n))


def _as_cloud_or_count(cloud_or_n, dim: int):
    if isinstance(cloud_or_n, (int, np.integer)):
        if cloud_or_n < 1:
            raise ValueError(f"point count must be >= 1, got {cloud_or_n}")
        return None, int(cloud_or_n)
    x = np.array(cloud_or_n, dtype=float, copy=True)
    if x.ndim != 2 or x.shape[1] != dim or x.shape[0] < 1:
        raise ValueError(f"initial cloud must have shape (n, {dim}), got {x.shape}")
    if not np.isfinite(x).all():
        raise ValueError("initial cloud contains non-finite coordinates")
    return x, x.shape[0]


def bluenoise_2d(
    cloud_or_n,
    boundary: Boundary | None = None,
    params: LjParams | None = None,
    schedule: Schedule | None = None,
    tol: float = 1e-5,
    max_iter: int = 2000,
    seed: int = 0,
    sigma_multiplier: float = 1.0,
):
    """Iterate pair-dynamics steps on a 2D cloud until displacements fall below tol.

    Pass a point count (drawn uniformly in the unit square from `seed`) or an
    explicit (n, 2) cloud.  Defaults: periodic boundary, epsilon=2,
    sigma = sigma_prime(n) * sigma_multiplier, exponential decay alpha=0.5,
    beta=0.01.  Returns (cloud, RunReport).
    """
    if boundary is None:
        boundary = Boundary.periodic()
    if tol < 0:
        raise ValueError("tol must be >= 0")
    if max_iter < 0:
        raise ValueError("max_iter must be >= 0")
    rng = np.random.default_rng(seed)
    cloud, n = _as_cloud_or_count(cloud_or_n, 2)
    if cloud is None:
        cloud = rng.random((n, 2))
    if n == 1:
        # no neighbor exists, nothing can move
        report = RunReport(0, 0.0, seed, np.empty(0))
        return cloud, report
    if params is None:
        params = LjParams(epsilon=2.0, sigma=sigma_prime(n) * sigma_multiplier)
    if schedule is None:
        schedule = Schedule(alpha=0.5, beta=0.01)
    if schedule.kind != "exponential":
        raise ValueError("bluenoise_2d uses the exponential decay schedule")
    if params.k > n - 1:
        raise ValueError(f"k={params.k} requires at least {params.k + 1} points")

    metric = boundary.metric
    cloud = boundary.apply(cloud)
    pairs = k_nearest_all(build_index(cloud, metric), params.k)
    trace: list[float] = []
    iterations = 0
    final_disp = 0.0
    for t in range(max_iter):
        moved = lj_step(cloud, pairs, dt_exponential(t, schedule), params, metric, rng)
        new = boundary.apply(moved)
        disp = float(np.sqrt((metric.delta(new - cloud) ** 2).sum(axis=1)).max())
        cloud = new
        iterations += 1
        final_disp = disp
        pairs = k_nearest_all(build_index(cloud, metric), params.k)
        trace.append(float(metric.distance(cloud, cloud[pairs[:, 0]]).mean()))
        if disp < tol:
            break
    report = RunReport(iterations, final_disp, seed, np.array(trace))
    return cloud, report


_GATE_COS = math.cos(math.pi / 4.0)


def redistribute_on_mesh(
    cloud0,
    mesh: TriangleMesh,
    params: LjParams | None = None,
    schedule: Schedule | None = None,
    tol: float = 1e-5,
    max_iter: int = 2000,
    seed: int = 0,
    sigma_multiplier: float = 5.0,
):
    """Spread a 3D cloud evenly over a normalized mesh surface.

    The cloud is projected onto the mesh up front.  Each iteration computes
    flat normals from the points' current faces, gates every point by the
    angle between its normal and its nearest neighbor's normal (< pi/4 to
    move), applies one pair-dynamics step to the gated points, and projects
    the moved points back to the surface.  Gated-out points keep their exact
    coordinates for the iteration.  Returns (cloud, RunReport).
    """
    x0, n = _as_cloud_or_count(cloud0, 3)
    if x0 is None or n < 2:
        raise ValueError("redistribute_on_mesh needs an explicit cloud with >= 2 points")
    if np.abs(mesh.vertices).max() > 1.0 + 1e-9:
        raise ValueError("mesh must be normalized to [-1, 1]^3 (see normalize_mesh)")
    if tol < 0:
        raise ValueError("tol must be >= 0")
    if params is None:
        params = LjParams(epsilon=2.0, sigma=sigma_prime(n) * sigma_multiplier)
    if schedule is None:
        schedule = Schedule(alpha=0.5, beta=0.01)
    if schedule.kind != "exponential":
        raise ValueError("redistribute_on_mesh uses the exponential decay schedule")
    if params.k > n - 1:
        raise ValueError(f"k={params.k} requires at least {params.k + 1} points")

    rng = np.random.default_rng(seed)
    projector = MeshProjector(mesh)
    cloud, faces, _ = projector.project(x0)
    pairs = k_nearest_all(build_index(cloud, EUCLIDEAN), params.k)
    trace_d: list[float] = []
    trace_n: list[float] = []
    iterations = 0
    final_disp = 0.0
    for t in range(max_iter):
        normals = mesh.face_normals[faces]
        gate = (normals * normals[pairs[:, 0]]).sum(axis=1) > _GATE_COS
        stepped = lj_step(cloud, pairs, dt_exponential(t, schedule), params, EUCLIDEAN, rng)
        new = np.where(gate[:, None], stepped, cloud)
        if gate.any():
            pts, fids, _ = projector.project(new[gate])
            new[gate] = pts
            faces = faces.copy()
            faces[gate] = fids
        disp = float(np.sqrt(((new - cloud) ** 2).sum(axis=1)).max())
        cloud = new
        iterations += 1
        final_disp = disp
        pairs = k_nearest_all(build_index(cloud, EUCLIDEAN), params.k)
        trace_d.append(float(EUCLIDEAN.distance(cloud, cloud[pairs[:, 0]]).mean()))
        trace_n.append(float(projector.project(cloud)[2].mean()))
        if disp < tol:
            break
    report = RunReport(iterations, final_disp, seed, np.array(trace_d), np.array(trace_n))
    return cloud, report


class UnitSphere:
    """Implicit unit sphere centered at the origin."""

    def closest(self, points):
        x = np.asarray(points, dtype=float)
        r = np.sqrt((x * x).sum(axis=1, keepdims=True))
        safe = np.where(r > 1e-12, r, 1.0)
        out = x / safe
        out[r[:, 0] <= 1e-12] = (1.0, 0.0, 0.0)  # center has no unique foot point
        return out

    def distance(self, points):
        x = np.asarray(points, dtype=float)
        return np.abs(np.sqrt((x * x).sum(axis=1)) - 1.0)


class MeshSurface:
    """Triangle mesh wrapped in the same closest/distance interface."""

    def __init__(self, mesh: TriangleMesh):
        self.mesh = mesh
        self._projector = MeshProjector(mesh)

    def closest(self, points):
        return self._projector.project(points)[0]

    def distance(self, points):
        return self._projector.project(points)[2]


class SurfaceRefiner:
    """Toy iterative refiner: contract toward a surface, add decaying noise.

    step t maps x to x + pull*(closest(x) - x) + noise0*decay^t*g with g drawn
    from a seeded Gaussian stream, so two refiners built with the same seed
    produce identical trajectories given identical inputs.
    """

    def __init__(self, surface=None, pull: float = 0.2, noise0: float = 0.05,
                 decay: float = 0.9, seed: int = 0):
        if not 0.0 < pull <= 1.0:
            raise ValueError(f"pull must be in (0, 1], got {pull}")
        if noise0 < 0.0:
            raise ValueError(f"noise0 must be >= 0, got {noise0}")
        if not 0.0 < decay <= 1.0:
            raise ValueError(f"decay must be in (0, 1], got {decay}")
        self.surface = surface if surface is not None else UnitSphere()
        self.pull = pull
        self.noise0 = noise0
        self.decay = decay
        self._rng = np.random.default_rng((seed, 1))

    def step(self, t: int, cloud):
        x = np.asarray(cloud, dtype=float)
        out = x + self.pull * (self.surface.closest(x) - x)
        if self.noise0 > 0.0:
            out = out + (self.noise0 * self.decay**t) * self._rng.standard_normal(x.shape)
        return out


def toy_refiner(target=None, pull: float = 0.2, noise0: float = 0.05,
                decay: float = 0.9, seed: int = 0) -> SurfaceRefiner:
    """Refiner onto a TriangleMesh target, or the implicit unit sphere when None."""
    surface = MeshSurface(target) if isinstance(target, TriangleMesh) else target
    return SurfaceRefiner(surface, pull=pull, noise0=noise0, decay=decay, seed=seed)


def embed_refine(
    refiner,
    cloud_or_n,
    window: RefineWindow,
    params: LjParams | None = None,
    alpha: float = 2.5,
    beta: float = 0.01,
    seed: int = 0,
    sigma_multiplier: float = 5.0,
):
    """Run a refiner for window.total steps, embedding pair dynamics inside the window.

    Each step t first applies the refiner.  For window.start <= t <=
    window.stop one pair-dynamics step follows, its step size set by
    dt_adaptive(i, d) where i = t - window.start + 1 counts steps inside the
    window and d is the largest per-point displacement the refiner just
    produced.  Steps after the window run the refiner alone.  An int
    cloud_or_n draws a Gaussian init (scaled 0.5) from a seed-derived stream.
    Returns (cloud, RunReport).
    """
    cloud, n = _as_cloud_or_count(cloud_or_n, 3)
    if n < 2:
        raise ValueError("embed_refine needs at least 2 points")
    if cloud is None:
        cloud = 0.5 * np.random.default_rng((seed, 0)).standard_normal((n, 3))
    if params is None:
        params = LjParams(epsilon=2.0, sigma=sigma_prime(n) * sigma_multiplier)
    if params.k > n - 1:
        raise ValueError(f"k={params.k} requires at least {params.k + 1} points")
    schedule = Schedule(alpha=alpha, beta=beta, kind="adaptive")
    rng = np.random.default_rng(seed)
    surface = getattr(refiner, "surface", None)

    trace_d: list[float] = []
    trace_n: list[float] = []
    final_disp = 0.0
    for t in range(1, window.total + 1):
        prev = cloud
        cloud = np.asarray(refiner.step(t, prev), dtype=float)
        if cloud.shape != prev.shape:
            raise ValueError(f"refiner changed the cloud shape: {prev.shape} -> {cloud.shape}")
        if window.active(t):
            max_disp = float(np.sqrt(((cloud - prev) ** 2).sum(axis=1)).max())
            dt = dt_adaptive(t - window.start + 1, max_disp, schedule)
            if dt > 0.0:
                pairs = k_nearest_all(build_index(cloud, EUCLIDEAN), params.k)
                cloud = lj_step(cloud, pairs, dt, params, EUCLIDEAN, rng)
        final_disp = float(np.sqrt(((cloud - prev) ** 2).sum(axis=1)).max())
        trace_d.append(distance_score(cloud))
        if surface is not None:
            trace_n.append(float(surface.distance(cloud).mean()))
    report = RunReport(
        iterations=window.total,
        final_max_disp=final_disp,
        seed=seed,
        distance_trace=np.array(trace_d),
        noise_trace=np.array(trace_n) if surface is not None else None,
    )
    return cloud, report


@dataclass(frozen=True)
class EmbedConfig:
    """Everything needed for one paired refiner-vs-embedded comparison.

    The refiner defaults describe an annealed generation run: the noise scale
    starts high (noise0 = 22.3 puts early points in a diffuse fog) and decays
    to about 0.04 when the window opens at step 60, then to ~6e-4 by step
    100.  That gives the adaptive step size something meaningful to measure
    inside the window while leaving the tail quiet enough for the spacing
    gains to survive to the final cloud.
    """

    n: int = 100
    total: int = 100
    start: int | None = 60
    stop: int | None = 95
    alpha: float = 2.5
    beta: float = 0.01
    epsilon: float = 2.0
    sigma_multiplier: float = 5.0
    k: int = 3
    pull: float = 0.4
    noise0: float = 22.3
    noise_decay: float = 0.9
    init: str = "gauss"
    init_jitter: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.init not in ("gauss", "noisy_surface"):
            raise ValueError(f"init must be 'gauss' or 'noisy_surface', got {self.init!r}")

    def window(self) -> RefineWindow:
        if self.start is None or self.stop is None:
            return RefineWindow.disabled(self.total)
        return RefineWindow(self.total, self.start, self.stop)

    def lj_params(self) -> LjParams:
        return LjParams(epsilon=self.epsilon,
                        sigma=sigma_prime(self.n) * self.sigma_multiplier,
                        k=self.k)

    @classmethod
    def denoising(cls, **overrides) -> "EmbedConfig":
        """Preset for denoising-style runs: shorter schedule, moderate noise.

        Starts from jittered on-surface points; the weaker pull leaves a
        visible residual for the noise score to measure, so the alpha sweep
        traces the full tradeoff: proportional leak at small alpha, a trough
        where strong kicks resolve clusters faster than they push points off
        the surface, and an overshoot branch where leak dominates again.
        """
        window = RefineWindow.default_window(overrides.pop("total", 60))
        base = dict(
            total=window.total,
            start=window.start,
            stop=window.stop,
            alpha=0.3,
            pull=0.3,
            noise0=3.0,
            init="noisy_surface",
        )
        base.update(overrides)
        return cls(**base)


def _init_cloud(config: EmbedConfig):
    rng = np.random.default_rng((config.seed, 0))
    if config.init == "gauss":
        return 0.5 * rng.standard_normal((config.n, 3))
    g = rng.standard_normal((config.n, 3))
    r = np.sqrt((g * g).sum(axis=1, keepdims=True))
    r[r < 1e-12] = 1.0
    return g / r + config.init_jitter * rng.standard_normal((config.n, 3))


def run_embedded(config: EmbedConfig, embedded: bool = True, surface=None):
    """One harness run; embedded=False runs the refiner alone on the same streams."""
    if surface is None:
        surface = UnitSphere()
    refiner = SurfaceRefiner(surface, pull=config.pull, noise0=config.noise0,
                             decay=config.noise_decay, seed=config.seed)
    window = config.window() if embedded else RefineWindow.disabled(config.total)
    cloud0 = _init_cloud(config)
    return embed_refine(refiner, cloud0, window, params=config.lj_params(),
                        alpha=config.alpha, beta=config.beta, seed=config.seed)


def _final_scores(cloud, surface) -> Scores:
    return Scores(distance=distance_score(cloud),
                  noise=float(surface.distance(cloud).mean()))


def embed_compare(config: EmbedConfig, surface=None):
    """Paired baseline/embedded runs sharing seed streams.

    Returns (report, base_run, ljl_run) where report is the increment
    ScoreReport and each run is its (cloud, RunReport) pair.
    """
    if surface is None:
        surface = UnitSphere()
    base = run_embedded(config, embedded=False, surface=surface)
    ljl = run_embedded(config, embedded=True, surface=surface)
    report = increment_report(_final_scores(base[0], surface), _final_scores(ljl[0], surface))
    return report, base, ljl


_SWEEP_AXES = ("ss", "alpha", "beta", "alpha_denoise")


def _sweep_config(axis: str, value: float, seed: int, base: EmbedConfig) -> EmbedConfig:
    if axis == "ss":
        ss = int(round(value))
        stop = base.stop if base.stop is not None else base.total
        if ss > stop:
            return replace(base, start=None, stop=None, seed=seed)
        return replace(base, start=max(1, ss), stop=stop, seed=seed)
    if axis == "alpha":
        return replace(base, alpha=float(value), seed=seed)
    if axis == "beta":
        return replace(base, beta=float(value), seed=seed)
    if axis == "alpha_denoise":
        return EmbedConfig.denoising(alpha=float(value), seed=seed)
    raise ValueError(f"sweep axis must be one of {_SWEEP_AXES}, got {axis!r}")


def run_sweep(axis: str, values, seeds, base: EmbedConfig | None = None) -> list[dict]:
    """Paired embed runs for each (value, seed); one result row per run."""
    if axis not in _SWEEP_AXES:
        raise ValueError(f"sweep axis must be one of {_SWEEP_AXES}, got {axis!r}")
    values = list(values)
    seeds = list(seeds)
    if not values:
        raise ValueError("sweep needs at least one value")
    if not seeds:
        raise ValueError("sweep needs at least one seed")
    if base is None:
        base = EmbedConfig()
    rows = []
    for value in values:
        for seed in seeds:
            config = _sweep_config(axis, value, int(seed), base)
            report, _, _ = embed_compare(config)
            rows.append({
                "value": float(value),
                "seed": int(seed),
                "distance_score": report.distance_score_ljl,
                "noise_score": report.noise_score_ljl,
                "distance_increment": report.distance_increment,
                "noise_increment": report.noise_increment,
                "ratio": float("nan") if report.ratio is None else report.ratio,
            })
    return rows


_SWEEP_COLUMNS = ("value", "seed", "distance_score", "noise_score",
                  "distance_increment", "noise_increment", "ratio")


def write_sweep_csv(rows, path):
    with open(path, "w") as fh:
        fh.write(",".join(_SWEEP_COLUMNS) + "\n")
        for row in rows:
            cells = []
            for col in _SWEEP_COLUMNS:
                v = row[col]
                cells.append(str(v) if col == "seed" else f"{v:.9g}")
            fh.write(",".join(cells) + "\n")
    return path
