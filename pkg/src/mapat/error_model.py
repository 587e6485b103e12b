"""Measurement noise, analytic error statistics and the Monte Carlo harness.

Noise streams
-------------
Runs are grouped in fixed blocks of :data:`BLOCK_RUNS`. Block ``b`` draws from a
Philox generator seeded by ``SeedSequence(seed, spawn_key=(b,))`` and fills a
``(runs, mpcs, 2)`` array of standard normals in C order (delay first, then
angle). Run ``r``'s noise therefore depends only on ``(seed, r, mpc index)``,
not on the total run count or on how blocks are spread across threads.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy import integrate, special

from .constants import SPEED_OF_LIGHT
from .core import MapAtParams, locate_many
from .exceptions import NoCandidatesError, PreconditionError, UnreachableError
from .floormap import FloorMap
from .geometry import Point, normalize_azimuth, normalize_azimuths
from .tracer import Mpc, TraceParams, trace_paths

BLOCK_RUNS = 4096
RNG_SCHEME = "philox-seedseq-block4096-v1"


@dataclass(frozen=True)
class NoiseParams:
    """Zero-mean Gaussian measurement noise.

    Parameters
    ----------
    sigma_t : float
        Delay standard deviation in seconds.
    sigma_theta : float
        Azimuth standard deviation in radians.
    seed : int
        Root seed of all noise streams.
    """

    sigma_t: float = 0.25e-9
    sigma_theta: float = math.radians(0.5)
    seed: int = 0

    def __post_init__(self):
        if not (self.sigma_t >= 0 and self.sigma_theta >= 0):
            raise PreconditionError("noise standard deviations must be >= 0")
        if not 0 <= int(self.seed) < 2**64:
            raise PreconditionError("seed must fit in an unsigned 64-bit integer")

    @classmethod
    def zero(cls, seed: int = 0) -> NoiseParams:
        return cls(0.0, 0.0, seed)


@dataclass(frozen=True)
class ErrorStats:
    mean_m: float
    std_m: float
    rms_m: float
    samples: int
    per_sample_errors: Optional[np.ndarray] = field(default=None, repr=False, compare=False)
    #: runs in which no candidate survived; excluded from the statistics
    outages: int = 0

    @property
    def runs(self) -> int:
        return self.samples + self.outages

    @property
    def outage_rate(self) -> float:
        return self.outages / self.runs


def block_generator(seed: int, block: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(block),))
    return np.random.Generator(np.random.Philox(ss))


def add_noise(mpc: Mpc, params: NoiseParams, rng: np.random.Generator) -> Mpc:
    """Perturb delay and azimuth of one component.

    Consumes two standard normals (delay, then angle); a non-positive delay is
    redrawn from the same stream.
    """
    z_t, z_a = rng.standard_normal(2)
    tof = mpc.tof + params.sigma_t * z_t
    while tof <= 0:
        tof = mpc.tof + params.sigma_t * rng.standard_normal()
    aoa = normalize_azimuth(mpc.aoa_at_bs + params.sigma_theta * z_a)
    return replace(mpc, aoa_at_bs=aoa, tof=tof)


def noisy_measurements(
    mpcs: Sequence[Mpc], params: NoiseParams, first_run: int, n_runs: int
) -> tuple[np.ndarray, np.ndarray]:
    """Perturbed ``(aoas, tofs)``, each ``(n_runs, len(mpcs))``, for runs starting at ``first_run``.

    Equivalent to calling :func:`add_noise` run by run, component by component,
    on each block's generator.
    """
    base_aoa = np.array([m.aoa_at_bs for m in mpcs])
    base_tof = np.array([m.tof for m in mpcs])
    M = len(mpcs)
    aoas = np.empty((n_runs, M))
    tofs = np.empty((n_runs, M))
    run = first_run
    while run < first_run + n_runs:
        block, offset = divmod(run, BLOCK_RUNS)
        take = min(BLOCK_RUNS - offset, first_run + n_runs - run)
        rng = block_generator(params.seed, block)
        z = rng.standard_normal((offset + take, M, 2))[offset:]
        rows = slice(run - first_run, run - first_run + take)
        t = base_tof + params.sigma_t * z[:, :, 0]
        for i, j in zip(*np.nonzero(t <= 0)):
            while t[i, j] <= 0:
                t[i, j] = base_tof[j] + params.sigma_t * rng.standard_normal()
        tofs[rows] = t
        aoas[rows] = normalize_azimuths(base_aoa + params.sigma_theta * z[:, :, 1])
        run += take
    return aoas, tofs


def resolve_threads(threads: Optional[int] = None) -> int:
    """Worker count: explicit value, else ``MAPAT_THREADS``, where 0 means all cores."""
    if threads is None:
        raw = os.environ.get("MAPAT_THREADS", "0").strip() or "0"
        try:
            threads = int(raw)
        except ValueError:
            raise PreconditionError(f"MAPAT_THREADS must be an integer, got {raw!r}") from None
    if threads < 0:
        raise PreconditionError("thread count must be >= 0")
    return threads or (os.cpu_count() or 1)


@dataclass(frozen=True)
class TrialResults:
    """Per-run estimator output; ``xy`` is NaN for outage runs."""

    xy: np.ndarray
    support: np.ndarray
    n_candidates: np.ndarray
    tie: np.ndarray

    @property
    def ok(self) -> np.ndarray:
        return self.n_candidates > 0


def run_trials(
    floor_map: FloorMap,
    bs: Point,
    mpcs: Sequence[Mpc],
    map_at_params: MapAtParams,
    noise: NoiseParams,
    runs: int,
    threads: Optional[int] = None,
) -> TrialResults:
    """Locate ``runs`` independently perturbed copies of ``mpcs``.

    Output is identical for any thread count.
    """
    if runs < 1:
        raise PreconditionError("runs must be >= 1")
    if not mpcs:
        raise PreconditionError("run_trials needs at least one component")
    starts = list(range(0, runs, BLOCK_RUNS))

    def one_block(start):
        n = min(BLOCK_RUNS, runs - start)
        aoas, tofs = noisy_measurements(mpcs, noise, start, n)
        return locate_many(floor_map, bs, aoas, tofs, map_at_params)

    workers = min(resolve_threads(threads), len(starts))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one_block, starts))
    else:
        parts = [one_block(s) for s in starts]
    return TrialResults(
        xy=np.concatenate([p["xy"] for p in parts]),
        support=np.concatenate([p["support"] for p in parts]),
        n_candidates=np.concatenate([p["n_candidates"] for p in parts]),
        tie=np.concatenate([p["tie"] for p in parts]),
    )


def error_stats(errors: np.ndarray, outages: int = 0, keep_samples: bool = True) -> ErrorStats:
    errors = np.asarray(errors, dtype=np.float64)
    if errors.size == 0:
        raise NoCandidatesError(f"all {outages} runs failed to produce a candidate location")
    return ErrorStats(
        mean_m=float(errors.mean()),
        std_m=float(errors.std()),
        rms_m=float(np.sqrt(np.mean(errors**2))),
        samples=int(errors.size),
        per_sample_errors=errors if keep_samples else None,
        outages=int(outages),
    )


def monte_carlo_locate(
    floor_map: FloorMap,
    bs: Point,
    ue_truth: Point,
    trace_params: TraceParams = TraceParams(),
    map_at_params: MapAtParams = MapAtParams(),
    noise: NoiseParams = NoiseParams(),
    runs: int = 1000,
    threads: Optional[int] = None,
    keep_samples: bool = True,
) -> ErrorStats:
    """Trace ground truth, then localize ``runs`` noisy realizations of it.

    Raises
    ------
    UnreachableError
        If the tracer finds no path from ``bs`` to ``ue_truth``.
    NoCandidatesError
        If every run is an outage.
    """
    mpcs = trace_paths(floor_map, bs, ue_truth, trace_params)
    if not mpcs:
        raise UnreachableError(f"no propagation path from {tuple(bs)} to {tuple(ue_truth)}")
    res = run_trials(floor_map, bs, mpcs, map_at_params, noise, runs, threads)
    ok = res.ok
    err = np.hypot(res.xy[ok, 0] - ue_truth.x, res.xy[ok, 1] - ue_truth.y)
    return error_stats(err, outages=int((~ok).sum()), keep_samples=keep_samples)


def generalized_chi_moment(sd_a: float, sd_b: float, order: int = 1) -> float:
    """``E[|v|**order]`` for ``v ~ N(0, diag(sd_a**2, sd_b**2))``.

    Integrated in polar coordinates. The radial integral is closed form; the
    substitution ``tan(phi) = (lo/hi) * tan(psi)`` leaves the smooth angular
    integrand ``(cos(psi)**2 + (lo/hi)**2 * sin(psi)**2) ** (order/2)``, done by
    adaptive quadrature.
    """
    if sd_a < 0 or sd_b < 0:
        raise PreconditionError("standard deviations must be >= 0")
    hi, lo = max(sd_a, sd_b), min(sd_a, sd_b)
    p = float(order)
    if hi == 0.0:
        return 0.0
    if lo == 0.0:
        # one-dimensional: E|N(0, s^2)|^p
        return hi**p * 2 ** (p / 2) * special.gamma((p + 1) / 2) / math.sqrt(math.pi)
    rho2 = (lo / hi) ** 2

    def integrand(psi):
        return (math.cos(psi) ** 2 + rho2 * math.sin(psi) ** 2) ** (p / 2)

    quarter, _ = integrate.quad(integrand, 0.0, math.pi / 2, epsabs=0.0, epsrel=1e-13, limit=200)
    total = 2 ** (p / 2 + 1) * special.gamma(p / 2 + 1) / math.pi * quarter
    return total * hi**p


def _component_sds(r: float, params: NoiseParams) -> tuple[float, float]:
    if not r > 0:
        raise PreconditionError(f"range must be positive, got {r}")
    return r * params.sigma_theta, SPEED_OF_LIGHT * params.sigma_t


def theoretical_mean_error(r: float, params: NoiseParams = NoiseParams()) -> float:
    """Mean single-candidate error at path length ``r`` meters.

    The angular error ``r * dtheta`` and range error ``c * dt`` combine as
    near-orthogonal Gaussian components, so the error magnitude follows a
    generalized chi distribution.
    """
    return generalized_chi_moment(*_component_sds(r, params), order=1)


def theoretical_second_moment(r: float, params: NoiseParams = NoiseParams()) -> float:
    """``E[eps**2]`` by the same quadrature; equals ``(r*sigma_theta)**2 + (c*sigma_t)**2``."""
    return generalized_chi_moment(*_component_sds(r, params), order=2)


def centroid_error_covariance(mpcs: Sequence[Mpc], params: NoiseParams) -> np.ndarray:
    """Small-angle covariance of the centroid of the true-branch candidates of ``mpcs``.

    Each component contributes range noise along its last leg into the UE and
    angular noise (scaled by its full path length) across it. Needs traced
    components (with ``vertices``).
    """
    if not mpcs:
        raise PreconditionError("need at least one component")
    cov = np.zeros((2, 2))
    var_t = (SPEED_OF_LIGHT * params.sigma_t) ** 2
    for m in mpcs:
        if len(m.vertices) < 2:
            raise PreconditionError("centroid covariance needs traced components with vertices")
        p, q = m.vertices[-2], m.vertices[-1]
        u = np.array([q.x - p.x, q.y - p.y])
        u /= np.linalg.norm(u)
        n = np.array([-u[1], u[0]])
        cov += var_t * np.outer(u, u) + (m.path_length * params.sigma_theta) ** 2 * np.outer(n, n)
    return cov / len(mpcs) ** 2


def predicted_centroid_error(mpcs: Sequence[Mpc], params: NoiseParams = NoiseParams()) -> float:
    """Mean error of the centroid of the true-branch candidates of ``mpcs``.

    With a single LOS component this reduces to :func:`theoretical_mean_error`.
    """
    evals = np.linalg.eigvalsh(centroid_error_covariance(mpcs, params))
    sds = np.sqrt(np.clip(evals, 0.0, None))
    return generalized_chi_moment(float(sds[0]), float(sds[1]), order=1)
