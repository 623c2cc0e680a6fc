"""Monte Carlo ggBm paths as amplitude-scaled fractional Brownian motions.

Each path is sqrt(tau) * Z(t) with tau drawn from M_beta and Z a
fractional Brownian motion with Var Z(t) = 2 t^alpha.  Path i draws all
of its randomness from its own stream, spawned from the seed with
spawn key (i,): first one uniform for tau, then the Gaussian vector for
Z.  Ensembles therefore do not depend on how the work is split.
"""
from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import linalg

from .errors import DomainError, InsufficientPaths, NotPositiveDefinite, TableError
from .greenfn import DiffusionParams
from .mwright import mwright_build_table

__all__ = [
    "EnsembleConfig",
    "PathEnsemble",
    "EnsembleStats",
    "sample_tau",
    "fbm_covariance",
    "fbm_paths",
    "ggbm_paths",
    "ensemble_stats",
    "thread_count",
]

log = logging.getLogger(__name__)

MAX_ELEMENTS = 50_000_000  # n_paths * len(time_nodes); 400 MB of float64
_CHUNK = 2048


def thread_count() -> int:
    """Worker threads for path generation: EKDIFF_THREADS if set, else all cores."""
    raw = os.environ.get("EKDIFF_THREADS", "").strip()
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise DomainError(f"EKDIFF_THREADS must be a positive integer, got {raw!r}") from None
        if n < 1:
            raise DomainError(f"EKDIFF_THREADS must be a positive integer, got {raw!r}")
        return n
    return os.cpu_count() or 1


def _stream(seed: int, i: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(i,))))


def _check_seed(seed) -> int:
    seed = int(seed)
    if not 0 <= seed < 2 ** 64:
        raise DomainError("seed must be a 64-bit unsigned integer")
    return seed


def _map_chunks(fn, n: int):
    """Apply fn(start, stop) over path-index chunks, threaded, results in order."""
    bounds = [(a, min(a + _CHUNK, n)) for a in range(0, n, _CHUNK)]
    workers = min(thread_count(), len(bounds))
    if workers <= 1:
        return [fn(a, b) for a, b in bounds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda ab: fn(*ab), bounds))


def _tau_from_uniform(beta: float, u: np.ndarray) -> np.ndarray:
    if beta == 1.0:
        return np.ones_like(u)
    table = mwright_build_table(beta)
    tau = table.ppf(u)
    if not np.all(np.isfinite(tau)) or np.any(tau < 0):
        raise TableError("inverse CDF produced invalid amplitudes")
    # u = 0 maps to the left end of the table; keep draws strictly positive
    return np.maximum(tau, np.nextafter(0.0, 1.0))


def sample_tau(beta: float, n: int, seed: int) -> np.ndarray:
    """n draws of the M_beta-distributed amplitude by inverse-CDF on its table.

    Draw i is the first uniform of stream i, so it equals the tau of path i
    in ``ggbm_paths`` with the same seed.  beta = 1 gives all ones.
    """
    beta = float(beta)
    if not 0.0 < beta <= 1.0:
        raise DomainError(f"beta must lie in (0, 1], got {beta}")
    if int(n) < 1:
        raise DomainError("n must be at least 1")
    seed = _check_seed(seed)
    n = int(n)
    u = np.concatenate(_map_chunks(lambda a, b: np.array([_stream(seed, i).random() for i in range(a, b)]), n))
    return _tau_from_uniform(beta, u)


def fbm_covariance(hurst: float, t: np.ndarray) -> np.ndarray:
    """Cov[Z(s), Z(t)] = s^2H + t^2H - |t - s|^2H, so that Var Z(t) = 2 t^2H."""
    t = np.asarray(t, dtype=float)
    e = 2.0 * hurst
    return t[:, None] ** e + t[None, :] ** e - np.abs(t[:, None] - t[None, :]) ** e


def _cholesky(cov: np.ndarray) -> np.ndarray:
    try:
        return linalg.cholesky(cov, lower=True)
    except linalg.LinAlgError:
        jitter = 1e-12 * np.diag(cov)
        log.warning("covariance not numerically positive definite; adding jitter %.3g (max)", jitter.max())
        try:
            return linalg.cholesky(cov + np.diag(jitter), lower=True)
        except linalg.LinAlgError as exc:
            raise NotPositiveDefinite("fBm covariance is not positive definite even with jitter") from exc


def _check_nodes(time_nodes) -> np.ndarray:
    t = np.asarray(time_nodes, dtype=float).ravel()
    if t.size < 1:
        raise DomainError("need at least one time node")
    if t[0] < 0 or np.any(np.diff(t) <= 0) or not np.all(np.isfinite(t)):
        raise DomainError("time nodes must be finite, nonnegative and strictly increasing")
    return t


def _gaussian_block(seed: int, a: int, b: int, m: int):
    u = np.empty(b - a)
    z = np.empty((b - a, m))
    for k, i in enumerate(range(a, b)):
        g = _stream(seed, i)
        u[k] = g.random()
        z[k] = g.standard_normal(m)
    return u, z


def _fbm_from_normals(L: np.ndarray, z: np.ndarray, pinned: bool) -> np.ndarray:
    x = z @ L.T
    if pinned:
        x = np.concatenate([np.zeros((x.shape[0], 1)), x], axis=1)
    return x


def fbm_paths(hurst: float, time_nodes, n: int, seed: int) -> np.ndarray:
    """n fBm paths (rows) with Var = 2 t^(2 hurst) by Cholesky factorisation.

    A node at t = 0 is pinned to 0.  Path i uses stream i exactly as in
    ``ggbm_paths``, so beta = 1 ensembles reproduce these paths.
    """
    hurst = float(hurst)
    if not 0.0 < hurst <= 1.0:
        raise DomainError(f"hurst must lie in (0, 1], got {hurst}")
    t = _check_nodes(time_nodes)
    n = int(n)
    if n < 1:
        raise DomainError("n must be at least 1")
    seed = _check_seed(seed)
    _, z = _draw(seed, n, t, hurst)
    return z


def _draw(seed: int, n: int, t: np.ndarray, hurst: float):
    pinned = t[0] == 0.0
    tp = t[1:] if pinned else t
    L = _cholesky(fbm_covariance(hurst, tp)) if tp.size else np.zeros((0, 0))

    def work(a, b):
        u, z = _gaussian_block(seed, a, b, tp.size)
        return u, _fbm_from_normals(L, z, pinned)

    parts = _map_chunks(work, n)
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


@dataclass(frozen=True)
class EnsembleConfig:
    params: DiffusionParams
    time_nodes: np.ndarray
    n_paths: int
    seed: int
    fbm_method: str = "cholesky"
    max_elements: int = MAX_ELEMENTS

    def __post_init__(self):
        object.__setattr__(self, "time_nodes", _check_nodes(self.time_nodes))
        if int(self.n_paths) < 1:
            raise DomainError("n_paths must be at least 1")
        object.__setattr__(self, "n_paths", int(self.n_paths))
        object.__setattr__(self, "seed", _check_seed(self.seed))
        if self.fbm_method != "cholesky":
            raise DomainError("only fbm_method='cholesky' is available")
        if self.n_paths * self.time_nodes.size > self.max_elements:
            raise DomainError(
                f"{self.n_paths} paths x {self.time_nodes.size} nodes exceeds the cap of {self.max_elements} values"
            )


@dataclass(frozen=True)
class PathEnsemble:
    config: EnsembleConfig
    tau: np.ndarray
    paths: np.ndarray
    rng_provenance: dict = field(default_factory=dict)

    @property
    def time_nodes(self) -> np.ndarray:
        return self.config.time_nodes


def ggbm_paths(config: EnsembleConfig) -> PathEnsemble:
    """path_i(t) = sqrt(tau_i) Z_i(t): one M_beta amplitude per whole fBm path."""
    p = config.params
    t = config.time_nodes
    u, z = _draw(config.seed, config.n_paths, t, p.hurst)
    tau = _tau_from_uniform(p.beta, u)
    paths = np.sqrt(tau)[:, None] * z
    prov = {
        "seed": config.seed,
        "bit_generator": "PCG64",
        "streams": f"SeedSequence(seed, spawn_key=(i,)) for path i in 0..{config.n_paths - 1}",
    }
    return PathEnsemble(config, tau, paths, prov)


@dataclass(frozen=True)
class EnsembleStats:
    time_nodes: np.ndarray
    variance_curve: np.ndarray
    loglog_slope: float
    loglog_intercept: float
    ensemble: Optional[PathEnsemble] = field(default=None, repr=False)

    def amplitude(self, alpha: float) -> np.ndarray:
        """variance_curve / t^alpha at the nodes with t > 0."""
        pos = self.time_nodes > 0
        return self.variance_curve[pos] / self.time_nodes[pos] ** alpha

    def marginal_hist(self, node: int, bins=60, range=None):
        """Normalised histogram (density, edges) of the ensemble at time node ``node``."""
        if self.ensemble is None:
            raise DomainError("statistics were computed without keeping the ensemble")
        return np.histogram(self.ensemble.paths[:, node], bins=bins, range=range, density=True)


def ensemble_stats(ens: PathEnsemble, keep: bool = True) -> EnsembleStats:
    """Second moment about 0 at every node and the log-log slope over nodes with t > 0.

    The paths have mean zero by construction, so <x^2> is estimated
    directly as the mean of x^2.
    """
    n = ens.paths.shape[0]
    if n < 100:
        raise InsufficientPaths(f"need at least 100 paths for slope fitting, got {n}")
    t = ens.time_nodes
    var = np.mean(ens.paths ** 2, axis=0)
    pos = t > 0
    if np.count_nonzero(pos) < 2:
        slope, icpt = math.nan, math.nan
    else:
        slope, icpt = np.polyfit(np.log(t[pos]), np.log(var[pos]), 1)
    return EnsembleStats(t, var, float(slope), float(icpt), ens if keep else None)
