"""Event-driven simulation of the particle system on a torus.

Used as an independent check of the kinetic solution on periodic domains.
Each unordered pair at torus separation ``d`` coalesces with hazard
``a1(d)``; each particle proposes jumps at rate ``<c2>`` and a proposal to
``y`` is accepted with probability ``prod_{u != x} exp(-phi(y - u))``.
Kernels are summed over torus images, as the periodic kinetic solver does.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .kernels import Kernel
from .operators import LOG_MASS, MIDPOINT, ModelConfig

MC_HEADER = "bin_center,mean_density,stderr"

Intensity = Union[float, Callable[[np.ndarray], np.ndarray]]


class InvariantViolation(AssertionError):
    """An event broke cardinality or mass bookkeeping."""


@dataclass
class Configuration:
    positions: np.ndarray
    P: float
    rng: np.random.Generator

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        if self.positions.size and (self.positions.min() < 0 or self.positions.max() >= self.P):
            raise ValueError("positions must lie in [0, P)")

    @property
    def n(self) -> int:
        return int(self.positions.size)


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _wrap(x, P: float):
    out = np.mod(x, P)
    # np.mod can return P itself for tiny negative inputs
    return np.where(out >= P, 0.0, out)


def _intensity_fn(rho0: Intensity) -> Callable[[np.ndarray], np.ndarray]:
    if callable(rho0):
        return rho0
    level = float(rho0)
    return lambda x: np.full(np.shape(x), level)


def sample_poisson_initial(rho0: Intensity, P: float, seed=None, bound: Optional[float] = None) -> Configuration:
    """Poisson process with intensity ``rho0`` on ``[0, P)`` by thinning.

    ``bound`` must dominate ``rho0``; by default it is the maximum over a
    fine probe grid, which is exact for piecewise-constant intensities.
    """
    rng = _rng(seed)
    fn = _intensity_fn(rho0)
    if bound is None:
        probe = np.linspace(0.0, P, 4097)[:-1]
        bound = float(np.max(fn(probe))) if probe.size else 0.0
    if bound < 0:
        raise ValueError("intensity must be non-negative")
    if bound == 0:
        return Configuration(np.empty(0), P, rng)
    n = rng.poisson(bound * P)
    x = rng.uniform(0.0, P, n)
    keep = rng.uniform(0.0, bound, n) < fn(x)
    return Configuration(np.sort(x[keep]), P, rng)


def _image_range(k: Kernel, P: float) -> np.ndarray:
    m = int(math.ceil(k.support_radius() / P))
    return np.arange(-m, m + 1)


def _signed_gap(a: np.ndarray, b, P: float) -> np.ndarray:
    """``b - a`` reduced to ``[-P/2, P/2)``."""
    return np.mod(np.asarray(b) - a + 0.5 * P, P) - 0.5 * P


def torus_kernel(k: Kernel, d: np.ndarray, P: float) -> np.ndarray:
    """``sum_m k(d + m P)`` over the images inside the kernel support."""
    d = np.asarray(d, dtype=float)
    return sum(k(d + m * P) for m in _image_range(k, P))


def sample_displacement(k: Kernel, rng: np.random.Generator, size=None):
    """Draw from the density ``k / <k>``."""
    if k.shape == "gaussian":
        u = rng.normal(0.0, k.sigma, size)
    else:
        u = rng.uniform(-k.sigma, k.sigma, size)
    if k.h:
        u = u + k.h * rng.choice((-1.0, 1.0), size)
    return u


def coalescence_rates(c: Configuration, a1: Kernel) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Pair indices, image offsets and hazards for every (pair, image) with positive rate."""
    x = c.positions
    i, j = np.triu_indices(c.n, k=1)
    if i.size == 0:
        return i, j, np.empty(0), np.empty(0)
    d = _signed_gap(x[i], x[j], c.P)
    images = _image_range(a1, c.P)
    sep = d[:, None] + images[None, :] * c.P
    rate = a1(sep)
    pi, mi = np.nonzero(rate > 0)
    return i[pi], j[pi], sep[pi, mi], rate[pi, mi]


def _merge_target(x: float, sep: float, kind: str, P: float) -> tuple[float, float]:
    """Merged coordinate (unwrapped) of particles at ``x`` and ``x + sep``."""
    y = x + sep
    if kind == MIDPOINT:
        return 0.5 * (x + y), y
    if kind == LOG_MASS:
        hi, lo = max(x, y), min(x, y)
        return hi + math.log1p(math.exp(lo - hi)), y
    raise ValueError(f"no coalescence placement for {kind!r}")


def jump_acceptance(c: Configuration, mover: int, target: float, phi: Optional[Kernel]) -> float:
    if phi is None or c.n <= 1:
        return 1.0
    others = np.delete(c.positions, mover)
    d = _signed_gap(others, target, c.P)
    return float(np.exp(-np.sum(torus_kernel(phi, d, c.P))))


def gillespie_step(c: Configuration, m: ModelConfig, check: bool = True) -> tuple[Configuration, float, str]:
    """Advance by one event or rejected proposal.

    Returns the new configuration, the waiting time and the event kind
    (``"coalesce"``, ``"jump"`` or ``"reject"``).
    """
    if c.n == 0:
        raise ValueError("configuration is empty")
    rng = c.rng
    n = c.n
    if m.has_coalescence:
        pi, pj, seps, rates = coalescence_rates(c, m.coalescence_kernel)
        r_coal = float(rates.sum())
    else:
        r_coal = 0.0
    r_jump = n * m.jump_kernel.total_integral() if m.jump_kernel is not None else 0.0
    total = r_coal + r_jump
    if total <= 0:
        return c, math.inf, "reject"
    wait = rng.exponential(1.0 / total)
    x = c.positions

    if rng.uniform(0.0, total) < r_coal:
        e = int(np.searchsorted(np.cumsum(rates), rng.uniform(0.0, r_coal), side="right"))
        e = min(e, rates.size - 1)
        a, b = int(pi[e]), int(pj[e])
        z, yb = _merge_target(float(x[a]), float(seps[e]), m.coalescence, c.P)
        new = np.append(np.delete(x, [a, b]), _wrap(z, c.P))
        if check:
            if new.size != n - 1:
                raise InvariantViolation("coalescence must remove exactly one particle")
            if m.coalescence == LOG_MASS and 0.0 <= yb < c.P and 0.0 <= z < c.P:
                before = math.exp(x[a]) + math.exp(x[b])
                if not math.isclose(math.exp(z), before, rel_tol=1e-12):
                    raise InvariantViolation("log-sum coalescence changed the total mass")
        return Configuration(new, c.P, rng), wait, "coalesce"

    mover = int(rng.integers(n))
    target = float(_wrap(x[mover] + sample_displacement(m.jump_kernel, rng), c.P))
    if rng.uniform() >= jump_acceptance(c, mover, target, m.repulsion):
        return c, wait, "reject"
    new = x.copy()
    new[mover] = target
    if check and new.size != n:
        raise InvariantViolation("a jump must keep the particle count")
    return Configuration(new, c.P, rng), wait, "jump"


def simulate(c: Configuration, m: ModelConfig, t: float, check: bool = True) -> tuple[Configuration, dict]:
    """Run events until time ``t``; returns the state at ``t`` and event counts."""
    counts = {"coalesce": 0, "jump": 0, "reject": 0}
    clock = 0.0
    while c.n > 0:
        nxt, wait, kind = gillespie_step(c, m, check)
        if clock + wait > t:
            break
        clock += wait
        counts[kind] += 1
        c = nxt
    return c, counts


@dataclass
class EnsembleResult:
    bin_center: np.ndarray
    mean_density: np.ndarray
    stderr: np.ndarray
    replicas: int

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(MC_HEADER + "\n")
            for row in zip(self.bin_center, self.mean_density, self.stderr):
                fh.write(",".join(f"{v:.12g}" for v in row) + "\n")


def _replica_counts(args) -> np.ndarray:
    m, rho0, P, t, edges, seed, replica = args
    rng = np.random.default_rng(np.random.SeedSequence([seed, replica]))
    c = sample_poisson_initial(rho0, P, rng)
    c, _ = simulate(c, m, t)
    return np.histogram(c.positions, bins=edges)[0]


def ensemble_density(
    m: ModelConfig,
    rho0: Intensity,
    P: float,
    t: float,
    replicas: int,
    bins: int = 20,
    seed: int = 0,
    workers: int = 1,
) -> EnsembleResult:
    """Binned mean density over independent replicas.

    Replica ``r`` draws from ``SeedSequence([seed, r])``, so the result does
    not depend on ``workers``.  A callable ``rho0`` must be picklable when
    ``workers > 1``.
    """
    if replicas < 1:
        raise ValueError("replicas must be >= 1")
    edges = np.linspace(0.0, P, bins + 1)
    jobs = [(m, rho0, P, t, edges, seed, r) for r in range(replicas)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            counts = np.array(list(pool.map(_replica_counts, jobs, chunksize=max(1, replicas // (4 * workers)))))
    else:
        counts = np.array([_replica_counts(j) for j in jobs])
    width = P / bins
    dens = counts / width
    mean = dens.mean(axis=0)
    err = dens.std(axis=0, ddof=1) / math.sqrt(replicas) if replicas > 1 else np.zeros(bins)
    return EnsembleResult(0.5 * (edges[:-1] + edges[1:]), mean, err, replicas)
