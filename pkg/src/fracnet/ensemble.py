"""Random cyclic networks with prescribed geometric-mean gains, and their poles."""

from __future__ import annotations

import functools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

from fracnet.core import (
    CyclicSpec,
    FracnetError,
    InfeasibleError,
    StabilityVerdict,
    ValidationError,
    compile_cyclic,
)
from fracnet.spectral import eigenvalues, uniform_cyclic_poles
from fracnet.stability import matignon_verdict

RNG_ALGORITHM = "numpy.PCG64"
#: below this rejection acceptance rate the sampler switches to hit-and-run
MIN_ACCEPTANCE = 1.0e-3

T = TypeVar("T")
R = TypeVar("R")


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("FRACNET_THREADS", "1")))
    except ValueError:
        return 1


def parallel_map(fn: Callable[[T], R], items: Sequence[T]) -> list[R]:
    """Order-preserving map, threaded when ``FRACNET_THREADS > 1``."""
    nthreads = thread_count()
    if nthreads == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=nthreads) as pool:
        return list(pool.map(fn, items))


# {{{ constrained sampling

@functools.lru_cache(maxsize=64)
def _acceptance_rate(n: int, target_sum: float, theta: float) -> float:
    # private pilot stream so the caller's generator is not consumed
    pilot = np.random.Generator(np.random.PCG64(0x5EED))
    draws = pilot.uniform(-theta, theta, size=(20000, n - 1))
    last = target_sum - draws.sum(axis=1)
    return float(np.mean(np.abs(last) <= theta))


def _rejection(n: int, target_sum: float, theta: float,
               rng: np.random.Generator) -> np.ndarray:
    while True:
        head = rng.uniform(-theta, theta, size=n - 1)
        last = target_sum - math.fsum(head)
        if abs(last) <= theta:
            return np.append(head, last)


def _hit_and_run(n: int, target_sum: float, theta: float,
                 rng: np.random.Generator) -> np.ndarray:
    v = np.full(n, target_sum / n)
    nsteps = max(200, 30 * n)
    dirs = rng.standard_normal((nsteps, n))
    dirs -= dirs.mean(axis=1, keepdims=True)
    u = rng.random(nsteps)
    for d, ui in zip(dirs, u):
        with np.errstate(divide="ignore", invalid="ignore"):
            r1 = (-theta - v) / d
            r2 = (theta - v) / d
        tmin = np.fmin(r1, r2).max()
        tmax = np.fmax(r1, r2).min()
        v = np.clip(v + (tmin + ui * (tmax - tmin)) * d, -theta, theta)

    # move the rounding residue onto the coordinate with the most slack
    resid = target_sum - math.fsum(v)
    i = int(np.argmax(theta - np.abs(v)))
    v[i] += resid
    return v


def sample_log_fixed_sum(n: int, target_sum: float, theta: float,
                         rng: np.random.Generator) -> np.ndarray:
    """Uniform sample from ``{v in [-theta, theta]^n : sum(v) = target_sum}``.

    Rejection sampling (draw ``n - 1`` coordinates, close the sum with the
    last) with a hit-and-run fallback when acceptance is below
    :data:`MIN_ACCEPTANCE`.
    """
    if n < 1 or theta < 0:
        raise ValidationError("need n >= 1 and theta >= 0")
    if abs(target_sum) > n * theta * (1.0 + 1.0e-12):
        raise InfeasibleError(
            f"|target_sum| = {abs(target_sum):.6g} exceeds n * theta = {n * theta:.6g}")

    if n == 1:
        return np.array([float(target_sum)])
    if theta == 0.0:
        return np.zeros(n)

    if _acceptance_rate(n, float(target_sum), float(theta)) >= MIN_ACCEPTANCE:
        return _rejection(n, target_sum, theta, rng)
    return _hit_and_run(n, target_sum, theta, rng)


def sampler_method(n: int, target_sum: float, theta: float) -> str:
    if n == 1 or theta == 0.0:
        return "forced"
    rate = _acceptance_rate(n, float(target_sum), float(theta))
    return "rejection" if rate >= MIN_ACCEPTANCE else "hit-and-run"

# }}}


# {{{ ensembles

@dataclass(frozen=True)
class EnsembleConfig:
    count: int
    n: int
    alpha: float
    gamma: float
    theta: float
    seed: int

    def __post_init__(self) -> None:
        if self.count < 0 or self.n < 2:
            raise ValidationError("need count >= 0 and n >= 2")
        if self.gamma <= 0 or self.theta < 0:
            raise ValidationError("need gamma > 0 and theta >= 0")
        if abs(math.log(self.gamma)) > self.theta * (1.0 + 1.0e-12):
            raise InfeasibleError(
                f"|log gamma| = {abs(math.log(self.gamma)):.6g} exceeds "
                f"theta = {self.theta:.6g}; no gains satisfy the bounds")

    def metadata(self) -> dict:
        return {
            "count": self.count, "n": self.n, "alpha": self.alpha,
            "gamma": self.gamma, "theta": self.theta, "seed": self.seed,
            "rng": RNG_ALGORITHM,
            "sampler_a": sampler_method(self.n, 0.0, self.theta),
            "sampler_c": sampler_method(
                self.n, self.n * math.log(self.gamma), self.theta),
        }


def generate_ensemble(cfg: EnsembleConfig) -> list[CyclicSpec]:
    """``cfg.count`` loops with ``prod(a) = 1`` and ``prod(c) = gamma**n``."""
    rng = make_rng(cfg.seed)
    c_sum = cfg.n * math.log(cfg.gamma)
    specs = []
    for _ in range(cfg.count):
        log_a = sample_log_fixed_sum(cfg.n, 0.0, cfg.theta, rng)
        log_c = sample_log_fixed_sum(cfg.n, c_sum, cfg.theta, rng)
        specs.append(CyclicSpec(np.exp(log_a), np.exp(log_c), cfg.alpha))
    return specs


@dataclass(frozen=True)
class PoleRecord:
    system_id: int
    k: int
    re: float
    im: float
    #: ``|arg(lambda)| - alpha pi / 2``; negative inside the unstable wedge
    arg_margin: float

    @property
    def value(self) -> complex:
        return complex(self.re, self.im)


@dataclass(frozen=True)
class PoleCloud:
    records: tuple[PoleRecord, ...]
    alpha: float
    failures: dict[int, str] = field(default_factory=dict)

    def poles(self) -> np.ndarray:
        return np.array([r.value for r in self.records])

    def by_system(self) -> dict[int, list[PoleRecord]]:
        out: dict[int, list[PoleRecord]] = {}
        for r in self.records:
            out.setdefault(r.system_id, []).append(r)
        return out


def _spectrum_of(spec: CyclicSpec):
    try:
        return eigenvalues(compile_cyclic(spec).A)
    except FracnetError as exc:
        return exc


def pole_cloud(specs: Sequence[CyclicSpec]) -> PoleCloud:
    """All poles of all loops; eigensolver failures are recorded, not raised."""
    if not specs:
        return PoleCloud((), math.nan)
    alpha = specs[0].alpha
    half = alpha * math.pi / 2.0

    records = []
    failures = {}
    for sid, spectrum in enumerate(parallel_map(_spectrum_of, list(specs))):
        if isinstance(spectrum, Exception):
            failures[sid] = str(spectrum)
            continue
        for k, (z, arg) in enumerate(zip(spectrum.eigenvalues, spectrum.args)):
            records.append(PoleRecord(sid, k, float(z.real), float(z.imag),
                                      float(abs(arg) - half)))
    return PoleCloud(tuple(records), alpha, failures)


def ensemble_verdicts(specs: Sequence[CyclicSpec]) -> list[StabilityVerdict]:
    return parallel_map(lambda s: matignon_verdict(compile_cyclic(s)), list(specs))


def pole_dispersion(specs: Iterable[CyclicSpec]) -> float:
    """Mean squared distance from each pole to its nearest uniform-loop pole.

    The reference loop of a spec has ``a = a_geo`` and ``c = c_geo``.
    """
    dist2 = []
    for spec in specs:
        poles = eigenvalues(compile_cyclic(spec).A).eigenvalues
        ref = uniform_cyclic_poles(spec.n, spec.a_geo, spec.c_geo).eigenvalues
        d = np.abs(poles[:, None] - ref[None, :]).min(axis=1)
        dist2.append(d**2)
    return float(np.mean(np.concatenate(dist2)))

# }}}
