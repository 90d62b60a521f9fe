"""Matignon stability test and the fractional secant criterion for cyclic loops."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from fracnet.core import (
    CyclicSpec,
    FractionalSystem,
    StabilityKind,
    StabilityVerdict,
    ValidationError,
    check_system,
    json_float,
)
from fracnet.spectral import eigenvalues

#: eigenvalues within this many radians of the critical rays are "on" them
ARG_TOL = 1.0e-9
#: relative spread of a_i below which the loop counts as uniform
UNIFORM_RTOL = 1.0e-9


def _geometric_multiplicity(A: np.ndarray, lam: complex, scale: float) -> int:
    n = A.shape[0]
    s = np.linalg.svd(A - lam * np.eye(n), compute_uv=False)
    return int(np.sum(s <= 1.0e-8 * scale))


def _cluster(values: Sequence[complex], tol: float) -> list[list[complex]]:
    clusters: list[list[complex]] = []
    for z in values:
        for cl in clusters:
            if abs(cl[0] - z) <= tol:
                cl.append(z)
                break
        else:
            clusters.append([z])
    return clusters


def matignon_verdict(sys: FractionalSystem) -> StabilityVerdict:
    r"""Classify :math:`D^\alpha x = A x` by the arguments of the eigenvalues of ``A``.

    Asymptotically stable iff every eigenvalue has
    :math:`|\arg\lambda| > \alpha\pi/2`. Eigenvalues within :data:`ARG_TOL`
    of the rays (and exact zeros, whose argument is undefined) are critical;
    the system is then marginally stable when each critical eigenvalue has
    equal algebraic and geometric multiplicity, and unstable otherwise.
    """
    check_system(sys)
    A = sys.A
    spec = eigenvalues(A)
    ev, args = spec.eigenvalues, spec.args
    half = sys.alpha * np.pi / 2.0

    scale = max(1.0, float(np.linalg.norm(A, 2)))
    is_zero = np.abs(ev) <= 1.0e-12 * scale
    gap = np.abs(args) - half
    gap = np.where(is_zero, 0.0, gap)

    i = int(np.argmin(gap))
    margin = float(gap[i])
    witness = complex(ev[i])

    if np.any(gap < -ARG_TOL):
        return StabilityVerdict(StabilityKind.Unstable, margin, witness)

    critical = [complex(z) for z in ev[np.abs(gap) <= ARG_TOL]]
    if not critical:
        return StabilityVerdict(StabilityKind.AsymptoticallyStable, margin, witness)

    for cl in _cluster(critical, tol=1.0e-6 * scale):
        lam = complex(np.mean(cl))
        if _geometric_multiplicity(A, lam, scale) != len(cl):
            return StabilityVerdict(
                StabilityKind.Unstable, margin, witness, tuple(critical))

    return StabilityVerdict(
        StabilityKind.MarginallyStable, margin, witness, tuple(critical))


# {{{ secant criterion

def secant_bound(n: int, alpha: float) -> float:
    r"""Largest admissible :math:`\gamma = \mathfrak{c} / \mathfrak{a}`,

    .. math::

        \frac{\sin(\alpha\pi/2)}{\sin(\alpha\pi/2 - \pi/n)},

    or ``inf`` when :math:`\alpha \le 2/n` (stable for every gain).
    """
    if n < 2:
        raise ValidationError(f"n must be >= 2, got {n}")
    if not (0.0 < alpha < 2.0):
        raise ValidationError(f"alpha must lie in (0, 2), got {alpha}")

    if alpha * n <= 2.0:
        return math.inf

    half = alpha * math.pi / 2.0
    denom = math.sin(half - math.pi / n)
    if denom <= 0.0:
        # alpha n rounds just above 2
        return math.inf
    return math.sin(half) / denom


def uniform_stability_limit(n: int, alpha: float) -> float:
    r"""Exact supremum of stable :math:`\gamma` for a uniform loop.

    Pole ``k`` sits at angle :math:`\theta_k = \pi/n + 2\pi k/n` on the
    circle about ``-a``; it reaches the ray :math:`\arg z = \alpha\pi/2`
    when :math:`\gamma = \sin(\alpha\pi/2) / \sin(\alpha\pi/2 - \theta_k)`.
    The minimum over ``k`` coincides with :func:`secant_bound` for
    :math:`\alpha \le 1`, but for larger orders a pole with ``k > 0`` can
    cross first, and then the secant formula overstates the limit.
    """
    bound = secant_bound(n, alpha)
    if math.isinf(bound):
        return bound

    half = alpha * math.pi / 2.0
    out = bound
    for k in range(1, n):
        theta = math.pi * (2 * k + 1) / n
        if theta >= half:
            break
        out = min(out, math.sin(half) / math.sin(half - theta))
    return out


class SecantRegime(enum.Enum):
    AlwaysStable = "always_stable"
    Conditional = "conditional"


@dataclass(frozen=True)
class SecantAssessment:
    gamma: float
    bound: float
    regime: SecantRegime
    sufficient_pass: bool
    #: the criterion is also necessary (all ``a_i`` equal)
    necessary_applicable: bool
    #: exact stability limit of the uniform loop with the same ``n, alpha``;
    #: below ``bound`` only for orders above one (see
    #: :func:`uniform_stability_limit`)
    uniform_limit: float = math.inf

    @property
    def bound_exceeds_uniform_limit(self) -> bool:
        return self.uniform_limit < self.bound * (1.0 - 1.0e-12)

    @property
    def on_boundary(self) -> bool:
        return math.isfinite(self.bound) and math.isclose(
            self.gamma, self.bound, rel_tol=1.0e-12)

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "bound": json_float(self.bound),
            "regime": self.regime.value,
            "sufficient_pass": self.sufficient_pass,
            "necessary_applicable": self.necessary_applicable,
            "uniform_limit": json_float(self.uniform_limit),
            "bound_exceeds_uniform_limit": self.bound_exceeds_uniform_limit,
        }


def assess_cyclic(spec: CyclicSpec) -> SecantAssessment:
    errors = spec.violations()
    if errors:
        raise ValidationError("; ".join(errors))

    bound = secant_bound(spec.n, spec.alpha)
    regime = (SecantRegime.AlwaysStable if math.isinf(bound)
              else SecantRegime.Conditional)
    gamma = spec.gamma

    return SecantAssessment(
        gamma=gamma,
        bound=bound,
        regime=regime,
        sufficient_pass=(regime is SecantRegime.AlwaysStable or gamma < bound),
        necessary_applicable=max(spec.a) / min(spec.a) - 1.0 <= UNIFORM_RTOL,
        uniform_limit=uniform_stability_limit(spec.n, spec.alpha),
    )


def bound_curve(n: int, alpha_grid: Sequence[float]) -> list[tuple[float, float]]:
    """Tabulate :func:`secant_bound` over *alpha_grid* (``inf`` left of ``2/n``)."""
    return [(float(a), secant_bound(n, float(a))) for a in alpha_grid]


def asymptote(n: int) -> float:
    """Order below which the loop is stable for any gain."""
    return 2.0 / n

# }}}
