"""Time-domain oracles: Grünwald-Letnikov integration and Mittag-Leffler values."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import mpmath
import numpy as np
import scipy.integrate
import scipy.linalg
from scipy.signal import fftconvolve

from fracnet.core import (
    AccuracyError,
    FracnetError,
    FractionalSystem,
    H2Method,
    H2Report,
    UnstableSystemError,
    ValidationError,
    check_system,
)
from fracnet.robustness import centering_matrix
from fracnet.spectral import Laplacian, require_connected

#: state norm above which a trajectory is declared divergent
OVERFLOW_GUARD = 1.0e12
_LEAF = 64


class HorizonTooShortError(FracnetError):
    def __init__(self, message: str, suggested_T: float) -> None:
        super().__init__(message)
        self.suggested_T = suggested_T


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    #: shape ``(len(times), n)``
    states: np.ndarray
    alpha: float
    diverged: bool = False
    divergence_time: float | None = None

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def gl_weights(alpha: float, K: int) -> np.ndarray:
    """Grünwald-Letnikov weights ``(-1)^j binom(alpha, j)`` for ``j = 0..K``."""
    w = np.empty(K + 1)
    w[0] = 1.0
    if K:
        w[1:] = np.cumprod(1.0 - (alpha + 1.0) / np.arange(1, K + 1))
    return w


class _Diverged(Exception):
    def __init__(self, k: int) -> None:
        self.k = k


def gl_integrate(
        sys: FractionalSystem,
        x0: np.ndarray | None = None,
        input: Callable[[float], np.ndarray] | np.ndarray | None = None,
        h: float = 1.0e-2,
        T: float = 10.0,
        ) -> Trajectory:
    r"""Integrate :math:`D^\alpha x = A x + B u` with the implicit G-L scheme.

    The Caputo derivative is discretized as the Grünwald-Letnikov difference
    of :math:`x - x_0` (and :math:`x'(0) = 0` for :math:`\alpha > 1`), i.e.

    .. math::

        h^{-\alpha} \sum_{j=0}^{k} w_j (x_{k-j} - x_0) = A x_k + B u(t_k).

    The whole history is kept; the history sums are accumulated by an online
    divide-and-conquer FFT convolution.

    :arg input: ``None`` (no input), a callable ``u(t)`` or an array of shape
        ``(K + 1, m)`` with one row per grid point.
    """
    check_system(sys)
    if h <= 0 or T < h:
        raise ValidationError(f"need h > 0 and T >= h (got h={h}, T={T})")

    n, m = sys.n, sys.B.shape[1]
    K = int(round(T / h))
    times = h * np.arange(K + 1)
    x0 = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).ravel()
    if x0.size != n:
        raise ValidationError(f"x0 has {x0.size} entries, expected {n}")

    if input is None:
        forcing = np.zeros((K + 1, n))
    elif callable(input):
        U = np.array([np.atleast_1d(input(t)) for t in times], dtype=float)
        forcing = U @ sys.B.T
    else:
        U = np.asarray(input, dtype=float).reshape(K + 1, m)
        forcing = U @ sys.B.T

    alpha = sys.alpha
    ha = h ** (-alpha)
    w = gl_weights(alpha, K)
    lu = scipy.linalg.lu_factor(ha * np.eye(n) - sys.A)
    rhs0 = sys.A @ x0

    # y = x - x0; hist[k] = sum_{i<k} w_{k-i} y_i
    y = np.zeros((K + 1, n))
    hist = np.zeros((K + 1, n))

    def step(k: int) -> None:
        y[k] = scipy.linalg.lu_solve(lu, rhs0 + forcing[k] - ha * hist[k])
        if not np.all(np.isfinite(y[k])) or \
                np.linalg.norm(y[k] + x0) > OVERFLOW_GUARD:
            raise _Diverged(k)

    def solve(lo: int, hi: int) -> None:
        if hi - lo <= _LEAF:
            for k in range(lo, hi):
                if k > lo:
                    hist[k] += w[k - lo:0:-1] @ y[lo:k]
                if k > 0:
                    step(k)
            return

        mid = (lo + hi) // 2
        solve(lo, mid)
        conv = fftconvolve(y[lo:mid], w[:hi - lo, None], axes=0)
        hist[mid:hi] += conv[mid - lo:hi - lo]
        solve(mid, hi)

    diverged_at = None
    try:
        solve(0, K + 1)
    except _Diverged as exc:
        diverged_at = exc.k

    if diverged_at is not None:
        kk = diverged_at + 1
        return Trajectory(times[:kk], y[:kk] + x0, alpha,
                          diverged=True, divergence_time=float(times[diverged_at]))

    return Trajectory(times, y + x0, alpha)


# {{{ Mittag-Leffler

_SERIES_MAX_LOGTERM = 700.0


def _ml_logterm(alpha: float, beta: float, k: int, log_abs_z: float) -> float:
    x = alpha * k + beta
    if x <= 0 and x == math.floor(x):
        return -math.inf
    return k * log_abs_z - math.lgamma(x)


def _ml_series(alpha: float, beta: float, z: complex) -> complex:
    """Power series summed in extended precision sized to the largest term."""
    az = abs(z)
    if az == 0:
        return complex(mpmath.rgamma(beta))
    log_abs_z = math.log(az)

    # locate the peak term (near alpha k ~ |z|^(1/alpha))
    k_peak = az ** (1.0 / alpha) / alpha
    logmax, k = -math.inf, 0
    while True:
        t = _ml_logterm(alpha, beta, k, log_abs_z)
        logmax = max(logmax, t)
        if k > k_peak + 10 and t < logmax - 10.0:
            break
        k += 1
    if logmax > _SERIES_MAX_LOGTERM:
        raise AccuracyError(
            f"Mittag-Leffler series needs ~{logmax / math.log(10):.0f} guard digits")

    guard = max(logmax, 0.0) + 3.0 * max(log_abs_z, 0.0)
    dps = 25 + int(guard / math.log(10))
    cutoff = max(logmax, 0.0) - (dps + 5) * math.log(10)

    kend = k
    while _ml_logterm(alpha, beta, kend, log_abs_z) > cutoff or kend < 3:
        kend += 1

    with mpmath.workdps(dps):
        zz = mpmath.mpmathify(z)
        a, b = mpmath.mpf(alpha), mpmath.mpf(beta)
        total, zk = mpmath.mpf(0), mpmath.mpf(1)
        for k in range(kend + 1):
            total += zk * mpmath.rgamma(a * k + b)
            zk *= zz
        return complex(total)


def _ml_poles(alpha: float, z: complex) -> list[complex]:
    """Roots of ``s**alpha = z`` on the principal sheet ``|arg s| < pi``."""
    r = abs(z) ** (1.0 / alpha)
    phi = math.atan2(z.imag, z.real)
    out = []
    nu_max = int(math.ceil(alpha / 2.0)) + 1
    for nu in range(-nu_max, nu_max + 1):
        theta = phi + 2.0 * math.pi * nu
        if abs(theta) < alpha * math.pi:
            out.append(r * complex(math.cos(theta / alpha), math.sin(theta / alpha)))
    return out


def _ml_pole_cut_distance(alpha: float, z: complex) -> float:
    phi = math.atan2(z.imag, z.real)
    nu_max = int(math.ceil(alpha / 2.0)) + 1
    return min(abs(abs(phi + 2.0 * math.pi * nu) - alpha * math.pi)
               for nu in range(-nu_max, nu_max + 1))


def _ml_contour(alpha: float, beta: float, z: complex) -> complex:
    r"""Inverse Laplace transform of :math:`s^{\alpha-\beta}/(s^\alpha - z)`:
    residues at the poles plus the integral along both banks of the branch cut.
    """
    residues = sum(s ** (1.0 - beta) * np.exp(s) for s in _ml_poles(alpha, z)) / alpha

    ep = np.exp(1j * np.pi * (alpha - beta))
    ea = np.exp(1j * np.pi * alpha)

    def cut(r: float) -> complex:
        if r == 0.0:
            return 0.0j
        ra = r**alpha
        g = ep / (ra * ea - z) - np.conj(ep) / (ra * np.conj(ea) - z)
        return -math.exp(-r) * r ** (alpha - beta) * g / (2j * np.pi)

    r0 = abs(z) ** (1.0 / alpha)
    pieces = [(0.0, r0), (r0, math.inf)] if r0 > 0 else [(0.0, math.inf)]
    total = 0.0j
    err = 0.0
    for lo, hi in pieces:
        re, e_re = scipy.integrate.quad(lambda r: cut(r).real, lo, hi,
                                        epsabs=0.0, epsrel=1.0e-13, limit=400)
        im, e_im = scipy.integrate.quad(lambda r: cut(r).imag, lo, hi,
                                        epsabs=0.0, epsrel=1.0e-13, limit=400)
        total += complex(re, im)
        err += e_re + e_im

    value = complex(residues + total)
    if err > 1.0e-10 * max(abs(value), 1.0e-300):
        raise AccuracyError(f"branch-cut quadrature error {err:.2e} too large")
    return value


def mittag_leffler(alpha: float, beta: float, z: complex) -> complex:
    r"""Two-parameter Mittag-Leffler function
    :math:`E_{\alpha,\beta}(z) = \sum_k z^k / \Gamma(\alpha k + \beta)`.

    The power series (in extended precision) is used for ``|z| <= 10``.
    Beyond that the Laplace-inversion representation is evaluated: residues
    at the roots of :math:`s^\alpha = z` plus the branch-cut integral, which
    requires :math:`\beta < 1 + \alpha` and no root close to the cut;
    otherwise the series is used if its cancellation is manageable.
    Raises :class:`AccuracyError` when neither route applies.
    """
    if alpha <= 0:
        raise ValidationError(f"alpha must be positive, got {alpha}")
    z = complex(z)
    alpha, beta = float(alpha), float(beta)

    az = abs(z)
    if az <= 10.0:
        try:
            return _ml_series(alpha, beta, z)
        except AccuracyError:
            pass

    contour_ok = (alpha < 2.0 and beta < 1.0 + alpha
                  and _ml_pole_cut_distance(alpha, z) > 0.05)
    if contour_ok:
        return _ml_contour(alpha, beta, z)

    return _ml_series(alpha, beta, z)

# }}}


# {{{ energies and limits

def _tail_estimate(y_last: np.ndarray, T: float, alpha: float) -> float:
    # impulse responses decay like t^(-alpha-1), so |y|^2 ~ t^(-2 alpha - 2)
    return float(np.sum(y_last**2)) * T / (2.0 * alpha + 1.0)


def _pulse_energy(sys: FractionalSystem, i: int, h: float, T: float):
    K = int(round(T / h))
    U = np.zeros((K + 1, sys.B.shape[1]))
    U[1, i] = 1.0 / h
    traj = gl_integrate(sys, None, U, h=h, T=K * h)
    if traj.diverged:
        raise UnstableSystemError(
            f"impulse response diverged at t = {traj.divergence_time:.4g}")
    Y = traj.states @ sys.C.T
    energy = h * math.fsum(np.sum(Y[1:] ** 2, axis=1))
    return energy, _tail_estimate(Y[-1], K * h, sys.alpha)


def impulse_energy(sys: FractionalSystem, h: float = 1.0e-3,
                   T: float = 40.0) -> H2Report:
    r"""Squared H2 norm as the output energy of unit impulses at each input.

    The impulse is a rectangular pulse of width ``h`` and height ``1/h``.
    The error estimate is the change under step doubling plus the estimated
    energy beyond ``T``.
    """
    check_system(sys)
    if sys.alpha <= 0.5:
        return H2Report(math.inf, H2Method.TimeDomain, 0.0)

    fine = coarse = tail = 0.0
    for i in range(sys.B.shape[1]):
        e_fine, t_fine = _pulse_energy(sys, i, h, T)
        e_coarse, _ = _pulse_energy(sys, i, 2.0 * h, T)
        fine += e_fine
        coarse += e_coarse
        tail += t_fine

    total = fine + tail
    if tail > 0.01 * total:
        suggested = T * 1.5 * (tail / (0.01 * total)) ** (1.0 / (2.0 * sys.alpha + 1.0))
        raise HorizonTooShortError(
            f"energy beyond T={T:g} is {tail / total:.1%} of the total; "
            f"try T >= {suggested:.3g}", suggested)

    return H2Report(total, H2Method.TimeDomain, abs(fine - coarse) + tail)


@dataclass(frozen=True)
class ConsensusLimit:
    limit: np.ndarray
    #: distance of the limit estimate from span{1}
    residual: float
    #: initial average x̄(0)
    initial_mean: float
    #: measured mean of the limit divided by x̄(0)
    prefactor: float
    alpha: float

    @property
    def candidates(self) -> dict[str, float]:
        """Deviation of the measured limit from the two candidate limits."""
        n = self.limit.size
        ones = np.ones(n)
        return {
            "mean": float(np.linalg.norm(self.limit - self.initial_mean * ones)),
            "mean_over_alpha": float(np.linalg.norm(
                self.limit - self.initial_mean / self.alpha * ones)),
        }

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "limit": self.limit.tolist(),
            "residual": self.residual,
            "initial_mean": self.initial_mean,
            "measured_prefactor": self.prefactor,
            "candidate_prefactors": {"mean": 1.0, "mean_over_alpha": 1.0 / self.alpha},
            "deviation_from_candidates": self.candidates,
        }

    def __iter__(self):
        return iter((self.limit, self.residual))


def consensus_limit(L: Laplacian, x0: np.ndarray, alpha: float, T: float,
                    h: float | None = None, window: float = 0.1) -> ConsensusLimit:
    """Simulate the noiseless consensus network and measure its limit.

    The limit estimate is the time average over the last ``window`` fraction
    of ``[0, T]``.
    """
    require_connected(L)
    x0 = np.asarray(x0, dtype=float).ravel()
    if h is None:
        h = T / 20000.0

    n = L.n
    sys = FractionalSystem(-L.matrix, np.eye(n), centering_matrix(n), alpha)
    traj = gl_integrate(sys, x0, None, h=h, T=T)
    if traj.diverged:
        raise UnstableSystemError("consensus trajectory diverged")

    start = int(math.floor((1.0 - window) * (traj.times.size - 1)))
    limit = traj.states[start:].mean(axis=0)
    mean0 = float(np.mean(x0))
    residual = float(np.linalg.norm(limit - limit.mean()))
    prefactor = float(limit.mean() / mean0) if mean0 != 0 else math.nan

    return ConsensusLimit(limit, residual, mean0, prefactor, alpha)

# }}}
