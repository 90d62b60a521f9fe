"""Eigenvalue machinery: dense spectra, Laplacians, closed-form cyclic poles."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.sparse.csgraph import connected_components

from fracnet.core import (
    DisconnectedGraphError,
    EigenSolverError,
    Spectrum,
    ValidationError,
    WeightedGraph,
)


def _pair_conjugates(ev: np.ndarray) -> np.ndarray:
    """Make non-real eigenvalues of a real matrix come in exact conjugate pairs.

    LAPACK already returns exact pairs for real input; this only repairs
    tiny asymmetries (e.g. from inputs that were cast through complex).
    """
    ev = ev.copy()
    upper = np.flatnonzero(ev.imag > 0)
    lower = np.flatnonzero(ev.imag < 0)
    if upper.size != lower.size:
        raise EigenSolverError("eigenvalues of a real matrix are not conjugate-closed")
    if upper.size == 0:
        return ev

    cost = np.abs(ev[upper][:, None] - np.conj(ev[lower])[None, :])
    rows, cols = linear_sum_assignment(cost)
    for r, c in zip(rows, cols):
        z = 0.5 * (ev[upper[r]] + np.conj(ev[lower[c]]))
        ev[upper[r]] = z
        ev[lower[c]] = np.conj(z)
    return ev


def eigenvalues(A: np.ndarray) -> Spectrum:
    """All eigenvalues of a real square matrix.

    Uses LAPACK's Hessenberg reduction plus shifted QR (``dgeev``).
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValidationError("matrix has non-finite entries")

    try:
        ev = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(f"eigensolver did not converge: {exc}") from exc

    return Spectrum(_pair_conjugates(np.asarray(ev, dtype=complex)))


def uniform_cyclic_poles(n: int, a: float, c_geo: float) -> Spectrum:
    r"""Poles of the uniform cyclic loop,
    :math:`\lambda_k = -a + c e^{j(\pi/n + 2\pi k/n)}`.
    """
    if n < 2 or a <= 0 or c_geo <= 0:
        raise ValidationError("need n >= 2, a > 0 and c_geo > 0")

    # k and n-1-k are conjugates; build the upper half and mirror it so the
    # pairing is exact and the k = (n-1)/2 pole (odd n) is exactly real
    k = np.arange(n // 2)
    theta = np.pi * (2 * k + 1) / n
    upper = -a + c_geo * (np.cos(theta) + 1j * np.sin(theta))
    poles = np.concatenate([upper, np.conj(upper)])
    if n % 2:
        poles = np.append(poles, complex(-a - c_geo, 0.0))
    return Spectrum(poles)


def match_multisets(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Optimal one-to-one matching of two point sets under ``|x - y|``.

    Returns the matched absolute differences, one per element.
    """
    x = np.asarray(x, dtype=complex).ravel()
    y = np.asarray(y, dtype=complex).ravel()
    if x.size != y.size:
        raise ValueError(f"size mismatch: {x.size} != {y.size}")

    cost = np.abs(x[:, None] - y[None, :])
    rows, cols = linear_sum_assignment(cost)
    return cost[rows, cols]


def multisets_close(x: np.ndarray, y: np.ndarray, rtol: float = 1.0e-9) -> bool:
    """Tolerance-matched multiset equality, with ``rtol`` scaled by ``max(1, |y|)``."""
    x = np.asarray(x, dtype=complex).ravel()
    y = np.asarray(y, dtype=complex).ravel()
    if x.size != y.size:
        return False
    scale = max(1.0, float(np.max(np.abs(y), initial=0.0)))
    return bool(np.all(match_multisets(x, y) <= rtol * scale))


# {{{ Laplacians

@dataclass(frozen=True)
class Laplacian:
    """Graph Laplacian ``L = Delta - W`` with its sorted real spectrum."""

    matrix: np.ndarray
    spectrum: np.ndarray
    connected: bool

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def algebraic_connectivity(self) -> float:
        return float(self.spectrum[1]) if self.n > 1 else 0.0

    @property
    def nonzero_spectrum(self) -> np.ndarray:
        """``lambda_2 .. lambda_n`` (requires a connected graph)."""
        require_connected(self)
        return self.spectrum[1:]


def laplacian(g: WeightedGraph) -> Laplacian:
    W = g.adjacency()
    L = np.diag(W.sum(axis=1)) - W

    spectrum = np.linalg.eigvalsh(L)
    # L is PSD; clip rounding noise around the zero eigenvalue
    spectrum = np.sort(np.maximum(spectrum, 0.0))
    spectrum[0] = 0.0

    ncomp, _ = connected_components(W != 0, directed=False)

    L.flags.writeable = False
    spectrum.flags.writeable = False
    return Laplacian(L, spectrum, connected=(ncomp == 1))


def require_connected(L: Laplacian) -> Laplacian:
    if not L.connected:
        raise DisconnectedGraphError(
            f"graph is disconnected (lambda_2 = {L.algebraic_connectivity:.3g})")
    return L


def spectral_zeta(L: Laplacian, q: float) -> float:
    r"""Spectral zeta value :math:`(\sum_{i \ge 2} \lambda_i^q)^{1/q}`."""
    if q < 1:
        raise ValidationError(f"order q must be >= 1, got {q}")

    lam = L.nonzero_spectrum
    return math.fsum(lam**q) ** (1.0 / q)

# }}}
