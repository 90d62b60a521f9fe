r"""Squared H2 norms of commensurate fractional systems.

The squared norm is

.. math::

    \rho(\Sigma, \alpha) = \frac{1}{2\pi} \int_{-\infty}^{\infty}
        \operatorname{tr}\left[G^*(j\omega) G(j\omega)\right] \,\mathrm{d}\omega,
    \qquad G(s) = C (s^\alpha I - A)^{-1} B.

For normal ``A`` with ``B = C = I`` each eigenvalue contributes
independently. Writing :math:`-\lambda = r e^{j\phi}`, :math:`m = 1/\alpha - 1`
and :math:`\beta = 2 - 1/\alpha`, one mode contributes

.. math::

    \frac{r^{-\beta}}{2 \alpha \sin(\pi m)} \left[
        \frac{\sin(m \theta_-)}{\sin\theta_-} + \frac{\sin(m \theta_+)}{\sin\theta_+}
    \right], \qquad \theta_\pm = \frac{\alpha\pi}{2} \pm \phi,

which is finite for :math:`1/2 < \alpha < 2` and tends to
:math:`1 / (2 \operatorname{Re}(-\lambda))` as :math:`\alpha \to 1`.
"""

from __future__ import annotations

import math

import numpy as np

from fracnet.core import (
    CyclicSpec,
    FracnetError,
    FractionalSystem,
    H2Method,
    H2Report,
    NotNormalError,
    StabilityKind,
    UnstableSystemError,
    ValidationError,
    check_system,
)
from fracnet.spectral import (
    Laplacian,
    eigenvalues,
    require_connected,
    uniform_cyclic_poles,
)
from fracnet.stability import assess_cyclic, matignon_verdict

#: below this distance from alpha = 1 the classical limit is used
ALPHA_ONE_SWITCH = 1.0e-6
NORMALITY_RTOL = 1.0e-10


def _infinite(method: H2Method) -> H2Report:
    return H2Report(math.inf, method, 0.0)


def _is_alpha_one(alpha: float) -> bool:
    return abs(alpha - 1.0) < ALPHA_ONE_SWITCH


# {{{ closed forms

def _sinc_ratio(m: float, theta: float) -> float:
    """``sin(m theta) / sin(theta)`` with the ``theta -> 0`` limit."""
    if abs(theta) < 1.0e-6:
        return m * (1.0 - (m * m - 1.0) * theta * theta / 6.0)
    return math.sin(m * theta) / math.sin(theta)


def mode_contribution(lam: complex, alpha: float) -> float:
    """Contribution of one eigenvalue of a normal state matrix to the squared norm."""
    lam = complex(lam)
    if _is_alpha_one(alpha):
        return 0.5 / (-lam.real)

    r = abs(lam)
    phi = math.atan2(-lam.imag, -lam.real)
    m = 1.0 / alpha - 1.0
    beta = 2.0 - 1.0 / alpha
    half = alpha * math.pi / 2.0

    bracket = _sinc_ratio(m, half - phi) + _sinc_ratio(m, half + phi)
    return r ** (-beta) * bracket / (2.0 * alpha * math.sin(math.pi * m))


def _report_from_modes(modes, alpha: float) -> H2Report:
    per_mode = tuple((complex(z), mode_contribution(z, alpha)) for z in modes)
    value = math.fsum(v for _, v in per_mode)
    err = 64 * np.finfo(float).eps * math.fsum(abs(v) for _, v in per_mode)
    return H2Report(value, H2Method.ClosedForm, err, per_mode)


def is_normal(A: np.ndarray, rtol: float = NORMALITY_RTOL) -> bool:
    A = np.asarray(A, dtype=float)
    comm = A.T @ A - A @ A.T
    return bool(np.linalg.norm(comm) <= rtol * np.linalg.norm(A) ** 2)


def h2_normal(sys: FractionalSystem) -> H2Report:
    """Closed-form squared H2 norm for normal ``A`` and ``B = C = I``."""
    check_system(sys)
    n = sys.n
    if sys.B.shape != (n, n) or sys.C.shape != (n, n) \
            or not np.allclose(sys.B, np.eye(n), rtol=0, atol=1e-12) \
            or not np.allclose(sys.C, np.eye(n), rtol=0, atol=1e-12):
        raise ValidationError("closed form requires B = C = I")
    if not is_normal(sys.A):
        raise NotNormalError("state matrix is not normal")

    verdict = matignon_verdict(sys)
    if verdict.kind is not StabilityKind.AsymptoticallyStable:
        raise UnstableSystemError(
            f"system is {verdict.kind.value} (margin {verdict.margin:.3g})")

    if sys.alpha <= 0.5:
        return _infinite(H2Method.ClosedForm)

    return _report_from_modes(eigenvalues(sys.A), sys.alpha)


def cyclic_alpha1_closed_form(n: int, a: float, c: float) -> float:
    """Classical (order one) squared norm of the uniform cyclic loop.

    Closed-form sum of ``1/(2 Re(-lambda_k))`` over the loop poles. It is an
    algebraic identity and does not check stability; for ``c/a`` above
    ``sec(pi/n)`` the result is not a norm.
    """
    if n < 2 or a <= 0 or c <= 0:
        raise ValidationError("need n >= 2, a > 0, c > 0")

    ratio = a / c
    if math.isclose(ratio, 1.0, rel_tol=1e-14):
        return n * n / (4.0 * c)
    if ratio < 1.0:
        phase = n * math.acos(ratio)
        return n * math.tan(phase / 2.0) / (2.0 * c * math.sin(phase / n))

    phase = n * math.acosh(ratio)
    return n * math.tanh(phase / 2.0) / (2.0 * c * math.sinh(phase / n))


def h2_cyclic(spec: CyclicSpec) -> H2Report:
    """Squared H2 norm of a uniform cyclic loop with ``B = C = I``."""
    if not spec.is_uniform():
        raise ValidationError(
            "h2_cyclic needs identical a_i and c_i; "
            "use h2_normal on compile_cyclic(spec) if the matrix is normal")

    assessment = assess_cyclic(spec)
    if not assessment.sufficient_pass:
        raise UnstableSystemError(
            f"gamma = {assessment.gamma:.6g} violates the secant bound "
            f"{assessment.bound:.6g}")
    if assessment.gamma >= assessment.uniform_limit:
        raise UnstableSystemError(
            f"gamma = {assessment.gamma:.6g} is below the secant bound but at or "
            f"above the exact uniform-loop limit {assessment.uniform_limit:.6g}")

    if spec.alpha <= 0.5:
        return _infinite(H2Method.ClosedForm)

    n, a, c = spec.n, spec.a[0], spec.c[0]
    poles = uniform_cyclic_poles(n, a, c)
    report = _report_from_modes(poles, spec.alpha)
    if _is_alpha_one(spec.alpha):
        value = cyclic_alpha1_closed_form(n, a, c)
        return H2Report(value, H2Method.ClosedForm,
                        report.abs_error_estimate, report.per_mode)

    return report


def consensus_prefactor(alpha: float) -> float:
    r""":math:`|\cot(\alpha\pi/2) / (\alpha \sin(\pi/\alpha))|`, ``1/2`` at ``alpha = 1``."""
    if _is_alpha_one(alpha):
        return 0.5
    m = 1.0 / alpha - 1.0
    # sin(pi/alpha) = -sin(pi m) keeps full relative accuracy near alpha = 1
    return abs(math.cos(alpha * math.pi / 2.0)
               / (math.sin(alpha * math.pi / 2.0) * alpha * math.sin(math.pi * m)))


def h2_consensus(L: Laplacian, alpha: float) -> H2Report:
    """Squared H2 norm of the consensus network over the graph of ``L``.

    The zero Laplacian mode is unobservable through the centering output
    and is excluded.
    """
    require_connected(L)
    if not (0.0 < alpha < 2.0):
        raise ValidationError(f"alpha must lie in (0, 2), got {alpha}")
    if alpha <= 0.5:
        return _infinite(H2Method.ClosedForm)

    lam = L.nonzero_spectrum
    beta = 2.0 - 1.0 / alpha
    k = consensus_prefactor(alpha)
    per_mode = tuple((complex(-x), k * float(x) ** (-beta)) for x in lam)
    value = math.fsum(v for _, v in per_mode)
    err = 64 * np.finfo(float).eps * value
    return H2Report(value, H2Method.ClosedForm, err, per_mode)


def centering_matrix(n: int) -> np.ndarray:
    return np.eye(n) - np.full((n, n), 1.0 / n)


def consensus_system(L: Laplacian, alpha: float) -> FractionalSystem:
    """``D^alpha x = -L x + xi``, ``y = M_n x``."""
    n = L.n
    return FractionalSystem(-L.matrix, np.eye(n), centering_matrix(n), alpha)

# }}}


# {{{ quadrature oracle

_GL_LO = np.polynomial.legendre.leggauss(10)
_GL_HI = np.polynomial.legendre.leggauss(20)


def _critical_subspace(sys: FractionalSystem, critical) -> np.ndarray:
    """Real orthonormal basis of the eigenspaces of the critical eigenvalues."""
    scale = max(1.0, float(np.linalg.norm(sys.A, 2)))
    n = sys.n
    vecs = []
    for lam in critical:
        _, s, vh = np.linalg.svd(sys.A - lam * np.eye(n))
        null = vh[s <= 1.0e-8 * scale].conj().T
        vecs.extend([null.real, null.imag])
    u, s, _ = np.linalg.svd(np.hstack(vecs), full_matrices=False)
    return u[:, s > 1.0e-8]


def _deflate(sys: FractionalSystem, V: np.ndarray) -> FractionalSystem | None:
    """Remove an invariant subspace ``V`` with ``C V = 0``.

    In the basis ``[Q, V]`` (``Q`` spanning the orthogonal complement) the
    state matrix is block lower triangular and the output ignores ``V``, so
    ``(Q^T A Q, Q^T B, C Q)`` has the same transfer function. Returns
    ``None`` when ``V`` is observable.
    """
    scale = max(1.0, float(np.linalg.norm(sys.A, 2)))
    if np.linalg.norm(sys.C @ V) > 1.0e-8 * scale:
        return None

    u, _, _ = np.linalg.svd(V, full_matrices=True)
    Q = u[:, V.shape[1]:]
    return FractionalSystem(Q.T @ sys.A @ Q, Q.T @ sys.B, sys.C @ Q, sys.alpha)


class _Integrand:
    """``||G(j w)||_F^2`` evaluated on batches of frequencies."""

    def __init__(self, sys: FractionalSystem) -> None:
        self.A = sys.A.astype(complex)
        self.B = sys.B.astype(complex)
        self.C = sys.C.astype(complex)
        self.alpha = sys.alpha
        self.eye = np.eye(sys.n)

    def __call__(self, w: np.ndarray) -> np.ndarray:
        s_alpha = w**self.alpha * np.exp(0.5j * np.pi * self.alpha)
        M = s_alpha[:, None, None] * self.eye - self.A
        B = np.broadcast_to(self.B, (w.size, *self.B.shape))
        for attempt in range(3):
            try:
                X = np.linalg.solve(M, B)
                break
            except np.linalg.LinAlgError:
                # nudge off an exact singularity and retry
                w = w * (1.0 + 1.0e-12 * (attempt + 1))
                s_alpha = w**self.alpha * np.exp(0.5j * np.pi * self.alpha)
                M = s_alpha[:, None, None] * self.eye - self.A
        else:
            raise FracnetError("resolvent is singular on the imaginary axis")

        G = self.C @ X
        return np.sum(np.abs(G) ** 2, axis=(1, 2))


def _panel_rules(a: np.ndarray, b: np.ndarray, f: _Integrand):
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    x_lo, w_lo = _GL_LO
    x_hi, w_hi = _GL_HI
    nodes = np.concatenate([
        (mid[:, None] + half[:, None] * x_lo[None, :]).ravel(),
        (mid[:, None] + half[:, None] * x_hi[None, :]).ravel()])
    vals = f(nodes)
    k = a.size * x_lo.size
    lo = half * (vals[:k].reshape(a.size, -1) @ w_lo)
    hi = half * (vals[k:].reshape(a.size, -1) @ w_hi)
    return hi, np.abs(hi - lo)


def _tail_integral(sys: FractionalSystem, omega: float, nterms: int = 24):
    """Exact integral of the Neumann-series expansion of the integrand on
    ``[omega, inf)``; requires ``||A|| / omega**alpha <= 0.1``."""
    alpha = sys.alpha
    At = sys.A / omega**alpha
    P = []
    Ak = sys.B.copy()
    for _ in range(nterms):
        P.append(sys.C @ Ak)
        Ak = At @ Ak
    P = np.array(P)

    gram = np.einsum("kij,lij->kl", P, P)
    k = np.arange(nterms)
    kk, ll = np.meshgrid(k, k, indexing="ij")
    weight = np.cos(0.5 * np.pi * alpha * (kk - ll)) / (alpha * (kk + ll + 2) - 1.0)
    value = float(np.sum(gram * weight)) * omega ** (1.0 - 2.0 * alpha)

    ratio = np.linalg.norm(At, 2)
    head = np.linalg.norm(sys.C, 2) ** 2 * np.linalg.norm(sys.B, 2) ** 2
    err = (head * 2.0 * ratio**nterms / (1.0 - ratio) ** 2
           * omega ** (1.0 - 2.0 * alpha) / (2.0 * alpha - 1.0))
    return value, err


def h2_quadrature(sys: FractionalSystem, rtol: float = 1.0e-10,
                  max_panels: int = 20000) -> H2Report:
    """Squared H2 norm by direct integration of the transfer function.

    The integrand is even in ``w``; ``[0, Omega]`` is integrated by adaptive
    Gauss-Legendre panels (10/20 point pairs for the error estimate) and
    ``[Omega, inf)`` exactly from the series of ``G`` in powers of
    ``s**-alpha``.
    """
    check_system(sys)
    alpha = sys.alpha

    verdict = matignon_verdict(sys)
    if verdict.kind is StabilityKind.Unstable:
        raise UnstableSystemError(
            f"system is unstable (margin {verdict.margin:.3g})")
    if alpha <= 0.5:
        return _infinite(H2Method.Quadrature)
    if verdict.kind is StabilityKind.MarginallyStable:
        reduced = _deflate(sys, _critical_subspace(sys, verdict.critical))
        if reduced is None:
            return _infinite(H2Method.Quadrature)
        sys = reduced

    norm_a = float(np.linalg.norm(sys.A, 2))
    omega = max(10.0 * norm_a, 1.0) ** (1.0 / alpha)
    tail, tail_err = _tail_integral(sys, omega)

    # geometric breakpoints plus the natural frequencies of the modes
    ev = np.abs(eigenvalues(sys.A).eigenvalues)
    natural = ev[ev > 0] ** (1.0 / alpha)
    bps = np.concatenate([[0.0], omega * np.logspace(-12, 0, 25),
                          natural[natural < omega]])
    bps = np.unique(bps)

    f = _Integrand(sys)
    a, b = bps[:-1], bps[1:]
    val, err = _panel_rules(a, b, f)

    while True:
        total = math.fsum(val) + tail
        total_err = math.fsum(err) + tail_err
        if total_err <= rtol * abs(total) or a.size >= max_panels:
            break

        # split the worst quarter of the panels
        nsplit = max(1, a.size // 4)
        worst = np.argsort(err)[::-1][:nsplit]
        keep = np.ones(a.size, dtype=bool)
        keep[worst] = False
        mid = 0.5 * (a[worst] + b[worst])
        na = np.concatenate([a[worst], mid])
        nb = np.concatenate([mid, b[worst]])
        nval, nerr = _panel_rules(na, nb, f)

        a = np.concatenate([a[keep], na])
        b = np.concatenate([b[keep], nb])
        val = np.concatenate([val[keep], nval])
        err = np.concatenate([err[keep], nerr])

        # fixed summation order regardless of refinement history
        order = np.argsort(a, kind="stable")
        a, b, val, err = a[order], b[order], val[order], err[order]

    return H2Report(total / np.pi, H2Method.Quadrature, total_err / np.pi)

# }}}
