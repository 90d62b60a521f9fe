from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from fracnet.core import (
    CyclicSpec,
    FractionalSystem,
    H2Method,
    StabilityKind,
    UnstableSystemError,
    ValidationError,
    WeightedGraph,
    compile_cyclic,
)
from fracnet.robustness import consensus_system, h2_cyclic, h2_quadrature
from fracnet.simulation import (
    HorizonTooShortError,
    consensus_limit,
    gl_integrate,
    gl_weights,
    impulse_energy,
    mittag_leffler,
)
from fracnet.spectral import laplacian
from fracnet.stability import matignon_verdict


def scalar(lam, alpha):
    return FractionalSystem.from_state_matrix([[lam]], alpha)


def ml_reference(alpha: float, beta: float, z: complex, terms: int = 400,
                 dps: int = 60) -> complex:
    """Power series in extended precision.

    ``alpha k + beta`` is formed in extended precision too: a rounded Gamma
    argument is amplified by the cancellation between the large terms.
    """
    with mpmath.workdps(dps):
        zz, a, b = mpmath.mpc(z), mpmath.mpf(alpha), mpmath.mpf(beta)
        total = mpmath.fsum(zz**k * mpmath.rgamma(a * k + b) for k in range(terms))
        return complex(total)


# {{{ Mittag-Leffler

def test_ml_exponential():
    assert mittag_leffler(1.0, 1.0, 1.0) == pytest.approx(math.e, rel=1e-14)


def test_ml_cosine():
    assert mittag_leffler(2.0, 1.0, -1.0).real == pytest.approx(math.cos(1.0), rel=1e-14)


def test_ml_sinc():
    # E_{2,2}(-x^2) = sin(x) / x
    assert mittag_leffler(2.0, 2.0, -4.0).real == pytest.approx(math.sin(2.0) / 2.0,
                                                                 rel=1e-13)


def test_ml_half_half_against_extended_series():
    assert mittag_leffler(0.5, 0.5, -1.0) == pytest.approx(
        ml_reference(0.5, 0.5, -1.0), rel=1e-12)


@pytest.mark.parametrize("x", [0.1, 1.0, 5.0, 9.9, 10.5, 20.0, 35.0, 50.0])
def test_ml_half_is_scaled_erfc(x):
    # E_{1/2}(-x) = exp(x^2) erfc(x)
    assert mittag_leffler(0.5, 1.0, -x).real == pytest.approx(special.erfcx(x), rel=1e-10)


@pytest.mark.parametrize("alpha, beta, z", [
    (0.8, 1.0, -12.0), (0.8, 1.0, -30.0), (1.5, 1.0, -20.0), (0.6, 0.9, -15.0),
    (1.2, 1.5, 11.0 + 4.0j), (0.7, 1.0, -40.0 + 5.0j),
])
def test_ml_large_argument_against_extended_series(alpha, beta, z):
    ref = ml_reference(alpha, beta, z, terms=1500, dps=120)
    assert abs(mittag_leffler(alpha, beta, z) - ref) <= 1e-10 * max(1.0, abs(ref))


def test_ml_rejects_nonpositive_alpha():
    with pytest.raises(ValidationError):
        mittag_leffler(0.0, 1.0, 1.0)

# }}}


# {{{ G-L integrator

def test_gl_weights():
    assert np.allclose(gl_weights(1.0, 4), [1, -1, 0, 0, 0])
    w = gl_weights(0.5, 5)
    expected = [(-1) ** j * special.binom(0.5, j) for j in range(6)]
    assert np.allclose(w, expected, rtol=1e-14)


def test_gl_order_one_exponential():
    traj = gl_integrate(scalar(-1.0, 1.0), [1.0], h=1e-3, T=1.0)
    assert abs(traj.final[0] - math.exp(-1.0)) < 1e-3


def test_gl_order_one_is_backward_euler():
    A = np.array([[-1.0, 2.0], [-0.5, -0.3]])
    h, K = 0.01, 300
    traj = gl_integrate(FractionalSystem.from_state_matrix(A, 1.0), [1.0, -1.0],
                        h=h, T=K * h)
    x = np.array([1.0, -1.0])
    M = np.linalg.inv(np.eye(2) - h * A)
    for k in range(1, K + 1):
        x = M @ x
        assert np.allclose(traj.states[k], x, rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
def test_gl_half_order_matches_mittag_leffler(t):
    traj = gl_integrate(scalar(-1.0, 0.5), [1.0], h=1e-3, T=2.0)
    k = int(round(t / 1e-3))
    exact = mittag_leffler(0.5, 1.0, -math.sqrt(t)).real
    assert abs(traj.states[k, 0] - exact) < 1e-3


@pytest.mark.parametrize("alpha", [0.4, 0.7, 1.3, 1.8])
def test_gl_step_halving(alpha):
    t = 1.0
    exact = mittag_leffler(alpha, 1.0, -(t**alpha)).real
    errs = []
    for h in (2e-2, 1e-2, 5e-3):
        traj = gl_integrate(scalar(-1.0, alpha), [1.0], h=h, T=t)
        errs.append(abs(traj.final[0] - exact))
    assert errs[0] > errs[1] > errs[2]


def test_gl_forced_step_response():
    # unit step input: x(t) = 1 - E_alpha(-t^alpha) from rest
    alpha = 0.7
    traj = gl_integrate(scalar(-1.0, alpha), None, lambda t: 1.0, h=1e-3, T=1.0)
    exact = 1.0 - mittag_leffler(alpha, 1.0, -1.0).real
    assert abs(traj.final[0] - exact) < 2e-3


def test_gl_array_input_equals_callable():
    sys = FractionalSystem([[-1.0, 0.3], [0.0, -2.0]], [[1.0], [0.5]], np.eye(2), 0.8)
    h, T = 0.01, 1.0
    times = h * np.arange(101)
    a = gl_integrate(sys, None, np.sin(times)[:, None], h=h, T=T)
    b = gl_integrate(sys, None, math.sin, h=h, T=T)
    assert np.array_equal(a.states, b.states)


def test_gl_equilibrium_is_constant():
    L = laplacian(WeightedGraph.complete(4))
    sys = FractionalSystem.from_state_matrix(-L.matrix, 0.6)
    traj = gl_integrate(sys, np.full(4, 3.0), h=0.05, T=5.0)
    assert np.allclose(traj.states, 3.0, atol=1e-12)


def test_gl_grid():
    traj = gl_integrate(scalar(-1.0, 0.9), [1.0], h=0.1, T=1.0)
    assert traj.times.size == 11
    assert np.allclose(np.diff(traj.times), 0.1)
    assert not traj.diverged


def test_gl_divergence_flag():
    spec = CyclicSpec.uniform(10, 1.0, 2.0, 0.5)
    sys = compile_cyclic(spec)
    assert matignon_verdict(sys).kind is StabilityKind.Unstable
    traj = gl_integrate(sys, np.ones(10), h=0.05, T=2000.0)
    assert traj.diverged
    assert traj.divergence_time is not None
    assert np.linalg.norm(traj.final) > 1e12
    assert np.all(np.linalg.norm(traj.states[:-1], axis=1) <= 1e12)


@settings(max_examples=15, deadline=None)
@given(st.integers(min_value=0, max_value=2**31), st.floats(min_value=0.3, max_value=1.7))
def test_gl_stable_systems_decay(seed, alpha):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((3, 3)) - 3.0 * np.eye(3)
    sys = FractionalSystem.from_state_matrix(A, alpha)
    if matignon_verdict(sys).kind is not StabilityKind.AsymptoticallyStable:
        return
    x0 = rng.standard_normal(3)
    traj = gl_integrate(sys, x0, h=0.05, T=400.0)
    assert not traj.diverged
    assert np.linalg.norm(traj.final) < np.linalg.norm(x0)


def test_gl_rejects():
    with pytest.raises(ValidationError):
        gl_integrate(scalar(-1.0, 0.5), [1.0], h=0.0, T=1.0)
    with pytest.raises(ValidationError):
        gl_integrate(scalar(-1.0, 0.5), [1.0, 2.0], h=0.1, T=1.0)

# }}}


# {{{ impulse energy

def test_impulse_energy_scalar_order_one():
    rep = impulse_energy(scalar(-1.0, 1.0), h=1e-3, T=40.0)
    assert rep.method is H2Method.TimeDomain
    assert rep.value == pytest.approx(0.5, rel=0.02)


def test_impulse_energy_consensus_k3():
    sys = consensus_system(laplacian(WeightedGraph.complete(3)), 1.0)
    assert impulse_energy(sys, h=1e-3, T=40.0).value == pytest.approx(1 / 3, rel=0.02)


@pytest.mark.slow
def test_impulse_energy_cyclic():
    spec = CyclicSpec.uniform(3, 1.0, 0.5, 0.8)
    td = impulse_energy(compile_cyclic(spec), h=1e-3, T=40.0).value
    assert td == pytest.approx(h2_cyclic(spec).value, rel=0.02)


def test_impulse_energy_scalar_fractional():
    sys = scalar(-1.0, 0.8)
    td = impulse_energy(sys, h=1e-3, T=40.0)
    fd = h2_quadrature(sys).value
    assert td.value == pytest.approx(fd, rel=0.02)
    assert td.abs_error_estimate > 0


def test_impulse_energy_short_horizon():
    with pytest.raises(HorizonTooShortError) as exc:
        impulse_energy(scalar(-1.0, 0.6), h=1e-2, T=0.5)
    assert exc.value.suggested_T > 0.5


def test_impulse_energy_infinite_below_half():
    assert impulse_energy(scalar(-1.0, 0.5), h=1e-2, T=1.0).is_infinite

# }}}


# {{{ consensus limit

def test_consensus_limit_order_one():
    L = laplacian(WeightedGraph.complete(3))
    rep = consensus_limit(L, [1.0, 2.0, 3.0], 1.0, T=50.0, h=1e-2)
    assert np.allclose(rep.limit, 2.0, atol=1e-6)
    assert rep.residual < 1e-6
    assert rep.prefactor == pytest.approx(1.0, abs=1e-6)


def test_consensus_limit_half_order_reports_both_candidates():
    L = laplacian(WeightedGraph.complete(3))
    rep = consensus_limit(L, [1.0, 2.0, 3.0], 0.5, T=2.0e5, h=5.0)
    assert rep.residual < 1e-3
    d = rep.to_dict()
    assert d["candidate_prefactors"] == {"mean": 1.0, "mean_over_alpha": 2.0}
    # the simulation keeps the average: the limit is the initial mean
    assert rep.candidates["mean"] < 1e-3
    assert rep.candidates["mean_over_alpha"] > 1.0


def test_consensus_limit_equilibrium():
    L = laplacian(WeightedGraph.path(4))
    rep = consensus_limit(L, np.full(4, -2.5), 0.8, T=10.0)
    assert np.allclose(rep.limit, -2.5)
    assert rep.residual == pytest.approx(0.0, abs=1e-12)


def test_consensus_limit_unpacks():
    L = laplacian(WeightedGraph.complete(3))
    limit, residual = consensus_limit(L, [1.0, 2.0, 3.0], 1.0, T=20.0, h=1e-2)
    assert limit.shape == (3,)
    assert residual >= 0


def test_consensus_limit_disconnected():
    from fracnet.core import DisconnectedGraphError

    L = laplacian(WeightedGraph(4, ((0, 1, 1.0), (2, 3, 1.0))))
    with pytest.raises(DisconnectedGraphError):
        consensus_limit(L, np.arange(4.0), 1.0, T=1.0)


def test_unstable_impulse_raises():
    with pytest.raises(UnstableSystemError):
        impulse_energy(scalar(0.5, 0.9), h=0.05, T=200.0)

# }}}
