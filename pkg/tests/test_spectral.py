from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracnet.core import (
    CyclicSpec,
    DisconnectedGraphError,
    ValidationError,
    WeightedGraph,
    compile_cyclic,
)
from fracnet.spectral import (
    eigenvalues,
    laplacian,
    match_multisets,
    multisets_close,
    spectral_zeta,
    uniform_cyclic_poles,
)


def test_rotation_spectrum():
    ev = eigenvalues([[0.0, -1.0], [1.0, 0.0]]).eigenvalues
    assert multisets_close(ev, [1j, -1j], rtol=1e-14)


def test_diagonal_spectrum():
    ev = eigenvalues(np.diag([3.0, -1.0, 0.5])).eigenvalues
    assert np.array_equal(ev, [-1.0, 0.5, 3.0])


def test_eigenvalues_rejects_bad_input():
    with pytest.raises(ValidationError):
        eigenvalues(np.ones((2, 3)))
    with pytest.raises(ValidationError):
        eigenvalues([[np.inf]])


def test_conjugate_pairs_exact():
    rng = np.random.default_rng(1)
    ev = eigenvalues(rng.standard_normal((9, 9))).eigenvalues
    upper = np.sort_complex(ev[ev.imag > 0])
    lower = np.sort_complex(np.conj(ev[ev.imag < 0]))
    assert np.array_equal(upper, lower)


# {{{ uniform cyclic poles

def test_uniform_poles_n2():
    assert multisets_close(uniform_cyclic_poles(2, 1.0, 1.0).eigenvalues,
                           [-1 + 1j, -1 - 1j], rtol=1e-15)


def test_uniform_poles_n3():
    expected = [-1.5 + 1j * math.sqrt(3) / 2, -1.5 - 1j * math.sqrt(3) / 2, -3.0]
    poles = uniform_cyclic_poles(3, 2.0, 1.0).eigenvalues
    assert multisets_close(poles, expected, rtol=1e-15)
    # the pole at angle pi is exactly real
    assert np.count_nonzero(poles.imag == 0) == 1


def test_uniform_poles_example_bound_is_marginal():
    # at the printed gamma the poles nearest the unstable wedge sit on its rays
    s = uniform_cyclic_poles(10, 1.0, 1.5575)
    margin = np.min(np.abs(s.args)) - math.pi / 4
    assert abs(margin) < 1e-4


def test_uniform_poles_match_eigensolver_n4():
    numeric = eigenvalues(compile_cyclic(CyclicSpec.uniform(4, 1.0, 1.0, 1.0)).A)
    closed = uniform_cyclic_poles(4, 1.0, 1.0)
    assert multisets_close(numeric.eigenvalues, closed.eigenvalues, rtol=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=2, max_value=60),
       st.floats(min_value=0.01, max_value=100.0),
       st.floats(min_value=0.01, max_value=100.0))
def test_uniform_poles_property(n, a, c):
    numeric = eigenvalues(compile_cyclic(CyclicSpec.uniform(n, a, c, 1.0)).A)
    closed = uniform_cyclic_poles(n, a, c)
    assert len(closed) == n
    assert np.allclose(np.abs(closed.eigenvalues + a), c, rtol=1e-12)
    assert multisets_close(numeric.eigenvalues, closed.eigenvalues, rtol=1e-9)


def test_uniform_poles_reject():
    with pytest.raises(ValidationError):
        uniform_cyclic_poles(1, 1.0, 1.0)
    with pytest.raises(ValidationError):
        uniform_cyclic_poles(3, 0.0, 1.0)

# }}}


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=1, max_value=12), st.integers(min_value=0, max_value=2**31),
       st.floats(min_value=-10.0, max_value=10.0))
def test_shift_property(n, seed, sigma):
    A = np.random.default_rng(seed).standard_normal((n, n))
    ev = eigenvalues(A).eigenvalues
    shifted = eigenvalues(A + sigma * np.eye(n)).eigenvalues
    # eigenvalues of a random matrix are well separated with probability one;
    # the scale covers the ill-conditioned draws
    scale = max(1.0, float(np.linalg.norm(A)))
    assert np.all(match_multisets(shifted, ev + sigma) <= 1e-8 * scale)


def test_multiset_matching_ignores_order():
    x = np.array([1 + 1j, 1 - 1j, 2.0])
    assert multisets_close(x[::-1], x)
    assert not multisets_close(x, x + 1e-3)
    assert not multisets_close(x, x[:2])


# {{{ Laplacians

def test_laplacian_complete_graph():
    L = laplacian(WeightedGraph.complete(4))
    assert np.allclose(L.spectrum, [0, 4, 4, 4], atol=1e-13)
    assert L.connected
    assert L.algebraic_connectivity == pytest.approx(4.0)


def test_laplacian_path():
    L = laplacian(WeightedGraph.path(3))
    assert np.allclose(L.spectrum, [0, 1, 3], atol=1e-13)
    assert np.array_equal(L.matrix, [[1, -1, 0], [-1, 2, -1], [0, -1, 1]])


def test_laplacian_disconnected():
    L = laplacian(WeightedGraph(4, ((0, 1, 1.0), (2, 3, 1.0))))
    assert not L.connected
    assert L.algebraic_connectivity == pytest.approx(0.0, abs=1e-13)
    with pytest.raises(DisconnectedGraphError):
        L.nonzero_spectrum
    with pytest.raises(DisconnectedGraphError):
        spectral_zeta(L, 1.0)


@st.composite
def weighted_graphs(draw):
    n = draw(st.integers(min_value=2, max_value=12))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs)))
    weights = draw(st.lists(st.floats(min_value=0.01, max_value=10.0),
                            min_size=len(chosen), max_size=len(chosen)))
    return WeightedGraph(n, tuple((i, j, w) for (i, j), w in zip(chosen, weights)))


@settings(max_examples=60, deadline=None)
@given(weighted_graphs())
def test_laplacian_properties(g):
    L = laplacian(g)
    assert np.allclose(L.matrix.sum(axis=1), 0.0, atol=1e-12)
    assert np.array_equal(L.matrix, L.matrix.T)
    assert np.all(L.spectrum >= 0.0)
    assert np.all(np.diff(L.spectrum) >= 0.0)
    assert math.isclose(L.spectrum.sum(), 2.0 * g.total_weight,
                        rel_tol=1e-10, abs_tol=1e-10)


def test_spectral_zeta_values():
    K4 = laplacian(WeightedGraph.complete(4))
    assert spectral_zeta(K4, 1.0) == pytest.approx(12.0, rel=1e-14)
    assert spectral_zeta(K4, 2.0) == pytest.approx(math.sqrt(48.0), rel=1e-14)
    assert spectral_zeta(laplacian(WeightedGraph.path(3)), 1.0) == pytest.approx(4.0)
    with pytest.raises(ValidationError):
        spectral_zeta(K4, 0.5)

# }}}
