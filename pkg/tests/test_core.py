from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracnet.core import (
    CyclicSpec,
    FractionalSystem,
    H2Method,
    H2Report,
    Spectrum,
    StabilityKind,
    StabilityVerdict,
    ValidationError,
    WeightedGraph,
    compile_cyclic,
    json_float,
    principal_arg,
    validate_system,
)

positive = st.floats(min_value=1.0e-3, max_value=1.0e3)


# {{{ FractionalSystem

def test_validate_identity_system():
    sys = FractionalSystem(np.eye(2), np.eye(2), np.eye(2), 1.0)
    assert validate_system(sys) == []


@pytest.mark.parametrize("alpha", [0.0, 2.0, -0.5, 3.0, math.nan])
def test_validate_alpha_range(alpha):
    sys = FractionalSystem(-np.eye(2), np.eye(2), np.eye(2), alpha)
    assert validate_system(sys) == ["alpha out of (0,2)"]


def test_validate_shapes():
    sys = FractionalSystem(-np.eye(2), np.ones((3, 1)), np.eye(2), 0.5)
    errors = validate_system(sys)
    assert len(errors) == 1
    assert "B" in errors[0]

    sys = FractionalSystem(-np.eye(2), np.eye(2), np.ones((1, 3)), 0.5)
    assert any("C" in e for e in validate_system(sys))

    sys = FractionalSystem(np.ones((2, 3)), np.eye(2), np.eye(2), 0.5)
    assert any("square" in e for e in validate_system(sys))


def test_system_is_immutable():
    sys = FractionalSystem.from_state_matrix([[-1.0, 0.0], [0.0, -2.0]], 0.7)
    with pytest.raises(ValueError):
        sys.A[0, 0] = 5.0
    with pytest.raises(AttributeError):
        sys.alpha = 0.2


def test_system_json_round_trip():
    sys = FractionalSystem(np.array([[-1.0, 2.0], [0.0, -3.0]]),
                           np.array([[1.0], [0.5]]), np.array([[1.0, 1.0]]), 0.8)
    back = FractionalSystem.from_dict(json.loads(json.dumps(sys.to_dict())))
    assert np.array_equal(back.A, sys.A)
    assert np.array_equal(back.B, sys.B)
    assert np.array_equal(back.C, sys.C)
    assert back.alpha == sys.alpha


def test_system_json_defaults_and_errors():
    sys = FractionalSystem.from_dict({"A": [[-1.0]], "alpha": 0.5})
    assert sys.B.shape == sys.C.shape == (1, 1)
    with pytest.raises(ValidationError, match="alpha"):
        FractionalSystem.from_dict({"A": [[-1.0]]})

# }}}


# {{{ cyclic loops

def test_compile_cyclic_n2():
    A = compile_cyclic(CyclicSpec((1, 1), (1, 1), 1.0)).A
    assert np.array_equal(A, [[-1.0, -1.0], [1.0, -1.0]])


def test_compile_cyclic_n3():
    A = compile_cyclic(CyclicSpec((1, 2, 3), (1, 1, 1), 1.0)).A
    assert np.array_equal(np.diag(A), [-1.0, -2.0, -3.0])
    assert A[1, 0] == A[2, 1] == 1.0
    assert A[0, 2] == -1.0
    assert np.count_nonzero(A) == 6


def test_compiled_io_is_identity():
    sys = compile_cyclic(CyclicSpec.uniform(4, 1.0, 0.5, 0.9))
    assert np.array_equal(sys.B, np.eye(4))
    assert np.array_equal(sys.C, np.eye(4))
    assert sys.alpha == 0.9


@pytest.mark.parametrize("a, c, alpha, fragment", [
    ((1.0, -1.0), (1.0, 1.0), 1.0, "a_i"),
    ((1.0, 1.0), (1.0, 0.0), 1.0, "c_i"),
    ((1.0,), (1.0,), 1.0, "n must"),
    ((1.0, 1.0), (1.0, 1.0, 1.0), 1.0, "length"),
    ((1.0, 1.0), (1.0, 1.0), 2.0, "alpha"),
])
def test_compile_cyclic_rejects(a, c, alpha, fragment):
    with pytest.raises(ValidationError, match=fragment):
        compile_cyclic(CyclicSpec(a, c, alpha))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(positive, positive), min_size=2, max_size=30),
       st.floats(min_value=0.05, max_value=1.95))
def test_compile_cyclic_round_trip(pairs, alpha):
    a, c = zip(*pairs)
    spec = CyclicSpec(a, c, alpha)
    A = compile_cyclic(spec).A
    n = spec.n

    recovered_c = list(np.diag(A, -1)) + [-A[0, n - 1]]
    if n == 2:
        # the corner and the superdiagonal coincide
        recovered_c[-1] = -A[0, 1]
    assert tuple(-np.diag(A)) == spec.a
    assert tuple(recovered_c) == spec.c
    if n >= 3:
        assert np.count_nonzero(A) == 2 * n


def test_cyclic_geometric_means():
    spec = CyclicSpec((1.0, 4.0), (2.0, 8.0), 0.5)
    assert spec.a_geo == pytest.approx(2.0, rel=1e-15)
    assert spec.c_geo == pytest.approx(4.0, rel=1e-15)
    assert spec.gamma == pytest.approx(2.0, rel=1e-15)
    assert not spec.is_uniform()
    assert CyclicSpec.uniform(5, 1.0, 3.0, 0.5).is_uniform()


def test_cyclic_json_round_trip():
    spec = CyclicSpec((1.0, 2.0, 0.5), (0.3, 0.1, 7.0), 1.3)
    assert CyclicSpec.from_dict(json.loads(json.dumps(spec.to_dict()))) == spec
    with pytest.raises(ValidationError):
        CyclicSpec.from_dict({**spec.to_dict(), "n": 4})

# }}}


# {{{ graphs

def test_graph_rejects_bad_edges():
    with pytest.raises(ValidationError):
        WeightedGraph(3, ((0, 0, 1.0),))
    with pytest.raises(ValidationError):
        WeightedGraph(3, ((0, 1, -1.0),))
    with pytest.raises(ValidationError):
        WeightedGraph(3, ((0, 1, 1.0), (1, 0, 2.0)))
    with pytest.raises(ValidationError):
        WeightedGraph(2, ((0, 2, 1.0),))


def test_graph_adjacency_symmetric():
    g = WeightedGraph(3, ((0, 1, 2.0), (1, 2, 0.5)))
    W = g.adjacency()
    assert np.array_equal(W, W.T)
    assert W[0, 1] == 2.0 and W[2, 1] == 0.5 and W[0, 2] == 0.0
    assert g.total_weight == 2.5


def test_edgelist_round_trip():
    text = "# triangle\n0 1 1.5\n1 2 2  # heavier\n\n0 2 0.25\n"
    g = WeightedGraph.from_edgelist(text)
    assert g.n == 3
    assert WeightedGraph.from_edgelist(g.to_edgelist()) == g


def test_edgelist_parse_errors():
    with pytest.raises(ValidationError, match="line 2"):
        WeightedGraph.from_edgelist("0 1 1\n0 2\n")
    with pytest.raises(ValidationError, match="line 1"):
        WeightedGraph.from_edgelist("a b c\n")


def test_named_graphs():
    assert len(WeightedGraph.complete(5).edges) == 10
    assert len(WeightedGraph.path(5).edges) == 4
    assert len(WeightedGraph.cycle(5).edges) == 5
    assert WeightedGraph.complete(3).scaled(2.0).total_weight == 6.0

# }}}


# {{{ results

def test_principal_arg_branch():
    assert principal_arg(-1.0) == pytest.approx(math.pi)
    assert principal_arg(complex(-1.0, -0.0)) == pytest.approx(math.pi)
    assert principal_arg(1j) == pytest.approx(math.pi / 2)
    assert principal_arg(-1j) == pytest.approx(-math.pi / 2)


def test_spectrum_sorted_and_readonly():
    s = Spectrum(np.array([1 + 1j, -2.0, 1 - 1j, 0.5]))
    assert list(s.eigenvalues) == [-2.0, 0.5, 1 - 1j, 1 + 1j]
    assert len(s) == 4
    assert np.all(s.args <= math.pi) and np.all(s.args > -math.pi)
    with pytest.raises(ValueError):
        s.eigenvalues[0] = 3.0


def test_report_serialization():
    rep = H2Report(math.inf, H2Method.ClosedForm, 0.0)
    assert rep.is_infinite
    assert json.loads(json.dumps(rep.to_dict()))["value"] == "Infinity"

    v = StabilityVerdict(StabilityKind.MarginallyStable, 0.0, 1j, (1j, -1j))
    d = json.loads(json.dumps(v.to_dict()))
    assert d["kind"] == "marginally_stable"
    assert d["critical"] == [[0.0, 1.0], [0.0, -1.0]]


def test_json_float():
    assert json_float(1.5) == 1.5
    assert json_float(-math.inf) == "-Infinity"
    assert json_float(math.nan) == "NaN"

# }}}
