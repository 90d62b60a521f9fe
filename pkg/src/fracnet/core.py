"""Domain types shared by every analysis.

All types are immutable after construction. Arrays held by them are
marked read-only so instances can be shared freely between threads.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np


class FracnetError(Exception):
    """Base class for analysis errors (CLI exit code 1)."""


class ValidationError(FracnetError, ValueError):
    """Raised when a model violates its invariants."""


class EigenSolverError(FracnetError):
    """The dense eigensolver failed to converge."""


class UnstableSystemError(FracnetError):
    """An analysis that needs a stable system was given an unstable one."""


class NotNormalError(FracnetError):
    """A closed form that needs a normal state matrix was given another."""


class DisconnectedGraphError(FracnetError):
    """Consensus analysis requires a connected graph."""


class AccuracyError(FracnetError):
    """The requested accuracy is not attainable by the implemented method."""


class InfeasibleError(FracnetError, ValueError):
    """A sampling constraint set is empty."""


def _frozen(a: Any, ndim: int = 2) -> np.ndarray:
    arr = np.array(a, dtype=float, copy=True)
    if arr.ndim == 0 and ndim == 2:
        arr = arr.reshape(1, 1)
    arr.flags.writeable = False
    return arr


# {{{ systems

@dataclass(frozen=True)
class FractionalSystem:
    r"""Commensurate-order pseudo state-space system

    .. math::

        D^\alpha x = A x + B \xi, \qquad y = C x,

    where :math:`D^\alpha` is the Caputo derivative. Construction does not
    validate; see :func:`validate_system`.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    alpha: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "A", _frozen(self.A))
        object.__setattr__(self, "B", _frozen(self.B))
        object.__setattr__(self, "C", _frozen(self.C))
        object.__setattr__(self, "alpha", float(self.alpha))

    @classmethod
    def from_state_matrix(cls, A: Any, alpha: float) -> FractionalSystem:
        """System with ``B = C = I``."""
        A = np.atleast_2d(np.asarray(A, dtype=float))
        eye = np.eye(A.shape[0])
        return cls(A, eye, eye, alpha)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def to_dict(self) -> dict[str, Any]:
        return {
            "A": self.A.tolist(),
            "B": self.B.tolist(),
            "C": self.C.tolist(),
            "alpha": self.alpha,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> FractionalSystem:
        try:
            A = np.atleast_2d(np.asarray(d["A"], dtype=float))
            alpha = d["alpha"]
        except KeyError as exc:
            raise ValidationError(f"system JSON is missing field {exc}") from None
        n = A.shape[0]
        B = d.get("B", np.eye(n))
        C = d.get("C", np.eye(n))
        return cls(A, B, C, alpha)


def validate_system(sys: FractionalSystem) -> list[str]:
    """Return a list of invariant violations; empty when *sys* is valid."""
    out = []
    if not (0.0 < sys.alpha < 2.0) or not math.isfinite(sys.alpha):
        out.append("alpha out of (0,2)")

    A, B, C = sys.A, sys.B, sys.C
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        out.append(f"A must be square, got shape {A.shape}")
        return out

    n = A.shape[0]
    if B.ndim != 2 or B.shape[0] != n:
        out.append(f"B must have {n} rows, got shape {B.shape}")
    if C.ndim != 2 or C.shape[1] != n:
        out.append(f"C must have {n} columns, got shape {C.shape}")
    for name, M in (("A", A), ("B", B), ("C", C)):
        if not np.all(np.isfinite(M)):
            out.append(f"{name} has non-finite entries")

    return out


def check_system(sys: FractionalSystem) -> FractionalSystem:
    errors = validate_system(sys)
    if errors:
        raise ValidationError("; ".join(errors))
    return sys


@dataclass(frozen=True)
class CyclicSpec:
    """Cyclic negative-feedback loop of ``n`` scalar fractional subsystems.

    Node ``i`` has self-decay ``a[i]`` and forwards ``c[i] x_i`` to node
    ``i + 1``; the last node feeds ``-c[n-1] x_n`` back into node 1.
    """

    a: tuple[float, ...]
    c: tuple[float, ...]
    alpha: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "a", tuple(float(v) for v in np.ravel(self.a)))
        object.__setattr__(self, "c", tuple(float(v) for v in np.ravel(self.c)))
        object.__setattr__(self, "alpha", float(self.alpha))

    @classmethod
    def uniform(cls, n: int, a: float, c: float, alpha: float) -> CyclicSpec:
        return cls((a,) * n, (c,) * n, alpha)

    @property
    def n(self) -> int:
        return len(self.a)

    @property
    def a_geo(self) -> float:
        """Geometric mean of the decay rates."""
        return math.exp(math.fsum(math.log(v) for v in self.a) / self.n)

    @property
    def c_geo(self) -> float:
        """Geometric mean of the coupling gains."""
        return math.exp(math.fsum(math.log(v) for v in self.c) / self.n)

    @property
    def gamma(self) -> float:
        return self.c_geo / self.a_geo

    def is_uniform(self, rtol: float = 1.0e-9) -> bool:
        return (max(self.a) / min(self.a) - 1.0 <= rtol
                and max(self.c) / min(self.c) - 1.0 <= rtol)

    def violations(self) -> list[str]:
        out = []
        if len(self.a) != len(self.c):
            out.append(f"a and c differ in length ({len(self.a)} != {len(self.c)})")
        if self.n < 2:
            out.append("n must be at least 2")
        if not all(v > 0 and math.isfinite(v) for v in self.a):
            out.append("all a_i must be strictly positive")
        if not all(v > 0 and math.isfinite(v) for v in self.c):
            out.append("all c_i must be strictly positive")
        if not (0.0 < self.alpha < 2.0):
            out.append("alpha out of (0,2)")
        return out

    def to_dict(self) -> dict[str, Any]:
        return {"n": self.n, "a": list(self.a), "c": list(self.c),
                "alpha": self.alpha}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> CyclicSpec:
        spec = cls(d["a"], d["c"], d["alpha"])
        if "n" in d and int(d["n"]) != spec.n:
            raise ValidationError(f"n={d['n']} does not match len(a)={spec.n}")
        return spec


def compile_cyclic(spec: CyclicSpec) -> FractionalSystem:
    """Build the cyclic state matrix with ``B = C = I``.

    The matrix has ``-a`` on the diagonal, ``c[0..n-2]`` on the
    subdiagonal and ``-c[n-1]`` in the top-right corner.
    """
    errors = spec.violations()
    if errors:
        raise ValidationError("; ".join(errors))

    n = spec.n
    A = np.diag(-np.asarray(spec.a))
    A[np.arange(1, n), np.arange(n - 1)] = spec.c[:-1]
    A[0, n - 1] -= spec.c[-1]

    return FractionalSystem.from_state_matrix(A, spec.alpha)

# }}}


# {{{ graphs

@dataclass(frozen=True)
class WeightedGraph:
    """Undirected weighted simple graph on nodes ``0..n-1``."""

    n: int
    edges: tuple[tuple[int, int, float], ...]

    def __post_init__(self) -> None:
        edges = tuple((int(i), int(j), float(w)) for i, j, w in self.edges)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "n", int(self.n))

        errors = self.violations()
        if errors:
            raise ValidationError("; ".join(errors))

    def violations(self) -> list[str]:
        out = []
        if self.n < 1:
            out.append("graph needs at least one node")
        seen = set()
        for i, j, w in self.edges:
            if i == j:
                out.append(f"self-loop at node {i}")
            if not (0 <= i < self.n and 0 <= j < self.n):
                out.append(f"edge ({i}, {j}) out of range for n={self.n}")
            if not (w > 0 and math.isfinite(w)):
                out.append(f"edge ({i}, {j}) has non-positive weight {w}")
            key = (min(i, j), max(i, j))
            if key in seen:
                out.append(f"duplicate edge {key}")
            seen.add(key)
        return out

    def adjacency(self) -> np.ndarray:
        W = np.zeros((self.n, self.n))
        for i, j, w in self.edges:
            W[i, j] = W[j, i] = w
        return W

    @property
    def total_weight(self) -> float:
        return math.fsum(w for _, _, w in self.edges)

    def scaled(self, sigma: float) -> WeightedGraph:
        return WeightedGraph(self.n, tuple((i, j, sigma * w) for i, j, w in self.edges))

    def relabeled(self, perm: Sequence[int]) -> WeightedGraph:
        return WeightedGraph(
            self.n, tuple((perm[i], perm[j], w) for i, j, w in self.edges))

    # constructors for the usual suspects

    @classmethod
    def complete(cls, n: int, weight: float = 1.0) -> WeightedGraph:
        return cls(n, tuple((i, j, weight)
                            for i in range(n) for j in range(i + 1, n)))

    @classmethod
    def path(cls, n: int, weight: float = 1.0) -> WeightedGraph:
        return cls(n, tuple((i, i + 1, weight) for i in range(n - 1)))

    @classmethod
    def cycle(cls, n: int, weight: float = 1.0) -> WeightedGraph:
        return cls(n, tuple((i, (i + 1) % n, weight) for i in range(n)))

    # edge-list text format

    @classmethod
    def from_edgelist(cls, text: str, n: int | None = None) -> WeightedGraph:
        """Parse ``i j weight`` lines (0-based, ``#`` starts a comment).

        The node count defaults to the largest index plus one.
        """
        edges = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ValidationError(
                    f"line {lineno}: expected 'i j weight', got {raw!r}")
            try:
                edges.append((int(parts[0]), int(parts[1]), float(parts[2])))
            except ValueError:
                raise ValidationError(
                    f"line {lineno}: cannot parse {raw!r}") from None

        if n is None:
            n = 1 + max((max(i, j) for i, j, _ in edges), default=-1)
        return cls(n, tuple(edges))

    @classmethod
    def read(cls, path: str | Path, n: int | None = None) -> WeightedGraph:
        return cls.from_edgelist(Path(path).read_text(), n=n)

    def to_edgelist(self) -> str:
        lines = [f"# nodes: {self.n}"]
        lines.extend(f"{i} {j} {w!r}" for i, j, w in self.edges)
        return "\n".join(lines) + "\n"

# }}}


# {{{ results

def principal_arg(z: Any) -> np.ndarray:
    """Principal argument in ``(-pi, pi]``."""
    arg = np.angle(np.asarray(z, dtype=complex))
    return np.where(arg <= -np.pi, np.pi, arg)


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues sorted by ``(real, imag)`` with their principal arguments."""

    eigenvalues: np.ndarray
    args: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        ev = np.asarray(self.eigenvalues, dtype=complex).ravel()
        ev = ev[np.lexsort((ev.imag, ev.real))]
        ev.flags.writeable = False
        args = principal_arg(ev)
        args.flags.writeable = False
        object.__setattr__(self, "eigenvalues", ev)
        object.__setattr__(self, "args", args)

    def __len__(self) -> int:
        return self.eigenvalues.size

    def __iter__(self):
        return iter(self.eigenvalues)


class StabilityKind(enum.Enum):
    AsymptoticallyStable = "asymptotically_stable"
    MarginallyStable = "marginally_stable"
    Unstable = "unstable"


@dataclass(frozen=True)
class StabilityVerdict:
    kind: StabilityKind
    #: smallest ``|arg(lambda)| - alpha pi / 2`` over the spectrum
    margin: float
    #: eigenvalue attaining the margin
    witness: complex | None = None
    #: eigenvalues classified as lying on the critical rays
    critical: tuple[complex, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind.value,
            "margin": self.margin,
            "witness": None if self.witness is None else
            [self.witness.real, self.witness.imag],
            "critical": [[z.real, z.imag] for z in self.critical],
        }


class H2Method(enum.Enum):
    ClosedForm = "closed_form"
    Quadrature = "quadrature"
    TimeDomain = "time_domain"


@dataclass(frozen=True)
class H2Report:
    """Squared H2 norm estimate and how it was obtained."""

    value: float
    method: H2Method
    abs_error_estimate: float = 0.0
    #: ``(eigenvalue, contribution)`` pairs for closed-form evaluations
    per_mode: tuple[tuple[complex, float], ...] | None = None

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.value)

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "value": json_float(self.value),
            "method": self.method.value,
            "abs_error_estimate": json_float(self.abs_error_estimate),
        }
        if self.per_mode is not None:
            d["per_mode"] = [
                {"eigenvalue": [z.real, z.imag], "contribution": json_float(v)}
                for z, v in self.per_mode]
        return d


def json_float(x: float) -> float | str:
    """JSON has no infinities; spell them out."""
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    if math.isnan(x):
        return "NaN"
    return x


def load_json(path: str | Path) -> dict[str, Any]:
    return json.loads(Path(path).read_text())

# }}}
