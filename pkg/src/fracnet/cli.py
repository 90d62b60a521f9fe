"""Command-line front end: ``fracnet <subcommand> ...``.

Exit codes: 0 on success, 1 on analysis errors (and failed ``verify``
criteria), 2 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from fracnet import __version__
from fracnet.core import (
    CyclicSpec,
    FracnetError,
    FractionalSystem,
    H2Report,
    WeightedGraph,
    compile_cyclic,
    load_json,
)
from fracnet.ensemble import (
    RNG_ALGORITHM,
    EnsembleConfig,
    ensemble_verdicts,
    generate_ensemble,
    pole_cloud,
)
from fracnet.robustness import (
    consensus_system,
    h2_consensus,
    h2_cyclic,
    h2_normal,
    h2_quadrature,
)
from fracnet.simulation import consensus_limit, gl_integrate, impulse_energy
from fracnet.spectral import laplacian
from fracnet.stability import (
    SecantRegime,
    assess_cyclic,
    bound_curve,
    matignon_verdict,
    secant_bound,
    uniform_stability_limit,
)
from fracnet.svg import bound_curve_svg, pole_cloud_svg

#: argparse destinations that name files written by a subcommand
OUTPUT_KEYS = ("out", "out_poles", "out_verdicts", "svg")
#: argparse destinations that name files read by a subcommand
INPUT_KEYS = ("system", "cyclic", "graph")


class UsageError(Exception):
    pass


# {{{ output helpers

def fmt(x: Any) -> str:
    """Shortest round-trip decimal text for numbers, ``str`` otherwise."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return str(x)


def atomic_write(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def csv_text(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def dump_json(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


@dataclass(frozen=True)
class RunManifest:
    command: str
    config: dict[str, Any]
    tool_version: str
    seed: int | None
    timestamp: str
    rng: str | None = None

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> RunManifest:
        try:
            return cls(d["command"], dict(d["config"]), d["tool_version"],
                       d.get("seed"), d["timestamp"], d.get("rng"))
        except (KeyError, TypeError) as exc:
            raise UsageError(f"malformed manifest: {exc}") from None


def _outputs(args: argparse.Namespace) -> list[str]:
    return [getattr(args, k) for k in OUTPUT_KEYS if getattr(args, k, None)]


def _config(args: argparse.Namespace) -> dict[str, Any]:
    cfg = {k: v for k, v in vars(args).items()
           if k not in ("func", "manifest", "out_dir")}
    for k in INPUT_KEYS:
        if cfg.get(k):
            cfg[k] = str(Path(cfg[k]).resolve())
    return cfg


def write_manifest(args: argparse.Namespace) -> Path | None:
    """One manifest per output set, next to the first output file."""
    outputs = _outputs(args)
    if not outputs:
        return None
    seed = getattr(args, "seed", None)
    manifest = RunManifest(
        command=args.command,
        config=_config(args),
        tool_version=__version__,
        seed=seed,
        timestamp=datetime.datetime.now(datetime.timezone.utc).isoformat(),
        rng=RNG_ALGORITHM if seed is not None else None,
    )
    first = Path(outputs[0])
    path = first.with_name(first.name + ".manifest.json")
    atomic_write(path, dump_json(asdict(manifest)))
    return path

# }}}


# {{{ input helpers

def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise UsageError(f"expected a comma-separated list of numbers, got {text!r}") \
            from None


def _load_system(args: argparse.Namespace) -> FractionalSystem:
    """The analysed system from ``--system``, ``--cyclic`` or ``--a-list``."""
    if getattr(args, "system", None):
        d = load_json(args.system)
        if args.alpha is not None:
            d = {**d, "alpha": args.alpha}
        return FractionalSystem.from_dict(d)
    return compile_cyclic(_load_cyclic(args))


def _load_cyclic(args: argparse.Namespace) -> CyclicSpec:
    if getattr(args, "cyclic", None):
        d = load_json(args.cyclic)
        if args.alpha is not None:
            d = {**d, "alpha": args.alpha}
        return CyclicSpec.from_dict(d)
    if getattr(args, "a_list", None) and getattr(args, "c_list", None):
        if args.alpha is None:
            raise UsageError("--alpha is required with --a-list/--c-list")
        return CyclicSpec(_floats(args.a_list), _floats(args.c_list), args.alpha)
    raise UsageError("give --system, --cyclic, or --a-list with --c-list")


def _load_graph(args: argparse.Namespace):
    if args.alpha is None:
        raise UsageError("--alpha is required with --graph")
    return laplacian(WeightedGraph.read(args.graph))


def _source_group(p: argparse.ArgumentParser, graph: bool = False) -> None:
    p.add_argument("--system", help="system JSON with A, B, C, alpha")
    p.add_argument("--cyclic", help="cyclic loop JSON with a, c, alpha")
    p.add_argument("--a-list", help="comma-separated decay rates a_i")
    p.add_argument("--c-list", help="comma-separated coupling gains c_i")
    if graph:
        p.add_argument("--graph", help="edge list 'i j weight' (consensus network)")
    p.add_argument("--alpha", type=float, help="fractional order (overrides files)")

# }}}


# {{{ subcommands

def cmd_stability(args: argparse.Namespace) -> int:
    sys_ = _load_system(args)
    verdict = matignon_verdict(sys_)
    report = {"alpha": sys_.alpha, **verdict.to_dict()}
    if not getattr(args, "system", None):
        report["secant"] = assess_cyclic(_load_cyclic(args)).to_dict()
    text = dump_json(report)
    print(text, end="")
    if args.out:
        atomic_write(args.out, text)
    return 0


def cmd_secant(args: argparse.Namespace) -> int:
    if args.a_list or args.c_list or args.cyclic:
        a = assess_cyclic(_load_cyclic(args))
        print(f"bound {fmt(a.bound)}")
        print(f"regime {a.regime.name}")
        print(f"gamma {fmt(a.gamma)}")
        print(f"sufficient_pass {fmt(a.sufficient_pass)}")
        print(f"necessary_applicable {fmt(a.necessary_applicable)}")
        if a.bound_exceeds_uniform_limit:
            print(f"uniform_limit {fmt(a.uniform_limit)}")
        return 0

    if args.n is None or args.alpha is None:
        raise UsageError("secant needs --n and --alpha (or a loop description)")
    bound = secant_bound(args.n, args.alpha)
    regime = SecantRegime.AlwaysStable if math.isinf(bound) else SecantRegime.Conditional
    print(f"bound {fmt(bound)}")
    print(f"regime {regime.name}")
    limit = uniform_stability_limit(args.n, args.alpha)
    if limit != bound:
        print(f"uniform_limit {fmt(limit)}")
    return 0


def cmd_curve(args: argparse.Namespace) -> int:
    ns = args.n or [5, 10, 20]
    if args.steps < 2 or not (0 < args.alpha_min < args.alpha_max < 2):
        raise UsageError("need 0 < alpha-min < alpha-max < 2 and steps >= 2")
    grid = np.linspace(args.alpha_min, args.alpha_max, args.steps)
    curves = {n: bound_curve(n, grid) for n in ns}

    text = csv_text(["alpha", "bound", "n"],
                    ((a, b, n) for n in ns for a, b in curves[n]))
    if args.out:
        atomic_write(args.out, text)
    else:
        print(text, end="")
    if args.svg:
        atomic_write(args.svg, bound_curve_svg(curves))
    return 0


def _h2_pair(args: argparse.Namespace) -> tuple[Callable[[], H2Report], FractionalSystem]:
    if args.graph:
        L = _load_graph(args)
        return (lambda: h2_consensus(L, args.alpha)), consensus_system(L, args.alpha)
    if args.system:
        sys_ = _load_system(args)
        return (lambda: h2_normal(sys_)), sys_
    spec = _load_cyclic(args)
    if spec.is_uniform():
        return (lambda: h2_cyclic(spec)), compile_cyclic(spec)
    sys_ = compile_cyclic(spec)
    return (lambda: h2_normal(sys_)), sys_


def cmd_h2(args: argparse.Namespace) -> int:
    closed, sys_ = _h2_pair(args)
    reports: dict[str, H2Report] = {}
    if args.method in ("closed", "both"):
        reports["closed"] = closed()
    if args.method in ("quadrature", "both"):
        reports["quadrature"] = h2_quadrature(sys_)
    if args.method == "time":
        reports["time"] = impulse_energy(sys_, h=args.h, T=args.T)

    for name, r in reports.items():
        print(f"{name} {fmt(r.value)} +- {r.abs_error_estimate:.3g}")
    if args.out:
        atomic_write(args.out, dump_json({k: r.to_dict() for k, r in reports.items()}))
    return 0


def cmd_consensus(args: argparse.Namespace) -> int:
    L = _load_graph(args)
    x0 = np.asarray(_floats(args.x0)) if args.x0 else np.arange(1.0, L.n + 1.0)
    if x0.size != L.n:
        raise UsageError(f"--x0 has {x0.size} entries, graph has {L.n} nodes")
    rep = consensus_limit(L, x0, args.alpha, args.T, h=args.h)
    report = {"h2": h2_consensus(L, args.alpha).to_dict(), "limit": rep.to_dict()}
    text = dump_json(report)
    print(text, end="")
    if args.out:
        atomic_write(args.out, text)
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    if args.graph:
        L = _load_graph(args)
        sys_ = FractionalSystem.from_state_matrix(-L.matrix, args.alpha)
    else:
        sys_ = _load_system(args)
    x0 = np.asarray(_floats(args.x0)) if args.x0 else np.ones(sys_.n)
    if x0.size != sys_.n:
        raise UsageError(f"--x0 has {x0.size} entries, system has {sys_.n} states")

    traj = gl_integrate(sys_, x0, None, h=args.h, T=args.T)
    header = ["t"] + [f"x_{i + 1}" for i in range(sys_.n)]
    text = csv_text(header, ([t, *x] for t, x in zip(traj.times, traj.states)))
    if args.out:
        atomic_write(args.out, text)
    else:
        print(text, end="")
    if traj.diverged:
        print(f"diverged at t = {fmt(traj.divergence_time)}", file=sys.stderr)
    return 0


def cmd_ensemble(args: argparse.Namespace) -> int:
    cfg = EnsembleConfig(args.count, args.n, args.alpha, args.gamma, args.theta,
                         args.seed)
    specs = generate_ensemble(cfg)
    cloud = pole_cloud(specs)
    verdicts = ensemble_verdicts(specs)

    if args.out_poles:
        atomic_write(args.out_poles, csv_text(
            ["system_id", "k", "re", "im", "arg_margin"],
            ((r.system_id, r.k, r.re, r.im, r.arg_margin) for r in cloud.records)))
    if args.out_verdicts:
        rows = []
        for sid, (spec, v) in enumerate(zip(specs, verdicts)):
            a = assess_cyclic(spec)
            rows.append((sid, spec.gamma, a.bound, a.sufficient_pass, v.kind.value,
                         v.margin))
        atomic_write(args.out_verdicts, csv_text(
            ["system_id", "gamma", "bound", "sufficient_pass", "kind", "margin"], rows))
    if args.svg:
        atomic_write(args.svg, pole_cloud_svg(
            cloud, title=f"n={cfg.n}, alpha={cfg.alpha:g}, gamma={cfg.gamma:g}, "
                         f"theta={cfg.theta:g}"))

    counts: dict[str, int] = {}
    for v in verdicts:
        counts[v.kind.value] = counts.get(v.kind.value, 0) + 1
    print(dump_json({"config": cfg.metadata(), "verdicts": counts,
                     "failures": {str(k): m for k, m in cloud.failures.items()}}),
          end="")
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    from fracnet.verify import CRITERIA, run_criterion

    numbers = [int(v) for v in _floats(args.only)] if args.only else sorted(CRITERIA)
    unknown = [k for k in numbers if k not in CRITERIA]
    if unknown:
        raise UsageError(f"unknown criteria: {unknown}")

    results = []
    for k in numbers:
        r = run_criterion(k)
        print(r.line(), flush=True)
        results.append(r)
    npass = sum(r.passed for r in results)
    print(f"{npass}/{len(results)} criteria passed")
    if args.out:
        atomic_write(args.out, dump_json([r.to_dict() for r in results]))
    return 0 if npass == len(results) else 1

# }}}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracnet",
        description="Stability and robustness of fractional-order networks.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--manifest", help="replay the run recorded in a manifest")
    parser.add_argument("--out-dir", help="with --manifest: write outputs here")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("stability", help="Matignon verdict for a system or loop")
    _source_group(p)
    p.add_argument("--out", help="write the JSON report here")
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("secant", help="secant bound for a cyclic loop")
    p.add_argument("--n", type=int, help="loop length")
    p.add_argument("--cyclic", help="cyclic loop JSON with a, c, alpha")
    p.add_argument("--a-list", help="comma-separated decay rates a_i")
    p.add_argument("--c-list", help="comma-separated coupling gains c_i")
    p.add_argument("--alpha", type=float, help="fractional order")
    p.set_defaults(func=cmd_secant)

    p = sub.add_parser("curve", help="tabulate the secant bound against alpha")
    p.add_argument("--n", type=int, action="append", help="loop length (repeatable)")
    p.add_argument("--alpha-min", type=float, default=0.01)
    p.add_argument("--alpha-max", type=float, default=1.99)
    p.add_argument("--steps", type=int, default=199)
    p.add_argument("--out", help="CSV with columns alpha,bound,n")
    p.add_argument("--svg", help="plot of the curves")
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("h2", help="squared H2 norm")
    _source_group(p, graph=True)
    p.add_argument("--method", choices=("closed", "quadrature", "both", "time"),
                   default="closed")
    p.add_argument("--h", type=float, default=1.0e-3, help="time step (method time)")
    p.add_argument("--T", type=float, default=40.0, help="horizon (method time)")
    p.add_argument("--out", help="write the JSON report here")
    p.set_defaults(func=cmd_h2)

    p = sub.add_parser("consensus", help="consensus norm and simulated limit")
    p.add_argument("--graph", required=True, help="edge list 'i j weight'")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--x0", help="comma-separated initial state (default 1..n)")
    p.add_argument("--T", type=float, default=100.0)
    p.add_argument("--h", type=float, default=None)
    p.add_argument("--out", help="write the JSON report here")
    p.set_defaults(func=cmd_consensus)

    p = sub.add_parser("simulate", help="G-L trajectory of the free response")
    _source_group(p, graph=True)
    p.add_argument("--x0", help="comma-separated initial state (default all ones)")
    p.add_argument("--h", type=float, default=1.0e-2)
    p.add_argument("--T", type=float, default=10.0)
    p.add_argument("--out", help="CSV with columns t,x_1..x_n")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("ensemble", help="random loops with fixed geometric means")
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-poles", help="CSV system_id,k,re,im,arg_margin")
    p.add_argument("--out-verdicts", help="CSV of per-system verdicts")
    p.add_argument("--svg", help="pole cloud plot")
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("verify", help="run the acceptance checks")
    p.add_argument("--only", help="comma-separated criterion numbers")
    p.add_argument("--out", help="write JSON results here")
    p.set_defaults(func=cmd_verify)

    return parser


def _replay(parser: argparse.ArgumentParser, path: str,
            out_dir: str | None) -> argparse.Namespace:
    manifest = RunManifest.from_dict(load_json(path))
    cfg = dict(manifest.config)
    defaults = vars(parser.parse_args([manifest.command]
                                      + _required_stub(manifest.command)))
    args = argparse.Namespace(**{**defaults, **cfg})
    if args.command != manifest.command:
        raise UsageError("manifest command does not match its config")
    if out_dir:
        for k in OUTPUT_KEYS:
            if getattr(args, k, None):
                setattr(args, k, str(Path(out_dir) / Path(getattr(args, k)).name))
    return args


def _required_stub(command: str) -> list[str]:
    # satisfy required flags so that parse_args yields the subcommand defaults
    return {
        "consensus": ["--graph", "-", "--alpha", "1"],
        "ensemble": ["--gamma", "1", "--theta", "1"],
    }.get(command, [])


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        if args.manifest:
            if args.command:
                raise UsageError("--manifest replays a run; do not give a subcommand")
            args = _replay(parser, args.manifest, args.out_dir)
        elif not args.command:
            parser.print_usage(sys.stderr)
            return 2
        code = args.func(args)
        write_manifest(args)
        return code
    except UsageError as exc:
        print(f"fracnet: usage error: {exc}", file=sys.stderr)
        return 2
    except (FracnetError, OSError, json.JSONDecodeError) as exc:
        print(f"fracnet: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
