"""Command-line front end.

Exit codes: 0 success, 1 input/validation/usage error, 2 non-positive state
(``gns``) or a failed check (``check``).  Every output embeds a hash of the
resolved configuration: a ``config_hash`` field in JSON, a leading
``# config_hash:`` comment in CSV.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from fractions import Fraction
from pathlib import Path

import numpy as np

from .algebra import BorchersElement, load_test_functions
from .errors import BorchersError, NonPositiveState, OddMomentRequested
from .gns import gns_construct
from .matrix_model import MatrixModelSpec, MomentTable, gaussian_moments_wick, mc_moments, mc_trace_moments
from .serialization import complex_from_pairs, config_hash
from .states import (
    SeminormSpec,
    check_hssc,
    check_krein,
    check_locality,
    check_positivity,
    check_translation_invariance,
    state_from_dict,
)
from .words import WordBasis
from . import ym2

CHECKS = ("positivity", "translation", "locality", "hssc", "krein")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _read_json(path: str):
    with open(path) as fh:
        return json.load(fh)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _json_out(doc: dict, out: str | None) -> None:
    _emit(json.dumps(doc, indent=2, sort_keys=True, default=_default) + "\n", out)


def _default(obj):
    if isinstance(obj, (np.generic,)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Fraction):
        return str(obj)
    raise TypeError(type(obj).__name__)


def _rational(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def _load_state_and_generators(state_path: str, gens_path: str):
    gens = load_test_functions(_read_json(gens_path))
    doc = _read_json(state_path)
    if not isinstance(doc, dict):
        raise ValueError("state file must hold a JSON object")
    state = state_from_dict(doc, gens[0].space, gens[0].k, base_path=state_path)
    return state, gens, doc


# ---------------------------------------------------------------------------
# gns
# ---------------------------------------------------------------------------


def cmd_gns(args) -> int:
    state, gens, doc = _load_state_and_generators(args.state, args.generators)
    config = {
        "command": "gns",
        "state": doc,
        "generators": [g.to_dict() for g in gens],
        "max_len": args.max_len,
        "tol": args.tol,
        "krein": args.krein,
    }
    h = config_hash(config)
    basis = WordBasis(tuple(gens), args.max_len)
    try:
        rep = gns_construct(state, basis, tol=args.tol, krein=args.krein)
    except NonPositiveState as exc:
        _json_out(
            {
                "config_hash": h,
                "error": "NonPositiveState",
                "min_eigenvalue": exc.min_eigenvalue,
                "witness": exc.witness,
            },
            args.out,
        )
        print(f"error: {exc}", file=sys.stderr)
        return 2
    report = rep.to_dict()
    report["config_hash"] = h
    _json_out(report, args.out)
    return 0


# ---------------------------------------------------------------------------
# ym2
# ---------------------------------------------------------------------------


def cmd_ym2(args) -> int:
    tau = args.tau if args.tau is not None else args.epsilon
    if tau is None:
        raise UsageError("one of --tau or --epsilon is required")
    params = ym2.SurfaceParams.from_tau(
        args.genus, args.N, tau, args.cutoff, area=args.area, grid_points=args.grid_points
    )
    config = {"command": "ym2", "genus": args.genus, "N": args.N, "tau": tau, "cutoff": args.cutoff,
              "area": args.area, "grid_points": args.grid_points, "two_point": args.two_point}
    lines = [f"# config_hash: {config_hash(config)}"]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        Z = ym2.partition_function(params, tol=args.tol)
    lines.append("genus,N,tau,cutoff,Z,tail")
    lines.append(f"{args.genus},{args.N},{tau!r},{args.cutoff},{Z.value!r},{Z.tail_estimate!r}")
    if args.two_point:
        a, b, x, y = args.two_point
        p, m = ym2.pq_coefficients(a, b, args.N)
        value = ym2.two_point_xi(a, b, x, y, params)
        lines.append("a,b,x,y,p,m,value")
        lines.append(f"{a},{b},{x},{y},{_rational(p)},{_rational(m)},{value.real!r}")
    _emit("\n".join(lines) + "\n", args.out)
    return 0


# ---------------------------------------------------------------------------
# mm
# ---------------------------------------------------------------------------


def _resolve_seed(flag, file_seed) -> int:
    if flag is not None:
        return int(flag)
    env = os.environ.get("BORCHERS_SEED")
    if env not in (None, ""):
        try:
            return int(env)
        except ValueError:
            raise ValueError(f"BORCHERS_SEED must be an integer, got {env!r}") from None
    return int(file_seed or 0)


def cmd_mm(args) -> int:
    doc = _read_json(args.spec)
    if not isinstance(doc, dict):
        raise ValueError("matrix model spec must be a JSON object")
    doc = dict(doc)
    doc["seed"] = _resolve_seed(args.seed, doc.get("seed"))
    spec = MatrixModelSpec.from_dict(doc)
    req = _read_json(args.moments)
    if isinstance(req, dict):
        index_lists = req.get("index_lists", [])
        powers = req.get("trace_powers", [])
    else:
        index_lists, powers = req, []
    index_lists = [tuple(tuple(int(i) for i in pair) for pair in idx) for idx in index_lists]
    config = {"command": "mm", "spec": spec.to_dict(), "index_lists": index_lists,
              "trace_powers": powers, "samples": args.samples, "method": args.method}
    h = config_hash(config)
    if args.method == "wick":
        if spec.couplings != {2: -0.5}:
            raise ValueError("--method wick applies only to the Gaussian model")
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", OddMomentRequested)
            vals = gaussian_moments_wick(spec.N, index_lists)
        table = MomentTable(spec.N, {k: (complex(v), 0.0, 0) for k, v in zip(index_lists, vals)}, "wick")
        odd = sum(issubclass(w.category, OddMomentRequested) for w in caught)
    else:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            table = mc_moments(spec, index_lists, args.samples)
        odd = sum(len(k) % 2 for k in index_lists) if spec.is_even() else 0
    if odd:
        table.meta["odd_moments_zeroed"] = str(odd)
    comments = {"config_hash": h, **{k: v for k, v in table.meta.items() if k not in ("method", "N")}}
    _emit(table.to_csv(comments=comments), args.out)
    if powers:
        summary = {"config_hash": h, "trace_moments": mc_trace_moments(spec, powers, args.samples)}
        if args.summary:
            _json_out(summary, args.summary)
        else:
            print(json.dumps(summary, default=_default), file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------
# check
# ---------------------------------------------------------------------------


def _lattice_shifts(space) -> list[np.ndarray]:
    shifts = []
    for axis, (per, h) in enumerate(zip(space.periods, space.spacing)):
        if per is None:
            continue
        for m in range(1, int(round(per / h))):
            a = np.zeros(space.dim)
            a[axis] = m * h
            shifts.append(a)
    return shifts


def cmd_check(args) -> int:
    wanted = list(CHECKS) if args.all else [c for c in CHECKS if getattr(args, c)]
    if not wanted:
        raise UsageError("select at least one check (or --all)")
    state, gens, doc = _load_state_and_generators(args.state, args.generators)
    alpha = None
    if args.alpha:
        alpha = complex_from_pairs(_read_json(args.alpha))
    config = {"command": "check", "state": doc, "generators": [g.to_dict() for g in gens],
              "checks": wanted, "max_len": args.max_len, "tol": args.tol,
              "alpha": None if alpha is None else alpha.tolist()}
    h = config_hash(config)
    reports = {}
    basis = WordBasis(tuple(gens), args.max_len)
    for name in wanted:
        if name == "positivity":
            rep = check_positivity(state, gens, args.max_len, args.tol)
        elif name == "translation":
            shifts = _lattice_shifts(gens[0].space)
            if not shifts:
                reports[name] = {"check": name, "passed": None, "skipped": "space has no periodic axis"}
                continue
            rep = check_translation_invariance(state, gens, shifts, args.tol, args.max_len)
        elif name == "locality":
            pairs = [(f, g) for i, f in enumerate(gens) for g in gens[i + 1 :]
                     if not np.intersect1d(f.support(), g.support()).size]
            if not pairs:
                reports[name] = {"check": name, "passed": None, "skipped": "no generator pair has disjoint supports"}
                continue
            cap = basis.cap + 2
            unit = BorchersElement.unit(gens[0].space, gens[0].k, cap)
            singles = [BorchersElement.monomial([g], max_degree=cap) for g in gens]
            sandwiches = [(unit, unit)] + [(u, v) for u in singles for v in singles]
            results = [check_locality(state, f, g, sandwiches, args.tol) for f, g in pairs]
            worst = max(results, key=lambda r: r.values["max_abs"])
            worst.values["n_pairs"] = len(pairs)
            rep = worst
        elif name == "hssc":
            elements = [e for w, e in zip(basis.words, basis.elements) if w]
            samples = [(f, g) for f in elements for g in elements]
            rep = check_hssc(state, SeminormSpec.uniform("l2", 1.0, basis.cap), samples, args.tol)
        else:
            dim = gens[0].flat().size
            a = np.eye(dim) if alpha is None else alpha
            if a.shape != (dim, dim):
                raise ValueError(f"alpha must be {dim}x{dim}")
            samples = [(f, g) for f in gens for g in gens]
            rep = check_krein(state, a, samples, args.tol)
        reports[name] = rep.to_dict()
    failed = [n for n, r in reports.items() if r["passed"] is False]
    _json_out({"config_hash": h, "checks": reports, "failed": failed, "passed": not failed}, args.out)
    return 2 if failed else 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="borchers", description="Wightman-state reconstruction, YM2 heat-kernel sums and matrix models.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    g = sub.add_parser("gns", help="GNS reconstruction report for a state and generator set")
    g.add_argument("state", help="state JSON ({'kind': ..., 'trace_mode': ...})")
    g.add_argument("generators", help="test-function JSON (single function or a 'generators' bundle)")
    g.add_argument("--max-len", type=int, default=2)
    g.add_argument("--tol", type=float, default=1e-10)
    g.add_argument("--krein", action="store_true", help="keep negative directions with a sign metric")
    g.add_argument("--out")
    g.set_defaults(func=cmd_gns)

    y = sub.add_parser(
        "ym2",
        help="YM2 partition function and two-point function (CSV)",
        description="tau = e^2 A / 2 sets the Boltzmann weight exp(-tau C2). "
        "--epsilon is accepted as an alias and is used as tau unchanged.",
    )
    y.add_argument("--genus", type=int, required=True)
    y.add_argument("--N", type=int, required=True)
    y.add_argument("--tau", type=float)
    y.add_argument("--epsilon", type=float, help="alias of --tau (tau = epsilon)")
    y.add_argument("--cutoff", type=int, required=True, help="maximum number of Young-diagram boxes")
    y.add_argument("--area", type=float, default=1.0)
    y.add_argument("--grid-points", type=int, default=16, help="uniform grid size for the contact delta")
    y.add_argument("--tol", type=float, help="warn when the last shell exceeds this")
    y.add_argument("--two-point", type=int, nargs=4, metavar=("A", "B", "X", "Y"),
                   help="color indices (from 1) and grid indices (from 0)")
    y.add_argument("--out")
    y.set_defaults(func=cmd_ym2)

    m = sub.add_parser(
        "mm",
        help="matrix-model moments (CSV)",
        description="Weight exp(N tr S(M)); seed precedence: --seed > BORCHERS_SEED > spec file.",
    )
    m.add_argument("spec", help='JSON {"N": .., "couplings": {"2": -0.5}, "seed": ..}')
    m.add_argument("--moments", required=True, help="JSON list of index lists, or {index_lists, trace_powers}")
    m.add_argument("--samples", type=int, default=100_000)
    m.add_argument("--seed", type=int)
    m.add_argument("--method", choices=("mc", "wick"), default="mc")
    m.add_argument("--summary", help="where to write trace-moment JSON (default stderr)")
    m.add_argument("--out")
    m.set_defaults(func=cmd_mm)

    c = sub.add_parser("check", help="run state-axiom checks and emit one JSON report")
    c.add_argument("state")
    c.add_argument("generators")
    c.add_argument("--all", action="store_true")
    for name in CHECKS:
        c.add_argument(f"--{name}", action="store_true")
    c.add_argument("--max-len", type=int, default=1)
    c.add_argument("--tol", type=float, default=1e-10)
    c.add_argument("--alpha", help="JSON matrix ([re, im] pairs) for the Krein check; identity by default")
    c.add_argument("--out")
    c.set_defaults(func=cmd_check)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a command is required")
        for name in ("tol",):
            if getattr(args, name, None) is not None and getattr(args, name) <= 0:
                raise UsageError("--tol must be positive")
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError, IndexError, BorchersError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
