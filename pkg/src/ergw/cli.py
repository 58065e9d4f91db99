"""Command-line front end: every experiment as a reproducible subcommand."""

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import __version__
from .errors import ErgwError, ParameterError, ResourceError
from .io import csv_string, json_string, rows_to_json

DEFAULT_SEED = 20240917


@dataclass
class ExperimentConfig:
    """A subcommand and its parameters; round-trips through JSON."""

    subcommand: str
    params: dict = field(default_factory=dict)

    def to_json(self):
        return json.dumps({"subcommand": self.subcommand, "params": self.params},
                          sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text):
        obj = json.loads(text)
        if "params" in obj:
            return cls(obj.get("subcommand", ""), dict(obj["params"]))
        # flat documents: every key except subcommand is a parameter
        params = {k: v for k, v in obj.items() if k != "subcommand"}
        return cls(obj.get("subcommand", ""), params)


def _int_list(text):
    return [int(float(t)) for t in str(text).split(",") if t.strip()]


def _float_list(text):
    return [float(t) for t in str(text).split(",") if t.strip()]


def _parse_x(text):
    try:
        x = Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ParameterError(f"cannot parse x={text!r}") from exc
    return x


def _common(p):
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                   help="worker threads; results are reduced in a fixed order")
    p.add_argument("--config", help="JSON experiment config supplying defaults")
    p.add_argument("--dump-config", action="store_true",
                   help="print the effective config as JSON and exit")


def _arc_flags(p):
    p.add_argument("--S", type=float, default=2.0)
    p.add_argument("--tau", type=float, default=0.9)
    p.add_argument("--M", type=int, default=4)


def build_parser():
    ap = argparse.ArgumentParser(prog="ergw", description=__doc__)
    ap.add_argument("--version", action="version", version=f"ergw {__version__}")
    sub = ap.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("sieve", help="tabulate an arithmetic weight")
    _common(p)
    p.add_argument("--weights", required=True, help="d, mu, mu_tilde, theta, sigma, ...")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--s", type=float, help="exponent for sigma, J, power")

    p = sub.add_parser("convolve", help="Dirichlet convolution of two weights")
    _common(p)
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--s", type=float)

    p = sub.add_parser("expsum", help="divisor (or Mobius) exponential sums")
    _common(p)
    p.add_argument("--n", type=int, required=True)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--x", help="point as a fraction or decimal, read exactly")
    g.add_argument("--grid", type=int, help="evaluate at j/G for all j")
    g.add_argument("--rational-scan", type=int, metavar="QMAX",
                   help="rational main-term diagnostics for q <= QMAX")
    p.add_argument("--method", choices=("direct", "hyperbola", "batch"))
    p.add_argument("--weights", choices=("d", "mu"), default="d")

    p = sub.add_parser("arcs", help="major/minor arc classification")
    _common(p)
    p.add_argument("--n", type=int, required=True)
    _arc_flags(p)
    p.add_argument("--strict", action="store_true",
                   help="refuse to lower S when the schedule is infeasible")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--x")
    g.add_argument("--grid", type=int, default=None)

    p = sub.add_parser("kernel-error", help="sup |T_n - phi_n| on a grid")
    _common(p)
    p.add_argument("--n", type=_int_list, required=True, help="one or more n, comma separated")
    _arc_flags(p)
    p.add_argument("--grid", type=int, default=2**14)
    p.add_argument("--variant", choices=("matched", "printed"), default="matched")
    p.add_argument("--s-hi", type=int, default=None, help="extend the bands up to this index")
    p.add_argument("--strict", action="store_true")
    p.add_argument("--points", action="store_true", help="emit one row per grid point")

    p = sub.add_parser("maximal", help="dyadic maximal and Hardy-Littlewood ratios")
    _common(p)
    p.add_argument("--weights", default="d")
    p.add_argument("--kmax", type=int, default=10)
    p.add_argument("--p", type=_float_list, default=[1.5, 2.0, 3.0])
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--count", type=int, default=20, help="number of random signals")
    p.add_argument("--length", type=int, default=256)

    p = sub.add_parser("oscillation", help="normalized oscillation sums")
    _common(p)
    p.add_argument("--weights", default="d")
    p.add_argument("--rho", type=float, default=2.0)
    p.add_argument("--J", type=int, default=16, help="number of blocks N_j = 4^j")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--length", type=int, default=4096)
    p.add_argument("--exact-limit", type=int, default=2**21)

    p = sub.add_parser("ergodic-avg", help="weighted Birkhoff averages")
    _common(p)
    p.add_argument("--system", choices=("rotation", "doubling", "bernoulli"), default="rotation")
    p.add_argument("--alpha", type=float, default=math.sqrt(2) - 1)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--x0", type=float, default=0.0, help="start point for the rotation")
    p.add_argument("--weights", default="d")
    p.add_argument("--s", type=float)
    p.add_argument("--n", type=int, default=2**16, help="largest n")
    p.add_argument("--n-grid", type=_int_list, default=None, help="explicit comma-separated grid")
    p.add_argument("--observable", default='{"type": "character", "m": 1}',
                   help="observable as JSON, e.g. {\"type\": \"haar\"}")

    p = sub.add_parser("verify", help="run the acceptance checks")
    _common(p)
    p.add_argument("--quick", action="store_true", help="small-N subset")
    p.add_argument("--only", type=lambda t: t.split(","), default=None,
                   help="comma-separated check ids (e.g. C1,C5)")
    return ap


def _emit(args, header, rows, meta=None):
    rows = list(rows)
    if args.format == "json":
        if meta is None:
            text = rows_to_json(header, rows)
        else:
            text = json_string({"meta": meta, "rows": [dict(zip(header, r)) for r in rows]})
    else:
        text = csv_string(header, rows)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_sieve(args):
    from .arith import sieve
    t = sieve(args.weights, args.N, args.s)
    _emit(args, ["n", "value", "summatory"], t.rows())


def cmd_convolve(args):
    from .arith import PARAM_WEIGHTS, canonical_name, dirichlet_convolve, sieve
    sa = args.s if canonical_name(args.a) in PARAM_WEIGHTS else None
    sb = args.s if canonical_name(args.b) in PARAM_WEIGHTS else None
    c = dirichlet_convolve(sieve(args.a, args.N, sa), sieve(args.b, args.N, sb))
    _emit(args, ["n", "value", "summatory"], c.rows())


def cmd_expsum(args):
    from . import expsum
    header = ["n", "x_num", "x_den_or_grid_index", "re", "im", "method"]
    if args.rational_scan:
        rows = [(r.n, r.a, r.q, r.value.real, r.value.imag, r.main, r.defect, r.normalized)
                for r in expsum.rational_scan([args.n], args.rational_scan)]
        _emit(args, ["n", "a", "q", "re", "im", "main", "defect", "normalized"], rows)
        return
    if args.grid:
        if args.weights == "mu":
            from .arith import sieve
            vals = expsum.grid_transform(sieve("mu", args.n).values.astype(float), args.grid)
        else:
            vals = expsum.batch(args.n, args.grid).values
        rows = [(args.n, j, args.grid, v.real, v.imag, "batch") for j, v in enumerate(vals)]
        _emit(args, header, rows)
        return
    x = _parse_x(args.x if args.x is not None else "0")
    if args.weights == "mu":
        r = expsum.mobius_expsum(args.n, x)
    else:
        r = expsum.evaluate(args.n, x, args.method or "hyperbola")
    _emit(args, header, [(args.n, x.numerator, x.denominator, r.value.real, r.value.imag, r.method)])


def _params(args, n):
    from .arcs import default_parameters
    return default_parameters(n, args.S, args.tau, args.M, relax=not args.strict)


def cmd_arcs(args):
    from . import arcs
    params = _params(args, args.n)
    meta = params.as_dict()
    header = ["x_num", "x_den", "is_major", "a", "q", "distance", "P_n", "Q_n"]
    if args.x is not None:
        loc = arcs.classify(_parse_x(args.x), params)
        rows = [(loc.x.numerator, loc.x.denominator, loc.is_major, loc.center.a, loc.center.q,
                 float(loc.distance), params.P, params.Q)]
    else:
        G = args.grid or 1024
        cls = arcs.classify_grid(G, params)
        rows = []
        for j in range(G):
            maj = bool(cls.is_major[j])
            rows.append((j, G, maj, int(cls.a[j]) if maj else None,
                         int(cls.q[j]) if maj else None,
                         float(cls.distance[j]) if maj else None, params.P, params.Q))
    _emit(args, header, rows, meta if args.format == "json" else None)


def cmd_kernel_error(args):
    from .kernels import approx_error
    summary, points = [], []
    for n in args.n:
        params = _params(args, n)
        rep = approx_error(n, params, args.grid, variant=args.variant, s_hi=args.s_hi,
                           threads=args.threads)
        summary.append((n, args.grid, args.S, params.S, params.relaxed, params.P, params.Q,
                        rep.sup_major, rep.sup_minor, rep.sup_total, rep.normalized))
        if args.points:
            points.extend(rep.rows())
    if args.points:
        _emit(args, ["n", "x", "re_T", "im_T", "re_phi", "im_phi", "arc_class", "abs_err"], points)
    else:
        _emit(args, ["n", "grid", "S_requested", "S_used", "relaxed", "P_n", "Q_n",
                     "sup_major", "sup_minor", "sup_total", "normalized"], summary)


def _random_signals(seed, count, length):
    from .shiftmodel import LatticeSignal
    rng = np.random.default_rng(seed)
    return [LatticeSignal(0, rng.random(int(rng.integers(1, length + 1)))) for _ in range(count)]


def cmd_maximal(args):
    from . import shiftmodel
    fam = shiftmodel.family(args.weights, N=2**args.kmax)
    signals = _random_signals(args.seed, args.count, args.length)
    rows = []
    for p in args.p:
        for k in range(args.kmax + 1):
            worst = max(shiftmodel.dyadic_maximal(fam, g, k, p).ratio for g in signals)
            rows.append(("dyadic-maximal", p, k, worst))
    for p in args.p:
        bound = shiftmodel.hardy_littlewood_bound(p)
        worst = max(shiftmodel.cesaro_maximal_ratio(g, p).ratio for g in signals)
        rows.append(("hardy-littlewood", p, args.length, worst / bound))
    _emit(args, ["experiment", "p", "n_or_k", "ratio"], rows)


def cmd_oscillation(args):
    from . import shiftmodel
    blocks = [4**j for j in range(1, args.J + 2)]
    fam = shiftmodel.family(args.weights, N=args.exact_limit)
    g = shiftmodel.LatticeSignal(0, np.random.default_rng(args.seed).choice([-1.0, 1.0], args.length))
    rep = shiftmodel.oscillation_sum(fam, g, blocks, args.rho, exact_limit=args.exact_limit)
    rows = []
    for J in range(1, args.J + 1):
        rows.append(("oscillation", 2, J, rep.normalized(J)))
    for J in range(1, args.J + 1):
        rows.append(("oscillation-root", 2, J, rep.normalized_root(J)))
    _emit(args, ["experiment", "p", "n_or_k", "ratio"], rows)


def cmd_ergodic_avg(args):
    from . import dynsys
    from .arith import PARAM_WEIGHTS, canonical_name, sieve
    grid = args.n_grid or [2**k for k in range(0, args.n.bit_length()) if 2**k <= args.n]
    nmax = max(grid)
    key = canonical_name(args.weights)
    table = sieve(key, nmax, args.s if key in PARAM_WEIGHTS else None)
    system = dynsys.make_system(args.system, args.alpha, args.seed)
    x0 = args.x0 if args.system == "rotation" else None
    spec = args.observable if isinstance(args.observable, dict) else json.loads(args.observable)
    f = dynsys.observable_from_spec(spec)
    series = dynsys.weighted_average(system, table, f, x0, grid)
    rows = [(args.system, key, n, complex(v).real, complex(v).imag)
            for n, v in zip(series.n_grid, series.values)]
    _emit(args, ["system", "weights", "n", "re_avg", "im_avg"], rows)


def cmd_verify(args):
    from . import acceptance
    ids = acceptance.resolve(args.only) if args.only else None
    results = acceptance.run_checks(ids, quick=args.quick, threads=args.threads,
                                    echo=None if args.out else print)
    lines = [r.line() for r in results]
    ok = all(r.passed for r in results)
    summary = f"{sum(r.passed for r in results)}/{len(results)} checks passed"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines + [summary]) + "\n")
    print(summary)
    return 0 if ok else 1


COMMANDS = {
    "sieve": cmd_sieve,
    "convolve": cmd_convolve,
    "expsum": cmd_expsum,
    "arcs": cmd_arcs,
    "kernel-error": cmd_kernel_error,
    "maximal": cmd_maximal,
    "oscillation": cmd_oscillation,
    "ergodic-avg": cmd_ergodic_avg,
    "verify": cmd_verify,
}

_SKIP = {"out", "format", "threads", "config", "dump_config", "subcommand"}


def _apply_config(parser, argv):
    """Re-parse with defaults taken from a --config JSON document."""
    args = parser.parse_args(argv)
    if not getattr(args, "config", None):
        return args
    with open(args.config, encoding="utf-8") as fh:
        cfg = ExperimentConfig.from_json(fh.read())
    if cfg.subcommand and cfg.subcommand != args.subcommand:
        raise ParameterError(f"config is for {cfg.subcommand!r}, not {args.subcommand!r}")
    sub = parser._subparsers._group_actions[0].choices[args.subcommand]
    known = {a.dest for a in sub._actions}
    defaults = {}
    for k, v in cfg.params.items():
        dest = k.replace("-", "_")
        if dest == "f":
            dest = "observable"
        if dest not in known:
            raise ParameterError(f"unknown config key {k!r}")
        defaults[dest] = v
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def run(argv=None):
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = _apply_config(parser, argv)
        if args.dump_config:
            params = {k: v for k, v in vars(args).items() if k not in _SKIP}
            print(ExperimentConfig(args.subcommand, params).to_json())
            return 0
        rc = COMMANDS[args.subcommand](args)
        return 0 if rc is None else rc
    except ResourceError as exc:
        print(f"ergw: resource limit: {exc}", file=sys.stderr)
        return 3
    except (ParameterError, ErgwError) as exc:
        print(f"ergw: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"ergw: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(run())
