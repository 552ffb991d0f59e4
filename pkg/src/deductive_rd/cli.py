"""``deductive-rd`` command line.

Exit codes: 0 success, 2 validation failure (the report still goes to stdout,
with the failing witness), 1 usage or parse error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Any

import numpy as np

from . import consequences as cq
from . import distortion as dist
from . import generators as gen
from . import instance
from . import rates
from .datalog import DatalogError, Fact, parse_facts
from .info import InfeasibleError, InstanceTooLarge, brute_force_min_information, default_grid, entropy
from .source import DeductiveSource, depth_profile, essential_set, extract_core, is_order_robust

EXIT_OK, EXIT_USAGE, EXIT_INVALID = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


# ---------------------------------------------------------------------------
# rendering


def _num(v: float) -> Any:
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return float(f"{v:.12g}")


def plain(obj: Any) -> Any:
    """JSON-ready copy: facts as text, sets sorted, floats at 12 significant digits."""
    if isinstance(obj, Fact):
        return str(obj)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, float, np.integer, np.floating)):
        return _num(obj)
    if isinstance(obj, (set, frozenset)):
        return sorted(plain(x) for x in obj)
    if isinstance(obj, (list, tuple)):
        return [plain(x) for x in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, dict):
        return {str(plain(k)) if not isinstance(k, str) else k: plain(v) for k, v in obj.items()}
    return obj


def _cell(v: Any) -> str:
    if isinstance(v, float):
        return f"{v:.12g}"
    if isinstance(v, list):
        return "{" + ",".join(_cell(x) for x in v) + "}"
    if isinstance(v, dict):
        return ";".join(f"{k}:{_cell(x)}" for k, x in v.items())
    if v is None:
        return ""
    return str(v)


def _flatten(d: dict, prefix: str = "") -> list[tuple[str, Any]]:
    out = []
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict) and v:
            out.extend(_flatten(v, key + "."))
        elif isinstance(v, list) and v and all(isinstance(x, dict) for x in v):
            for i, x in enumerate(v):
                out.extend(_flatten(x, f"{key}.{i}."))
        else:
            out.append((key, v))
    return out


def _with_unit(key: str, value: Any, units: set[str]) -> str:
    text = _cell(value)
    return f"{text} bits" if key.split(".")[-1] in units and not isinstance(value, (list, dict)) else text


def render(report: dict, fmt: str, table: str | None = None, units: tuple[str, ...] = ()) -> str:
    data = plain(report)
    if fmt == "json":
        return json.dumps(data, indent=2) + "\n"
    rows = data.get(table) if table else None
    scalars = {k: v for k, v in data.items() if k != table}
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        if rows:
            cols = list(rows[0])
            writer.writerow(cols)
            writer.writerows([_cell(r[c]) for c in cols] for r in rows)
        else:
            writer.writerow(["key", "value"])
            writer.writerows([k, _cell(v)] for k, v in _flatten(scalars))
        return buf.getvalue()
    unit_keys = set(units)
    lines = [f"{k}={_with_unit(k, v, unit_keys)}" for k, v in _flatten(scalars)]
    if rows:
        cols = list(rows[0])
        if lines:
            lines.append("")
        lines.append("  ".join(cols))
        for r in rows:
            lines.append("  ".join(_with_unit(c, r[c], unit_keys) for c in cols))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# inputs


def load_source(spec: str) -> DeductiveSource:
    path = Path(spec)
    if path.exists():
        return instance.load(path)
    if spec.upper() in gen.EXAMPLES:
        return gen.gen_example(spec)
    raise UsageError(f"no instance file or example named {spec!r}")


def _facts_file(path: str) -> list[Fact]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(str(exc)) from None
    return parse_facts(text)


def _channel(args) -> cq.ChannelModel | float:
    if args.channel:
        try:
            return cq.ChannelModel.load(args.channel)
        except OSError as exc:
            raise UsageError(str(exc)) from None
    if args.capacity is not None:
        return args.capacity
    raise UsageError("give --channel FILE or --capacity C")


def _verdict(v: dist.Verdict) -> dict:
    return v.as_dict()


# ---------------------------------------------------------------------------
# commands (each returns (report, table key, exit code))


def cmd_core(args):
    src = load_source(args.instance)
    dec = extract_core(src)
    rob = is_order_robust(src)
    return {
        "core": list(dec.core),
        "redundant": list(dec.redundant),
        "P_A": dec.mass,
        "pi_A": dec.cond or {},
        "essential": sorted(essential_set(src)),
        "order_robust": rob.robust,
        "essential_generates": rob.essential_generates,
        "n_stored": len(src.stored),
        "n_core": len(dec.core),
    }, None, EXIT_OK


def cmd_check(args):
    src = load_source(args.instance)
    sets = dist.recon_sets(src)
    verdicts = [dist.check_core_disjoint(src, sets), dist.check_core_coverage(src, sets)]
    try:
        verdicts.append(dist.check_pairwise_realisability(src, sets))
    except dist.CoreTooLarge as exc:
        verdicts.append(dist.Verdict("pairwise_realisability", False, None, str(exc)))
    if args.delta is not None:
        verdicts.append(dist.check_delta_disjoint(src, args.delta))
    rob = is_order_robust(src)
    verdicts.append(dist.Verdict("order_robust", rob.robust, None if rob.robust else (rob.core - rob.essential,)))
    outside = [t for t in src.recon if t not in src.cn]
    verdicts.append(dist.Verdict("recon_inside_closure", not outside, tuple(outside[:1]) or None))
    report = {"checks": [_verdict(v) for v in verdicts]}
    code = EXIT_OK if all(verdicts) else EXIT_INVALID
    return report, "checks", code


def _rate_report(r: rates.RateReport, src: DeductiveSource) -> dict:
    out = r.as_dict()
    out["hamming_baseline"] = entropy(src.p)
    return out


def cmd_rates(args):
    src = load_source(args.instance)
    if args.restrict:
        report = rates.restricted_zero_rate(src, _facts_file(args.restrict))
    elif args.delta is not None:
        try:
            report = rates.rate_depth_zero(src, args.delta)
        except rates.AssumptionError as exc:
            direct = rates.direct_zero_rate(src, delta=args.delta)
            report = rates.RateReport(direct.value, direct.regime, (exc.verdict,) if exc.verdict else (), direct.witnesses)
    elif args.regime == "disjoint":
        report = rates.zero_rate_disjoint(src)
    elif args.regime == "graph":
        report = rates.zero_rate_graph(src)
    elif args.regime == "hypergraph":
        report = rates.zero_rate_general(src)
    else:
        try:
            report = rates.zero_rate_disjoint(src)
        except rates.AssumptionError:
            report = rates.zero_rate_general(src)
    return _rate_report(report, src), None, EXIT_OK


def cmd_rd_curve(args):
    src = load_source(args.instance)
    grid = args.grid
    if args.distortion == "closure":
        if all(t in src.cn for t in src.recon):
            curve = rates.rd_curve(src, grid, tol=args.tolerance)
            method = "core-decomposition"
        else:
            d = dist.distortion_matrix(src)
            curve = rates.direct_rd_curve(src, default_grid(src.p, d.values, grid), tol=args.tolerance)
            method = "direct"
    elif args.distortion == "delta":
        if args.delta is None:
            raise UsageError("--distortion delta needs --delta N")
        curve = rates.rate_depth_curve(src, args.delta, grid, tol=args.tolerance)
        method = "delta-core-decomposition"
    else:
        d = dist.distortion_matrix(src, "hamming")
        curve = rates.direct_rd_curve(src, default_grid(src.p, d.values, grid), "hamming", tol=args.tolerance)
        method = "direct"
    table = [{"D": pt.D, "R": pt.R, "slope": pt.slope, "iterations": pt.iterations} for pt in curve.points]
    return {"distortion": args.distortion, "method": method, "unit": "bits", "curve": table}, "curve", EXIT_OK


def cmd_depth_sweep(args):
    src = load_source(args.instance)
    profile = depth_profile(src)
    sweep = rates.rate_depth_sweep(src)
    table = [
        {"delta": d, "phi": sweep.phi[d], "P_delta": profile.mass(d), "core": sorted(profile.core(d))}
        for d in range(len(sweep.phi))
    ]
    return {"max_depth": profile.max_depth, "stable_depth": sweep.stable_depth, "sweep": table}, "sweep", EXIT_OK


def cmd_hypergraph(args):
    src = load_source(args.instance)
    sets = dist.recon_sets(src)
    g = rates.build_gamma0(src, sets)
    inc = rates.incompatibility_graph(src, sets)
    table = [{"hyperedge": sorted(e), "witness": g.witness[e]} for e in g.edges]
    return {
        "core": list(g.vertices),
        "zero_sets": {str(a): sorted(sets[a]) for a in g.vertices},
        "incompatible_pairs": sorted(sorted(map(str, e)) for e in inc.edges),
        "hyperedges": table,
    }, "hyperedges", EXIT_OK


def cmd_thresholds(args):
    src = load_source(args.instance)
    if args.kappa is None:
        raise UsageError("thresholds needs --kappa X")
    channel = _channel(args)
    th = cq.depth_thresholds(src, channel, args.kappa)
    sep = cq.separation_check(src, channel, args.kappa)
    dec = extract_core(src)
    cap = cq._capacity(channel)
    report = {
        "kappa": args.kappa,
        "capacity": cap,
        "budget": th.budget,
        "delta_ach": th.achievable,
        "delta_nec": th.necessary,
        "regime": th.regime,
        "max_depth": th.max_depth,
        "zero_rate": sep.rate,
        "separation": sep.verdict,
    }
    if cap > 0 and dec.core:
        b = cq.blocklength_benchmarks(len(src.stored), len(dec.core), cap)
        report["benchmarks"] = {"n_hamming": b.n_hamming, "n_closure": b.n_closure, "ratio": b.ratio, "note": b.note}
    report["phi"] = [{"delta": d, "phi": v} for d, v in enumerate(th.phi)]
    return report, "phi", EXIT_OK


def _read_kernel(path: str, src: DeductiveSource) -> np.ndarray:
    ch = cq.ChannelModel.load(path)
    cols = [str(t) for t in src.recon]
    if list(ch.outputs) != cols:
        raise UsageError(f"kernel columns must be the reconstruction alphabet {cols}")
    if ch.inputs and not all(i.startswith("x") for i in ch.inputs) and list(ch.inputs) != [str(s) for s in src.stored]:
        raise UsageError("kernel rows must follow the stored order")
    return ch.matrix


def cmd_fano(args):
    src = load_source(args.instance)
    if args.kernel:
        r = cq.fano_bound(src, _read_kernel(args.kernel, src))
        report = {"information": r.information, "eps_cn": r.eps, "bound": r.bound, "holds": r.holds}
        return report, None, EXIT_OK if r.holds else EXIT_INVALID
    g = gen.rng(args.seed)
    worst, violations = math.inf, 0
    for _ in range(args.samples):
        r = cq.fano_bound(src, cq.random_kernel(len(src.stored), len(src.recon), g))
        slack = r.information - r.bound
        worst = min(worst, slack)
        violations += slack < -1e-12
    report = {"samples": args.samples, "seed": args.seed, "violations": violations, "min_slack": worst}
    return report, None, EXIT_OK if violations == 0 else EXIT_INVALID


def _gen_spec(args) -> gen.GeneratorSpec:
    pairs: list[tuple[str, str]] = []
    if args.config:
        try:
            base = gen.GeneratorSpec.parse(Path(args.config).read_text())
        except OSError as exc:
            raise UsageError(str(exc)) from None
        pairs += [("family", base.family), ("seed", str(base.seed))]
        pairs += [(k, str(v)) for k, v in base.params.items()]
    if args.family:
        pairs.append(("family", args.family))
    if args.seed_given or not args.config:
        pairs.append(("seed", str(args.seed)))
    for key in ("name", "k", "depth", "stored_fraction", "branches", "probs", "recon", "L", "S", "I", "density", "mu"):
        value = getattr(args, key, None)
        if value is not None:
            pairs.append((key, str(value)))
    try:
        return gen.GeneratorSpec.from_pairs(pairs)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_gen(args):
    spec = _gen_spec(args)
    src = spec.build()
    text = instance.dumps(src, spec.meta())
    if args.output:
        Path(args.output).write_text(text)
        return None, None, EXIT_OK
    return text, None, EXIT_OK


def cmd_oracle(args):
    src = load_source(args.instance)
    general = rates.zero_rate_general(src)
    direct = rates.direct_zero_rate(src)
    checks = [{"name": "zero_rate_general_vs_direct", "value": general.value, "reference": direct.value}]
    sets = dist.recon_sets(src)
    if not general.infinite and extract_core(src).mass > 0:
        dec = extract_core(src)
        atoms = [a for a in dec.core if dec.cond[a] > 0]
        cols = {t: j for j, t in enumerate(sets.alphabet)}
        supports = [[cols[t] for t in sets[a]] for a in atoms]
        try:
            bf = brute_force_min_information([dec.cond[a] for a in atoms], supports, grid_step=0.02)
            checks.append({"name": "hypergraph_vs_brute_force", "value": general.value, "reference": dec.mass * bf})
        except InstanceTooLarge:
            pass
    if all(t in src.cn for t in src.recon):
        curve = rates.rd_curve(src, args.grid, tol=args.tolerance)
        ref = rates.direct_rd_curve(src, curve.D, tol=args.tolerance)
        gap = float(np.max(np.abs(curve.R - ref.R)))
        checks.append({"name": "decomposition_vs_direct", "value": gap, "reference": 0.0})
    for c in checks:
        a, b = c["value"], c["reference"]
        c["abs_diff"] = 0.0 if a == b else abs(a - b)
    return {"checks": checks}, "checks", EXIT_OK


COMMANDS = {
    "core": cmd_core,
    "check": cmd_check,
    "rates": cmd_rates,
    "rd-curve": cmd_rd_curve,
    "depth-sweep": cmd_depth_sweep,
    "hypergraph": cmd_hypergraph,
    "thresholds": cmd_thresholds,
    "fano": cmd_fano,
    "gen": cmd_gen,
    "oracle": cmd_oracle,
}


class _SeedAction(argparse.Action):
    def __call__(self, parser, namespace, values, option_string=None):
        setattr(namespace, self.dest, values)
        namespace.seed_given = True


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=("json", "csv", "text"), default="json")
    common.add_argument("--seed", type=int, default=0, action=_SeedAction)
    common.add_argument("--tolerance", type=float, default=1e-12)

    parser = _Parser(prog="deductive-rd", description="Rate-distortion analysis of deductive sources.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def with_instance(name, help_text):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("instance", help="instance file or example name (EX_MIN, ...)")
        return p

    with_instance("core", "irredundant core, essential set, order robustness")
    p = with_instance("check", "assumption validators")
    p.add_argument("--delta", type=int)
    p = with_instance("rates", "zero-distortion rate")
    p.add_argument("--zero", action="store_true", help="zero-distortion rate (the default)")
    p.add_argument("--regime", choices=("auto", "disjoint", "hypergraph", "graph"), default="auto")
    p.add_argument("--delta", type=int, help="depth-bounded distortion budget")
    p.add_argument("--restrict", metavar="FILE", help="receiver vocabulary, one fact per line")
    p = with_instance("rd-curve", "rate-distortion curve")
    p.add_argument("--distortion", choices=("closure", "hamming", "delta"), default="closure")
    p.add_argument("--delta", type=int)
    p.add_argument("--grid", type=int, default=33)
    with_instance("depth-sweep", "rate-depth table")
    with_instance("hypergraph", "zero-distortion hypergraph and incompatibility graph")
    p = with_instance("thresholds", "depth-budget thresholds and separation verdict")
    p.add_argument("--kappa", type=float)
    p.add_argument("--channel", metavar="FILE")
    p.add_argument("--capacity", type=float)
    p = with_instance("fano", "closure-adapted Fano bound")
    p.add_argument("--kernel", metavar="FILE", help="test kernel CSV (rows stored facts, columns reconstructions)")
    p.add_argument("--samples", type=int, default=1000)
    p = with_instance("oracle", "cross-check fast paths against reference solvers")
    p.add_argument("--grid", type=int, default=33)

    p = sub.add_parser("gen", parents=[common], help="generate an instance file")
    p.add_argument("--family", choices=gen.FAMILIES)
    p.add_argument("--config", metavar="FILE", help="key=value generator spec")
    p.add_argument("--output", "-o", metavar="FILE")
    p.add_argument("--name")
    for key, typ in (("k", int), ("depth", int), ("branches", int), ("L", int), ("S", int), ("I", int)):
        p.add_argument(f"--{key}", type=typ)
    for key in ("stored_fraction", "density", "mu"):
        p.add_argument(f"--{key.replace('_', '-')}", dest=key, type=float)
    p.add_argument("--probs", choices=("uniform", "random"))
    p.add_argument("--recon", choices=("stored", "closure"))
    return parser


UNITS = ("value", "hamming_baseline", "R", "phi", "zero_rate", "information", "bound", "budget", "capacity")


def run(argv: list[str] | None = None) -> tuple[int, str]:
    """Execute one command; returns ``(exit code, stdout text)``."""
    args = build_parser().parse_args(argv)
    if not hasattr(args, "seed_given"):
        args.seed_given = False
    handler = COMMANDS[args.command]
    try:
        report, table, code = handler(args)
    except (UsageError, DatalogError, instance.InstanceFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE, ""
    except rates.AssumptionError as exc:
        out = {"error": str(exc)}
        if exc.verdict is not None:
            out["verdict"] = exc.verdict.as_dict()
        print(f"validation failed: {exc}", file=sys.stderr)
        return EXIT_INVALID, render(out, args.format)
    except (InfeasibleError, dist.CoreTooLarge, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE, ""
    if report is None:
        return code, ""
    if isinstance(report, str):
        return code, report
    return code, render(report, args.format, table, UNITS)


def main(argv: list[str] | None = None) -> int:
    code, text = run(argv)
    sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
