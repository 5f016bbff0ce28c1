"""Command-line front end.

Exit codes: 0 success, 1 negative answer (unstable matching, manipulation found),
2 input error, 3 internal anomaly. Machine output is JSON on stdout; ``envy-graph
--dot`` prints DOT instead. Diagnostics go to stderr.
"""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor

from . import envy
from .cmfp import cmfp_matching
from .errors import (
    FamilyTooLarge,
    InternalInstabilityBug,
    NumericBlowup,
    StableFracError,
    WeightLpAnomaly,
)
from .fractional import FractionalMatching, bvn_decompose, check_weights, is_stable, matching_from_json
from .ic_audit import AuditReport, Evaluator, MisreportFamily, Verdict, audit_coalition, best_response
from .instance import AgentId, MatchingInstance, Side, generate, instance_from_json
from .integral import matching_from_json as integral_from_json
from .solver import get_mechanism, integral_fallback, mechanisms, solve

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_INPUT = 2
EXIT_ANOMALY = 3

ANOMALIES = (InternalInstabilityBug, WeightLpAnomaly, NumericBlowup)


class InputError(Exception):
    pass


def _read(path: str):
    try:
        text = sys.stdin.read() if path == "-" else open(path, encoding="utf-8").read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON: {exc}") from exc


def _instance(doc) -> MatchingInstance:
    # solve output embeds its instance, so pipelines can pass that document along
    if isinstance(doc, dict) and "instance" in doc:
        doc = doc["instance"]
    return instance_from_json(doc)


def _matching(doc, n: int | None = None) -> FractionalMatching:
    """An n x n weight matrix, ``{"pairs": [[m, w], ...]}``, or a solve output."""
    if isinstance(doc, dict) and "matching" in doc:
        doc = doc["matching"]
    if isinstance(doc, dict) and "pairs" in doc:
        if n is None:
            raise InputError("a pairs matching needs an instance to fix n")
        return integral_from_json(n, doc["pairs"]).to_fractional()
    return matching_from_json(doc)


def _dump(payload, pretty: bool) -> None:
    print(json.dumps(payload, indent=2 if pretty else None))


def _agent(text: str, n: int) -> AgentId:
    text = text.strip()
    side = {"m": Side.MEN, "w": Side.WOMEN}.get(text[:1])
    if side is None or not text[1:].isdigit() or int(text[1:]) >= n:
        raise InputError(f"bad agent {text!r}; expected m<i> or w<j> with index < {n}")
    return AgentId(side, int(text[1:]))


def cmd_classify(args) -> int:
    inst = _instance(_read(args.instance))
    _dump(cmfp_matching(inst).to_json(), args.pretty)
    return EXIT_OK


def cmd_solve(args) -> int:
    inst = _instance(_read(args.instance))
    mech = get_mechanism(args.mechanism)
    payload = {"mechanism": mech.name, "instance": inst.to_json()}
    if mech.name != "envy-frac":
        payload["matching"] = mech(inst).to_json()
        _dump(payload, args.pretty)
        return EXIT_OK
    try:
        trace = solve(inst)
    except WeightLpAnomaly as exc:
        payload["matching"] = integral_fallback(inst).to_json()
        payload["fallback"] = "integral"
        _dump(payload, args.pretty)
        print(f"anomaly: {exc}; emitted the stable integral fallback", file=sys.stderr)
        return EXIT_ANOMALY
    payload["matching"] = trace.composed.to_json()
    if args.trace:
        payload["trace"] = trace.to_json()
    _dump(payload, args.pretty)
    return EXIT_OK


def cmd_verify(args) -> int:
    first = _read(args.instance)
    inst = _instance(first)
    second = first if args.matching is None else _read(args.matching)
    if args.matching is None and not (isinstance(first, dict) and "matching" in first):
        raise InputError("no matching given and the instance document carries none")
    mu = _matching(second, inst.n)
    check_weights(mu, inst.n)
    report = is_stable(inst, mu)
    _dump(report.to_json(), args.pretty)
    return EXIT_OK if report.stable else EXIT_NEGATIVE


def cmd_decompose(args) -> int:
    mu = _matching(_read(args.matching))
    parts = bvn_decompose(mu)
    _dump([{"weight": str(a), "matching": m.to_json()} for a, m in parts], args.pretty)
    return EXIT_OK


def cmd_envy_graph(args) -> int:
    inst = _instance(_read(args.instance))
    mu = _matching(_read(args.matching), inst.n)
    check_weights(mu, inst.n)
    graph = envy.build(inst, mu, Side(args.side))
    if args.dot:
        sys.stdout.write(envy.to_dot(graph))
    else:
        _dump(graph.to_json(), args.pretty)
    return EXIT_OK


def _family(args) -> MisreportFamily:
    values = None if args.values is None else [v for v in args.values.split(",") if v]
    if args.family == "perm":
        return MisreportFamily.permutations()
    if args.family == "grid":
        return MisreportFamily.grid(values, include_own=not args.no_own)
    return MisreportFamily.combined(values, include_own=not args.no_own)


def _best_response_job(job):
    # worker entry point: everything crosses the process boundary as plain data
    inst_json, mech_name, family, agent = job
    inst = instance_from_json(inst_json)
    return best_response(inst, agent, get_mechanism(mech_name), family)


def cmd_audit_ic(args) -> int:
    inst = _instance(_read(args.instance))
    mech = get_mechanism(args.mechanism)
    family = _family(args)
    ev = Evaluator(mech, inst)
    agents = inst.agents()
    if args.jobs > 1:
        jobs = [(inst.to_json(), mech.name, family, a) for a in agents]
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            devs = tuple(pool.map(_best_response_job, jobs))
    else:
        devs = tuple(best_response(inst, a, ev, family) for a in agents)
    coalitions = ()
    if args.coalition:
        members = [_agent(t, inst.n) for t in args.coalition.split(",") if t.strip()]
        coalitions = (audit_coalition(inst, members, ev, family),)
    report = AuditReport(mech.name, family, devs, coalitions)
    _dump(report.to_json(), args.pretty)
    return EXIT_NEGATIVE if report.verdict is Verdict.MANIPULATION_FOUND else EXIT_OK


def cmd_gen(args) -> int:
    if args.n < 1:
        raise InputError("--n must be positive")
    _dump(generate(args.n, args.seed, args.mode).to_json(), args.pretty)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stablefrac", description=__doc__.splitlines()[0])
    p.add_argument("--pretty", action="store_true", help="indent JSON output")
    # also accepted after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--pretty", action="store_true", default=argparse.SUPPRESS)
    sub = p.add_subparsers(dest="command", required=True)
    names = [m.name for m in mechanisms()]

    s = sub.add_parser("classify", parents=[common], help="iterated mutual-first extraction")
    s.add_argument("instance", help="instance JSON file, or - for stdin")
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("solve", parents=[common], help="run a mechanism")
    s.add_argument("instance")
    s.add_argument("--mechanism", choices=names, default="envy-frac")
    s.add_argument("--trace", action="store_true", help="include the solver trace (envy-frac)")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("verify", parents=[common], help="exact stability check; exit 1 when blocked")
    s.add_argument("instance", help="instance, or a solve output carrying both")
    s.add_argument("matching", nargs="?", default=None)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("decompose", parents=[common], help="Birkhoff-von Neumann components")
    s.add_argument("matching")
    s.set_defaults(func=cmd_decompose)

    s = sub.add_parser("envy-graph", parents=[common], help="envy graph of a matching")
    s.add_argument("instance")
    s.add_argument("matching")
    s.add_argument("--side", choices=["men", "women"], default="men")
    s.add_argument("--dot", action="store_true", help="Graphviz DOT instead of JSON")
    s.set_defaults(func=cmd_envy_graph)

    s = sub.add_parser("audit-ic", parents=[common], help="brute-force misreport audit; exit 1 on manipulation")
    s.add_argument("instance")
    s.add_argument("--mechanism", choices=names, default="envy-frac")
    s.add_argument("--family", choices=["perm", "grid", "combined"], default="perm")
    s.add_argument("--values", default=None, help="comma-separated grid values (default 1..2n)")
    s.add_argument("--no-own", action="store_true", help="leave the agent's own values out of the grid")
    s.add_argument("--coalition", default=None, help="comma-separated agents, e.g. m0,w2")
    s.add_argument("--jobs", type=int, default=1, help="worker processes for single-agent searches")
    s.set_defaults(func=cmd_audit_ic)

    s = sub.add_parser("gen", parents=[common], help="seeded random instance")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--mode", choices=["uniform", "no-mfp", "cmfp"], default="uniform")
    s.set_defaults(func=cmd_gen)
    return p


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        return args.func(args)
    except ANOMALIES as exc:
        print(f"anomaly: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ANOMALY
    except FamilyTooLarge as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (InputError, StableFracError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
