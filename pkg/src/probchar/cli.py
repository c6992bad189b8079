"""Command-line front end.

Exit codes: 0 success (and agreement), 1 a cross-validation disagreement,
2 an input error (unreadable or malformed input, divergent system where a
weak kind needs divergence freedom, formula outside the decidable fragment,
or an exceeded iteration cap).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from dataclasses import dataclass, field

from .charform import char_equations, state_var, transform_to_formula
from .dist import Dist, DistributionError, parse_dist
from .generate import GenParams, random_system
from .kinds import RelationKind
from .logic.semantics import FragmentError, FragmentSpec, nu_membership, satisfies
from .logic.syntax import parse_equations, parse_formula, print_equations, print_formula
from .plts import PLTS, DivergenceError, ParseError, parse_plts, serialize_plts
from .polyhedra import CapExceeded
from .relations import (
    _Pairs,
    _transfer,
    answer_generators,
    compute_relation,
    compute_sd_relation,
    distinguish,
    match,
)
from .xval import cross_validate

EXIT_OK, EXIT_DISAGREE, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


@dataclass
class RunReport:
    command: list
    inputs: dict = field(default_factory=dict)  # name -> sha256
    results: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)  # (label, passed)
    lines: list = field(default_factory=list)
    elapsed: float | None = None

    def emit(self, as_json: bool, out=None) -> None:
        out = out or sys.stdout
        if as_json:
            doc = {
                "command": self.command,
                "inputs": self.inputs,
                "results": self.results,
                "checks": [{"check": c, "pass": ok} for c, ok in self.checks],
            }
            if self.elapsed is not None:
                doc["seconds"] = round(self.elapsed, 3)
            out.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
            return
        for line in self.lines:
            out.write(line + "\n")
        if self.elapsed is not None:
            out.write(f"time: {self.elapsed:.3f}s\n")


def _read(path: str, report: RunReport) -> str:
    try:
        if path == "-":
            text = sys.stdin.read()
        else:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    report.inputs[path] = hashlib.sha256(text.encode("utf-8")).hexdigest()
    return text


def _model(path: str, report: RunReport) -> PLTS:
    return parse_plts(_read(path, report))


def _state(plts: PLTS, name: str) -> str:
    if name not in plts.index:
        raise InputError(f"unknown state {name!r}")
    return name


def _dist(plts: PLTS, text: str) -> Dist:
    d = parse_dist(text)
    for v in d:
        if v not in plts.index:
            raise InputError(f"unknown state {v!r} in distribution")
    return d


def _kind(text: str) -> RelationKind:
    try:
        return RelationKind.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


# commands


def cmd_check(args, report: RunReport) -> int:
    plts = _model(args.model, report)
    kind = args.kind
    s = _state(plts, args.s)
    target = _dist(plts, args.t)
    if kind.state_to_dist:
        sd = compute_sd_relation(plts, kind)
        verdict = sd.contains(s, target)
        report.results = {"kind": kind.value, "s": s, "target": str(target), "related": verdict}
        report.lines.append("true" if verdict else "false")
        if args.witness:
            if verdict:
                how = "greatest fixpoint reached" if sd.exact else "inside a finite post-fixpoint"
                report.lines.append(f"certificate: {how} after {len(sd.trace) - 1} rounds")
                report.results["certificate"] = how
            else:
                k = sd.died_at(s, target)
                if k == 0:
                    report.lines.append("refuted by the initial bound (support or refusals)")
                else:
                    report.lines.append(f"refuted in round {k}")
                report.results["died_at"] = k
        return EXIT_OK
    t = target.point_state()
    if t is None:
        raise InputError(f"{kind.value} relates states; give a state, not a distribution")
    rel = compute_relation(plts, kind)
    verdict = rel.related(s, t)
    report.results = {"kind": kind.value, "s": s, "t": t, "related": verdict}
    report.lines.append("true" if verdict else "false")
    if args.witness:
        if verdict:
            report.results["witness"] = _match_witness(plts, kind, rel, s, t, report)
        else:
            k = rel.died_at[(s, t)]
            level = rel.trace[k]
            inv = frozenset((y, x) for x, y in level)
            side, a, d = _transfer(plts, kind, _Pairs(level), _Pairs(inv), s, t)
            mover = s if side == "left" else t
            report.lines.append(f"removed in round {k}: {mover} -{a}-> {d} has no matching answer")
            report.results["died_at"] = k
            report.results["unmatched"] = {"state": mover, "action": a, "target": str(d)}
    return EXIT_OK


def _match_witness(plts, kind, rel, s, t, report) -> list:
    pairs = _Pairs(rel.pairs.pairs)
    inv = _Pairs(frozenset((y, x) for x, y in rel.pairs.pairs))
    out = []
    sides = [(s, t, pairs)] + ([(t, s, inv)] if kind.is_bisim else [])
    for x, y, view in sides:
        for a, delta in plts.out(x):
            theta, w = match(view, delta, answer_generators(plts, kind, y, a), kind.combined)
            flows = ", ".join(f"{u}->{v}: {p}" for (u, v), p in sorted(w.entries.items()))
            report.lines.append(f"{x} -{a}-> {delta}  answered by {y} -> {theta}  [{flows}]")
            out.append({"mover": x, "action": a, "move": str(delta), "answer": str(theta),
                        "weights": {f"{u} {v}": str(p) for (u, v), p in sorted(w.entries.items())}})
    return out


def cmd_charform(args, report: RunReport) -> int:
    plts = _model(args.model, report)
    s = _state(plts, args.s)
    cs = char_equations(plts, args.kind, strong_failure=args.strong_failure)
    if args.equations:
        text = print_equations(_rooted(cs.system, state_var(s)))
    else:
        text = print_formula(transform_to_formula(cs, state_var(s))) + "\n"
    report.results = {"kind": args.kind.value, "state": s, "text": text}
    report.lines.append(text.rstrip("\n"))
    return EXIT_OK


def _rooted(system, x):
    from .logic.syntax import EquationSystem

    eqs = dict(system.equations)
    return EquationSystem(((x, eqs[x]),) + tuple((y, f) for y, f in system.equations if y != x))


def cmd_satisfies(args, report: RunReport) -> int:
    plts = _model(args.model, report)
    text = _read(args.formula, report)
    d = _dist(plts, args.dist)
    semantics = args.semantics or "strong"
    if any("=" in line.split("#", 1)[0] for line in text.splitlines()):
        system = parse_equations(text)
        verdict = nu_membership(plts, system, system.root, d, semantics)
        what = f"{system.root} of the equation system"
    else:
        phi = parse_formula(text.strip())
        if args.kind is not None:
            spec = FragmentSpec.for_kind(args.kind)
            bad = spec.violation(phi)
            if bad is not None:
                raise FragmentError(f"outside the {args.kind.value} fragment", bad)
        verdict = satisfies(plts, d, phi, semantics)
        what = "formula"
    report.results = {"distribution": str(d), "semantics": semantics, "satisfied": verdict, "query": what}
    report.lines.append("true" if verdict else "false")
    return EXIT_OK


def cmd_validate(args, report: RunReport) -> int:
    plts = _model(args.model, report)
    report.results = {
        "states": list(plts.states),
        "actions": list(plts.actions),
        "transitions": len(plts.transitions),
        "divergence_free": plts.is_divergence_free(),
    }
    report.lines.append(f"states: {len(plts.states)}")
    report.lines.append(f"actions: {' '.join(plts.actions) or '-'}")
    report.lines.append(f"transitions: {len(plts.transitions)}")
    if plts.is_divergence_free():
        report.lines.append("divergence-free: yes")
    else:
        report.lines.append("divergence-free: no (tau cycle " + " -> ".join(plts.divergence) + ")")
        report.results["tau_cycle"] = list(plts.divergence)
    report.lines.append("ok")
    return EXIT_OK


def cmd_distinguish(args, report: RunReport) -> int:
    plts = _model(args.model, report)
    s, t = _state(plts, args.s), _state(plts, args.t)
    if compute_relation(plts, RelationKind.StrongProbBisim).related(s, t):
        report.results = {"s": s, "t": t, "bisimilar": True}
        report.lines.append(f"{s} and {t} are strongly bisimilar")
        return EXIT_OK
    phi = distinguish(plts, s, t)
    sat_s = satisfies(plts, Dist.point(s), phi)
    sat_t = satisfies(plts, Dist.point(t), phi)
    report.results = {"s": s, "t": t, "bisimilar": False, "formula": print_formula(phi)}
    report.checks.append((f"{s} satisfies", sat_s))
    report.checks.append((f"{t} refutes", not sat_t))
    report.lines.append(print_formula(phi))
    if not (sat_s and not sat_t):
        report.lines.append("disagreement: formula does not separate the states")
        return EXIT_DISAGREE
    return EXIT_OK


def _xval_one(plts: PLTS, name: str, args, report: RunReport) -> bool:
    r = cross_validate(plts, args.kinds, args.samples, args.seed)
    by_kind: dict = {}
    for c in r.checks:
        n, bad = by_kind.get(c.kind, (0, 0))
        by_kind[c.kind] = (n + 1, bad + (not c.agree))
    for k in args.kinds:
        if k.value in by_kind:
            n, bad = by_kind[k.value]
            ok = bad == 0
            report.checks.append((f"{name} {k.value}", ok))
            report.lines.append(f"{name} {k.value}: {n} checks, {bad} disagreements -> {'PASS' if ok else 'FAIL'}")
    for k, why in r.skipped:
        report.lines.append(f"{name} {k}: skipped ({why})")
    for c in r.disagreements:
        report.lines.append(
            f"  DISAGREE {c.kind} X_{c.state} at {c.query}: relation={c.relation} "
            f"equations={c.system} formula={c.formula}"
        )
    report.results[name] = {
        "checks": len(r.checks),
        "disagreements": [
            {"kind": c.kind, "state": c.state, "query": c.query, "relation": c.relation,
             "equations": c.system, "formula": c.formula}
            for c in r.disagreements
        ],
        "skipped": [{"kind": k, "reason": why} for k, why in r.skipped],
    }
    return r.ok


def cmd_xval(args, report: RunReport) -> int:
    if args.semantics:
        args.kinds = [k for k in args.kinds if k.semantics == args.semantics]
    ok = True
    for path in args.models:
        ok &= _xval_one(_model(path, report), path, args, report)
    if args.random:
        params = GenParams(states=args.states, actions=args.actions)
        for i in range(args.random):
            seed = args.seed + i
            plts = random_system(seed, params)
            report.inputs[f"random:{seed}"] = hashlib.sha256(serialize_plts(plts).encode()).hexdigest()
            ok &= _xval_one(plts, f"random:{seed}", args, report)
    if not args.models and not args.random:
        raise InputError("xval needs model files or --random N")
    report.lines.append("all agree" if ok else "DISAGREEMENT")
    return EXIT_OK if ok else EXIT_DISAGREE


# argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable report")
    common.add_argument("--max-iterations", type=int, help="cap on refinement and closure rounds")
    common.add_argument("--timing", action="store_true", help="append wall-clock time (breaks byte-identical output)")
    common.add_argument("--semantics", choices=("strong", "weak"), help="satisfaction semantics; for xval, restricts the kinds")
    common.add_argument("--witness", action="store_true", help="print the matching certificate or the round of removal")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--samples", type=int, default=0, help="random distributions per system for forward/failure kinds")

    p = argparse.ArgumentParser(prog="probchar", description="Probabilistic (bi)simulations and pMu characteristic formulae.")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", parents=[common], help="decide whether s is related to t (or a distribution)")
    c.add_argument("model")
    c.add_argument("s")
    c.add_argument("t", help="state, or distribution such as '1/2 t1 + 1/2 t2'")
    c.add_argument("--kind", type=_kind, default=RelationKind.StrongProbBisim)
    c.set_defaults(func=cmd_check)

    f = sub.add_parser("charform", parents=[common], help="characteristic equations or formula of a state")
    f.add_argument("model")
    f.add_argument("s")
    f.add_argument("--kind", type=_kind, default=RelationKind.StrongProbBisim)
    g = f.add_mutually_exclusive_group()
    g.add_argument("--equations", action="store_true", help="print the equation system (root first)")
    g.add_argument("--formula", action="store_true", help="print the closed formula (default)")
    f.add_argument("--strong-failure", action="store_true", help="write refusals as boxes into false")
    f.set_defaults(func=cmd_charform)

    s = sub.add_parser("satisfies", parents=[common], help="check a formula or equation system on a distribution")
    s.add_argument("model")
    s.add_argument("formula", help="file with a formula, or with 'X = phi' equations (first is the root); '-' for stdin")
    s.add_argument("dist")
    s.add_argument("--kind", type=_kind, help="reject formulae outside this kind's fragment")
    s.set_defaults(func=cmd_satisfies)

    x = sub.add_parser("xval", parents=[common], help="relation route vs formula routes on every state pair")
    x.add_argument("models", nargs="*")
    x.add_argument(
        "--kinds",
        type=lambda v: [_kind(k) for k in v.split(",")],
        default=list(RelationKind),
        help="comma-separated kinds (default: all)",
    )
    x.add_argument("--random", type=int, default=0, metavar="N", help="also check N generated systems")
    x.add_argument("--states", type=int, default=5)
    x.add_argument("--actions", type=int, default=3)
    x.set_defaults(func=cmd_xval)

    v = sub.add_parser("validate", parents=[common], help="parse a model and report its shape")
    v.add_argument("model")
    v.set_defaults(func=cmd_validate)

    d = sub.add_parser("distinguish", parents=[common], help="formula separating two non-bisimilar states")
    d.add_argument("model")
    d.add_argument("s")
    d.add_argument("t")
    d.set_defaults(func=cmd_distinguish)
    return p


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    if args.max_iterations is not None:
        os.environ["PROBCHAR_MAX_ITERATIONS"] = str(args.max_iterations)
    report = RunReport(command=[args.command] + argv[1:])
    start = time.perf_counter()
    try:
        code = args.func(args, report)
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ParseError as exc:
        print(f"error: parse error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except FragmentError as exc:
        print(f"error: fragment: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CapExceeded as exc:
        print(f"error: cap exceeded: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (InputError, DistributionError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.timing:
        report.elapsed = time.perf_counter() - start
    report.emit(args.json)
    return code


if __name__ == "__main__":
    sys.exit(main())
