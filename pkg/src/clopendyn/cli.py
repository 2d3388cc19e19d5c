"""Command-line front end.

Every command builds a report ``{command, inputs_digest, results, warnings,
tool_version}``. A short text summary goes to stdout; ``--json PATH`` writes
the report as canonical JSON (``--json -`` prints it instead of the text).

Exit codes: 0 when the analysis ran (whatever the verdicts), 1 for input
errors, 2 for internal errors.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from typing import Sequence

from . import cech
from . import core_dynamics as cd
from . import inverse_limit as il
from . import partitions as pt
from . import symbolic as sym
from ._version import __version__
from .core_dynamics import FiniteSystem
from .errors import ClopenDynError, DepthExceededError, InputError
from .expansion import Lambda, r_of_lambda, uniqueness_bruteforce
from .inverse_limit import InverseSystem
from .io import SystemDocument, digest, dumps, load_document, parse_bases, parse_set
from .symbolic import ShiftSpace

ENTROPY_TOL = 1e-10


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(f"{self.prog}: {message}")


def _fraction(text: str) -> Fraction:
    try:
        q = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise InputError(f"expected a rational number, got {text!r}") from None
    if q <= 0:
        raise InputError(f"eps must be positive, got {text}")
    return q


class Report:
    def __init__(self, command: str):
        self.command = command
        self.results: dict = {}
        self.warnings: list[str] = []
        self.lines: list[str] = []
        self.inputs: list[bytes | str] = [command]

    def say(self, text: str) -> None:
        self.lines.append(text)

    def warn(self, text: str) -> None:
        self.warnings.append(text)
        self.lines.append(f"warning: {text}")

    def to_json(self) -> dict:
        return {
            "command": self.command,
            "inputs_digest": digest(*self.inputs),
            "results": self.results,
            "warnings": self.warnings,
            "tool_version": __version__,
        }


def _spectrum_summary(F: FiniteSystem) -> tuple[dict, str]:
    spec = cech.spectrum(F)
    orders = sorted({s for s, _ in spec.roots})
    text = f"spectrum: roots of unity of orders {orders}, 0 with multiplicity {spec.zero_multiplicity}"
    return spec.to_json(), text


def _eps_partitions(rep: Report, system, eps_list: Sequence[Fraction]) -> list[dict]:
    out = []
    for eps in eps_list:
        try:
            res = pt.find_dynamical_epsilon_partition(system, eps)
        except DepthExceededError as exc:
            rep.warn(f"eps = {eps}: {exc}; a deeper tower may still succeed")
            out.append({"eps": str(eps), "status": "DEPTH_EXCEEDED"})
            continue
        if isinstance(res, pt.NonexistenceCertificate):
            ok = res.verify()
            out.append({"eps": str(eps), "status": "NONEXISTENT", "certificate": res.to_json(), "certificate_verified": ok})
            rep.say(f"eps = {eps}: no dynamical eps-partition (certificate verified: {ok})")
        else:
            where = f"level {res.level}" if isinstance(res, pt.LevelPartition) else f"cylinder length {res.length}"
            out.append({"eps": str(eps), "status": "FOUND", "blocks": len(res.blocks), "partition": res.to_json(), "dynamical": bool(pt.is_dynamical(res))})
            rep.say(f"eps = {eps}: dynamical partition with {len(res.blocks)} blocks at {where}")
    return out


def _set_report(system, U) -> sym.ItineraryReport:
    if isinstance(system, ShiftSpace):
        return sym.binary_itinerary_finiteness(system, U)
    tower = il.as_tower(system)
    if isinstance(U, il.LevelClopen):
        level, states = U.level, U.states
    else:
        level, states = 1, frozenset(U)
    rest = frozenset(tower.level(level).states) - states
    P = pt.LevelPartition(tower, level, tuple(b for b in (rest, states) if b))
    return pt.itineraries(P)


def cmd_analyze(args) -> Report:
    rep = Report("analyze")
    doc, raw = load_document(args.file)
    rep.inputs += [raw, dumps({"eps": [str(e) for e in args.eps], "set": args.set, "m_max": args.m_max})]
    system = doc.system
    res = rep.results
    res["kind"], res["name"] = doc.kind, doc.name
    rep.say(f"{doc.kind} system {doc.name!r}")

    if isinstance(system, InverseSystem):
        v = il.validate(system)
        res["validation"] = v.to_json()
        rep.say(f"validation: {'ok' if v.ok else 'FAILED'}, surjective bonds: {v.surjective}")
        F = system.level(system.depth)
    elif isinstance(system, FiniteSystem):
        res["validation"] = {"ok": True}
        F = system
    else:
        pts = sym.finite_points(system)
        F = pts[0] if pts else None

    if F is not None:
        res["spectrum"], text = _spectrum_summary(F)
        where = {FiniteSystem: "", InverseSystem: "top level ", ShiftSpace: "finitely many points; "}[type(system)]
        rep.say(where + text)
        res["cycles"] = [list(c) for c in cd.cycles(F)]
    if isinstance(system, InverseSystem):
        classes = []
        for c in cd.cycles(F):
            t = il.thread_from_top(system, c[0])
            w = il.omega_limit_class(system, t)
            classes.append({"top_state": c[0], **w.to_json()})
            rep.say(f"thread through top state {c[0]}: {w.kind.value}, periods {list(w.periods)}")
        res["omega_limit_classes"] = classes
        rep.warn(f"omega-limit classes and verdicts are decided at depth {system.depth}")
    if isinstance(system, ShiftSpace):
        h = sym.entropy(system)
        res["entropy"] = {"value": h, "tolerance": ENTROPY_TOL}
        res["surjective"] = system.is_surjective
        rep.say(f"entropy: {h:.10f}")

    if args.eps:
        res["eps_partitions"] = _eps_partitions(rep, system, args.eps)
    if args.set:
        reports = []
        for text in args.set:
            r = _set_report(system, parse_set(system, text))
            reports.append({"set": text, **r.to_json()})
            rep.say(f"itineraries w.r.t. {text!r}: {r.kind.value}")
        res["itinerary_reports"] = reports

    cert = cech.eigenvalue_certificate(system, m_max=args.m_max)
    ok = cert.verify()
    res["eigenvalue_certificate"] = {**cert.to_json(), "verified": ok}
    rep.say(f"certificate: {cert.verdict.value} (verified: {ok})")
    if not cert.complete:
        rep.warn(f"NONE_ARE holds for cylinder lengths up to {cert.resolution} only")
    return rep


def cmd_expansion(args) -> Report:
    rep = Report(f"expansion {args.action}")
    lam = Lambda.parse(args.lam)
    rep.inputs.append(dumps({"lambda": str(lam), "r": args.r, "len": args.len}))
    r_min = r_of_lambda(lam)
    rep.results["lambda"] = str(lam)
    rep.results["r_of_lambda"] = r_min
    rep.say(f"r(lambda) = {r_min}")
    if args.action == "verify":
        if args.r is None or args.len is None:
            raise InputError("expansion verify needs --r and --len")
        u = uniqueness_bruteforce(args.r, lam, args.len)
        rep.results["uniqueness"] = u.to_json()
        rep.say(f"{u.words} words, {u.pairs_checked} pairs, min_gap {float(u.min_gap):.6g} vs 2*tail {2 * float(u.tail_bound):.6g}: {u.verdict}")
    return rep


def cmd_coboundary(args) -> Report:
    rep = Report("coboundary")
    doc, raw = load_document(args.file)
    lam = Lambda.parse(args.lam)
    rep.inputs += [raw, dumps({"lambda": str(lam), "set": args.set, "max_res": args.max_res})]
    system = doc.system
    V = parse_set(system, args.set)
    if isinstance(system, FiniteSystem):
        resolutions = [1]
    elif isinstance(system, InverseSystem):
        top = system.depth if args.max_res is None else min(args.max_res, system.depth)
        resolutions = list(range(V.level, top + 1))
        if args.max_res is not None and args.max_res > system.depth:
            rep.warn(f"tower depth is {system.depth}; resolutions above it were skipped")
    else:
        resolutions = list(range(1, (args.max_res or cech.M_MAX) + 1))
    table = []
    for m in resolutions:
        r = cech.coboundary_solve(system, lam, V, m if not isinstance(system, FiniteSystem) else None)
        table.append(r.to_json())
        line = f"resolution {m}: {r.status}"
        if r.feasible and isinstance(system, FiniteSystem):
            line += " psi = (" + ", ".join(str(v) for v in r.psi.values) + ")"
        rep.say(line)
    rep.results.update({"lambda": str(lam), "set": args.set, "table": table})
    infeasible = all(row["status"] == "INFEASIBLE" for row in table)
    if isinstance(system, ShiftSpace):
        link = sym.binary_itinerary_finiteness(system, V)
        rep.results["itinerary_report"] = link.to_json()
        rep.say(f"itineraries w.r.t. the set: {link.kind.value}")
        if infeasible:
            rep.warn(f"INFEASIBLE at resolutions 1..{resolutions[-1]} only; the itinerary report is the complete test")
    rep.results["infeasible_at_all_tested"] = infeasible
    return rep


def cmd_partition(args) -> Report:
    rep = Report("partition")
    doc, raw = load_document(args.file)
    rep.inputs += [raw, dumps({"eps": [str(e) for e in args.eps]})]
    rep.results["eps_partitions"] = _eps_partitions(rep, doc.system, args.eps)
    return rep


def cmd_odometer(args) -> Report:
    rep = Report("odometer")
    bases = parse_bases(args.bases)
    rep.inputs.append(dumps({"bases": bases, "eps": [str(e) for e in args.eps]}))
    tower = il.odometer(bases)
    v = il.validate(tower)
    w = il.omega_limit_class(tower, il.thread_from_top(tower, 0))
    rep.results["document"] = SystemDocument.of(tower, f"odometer({','.join(map(str, bases))})").to_json()
    rep.results["validation"] = v.to_json()
    rep.results["omega_limit_class"] = w.to_json()
    rep.say(f"odometer with bases {bases}: level sizes {[tower.level(n).size for n in range(1, tower.depth + 1)]}")
    rep.say(f"omega-limit class: {w.kind.value}, periods {list(w.periods)}")
    if args.eps:
        rep.results["eps_partitions"] = _eps_partitions(rep, tower, args.eps)
    return rep


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="clopendyn", description="Finite-resolution analysis of dynamics on Cantor-type spaces.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(q):
        q.add_argument("--json", metavar="PATH", help="write the JSON report to PATH ('-' for stdout)")

    q = sub.add_parser("analyze", help="validate and analyze a system document")
    q.add_argument("file")
    q.add_argument("--eps", type=_fraction, action="append", default=[], help="search a dynamical eps-partition (repeatable)")
    q.add_argument("--set", action="append", default=[], help="itinerary report for a clopen set (repeatable)")
    q.add_argument("--m-max", type=int, default=cech.M_MAX, help="longest cylinder searched by the certificate")
    common(q)
    q.set_defaults(func=cmd_analyze)

    q = sub.add_parser("expansion", help="r(lambda) and brute-force uniqueness of S_r expansions")
    q.add_argument("action", choices=["r", "verify"])
    q.add_argument("--lambda", dest="lam", required=True, help="a+bi, e.g. 2, 3/2, 1+2i")
    q.add_argument("--r", type=int)
    q.add_argument("--len", type=int)
    common(q)
    q.set_defaults(func=cmd_expansion)

    q = sub.add_parser("coboundary", help="solve psi o f - lambda psi = chi_V per resolution")
    q.add_argument("file")
    q.add_argument("--lambda", dest="lam", required=True)
    q.add_argument("--set", required=True, help="words (shift), states (finite) or level:states (tower)")
    q.add_argument("--max-res", type=int)
    common(q)
    q.set_defaults(func=cmd_coboundary)

    q = sub.add_parser("partition", help="find dynamical eps-partitions")
    q.add_argument("file")
    q.add_argument("--eps", type=_fraction, action="append", required=True)
    common(q)
    q.set_defaults(func=cmd_partition)

    q = sub.add_parser("odometer", help="build an odometer tower from its bases")
    q.add_argument("--bases", required=True, help="comma-separated, e.g. 2,3,2")
    q.add_argument("--eps", type=_fraction, action="append", default=[])
    common(q)
    q.set_defaults(func=cmd_odometer)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        rep = args.func(args)
        text = dumps(rep.to_json())
        if args.json == "-":
            sys.stdout.write(text)
        else:
            if args.json:
                with open(args.json, "w", encoding="utf-8") as fh:
                    fh.write(text)
            sys.stdout.write("\n".join(rep.lines) + "\n")
        return 0
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ClopenDynError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
