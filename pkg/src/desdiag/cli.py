"""Command-line front end.

Exit codes: 0 diagnosable / success, 1 not diagnosable / synthesis failed,
2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

from .automata import AutomatonError, ModularSystem, Module, compose_all, fault_split, project
from .diagnosability import (
    Verdict, all_diagnosable, build_verifier, check_local, check_modular, check_virtual,
    find_indeterminate_cycles,
)
from .fsm_io import FsmSyntaxError, load_fsm, serialize_fsm, to_dot
from .partition import Partition, PartitionError
from .structural import StructuralReport, analyze_pair
from .virtual import SynthesisResult, synthesize_exhaustive, synthesize_greedy

OK, FAIL, USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE)


def _events(text: str | None) -> list[str] | None:
    if text is None:
        return None
    return [e for e in text.replace(",", " ").split() if e]


def _system(paths: Sequence[str]) -> ModularSystem:
    return ModularSystem(tuple(Module(a.name, a) for a in map(load_fsm, paths)))


def _verdict_lines(v: Verdict) -> list[str]:
    s = v.scope
    where = s.module if s.kind == "local" else f"{s.module} in {{{','.join(s.block)}}}"
    status = "diagnosable" if v.diagnosable else "NOT diagnosable"
    lines = [f"{where} [{s.kind}, mask {{{','.join(s.mask)}}}]: {status}"]
    if v.witness is not None:
        lines.append(f"  witness: {v.witness.describe()}")
    for w in v.cycles:
        lines.append(f"  indeterminate cycle: {' -> '.join(w.cycle_states)} on {' '.join(w.cycle)}")
    lines += [f"  warning: {msg}" for msg in v.warnings]
    return lines


def _report_lines(r: StructuralReport) -> list[str]:
    lines = [
        f"structural report {r.faulty_module} vs {r.candidate}: {r.verdict}"
        + (" (strict)" if r.strict else ""),
        f"  common events: {{{','.join(r.common_events)}}}",
        f"  trigger: {{{','.join(r.trigger_events)}}}  confirm: {{{','.join(r.confirm_events)}}}",
        f"  marked faulty string: {' '.join(r.marked_example) if r.marked_example else '-'}",
        f"  support: {'ok' if r.support_ok else 'fails'}; witness {' '.join(r.support_witness) or '-'}",
    ]
    lines += [f"  note: {n}" for n in r.notes]
    return lines


def _emit(args, payload: dict, lines: list[str]) -> None:
    if args.format == "json":
        print(json.dumps(payload, indent=2))
    else:
        print("\n".join(lines))


def _payload(command: str, verdicts=(), partition=None, reports=(), **extra) -> dict:
    verdicts = list(verdicts)
    witness = next((v.witness for v in verdicts if v.witness is not None), None)
    out = {
        "command": command,
        "verdicts": [v.to_json() for v in verdicts],
        "witness": witness.to_json() if witness else None,
        "partition": partition.to_json() if partition is not None else None,
        "reports": [r.to_json() for r in reports],
    }
    out.update(extra)
    return out


def cmd_compose(args) -> int:
    autos = [load_fsm(p) for p in args.files]
    comp = compose_all(autos)
    comp = comp.renamed("_".join(a.name for a in autos))
    Path(args.output).write_text(serialize_fsm(comp), encoding="utf-8")
    _emit(args, {"command": "compose", "states": comp.n_states, "output": args.output},
          [f"wrote {args.output} ({comp.n_states} states)"])
    return OK


def cmd_project(args) -> int:
    a = load_fsm(args.file)
    obs = _events(args.obs)
    if obs is None:
        obs = a.alphabet.sorted(a.alphabet.observable)
    p = project(a, obs)
    Path(args.output).write_text(serialize_fsm(p), encoding="utf-8")
    _emit(args, {"command": "project", "states": p.n_states, "output": args.output},
          [f"wrote {args.output} ({p.n_states} states)"])
    return OK


def cmd_verifier(args) -> int:
    a = load_fsm(args.file)
    obs = _events(args.obs)
    if obs is None:
        obs = a.alphabet.sorted(a.alphabet.observable)
    v = build_verifier(fault_split(a), obs)
    cycles = find_indeterminate_cycles(v)
    if args.dot:
        Path(args.dot).write_text(to_dot(v), encoding="utf-8")
    lines = [f"verifier of {a.name}, mask {{{','.join(a.alphabet.sorted(obs))}}}: "
             f"{len(v)} states, {len(v.edges)} transitions"]
    lines += [f"  {n}" for n in v.names]
    lines += [f"indeterminate cycle: {' -> '.join(w.cycle_states)} on {' '.join(w.cycle)}"
              for w in cycles]
    lines.append("no indeterminate cycle" if not cycles else "")
    payload = {"command": "verifier", "states": list(v.names), "transitions": len(v.edges),
               "indeterminate_cycles": [w.to_json() for w in cycles],
               "diagnosable": not cycles}
    _emit(args, payload, [l for l in lines if l])
    return OK if not cycles else FAIL


def cmd_check(args) -> int:
    sys_ = _system(args.files)
    partition = None
    if args.mode == "local":
        verdicts = [check_local(m) for m in sys_.modules]
    elif args.mode == "modular":
        verdicts = check_modular(sys_, workers=args.workers)
        partition = Partition.discrete(sys_)
    else:
        partition = Partition.parse(args.partition) if args.partition else Partition.coarsest(sys_)
        verdicts = check_virtual(sys_, partition, workers=args.workers)
    ok = all_diagnosable(verdicts)
    lines = [line for v in verdicts for line in _verdict_lines(v)]
    if not verdicts:
        lines.append("no fault-carrying modules")
    lines.append(f"result: {'diagnosable' if ok else 'NOT diagnosable'}")
    _emit(args, _payload(f"check {args.mode}", verdicts,
                         partition if args.mode != "local" else None, diagnosable=ok), lines)
    return OK if ok else FAIL


def cmd_analyze(args) -> int:
    faulty, cand = load_fsm(args.faulty), load_fsm(args.candidate)
    rep = analyze_pair(Module(faulty.name, faulty), Module(cand.name, cand),
                       strict=args.strict_lemma3)
    _emit(args, _payload("analyze", reports=[rep]), _report_lines(rep))
    return OK if rep.recommended else FAIL


def cmd_synthesize(args) -> int:
    sys_ = _system(args.files)
    if args.exhaustive:
        res: SynthesisResult = synthesize_exhaustive(sys_, args.max_modules, workers=args.workers)
    else:
        res = synthesize_greedy(sys_, strict=args.strict_lemma3, workers=args.workers)
    blocks = "".join("{" + ",".join(b) + "}" for b in res.partition.blocks)
    lines = [f"strategy: {res.strategy}",
             f"partition: {{{blocks}}}",
             f"candidates examined: {res.candidates_examined}"]
    for r in res.reports:
        lines += _report_lines(r)
    lines += [line for v in res.verdicts for line in _verdict_lines(v)]
    lines += [f"note: {n}" for n in res.notes]
    lines.append(f"result: {'success' if res.success else 'FAILED'}")
    _emit(args, _payload("synthesize", res.verdicts, res.partition, res.reports,
                         synthesis=res.to_json()), lines)
    return OK if res.success else FAIL


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--workers", type=int, default=1,
                        help="threads for per-module verification")

    parser = _Parser(prog="desdiag", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("compose", parents=[common], help="parallel composition")
    p.add_argument("files", nargs="+")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_compose)

    p = sub.add_parser("project", parents=[common], help="observer over a set of events")
    p.add_argument("file")
    p.add_argument("--obs", help="comma-separated events (default: observable events)")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("verifier", parents=[common], help="twin-plant verifier of one automaton")
    p.add_argument("file")
    p.add_argument("--obs")
    p.add_argument("--dot", help="write the verifier as DOT")
    p.set_defaults(func=cmd_verifier)

    p = sub.add_parser("check", parents=[common], help="local, modular or virtual check")
    p.add_argument("mode", choices=("local", "modular", "virtual"))
    p.add_argument("files", nargs="+")
    p.add_argument("--partition", help='blocks like "g1,g2|g3" (virtual; default: one block)')
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("analyze", parents=[common], help="structural filter for a pair")
    p.add_argument("faulty")
    p.add_argument("candidate")
    p.add_argument("--strict-lemma3", action="store_true",
                   help="also require support for the non-faulty strings")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("synthesize", parents=[common], help="find virtual modules")
    p.add_argument("files", nargs="+")
    p.add_argument("--exhaustive", action="store_true")
    p.add_argument("--max-modules", type=int, default=8)
    p.add_argument("--strict-lemma3", action="store_true")
    p.set_defaults(func=cmd_synthesize)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (AutomatonError, FsmSyntaxError, PartitionError, OSError, ValueError) as exc:
        print(f"desdiag: error: {exc}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    raise SystemExit(main())
