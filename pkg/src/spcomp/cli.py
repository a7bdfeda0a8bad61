"""Command-line interface: ``spcomp parse|check|connections|generate|compose``.

Exit codes: 0 success or clean check, 1 violations or nothing accepted,
2 usage, I/O or parse errors in an input file.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Optional

from . import __version__, corpus
from .composer import SELECTORS, CompositionResult, Summary, compose_all
from .connections import Kind, complete_connections, partial_connections, security_property
from .generator import candidate_to_json, count_generated, filter_endpoints, generate, limited
from .independence import check_secrecy_independence, check_structural_independence, rename_conflicts
from .spec_parser import SpecError, parse_document, protocol_to_json, serialize_protocol
from .strands import Classifier, KStrandSpace, Protocol, to_strand_space
from .terms import format_term, sort_key

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class InputError(Exception):
    pass


class Style:
    def __init__(self, stream=sys.stdout):
        setting = os.environ.get("SPC_COLOR", "auto").lower()
        if setting in ("1", "always", "yes", "on"):
            self.on = True
        elif setting in ("0", "never", "no", "off"):
            self.on = False
        else:
            self.on = hasattr(stream, "isatty") and stream.isatty()

    def _wrap(self, code: str, text: str) -> str:
        return f"\x1b[{code}m{text}\x1b[0m" if self.on else text

    def bold(self, text: str) -> str:
        return self._wrap("1", text)

    def good(self, text: str) -> str:
        return self._wrap("32", text)

    def bad(self, text: str) -> str:
        return self._wrap("31", text)


def read_spec(ref: str):
    """Load a spec from a path, or ``corpus:<Name>`` for a bundled one."""
    if ref.startswith("corpus:"):
        name = ref.split(":", 1)[1]
        if name not in corpus.NAMES:
            raise InputError(f"unknown corpus protocol {name!r} (have: {', '.join(corpus.NAMES)})")
        return parse_document(corpus.text(name), f"{name}.spc")
    try:
        text = Path(ref).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {ref}: {exc.strerror}") from exc
    return parse_document(text, ref)


def load(ref: str) -> Protocol:
    return read_spec(ref).protocol


def emit_json(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=False, ensure_ascii=False))


def space_to_json(space: KStrandSpace, show_memory: bool = True) -> dict:
    strands = [s for s in space.strands if show_memory or s.classifier is Classifier.PARTICIPANT]
    names = {s.name for s in strands}
    return {
        "strands": [
            {"name": s.name, "participant": s.participant.name, "classifier": s.classifier.value,
             "knowledge": [format_term(t) for t in sorted(s.knowledge, key=sort_key)],
             "trace": [str(st) for st in s.trace]}
            for s in strands
        ],
        "edges": [
            [{"strand": a.strand, "index": a.index}, {"strand": b.strand, "index": b.index}]
            for a, b in space.cross_edges if a.strand in names and b.strand in names
        ],
    }


# -- parse -------------------------------------------------------------------

def cmd_parse(args) -> int:
    style = Style()
    try:
        doc = read_spec(args.file)
    except SpecError as exc:
        if args.format == "json":
            emit_json({"valid": False, "diagnostics": [
                {"line": d.line, "column": d.column, "message": d.message} for d in exc.diagnostics]})
        else:
            for d in exc.diagnostics:
                print(d.format(exc.source), file=sys.stderr)
        return EXIT_FAIL
    p = doc.protocol
    for w in doc.warnings:
        print(w.format(args.file), file=sys.stderr)
    if args.format == "json":
        emit_json(protocol_to_json(p))
        return EXIT_OK
    print(style.bold(f"protocol {p.name}"))
    print(f"roles: {', '.join(r.name for r in p.roles)}")
    print(f"messages: {len(p.messages)}")
    for i, m in enumerate(p.messages, 1):
        print(f"  {i}. {m}")
    secrets = ", ".join(format_term(s) for s in sorted(p.secrets, key=sort_key))
    print(f"secrets: {secrets or '(none)'}")
    return EXIT_OK


# -- check -------------------------------------------------------------------

def cmd_check(args) -> int:
    style = Style()
    p1, p2 = load(args.file1), load(args.file2)
    renamings = []
    if args.auto_rename:
        p1, p2, renamings = rename_conflicts(p1, p2)
    secrecy = check_secrecy_independence(p1, p2)
    structural = check_structural_independence(p1, p2)
    clean = not secrecy and not structural
    if args.format == "json":
        emit_json({
            "protocols": [p1.name, p2.name],
            "renamings": [r.to_json() for r in renamings],
            "secrecy_violations": [v.to_json() for v in secrecy],
            "structural_clashes": [c.to_json() for c in structural],
            "independent": clean,
        })
    else:
        for r in renamings:
            print(f"renamed {r.old.name} -> {r.new.name} in {p2.name}")
        print(style.bold("key-secrecy independence: ") +
              (style.good("ok") if not secrecy else style.bad(f"{len(secrecy)} violation(s)")))
        for v in secrecy:
            loc = v.location
            print(f"  secret {format_term(v.secret)} of {v.secret_protocol} is exposed in "
                  f"{v.owning_protocol} message {loc.message} ({loc.node.strand}, node {loc.node.index}): "
                  f"{format_term(v.offending_term)}")
        print(style.bold("structural independence: ") +
              (style.good("ok") if not structural else style.bad(f"{len(structural)} clash(es)")))
        for c in structural:
            a, b = c.terms
            print(f"  {format_term(a)} (msg {c.locations[0].message}) ~ {format_term(b)} "
                  f"(msg {c.locations[1].message}) share signature {format_term(c.signature)}")
    return EXIT_OK if clean else EXIT_FAIL


# -- connections -------------------------------------------------------------

def cmd_connections(args) -> int:
    p = load(args.file)
    space = to_strand_space(p)
    if args.kind == "partial":
        prop = partial_connections(space)
    elif args.kind == "complete":
        prop = complete_connections(space)
    else:
        prop = security_property(space)
    partial = prop.of_kind(Kind.PARTIAL)
    complete = prop.of_kind(Kind.COMPLETE)
    if args.format == "json":
        emit_json({"protocol": p.name, "kind": args.kind,
                   "counts": {"partial": len(partial), "complete": len(complete)},
                   "connections": prop.to_json()})
        return EXIT_OK
    style = Style()
    print(style.bold(f"protocol {p.name}"))
    for label, group, kind in (("complete", complete, "complete"), ("partial", partial, "partial")):
        if args.kind not in ("all", kind):
            continue
        print(f"{label} connections: {len(group)}")
        for c in group:
            print(f"  {c}")
    return EXIT_OK


# -- generate ----------------------------------------------------------------

def cmd_generate(args) -> int:
    p1, p2 = load(args.file1), load(args.file2)
    generated = count_generated(len(p1.messages), len(p2.messages))
    survivors = filter_endpoints(generate(p1, p2), p1, p2)
    filtered = sum(1 for _ in survivors)
    listing = None
    if args.list:
        source = generate(p1, p2) if args.unfiltered else filter_endpoints(generate(p1, p2), p1, p2)
        listing = list(limited(source, args.limit))
    if args.format == "json":
        out = {"protocols": [p1.name, p2.name], "generated": generated, "filtered": filtered}
        if listing is not None:
            out["candidates"] = [candidate_to_json(c, p1, p2) for c in listing]
        emit_json(out)
        return EXIT_OK
    print(f"generated: {generated}, filtered: {filtered}")
    for c in listing or ():
        print(f"{c.index:>6}  {c}")
    return EXIT_OK


# -- compose -----------------------------------------------------------------

def result_to_json(r: CompositionResult, show_memory: bool = False) -> dict:
    out = {
        "index": r.candidate.index,
        "steps": [s.to_json() for s in r.candidate.steps],
        "verdict": r.verdict,
        "reason": r.reason,
        "message_count": r.message_count,
        "protocol": protocol_to_json(r.realized),
        "trace": [a.to_json() for a in r.trace],
        "complete_connections": [c.to_json() for c in r.property.of_kind(Kind.COMPLETE)],
        "preserved_connections": [c.to_json() for c in r.images],
        "missing_connections": [c.to_json() for c in r.missing_connections()],
        "structural_clashes": [c.to_json() for c in r.clashes],
    }
    if show_memory:
        out["space"] = space_to_json(r.space, show_memory=True)
    return out


def summary_to_json(s: Summary, strategy: str) -> dict:
    selected = s.select(strategy)
    return {
        "protocols": [s.p1.name, s.p2.name],
        "renamings": [r.to_json() for r in s.renamings],
        "generated": s.generated,
        "filtered": s.filtered,
        "composed": len(s.results),
        "accepted": len(s.accepted),
        "rejected": len(s.results) - len(s.accepted),
        "selection": {
            "strategy": strategy,
            "index": selected.candidate.index if selected else None,
            "message_count": selected.message_count if selected else None,
        },
        "min_message_count": min((r.message_count for r in s.accepted), default=None),
    }


def write_outputs(s: Summary, outdir: Path, strategy: str, show_memory: bool) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    for r in s.accepted:
        stem = f"{s.p1.name}_{s.p2.name}_{r.candidate.index}"
        (outdir / f"{stem}.spc").write_text(serialize_protocol(r.realized), encoding="utf-8")
        (outdir / f"{stem}.json").write_text(
            json.dumps(result_to_json(r, show_memory), indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    (outdir / "summary.json").write_text(
        json.dumps(summary_to_json(s, strategy), indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def cmd_compose(args) -> int:
    style = Style()
    p1, p2 = load(args.file1), load(args.file2)
    s = compose_all(p1, p2, embed=not args.no_embed, jobs=args.jobs, limit=args.limit)
    if args.outdir:
        write_outputs(s, Path(args.outdir), args.select, args.show_memory)
    selected = s.select(args.select)
    if args.format == "json":
        out = summary_to_json(s, args.select)
        if selected is not None:
            out["selected"] = result_to_json(selected, args.show_memory)
        emit_json(out)
    else:
        for r in s.renamings:
            print(f"renamed {r.old.name} -> {r.new.name} in {s.p2.name}")
        print(f"generated: {s.generated}, filtered: {s.filtered}, composed: {len(s.results)}, "
              f"accepted: {len(s.accepted)}, rejected: {len(s.results) - len(s.accepted)}")
        if selected is None:
            print(style.bad("no accepted composition"))
        else:
            print(style.bold(f"selected ({args.select}): candidate {selected.candidate.index}, "
                             f"{selected.message_count} messages"))
            print(f"  steps: {selected.candidate}")
            for i, m in enumerate(selected.realized.messages, 1):
                print(f"  {i}. {m}")
            for c in selected.property.of_kind(Kind.COMPLETE):
                print(f"  complete: {c}")
            if args.show_memory:
                for st in selected.space.strands:
                    print(f"  [{st.classifier.value}] {st.name}: " + " ".join(str(x) for x in st.trace))
    return EXIT_OK if selected is not None else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spcomp", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    fmt = argparse.ArgumentParser(add_help=False)
    fmt.add_argument("--format", choices=("text", "json"), default="text")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("parse", parents=[fmt], help="parse and validate a specification")
    p.add_argument("file", help="path to a .spc file, or corpus:<Name>")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("check", parents=[fmt], help="check key-secrecy and structural independence")
    p.add_argument("file1")
    p.add_argument("file2")
    p.add_argument("--auto-rename", action="store_true", help="freshen conflicting atoms of the second protocol")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("connections", parents=[fmt], help="list term connections")
    p.add_argument("file")
    p.add_argument("--kind", choices=("all", "partial", "complete"), default="all")
    p.set_defaults(func=cmd_connections)

    p = sub.add_parser("generate", parents=[fmt], help="count or list parallel compositions")
    p.add_argument("file1")
    p.add_argument("file2")
    p.add_argument("--list", action="store_true", help="list candidates that pass the endpoint filter")
    p.add_argument("--unfiltered", action="store_true", help="with --list, list every generated candidate")
    p.add_argument("--limit", type=int, metavar="N", help="list at most N candidates")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("compose", parents=[fmt], help="run the full composition pipeline")
    p.add_argument("file1")
    p.add_argument("file2")
    p.add_argument("-o", "--outdir", help="write accepted results (.spc and .json) here")
    p.add_argument("--select", choices=sorted(SELECTORS), default="min-messages")
    p.add_argument("--no-embed", action="store_true",
                   help="pair differently-keyed terms instead of embedding the second in the first's encryption")
    p.add_argument("--show-memory", action="store_true", help="include memory strands in reports")
    p.add_argument("--jobs", type=int, default=1, metavar="N")
    p.add_argument("--limit", type=int, metavar="N", help="compose only the first N filtered candidates")
    p.set_defaults(func=cmd_compose)
    return parser


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "limit", None) is not None and args.limit < 0:
        parser.error("--limit must be non-negative")
    if getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be at least 1")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"spcomp: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SpecError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
