"""Reader and writer for ``.spc`` protocol specifications.

A specification looks like::

    # Woo and Lam Pi3
    protocol WooLamPi3
    roles A, B, S
    nonces Nb
    keys Kas, Kbs
    knows A: A, B, Kas
    knows B: B, S, Nb, Kbs
    knows S: S, A, B, Kas, Kbs
    1. A -> B : A
    2. B -> A : Nb
    3. A -> B : {Nb}sk(Kas)

Declarations may appear in any order. In ``knows`` and ``secrets`` lines the
top-level commas separate list items, so a pair there must be parenthesised.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .strands import Message, Protocol, validate_protocol
from .terms import EMPTY, Atom, Enc, Func, Pair, Sort, Term, format_term, sort_key, subterm, subterms

RESERVED_PREFIX = "_mem_"

_IDENT = r"[A-Za-z_][A-Za-z0-9_]*'*"
_TOKEN = re.compile(rf"\s*(?:(?P<ident>{_IDENT})|(?P<punct>[{{}}(),.]))")
_MESSAGE = re.compile(rf"^(\d+)\s*\.\s*({_IDENT})\s*->\s*({_IDENT})\s*:(.*)$")
_FUNCS = {f.value: f for f in Func}


@dataclass(frozen=True)
class Diagnostic:
    line: int
    column: int
    message: str
    severity: str = "error"

    def format(self, source: str = "<spec>") -> str:
        return f"{source}:{self.line}:{self.column}: {self.severity}: {self.message}"


class SpecError(Exception):
    def __init__(self, diagnostics: list[Diagnostic], source: str = "<spec>"):
        self.diagnostics = diagnostics
        self.source = source
        super().__init__("\n".join(d.format(source) for d in diagnostics))


@dataclass
class SpecDocument:
    text: str
    protocol: Protocol
    locations: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)


class _TermReader:
    """Recursive-descent reader for one line's term text."""

    def __init__(self, text: str, line: int, col0: int, sorts: dict, diags: list):
        self.tokens = []
        self.line = line
        self.diags = diags
        self.sorts = sorts
        self.end_col = col0 + len(text)
        pos = 0
        while pos < len(text):
            if text[pos:].strip() == "":
                break
            m = _TOKEN.match(text, pos)
            if not m:
                col = col0 + pos + (len(text[pos:]) - len(text[pos:].lstrip()))
                raise _Abort(Diagnostic(line, col, f"unexpected character {text[pos:].lstrip()[0]!r}"))
            kind = "ident" if m.group("ident") else "punct"
            value = m.group(kind)
            self.tokens.append((kind, value, col0 + m.start(kind)))
            pos = m.end()
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, None, self.end_col)

    def take(self, value: Optional[str] = None):
        tok = self.peek()
        if tok[0] is None or (value is not None and tok[1] != value):
            want = repr(value) if value else "a term"
            got = repr(tok[1]) if tok[0] else "end of line"
            raise _Abort(Diagnostic(self.line, tok[2], f"expected {want}, found {got}"))
        self.i += 1
        return tok

    def at_end(self) -> bool:
        return self.i >= len(self.tokens)

    def term(self) -> Term:
        first = self.unit()
        if self.peek()[1] == ",":
            self.take(",")
            rest = self.term()
            if first is EMPTY or rest is EMPTY:
                raise _Abort(Diagnostic(self.line, self.peek()[2], "'.' cannot be paired"))
            return Pair(first, rest)
        return first

    def unit(self) -> Term:
        kind, value, col = self.peek()
        if value == ".":
            self.take()
            return EMPTY
        if value == "(":
            self.take()
            t = self.term()
            self.take(")")
            return t
        if value == "{":
            self.take()
            body = self.term()
            self.take("}")
            fk, fname, fcol = self.take()
            if fname not in _FUNCS:
                raise _Abort(Diagnostic(self.line, fcol, f"unknown function {fname!r}"))
            func = _FUNCS[fname]
            if func is Func.MK:
                self.diags.append(Diagnostic(self.line, fcol, "function mk is reserved for memory strands"))
            self.take("(")
            key = self.term()
            self.take(")")
            if body is EMPTY or key is EMPTY:
                raise _Abort(Diagnostic(self.line, col, "'.' cannot be encrypted or used as a key"))
            if not (isinstance(key, Atom) and key.sort is Sort.KEY):
                self.diags.append(Diagnostic(self.line, col, f"encryption key {format_term(key)} is not a key atom",
                                             "warning"))
            return Enc(body, func, key)
        if kind == "ident":
            self.take()
            sort = self.sorts.get(value)
            if sort is None:
                self.diags.append(Diagnostic(self.line, col, f"undeclared atom {value}"))
                return Atom(value, Sort.NONCE)
            return Atom(value, sort)
        self.take()  # raises with a located diagnostic
        raise AssertionError("unreachable")

    def items(self) -> list[Term]:
        out = []
        if self.at_end():
            return out
        out.append(self.unit())
        while not self.at_end():
            self.take(",")
            out.append(self.unit())
        return out


class _Abort(Exception):
    def __init__(self, diag: Diagnostic):
        self.diag = diag


def _split_names(rest: str, line: int, col0: int, diags: list) -> list[tuple[str, int]]:
    names = []
    offset = 0
    for part in rest.split(","):
        stripped = part.strip()
        col = col0 + offset + (len(part) - len(part.lstrip()))
        offset += len(part) + 1
        if not re.fullmatch(_IDENT, stripped):
            diags.append(Diagnostic(line, col, f"invalid name {stripped!r}"))
            continue
        names.append((stripped, col))
    return names


_DECL = {"roles": Sort.ROLE, "nonces": Sort.NONCE, "keys": Sort.KEY}


def parse_document(text: str, source: str = "<spec>") -> SpecDocument:
    diags: list[Diagnostic] = []
    lines = []
    for n, raw in enumerate(text.splitlines(), 1):
        body = raw.split("#", 1)[0].rstrip()
        if body.strip():
            lines.append((n, body))

    name = None
    sorts: dict[str, Sort] = {}
    decls: dict[Sort, list[Atom]] = {s: [] for s in Sort}
    keypairs: list[tuple[Atom, Atom]] = []
    locations: dict = {}
    deferred = []

    def declare(nm: str, sort: Sort, line: int, col: int) -> Optional[Atom]:
        if nm.startswith(RESERVED_PREFIX):
            diags.append(Diagnostic(line, col, f"names starting with {RESERVED_PREFIX} are reserved"))
            return None
        if nm in sorts:
            what = "duplicate declaration" if sorts[nm] is sort else "sort conflict"
            diags.append(Diagnostic(line, col, f"{what} of {nm}"))
            return None
        sorts[nm] = sort
        atom = Atom(nm, sort)
        locations[("atom", nm)] = (line, col)
        return atom

    for n, body in lines:
        stripped = body.lstrip()
        col0 = len(body) - len(stripped) + 1
        word = stripped.split(None, 1)[0]
        rest = stripped[len(word):]
        rest_col = col0 + len(word)
        if word == "protocol":
            if name is not None:
                diags.append(Diagnostic(n, col0, "duplicate protocol header"))
            nm = rest.strip()
            if not re.fullmatch(_IDENT, nm):
                diags.append(Diagnostic(n, rest_col + 1, f"invalid protocol name {nm!r}"))
            name = nm
        elif word in _DECL:
            for nm, col in _split_names(rest, n, rest_col, diags):
                atom = declare(nm, _DECL[word], n, col)
                if atom is not None:
                    decls[atom.sort].append(atom)
        elif word == "keypair":
            names = _split_names(rest, n, rest_col, diags)
            if len(names) != 2:
                diags.append(Diagnostic(n, col0, "keypair takes exactly two key names"))
                continue
            pub = declare(names[0][0], Sort.KEY, n, names[0][1])
            priv = declare(names[1][0], Sort.KEY, n, names[1][1])
            if pub is not None and priv is not None:
                keypairs.append((pub, priv))
        else:
            deferred.append((n, body, col0))
    if name is None:
        diags.append(Diagnostic(1, 1, "missing 'protocol <name>' header"))

    roles = decls[Sort.ROLE]
    knowledge: dict[str, frozenset] = {r.name: frozenset() for r in roles}
    secrets: list[Term] = []
    secrets_line = None
    messages: list[Message] = []

    for n, body, col0 in deferred:
        stripped = body.lstrip()
        try:
            if stripped.startswith("knows"):
                m = re.match(rf"knows\s+({_IDENT})\s*:(.*)$", stripped)
                if not m:
                    raise _Abort(Diagnostic(n, col0, "expected 'knows <role>: <terms>'"))
                role = m.group(1)
                if sorts.get(role) is not Sort.ROLE:
                    diags.append(Diagnostic(n, col0 + m.start(1), f"{role} is not a declared role"))
                    continue
                if ("knows", role) in locations:
                    diags.append(Diagnostic(n, col0, f"duplicate knows line for {role}"))
                    continue
                reader = _TermReader(m.group(2), n, col0 + m.start(2), sorts, diags)
                knowledge[role] = frozenset(t for t in reader.items() if t is not EMPTY)
                locations[("knows", role)] = (n, col0)
            elif re.match(r"secrets\s*:", stripped):
                if secrets_line is not None:
                    diags.append(Diagnostic(n, col0, "duplicate secrets line"))
                    continue
                colon = stripped.index(":")
                reader = _TermReader(stripped[colon + 1:], n, col0 + colon + 1, sorts, diags)
                secrets = reader.items()
                secrets_line = n
                locations[("secrets",)] = (n, col0)
            else:
                m = _MESSAGE.match(stripped)
                if not m:
                    raise _Abort(Diagnostic(n, col0, f"unrecognised line: {stripped}"))
                idx, snd, rcv, payload = m.groups()
                if int(idx) != len(messages) + 1:
                    diags.append(Diagnostic(n, col0, f"message number {idx} out of sequence "
                                                     f"(expected {len(messages) + 1})"))
                ends = []
                for who, start in ((snd, m.start(2)), (rcv, m.start(3))):
                    if sorts.get(who) is not Sort.ROLE:
                        what = "undeclared role" if who not in sorts else "not a role"
                        diags.append(Diagnostic(n, col0 + start, f"{who}: {what}"))
                    ends.append(Atom(who, Sort.ROLE))
                if snd == rcv:
                    diags.append(Diagnostic(n, col0 + m.start(3), "sender and receiver must differ"))
                reader = _TermReader(payload, n, col0 + m.start(4), sorts, diags)
                term = reader.term()
                if not reader.at_end():
                    raise _Abort(Diagnostic(n, reader.peek()[2], "trailing input after term"))
                if term is EMPTY:
                    diags.append(Diagnostic(n, col0 + m.start(4), "message payload cannot be empty"))
                messages.append(Message(ends[0], ends[1], term))
                locations[("message", len(messages))] = (n, col0)
        except _Abort as exc:
            diags.append(exc.diag)

    carriers = [m.payload for m in messages] + [t for ts in knowledge.values() for t in ts]
    for s in secrets:
        if not any(subterm(s, c) for c in carriers):
            line, col = locations.get(("secrets",), (1, 1))
            diags.append(Diagnostic(line, col, f"secret {format_term(s)} does not occur in the protocol"))

    errors = [d for d in diags if d.severity == "error"]
    if errors:
        raise SpecError(sorted(errors, key=lambda d: (d.line, d.column)), source)
    proto = Protocol(
        name=name,
        roles=tuple(roles),
        nonces=tuple(decls[Sort.NONCE]),
        keys=tuple(decls[Sort.KEY]),
        keypairs=tuple(keypairs),
        knowledge=knowledge,
        secrets=frozenset(secrets),
        messages=tuple(messages),
    )
    leftover = validate_protocol(proto)
    if leftover:
        raise SpecError([Diagnostic(1, 1, msg) for msg in leftover], source)
    warnings = [d for d in diags if d.severity == "warning"]
    return SpecDocument(text, proto, locations, warnings)


def parse_protocol(text: str, source: str = "<spec>") -> Protocol:
    return parse_document(text, source).protocol


def load_protocol(path) -> Protocol:
    with open(path, encoding="utf-8") as fh:
        return parse_protocol(fh.read(), str(path))


def _item(t: Term) -> str:
    s = format_term(t)
    return f"({s})" if isinstance(t, Pair) else s


def _items(terms) -> str:
    return ", ".join(_item(t) for t in sorted(terms, key=sort_key))


def serialize_protocol(p: Protocol) -> str:
    out = [f"protocol {p.name}"]
    for word, atoms in (("roles", p.roles), ("nonces", p.nonces), ("keys", p.keys)):
        if atoms:
            out.append(f"{word} " + ", ".join(a.name for a in atoms))
    for pub, priv in p.keypairs:
        out.append(f"keypair {pub.name}, {priv.name}")
    for r in p.roles:
        if p.knows(r.name):
            out.append(f"knows {r.name}: {_items(p.knows(r.name))}")
    if p.secrets:
        out.append(f"secrets: {_items(p.secrets)}")
    for i, m in enumerate(p.messages, 1):
        out.append(f"{i}. {m.sender.name} -> {m.receiver.name} : {format_term(m.payload)}")
    return "\n".join(out) + "\n"


_SORT_NAMES = {Sort.ROLE: "role", Sort.NONCE: "nonce", Sort.KEY: "key"}


def protocol_to_json(p: Protocol) -> dict:
    return {
        "name": p.name,
        "roles": [r.name for r in p.roles],
        "sorts": {a.name: _SORT_NAMES[a.sort] for a in p.atoms},
        "keypairs": [[pub.name, priv.name] for pub, priv in p.keypairs],
        "knowledge": {r.name: [format_term(t) for t in sorted(p.knows(r.name), key=sort_key)]
                      for r in p.roles},
        "secrets": [format_term(t) for t in sorted(p.secrets, key=sort_key)],
        "messages": [
            {"index": i, "sender": m.sender.name, "receiver": m.receiver.name,
             "payload": format_term(m.payload)}
            for i, m in enumerate(p.messages, 1)
        ],
    }


def parse_term(text: str, sorts: dict) -> Term:
    """Parse a single term against a name -> Sort map."""
    diags: list[Diagnostic] = []
    try:
        reader = _TermReader(text, 1, 1, sorts, diags)
        t = reader.term()
        if not reader.at_end():
            raise _Abort(Diagnostic(1, reader.peek()[2], "trailing input after term"))
    except _Abort as exc:
        diags.append(exc.diag)
    errors = [d for d in diags if d.severity == "error"]
    if errors:
        raise SpecError(errors)
    return t


def protocol_from_json(data: dict) -> Protocol:
    inverse = {v: k for k, v in _SORT_NAMES.items()}
    sorts = {nm: inverse[s] for nm, s in data["sorts"].items()}
    paired = {nm for kp in data.get("keypairs", []) for nm in kp}

    def atoms(sort):
        return tuple(Atom(nm, s) for nm, s in sorts.items() if s is sort and nm not in paired)

    roles = tuple(Atom(nm, Sort.ROLE) for nm in data["roles"])
    return Protocol(
        name=data["name"],
        roles=roles,
        nonces=atoms(Sort.NONCE),
        keys=atoms(Sort.KEY),
        keypairs=tuple((Atom(a, Sort.KEY), Atom(b, Sort.KEY)) for a, b in data.get("keypairs", [])),
        knowledge={r: frozenset(parse_term(t, sorts) for t in ts) for r, ts in data["knowledge"].items()},
        secrets=frozenset(parse_term(t, sorts) for t in data["secrets"]),
        messages=tuple(
            Message(Atom(m["sender"], Sort.ROLE), Atom(m["receiver"], Sort.ROLE), parse_term(m["payload"], sorts))
            for m in data["messages"]
        ),
    )


def uses_mk(t: Term) -> bool:
    return any(isinstance(s, Enc) and s.func is Func.MK for s in subterms(t))
