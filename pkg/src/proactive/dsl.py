"""Textual policy format: parse, validate, and serialize enforcement models.

Grammar (line-oriented, '#' starts a comment):

    policy <name>
    version <n>
    experimental                 (optional; excluded from default deployment)
    statement "<text>"
    target <interface>
    states <id> ...
    initial <id>
    on <guard> from <s> to <s'> emit <item>[, <item> ...]

    guard ::= call <iface>.<method> | callback <method> | new <iface>
            | any | any-of {<symbol> ...} | any-except {<symbol> ...}
    item  ::= input
            | insert call <iface>.<method> [args cached|none|(<literals>)]
            | insert new <iface> args cached
            | (a transition may instead emit the single keyword `none`,
               which suppresses the matched input)

Canonical form uses LF line endings, single-space token separation,
states sorted by id and transitions sorted by (from, guard text).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .automata import (
    ActionSymbol,
    ArgSource,
    EditAutomaton,
    Guard,
    GuardKind,
    OutputItem,
    Transition,
    state_sort_key,
    validate,
)

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_-]*\Z")
_TOKEN = re.compile(r'"(?:[^"\\]|\\.)*"|[{}(),]|[^\s{}(),"]+')


@dataclass(frozen=True)
class DslDiagnostic:
    kind: str  # lexical | syntax | semantic
    line: int
    column: int
    message: str
    expected: Optional[str] = None

    def __str__(self) -> str:
        hint = f" (expected {self.expected})" if self.expected else ""
        return f"{self.line}:{self.column}: {self.kind} error: {self.message}{hint}"


class PolicyParseError(Exception):
    def __init__(self, diagnostics: list[DslDiagnostic]) -> None:
        self.diagnostics = diagnostics
        super().__init__("; ".join(str(d) for d in diagnostics))


@dataclass(frozen=True)
class PolicyDoc:
    """A named, parsed policy: enforcement model plus metadata."""

    name: str
    statement: str
    target_interface: str
    automaton: EditAutomaton
    version: int = 0
    experimental: bool = False


@dataclass
class _Token:
    text: str
    line: int
    column: int


def _strip_comment(line: str) -> str:
    out = []
    in_string = False
    i = 0
    while i < len(line):
        ch = line[i]
        if in_string:
            if ch == "\\" and i + 1 < len(line):
                out.append(line[i:i + 2])
                i += 2
                continue
            if ch == '"':
                in_string = False
        elif ch == '"':
            in_string = True
        elif ch == "#":
            break
        out.append(ch)
        i += 1
    return "".join(out)


def _tokenize_line(raw: str, lineno: int, diags: list[DslDiagnostic]) -> list[_Token]:
    text = _strip_comment(raw)
    tokens: list[_Token] = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if m is None:
            diags.append(DslDiagnostic(
                "lexical", lineno, pos + 1,
                f"unterminated string or bad character {text[pos]!r}"))
            return tokens
        tokens.append(_Token(m.group(0), lineno, pos + 1))
        pos = m.end()
    return tokens


def _unquote(token: _Token) -> str:
    body = token.text[1:-1]
    out: list[str] = []
    i = 0
    while i < len(body):
        if body[i] == "\\" and i + 1 < len(body):
            nxt = body[i + 1]
            out.append("\n" if nxt == "n" else nxt)
            i += 2
        else:
            out.append(body[i])
            i += 1
    return "".join(out)


def _quote(text: str) -> str:
    escaped = (text.replace("\\", "\\\\")
                   .replace('"', '\\"')
                   .replace("\n", "\\n"))
    return f'"{escaped}"'


class _LineParser:
    """Cursor over one line's tokens; errors carry position + hint."""

    def __init__(self, tokens: list[_Token], lineno: int,
                 diags: list[DslDiagnostic]) -> None:
        self.tokens = tokens
        self.lineno = lineno
        self.pos = 0
        self.diags = diags

    def peek(self) -> Optional[_Token]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(self, expected: str) -> _Token:
        tok = self.peek()
        if tok is None:
            last = self.tokens[-1] if self.tokens else None
            col = (last.column + len(last.text)) if last else 1
            raise _Fail(DslDiagnostic("syntax", self.lineno, col,
                                      "unexpected end of line", expected))
        self.pos += 1
        return tok

    def expect(self, literal: str) -> _Token:
        tok = self.next(repr(literal))
        if tok.text != literal:
            raise _Fail(DslDiagnostic("syntax", tok.line, tok.column,
                                      f"unexpected token {tok.text!r}",
                                      repr(literal)))
        return tok

    def done(self) -> None:
        tok = self.peek()
        if tok is not None:
            raise _Fail(DslDiagnostic("syntax", tok.line, tok.column,
                                      f"trailing token {tok.text!r}",
                                      "end of line"))


class _Fail(Exception):
    def __init__(self, diagnostic: DslDiagnostic) -> None:
        self.diagnostic = diagnostic
        super().__init__(str(diagnostic))


def _parse_symbol_atom(lp: _LineParser) -> ActionSymbol:
    head = lp.next("'call', 'callback' or 'new'")
    if head.text == "callback":
        method = lp.next("callback method name")
        return ActionSymbol.callback(method.text)
    if head.text == "new":
        iface = lp.next("interface name")
        return ActionSymbol.constructor(iface.text)
    if head.text == "call":
        ref = lp.next("<interface>.<method>")
        if "." not in ref.text:
            raise _Fail(DslDiagnostic("syntax", ref.line, ref.column,
                                      f"malformed call target {ref.text!r}",
                                      "<interface>.<method>"))
        iface, method = ref.text.split(".", 1)
        return ActionSymbol.call(iface, method)
    raise _Fail(DslDiagnostic("syntax", head.line, head.column,
                              f"unexpected token {head.text!r}",
                              "'call', 'callback' or 'new'"))


def _parse_symbol_set(lp: _LineParser) -> tuple[frozenset[ActionSymbol], _Token]:
    opener = lp.expect("{")
    symbols: set[ActionSymbol] = set()
    while True:
        tok = lp.peek()
        if tok is None:
            raise _Fail(DslDiagnostic("syntax", opener.line, opener.column,
                                      "unclosed symbol set", "'}'"))
        if tok.text == "}":
            lp.next("'}'")
            return frozenset(symbols), opener
        symbols.add(_parse_symbol_atom(lp))


def _parse_guard(lp: _LineParser) -> Guard:
    tok = lp.peek()
    if tok is None:
        raise _Fail(DslDiagnostic("syntax", lp.lineno, 1,
                                  "missing guard", "guard"))
    if tok.text == "any":
        lp.next("guard")
        return Guard.any()
    if tok.text in ("any-of", "any-except"):
        lp.next("guard")
        symbols, opener = _parse_symbol_set(lp)
        if not symbols:
            raise _Fail(DslDiagnostic("semantic", opener.line, opener.column,
                                      f"{tok.text} guard has an empty symbol set"))
        if tok.text == "any-of":
            return Guard.any_of(symbols)
        return Guard.any_except(symbols)
    return Guard.exactly(_parse_symbol_atom(lp))


def _parse_literals(lp: _LineParser) -> tuple:
    lp.expect("(")
    values: list = []
    while True:
        tok = lp.next("literal or ')'")
        if tok.text == ")":
            return tuple(values)
        if tok.text.startswith('"'):
            values.append(_unquote(tok))
        else:
            try:
                values.append(int(tok.text))
            except ValueError:
                raise _Fail(DslDiagnostic("syntax", tok.line, tok.column,
                                          f"bad literal {tok.text!r}",
                                          "integer or quoted string"))


def _parse_item(lp: _LineParser) -> OutputItem:
    tok = lp.peek()
    if tok is not None and tok.text == "input":
        lp.next("item")
        return OutputItem.forward()
    head = lp.next("'input' or 'insert'")
    if head.text != "insert":
        raise _Fail(DslDiagnostic("syntax", head.line, head.column,
                                  f"unexpected token {head.text!r}",
                                  "'input' or 'insert'"))
    symbol = _parse_symbol_atom(lp)
    nxt = lp.peek()
    if nxt is None or nxt.text != "args":
        return OutputItem.synthesize(symbol)
    lp.next("'args'")
    source = lp.next("'cached', 'none' or '('")
    if source.text == "cached":
        return OutputItem.synthesize(symbol, ArgSource.CACHED)
    if source.text == "none":
        return OutputItem.synthesize(symbol)
    if source.text == "(":
        lp.pos -= 1
        return OutputItem.synthesize(symbol, ArgSource.LITERALS, _parse_literals(lp))
    raise _Fail(DslDiagnostic("syntax", source.line, source.column,
                              f"unexpected token {source.text!r}",
                              "'cached', 'none' or '('"))


def _parse_transition(lp: _LineParser) -> Transition:
    guard = _parse_guard(lp)
    lp.expect("from")
    source = lp.next("state id").text
    lp.expect("to")
    target = lp.next("state id").text
    lp.expect("emit")
    tok = lp.peek()
    if tok is not None and tok.text == "none":
        lp.next("item")
        lp.done()
        return Transition(source, guard, (), target)
    items = [_parse_item(lp)]
    while True:
        tok = lp.peek()
        if tok is None:
            break
        if tok.text != ",":
            raise _Fail(DslDiagnostic("syntax", tok.line, tok.column,
                                      f"unexpected token {tok.text!r}",
                                      "',' or end of line"))
        lp.next("','")
        items.append(_parse_item(lp))
    lp.done()
    return Transition(source, guard, tuple(items), target)


def parse(text: str) -> PolicyDoc:
    """Parse a policy document; raises PolicyParseError with positioned
    diagnostics on any lexical, syntax, or semantic problem."""
    diags: list[DslDiagnostic] = []
    name: Optional[str] = None
    statement: Optional[str] = None
    target: Optional[str] = None
    version = 0
    experimental = False
    states: list[str] = []
    initial: Optional[str] = None
    transitions: list[Transition] = []
    seen: dict[str, int] = {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        tokens = _tokenize_line(raw, lineno, diags)
        if not tokens:
            continue
        lp = _LineParser(tokens, lineno, diags)
        head = tokens[0].text
        try:
            if head == "policy":
                lp.next("'policy'")
                tok = lp.next("policy name")
                if not _IDENT.match(tok.text):
                    raise _Fail(DslDiagnostic("semantic", tok.line, tok.column,
                                              f"invalid policy name {tok.text!r}"))
                name = tok.text
                lp.done()
            elif head == "version":
                lp.next("'version'")
                tok = lp.next("non-negative integer")
                try:
                    version = int(tok.text)
                    if version < 0:
                        raise ValueError
                except ValueError:
                    raise _Fail(DslDiagnostic("semantic", tok.line, tok.column,
                                              f"invalid version {tok.text!r}"))
                lp.done()
            elif head == "experimental":
                lp.next("'experimental'")
                experimental = True
                lp.done()
            elif head == "statement":
                lp.next("'statement'")
                tok = lp.next("quoted statement text")
                if not (tok.text.startswith('"') and tok.text.endswith('"')
                        and len(tok.text) >= 2):
                    raise _Fail(DslDiagnostic("syntax", tok.line, tok.column,
                                              "statement text must be quoted",
                                              '"<text>"'))
                statement = _unquote(tok)
                lp.done()
            elif head == "target":
                lp.next("'target'")
                target = lp.next("interface name").text
                lp.done()
            elif head == "states":
                lp.next("'states'")
                while lp.peek() is not None:
                    tok = lp.next("state id")
                    if tok.text in states:
                        raise _Fail(DslDiagnostic("semantic", tok.line, tok.column,
                                                  f"duplicate state {tok.text!r}"))
                    states.append(tok.text)
            elif head == "initial":
                lp.next("'initial'")
                initial = lp.next("state id").text
                lp.done()
            elif head == "on":
                lp.next("'on'")
                transitions.append(_parse_transition(lp))
                seen[f"t{len(transitions)}"] = lineno
            else:
                raise _Fail(DslDiagnostic(
                    "syntax", tokens[0].line, tokens[0].column,
                    f"unknown directive {head!r}",
                    "'policy', 'version', 'experimental', 'statement', "
                    "'target', 'states', 'initial' or 'on'"))
        except _Fail as fail:
            diags.append(fail.diagnostic)

    last = len(text.splitlines()) or 1
    for field_name, value in (("policy", name), ("statement", statement),
                              ("target", target), ("initial", initial)):
        if value is None:
            diags.append(DslDiagnostic("syntax", last, 1,
                                       f"missing {field_name!r} directive",
                                       f"{field_name} ..."))
    if not states:
        diags.append(DslDiagnostic("syntax", last, 1,
                                   "missing 'states' directive", "states ..."))
    if diags:
        raise PolicyParseError(diags)

    declared = set(states)
    for t in transitions:
        for endpoint in (t.source, t.target):
            if endpoint not in declared:
                diags.append(DslDiagnostic(
                    "semantic", 1, 1,
                    f"transition references undeclared state {endpoint!r}"))
    if initial not in declared:
        diags.append(DslDiagnostic("semantic", 1, 1,
                                   f"initial state {initial!r} is not declared"))
    if diags:
        raise PolicyParseError(diags)

    automaton = EditAutomaton(frozenset(states), initial, tuple(transitions))
    for d in validate(automaton):
        diags.append(DslDiagnostic("semantic", 1, 1, str(d)))
    if diags:
        raise PolicyParseError(diags)

    return PolicyDoc(name=name, statement=statement, target_interface=target,
                     automaton=automaton, version=version,
                     experimental=experimental)


def serialize(doc: PolicyDoc) -> str:
    """Canonical rendering: deterministic, byte-identical across runs.

    States are sorted by id and transitions by (from, guard text);
    parse(serialize(doc)) == doc.
    """
    lines = [f"policy {doc.name}", f"version {doc.version}"]
    if doc.experimental:
        lines.append("experimental")
    lines.append(f"statement {_quote(doc.statement)}")
    lines.append(f"target {doc.target_interface}")
    ordered_states = sorted(doc.automaton.states, key=state_sort_key)
    lines.append("states " + " ".join(ordered_states))
    lines.append(f"initial {doc.automaton.initial}")
    for t in sorted(doc.automaton.transitions, key=Transition.sort_key):
        if t.output:
            emitted = ", ".join(i.text() for i in t.output)
        else:
            emitted = "none"
        lines.append(f"on {t.guard.text()} from {t.source} to {t.target} "
                     f"emit {emitted}")
    return "\n".join(lines) + "\n"
