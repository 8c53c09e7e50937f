"""
Terms, model files and their concrete syntax.

The grammar accepted by :func:`parse_model`::

    model    := (let | def | system)*
    let      := "let" IDENT "=" NUMBER ";"
    def      := IDENT "=" term ";"
    system   := "system" IDENT "=" "coop" "{" labellist? "}" "(" IDENT ("," IDENT)* ")" ";"
    term     := "0" | sum | closed
    closed   := (IDENT | "(" term ")") ("[" LABEL "<-" rate "]")*
    sum      := prefix ("+" prefix)*
    prefix   := "(" LABEL "," rate ")" "." cont
    cont     := "0" | closed | prefix
    rate     := NUMBER | "?" | IDENT

Passive rates are written ``?``; the variable they stand for is keyed on the
prefix label.  Named constants declared with ``let`` may appear wherever a
numeric rate is expected and are substituted while parsing.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

from .errors import ParseError

__all__ = [
    "Const", "Passive", "PASSIVE", "Rate", "Nil", "NIL", "Ident", "Prefix", "Choice",
    "Closure", "Term", "System", "Model", "parse_model", "parse_term", "desugar",
    "format_term", "format_rate", "format_model", "is_strict", "rate_key",
]


# -- rates -------------------------------------------------------------------

@dataclass(frozen=True)
class Const:
    value: float

    def __post_init__(self):
        if not self.value > 0:
            raise ValueError(f"rate must be positive, got {self.value!r}")


@dataclass(frozen=True)
class Passive:
    """The unspecified rate ``x_a`` of a passive prefix; its label is its name."""


PASSIVE = Passive()
Rate = Union[Const, Passive]


def rate_key(rate: Rate) -> Tuple[int, float]:
    # Const sorts before Passive
    if isinstance(rate, Const):
        return (0, rate.value)
    return (1, 0.0)


def format_rate(rate: Rate) -> str:
    if isinstance(rate, Const):
        return repr(float(rate.value))
    return "?"


# -- terms -------------------------------------------------------------------

@dataclass(frozen=True)
class Nil:
    def __str__(self):
        return "0"


NIL = Nil()


@dataclass(frozen=True)
class Ident:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Prefix:
    label: str
    rate: Rate
    cont: "Term"


@dataclass(frozen=True)
class Choice:
    branches: Tuple[Prefix, ...]

    def __post_init__(self):
        if not self.branches:
            raise ValueError("a choice needs at least one branch")

    def __str__(self):
        return format_term(self)


@dataclass(frozen=True)
class Closure:
    body: "Term"
    label: str
    rate: float

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError(f"closure rate must be positive, got {self.rate!r}")

    def __str__(self):
        return format_term(self)


Term = Union[Nil, Ident, Choice, Closure]


@dataclass(frozen=True)
class System:
    """A declared cooperation ``coop L (C1, ..., Cn)`` over named components."""

    name: str
    coop_set: frozenset
    components: Tuple[str, ...]


@dataclass(eq=False)
class Model:
    """Identifier equations plus declared systems.

    Models hash by identity so they can key caches; treat them as immutable
    once built.
    """

    equations: Dict[str, Term] = field(default_factory=dict)
    systems: Dict[str, System] = field(default_factory=dict)
    constants: Dict[str, float] = field(default_factory=dict)
    positions: Dict[str, Tuple[int, int]] = field(default_factory=dict)

    def __getitem__(self, name: str) -> Term:
        return self.equations[name]

    def __contains__(self, name: str) -> bool:
        return name in self.equations

    def labels(self) -> frozenset:
        """Every label mentioned by an equation or a cooperation set."""
        found = set()
        for term in self.equations.values():
            found |= _term_labels(term)
        for system in self.systems.values():
            found |= system.coop_set
        return frozenset(found)

    def process_names(self) -> List[str]:
        return [name for name in self.equations if "#" not in name]


def _term_labels(term) -> set:
    if isinstance(term, Choice):
        out = set()
        for b in term.branches:
            out.add(b.label)
            out |= _term_labels(b.cont)
        return out
    if isinstance(term, Closure):
        return _term_labels(term.body) | {term.label}
    return set()


# -- formatting --------------------------------------------------------------

def _format_prefix(p: Prefix) -> str:
    cont = p.cont
    if isinstance(cont, Choice) and len(cont.branches) > 1:
        text = f"({format_term(cont)})"
    else:
        text = format_term(cont)
    return f"({p.label},{format_rate(p.rate)}).{text}"


def format_term(term) -> str:
    """Render a term in the concrete syntax accepted by :func:`parse_term`."""
    if isinstance(term, Nil):
        return "0"
    if isinstance(term, Ident):
        return term.name
    if isinstance(term, Choice):
        return " + ".join(_format_prefix(b) for b in term.branches)
    if isinstance(term, Closure):
        body = term.body
        inner = format_term(body)
        if not isinstance(body, (Ident, Closure)):
            inner = f"({inner})"
        return f"{inner}[{term.label} <- {repr(float(term.rate))}]"
    fmt = getattr(term, "format", None)
    if fmt is not None:
        return fmt()
    raise TypeError(f"not a process term: {term!r}")


def format_model(model: Model) -> str:
    lines = [f"{name} = {format_term(t)};" for name, t in model.equations.items()]
    for s in model.systems.values():
        labels = ",".join(sorted(s.coop_set))
        lines.append(f"system {s.name} = coop {{{labels}}} ({', '.join(s.components)});")
    return "\n".join(lines) + "\n"


# -- lexer -------------------------------------------------------------------

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+|//[^\n]*)
  | (?P<arrow><-)
  | (?P<number>-?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_#']*)
  | (?P<sym>[()\[\]{},.+=;?])
""", re.VERBOSE)

_KEYWORDS = {"system", "coop", "let"}


@dataclass(frozen=True)
class _Token:
    kind: str   # number, ident, sym, arrow, keyword, eof
    text: str
    line: int
    col: int


def _tokenize(text: str) -> List[_Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        chunk = m.group()
        if kind != "ws":
            if kind == "ident" and chunk in _KEYWORDS:
                kind = "keyword"
            tokens.append(_Token(kind, chunk, line, pos - line_start + 1))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    tokens.append(_Token("eof", "", line, pos - line_start + 1))
    return tokens


# -- parser ------------------------------------------------------------------

class _Parser:
    def __init__(self, text: str, constants: Optional[Dict[str, float]] = None):
        self.tokens = _tokenize(text)
        self.i = 0
        self.constants = dict(constants or {})

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def peek(self, k: int = 1) -> _Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def error(self, message: str, tok: Optional[_Token] = None):
        tok = tok or self.tok
        return ParseError(message, tok.line, tok.col)

    def at(self, text: str) -> bool:
        return self.tok.kind in ("sym", "arrow", "keyword") and self.tok.text == text

    def expect(self, text: str) -> _Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        tok = self.tok
        self.i += 1
        return tok

    def expect_ident(self, what: str = "identifier") -> _Token:
        if self.tok.kind != "ident":
            found = self.tok.text or "end of input"
            raise self.error(f"expected {what}, found {found!r}")
        tok = self.tok
        self.i += 1
        return tok

    def number(self, tok: _Token) -> float:
        value = float(tok.text)
        if not value > 0:
            raise self.error(f"rate must be positive, got {tok.text}", tok)
        return value

    # rates
    def numeric_rate(self) -> float:
        tok = self.tok
        if tok.kind == "number":
            self.i += 1
            return self.number(tok)
        if tok.kind == "ident":
            self.i += 1
            if tok.text not in self.constants:
                raise self.error(f"undefined constant {tok.text!r}", tok)
            return self.constants[tok.text]
        raise self.error(f"expected a rate, found {tok.text or 'end of input'!r}")

    def rate(self) -> Rate:
        if self.at("?"):
            self.i += 1
            return PASSIVE
        return Const(self.numeric_rate())

    # terms
    def is_prefix_start(self) -> bool:
        return (self.at("(") and self.peek(1).kind == "ident"
                and self.peek(2).kind == "sym" and self.peek(2).text == ",")

    def term(self):
        if self.is_prefix_start():
            return self.sum()
        if self.tok.kind == "number" and self.tok.text == "0":
            self.i += 1
            return NIL
        return self.closed()

    def sum(self) -> Choice:
        branches = [self.prefix()]
        while self.at("+"):
            self.i += 1
            if not self.is_prefix_start():
                raise self.error("expected a prefix '(label,rate).' after '+'")
            branches.append(self.prefix())
        return Choice(tuple(branches))

    def prefix(self) -> Prefix:
        self.expect("(")
        label = self.expect_ident("label").text
        self.expect(",")
        rate = self.rate()
        self.expect(")")
        self.expect(".")
        return Prefix(label, rate, self.cont())

    def cont(self):
        if self.is_prefix_start():
            return Choice((self.prefix(),))
        if self.tok.kind == "number" and self.tok.text == "0":
            self.i += 1
            return NIL
        return self.closed()

    def closed(self):
        tok = self.tok
        if tok.kind == "ident":
            self.i += 1
            term = Ident(tok.text)
            self.idents.append((tok.text, tok))
        elif self.at("("):
            self.i += 1
            term = self.term()
            self.expect(")")
        else:
            raise self.error(f"expected a process term, found {tok.text or 'end of input'!r}")
        while self.at("["):
            self.i += 1
            label = self.expect_ident("label").text
            self.expect("<-")
            term = Closure(term, label, self.numeric_rate())
            self.expect("]")
        return term

    # top level
    def model(self) -> Model:
        model = Model(constants=self.constants)
        refs = []          # (name, token) for identifiers used in equations
        comp_refs = []     # (name, token) for system components
        defined = {}
        while self.tok.kind != "eof":
            if self.at("let"):
                self.i += 1
                name = self.expect_ident("constant name")
                self.expect("=")
                tok = self.tok
                if tok.kind != "number":
                    raise self.error("expected a number")
                self.i += 1
                if name.text in self.constants:
                    raise self.error(f"duplicate constant {name.text!r}", name)
                self.constants[name.text] = self.number(tok)
                self.expect(";")
            elif self.at("system"):
                self.i += 1
                name = self.expect_ident("system name")
                self.expect("=")
                self.expect("coop")
                self.expect("{")
                labels = []
                if not self.at("}"):
                    labels.append(self.expect_ident("label").text)
                    while self.at(","):
                        self.i += 1
                        labels.append(self.expect_ident("label").text)
                self.expect("}")
                self.expect("(")
                comps = [self.expect_ident("component name")]
                while self.at(","):
                    self.i += 1
                    comps.append(self.expect_ident("component name"))
                self.expect(")")
                self.expect(";")
                self._define(defined, name)
                comp_refs.extend((c.text, c) for c in comps)
                model.systems[name.text] = System(name.text, frozenset(labels),
                                                  tuple(c.text for c in comps))
                model.positions[name.text] = (name.line, name.col)
            else:
                name = self.expect_ident("definition")
                self.expect("=")
                self.idents = []
                term = self.term()
                self.expect(";")
                self._define(defined, name)
                refs.extend(self.idents)
                model.equations[name.text] = term
                model.positions[name.text] = (name.line, name.col)
        for ref, tok in refs:
            if ref not in model.equations:
                what = "a system cannot be used inside a process term" if ref in model.systems \
                    else f"undefined identifier {ref!r}"
                raise ParseError(what, tok.line, tok.col)
        for ref, tok in comp_refs:
            if ref not in model.equations and ref not in model.systems:
                raise ParseError(f"undefined identifier {ref!r}", tok.line, tok.col)
        return model

    def _define(self, defined, tok):
        if tok.text in defined:
            line, col = defined[tok.text]
            raise ParseError(f"duplicate definition of {tok.text!r} (first defined at {line}:{col})",
                             tok.line, tok.col)
        defined[tok.text] = (tok.line, tok.col)


def parse_model(text: str) -> Model:
    """Parse model text.  Terms may still contain nested (sugared) prefixes."""
    return _Parser(text).model()


def parse_term(text: str, constants: Optional[Dict[str, float]] = None):
    """Parse a single term; identifiers are not resolved."""
    p = _Parser(text, constants)
    p.idents = []
    term = p.term()
    if p.tok.kind != "eof":
        raise p.error(f"unexpected {p.tok.text!r} after term")
    return term


# -- desugaring --------------------------------------------------------------

def is_strict(term) -> bool:
    """True when every prefix continuation is ``0`` or an identifier."""
    if isinstance(term, Choice):
        return all(isinstance(b.cont, (Nil, Ident)) for b in term.branches)
    if isinstance(term, Closure):
        return is_strict(term.body)
    return True


def desugar(model: Model) -> Model:
    """Hoist non-atomic continuations into fresh identifiers ``Parent#k``.

    Numbering follows a depth-first walk of each equation, so the names are
    stable across runs.  Strict models come back unchanged.
    """
    taken = set(model.equations) | set(model.systems)
    out: Dict[str, Term] = {}
    positions = dict(model.positions)

    for name, term in model.equations.items():
        counter = [0]
        pending: List[Tuple[str, object]] = []

        def fresh() -> str:
            while True:
                counter[0] += 1
                cand = f"{name}#{counter[0]}"
                if cand not in taken:
                    taken.add(cand)
                    return cand

        def norm(t, top: bool):
            if isinstance(t, Choice):
                return Choice(tuple(Prefix(b.label, b.rate, atom(b.cont)) for b in t.branches))
            if isinstance(t, Closure):
                return Closure(norm(t.body, top), t.label, t.rate)
            return t

        def atom(t):
            if isinstance(t, (Nil, Ident)):
                return t
            new = fresh()
            slot = [new, None]
            pending.append(slot)
            slot[1] = norm(t, False)
            return Ident(new)

        out[name] = norm(term, True)
        # synthetic equations follow their parent, in creation order
        for new, body in pending:
            out[new] = body
            positions.setdefault(new, model.positions.get(name, (0, 0)))

    return Model(out, dict(model.systems), dict(model.constants), positions)
