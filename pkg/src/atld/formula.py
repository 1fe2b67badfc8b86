"""Formula AST, concrete syntax and the ordered labelled subformula list.

Concrete syntax (loosest to tightest)::

    formula  := implies
    implies  := or ('->' implies)?
    or       := and ('|' and)*
    and      := unary ('&' unary)*
    unary    := '!' unary | 'K' '{' IDENT '}' unary | coalition | update | atom
    coalition:= '<' agents '>' ('X' unary | 'F' unary | 'G' unary
                                | formula ('U' | 'R') formula)
    update   := '[' item (',' item)* ']' ('+' | '-') unary
    item     := formula ':' IDENT '->' agents ('|' agents)?
    atom     := 'true' | 'false' | 'has' '(' IDENT ',' IDENT ')' | IDENT
              | '(' formula ')'
    agents   := '{' (IDENT (',' IDENT)*)? '}'

``<A> F phi`` and ``<A> G phi`` are sugar for ``<A> true U phi`` and
``<A> false R phi``; the parser desugars them and the printer restores them.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Union

__all__ = [
    "Formula", "Prop", "Const", "TRUE", "FALSE", "Not", "Or", "And", "Implies",
    "CoalitionNext", "CoalitionUntil", "CoalitionRelease", "Has", "Knows",
    "Update", "UpdateItem", "UpdateSpec", "LabelledSubformula",
    "FormulaSyntaxError", "parse_formula", "parse_update", "render_formula",
    "render_update", "formula_size", "subformula_order", "subformulas",
    "is_epistemic", "eventually", "always",
]


class FormulaSyntaxError(ValueError):
    """Raised for malformed formula text; carries the offending position."""

    def __init__(self, message: str, text: str, pos: int):
        self.text = text
        self.pos = pos
        caret = " " * pos + "^"
        super().__init__(f"{message} at position {pos}\n  {text}\n  {caret}")


def _agents(value: Iterable[str]) -> frozenset:
    return value if isinstance(value, frozenset) else frozenset(value)


class Formula:
    """Base class of all AST nodes."""

    __slots__ = ()

    def __str__(self) -> str:
        return render_formula(self)


@dataclass(frozen=True)
class Prop(Formula):
    name: str


@dataclass(frozen=True)
class Const(Formula):
    value: bool


TRUE = Const(True)
FALSE = Const(False)


@dataclass(frozen=True)
class Not(Formula):
    sub: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class CoalitionNext(Formula):
    coalition: frozenset
    sub: Formula

    def __post_init__(self):
        object.__setattr__(self, "coalition", _agents(self.coalition))


@dataclass(frozen=True)
class CoalitionUntil(Formula):
    coalition: frozenset
    left: Formula
    right: Formula

    def __post_init__(self):
        object.__setattr__(self, "coalition", _agents(self.coalition))


@dataclass(frozen=True)
class CoalitionRelease(Formula):
    coalition: frozenset
    left: Formula
    right: Formula

    def __post_init__(self):
        object.__setattr__(self, "coalition", _agents(self.coalition))


@dataclass(frozen=True)
class Has(Formula):
    agent: str
    action: str


@dataclass(frozen=True)
class Knows(Formula):
    agent: str
    sub: Formula


@dataclass(frozen=True)
class UpdateItem:
    """One ``precondition : action -> targets | informed`` entry."""

    precondition: Formula
    action: str
    targets: frozenset
    informed: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "targets", _agents(self.targets))
        object.__setattr__(self, "informed", _agents(self.informed))


@dataclass(frozen=True)
class UpdateSpec:
    """A signed list of update items applied simultaneously.

    ``sign`` is ``"+"`` (grant) or ``"-"`` (remove). An empty item list is the
    identity update.
    """

    sign: str
    items: tuple

    def __post_init__(self):
        if self.sign not in ("+", "-"):
            raise ValueError(f"update sign must be '+' or '-', got {self.sign!r}")
        object.__setattr__(self, "items", tuple(self.items))

    @property
    def is_grant(self) -> bool:
        return self.sign == "+"

    def __str__(self) -> str:
        return render_update(self)


@dataclass(frozen=True)
class Update(Formula):
    spec: UpdateSpec
    body: Formula


def eventually(coalition, sub: Formula) -> CoalitionUntil:
    return CoalitionUntil(coalition, TRUE, sub)


def always(coalition, sub: Formula) -> CoalitionRelease:
    return CoalitionRelease(coalition, FALSE, sub)


# ---------------------------------------------------------------------------
# Tokenizer and parser

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<arrow>->)
  | (?P<punct>[!&|()<>{}\[\],:+\-])
  | (?P<ident>@[A-Za-z_]\w*:[^\s:,()\[\]{}<>!&|]+|[A-Za-z_][\w.']*)
    """,
    re.VERBOSE,
)

_KEYWORDS = {"true", "false", "has", "K", "X", "F", "G", "U", "R"}


@dataclass
class _Tok:
    kind: str  # 'op', 'ident', 'kw', 'eof'
    value: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", text, pos)
        kind = m.lastgroup
        value = m.group()
        if kind == "ident":
            toks.append(_Tok("kw" if value in _KEYWORDS else "ident", value, pos))
        elif kind in ("arrow", "punct"):
            toks.append(_Tok("op", value, pos))
        pos = m.end()
    toks.append(_Tok("eof", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, message: str, tok: _Tok | None = None):
        tok = tok or self.tok
        raise FormulaSyntaxError(message, self.text, tok.pos)

    def at(self, value: str, kind: str | None = None) -> bool:
        t = self.tok
        return t.value == value and (kind is None or t.kind == kind) and t.kind != "ident"

    def accept(self, value: str) -> bool:
        if self.at(value):
            self.i += 1
            return True
        return False

    def expect(self, value: str):
        if not self.accept(value):
            found = self.tok.value or "end of input"
            self.error(f"expected {value!r}, found {found!r}")

    def ident(self, what: str) -> str:
        t = self.tok
        if t.kind != "ident":
            found = t.value or "end of input"
            self.error(f"expected {what}, found {found!r}")
        self.i += 1
        return t.value

    def done(self):
        if self.tok.kind != "eof":
            self.error(f"unexpected {self.tok.value!r}")

    # grammar -------------------------------------------------------------

    def formula(self) -> Formula:
        left = self.disjunction()
        if self.accept("->"):
            return Implies(left, self.formula())
        return left

    def disjunction(self) -> Formula:
        f = self.conjunction()
        while self.accept("|"):
            f = Or(f, self.conjunction())
        return f

    def conjunction(self) -> Formula:
        f = self.unary()
        while self.accept("&"):
            f = And(f, self.unary())
        return f

    def unary(self) -> Formula:
        t = self.tok
        if self.accept("!"):
            return Not(self.unary())
        if t.kind == "kw" and t.value == "K":
            self.i += 1
            self.expect("{")
            agent = self.ident("agent name")
            self.expect("}")
            return Knows(agent, self.unary())
        if self.accept("<"):
            coalition = self.agentset()
            self.expect(">")
            return self.coalition_body(coalition)
        if self.at("["):
            spec = self.update_spec()
            return Update(spec, self.unary())
        return self.atom()

    def coalition_body(self, coalition: frozenset) -> Formula:
        t = self.tok
        if t.kind == "kw" and t.value in ("X", "F", "G"):
            self.i += 1
            sub = self.unary()
            if t.value == "X":
                return CoalitionNext(coalition, sub)
            if t.value == "F":
                return CoalitionUntil(coalition, TRUE, sub)
            return CoalitionRelease(coalition, FALSE, sub)
        left = self.formula()
        t = self.tok
        if t.kind == "kw" and t.value in ("U", "R"):
            self.i += 1
            right = self.formula()
            cls = CoalitionUntil if t.value == "U" else CoalitionRelease
            return cls(coalition, left, right)
        self.error("expected 'X', 'F', 'G' or a formula followed by 'U' or 'R'")

    def update_spec(self) -> UpdateSpec:
        self.expect("[")
        items = []
        if not self.at("]"):
            items.append(self.update_item())
            while self.accept(","):
                items.append(self.update_item())
        self.expect("]")
        t = self.tok
        if self.accept("+"):
            sign = "+"
        elif self.accept("-"):
            sign = "-"
        else:
            self.error("expected update sign '+' or '-'", t)
        return UpdateSpec(sign, tuple(items))

    def update_item(self) -> UpdateItem:
        pre = self.formula()
        self.expect(":")
        action = self.ident("action name")
        self.expect("->")
        targets = self.agentset()
        informed = frozenset()
        if self.accept("|"):
            informed = self.agentset()
        return UpdateItem(pre, action, targets, informed)

    def agentset(self) -> frozenset:
        self.expect("{")
        names = []
        if not self.at("}"):
            names.append(self.ident("agent name"))
            while self.accept(","):
                names.append(self.ident("agent name"))
        self.expect("}")
        return frozenset(names)

    def atom(self) -> Formula:
        t = self.tok
        if t.kind == "kw":
            if t.value == "true":
                self.i += 1
                return TRUE
            if t.value == "false":
                self.i += 1
                return FALSE
            if t.value == "has":
                self.i += 1
                self.expect("(")
                agent = self.ident("agent name")
                self.expect(",")
                action = self.ident("action name")
                self.expect(")")
                return Has(agent, action)
            self.error(f"keyword {t.value!r} cannot start a formula")
        if t.kind == "ident":
            self.i += 1
            return Prop(t.value)
        if self.accept("("):
            f = self.formula()
            self.expect(")")
            return f
        found = t.value or "end of input"
        self.error(f"unexpected {found!r}")


def parse_formula(text: str) -> Formula:
    """Parse formula text into an AST. Raises FormulaSyntaxError."""
    p = _Parser(text)
    f = p.formula()
    p.done()
    return f


def parse_update(text: str) -> UpdateSpec:
    """Parse a standalone update modality such as ``[p : a -> {x}]+``."""
    p = _Parser(text)
    spec = p.update_spec()
    p.done()
    return spec


# ---------------------------------------------------------------------------
# Printer

_IMPLIES, _OR, _AND, _UNARY, _ATOM = range(5)


def _agentset(agents: frozenset) -> str:
    return "{" + ",".join(sorted(agents)) + "}"


def render_update(spec: UpdateSpec) -> str:
    items = []
    for it in spec.items:
        s = f"{_render(it.precondition, _IMPLIES)} : {it.action} -> {_agentset(it.targets)}"
        if it.informed:
            s += f" | {_agentset(it.informed)}"
        items.append(s)
    return "[" + ", ".join(items) + "]" + spec.sign


def _render(f: Formula, ctx: int, top: bool = False) -> str:
    if isinstance(f, Prop):
        return f.name
    if isinstance(f, Const):
        return "true" if f.value else "false"
    if isinstance(f, Has):
        return f"has({f.agent},{f.action})"
    if isinstance(f, Not):
        s, level = "!" + _render(f.sub, _UNARY), _UNARY
    elif isinstance(f, Knows):
        s, level = f"K{{{f.agent}}} " + _render(f.sub, _UNARY), _UNARY
    elif isinstance(f, CoalitionNext):
        s, level = f"<{_agentset(f.coalition)}> X " + _render(f.sub, _UNARY), _UNARY
    elif isinstance(f, CoalitionUntil) and f.left == TRUE:
        s, level = f"<{_agentset(f.coalition)}> F " + _render(f.right, _UNARY), _UNARY
    elif isinstance(f, CoalitionRelease) and f.left == FALSE:
        s, level = f"<{_agentset(f.coalition)}> G " + _render(f.right, _UNARY), _UNARY
    elif isinstance(f, (CoalitionUntil, CoalitionRelease)):
        op = "U" if isinstance(f, CoalitionUntil) else "R"
        s = f"<{_agentset(f.coalition)}> {_render(f.left, _IMPLIES)} {op} {_render(f.right, _IMPLIES)}"
        # the binary modality extends to the right, so it is bracketed
        # everywhere except at the top level
        return s if top else f"({s})"
    elif isinstance(f, Update):
        s, level = render_update(f.spec) + " " + _render(f.body, _UNARY), _UNARY
    elif isinstance(f, Implies):
        s, level = f"{_render(f.left, _OR)} -> {_render(f.right, _IMPLIES)}", _IMPLIES
    elif isinstance(f, Or):
        s, level = f"{_render(f.left, _OR)} | {_render(f.right, _AND)}", _OR
    elif isinstance(f, And):
        s, level = f"{_render(f.left, _AND)} & {_render(f.right, _UNARY)}", _AND
    else:
        raise TypeError(f"not a formula: {f!r}")
    return f"({s})" if level < ctx else s


def render_formula(f: Formula) -> str:
    """Print a formula in the concrete syntax accepted by parse_formula."""
    return _render(f, _IMPLIES, top=True)


# ---------------------------------------------------------------------------
# Structural helpers


def children(f: Formula) -> tuple:
    if isinstance(f, (Not, Knows, CoalitionNext)):
        return (f.sub,)
    if isinstance(f, (Or, And, Implies, CoalitionUntil, CoalitionRelease)):
        return (f.left, f.right)
    if isinstance(f, Update):
        return tuple(it.precondition for it in f.spec.items) + (f.body,)
    return ()


def subformulas(f: Formula) -> Iterator[Formula]:
    """All subformulas (including update preconditions), children first."""
    for c in children(f):
        yield from subformulas(c)
    yield f


def is_epistemic(f: Formula) -> bool:
    """True if the formula uses K or an update with a non-empty informed set."""
    for g in subformulas(f):
        if isinstance(g, Knows):
            return True
        if isinstance(g, Update) and any(it.informed for it in g.spec.items):
            return True
    return False


def formula_size(f: Formula) -> int:
    """Number of symbols: one per node plus one per agent, action or update component."""
    if isinstance(f, (Prop, Const)):
        return 1
    if isinstance(f, Has):
        return 3
    if isinstance(f, Not):
        return 1 + formula_size(f.sub)
    if isinstance(f, Knows):
        return 2 + formula_size(f.sub)
    if isinstance(f, (Or, And, Implies)):
        return 1 + formula_size(f.left) + formula_size(f.right)
    if isinstance(f, CoalitionNext):
        return 1 + len(f.coalition) + formula_size(f.sub)
    if isinstance(f, (CoalitionUntil, CoalitionRelease)):
        return 1 + len(f.coalition) + formula_size(f.left) + formula_size(f.right)
    if isinstance(f, Update):
        n = 1 + formula_size(f.body)
        for it in f.spec.items:
            n += formula_size(it.precondition) + 1 + len(it.targets) + len(it.informed)
        return n
    raise TypeError(f"not a formula: {f!r}")


@dataclass(frozen=True)
class LabelledSubformula:
    """A subformula or an update modality, tagged with the updates in scope."""

    item: Union[Formula, UpdateSpec]
    prefix: tuple = ()

    def __str__(self) -> str:
        body = render_update(self.item) if isinstance(self.item, UpdateSpec) else render_formula(self.item)
        if not self.prefix:
            return body
        return f"({body})^" + ",".join(render_update(s) for s in self.prefix)


def subformula_order(f: Formula) -> list[LabelledSubformula]:
    """Ordered list of labelled subformulas and update modalities.

    Preconditions of an update come first, then the modality itself, then
    everything in its scope (labelled with the extended prefix), then the
    update formula. Duplicate entries are kept at their first occurrence.
    """
    out: list[LabelledSubformula] = []
    seen: set = set()

    def emit(entry: LabelledSubformula):
        if entry not in seen:
            seen.add(entry)
            out.append(entry)

    def walk(g: Formula, prefix: tuple):
        if isinstance(g, Update):
            for it in g.spec.items:
                walk(it.precondition, prefix)
            emit(LabelledSubformula(g.spec, prefix))
            walk(g.body, prefix + (g.spec,))
        else:
            for c in children(g):
                walk(c, prefix)
        emit(LabelledSubformula(g, prefix))

    walk(f, ())
    return out
