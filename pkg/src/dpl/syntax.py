"""Action terms, formulas, the surface-text parser, and structural metrics.

Surface grammar (whitespace-insensitive, UTF-8):

    action  := name | action "&" action | action "+" action | "!" action
             | "0" | "U" | "(" action ")"
    formula := name | "~" formula | formula "->" formula | formula "&&" formula
             | formula "||" formula | formula "<->" formula
             | "[" action "]" formula | "<" action ">" formula
             | "P(" action ")" | "Pw(" action ")"
             | action "=" action | action "!=" action
             | "true" | "false" | "(" formula ")"

Precedence: "!" > "&" > "+" for actions; "~" (and the modalities) > "&&" >
"||" > "->" (right-assoc) > "<->" (right-assoc) for formulas.  "&" is meet
(parallel execution), "+" is join (choice), "!" is complement, "0" the
impossible action and "U" the universal action.  Identifiers are
[A-Za-z_][A-Za-z0-9_]*; a name declared as an action parses as an action,
anything else as a proposition.  Leading underscores are reserved for
machine-generated fresh actions.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property

MAX_ACTIONS = 24

RESERVED_WORDS = frozenset({"U", "P", "Pw", "true", "false"})

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


class DplError(Exception):
    """Base class for errors raised by this package."""


class ParseError(DplError):
    """Surface-syntax error, with the offset at which it was detected."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at offset {position})")
        self.message = message
        self.position = position


class ResourceLimitError(DplError):
    """A configured size limit (vocabulary width, fresh-action cap) was exceeded."""


@dataclass(frozen=True)
class Vocabulary:
    """A finite, lexicographically ordered action alphabet plus proposition names.

    ``propositions`` may be None, meaning the proposition namespace is open:
    any identifier that is not a declared action is accepted as a proposition.
    Action order is normalized so atom enumeration is reproducible.
    """

    actions: tuple[str, ...]
    propositions: frozenset[str] | None = None

    def __post_init__(self):
        acts = tuple(sorted(self.actions))
        if not acts:
            raise ValueError("a vocabulary needs at least one action")
        if len(set(acts)) != len(acts):
            raise ValueError(f"duplicate action names: {acts}")
        for name in acts:
            _check_action_name(name)
        if len(acts) > MAX_ACTIONS:
            raise ResourceLimitError(
                f"{len(acts)} actions exceed the supported width of {MAX_ACTIONS}"
            )
        object.__setattr__(self, "actions", acts)
        if self.propositions is not None:
            object.__setattr__(self, "propositions", frozenset(self.propositions))

    @cached_property
    def _bits(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.actions)}

    @property
    def width(self) -> int:
        return len(self.actions)

    @property
    def atom_count(self) -> int:
        return (1 << self.width) - 1

    def bit(self, name: str) -> int:
        try:
            return self._bits[name]
        except KeyError:
            raise ValueError(f"undeclared action name: {name!r}") from None

    def iter_atoms(self):
        """All atoms of the term algebra, ascending bit-pattern order."""
        return range(1, (1 << self.width))


def _check_action_name(name: str, allow_fresh: bool = True) -> None:
    if not _IDENT_RE.fullmatch(name):
        raise ValueError(f"invalid action name: {name!r}")
    if name in RESERVED_WORDS:
        raise ValueError(f"{name!r} is a reserved word and cannot name an action")
    if name.startswith("_") and not allow_fresh:
        raise ValueError(f"{name!r}: leading underscores are reserved")


# ---------------------------------------------------------------------------
# ASTs


class ActionTerm:
    """Base class for action-term nodes."""

    def __str__(self):
        return term_str(self)


@dataclass(frozen=True)
class Prim(ActionTerm):
    name: str


@dataclass(frozen=True)
class Meet(ActionTerm):
    left: ActionTerm
    right: ActionTerm


@dataclass(frozen=True)
class Join(ActionTerm):
    left: ActionTerm
    right: ActionTerm


@dataclass(frozen=True)
class Compl(ActionTerm):
    term: ActionTerm


@dataclass(frozen=True)
class Empty(ActionTerm):
    pass


@dataclass(frozen=True)
class Univ(ActionTerm):
    pass


EMPTY = Empty()
UNIV = Univ()


class Formula:
    """Base class for formula nodes."""

    def __str__(self):
        return pretty_print(self)


@dataclass(frozen=True)
class Prop(Formula):
    name: str


@dataclass(frozen=True)
class Not(Formula):
    sub: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Iff(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Box(Formula):
    action: ActionTerm
    sub: Formula


@dataclass(frozen=True)
class Diamond(Formula):
    action: ActionTerm
    sub: Formula


@dataclass(frozen=True)
class PermS(Formula):
    """Strong permission: every event of the action is permitted here."""

    action: ActionTerm


@dataclass(frozen=True)
class PermW(Formula):
    """Weak permission: some event of the action is permitted here."""

    action: ActionTerm


@dataclass(frozen=True)
class Eq(Formula):
    left: ActionTerm
    right: ActionTerm


@dataclass(frozen=True)
class Neq(Formula):
    left: ActionTerm
    right: ActionTerm


@dataclass(frozen=True)
class Truth(Formula):
    pass


@dataclass(frozen=True)
class Falsity(Formula):
    pass


TRUE = Truth()
FALSE = Falsity()

# A formula where negation is only applied to Prop, PermS or PermW nodes.
NNFFormula = Formula


# ---------------------------------------------------------------------------
# Tokenizer / parser

_FIXED_TOKENS = (
    ("<->", "IFF"),
    ("->", "ARROW"),
    ("&&", "AND2"),
    ("||", "OR2"),
    ("!=", "NEQ"),
    ("(", "LPAREN"),
    (")", "RPAREN"),
    ("[", "LBRACK"),
    ("]", "RBRACK"),
    ("<", "LT"),
    (">", "GT"),
    ("~", "TILDE"),
    ("&", "AMP"),
    ("+", "PLUS"),
    ("!", "BANG"),
    ("=", "EQL"),
    ("0", "ZERO"),
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        ch = text[pos]
        if ch.isspace():
            pos += 1
            continue
        m = _IDENT_RE.match(text, pos)
        if m:
            tokens.append(("IDENT", m.group(), pos))
            pos = m.end()
            continue
        for lit, kind in _FIXED_TOKENS:
            if text.startswith(lit, pos):
                tokens.append((kind, lit, pos))
                pos += len(lit)
                break
        else:
            raise ParseError(f"unexpected character {ch!r}", pos)
    tokens.append(("EOF", "", n))
    return tokens


class _Parser:
    def __init__(self, text: str, vocab: Vocabulary | None):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.vocab = vocab
        self.modal_depth = 0

    # token helpers

    def peek(self, offset: int = 0):
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def next(self):
        tok = self.tokens[self.pos]
        if tok[0] != "EOF":
            self.pos += 1
        return tok

    def expect(self, kind: str, what: str):
        tok = self.next()
        if tok[0] != kind:
            raise ParseError(f"expected {what}, found {tok[1] or 'end of input'!r}", tok[2])
        return tok

    # action terms

    def action_expr(self) -> ActionTerm:
        left = self.action_meet()
        while self.peek()[0] == "PLUS":
            self.next()
            left = Join(left, self.action_meet())
        return left

    def action_meet(self) -> ActionTerm:
        left = self.action_compl()
        while self.peek()[0] == "AMP":
            self.next()
            left = Meet(left, self.action_compl())
        return left

    def action_compl(self) -> ActionTerm:
        if self.peek()[0] == "BANG":
            self.next()
            return Compl(self.action_compl())
        return self.action_atom()

    def action_atom(self) -> ActionTerm:
        kind, text, at = self.peek()
        if kind == "ZERO":
            self.next()
            return EMPTY
        if kind == "LPAREN":
            self.next()
            t = self.action_expr()
            self.expect("RPAREN", "')'")
            return t
        if kind == "IDENT":
            if text == "U":
                self.next()
                return UNIV
            if text in RESERVED_WORDS:
                raise ParseError(f"{text!r} cannot be used as an action name", at)
            if text.startswith("_"):
                raise ParseError("identifiers starting with '_' are reserved", at)
            if self.vocab is not None and text not in self.vocab._bits:
                raise ParseError(f"undeclared action name {text!r}", at)
            self.next()
            return Prim(text)
        raise ParseError(f"expected an action term, found {text or 'end of input'!r}", at)

    # formulas

    def formula_expr(self) -> Formula:
        left = self.formula_implies()
        if self.peek()[0] == "IFF":
            self.next()
            return Iff(left, self.formula_expr())
        return left

    def formula_implies(self) -> Formula:
        left = self.formula_or()
        if self.peek()[0] == "ARROW":
            self.next()
            return Implies(left, self.formula_implies())
        return left

    def formula_or(self) -> Formula:
        left = self.formula_and()
        while self.peek()[0] == "OR2":
            self.next()
            left = Or(left, self.formula_and())
        return left

    def formula_and(self) -> Formula:
        left = self.formula_unary()
        while self.peek()[0] == "AND2":
            self.next()
            left = And(left, self.formula_unary())
        return left

    def formula_unary(self) -> Formula:
        kind, _text, _at = self.peek()
        if kind == "TILDE":
            self.next()
            return Not(self.formula_unary())
        if kind == "LBRACK":
            self.next()
            action = self.action_expr()
            self.expect("RBRACK", "']'")
            self.modal_depth += 1
            try:
                sub = self.formula_unary()
            finally:
                self.modal_depth -= 1
            return Box(action, sub)
        if kind == "LT":
            self.next()
            action = self.action_expr()
            self.expect("GT", "'>'")
            self.modal_depth += 1
            try:
                sub = self.formula_unary()
            finally:
                self.modal_depth -= 1
            return Diamond(action, sub)
        return self.formula_atom()

    def formula_atom(self) -> Formula:
        kind, text, at = self.peek()
        if kind == "IDENT" and text == "true":
            self.next()
            return TRUE
        if kind == "IDENT" and text == "false":
            self.next()
            return FALSE
        if kind == "IDENT" and text in ("P", "Pw") and self.peek(1)[0] == "LPAREN":
            self.next()
            self.next()
            action = self.action_expr()
            self.expect("RPAREN", "')'")
            return PermS(action) if text == "P" else PermW(action)

        equation = self.try_equation()
        if equation is not None:
            return equation

        if kind == "IDENT":
            if text in RESERVED_WORDS:
                raise ParseError(f"{text!r} cannot be used here", at)
            if text.startswith("_"):
                raise ParseError("identifiers starting with '_' are reserved", at)
            if self.vocab is not None and text in self.vocab._bits:
                raise ParseError(
                    f"action {text!r} used where a formula is expected", at
                )
            if (
                self.vocab is not None
                and self.vocab.propositions is not None
                and text not in self.vocab.propositions
            ):
                raise ParseError(f"undeclared identifier {text!r}", at)
            self.next()
            return Prop(text)
        if kind == "LPAREN":
            self.next()
            f = self.formula_expr()
            self.expect("RPAREN", "')'")
            return f
        raise ParseError(f"expected a formula, found {text or 'end of input'!r}", at)

    def try_equation(self) -> Formula | None:
        """Attempt ``action (=|!=) action``; roll back on failure."""
        save = self.pos
        try:
            left = self.action_expr()
        except ParseError:
            self.pos = save
            return None
        kind, _text, at = self.peek()
        if kind not in ("EQL", "NEQ"):
            self.pos = save
            return None
        if self.modal_depth > 0:
            raise ParseError("equation inside the scope of a modality", at)
        self.next()
        right = self.action_expr()
        return Eq(left, right) if kind == "EQL" else Neq(left, right)


def parse_formula(text: str, vocab: Vocabulary | None) -> Formula:
    """Parse surface text into a Formula.

    With ``vocab=None`` the action namespace is open: any identifier used in
    an action position is accepted as a primitive action.
    """
    parser = _Parser(text, vocab)
    f = parser.formula_expr()
    kind, text_, at = parser.peek()
    if kind != "EOF":
        raise ParseError(f"unexpected trailing input {text_!r}", at)
    return f


def parse_term(text: str, vocab: Vocabulary | None) -> ActionTerm:
    parser = _Parser(text, vocab)
    t = parser.action_expr()
    kind, text_, at = parser.peek()
    if kind != "EOF":
        raise ParseError(f"unexpected trailing input {text_!r}", at)
    return t


# ---------------------------------------------------------------------------
# Printing

_TERM_JOIN, _TERM_MEET, _TERM_COMPL, _TERM_ATOM = 1, 2, 3, 4


def _term_str(t: ActionTerm, min_prec: int) -> str:
    match t:
        case Prim(name):
            return name
        case Empty():
            return "0"
        case Univ():
            return "U"
        case Compl(sub):
            return _wrap("!" + _term_str(sub, _TERM_COMPL), _TERM_COMPL, min_prec)
        case Meet(left, right):
            s = f"{_term_str(left, _TERM_MEET)} & {_term_str(right, _TERM_MEET + 1)}"
            return _wrap(s, _TERM_MEET, min_prec)
        case Join(left, right):
            s = f"{_term_str(left, _TERM_JOIN)} + {_term_str(right, _TERM_JOIN + 1)}"
            return _wrap(s, _TERM_JOIN, min_prec)
    raise TypeError(f"not an action term: {t!r}")


def _wrap(s: str, prec: int, min_prec: int) -> str:
    return s if prec >= min_prec else f"({s})"


def term_str(t: ActionTerm) -> str:
    return _term_str(t, 0)


_F_EQ, _F_IFF, _F_IMPLIES, _F_OR, _F_AND, _F_UNARY, _F_ATOM = 0, 1, 2, 3, 4, 5, 6


def _formula_str(f: Formula, min_prec: int) -> str:
    match f:
        case Prop(name):
            return name
        case Truth():
            return "true"
        case Falsity():
            return "false"
        case PermS(action):
            return f"P({term_str(action)})"
        case PermW(action):
            return f"Pw({term_str(action)})"
        case Eq(left, right):
            return _wrap(f"{term_str(left)} = {term_str(right)}", _F_EQ, min_prec)
        case Neq(left, right):
            return _wrap(f"{term_str(left)} != {term_str(right)}", _F_EQ, min_prec)
        case Not(sub):
            return _wrap("~" + _formula_str(sub, _F_UNARY), _F_UNARY, min_prec)
        case Box(action, sub):
            s = f"[{term_str(action)}]{_formula_str(sub, _F_UNARY)}"
            return _wrap(s, _F_UNARY, min_prec)
        case Diamond(action, sub):
            s = f"<{term_str(action)}>{_formula_str(sub, _F_UNARY)}"
            return _wrap(s, _F_UNARY, min_prec)
        case And(left, right):
            s = f"{_formula_str(left, _F_AND)} && {_formula_str(right, _F_AND + 1)}"
            return _wrap(s, _F_AND, min_prec)
        case Or(left, right):
            s = f"{_formula_str(left, _F_OR)} || {_formula_str(right, _F_OR + 1)}"
            return _wrap(s, _F_OR, min_prec)
        case Implies(left, right):
            s = f"{_formula_str(left, _F_IMPLIES + 1)} -> {_formula_str(right, _F_IMPLIES)}"
            return _wrap(s, _F_IMPLIES, min_prec)
        case Iff(left, right):
            s = f"{_formula_str(left, _F_IFF + 1)} <-> {_formula_str(right, _F_IFF)}"
            return _wrap(s, _F_IFF, min_prec)
    raise TypeError(f"not a formula: {f!r}")


def pretty_print(f: Formula) -> str:
    """Render a formula so that parsing the result reproduces it exactly."""
    return _formula_str(f, 0)


# ---------------------------------------------------------------------------
# Negation normal form

def nnf(f: Formula) -> NNFFormula:
    """Push negations down to propositions and permission predicates."""
    match f:
        case Prop() | Truth() | Falsity() | PermS() | PermW() | Eq() | Neq():
            return f
        case And(left, right):
            return And(nnf(left), nnf(right))
        case Or(left, right):
            return Or(nnf(left), nnf(right))
        case Implies(left, right):
            return Or(nnf(Not(left)), nnf(right))
        case Iff(left, right):
            return Or(
                And(nnf(left), nnf(right)),
                And(nnf(Not(left)), nnf(Not(right))),
            )
        case Box(action, sub):
            return Box(action, nnf(sub))
        case Diamond(action, sub):
            return Diamond(action, nnf(sub))
        case Not(sub):
            match sub:
                case Not(inner):
                    return nnf(inner)
                case Prop() | PermS() | PermW():
                    return f
                case Truth():
                    return FALSE
                case Falsity():
                    return TRUE
                case And(left, right):
                    return Or(nnf(Not(left)), nnf(Not(right)))
                case Or(left, right):
                    return And(nnf(Not(left)), nnf(Not(right)))
                case Implies(left, right):
                    return And(nnf(left), nnf(Not(right)))
                case Iff(left, right):
                    return Or(
                        And(nnf(left), nnf(Not(right))),
                        And(nnf(Not(left)), nnf(right)),
                    )
                case Box(action, inner):
                    return Diamond(action, nnf(Not(inner)))
                case Diamond(action, inner):
                    return Box(action, nnf(Not(inner)))
                case Eq(left, right):
                    return Neq(left, right)
                case Neq(left, right):
                    return Eq(left, right)
    raise TypeError(f"not a formula: {f!r}")


def is_nnf(f: Formula) -> bool:
    match f:
        case Not(sub):
            return isinstance(sub, (Prop, PermS, PermW))
        case And(left, right) | Or(left, right):
            return is_nnf(left) and is_nnf(right)
        case Box(_, sub) | Diamond(_, sub):
            return is_nnf(sub)
        case Implies() | Iff():
            return False
        case _:
            return True


# ---------------------------------------------------------------------------
# Structural metrics

def degree(f: Formula) -> int:
    """Maximal nesting depth of [.] / <.>; permission predicates add nothing."""
    match f:
        case Box(_, sub) | Diamond(_, sub):
            return 1 + degree(sub)
        case Not(sub):
            return degree(sub)
        case And(left, right) | Or(left, right) | Implies(left, right) | Iff(left, right):
            return max(degree(left), degree(right))
        case _:
            return 0


def term_actions(t: ActionTerm) -> frozenset[str]:
    match t:
        case Prim(name):
            return frozenset({name})
        case Meet(left, right) | Join(left, right):
            return term_actions(left) | term_actions(right)
        case Compl(sub):
            return term_actions(sub)
        case _:
            return frozenset()


def primitive_actions(f: Formula) -> frozenset[str]:
    """Every primitive action name occurring anywhere in the formula."""
    match f:
        case Box(action, sub) | Diamond(action, sub):
            return term_actions(action) | primitive_actions(sub)
        case PermS(action) | PermW(action):
            return term_actions(action)
        case Eq(left, right) | Neq(left, right):
            return term_actions(left) | term_actions(right)
        case Not(sub):
            return primitive_actions(sub)
        case And(left, right) | Or(left, right) | Implies(left, right) | Iff(left, right):
            return primitive_actions(left) | primitive_actions(right)
        case _:
            return frozenset()


def proposition_names(f: Formula) -> frozenset[str]:
    match f:
        case Prop(name):
            return frozenset({name})
        case Not(sub) | Box(_, sub) | Diamond(_, sub):
            return proposition_names(sub)
        case And(left, right) | Or(left, right) | Implies(left, right) | Iff(left, right):
            return proposition_names(left) | proposition_names(right)
        case _:
            return frozenset()


def formula_size(f: Formula) -> int:
    match f:
        case Not(sub) | Box(_, sub) | Diamond(_, sub):
            return 1 + formula_size(sub)
        case And(left, right) | Or(left, right) | Implies(left, right) | Iff(left, right):
            return 1 + formula_size(left) + formula_size(right)
        case _:
            return 1


def has_modal_equation(f: Formula) -> bool:
    """True when an (in)equation occurs inside the scope of a modality."""

    def walk(g: Formula, under_modality: bool) -> bool:
        match g:
            case Eq() | Neq():
                return under_modality
            case Not(sub):
                return walk(sub, under_modality)
            case And(left, right) | Or(left, right) | Implies(left, right) | Iff(left, right):
                return walk(left, under_modality) or walk(right, under_modality)
            case Box(_, sub) | Diamond(_, sub):
                return walk(sub, True)
            case _:
                return False

    return walk(f, False)


def flatten_and(f: Formula) -> list[Formula]:
    if isinstance(f, And):
        return flatten_and(f.left) + flatten_and(f.right)
    return [f]


def is_normal_form(f: Formula) -> bool:
    """Recognize the conjunction shape: literals, permission literals,
    possibilities and negated possibilities with normal-form bodies."""
    for conjunct in flatten_and(f):
        match conjunct:
            case Prop() | PermS() | PermW():
                pass
            case Not(Prop()) | Not(PermS()) | Not(PermW()):
                pass
            case Diamond(_, body) | Not(Diamond(_, body)):
                if not is_normal_form(body):
                    return False
            case _:
                return False
    return True


def subformulae_at_level(f: Formula, k: int) -> frozenset[Formula]:
    """The constraints a world reached in exactly k steps inherits from f.

    Level 0 is the conjunct set itself; deeper levels collect the bodies of
    possibility conjuncts and the simplified negations of the bodies of
    negated-possibility conjuncts.
    """
    if not is_normal_form(f):
        raise ValueError(f"not in normal-form shape: {pretty_print(f)}")
    if k < 0 or k > degree(f):
        raise ValueError(f"level {k} out of range for degree {degree(f)}")
    return _sf(f, k)


def _sf(f: Formula, k: int) -> frozenset[Formula]:
    conjuncts = flatten_and(f)
    if k == 0:
        return frozenset(conjuncts)
    out: set[Formula] = set()
    for conjunct in conjuncts:
        match conjunct:
            case Diamond(_, body):
                out |= _sf(body, k - 1)
            case Not(Diamond(_, body)):
                out |= {nnf(Not(member)) for member in _sf(body, k - 1)}
    return frozenset(out)


def existential_count_by_depth(f: Formula) -> dict[int, int]:
    """Occurrences of <.>-, Pw- and ~P-nodes of nnf(f), keyed by modal depth."""
    counts: dict[int, int] = {}

    def walk(g: Formula, depth: int) -> None:
        match g:
            case Diamond(_, sub):
                counts[depth] = counts.get(depth, 0) + 1
                walk(sub, depth + 1)
            case Box(_, sub):
                walk(sub, depth + 1)
            case PermW():
                counts[depth] = counts.get(depth, 0) + 1
            case Not(PermS()):
                counts[depth] = counts.get(depth, 0) + 1
            case Not(sub):
                walk(sub, depth)
            case And(left, right) | Or(left, right):
                walk(left, depth)
                walk(right, depth)
            case _:
                pass

    walk(nnf(f), 0)
    return counts


def existential_degree(f: Formula) -> int:
    """Maximum number of existential-kind nodes sharing one modal depth.

    Existential nodes are possibilities, weak permissions and negated strong
    permissions: the connectives whose truth demands a witness.  The count is
    taken on the syntax tree of nnf(f), without distributing disjunctions.
    """
    counts = existential_count_by_depth(f)
    return max(counts.values(), default=0)
