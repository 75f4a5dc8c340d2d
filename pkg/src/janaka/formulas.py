"""LTL abstract syntax, concrete syntax, and qualitative finite-trace satisfaction.

Grammar (whitespace insignificant)::

    formula := implies
    implies := or ("->" implies)?
    or      := and ("|" and)*
    and     := until ("&" until)*
    until   := unary ("U" until)?
    unary   := ("!"|"G"|"F"|"X") unary | atom | "(" formula ")"
    atom    := [a-z][a-z0-9_]*

Precedence: unary > U > & > | > ->, with U and -> right-associative.

The reserved atom ``true`` is satisfied by every state and never needs to be
declared in a :class:`PropositionSet`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from .errors import (
    DepthExceededError,
    EmptyInputError,
    FormulaSyntaxError,
    UnknownAtomError,
    UnsupportedNegationError,
)

TRUE_ATOM = "true"

# Operator label tokens, shared with the template / repair machinery.
AND, OR, IMPLIES, UNTIL = "&", "|", "->", "U"
GLOBALLY, FINALLY, NEXT = "G", "F", "X"
BINARY_OPS = (AND, OR, IMPLIES, UNTIL)
UNARY_OPS = (GLOBALLY, FINALLY, NEXT)
OPERATORS = BINARY_OPS + UNARY_OPS

_ATOM_RE = re.compile(r"[a-z][a-z0-9_]*")


@dataclass(frozen=True)
class PropositionSet:
    """Ordered set of distinct atom names; the ordering is used for
    deterministic enumeration and serialization."""

    names: tuple[str, ...]

    def __init__(self, names: Iterable[str]):
        names = tuple(names)
        if not names:
            raise ValueError("proposition set must be non-empty")
        seen = set()
        for n in names:
            if not _ATOM_RE.fullmatch(n):
                raise ValueError(f"invalid atom name {n!r}")
            if n == TRUE_ATOM:
                raise ValueError(f"{TRUE_ATOM!r} is reserved and cannot be declared")
            if n in seen:
                raise ValueError(f"duplicate atom name {n!r}")
            seen.add(n)
        object.__setattr__(self, "names", names)

    def __contains__(self, name: str) -> bool:
        return name in self.names

    def __iter__(self) -> Iterator[str]:
        return iter(self.names)

    def __len__(self) -> int:
        return len(self.names)


class _Node:
    """Mixin giving every formula node the canonical text as str()."""

    __slots__ = ()

    def __str__(self) -> str:
        return format_formula(self)


@dataclass(frozen=True)
class Atom(_Node):
    name: str


@dataclass(frozen=True)
class Not(_Node):
    child: "Formula"


@dataclass(frozen=True)
class And(_Node):
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or(_Node):
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Implies(_Node):
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Next(_Node):
    child: "Formula"


@dataclass(frozen=True)
class Finally(_Node):
    child: "Formula"


@dataclass(frozen=True)
class Globally(_Node):
    child: "Formula"


@dataclass(frozen=True)
class Until(_Node):
    left: "Formula"
    right: "Formula"


Formula = Atom | Not | And | Or | Implies | Next | Finally | Globally | Until

_BINARY_TYPES = {And: AND, Or: OR, Implies: IMPLIES, Until: UNTIL}
_UNARY_TYPES = {Globally: GLOBALLY, Finally: FINALLY, Next: NEXT}
_BINARY_BY_OP = {op: typ for typ, op in _BINARY_TYPES.items()}
_UNARY_BY_OP = {op: typ for typ, op in _UNARY_TYPES.items()}


def children(f: Formula) -> tuple[Formula, ...]:
    if isinstance(f, Atom):
        return ()
    if isinstance(f, (Not, Next, Finally, Globally)):
        return (f.child,)
    return (f.left, f.right)


def is_literal(f: Formula) -> bool:
    """Atoms and negated atoms; these occupy a single slot in the tree encoding."""
    return isinstance(f, Atom) or (isinstance(f, Not) and isinstance(f.child, Atom))


def is_nnf(f: Formula) -> bool:
    """True when every negation applies directly to an atom."""
    if isinstance(f, Not):
        return isinstance(f.child, Atom)
    return all(is_nnf(c) for c in children(f))


def formula_depth(f: Formula) -> int:
    """Tree height with literals (including negated atoms) counting as one level."""
    if is_literal(f):
        return 1
    return 1 + max(formula_depth(c) for c in children(f))


def node_count(f: Formula) -> int:
    """Number of slots the formula occupies in the tree encoding (literal = 1)."""
    if is_literal(f):
        return 1
    return 1 + sum(node_count(c) for c in children(f))


def atoms_of(f: Formula) -> set[str]:
    if isinstance(f, Atom):
        return {f.name}
    out: set[str] = set()
    for c in children(f):
        out |= atoms_of(c)
    return out


def format_formula(f: Formula) -> str:
    """Fully parenthesized canonical text; round-trips through parse_formula."""
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, Not):
        return "!" + format_formula(f.child)
    if type(f) in _UNARY_TYPES:
        return f"{_UNARY_TYPES[type(f)]}({format_formula(f.child)})"
    op = _BINARY_TYPES[type(f)]
    return f"({format_formula(f.left)} {op} {format_formula(f.right)})"


# --- tokenizer / parser -----------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<arrow>->)
  | (?P<op>[&|!()])
  | (?P<modal>[GFXU])
  | (?P<atom>[a-z][a-z0-9_]*)
    """,
    re.VERBOSE,
)


def tokenize(text: str) -> list[tuple[str, str, int]]:
    """Split formula text into (kind, text, position) tokens.

    Kinds: 'arrow', 'op' (one of ``& | ! ( )``), 'modal' (G F X U), 'atom'.
    Raises FormulaSyntaxError on any character outside the grammar.
    """
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", pos)
        if m.lastgroup != "ws":
            tokens.append((m.lastgroup, m.group(), pos))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, tokens: list[tuple[str, str, int]], props: PropositionSet | None, length: int):
        self.tokens = tokens
        self.props = props
        self.i = 0
        self.length = length

    def peek(self) -> tuple[str, str, int] | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def next_pos(self) -> int:
        return self.tokens[self.i][2] if self.i < len(self.tokens) else self.length

    def take(self) -> tuple[str, str, int]:
        tok = self.peek()
        if tok is None:
            raise FormulaSyntaxError("unexpected end of input", self.length)
        self.i += 1
        return tok

    def expect(self, text: str) -> None:
        tok = self.take()
        if tok[1] != text:
            raise FormulaSyntaxError(f"expected {text!r}, found {tok[1]!r}", tok[2])

    def parse_formula(self) -> Formula:
        left = self.parse_or()
        tok = self.peek()
        if tok and tok[1] == IMPLIES:
            self.take()
            return Implies(left, self.parse_formula())
        return left

    def parse_or(self) -> Formula:
        node = self.parse_and()
        while (tok := self.peek()) and tok[1] == OR:
            self.take()
            node = Or(node, self.parse_and())
        return node

    def parse_and(self) -> Formula:
        node = self.parse_until()
        while (tok := self.peek()) and tok[1] == AND:
            self.take()
            node = And(node, self.parse_until())
        return node

    def parse_until(self) -> Formula:
        left = self.parse_unary()
        tok = self.peek()
        if tok and tok[1] == UNTIL:
            self.take()
            return Until(left, self.parse_until())
        return left

    def parse_unary(self) -> Formula:
        tok = self.take()
        kind, text, pos = tok
        if text == "!":
            return Not(self.parse_unary())
        if text == GLOBALLY:
            return Globally(self.parse_unary())
        if text == FINALLY:
            return Finally(self.parse_unary())
        if text == NEXT:
            return Next(self.parse_unary())
        if text == "(":
            inner = self.parse_formula()
            self.expect(")")
            return inner
        if kind == "atom":
            if text != TRUE_ATOM and self.props is not None and text not in self.props:
                raise UnknownAtomError(text, list(self.props))
            return Atom(text)
        raise FormulaSyntaxError(f"unexpected token {text!r}", pos)


def parse_formula(text: str, props: PropositionSet | None = None) -> Formula:
    """Parse formula text; atoms are checked against `props` when given."""
    if not text or not text.strip():
        raise EmptyInputError("empty formula text")
    parser = _Parser(tokenize(text), props, len(text))
    f = parser.parse_formula()
    tok = parser.peek()
    if tok is not None:
        raise FormulaSyntaxError(f"trailing input {tok[1]!r}", tok[2])
    return f


# --- negation normal form ---------------------------------------------------

def to_nnf(f: Formula) -> Formula:
    """Push negations down to atoms.

    !(a U b) has no dual in this grammar (no Release operator) and raises
    UnsupportedNegationError. Note !X f -> X !f keeps qualitative equivalence
    only away from the trace end; synthesized formulas never produce the
    asymmetric case because the label alphabet carries literal negation only.
    """
    if isinstance(f, Atom):
        return f
    if isinstance(f, Not):
        g = f.child
        if isinstance(g, Atom):
            return f
        if isinstance(g, Not):
            return to_nnf(g.child)
        if isinstance(g, And):
            return Or(to_nnf(Not(g.left)), to_nnf(Not(g.right)))
        if isinstance(g, Or):
            return And(to_nnf(Not(g.left)), to_nnf(Not(g.right)))
        if isinstance(g, Implies):
            return And(to_nnf(g.left), to_nnf(Not(g.right)))
        if isinstance(g, Globally):
            return Finally(to_nnf(Not(g.child)))
        if isinstance(g, Finally):
            return Globally(to_nnf(Not(g.child)))
        if isinstance(g, Next):
            return Next(to_nnf(Not(g.child)))
        raise UnsupportedNegationError(
            f"cannot negate {format_formula(g)}: the grammar has no Release operator"
        )
    if type(f) in _UNARY_TYPES:
        return type(f)(to_nnf(f.child))
    return type(f)(to_nnf(f.left), to_nnf(f.right))


# --- qualitative finite-trace satisfaction ----------------------------------

def _states_of(w) -> tuple[frozenset, ...]:
    states = getattr(w, "states", w)
    return tuple(frozenset(s) for s in states)


def satisfaction_vector(f: Formula, states: Sequence[frozenset]) -> list[bool]:
    """v[i] == (suffix of the word starting at i satisfies f).

    X is strong next (false at the last position); U needs a witness inside
    the word.
    """
    n = len(states)
    if isinstance(f, Atom):
        if f.name == TRUE_ATOM:
            return [True] * n
        return [f.name in s for s in states]
    if isinstance(f, Not):
        return [not v for v in satisfaction_vector(f.child, states)]
    if isinstance(f, And):
        lv = satisfaction_vector(f.left, states)
        rv = satisfaction_vector(f.right, states)
        return [a and b for a, b in zip(lv, rv)]
    if isinstance(f, Or):
        lv = satisfaction_vector(f.left, states)
        rv = satisfaction_vector(f.right, states)
        return [a or b for a, b in zip(lv, rv)]
    if isinstance(f, Implies):
        lv = satisfaction_vector(f.left, states)
        rv = satisfaction_vector(f.right, states)
        return [(not a) or b for a, b in zip(lv, rv)]
    if isinstance(f, Next):
        cv = satisfaction_vector(f.child, states)
        return [cv[i + 1] if i + 1 < n else False for i in range(n)]
    if isinstance(f, Finally):
        cv = satisfaction_vector(f.child, states)
        out = [False] * n
        acc = False
        for i in range(n - 1, -1, -1):
            acc = acc or cv[i]
            out[i] = acc
        return out
    if isinstance(f, Globally):
        cv = satisfaction_vector(f.child, states)
        out = [False] * n
        acc = True
        for i in range(n - 1, -1, -1):
            acc = acc and cv[i]
            out[i] = acc
        return out
    if isinstance(f, Until):
        lv = satisfaction_vector(f.left, states)
        rv = satisfaction_vector(f.right, states)
        out = [False] * n
        acc = False
        for i in range(n - 1, -1, -1):
            acc = rv[i] or (lv[i] and acc)
            out[i] = acc
        return out
    raise TypeError(f"not a formula: {f!r}")


def eval_qualitative(f: Formula, w) -> bool:
    """w |= f at position 0, under the finite-domain reading."""
    states = _states_of(w)
    if not states:
        raise ValueError("cannot evaluate on an empty trace")
    return satisfaction_vector(f, states)[0]


# --- indexed complete-binary-tree encoding ----------------------------------

UNUSED = None  # slot marker in IndexedTree.slots


@dataclass(frozen=True)
class IndexedTree:
    """Complete-binary-tree encoding of a formula.

    Slots are indexed 1..2^depth-1 (root 1, children of i at 2i and 2i+1);
    each entry is a label string (an operator from OPERATORS, or a literal
    like ``p`` / ``!p``) or UNUSED. The only child of a unary operator sits
    in the left slot.
    """

    depth: int
    slots: tuple

    def label(self, i: int):
        return self.slots[i - 1] if 1 <= i <= len(self.slots) else UNUSED

    def validate(self) -> None:
        """Check the structural invariants; raises ValueError on violation."""
        if self.depth < 1 or len(self.slots) != 2 ** self.depth - 1:
            raise ValueError("slot array does not match depth bound")
        if self.label(1) is UNUSED:
            raise ValueError("root slot must be labeled")
        for i in range(1, len(self.slots) + 1):
            lbl = self.label(i)
            left, right = self.label(2 * i), self.label(2 * i + 1)
            if lbl is UNUSED:
                if left is not UNUSED or right is not UNUSED:
                    raise ValueError(f"unused slot {i} has labeled children")
            elif lbl in BINARY_OPS:
                if left is UNUSED or right is UNUSED:
                    raise ValueError(f"binary slot {i} is missing a child")
            elif lbl in UNARY_OPS:
                if left is UNUSED or right is not UNUSED:
                    raise ValueError(f"unary slot {i} must have exactly a left child")
            else:
                if left is not UNUSED or right is not UNUSED:
                    raise ValueError(f"literal slot {i} has children")


def literal_label(f: Formula) -> str:
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, Not) and isinstance(f.child, Atom):
        return "!" + f.child.name
    raise ValueError(f"not a literal: {format_formula(f)}")


def tree_index(f: Formula, depth: int) -> IndexedTree:
    """Embed f into an IndexedTree of the given depth bound."""
    if formula_depth(f) > depth:
        raise DepthExceededError(
            f"formula depth {formula_depth(f)} exceeds bound {depth}"
        )
    slots = [UNUSED] * (2 ** depth - 1)

    def place(g: Formula, i: int) -> None:
        if is_literal(g):
            slots[i - 1] = literal_label(g)
            return
        if isinstance(g, Not):
            raise UnsupportedNegationError(
                "only literal negation fits the tree encoding; normalize first"
            )
        if type(g) in _UNARY_TYPES:
            slots[i - 1] = _UNARY_TYPES[type(g)]
            place(g.child, 2 * i)
            return
        slots[i - 1] = _BINARY_TYPES[type(g)]
        place(g.left, 2 * i)
        place(g.right, 2 * i + 1)

    place(f, 1)
    return IndexedTree(depth, tuple(slots))


def decode_label(label: str) -> Formula:
    """Literal label text ('p' or '!p') to its formula."""
    if label.startswith("!"):
        return Not(Atom(label[1:]))
    return Atom(label)


def tree_decode(tree: IndexedTree, i: int = 1) -> Formula:
    """Inverse of tree_index on its image."""
    lbl = tree.label(i)
    if lbl is UNUSED:
        raise ValueError(f"slot {i} is unused")
    if lbl in _BINARY_BY_OP:
        return _BINARY_BY_OP[lbl](tree_decode(tree, 2 * i), tree_decode(tree, 2 * i + 1))
    if lbl in _UNARY_BY_OP:
        return _UNARY_BY_OP[lbl](tree_decode(tree, 2 * i))
    return decode_label(lbl)
