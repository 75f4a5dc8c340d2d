"""Template generation: formulas with bounded-depth holes.

A template is an indexed complete-binary-tree whose slots are Fixed(label),
Hole(allowed-labels), or absent (unused). A Hole may be filled by any label
its position's structural constraints admit, or left unused when the parent's
arity does not reach it; `allowed` restricts the label alphabet (None = any).

Hole-producing rules, applied to a visited node of the source tree:

* unary node:  its label becomes a hole and a fresh all-hole region of depth
  <= d is grafted as its right child (so the filling may turn it binary);
* binary node: its label becomes a hole (children stay);
* leaf:        the slot becomes the root of a fresh all-hole region of depth
  <= d (the filling may grow a subtree where the literal was).

Strategies: 'random' applies the rules with probability hole_prob per node in
breadth-first order; 'withgf' additionally pins G/F-labelled nodes
(never replaced); 'gtemp' first wraps the source under a root hole restricted
to {G, F}, then runs 'random' over the original nodes.

Text form: the formula grammar extended with ``?<k>`` (free region of depth
<= k), ``?(A)`` / ``(A ? B)`` (label holes over existing children), and an
optional allowed-set suffix as in ``?{G,F}(A)``. Infix label holes require
parentheses. A bare ``?`` is accepted as ``?<1>``.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from functools import cached_property

from .errors import DepthExceededError, FormulaSyntaxError
from .formulas import (
    BINARY_OPS,
    UNARY_OPS,
    Formula,
    formula_depth,
    is_literal,
    literal_label,
)

RANDOM = "random"
WITH_GF = "withgf"
GTEMP = "gtemp"
STRATEGIES = (RANDOM, WITH_GF, GTEMP)

# The complete-binary-tree representation is dense; keep it sane.
MAX_TREE_DEPTH = 12


@dataclass(frozen=True)
class Fixed:
    label: str


@dataclass(frozen=True)
class Hole:
    allowed: tuple[str, ...] | None = None


Slot = Fixed | Hole


def _level(index: int) -> int:
    return index.bit_length()


@dataclass(frozen=True)
class Template:
    """Sparse slot map over indices 1..2^depth-1; absent indices are unused."""

    depth: int
    slots: tuple[tuple[int, Slot], ...]
    source: Formula | None = field(default=None, compare=False)
    strategy: str | None = field(default=None, compare=False)
    seed: int | None = field(default=None, compare=False)

    def __post_init__(self):
        entries = tuple(sorted(self.slots))
        object.__setattr__(self, "slots", entries)
        indices = [i for i, _ in entries]
        if len(set(indices)) != len(indices):
            raise ValueError("duplicate slot index")
        if not entries or entries[0][0] != 1:
            raise ValueError("root slot must be present")
        if any(i < 1 for i in indices):
            raise ValueError("slot indices start at 1")
        if self.depth < 1 or self.depth > MAX_TREE_DEPTH:
            raise DepthExceededError(f"tree depth {self.depth} outside 1..{MAX_TREE_DEPTH}")
        if max(_level(i) for i in indices) > self.depth:
            raise ValueError("slot index outside the depth bound")
        m = dict(entries)
        for i, slot in entries:
            if not isinstance(slot, Fixed):
                continue
            left, right = m.get(2 * i), m.get(2 * i + 1)
            if slot.label in BINARY_OPS:
                if left is None or right is None:
                    raise ValueError(f"binary slot {i} is missing a child")
            elif slot.label in UNARY_OPS:
                if left is None:
                    raise ValueError(f"unary slot {i} is missing its left child")
                if isinstance(right, Fixed):
                    raise ValueError(f"unary slot {i} has a fixed right child")
            else:
                if isinstance(left, Fixed) or isinstance(right, Fixed):
                    raise ValueError(f"literal slot {i} has fixed children")

    @cached_property
    def slot_map(self) -> dict[int, Slot]:
        return dict(self.slots)

    @cached_property
    def hole_indices(self) -> tuple[int, ...]:
        return tuple(i for i, s in self.slots if isinstance(s, Hole))

    @property
    def has_holes(self) -> bool:
        return bool(self.hole_indices)


def _embed(f: Formula, index: int, slots: dict[int, Slot], nodes: list):
    """Place f's nodes as Fixed slots rooted at the given index."""
    from .formulas import _BINARY_TYPES, _UNARY_TYPES, Not  # label tables

    if is_literal(f):
        label = literal_label(f)
        slots[index] = Fixed(label)
        nodes.append((index, label, "leaf"))
        return
    if isinstance(f, Not):
        from .errors import UnsupportedNegationError

        raise UnsupportedNegationError(
            "templates carry literal negation only; normalize the source first"
        )
    if type(f) in _UNARY_TYPES:
        label = _UNARY_TYPES[type(f)]
        slots[index] = Fixed(label)
        nodes.append((index, label, "unary"))
        _embed(f.child, 2 * index, slots, nodes)
        return
    label = _BINARY_TYPES[type(f)]
    slots[index] = Fixed(label)
    nodes.append((index, label, "binary"))
    _embed(f.left, 2 * index, slots, nodes)
    _embed(f.right, 2 * index + 1, slots, nodes)


def _add_region(slots: dict[int, Slot], root: int, depth: int):
    """Graft a complete all-hole region of the given depth rooted at `root`."""
    frontier = [root]
    for _ in range(depth):
        nxt = []
        for i in frontier:
            slots[i] = Hole()
            nxt.extend((2 * i, 2 * i + 1))
        frontier = nxt


def _apply_rule(slots: dict[int, Slot], index: int, arity: str, d: int):
    if arity == "leaf":
        _add_region(slots, index, d)
    elif arity == "unary":
        slots[index] = Hole()
        _add_region(slots, 2 * index + 1, d)
    else:
        slots[index] = Hole()


def make_templates(
    f: Formula,
    d: int,
    strategy: str = RANDOM,
    hole_prob: float = 0.2,
    seed: int = 0,
    count: int = 1,
) -> list[Template]:
    """Generate `count` templates from f under the given strategy.

    Deterministic for a fixed argument tuple. Passes that produce no hole are
    retried with fresh randomness up to 20 times, then one hole is forced at
    a uniformly chosen eligible node.
    """
    if d < 1:
        raise ValueError("hole depth d must be >= 1")
    if not 0.0 < hole_prob <= 1.0:
        raise ValueError("hole_prob must be in (0, 1]")
    if count < 1:
        raise ValueError("count must be >= 1")
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")

    base = 2 if strategy == GTEMP else 1
    needed = (1 if strategy == GTEMP else 0) + formula_depth(f) + d
    if needed > MAX_TREE_DEPTH:
        raise DepthExceededError(
            f"formula depth {formula_depth(f)} with hole depth {d} exceeds the "
            f"tree bound {MAX_TREE_DEPTH}"
        )

    base_slots: dict[int, Slot] = {}
    nodes: list = []
    _embed(f, base, base_slots, nodes)
    if strategy == GTEMP:
        base_slots[1] = Hole(("G", "F"))
    nodes.sort(key=lambda n: n[0])  # heap order == breadth-first order
    eligible = [
        (i, lbl, ar)
        for i, lbl, ar in nodes
        if not (strategy == WITH_GF and lbl in ("G", "F"))
    ]

    rng = random.Random(seed)
    out = []
    for _ in range(count):
        trial: dict[int, Slot] = {}
        for _attempt in range(20):
            trial = dict(base_slots)
            for i, _lbl, ar in eligible:
                if rng.random() < hole_prob:
                    _apply_rule(trial, i, ar, d)
            if any(isinstance(s, Hole) for s in trial.values()):
                break
        else:
            trial = dict(base_slots)
            i, _lbl, ar = eligible[rng.randrange(len(eligible))]
            _apply_rule(trial, i, ar, d)
        depth = max(_level(i) for i in trial)
        out.append(
            Template(depth, tuple(trial.items()), source=f, strategy=strategy, seed=seed)
        )
    return out


# --- textual round-trip -------------------------------------------------------


def _region_depth(t: Template, root: int) -> int | None:
    """Depth k when the subtree at root is exactly a complete unrestricted
    hole region, else None."""
    m = t.slot_map
    subtree = [i for i in m if i == root or _is_descendant(i, root)]
    if any(not isinstance(m[i], Hole) or m[i].allowed is not None for i in subtree):
        return None
    k = 0
    frontier = [root]
    covered = 0
    while frontier and all(i in m for i in frontier):
        covered += len(frontier)
        k += 1
        frontier = [c for i in frontier for c in (2 * i, 2 * i + 1)]
    if covered != len(subtree) or any(i in m for i in frontier):
        return None
    return k


def _is_descendant(i: int, root: int) -> bool:
    while i > root:
        i //= 2
    return i == root


def format_template(t: Template) -> str:
    """Canonical text using the '?' / '?<k>' hole syntax."""

    def fmt(i: int) -> str:
        slot = t.slot_map[i]
        left, right = t.slot_map.get(2 * i), t.slot_map.get(2 * i + 1)
        if isinstance(slot, Fixed):
            if slot.label in BINARY_OPS:
                return f"({fmt(2 * i)} {slot.label} {fmt(2 * i + 1)})"
            if slot.label in UNARY_OPS:
                return f"{slot.label}({fmt(2 * i)})"
            return slot.label
        k = _region_depth(t, i)
        if k is not None:
            return f"?<{k}>"
        mark = "?" if slot.allowed is None else "?{" + ",".join(slot.allowed) + "}"
        if right is not None:
            return f"({fmt(2 * i)} {mark} {fmt(2 * i + 1)})"
        if left is not None:
            return f"{mark}({fmt(2 * i)})"
        return "?<1>"

    return fmt(1)


_T_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<region>\?<\d+>)
  | (?P<hole>\?)
  | (?P<arrow>->)
  | (?P<op>[&|!(){},])
  | (?P<modal>[GFXU])
  | (?P<atom>[a-z][a-z0-9_]*)
    """,
    re.VERBOSE,
)


class _TNode:
    """Parse-tree node for template text."""

    __slots__ = ("kind", "label", "allowed", "children", "region")

    def __init__(self, kind, label=None, allowed=None, children=(), region=0):
        self.kind = kind  # 'fixed' | 'hole' | 'region'
        self.label = label
        self.allowed = allowed
        self.children = list(children)
        self.region = region


class _TemplateParser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = []
        pos = 0
        while pos < len(text):
            m = _T_TOKEN_RE.match(text, pos)
            if not m:
                raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", pos)
            if m.lastgroup != "ws":
                self.tokens.append((m.lastgroup, m.group(), pos))
            pos = m.end()
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def take(self):
        tok = self.peek()
        if tok is None:
            raise FormulaSyntaxError("unexpected end of template", len(self.text))
        self.i += 1
        return tok

    def expect(self, text):
        tok = self.take()
        if tok[1] != text:
            raise FormulaSyntaxError(f"expected {text!r}, found {tok[1]!r}", tok[2])

    def parse(self) -> _TNode:
        node = self.parse_implies()
        if self.peek() is not None:
            raise FormulaSyntaxError(f"trailing input {self.peek()[1]!r}", self.peek()[2])
        return node

    def parse_implies(self):
        left = self.parse_or()
        if (tok := self.peek()) and tok[1] == "->":
            self.take()
            return _TNode("fixed", "->", children=(left, self.parse_implies()))
        return left

    def parse_or(self):
        node = self.parse_and()
        while (tok := self.peek()) and tok[1] == "|":
            self.take()
            node = _TNode("fixed", "|", children=(node, self.parse_and()))
        return node

    def parse_and(self):
        node = self.parse_until()
        while (tok := self.peek()) and tok[1] == "&":
            self.take()
            node = _TNode("fixed", "&", children=(node, self.parse_until()))
        return node

    def parse_until(self):
        left = self.parse_unary()
        if (tok := self.peek()) and tok[1] == "U":
            self.take()
            return _TNode("fixed", "U", children=(left, self.parse_until()))
        return left

    def parse_allowed(self) -> tuple[str, ...]:
        self.expect("{")
        labels = []
        while True:
            tok = self.take()
            if tok[0] not in ("modal", "arrow", "atom") and tok[1] not in ("&", "|", "!"):
                raise FormulaSyntaxError(f"bad label {tok[1]!r} in allowed set", tok[2])
            label = tok[1]
            if label == "!":
                atom = self.take()
                if atom[0] != "atom":
                    raise FormulaSyntaxError("'!' in allowed set needs an atom", atom[2])
                label = "!" + atom[1]
            labels.append(label)
            tok = self.take()
            if tok[1] == "}":
                return tuple(labels)
            if tok[1] != ",":
                raise FormulaSyntaxError(f"expected ',' or '}}', found {tok[1]!r}", tok[2])

    def parse_unary(self):
        tok = self.take()
        kind, text, pos = tok
        if text == "!":
            atom = self.take()
            if atom[0] != "atom":
                raise FormulaSyntaxError("template negation applies to atoms only", atom[2])
            return _TNode("fixed", "!" + atom[1])
        if kind == "modal" and text in UNARY_OPS:
            return _TNode("fixed", text, children=(self.parse_unary(),))
        if kind == "region":
            return _TNode("region", region=int(text[2:-1]))
        if kind == "hole":
            allowed = None
            if (nxt := self.peek()) and nxt[1] == "{":
                allowed = self.parse_allowed()
            if (nxt := self.peek()) and nxt[1] == "(":
                self.take()
                child = self.parse_implies()
                self.expect(")")
                return _TNode("hole", allowed=allowed, children=(child,))
            if allowed is not None:
                raise FormulaSyntaxError("restricted hole needs a child", pos)
            return _TNode("region", region=1)
        if text == "(":
            inner = self.parse_implies()
            nxt = self.peek()
            if nxt and nxt[0] == "hole":
                self.take()
                allowed = None
                if (after := self.peek()) and after[1] == "{":
                    allowed = self.parse_allowed()
                right = self.parse_implies()
                self.expect(")")
                return _TNode("hole", allowed=allowed, children=(inner, right))
            self.expect(")")
            return inner
        if kind == "atom":
            return _TNode("fixed", text)
        raise FormulaSyntaxError(f"unexpected token {text!r}", pos)


def parse_template(text: str) -> Template:
    """Parse template text back into a Template (provenance fields empty)."""
    if not text or not text.strip():
        raise FormulaSyntaxError("empty template text", 0)
    root = _TemplateParser(text).parse()
    slots: dict[int, Slot] = {}

    def place(node: _TNode, index: int):
        if _level(index) > MAX_TREE_DEPTH:
            raise DepthExceededError("template exceeds the tree bound")
        if node.kind == "region":
            if node.region < 1:
                raise FormulaSyntaxError("region depth must be >= 1", 0)
            _add_region(slots, index, node.region)
            return
        if node.kind == "hole":
            slots[index] = Hole(node.allowed)
            if len(node.children) >= 1:
                place(node.children[0], 2 * index)
            if len(node.children) == 2:
                place(node.children[1], 2 * index + 1)
            return
        slots[index] = Fixed(node.label)
        for child, ci in zip(node.children, (2 * index, 2 * index + 1)):
            place(child, ci)

    place(root, 1)
    depth = max(_level(i) for i in slots)
    return Template(depth, tuple(slots.items()))
