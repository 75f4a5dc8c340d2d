"""Filling template holes to maximize sample fitness.

The optimizer is a native branch-and-bound over hole labels: given a complete
filling, every node score is determined by the semantics recursion, so the
problem is purely discrete. Holes are assigned in slot-index order; a partial
assignment is pruned when an admissible upper bound on the mean fitness of
its completions falls strictly below the incumbent (strict, so equal-fitness
optima survive for the deterministic tie-break: fewer nodes, then canonical
text).

The bound propagates per-position value intervals through the template:
fixed or assigned labels combine child intervals through the monotone
envelope of their semantics cases; unresolved holes contribute the full value
range of any formula fitting their remaining depth ([0,1] discounted,
[-1, robust_upper_bound] robust).
"""

from __future__ import annotations

import itertools
import logging
import time
from dataclasses import dataclass, field

from .errors import EmptySampleError, NoTemplatesError, UnknownAtomError
from .formulas import (
    BINARY_OPS,
    TRUE_ATOM,
    UNARY_OPS,
    And,
    Atom,
    Finally,
    Formula,
    Globally,
    Implies,
    Next,
    Not,
    Or,
    PropositionSet,
    Until,
    children,
    decode_label,
    eval_qualitative,
    format_formula,
    node_count,
)
from .semantics import (
    DISCOUNTED,
    ROBUST,
    SemanticsParams,
    robust_upper_bound,
    sample_fitness,
    value_of,
)
from .templates import Fixed, Hole, Template
from .traces import Sample

log = logging.getLogger("janaka.repair")

_LABELED, _UNUSED = "labeled", "unused"

_BINARY_BY_OP = {"&": And, "|": Or, "->": Implies, "U": Until}
_UNARY_BY_OP = {"G": Globally, "F": Finally, "X": Next}


def literal_labels(props: PropositionSet) -> list[str]:
    out = []
    for name in props:
        out.extend((name, "!" + name))
    return out


@dataclass(frozen=True)
class Filling:
    """Label choice for every hole slot (None = unused) plus the decoded formula."""

    assignment: tuple[tuple[int, str | None], ...]
    formula: Formula


@dataclass(frozen=True)
class SearchBudget:
    time_limit: float = 60.0
    node_limit: int = 1_000_000
    parallelism: int = 1

    def __post_init__(self):
        if self.time_limit <= 0 or self.node_limit <= 0 or self.parallelism <= 0:
            raise ValueError("budget fields must be positive")


@dataclass
class RepairOutcome:
    best: Filling | None
    fitness: float
    total: float
    per_trace: list[tuple[float, bool]]
    explored: int
    elapsed: float
    threshold_met: bool
    budget_expired: bool = False
    strategy: str | None = None


class _View:
    """Precomputed per-template search tables."""

    def __init__(self, template: Template, props: PropositionSet):
        self.template = template
        self.m = template.slot_map
        self.order = sorted(self.m)
        self.literals = literal_labels(props)
        self.hole_after = self._holes_after()
        self.avail = {}
        for i in sorted(self.m, reverse=True):
            self.avail[i] = 1 + max(
                self.avail.get(2 * i, 0), self.avail.get(2 * i + 1, 0)
            )

    def _holes_after(self):
        flags = [isinstance(self.m[i], Hole) for i in self.order]
        out = []
        acc = 0
        for flag in reversed(flags):
            out.append(acc)
            acc += flag
        return list(reversed(out))

    def labels_for(self, i: int, allowed) -> list[str]:
        left, right = self.m.get(2 * i), self.m.get(2 * i + 1)
        left_open = left is None or isinstance(left, Hole)
        right_open = right is None or isinstance(right, Hole)
        out = []
        for op in BINARY_OPS:
            if left is not None and right is not None:
                out.append(op)
        for op in UNARY_OPS:
            if left is not None and right_open:
                out.append(op)
        if left_open and right_open:
            out.extend(self.literals)
        if allowed is not None:
            out = [lbl for lbl in out if lbl in allowed]
        return out


def _child_demands(demand, m, i, label):
    """Set demands implied by labeling slot i; returns undo list."""
    if label in _BINARY_BY_OP:
        wants = (_LABELED, _LABELED)
    elif label in _UNARY_BY_OP:
        wants = (_LABELED, _UNUSED)
    else:  # literal or unused
        wants = (_UNUSED, _UNUSED)
    undo = []
    for j, want in zip((2 * i, 2 * i + 1), wants):
        if j in m:
            undo.append((j, demand.get(j)))
            demand[j] = want
    return undo


def _restore(demand, undo):
    for j, old in undo:
        if old is None:
            demand.pop(j, None)
        else:
            demand[j] = old


def _decode(m, assignment, i=1) -> Formula:
    slot = m[i]
    label = slot.label if isinstance(slot, Fixed) else assignment[i]
    if label in _BINARY_BY_OP:
        return _BINARY_BY_OP[label](
            _decode(m, assignment, 2 * i), _decode(m, assignment, 2 * i + 1)
        )
    if label in _UNARY_BY_OP:
        return _UNARY_BY_OP[label](_decode(m, assignment, 2 * i))
    return decode_label(label)


def _assignments(view: _View, prune=None):
    """Yield complete hole assignments in deterministic order.

    `prune(assignment, demand, next_pos)` is consulted right after each hole
    label choice; returning True abandons that branch.
    """
    m, order = view.m, view.order
    demand = {1: _LABELED}
    assignment: dict[int, str | None] = {}

    def rec(k):
        if k == len(order):
            yield dict(assignment)
            return
        i = order[k]
        want = demand.get(i, _UNUSED)
        slot = m[i]
        if want == _UNUSED:
            if isinstance(slot, Fixed):
                return  # a fixed node cannot be erased; dead branch
            assignment[i] = None
            undo = _child_demands(demand, m, i, None)
            yield from rec(k + 1)
            _restore(demand, undo)
            del assignment[i]
            return
        if isinstance(slot, Fixed):
            undo = _child_demands(demand, m, i, slot.label)
            yield from rec(k + 1)
            _restore(demand, undo)
            return
        for label in view.labels_for(i, slot.allowed):
            assignment[i] = label
            undo = _child_demands(demand, m, i, label)
            if prune is None or not prune(assignment, demand, k + 1):
                yield from rec(k + 1)
            _restore(demand, undo)
            del assignment[i]

    yield from rec(0)


def enumerate_fillings(template: Template, props: PropositionSet):
    """All structurally valid fillings, operators before literals, both in
    declared order; a hole-free template yields exactly its source formula."""
    view = _View(template, props)
    for assignment in _assignments(view):
        holes = tuple((i, assignment[i]) for i in sorted(assignment))
        yield Filling(holes, _decode(view.m, assignment))


# --- triviality filter ----------------------------------------------------------


def _walk(f: Formula):
    stack = [f]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(children(node))


def _is_propositional(f: Formula) -> bool:
    return all(
        not isinstance(node, (Next, Finally, Globally, Until)) for node in _walk(f)
    )


def _propositional_tautology(f: Formula) -> bool:
    if not _is_propositional(f):
        return False
    atoms = sorted(a for a in _atoms(f) if a != TRUE_ATOM)
    if len(atoms) > 10:
        return False
    for bits in itertools.product((False, True), repeat=len(atoms)):
        env = dict(zip(atoms, bits))
        if not _prop_eval(f, env):
            return False
    return True


def _atoms(f):
    return {n.name for n in _walk(f) if isinstance(n, Atom)}


def _prop_eval(f, env):
    if isinstance(f, Atom):
        return True if f.name == TRUE_ATOM else env[f.name]
    if isinstance(f, Not):
        return not _prop_eval(f.child, env)
    if isinstance(f, And):
        return _prop_eval(f.left, env) and _prop_eval(f.right, env)
    if isinstance(f, Or):
        return _prop_eval(f.left, env) or _prop_eval(f.right, env)
    if isinstance(f, Implies):
        return (not _prop_eval(f.left, env)) or _prop_eval(f.right, env)
    raise TypeError(f)


def triviality_filter(f: Formula) -> bool:
    """True (reject) for degenerate synthesized formulas: a binary node with
    syntactically identical children, x|!x or x&!x, directly nested FF or GG
    (XX stays, it is not idempotent), and G/F applied to a propositional
    tautology."""
    for node in _walk(f):
        if isinstance(node, (And, Or, Implies, Until)) and node.left == node.right:
            return True
        if isinstance(node, (And, Or)):
            if node.right == Not(node.left) or node.left == Not(node.right):
                return True
        if isinstance(node, Finally) and isinstance(node.child, Finally):
            return True
        if isinstance(node, Globally) and isinstance(node.child, Globally):
            return True
        if isinstance(node, (Finally, Globally)) and _propositional_tautology(node.child):
            return True
    return False


# --- admissible interval bound ---------------------------------------------------


def _free_interval(kind_avail, t, n, p: SemanticsParams):
    if p.kind == DISCOUNTED:
        return 0.0, 1.0
    return -1.0, robust_upper_bound(kind_avail, n - t, p)


def _bound_root_hi(view: _View, assignment, states, p: SemanticsParams) -> float:
    """Upper end of the root value interval at position 0 for one trace."""
    n = len(states)
    memo: dict[int, tuple[list, list]] = {}

    def label_of(i):
        slot = view.m[i]
        if isinstance(slot, Fixed):
            return slot.label
        if i in assignment:
            return assignment[i]  # may be None (unused)
        return "?"  # unresolved hole

    def intervals(i):
        if i in memo:
            return memo[i]
        label = label_of(i)
        if label == "?":
            los, his = [], []
            for t in range(n):
                lo, hi = _free_interval(view.avail[i], t, n, p)
                los.append(lo)
                his.append(hi)
            memo[i] = (los, his)
            return memo[i]
        if label in _BINARY_BY_OP:
            ll, lh = intervals(2 * i)
            rl, rh = intervals(2 * i + 1)
            los, his = _combine_binary(label, ll, lh, rl, rh, p)
        elif label in _UNARY_BY_OP:
            cl, ch = intervals(2 * i)
            los, his = _combine_unary(label, cl, ch, n, p)
        else:
            if p.kind == DISCOUNTED:
                vals = [
                    _discounted_literal(label, states[t]) for t in range(n)
                ]
            else:
                vals = [_robust_literal(label, states[t]) for t in range(n)]
            los, his = vals, list(vals)
        memo[i] = (los, his)
        return memo[i]

    _, his = intervals(1)
    return his[0]


def _robust_literal(label, state):
    neg = label.startswith("!")
    name = label[1:] if neg else label
    v = 1.0 if (name == TRUE_ATOM or name in state) else -1.0
    return -v if neg else v


def _discounted_literal(label, state):
    neg = label.startswith("!")
    name = label[1:] if neg else label
    v = 1.0 if (name == TRUE_ATOM or name in state) else 0.0
    return 1.0 - v if neg else v


def _combine_binary(label, ll, lh, rl, rh, p):
    a, b = p.alpha, p.beta
    n = len(ll)
    los, his = [], []
    if p.kind == DISCOUNTED:
        for t in range(n):
            if label == "&":
                los.append(b * min(ll[t], rl[t]))
                his.append(b * min(lh[t], rh[t]))
            elif label == "|":
                los.append(b * max(ll[t], rl[t]))
                his.append(b * max(lh[t], rh[t]))
            elif label == "->":
                los.append(b * max(1.0 - lh[t], rl[t]))
                his.append(b * max(1.0 - ll[t], rh[t]))
            else:  # U: monotone increasing in both children
                los.append(_disc_until_at(ll, rl, t, a))
                his.append(_disc_until_at(lh, rh, t, a))
        return los, his
    for t in range(n):
        if label == "&":
            cands = []
            if lh[t] >= 0 and rh[t] >= 0:
                cands.append(b * lh[t] * rh[t])
            if ll[t] < 0 or rl[t] < 0:
                cands.append(-1.0)
            his.append(max(cands))
            los.append(b * ll[t] * rl[t] if ll[t] >= 0 and rl[t] >= 0 else -1.0)
        elif label == "|":
            los.append(b * (ll[t] + rl[t]) / 2)
            his.append(b * max(lh[t], rh[t]))
        elif label == "->":
            los.append(b * (-lh[t] + rl[t]) / 2)
            his.append(b * max(-ll[t], rh[t]))
        else:  # U
            los.append(-1.0)
            cands = [p.gamma * a ** (n - t)]
            cands.extend(a ** (i - t) * rh[i] for i in range(t, n) if rh[i] >= 0)
            his.append(max(cands))
    return los, his


def _disc_until_at(lv, rv, t, a):
    best = 0.0
    prefix = None
    for i in range(t, len(lv)):
        term = a ** (i - t) * rv[i]
        if prefix is not None:
            term = min(term, prefix)
        best = max(best, term)
        step = a ** (i - t) * lv[i]
        prefix = step if prefix is None else min(prefix, step)
    return best


def _combine_unary(label, cl, ch, n, p):
    a, b, g = p.alpha, p.beta, p.gamma
    los, his = [], []
    if p.kind == DISCOUNTED:
        for t in range(n):
            if label == "X":
                if t + 1 < n:
                    los.append(a * cl[t + 1])
                    his.append(a * ch[t + 1])
                else:
                    los.append(0.0)
                    his.append(0.0)
            elif label == "F":
                los.append(b * max(a ** (i - t) * cl[i] for i in range(t, n)))
                his.append(b * max(a ** (i - t) * ch[i] for i in range(t, n)))
            else:  # G
                los.append(b * (1 - max(a ** (i - t) * (1 - cl[i]) for i in range(t, n))))
                his.append(b * (1 - max(a ** (i - t) * (1 - ch[i]) for i in range(t, n))))
        return los, his
    for t in range(n):
        if label == "X":
            if t + 1 >= n:
                los.append(g)
                his.append(g)
            elif ch[t + 1] < 0:
                los.append(-1.0)
                his.append(-1.0)
            elif cl[t + 1] >= 0:
                los.append(cl[t + 1])
                his.append(ch[t + 1])
            else:
                los.append(-1.0)
                his.append(ch[t + 1])
        elif label == "F":
            los.append(0.0)
            cands = [b * g * a ** (n - t)]
            cands.extend(b * a ** (i - t) * ch[i] for i in range(t, n) if ch[i] >= 0)
            his.append(max(cands))
        else:  # G
            tail_lo = [cl[i] for i in range(t, n)]
            tail_hi = [ch[i] for i in range(t, n)]
            if min(tail_lo) >= 0:
                los.append(b * sum(a ** k * v for k, v in enumerate(tail_lo)))
            else:
                los.append(-b)
            cands = []
            if min(tail_hi) >= 0:
                cands.append(b * sum(a ** k * v for k, v in enumerate(tail_hi)))
            if min(tail_lo) < 0:
                cands.append(-b)
            his.append(max(cands))
    return los, his


def bound_mean_fitness(view: _View, assignment, sample: Sample, p: SemanticsParams) -> float:
    """Admissible upper bound on the mean fitness of any completion of the
    partial assignment (each trace maximized independently)."""
    total = 0.0
    for trace in sample.traces:
        total += _bound_root_hi(view, assignment, trace.states, p)
    return total / len(sample.traces)


# --- the search -------------------------------------------------------------------


def _validate_templates(templates, props):
    for t in templates:
        for _, slot in t.slots:
            labels = ()
            if isinstance(slot, Fixed):
                labels = (slot.label,)
            elif slot.allowed:
                labels = slot.allowed
            for lbl in labels:
                if lbl in BINARY_OPS or lbl in UNARY_OPS:
                    continue
                name = lbl[1:] if lbl.startswith("!") else lbl
                if name != TRUE_ATOM and name not in props:
                    raise UnknownAtomError(name, list(props))


def repair(
    sample: Sample,
    templates: list[Template],
    params: SemanticsParams,
    kappa: float,
    budget: SearchBudget = SearchBudget(),
) -> RepairOutcome:
    """Branch-and-bound over every template's fillings; returns the best
    non-trivial formula found within budget and whether its mean fitness
    reaches kappa. On budget expiry the incumbent so far is returned with
    budget_expired set (never worse than any earlier incumbent)."""
    if not templates:
        raise NoTemplatesError("repair needs at least one template")
    traces = getattr(sample, "traces", sample)
    if not traces:
        raise EmptySampleError("repair needs a non-empty sample")
    _validate_templates(templates, sample.props)

    deadline = time.monotonic() + budget.time_limit
    start = time.monotonic()
    best: Filling | None = None
    best_fit = float("-inf")
    best_key = None
    explored = 0
    prunes = 0
    expired = False

    class _Expired(Exception):
        pass

    for template in templates:
        view = _View(template, sample.props)

        def prune(assignment, demand, k):
            nonlocal prunes
            if time.monotonic() > deadline:
                raise _Expired
            if best is None or view.hole_after[k - 1] < 1:
                return False
            ub = bound_mean_fitness(view, assignment, sample, params)
            if ub < best_fit:
                prunes += 1
                return True
            return False

        try:
            for assignment in _assignments(view, prune=prune):
                if time.monotonic() > deadline or explored >= budget.node_limit:
                    raise _Expired
                formula = _decode(view.m, assignment)
                if triviality_filter(formula):
                    continue
                explored += 1
                fit = sample_fitness(formula, sample, params)
                key = (node_count(formula), format_formula(formula))
                if fit > best_fit or (fit == best_fit and best is not None and key < best_key):
                    holes = tuple((i, assignment[i]) for i in sorted(assignment))
                    best = Filling(holes, formula)
                    best_fit = fit
                    best_key = key
                    log.debug(
                        "incumbent fitness=%.9f explored=%d prunes=%d formula=%s",
                        fit, explored, prunes, format_formula(formula),
                    )
        except _Expired:
            expired = True
            break

    elapsed = time.monotonic() - start
    if best is None:
        log.info("repair found no admissible filling (explored=%d)", explored)
        return RepairOutcome(
            None, float("-inf"), float("-inf"), [], explored, elapsed, False, expired
        )
    fitness = sample_fitness(best.formula, sample, params)
    scores = [value_of(best.formula, w, params).value for w in sample.traces]
    sats = [eval_qualitative(best.formula, w) for w in sample.traces]
    log.info(
        "repair done: fitness=%.9f total=%.9f explored=%d prunes=%d elapsed=%.3fs",
        fitness, sum(scores), explored, prunes, elapsed,
    )
    return RepairOutcome(
        best=best,
        fitness=fitness,
        total=sum(scores),
        per_trace=list(zip(scores, sats)),
        explored=explored,
        elapsed=elapsed,
        threshold_met=fitness >= kappa,
        budget_expired=expired,
    )
