"""Robust and discounted quantitative valuations over finite traces.

Both evaluators work bottom-up: for each subformula they compute the value at
every suffix position of the word, so the value of ``f`` on ``w`` is the root
vector at position 0.

Robust semantics (negation on literals only):

* literal: +1 / -1 at the first state
* f & g:  beta*f*g when both >= 0, else -1
* f | g:  beta*avg when both >= 0, else beta*max
* f -> g: beta*avg(-f, g) when f < 0 <= g, else beta*max(-f, g)
* G f:    beta*sum_i alpha^i f_i when f is non-negative on every suffix, else -beta
* F f:    beta*alpha^t f_t at the first non-negative suffix t, else beta*gamma*alpha^|w|
* X f:    f at the next suffix when non-negative, gamma at the last position, else -1
* f U g:  alpha^t g_t at the first non-negative g with f non-negative before it;
          gamma*alpha^|w| when f is non-negative everywhere and g never is; else -1

Discounted semantics (general negation, values in [0,1]):

* atom 1/0; !f = 1 - f; & = beta*min; | = beta*max; -> = beta*max(1-f, g)
* X f = alpha*f@next (0 past the end)
* F f = beta*max_i alpha^i f_i;  G f = beta*(1 - max_i alpha^i (1 - f_i))
* f U g = max_i min(alpha^i g_i, min_{j<i} alpha^j f_j)   (no beta)

A `Valuation.decisive` flag is False when any gamma case fired anywhere the
recursion looked: boolean connectives combine their children's flags, X reads
the flag of the next position, and G/F/U combine the child flags over the
entire suffix they scan.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .errors import EmptySampleError, EmptyTraceError, NotInNNFError
from .formulas import (
    TRUE_ATOM,
    And,
    Atom,
    Finally,
    Formula,
    Globally,
    Implies,
    Next,
    Not,
    Or,
    Until,
    eval_qualitative,
    is_nnf,
    to_nnf,
)

ROBUST = "robust"
DISCOUNTED = "discounted"


@dataclass(frozen=True)
class SemanticsParams:
    """alpha: temporal discount, beta: nesting discount, gamma: inconclusive reward."""

    alpha: float = 0.9
    beta: float = 0.9
    gamma: float = 0.1
    kind: str = ROBUST

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must be in (0, 1]")
        if not 0.0 < self.beta <= 1.0:
            raise ValueError("beta must be in (0, 1]")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must be in [0, 1)")
        if self.kind not in (ROBUST, DISCOUNTED):
            raise ValueError(f"unknown semantics kind {self.kind!r}")


@dataclass(frozen=True)
class Valuation:
    value: float
    decisive: bool


def _states_of(w) -> tuple[frozenset, ...]:
    states = getattr(w, "states", w)
    return tuple(frozenset(s) for s in states)


# --- robust -------------------------------------------------------------------


def _robust_vectors(f: Formula, states, p: SemanticsParams):
    """Per-suffix (values, decisive-flags) for f over the word."""
    n = len(states)
    a, b, g = p.alpha, p.beta, p.gamma

    if isinstance(f, Atom):
        if f.name == TRUE_ATOM:
            return [1.0] * n, [True] * n
        return [1.0 if f.name in s else -1.0 for s in states], [True] * n
    if isinstance(f, Not):
        if not isinstance(f.child, Atom):
            raise NotInNNFError("robust semantics needs negation normal form")
        vals, flags = _robust_vectors(f.child, states, p)
        return [-v for v in vals], flags

    if isinstance(f, (And, Or, Implies)):
        lv, lf = _robust_vectors(f.left, states, p)
        rv, rf = _robust_vectors(f.right, states, p)
        vals = []
        for x, y in zip(lv, rv):
            if isinstance(f, And):
                vals.append(b * x * y if x >= 0 and y >= 0 else -1.0)
            elif isinstance(f, Or):
                vals.append(b * ((x + y) / 2 if x >= 0 and y >= 0 else max(x, y)))
            else:
                vals.append(b * ((-x + y) / 2 if x < 0 and y >= 0 else max(-x, y)))
        return vals, [p_ and q_ for p_, q_ in zip(lf, rf)]

    if isinstance(f, Next):
        cv, cf = _robust_vectors(f.child, states, p)
        vals, flags = [], []
        for t in range(n):
            if t + 1 >= n:
                vals.append(g)
                flags.append(False)
            else:
                vals.append(cv[t + 1] if cv[t + 1] >= 0 else -1.0)
                flags.append(cf[t + 1])
        return vals, flags

    if isinstance(f, Globally):
        cv, cf = _robust_vectors(f.child, states, p)
        vals, flags = [], []
        for t in range(n):
            if all(cv[i] >= 0 for i in range(t, n)):
                vals.append(b * sum(a ** (i - t) * cv[i] for i in range(t, n)))
            else:
                vals.append(b * -1.0)
            flags.append(all(cf[t:]))
        return vals, flags

    if isinstance(f, Finally):
        cv, cf = _robust_vectors(f.child, states, p)
        vals, flags = [], []
        for t in range(n):
            witness = next((i for i in range(t, n) if cv[i] >= 0), None)
            if witness is None:
                vals.append(b * g * a ** (n - t))
                flags.append(False)
            else:
                vals.append(b * a ** (witness - t) * cv[witness])
                flags.append(all(cf[t:]))
        return vals, flags

    if isinstance(f, Until):
        lv, lf = _robust_vectors(f.left, states, p)
        rv, rf = _robust_vectors(f.right, states, p)
        vals, flags = [], []
        for t in range(n):
            witness = next((i for i in range(t, n) if rv[i] >= 0), None)
            scanned = all(lf[t:]) and all(rf[t:])
            if witness is not None and all(lv[j] >= 0 for j in range(t, witness)):
                vals.append(a ** (witness - t) * rv[witness])
                flags.append(scanned)
            elif witness is None and all(lv[j] >= 0 for j in range(t, n)):
                vals.append(g * a ** (n - t))
                flags.append(False)
            else:
                vals.append(-1.0)
                flags.append(scanned)
        return vals, flags

    raise TypeError(f"not a formula: {f!r}")


def robust_value(f: Formula, w, p: SemanticsParams) -> Valuation:
    """Robust valuation of an NNF formula at position 0 of a non-empty trace."""
    if p.kind != ROBUST:
        raise ValueError("params.kind must be 'robust'")
    if not is_nnf(f):
        raise NotInNNFError(f"not in negation normal form: {f}")
    states = _states_of(w)
    if not states:
        raise EmptyTraceError("cannot evaluate on an empty trace")
    vals, flags = _robust_vectors(f, states, p)
    return Valuation(vals[0], flags[0])


# --- discounted ----------------------------------------------------------------


def _discounted_vector(f: Formula, states, p: SemanticsParams):
    n = len(states)
    a, b = p.alpha, p.beta

    if isinstance(f, Atom):
        if f.name == TRUE_ATOM:
            return [1.0] * n
        return [1.0 if f.name in s else 0.0 for s in states]
    if isinstance(f, Not):
        return [1.0 - v for v in _discounted_vector(f.child, states, p)]
    if isinstance(f, And):
        lv = _discounted_vector(f.left, states, p)
        rv = _discounted_vector(f.right, states, p)
        return [b * min(x, y) for x, y in zip(lv, rv)]
    if isinstance(f, Or):
        lv = _discounted_vector(f.left, states, p)
        rv = _discounted_vector(f.right, states, p)
        return [b * max(x, y) for x, y in zip(lv, rv)]
    if isinstance(f, Implies):
        lv = _discounted_vector(f.left, states, p)
        rv = _discounted_vector(f.right, states, p)
        return [b * max(1.0 - x, y) for x, y in zip(lv, rv)]
    if isinstance(f, Next):
        cv = _discounted_vector(f.child, states, p)
        return [a * cv[t + 1] if t + 1 < n else 0.0 for t in range(n)]
    if isinstance(f, Finally):
        cv = _discounted_vector(f.child, states, p)
        return [b * max(a ** (i - t) * cv[i] for i in range(t, n)) for t in range(n)]
    if isinstance(f, Globally):
        cv = _discounted_vector(f.child, states, p)
        return [
            b * (1.0 - max(a ** (i - t) * (1.0 - cv[i]) for i in range(t, n)))
            for t in range(n)
        ]
    if isinstance(f, Until):
        lv = _discounted_vector(f.left, states, p)
        rv = _discounted_vector(f.right, states, p)
        out = []
        for t in range(n):
            best = 0.0
            prefix = None  # min over alpha^(j-t) * lv[j] for j in [t, i)
            for i in range(t, n):
                term = a ** (i - t) * rv[i]
                if prefix is not None:
                    term = min(term, prefix)
                if term > best:
                    best = term
                step = a ** (i - t) * lv[i]
                prefix = step if prefix is None else min(prefix, step)
            out.append(best)
        return out
    raise TypeError(f"not a formula: {f!r}")


def discounted_value(f: Formula, w, p: SemanticsParams) -> Valuation:
    """Discounted valuation in [0,1]; general negation allowed; always decisive."""
    if p.kind != DISCOUNTED:
        raise ValueError("params.kind must be 'discounted'")
    states = _states_of(w)
    if not states:
        raise EmptyTraceError("cannot evaluate on an empty trace")
    return Valuation(_discounted_vector(f, states, p)[0], True)


# --- sample-level fitness -------------------------------------------------------


def value_of(f: Formula, w, p: SemanticsParams) -> Valuation:
    """Valuation under the selected semantics; converts to NNF for robust."""
    if p.kind == ROBUST:
        return robust_value(f if is_nnf(f) else to_nnf(f), w, p)
    return discounted_value(f, w, p)


def sample_fitness(f: Formula, sample, p: SemanticsParams) -> float:
    """Mean valuation over the sample's traces (normalized by trace count)."""
    traces = list(getattr(sample, "traces", sample))
    if not traces:
        raise EmptySampleError("sample has no traces")
    g = to_nnf(f) if p.kind == ROBUST and not is_nnf(f) else f
    total = 0.0
    for w in traces:
        if p.kind == ROBUST:
            total += robust_value(g, w, p).value
        else:
            total += discounted_value(g, w, p).value
    return total / len(traces)


def satisfies_all(f: Formula, sample) -> tuple[bool, list[bool]]:
    """Qualitative satisfaction of every trace, and the conjunction."""
    traces = list(getattr(sample, "traces", sample))
    per_trace = [eval_qualitative(f, w) for w in traces]
    return all(per_trace), per_trace


# --- value-range bound for the robust semantics ---------------------------------


@lru_cache(maxsize=None)
def _robust_bound(depth: int, length: int, a: float, b: float, g: float) -> float:
    if depth <= 1 or length <= 0:
        return 1.0
    h = _robust_bound(depth - 1, length, a, b, g)
    sub = [_robust_bound(depth - 1, length - i, a, b, g) for i in range(length)]
    g_sum = b * sum(a ** i * s for i, s in enumerate(sub))
    fu_max = max(g * a ** length, max(a ** i * s for i, s in enumerate(sub)))
    x_term = _robust_bound(depth - 1, length - 1, a, b, g) if length >= 2 else g
    return max(1.0, b * h * h, g_sum, fu_max, x_term)


def robust_upper_bound(depth: int, length: int, p: SemanticsParams) -> float:
    """Sound upper bound on the robust value of any formula of the given tree
    depth over a suffix of the given length. Used by the repair search and the
    MILP export to size big-M constants."""
    return _robust_bound(depth, length, p.alpha, p.beta, p.gamma)
