"""Deliberately naive reference evaluators, written straight off the case
tables and kept independent of the production code paths.

Each temporal operator literally materializes every suffix of the word and
recurses on it; nothing is vectorized or shared. These are the oracles the
production evaluators are checked against (values to 1e-12, flags exactly).
"""

from janaka.formulas import (
    TRUE_ATOM,
    And,
    Atom,
    Finally,
    Globally,
    Implies,
    Next,
    Not,
    Or,
    Until,
)


def naive_qualitative(f, word):
    """word is a tuple of frozensets; returns word |= f by the textbook recursion."""
    if isinstance(f, Atom):
        return True if f.name == TRUE_ATOM else f.name in word[0]
    if isinstance(f, Not):
        return not naive_qualitative(f.child, word)
    if isinstance(f, And):
        return naive_qualitative(f.left, word) and naive_qualitative(f.right, word)
    if isinstance(f, Or):
        return naive_qualitative(f.left, word) or naive_qualitative(f.right, word)
    if isinstance(f, Implies):
        return (not naive_qualitative(f.left, word)) or naive_qualitative(f.right, word)
    if isinstance(f, Next):
        return len(word) > 1 and naive_qualitative(f.child, word[1:])
    if isinstance(f, Finally):
        return any(naive_qualitative(f.child, word[i:]) for i in range(len(word)))
    if isinstance(f, Globally):
        return all(naive_qualitative(f.child, word[i:]) for i in range(len(word)))
    if isinstance(f, Until):
        for j in range(len(word)):
            if naive_qualitative(f.right, word[j:]) and all(
                naive_qualitative(f.left, word[k:]) for k in range(j)
            ):
                return True
        return False
    raise TypeError(f)


def naive_robust(f, word, p):
    """Returns (value, decisive) for an NNF formula."""
    a, b, g = p.alpha, p.beta, p.gamma
    n = len(word)

    if isinstance(f, Atom):
        if f.name == TRUE_ATOM:
            return 1.0, True
        return (1.0 if f.name in word[0] else -1.0), True
    if isinstance(f, Not):
        v, d = naive_robust(f.child, word, p)
        return -v, d

    if isinstance(f, And):
        (x, dx), (y, dy) = naive_robust(f.left, word, p), naive_robust(f.right, word, p)
        return (b * x * y if x >= 0 and y >= 0 else -1.0), dx and dy
    if isinstance(f, Or):
        (x, dx), (y, dy) = naive_robust(f.left, word, p), naive_robust(f.right, word, p)
        return b * ((x + y) / 2 if x >= 0 and y >= 0 else max(x, y)), dx and dy
    if isinstance(f, Implies):
        (x, dx), (y, dy) = naive_robust(f.left, word, p), naive_robust(f.right, word, p)
        return b * ((-x + y) / 2 if x < 0 and y >= 0 else max(-x, y)), dx and dy

    if isinstance(f, Next):
        if n < 2:
            return g, False
        v, d = naive_robust(f.child, word[1:], p)
        return (v if v >= 0 else -1.0), d

    if isinstance(f, Globally):
        results = [naive_robust(f.child, word[i:], p) for i in range(n)]
        decisive = all(d for _, d in results)
        if all(v >= 0 for v, _ in results):
            return b * sum(a ** i * v for i, (v, _) in enumerate(results)), decisive
        return b * -1.0, decisive

    if isinstance(f, Finally):
        results = [naive_robust(f.child, word[i:], p) for i in range(n)]
        witnesses = [i for i, (v, _) in enumerate(results) if v >= 0]
        if not witnesses:
            return b * g * a ** n, False
        t = min(witnesses)
        return b * a ** t * results[t][0], all(d for _, d in results)

    if isinstance(f, Until):
        right = [naive_robust(f.right, word[i:], p) for i in range(n)]
        left = [naive_robust(f.left, word[i:], p) for i in range(n)]
        scanned = all(d for _, d in right) and all(d for _, d in left)
        witnesses = [i for i, (v, _) in enumerate(right) if v >= 0]
        if witnesses:
            t = min(witnesses)
            if all(left[i][0] >= 0 for i in range(t)):
                return a ** t * right[t][0], scanned
            return -1.0, scanned
        if all(v >= 0 for v, _ in left):
            return g * a ** n, False
        return -1.0, scanned

    raise TypeError(f)


def naive_discounted(f, word, p):
    a, b = p.alpha, p.beta
    n = len(word)

    if isinstance(f, Atom):
        if f.name == TRUE_ATOM:
            return 1.0
        return 1.0 if f.name in word[0] else 0.0
    if isinstance(f, Not):
        return 1.0 - naive_discounted(f.child, word, p)
    if isinstance(f, And):
        return b * min(naive_discounted(f.left, word, p), naive_discounted(f.right, word, p))
    if isinstance(f, Or):
        return b * max(naive_discounted(f.left, word, p), naive_discounted(f.right, word, p))
    if isinstance(f, Implies):
        return b * max(1.0 - naive_discounted(f.left, word, p), naive_discounted(f.right, word, p))
    if isinstance(f, Next):
        return a * naive_discounted(f.child, word[1:], p) if n > 1 else 0.0
    if isinstance(f, Finally):
        return b * max(a ** i * naive_discounted(f.child, word[i:], p) for i in range(n))
    if isinstance(f, Globally):
        return b * (1.0 - max(a ** i * (1.0 - naive_discounted(f.child, word[i:], p)) for i in range(n)))
    if isinstance(f, Until):
        best = 0.0
        for i in range(n):
            term = a ** i * naive_discounted(f.right, word[i:], p)
            for j in range(i):
                term = min(term, a ** j * naive_discounted(f.left, word[j:], p))
            best = max(best, term)
        return best
    raise TypeError(f)
