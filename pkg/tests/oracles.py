"""Independent reference computations used to freeze expected values.

Nothing here touches the block recursion or the matrix code: values come
from plain memoised recursion over (state, accumulated weight) on the
assembled MDP under a fixed scheduler.
"""

import sys
from fractions import Fraction
from functools import lru_cache


def lrs_term(coefficients, initials, n):
    """u_n by naive top-down recursion (exponential, fine for small n)."""
    k = len(coefficients)

    @lru_cache(maxsize=None)
    def u(m):
        if m < k:
            return Fraction(initials[m])
        return sum(Fraction(coefficients[i]) * u(m - 1 - i) for i in range(k))

    return u(n)


def scheduler_value(mdp, sched, q, w, objective):
    """Value of (q, w) under ``sched`` by recursion on the weight.

    objective "termination": 1 once the weight drops below 0, 0 in
    absorbing/terminal states.  "partial": weight on reaching a goal state,
    0 elsewhere.  Only valid when every cycle strictly decreases the weight
    before reaching a base case (true for the prescribed schedulers on the
    termination and partial constructions).
    """
    goal = set(mdp.marked("goal"))
    sys.setrecursionlimit(max(10_000, sys.getrecursionlimit()))

    @lru_cache(maxsize=None)
    def val(q, w):
        if objective == "termination" and w < 0:
            return Fraction(1)
        if mdp.is_terminal(q) or mdp.is_absorbing(q):
            if objective == "partial" and q in goal:
                return w
            return Fraction(0)
        a = sched.choose(mdp, q, w)
        w2 = w + mdp.weight[(q, a)]
        return sum((p * val(r, w2) for p, r in mdp.trans[(q, a)]), Fraction(0))

    return val(q, Fraction(w))


def series_from_choice(mdp, sched, objective, top, anchor="t"):
    """sum_{w=1}^{top} (1/2)^w * value(anchor, w): the value from s_init
    truncated at choice weight ``top``."""
    return sum((Fraction(1, 2**w) * scheduler_value(mdp, sched, anchor, w, objective)
                for w in range(1, top + 1)), Fraction(0))
