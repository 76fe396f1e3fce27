"""Exact values of the prescribed scheduler and the closed-form thresholds.

Along the prescribed scheduler the values at the anchors t and s are
grouped into blocks of k consecutive weights.  Block n covers the weights

    origin + n*k + r,   r = 0..k-1

and is stored as a 2k vector in descending-weight order: first the t
entries for r = k-1..0, then the s entries (see ``idx``).  One block
determines the next through the absorbing chain C:

    v_n = A v_{n-1} + n * a + b

where a and b collect the weight carried into a goal state and vanish for
probability objectives.  Summing the blocks against 2^-w weights yields
the thresholds as Neumann series in A / 2^k.

Targets (``kind``):

    termination-max  weights >= 0, base block 0..k-1, p = Pr(terminate)
    termination-min  same, minimising; the difference is read as s - t
    partial          base block -(k-1)..0, e = partial expectation of goal
    cvar             base block -k..-1, e = E(min(weight at goal, 0))
"""

from dataclasses import dataclass
from fractions import Fraction

from .analysis import MIN_GOAL, PARTIAL, TERMINATION, WeightScheduler
from .gadgets import base_prob
from .linalg import RatMatrix, mat_inverse, neumann
from .lrs import growth_cap, initial_cap
from .rational import fmt_rat, to_rat

TERM_MAX = "termination-max"
TERM_MIN = "termination-min"
PARTIAL_KIND = "partial"
CVAR_KIND = "cvar"
KINDS = (TERM_MAX, TERM_MIN, PARTIAL_KIND, CVAR_KIND)


@dataclass(frozen=True)
class Shape:
    origin: int  # weight of block 0, entry r = 0, is origin (+ n*k for block n)
    base_block: int  # index of the block fixed by the initial-value gadget
    d_sign: int  # +1: d = t - s, -1: d = s - t
    objective: str
    mode: str  # which way the owner of the MDP optimises

    def offset(self, k):
        """Weight at which the difference sequence starts: d(offset + n) = u'_n."""
        return self.origin + self.base_block * k


def shape(kind, k):
    if kind == TERM_MAX:
        return Shape(0, 0, 1, TERMINATION, "max")
    if kind == TERM_MIN:
        return Shape(0, 0, -1, TERMINATION, "min")
    if kind == PARTIAL_KIND:
        return Shape(1, -1, 1, PARTIAL, "max")
    if kind == CVAR_KIND:
        return Shape(-k, 0, 1, MIN_GOAL, "max")
    raise ValueError(f"unknown target kind {kind!r}")


def idx(k, anchor, r):
    """Position of (anchor, block offset r) in a stacked 2k vector."""
    return (0 if anchor == "t" else k) + (k - 1 - r)


def _rats(xs):
    return tuple(to_rat(x) for x in xs)


def _mass(alphas):
    return sum((abs(a) for a in alphas), Fraction(0))


# ---------------------------------------------------------------------------
# The absorbing chain C


@dataclass(frozen=True)
class Chain:
    k: int
    states: tuple  # ("t"|"s", i) for i in -k+1..k, ("goal", i) for i in 1..k
    trans: dict  # transient state -> tuple of (prob, state)

    def is_absorbing(self, q):
        return q[0] == "goal" or q[1] <= 0


def build_chain_C(alphas):
    """States t_i / s_i with index i in -k+1..k and goal_1..goal_k.

    From t_i (i > 0) the chain moves to t_{i-j} w.p. a'_j when a'_j > 0, to
    s_{i-j} w.p. |a'_j| when a'_j < 0, and to goal_i with the remaining
    mass; s_i is symmetric.  Index <= 0 and goal states absorb.
    """
    alphas = _rats(alphas)
    k = len(alphas)
    mass = _mass(alphas)
    if not mass < 1:
        raise ValueError(f"coefficient mass {mass} must be < 1")
    states = [(a, i) for a in ("t", "s") for i in range(-k + 1, k + 1)]
    states += [("goal", i) for i in range(1, k + 1)]
    trans = {}
    for anchor, other in (("t", "s"), ("s", "t")):
        for i in range(1, k + 1):
            out = []
            for j, a in enumerate(alphas, start=1):
                if a > 0:
                    out.append((a, (anchor, i - j)))
                elif a < 0:
                    out.append((-a, (other, i - j)))
            if mass < 1:
                out.append((1 - mass, ("goal", i)))
            trans[(anchor, i)] = tuple(out)
    return Chain(k, tuple(states), trans)


def reach_probs_C(chain):
    """Absorption probabilities {(source, absorbing target): prob} for the
    transient sources, by dynamic programming in increasing index."""
    reach = {}
    for i in range(1, chain.k + 1):
        for anchor in ("t", "s"):
            src = (anchor, i)
            acc = {}
            for p, r in chain.trans[src]:
                if chain.is_absorbing(r):
                    acc[r] = acc.get(r, 0) + p
                else:
                    for tgt, q in reach[r].items():
                        acc[tgt] = acc.get(tgt, 0) + p * q
            reach[src] = acc
    return {(src, tgt): Fraction(p) for src, d in reach.items() for tgt, p in d.items()}


@dataclass(frozen=True)
class BlockSystem:
    A: RatMatrix
    a: list
    b: list
    c: list


def build_A_a_b(alphas, kind):
    """Matrix A, affine vectors a, b and the summation weights c for a target.

    Row (anchor, r) of block n starts the chain at anchor_{r+1}; column
    (anchor', r') of block n-1 is the absorbing state anchor'_{r'-k+1}.
    Reaching goal_i from block n happens at weight origin + n*k + i - 1,
    which for the partial expectation splits into n*(k*Pr) (vector a) and
    (origin + i - 1)*Pr (vector b).  Probability targets, and the cvar
    target whose goal weights above the base block are >= 0, have a = b = 0.

    c weights the t entries of a block by 2^-r so that c . v_n sums
    2^-(w - n*k - origin) * value(t, w) over the block; the partial target
    carries one more factor 1/2 because its blocks start at weight 1.
    """
    alphas = _rats(alphas)
    k = len(alphas)
    sh = shape(kind, k)
    probs = reach_probs_C(build_chain_C(alphas))
    n = 2 * k
    A = RatMatrix.zeros(n)
    a = [Fraction(0)] * n
    b = [Fraction(0)] * n
    for anchor in ("t", "s"):
        for r in range(k):
            row = idx(k, anchor, r)
            src = (anchor, r + 1)
            for (s0, tgt), p in probs.items():
                if s0 != src:
                    continue
                if tgt[0] == "goal":
                    if kind == PARTIAL_KIND:
                        a[row] += k * p
                        b[row] += (sh.origin + tgt[1] - 1) * p
                    continue
                col = idx(k, tgt[0], tgt[1] + k - 1)
                A.rows[row][col] += p
    c = [Fraction(0)] * n
    extra = 1 if kind == PARTIAL_KIND else 0
    for r in range(k):
        c[idx(k, "t", r)] = Fraction(1, 2 ** (r + extra))
    return BlockSystem(A, a, b, c)


# ---------------------------------------------------------------------------
# Base blocks fixed by the initial-value gadgets


def _check(alphas, betas, kind):
    k = len(alphas)
    if len(betas) != k:
        raise ValueError("coefficients and initial values differ in length")
    mass = _mass(alphas)
    if any(b < 0 for b in betas):
        raise ValueError("negative initial value")
    if kind in (TERM_MAX, TERM_MIN):
        if not mass < 1:
            raise ValueError(f"coefficient mass {mass} must be < 1")
        if not max(betas) < Fraction(1, k + 1):
            raise ValueError("initial values must be < 1/(k+1)")
    elif kind == PARTIAL_KIND:
        if not mass < Fraction(1, 4):
            raise ValueError(f"coefficient mass {mass} must be < 1/4")
        if not max(betas) < initial_cap(k):
            raise ValueError("initial values must be < 1/(4k^(2k+2))")
    else:
        if not 0 < mass <= growth_cap(k):
            raise ValueError(f"coefficient mass {mass} must lie in (0, 1/(5(k+1))]")
        if max(betas) > mass / 3:
            raise ValueError("initial values must be <= a/3")


def base_vector(alphas, betas, kind):
    """Values of the prescribed scheduler on the base block (stacked 2k vector)."""
    alphas, betas = _rats(alphas), _rats(betas)
    _check(alphas, betas, kind)
    k = len(alphas)
    v = [Fraction(0)] * (2 * k)
    for j in range(k):
        if kind == TERM_MAX:
            t = Fraction(k - j, k + 1) + betas[j]
            s = Fraction(k - j, k + 1)
        elif kind == TERM_MIN:
            t = Fraction(k - j, k + 1) - betas[j]
            s = Fraction(k - j, k + 1)
        elif kind == PARTIAL_KIND:
            t = base_prob(k, j) + betas[j]
            s = base_prob(k, j)
        else:
            # goal directly with weight 0, or through y_j with mean weight -3k+2j-1
            alpha = _mass(alphas)
            t = alpha * (-3 * k + 2 * j - 1)
            s = t - betas[j]
        v[idx(k, "t", j)] = t
        v[idx(k, "s", j)] = s
    return v


# ---------------------------------------------------------------------------
# Value tables


@dataclass(frozen=True)
class ValueTable:
    kind: str
    k: int
    values: dict  # (anchor, weight) -> Fraction

    @property
    def window(self):
        ws = [w for _, w in self.values]
        return min(ws), max(ws)

    def __getitem__(self, key):
        return self.values[key]

    def d(self, w):
        """Difference at weight w, oriented so that it reproduces the sequence."""
        sign = shape(self.kind, self.k).d_sign
        return sign * (self.values[("t", w)] - self.values[("s", w)])

    def to_json(self):
        lo, hi = self.window
        return {
            "kind": self.kind,
            "k": self.k,
            "window": [lo, hi],
            "t": [fmt_rat(self.values[("t", w)]) for w in range(lo, hi + 1)],
            "s": [fmt_rat(self.values[("s", w)]) for w in range(lo, hi + 1)],
        }

    @classmethod
    def from_json(cls, obj):
        lo, hi = obj["window"]
        values = {}
        for anchor in ("t", "s"):
            col = obj[anchor]
            if len(col) != hi - lo + 1:
                raise ValueError(f"column {anchor!r} does not cover the window")
            for w, x in zip(range(lo, hi + 1), col):
                values[(anchor, w)] = to_rat(x)
        return cls(obj["kind"], int(obj["k"]), values)


def blocks(alphas, betas, kind, n_max):
    """[(n, v_n)] from the base block up to block n_max by the recursion."""
    alphas = _rats(alphas)
    sys_ = build_A_a_b(alphas, kind)
    k = len(alphas)
    sh = shape(kind, k)
    v = base_vector(alphas, betas, kind)
    out = [(sh.base_block, v)]
    for n in range(sh.base_block + 1, n_max + 1):
        av = sys_.A.matvec(v)
        v = [x + n * y + z for x, y, z in zip(av, sys_.a, sys_.b)]
        out.append((n, v))
    return out


def scheduler_values(alphas, betas, kind, n_max):
    """Exact table of the prescribed scheduler's values at t and s for every
    weight from the base block through block n_max."""
    k = len(alphas)
    sh = shape(kind, k)
    values = {}
    for n, v in blocks(alphas, betas, kind, n_max):
        for anchor in ("t", "s"):
            for r in range(k):
                values[(anchor, sh.origin + n * k + r)] = v[idx(k, anchor, r)]
    return ValueTable(kind, k, values)


def prescribed_scheduler(k, kind, time_variant=False):
    """The weight-based scheduler whose values the tables hold.

    Base block: the initial-value action whose index matches the weight;
    above it gamma / delta; below it (only reachable after a deviation)
    gamma0 / delta0, the best initial-value action there.  At the choice
    state it always takes tau.
    """
    sh = shape(kind, k)
    lo = sh.offset(k)
    hi = lo + k - 1
    table = {}
    for j in range(k):
        table[("t", lo + j)] = f"gamma{j}"
        table[("s", lo + j)] = f"delta{j}"
    fixed = {"s_init": "tau"} if time_variant else {"choice": "tau"}
    below = {"t": "gamma0", "s": "delta0"}
    above = {"t": "gamma", "s": "delta"}
    return WeightScheduler((lo, hi), table, fixed, below, above)


# ---------------------------------------------------------------------------
# Closed-form thresholds


def theta_termination(alphas, betas, mode):
    """theta = sum_{w>=1} 2^-w p(t, w) = c (I - A/2^k)^-1 v_0 - p(t, 0)."""
    if mode not in ("max", "min"):
        raise ValueError("mode must be 'max' or 'min'")
    alphas = _rats(alphas)
    kind = TERM_MAX if mode == "max" else TERM_MIN
    k = len(alphas)
    sys_ = build_A_a_b(alphas, kind)
    v0 = base_vector(alphas, betas, kind)
    nv = neumann(sys_.A, Fraction(1, 2**k)).matvec(v0)
    theta = _dot(sys_.c, nv) - v0[idx(k, "t", 0)]
    return theta, v0


def partial_series_matrices(A, k):
    """(A N, S2, S3) with N = (I - A/2^k)^-1, summing the affine recursion:

        sum_n 2^-nk sum_{i<=n} A^i         = S3
        sum_n 2^-nk sum_{i<=n} (n - i) A^i = S2
    """
    n = A.shape[0]
    eye = RatMatrix.identity(n)
    N = neumann(A, Fraction(1, 2**k))
    AN = A @ N
    inv = mat_inverse(eye - A)
    g = Fraction(2**k, 2**k - 1)
    S3 = inv @ (eye.scale(g) - AN)
    S2 = inv @ inv @ (AN - A.scale(g) + (eye - A).scale(Fraction(2**k, (2**k - 1) ** 2)))
    return AN, S2, S3


def theta_partial(alphas, betas):
    """theta = sum_{w>=1} 2^-w e(t, w) = c [A N v_-1 + S2 a + S3 b]."""
    alphas = _rats(alphas)
    k = len(alphas)
    sys_ = build_A_a_b(alphas, PARTIAL_KIND)
    v = base_vector(alphas, betas, PARTIAL_KIND)
    AN, S2, S3 = partial_series_matrices(sys_.A, k)
    total = [x + y + z for x, y, z in zip(AN.matvec(v), S2.matvec(sys_.a), S3.matvec(sys_.b))]
    return _dot(sys_.c, total), v


def theta_cvar_aux(alphas, betas):
    """theta = sum_{w>=1} 2^-w e(t, w) = c A N v_0 - e(t, 0).

    Above the base block every goal arrival carries weight >= 0 and adds
    nothing to min(weight, 0), so the recursion is linear: v_n = A^n v_0.
    """
    alphas = _rats(alphas)
    k = len(alphas)
    sys_ = build_A_a_b(alphas, CVAR_KIND)
    v0 = base_vector(alphas, betas, CVAR_KIND)
    N = neumann(sys_.A, Fraction(1, 2**k))
    v1 = sys_.A.matvec(v0)
    return _dot(sys_.c, sys_.A.matvec(N.matvec(v0))) - v1[idx(k, "t", 0)]


def theta_for(alphas, betas, kind):
    if kind == TERM_MAX:
        return theta_termination(alphas, betas, "max")[0]
    if kind == TERM_MIN:
        return theta_termination(alphas, betas, "min")[0]
    if kind == PARTIAL_KIND:
        return theta_partial(alphas, betas)[0]
    return theta_cvar_aux(alphas, betas)


def series_tail_bound(kind, k, T, base=None):
    """Bound on sum_{w>T} 2^-w |value(t, w)|.

    termination: values are probabilities -> 2^-T.
    partial: goal is reached with weight in [1, w+k] -> sum 2^-w (w+k) = (T+2+k) 2^-T.
    cvar: each block is A^n v_0 and ||A|| < 1, so |value| <= max|v_0| -> max|v_0| 2^-T.
    """
    x = Fraction(1, 2**T)
    if kind in (TERM_MAX, TERM_MIN):
        return x
    if kind == PARTIAL_KIND:
        return (T + 2 + k) * x
    return max(abs(v) for v in base) * x


def _dot(u, v):
    return sum((x * y for x, y in zip(u, v)), Fraction(0))
