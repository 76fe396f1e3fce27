"""Exact linear recurrence sequences and the sign-preserving rescaling.

A sequence of order k is given by coefficients a_1..a_k and initial values
b_0..b_{k-1}:

    u_j = b_j                                  (j < k)
    u_{n+k} = a_1 u_{n+k-1} + ... + a_k u_n

Rescaling with v_n = mu * lam**n * u_n keeps every sign and makes the
coefficients and initial values small enough to be used as transition
probabilities in the gadgets.
"""

from dataclasses import dataclass
from fractions import Fraction

from .rational import fmt_vec, to_rat


@dataclass(frozen=True)
class Lrs:
    coefficients: tuple
    initials: tuple

    def __post_init__(self):
        coeffs = tuple(to_rat(a) for a in self.coefficients)
        inits = tuple(to_rat(b) for b in self.initials)
        if len(coeffs) != len(inits):
            raise ValueError(
                f"order mismatch: {len(coeffs)} coefficients, {len(inits)} initial values"
            )
        if len(coeffs) < 2:
            raise ValueError("order must be at least 2")
        object.__setattr__(self, "coefficients", coeffs)
        object.__setattr__(self, "initials", inits)

    @property
    def order(self):
        return len(self.coefficients)

    @property
    def coeff_mass(self):
        """Sum of |a_i|."""
        return sum((abs(a) for a in self.coefficients), Fraction(0))

    def to_json(self):
        return {
            "order": self.order,
            "coefficients": fmt_vec(self.coefficients),
            "initials": fmt_vec(self.initials),
        }

    @classmethod
    def from_json(cls, obj):
        try:
            k = int(obj["order"])
            lrs = cls(tuple(obj["coefficients"]), tuple(obj["initials"]))
        except KeyError as exc:
            raise ValueError(f"missing field {exc.args[0]!r}") from exc
        if lrs.order != k:
            raise ValueError(f"declared order {k} but {lrs.order} coefficients given")
        return lrs


def terms(lrs, count):
    """u_0 .. u_{count-1}."""
    k = lrs.order
    out = list(lrs.initials[: min(k, count)])
    alphas = lrs.coefficients
    while len(out) < count:
        n = len(out)
        out.append(sum((alphas[i] * out[n - 1 - i] for i in range(k)), Fraction(0)))
    return out


def evaluate(lrs, n):
    if n < 0:
        raise ValueError("index must be non-negative")
    return terms(lrs, n + 1)[n]


def first_negative(lrs, bound):
    """Smallest n <= bound with u_n < 0, or None. Says nothing past `bound`."""
    if bound < 0:
        raise ValueError("bound must be non-negative")
    for n, u in enumerate(terms(lrs, bound + 1)):
        if u < 0:
            return n
    return None


def growth_cap(k):
    """1/(5k+5): the budget for sum |a_i| after rescaling."""
    return Fraction(1, 5 * k + 5)


def initial_cap(k):
    """1/(4 k^(2k+2)): the absolute budget for the initial values."""
    return Fraction(1, 4 * k ** (2 * k + 2))


def check_assumption(lrs, strict=False):
    """List the violated smallness bounds (empty list means usable as-is).

    The default profile: sum|a_i| < 1/(5k+5) and max b_j < min(1/(4k^(2k+2)), a/4)
    with a = sum|a_i|.  ``strict=True`` additionally checks the profile used by
    the CVaR gadget: sum|a_i| <= 1/(5(k+1)) and b_j <= a/3.

    An identically zero initial vector is treated as satisfying the b-bound:
    such a sequence is zero everywhere and every gadget degenerates to a
    symmetric one, so the a/4 margin is irrelevant.
    """
    k = lrs.order
    a = lrs.coeff_mass
    out = []
    if not a < growth_cap(k):
        out.append(f"coefficient mass {a} is not < 1/{5 * k + 5}")
    bmax = max(lrs.initials)
    if any(lrs.initials):
        cap = min(initial_cap(k), a / 4)
        if not bmax < cap:
            out.append(f"max initial value {bmax} is not < min(1/(4k^(2k+2)), a/4) = {cap}")
    if strict:
        if a > growth_cap(k):
            out.append(f"coefficient mass {a} exceeds 1/(5(k+1))")
        for j, b in enumerate(lrs.initials):
            if b > a / 3:
                out.append(f"initial value b_{j} = {b} exceeds a/3 = {a / 3}")
    return out


@dataclass(frozen=True)
class Normalization:
    lam: Fraction
    mu: Fraction
    normalized: Lrs
    source: Lrs
    degenerate: bool = False

    def scaled(self, n, u):
        """mu * lam^n * u: the rescaled image of the n-th original term."""
        return self.mu * self.lam**n * u

    def to_json(self):
        from .rational import fmt_rat

        return {
            "lambda": fmt_rat(self.lam),
            "mu": fmt_rat(self.mu),
            "normalized": self.normalized.to_json(),
            "source": self.source.to_json(),
            "degenerate": self.degenerate,
        }

    @classmethod
    def from_json(cls, obj):
        return cls(to_rat(obj["lambda"]), to_rat(obj["mu"]), Lrs.from_json(obj["normalized"]),
                   Lrs.from_json(obj["source"]), bool(obj.get("degenerate", False)))


def normalize(lrs):
    """Rescale to v_n = mu * lam^n * u_n so the gadget budgets are met.

    lam = min(1/(a(5k+5)), 1/(5k+5)) and mu = min(a', 1) / (4 k^(2k+2) b)
    where a = sum|a_i|, a' the rescaled mass and b = max|b_j|.

    Two boundary cases the closed formulas do not cover:
      * if the rescaled mass lands exactly on 1/(5k+5) (only a_1 non-zero
        with |a_1| >= 1) lam is halved so the strict bound holds;
      * if all coefficients vanish but some b_j does not, min(a', 1) = 0
        would give mu = 0; we use mu = 1/(8 k^(2k+2) b) instead and flag
        the result as degenerate (the a'/4 margin cannot be met).
    Zero initial values use mu = 1.
    """
    k = lrs.order
    a = lrs.coeff_mass
    cap = growth_cap(k)
    lam = cap if a == 0 else min(1 / (a * (5 * k + 5)), cap)

    def rescale(lam):
        return tuple(lam ** (i + 1) * c for i, c in enumerate(lrs.coefficients))

    alphas = rescale(lam)
    if sum(abs(c) for c in alphas) >= cap:
        lam /= 2
        alphas = rescale(lam)
    a_new = sum((abs(c) for c in alphas), Fraction(0))

    b = max(abs(x) for x in lrs.initials)
    degenerate = False
    if b == 0:
        mu = Fraction(1)
        degenerate = a == 0
    elif a_new == 0:
        mu = 1 / (8 * k ** (2 * k + 2) * b)
        degenerate = True
    else:
        mu = min(a_new, Fraction(1)) / (4 * k ** (2 * k + 2) * b)

    betas = tuple(mu * lam**j * x for j, x in enumerate(lrs.initials))
    return Normalization(lam, mu, Lrs(alphas, betas), lrs, degenerate)


REFERENCE_NAMES = ("reference-negative", "reference-nonnegative", "fibonacci")


def reference(name):
    """One of the bundled example sequences (see REFERENCE_NAMES)."""
    import json
    from importlib import resources

    if name not in REFERENCE_NAMES:
        raise ValueError(f"unknown reference sequence {name!r}")
    text = resources.files(__package__).joinpath("data", f"{name}.json").read_text("utf-8")
    return Lrs.from_json(json.loads(text))
