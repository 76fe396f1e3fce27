"""End-to-end reductions: Lrs -> (MDP, threshold, comparison direction).

Every target is built from one of four direct constructions (see
``threshold.KINDS``) plus an optional wrapper or derived transformation.
The optimal value of the emitted MDP beats the threshold strictly in the
stated direction iff the sequence has a negative term.
"""

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

from . import gadgets
from . import threshold as th
from .lrs import Lrs, check_assumption, normalize
from .mdp import Mdp, MdpBuilder, unary_expand, validate
from .rational import fmt_rat, to_rat

GREATER = "strict-greater"
LESS = "strict-less"


class ReductionTarget(str, Enum):
    MAX_TERMINATION = "max-termination"
    MIN_TERMINATION = "min-termination"
    ONE_COUNTER_MAX_TERMINATION = "one-counter-max-termination"
    ONE_COUNTER_MIN_TERMINATION = "one-counter-min-termination"
    ENERGY_MAX = "energy-max"
    ENERGY_MIN = "energy-min"
    COST_MAX = "cost-max"
    COST_MIN = "cost-min"
    MAX_TERMINATION_TIME = "max-termination-time"
    MIN_TERMINATION_TIME = "min-termination-time"
    PARTIAL_SSPP_MAX = "partial-sspp-max"
    CONDITIONAL_SSPP_MAX = "conditional-sspp-max"
    TWO_SIDED_PARTIAL = "two-sided-partial"
    CVAR_MAX = "cvar-max"

    @classmethod
    def parse(cls, name):
        aliases = {"cvar": cls.CVAR_MAX, "partial": cls.PARTIAL_SSPP_MAX,
                   "conditional": cls.CONDITIONAL_SSPP_MAX, "two-sided": cls.TWO_SIDED_PARTIAL}
        if name in aliases:
            return aliases[name]
        member = cls.__members__.get(name.upper().replace("-", "_"))
        if member is not None:
            return member
        try:
            return cls(name)
        except ValueError:
            names = ", ".join(t.value for t in cls)
            raise ValueError(f"unknown target {name!r} (choose from {names})") from None

    @property
    def kind(self):
        """The direct construction underneath this target."""
        T = ReductionTarget
        if self in (T.MAX_TERMINATION, T.ONE_COUNTER_MAX_TERMINATION, T.ENERGY_MIN,
                    T.COST_MAX, T.MIN_TERMINATION_TIME):
            return th.TERM_MAX
        if self in (T.MIN_TERMINATION, T.ONE_COUNTER_MIN_TERMINATION, T.ENERGY_MAX,
                    T.COST_MIN, T.MAX_TERMINATION_TIME):
            return th.TERM_MIN
        if self == T.CVAR_MAX:
            return th.CVAR_KIND
        return th.PARTIAL_KIND


class TriviallyNegative(ValueError):
    """Some initial value is negative, so the sequence is not positive."""

    def __init__(self, index, value):
        self.index = index
        self.value = value
        super().__init__(f"trivially negative at n={index}: u_{index} = {fmt_rat(value)} < 0")


@dataclass(frozen=True)
class ReductionOutput:
    target: ReductionTarget
    direction: str
    theta: Fraction
    mdp: Mdp
    meta: dict = field(default_factory=dict)
    cvar_p: Fraction = None

    def to_json(self):
        obj = {"target": self.target.value, "direction": self.direction,
               "theta": fmt_rat(self.theta)}
        if self.cvar_p is not None:
            obj["cvar_p"] = fmt_rat(self.cvar_p)
        obj["mdp"] = self.mdp.to_json()
        obj["meta"] = self.meta
        return obj

    @classmethod
    def from_json(cls, obj):
        p = obj.get("cvar_p")
        return cls(
            target=ReductionTarget(obj["target"]),
            direction=obj["direction"],
            theta=to_rat(obj["theta"]),
            mdp=Mdp.from_json(obj["mdp"]),
            meta=obj.get("meta", {}),
            cvar_p=None if p is None else to_rat(p),
        )

    @property
    def kind(self):
        return self.target.kind

    def normalization(self):
        """Rebuild the exact normalisation recorded in meta."""
        return normalize(Lrs.from_json(self.meta["source"]))


def prepare(lrs):
    """Normalise, refusing negative initial values (positivity fails at once)."""
    for j, b in enumerate(lrs.initials):
        if b < 0:
            raise TriviallyNegative(j, b)
    norm = normalize(lrs)
    bad = check_assumption(norm.normalized, strict=True)
    if bad and not norm.degenerate:
        raise AssertionError(f"normalisation violated its own bounds: {bad}")
    return norm


def direct_mdp(alphas, betas, kind):
    """Assemble the MDP of one direct construction."""
    alphas = tuple(alphas)
    if kind == th.TERM_MAX:
        rec = gadgets.build_recurrence(alphas, "trap")
        init = gadgets.build_termination_init_values(betas)
    elif kind == th.TERM_MIN:
        rec = gadgets.build_recurrence(alphas, "pretrap")
        init = gadgets.build_min_termination_init_values(betas)
    elif kind == th.PARTIAL_KIND:
        rec = gadgets.build_recurrence(alphas, "goal")
        init = gadgets.build_partial_init_values(betas)
    elif kind == th.CVAR_KIND:
        rec = gadgets.build_recurrence(alphas, "goal")
        init = gadgets.build_cvar_init_values(betas, sum(abs(a) for a in alphas))
    else:
        raise ValueError(f"unknown kind {kind!r}")
    return gadgets.assemble(gadgets.build_initial(), rec, init)


def _meta(norm, kind, objective, **extra):
    k = norm.normalized.order
    sink = {th.TERM_MAX: "trap", th.TERM_MIN: "pretrap"}.get(kind, "goal")
    meta = {
        "k": k,
        "lambda": fmt_rat(norm.lam),
        "mu": fmt_rat(norm.mu),
        "normalized": norm.normalized.to_json(),
        "source": norm.source.to_json(),
        "kind": kind,
        "d_offset": th.shape(kind, k).offset(k),
        "objective": objective,
        "ports": {"s_init": "s_init", "choice": "choice", "t": "t", "s": "s", "sink": sink},
    }
    for key, v in extra.items():
        meta[key] = fmt_rat(v) if isinstance(v, Fraction) else v
    return meta


def _direct(lrs, kind):
    norm = prepare(lrs)
    if kind == th.CVAR_KIND and norm.degenerate:
        raise ValueError("the CVaR construction needs a non-zero coefficient vector")
    al, be = norm.normalized.coefficients, norm.normalized.initials
    return norm, direct_mdp(al, be, kind), th.theta_for(al, be, kind)


def _check(out):
    bad = validate(out.mdp)
    if bad:
        raise AssertionError(f"emitted MDP is invalid: {bad[:3]}")
    return out


def reduce(lrs, target):
    """Build the decision instance for ``target``."""
    T = ReductionTarget
    target = T.parse(target) if isinstance(target, str) else target
    if target == T.CONDITIONAL_SSPP_MAX:
        return wrap_conditional(reduce(lrs, T.PARTIAL_SSPP_MAX))
    if target == T.TWO_SIDED_PARTIAL:
        return wrap_two_sided(lrs)
    if target == T.CVAR_MAX:
        return wrap_cvar(lrs)
    if target in (T.MAX_TERMINATION_TIME, T.MIN_TERMINATION_TIME):
        return derive_time(lrs, "max" if target == T.MAX_TERMINATION_TIME else "min")

    kind = target.kind
    if kind in (th.TERM_MAX, th.TERM_MIN):
        base_target = T.MAX_TERMINATION if kind == th.TERM_MAX else T.MIN_TERMINATION
        norm, mdp, theta = _direct(lrs, kind)
        mode = "max" if kind == th.TERM_MAX else "min"
        base = _check(ReductionOutput(
            base_target, GREATER if mode == "max" else LESS, theta, mdp,
            _meta(norm, kind, f"Pr^{mode}(accumulated weight < 0 eventually)")))
        if target == base_target:
            return base
        if target in (T.ONE_COUNTER_MAX_TERMINATION, T.ONE_COUNTER_MIN_TERMINATION):
            return derive_one_counter(base)
        if target in (T.ENERGY_MAX, T.ENERGY_MIN):
            return derive_energy(base)
        return derive_cost(base)

    norm, mdp, theta = _direct(lrs, th.PARTIAL_KIND)
    return _check(ReductionOutput(
        T.PARTIAL_SSPP_MAX, GREATER, theta, mdp,
        _meta(norm, th.PARTIAL_KIND, "PE^max(accumulated weight on reaching goal, 0 otherwise)")))


def _require(out, *targets):
    if out.target not in targets:
        names = ", ".join(t.value for t in targets)
        raise ValueError(f"expected a {names} instance, got {out.target.value}")


def wrap_conditional(out):
    """Partial -> conditional expectation with the same threshold.

    s_cond moves with weight 0 to the old initial state and to goal (1/2
    each); the old goal becomes goal_prev, which steps to goal with weight
    +theta.  For every scheduler CE = (PE + Pr(goal) theta) / (1 + Pr(goal)),
    so CE > theta iff PE > theta.
    """
    _require(out, ReductionTarget.PARTIAL_SSPP_MAX)
    old = out.mdp
    ren = {"goal": "goal_prev"}
    b = MdpBuilder("s_cond")
    b.add_action("s_cond", "split", 0, [(Fraction(1, 2), old.initial), (Fraction(1, 2), "goal")])
    for q in old.states:
        b.add_state(ren.get(q, q))
    for q, a in old.pairs():
        b.add_action(ren.get(q, q), a, old.weight[(q, a)],
                     [(p, ren.get(r, r)) for p, r in old.trans[(q, a)]])
    b.add_action("goal_prev", "bonus", out.theta, [(1, "goal")])
    b.mark("goal", "goal")
    for m, qs in old.marks.items():
        if m != "goal":
            for q in qs:
                b.mark(m, q)
    meta = dict(out.meta)
    meta["objective"] = "CE^max(accumulated weight on reaching goal | goal reached)"
    meta["partial_theta"] = fmt_rat(out.theta)
    meta["ports"] = dict(meta["ports"], s_init="s_cond", inner_init=old.initial,
                         goal_prev="goal_prev")
    return _check(ReductionOutput(ReductionTarget.CONDITIONAL_SSPP_MAX, GREATER,
                                  out.theta, b.build(), meta))


def conditional_identity(pe, pr_goal, theta):
    """CE of the wrapped MDP from PE and Pr(goal) of the inner one."""
    return (pe + pr_goal * theta) / (1 + pr_goal)


def time_threshold(termination_theta):
    """11 - 3 theta: expected termination time when Pr(terminate) = theta."""
    return 11 - 3 * to_rat(termination_theta)


def expected_two_sided_time(alpha_sum):
    """T = 2 + 2/(1-a): expected steps to absorption in the two-sided MDP."""
    a = to_rat(alpha_sum)
    return 2 + 2 / (1 - a)


def two_sided_base_mdp(alphas, betas):
    """The partial-expectation MDP with the exit/echo initial-value gadget."""
    a = sum((abs(x) for x in alphas), Fraction(0))
    return gadgets.assemble(gadgets.build_initial(), gadgets.build_recurrence(alphas, "goal"),
                            gadgets.build_two_sided_init_values(betas, a))


def wrap_two_sided(lrs):
    """Two weight functions, both non-negative: wgt + k on the way to goal,
    k on the way to fail.  E(X) = PE + k T for every scheduler, so the
    threshold becomes theta + k T."""
    norm = prepare(lrs)
    al, be = norm.normalized.coefficients, norm.normalized.initials
    k = len(al)
    base = two_sided_base_mdp(al, be)
    b = MdpBuilder(base.initial)
    for q in base.states:
        b.add_state(q)
    for q, a in base.pairs():
        w = base.weight[(q, a)]
        if w < -k:
            raise AssertionError(f"weight {w} below -k at {q}/{a}")
        b.add_action(q, a, w + k, base.trans[(q, a)], fail_weight=k)
    for m, qs in base.marks.items():
        for q in qs:
            b.mark(m, q)
    alpha = sum((abs(x) for x in al), Fraction(0))
    T = expected_two_sided_time(alpha)
    theta = th.theta_partial(al, be)[0]
    meta = _meta(norm, th.PARTIAL_KIND,
                 "E^max(X), X = goal-weight sum on goal paths, fail-weight sum on fail paths",
                 partial_theta=theta, alpha_sum=alpha, expected_time=T, weight_shift=k)
    mdp = b.build(two_sided=True)
    return _check(ReductionOutput(ReductionTarget.TWO_SIDED_PARTIAL, GREATER,
                                  theta + k * T, mdp, meta))


def wrap_cvar(lrs):
    """s_cvar moves with weight 0 to s_init (1/3) or straight to goal (2/3).
    At least 2/3 of the mass ends with weight 0, so VaR_1/2 = 0 and
    CVaR_1/2 = 2 E(min(X, 0)) = (2/3) E_inner(min(X, 0)) for every scheduler."""
    norm, inner, theta_aux = _direct(lrs, th.CVAR_KIND)
    b = MdpBuilder.from_mdp(inner)
    b.initial = "s_cvar"
    b.add_action("s_cvar", "split", 0, [(Fraction(1, 3), inner.initial), (Fraction(2, 3), "goal")])
    meta = _meta(norm, th.CVAR_KIND, "CVaR^max_1/2(accumulated weight on reaching goal)",
                 theta_aux=theta_aux, alpha_sum=sum(abs(x) for x in norm.normalized.coefficients))
    meta["ports"] = dict(meta["ports"], s_init="s_cvar", inner_init=inner.initial)
    return _check(ReductionOutput(ReductionTarget.CVAR_MAX, GREATER, Fraction(2, 3) * theta_aux,
                                  b.build(), meta, cvar_p=Fraction(1, 2)))


def derive_energy(out):
    """Energy = never dropping below 0 = complement of termination."""
    _require(out, ReductionTarget.MAX_TERMINATION, ReductionTarget.MIN_TERMINATION)
    meta = dict(out.meta, termination_theta=fmt_rat(out.theta))
    if out.target == ReductionTarget.MIN_TERMINATION:
        meta["objective"] = "Pr^max(accumulated weight >= 0 forever)"
        return _check(ReductionOutput(ReductionTarget.ENERGY_MAX, GREATER, 1 - out.theta,
                                      out.mdp, meta))
    meta["objective"] = "Pr^min(accumulated weight >= 0 forever)"
    return _check(ReductionOutput(ReductionTarget.ENERGY_MIN, LESS, 1 - out.theta, out.mdp, meta))


def derive_cost(out):
    """Threshold on Pr(accumulated weight < 0) measured at the trap states.

    In the max construction every path ends in trap and weights never rise
    after the choice, so terminating iff the weight at trap is < 0.  The min
    construction also ends paths in a weight -1 drain loop that never meets
    trap; there the event is "total accumulated weight < 0" (the drain
    drives it to -infinity, trap paths keep their weight at trap).
    """
    _require(out, ReductionTarget.MAX_TERMINATION, ReductionTarget.MIN_TERMINATION)
    meta = dict(out.meta, goal=["trap"])
    if out.target == ReductionTarget.MAX_TERMINATION:
        meta["objective"] = "Pr^max(accumulated weight on reaching Goal < 0), Goal = {trap}"
        return _check(ReductionOutput(ReductionTarget.COST_MAX, GREATER, out.theta, out.mdp, meta))
    meta["objective"] = "Pr^min(total accumulated weight < 0), Goal = {trap}"
    return _check(ReductionOutput(ReductionTarget.COST_MIN, LESS, out.theta, out.mdp, meta))


def derive_time(lrs, mode):
    """Expected termination time of a re-timed termination MDP: 8 + 3 p with
    p = Pr(reach trap) = 1 - Pr(terminate), i.e. 11 - 3 Pr(terminate).

    mode "max" starts from the min-termination MDP: E^max(T) > 11 - 3 theta
    iff Pr^min(terminate) < theta.  mode "min" starts from the max-termination
    MDP with direction strict-less.
    """
    if mode not in ("max", "min"):
        raise ValueError("mode must be 'max' or 'min'")
    kind = th.TERM_MIN if mode == "max" else th.TERM_MAX
    norm, term, theta = _direct(lrs, kind)
    mdp = gadgets.build_time_variant(term)
    meta = _meta(norm, kind, f"E^{mode}(steps until accumulated weight < 0)",
                 termination_theta=theta)
    meta["ports"] = dict(meta["ports"], choice="s_init")
    target = (ReductionTarget.MAX_TERMINATION_TIME if mode == "max"
              else ReductionTarget.MIN_TERMINATION_TIME)
    return _check(ReductionOutput(target, GREATER if mode == "max" else LESS,
                                  time_threshold(theta), mdp, meta))


def derive_one_counter(out):
    """Unary expansion: every step changes the counter by -1, 0 or +1."""
    _require(out, ReductionTarget.MAX_TERMINATION, ReductionTarget.MIN_TERMINATION)
    target = (ReductionTarget.ONE_COUNTER_MAX_TERMINATION
              if out.target == ReductionTarget.MAX_TERMINATION
              else ReductionTarget.ONE_COUNTER_MIN_TERMINATION)
    meta = dict(out.meta, expanded_from=len(out.mdp.states))
    return _check(ReductionOutput(target, out.direction, out.theta, unary_expand(out.mdp), meta))
