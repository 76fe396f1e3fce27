"""Finite weighted MDPs with exact rational probabilities and weights.

States and actions are plain strings.  Each enabled (state, action) pair has
one weight and a distribution over successors.  A state without actions is
terminal; an *absorbing* state has a single prob-1 self-loop of weight 0.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm

from .rational import fmt_rat, to_rat

MARK_NAMES = ("goal", "fail", "trap")


@dataclass(frozen=True)
class Mdp:
    states: tuple
    initial: str
    enabled: dict  # state -> tuple of actions
    trans: dict  # (state, action) -> tuple of (prob, succ)
    weight: dict  # (state, action) -> Fraction
    marks: dict = field(default_factory=dict)  # mark -> tuple of states
    # Second weight function, only used by the two-sided target.
    fail_weight: dict = None

    def actions(self, state):
        return self.enabled.get(state, ())

    def is_terminal(self, state):
        return not self.enabled.get(state)

    def is_absorbing(self, state):
        acts = self.enabled.get(state, ())
        if len(acts) != 1:
            return False
        key = (state, acts[0])
        return self.trans[key] == ((Fraction(1), state),) and self.weight[key] == 0

    def marked(self, mark):
        return self.marks.get(mark, ())

    def has_integer_weights(self):
        ws = list(self.weight.values())
        if self.fail_weight:
            ws += list(self.fail_weight.values())
        return all(w.denominator == 1 for w in ws)

    def pairs(self):
        for q in self.states:
            for a in self.actions(q):
                yield q, a

    def to_json(self):
        transitions = []
        for q, a in self.pairs():
            entry = {
                "from": q,
                "action": a,
                "weight": fmt_rat(self.weight[(q, a)]),
                "branches": [{"prob": fmt_rat(p), "to": r} for p, r in self.trans[(q, a)]],
            }
            if self.fail_weight is not None:
                entry["fail_weight"] = fmt_rat(self.fail_weight[(q, a)])
            transitions.append(entry)
        return {
            "states": list(self.states),
            "initial": self.initial,
            "marks": {m: list(v) for m, v in sorted(self.marks.items())},
            "transitions": transitions,
        }

    @classmethod
    def from_json(cls, obj):
        b = MdpBuilder(obj["initial"])
        for q in obj["states"]:
            b.add_state(q)
        two_sided = False
        for t in obj["transitions"]:
            fw = t.get("fail_weight")
            two_sided = two_sided or fw is not None
            b.add_action(
                t["from"],
                t["action"],
                to_rat(t["weight"]),
                [(to_rat(br["prob"]), br["to"]) for br in t["branches"]],
                fail_weight=None if fw is None else to_rat(fw),
            )
        for m, qs in obj.get("marks", {}).items():
            for q in qs:
                b.mark(m, q)
        return b.build(two_sided=two_sided)


class MdpBuilder:
    """Mutable staging area; ``build()`` freezes it into an Mdp."""

    def __init__(self, initial=None):
        self.initial = initial
        self.states = []
        self._seen = set()
        self.enabled = {}
        self.trans = {}
        self.weight = {}
        self.fail_weight = {}
        self.marks = {}

    def add_state(self, q):
        if q not in self._seen:
            self._seen.add(q)
            self.states.append(q)
            self.enabled.setdefault(q, [])
        return q

    def add_action(self, q, action, weight, branches, fail_weight=None):
        self.add_state(q)
        if (q, action) in self.trans:
            raise ValueError(f"duplicate action {action!r} at state {q!r}")
        merged = {}
        order = []
        for p, r in branches:
            p = to_rat(p)
            if p == 0:
                continue
            self.add_state(r)
            if r not in merged:
                order.append(r)
                merged[r] = Fraction(0)
            merged[r] += p
        self.enabled[q].append(action)
        self.trans[(q, action)] = tuple((merged[r], r) for r in order)
        self.weight[(q, action)] = to_rat(weight)
        if fail_weight is not None:
            self.fail_weight[(q, action)] = to_rat(fail_weight)

    def absorbing(self, q):
        self.add_action(q, "loop", 0, [(1, q)])

    def mark(self, mark, q):
        self.add_state(q)
        lst = self.marks.setdefault(mark, [])
        if q not in lst:
            lst.append(q)

    def build(self, two_sided=False):
        if self.initial is None:
            raise ValueError("no initial state")
        self.add_state(self.initial)
        fw = None
        if two_sided:
            fw = dict(self.fail_weight)
            missing = [k for k in self.trans if k not in fw]
            if missing:
                raise ValueError(f"fail weight missing for {missing[0]}")
        return Mdp(
            states=tuple(self.states),
            initial=self.initial,
            enabled={q: tuple(self.enabled[q]) for q in self.states},
            trans=dict(self.trans),
            weight=dict(self.weight),
            marks={m: tuple(v) for m, v in self.marks.items()},
            fail_weight=fw,
        )

    @classmethod
    def from_mdp(cls, mdp):
        b = cls(mdp.initial)
        for q in mdp.states:
            b.add_state(q)
        for q, a in mdp.pairs():
            fw = None if mdp.fail_weight is None else mdp.fail_weight[(q, a)]
            b.add_action(q, a, mdp.weight[(q, a)], mdp.trans[(q, a)], fail_weight=fw)
        for m, qs in mdp.marks.items():
            for q in qs:
                b.mark(m, q)
        return b

    def remove_actions(self, q):
        for a in self.enabled.get(q, []):
            del self.trans[(q, a)]
            del self.weight[(q, a)]
            self.fail_weight.pop((q, a), None)
        self.enabled[q] = []


def validate(mdp, reachability=True):
    """Return a list of human-readable violations (empty if the MDP is sound)."""
    out = []
    names = set(mdp.states)
    if len(names) != len(mdp.states):
        out.append("duplicate state names")
    if mdp.initial not in names:
        out.append(f"initial state {mdp.initial!r} is not a state")
    for q, a in mdp.pairs():
        branches = mdp.trans.get((q, a))
        if branches is None:
            out.append(f"{q}/{a}: enabled but has no distribution")
            continue
        if (q, a) not in mdp.weight:
            out.append(f"{q}/{a}: missing weight")
        total = Fraction(0)
        for p, r in branches:
            if not (0 < p <= 1):
                out.append(f"{q}/{a}: probability {fmt_rat(p)} to {r} outside (0,1]")
            if r not in names:
                out.append(f"{q}/{a}: successor {r!r} is not a state")
            total += p
        if total != 1:
            out.append(f"{q}/{a}: sum = {fmt_rat(total)} ≠ 1")
    for key in mdp.trans:
        if key[1] not in mdp.actions(key[0]):
            out.append(f"{key[0]}/{key[1]}: distribution for an action that is not enabled")
    for m, qs in mdp.marks.items():
        for q in qs:
            if q not in names:
                out.append(f"mark {m!r} names unknown state {q!r}")
    if reachability and mdp.initial in names:
        seen = reachable(mdp, [mdp.initial])
        for q in mdp.states:
            if q not in seen:
                out.append(f"state {q!r} unreachable from {mdp.initial!r}")
    return out


def reachable(mdp, sources):
    seen = set(sources)
    stack = list(sources)
    while stack:
        q = stack.pop()
        for a in mdp.actions(q):
            for _, r in mdp.trans[(q, a)]:
                if r not in seen:
                    seen.add(r)
                    stack.append(r)
    return seen


def require_integer_weights(mdp):
    if not mdp.has_integer_weights():
        bad = next(k for k, w in mdp.weight.items() if w.denominator != 1)
        raise ValueError(f"non-integer weight {fmt_rat(mdp.weight[bad])} at {bad[0]}/{bad[1]}")


def integerize_weights(mdp, theta):
    """Scale every weight by the lcm L of weight denominators; returns (mdp', theta*L)."""
    dens = [w.denominator for w in mdp.weight.values()]
    if mdp.fail_weight:
        dens += [w.denominator for w in mdp.fail_weight.values()]
    scale = lcm(*dens) if dens else 1
    if scale == 1:
        return mdp, to_rat(theta)
    fw = None
    if mdp.fail_weight is not None:
        fw = {k: w * scale for k, w in mdp.fail_weight.items()}
    scaled = Mdp(
        states=mdp.states,
        initial=mdp.initial,
        enabled=mdp.enabled,
        trans=mdp.trans,
        weight={k: w * scale for k, w in mdp.weight.items()},
        marks=mdp.marks,
        fail_weight=fw,
    )
    return scaled, to_rat(theta) * scale


def unary_expand(mdp):
    """Split every weight of magnitude w >= 2 into w unit steps.

    The action keeps its name and now moves one unit into a fresh
    deterministic chain of w-1 states, the last of which performs the
    original probabilistic branch with one more unit step.  Weights of the
    result lie in {-1, 0, +1}.  The counter moves monotonically along the
    chain, so "accumulated weight < 0 for the first time" happens on the
    chain exactly when it would have happened on the original step.
    """
    require_integer_weights(mdp)
    if mdp.fail_weight is not None:
        raise ValueError("unary expansion of two-weight MDPs is not supported")
    b = MdpBuilder(mdp.initial)
    for q in mdp.states:
        b.add_state(q)
    for q, a in mdp.pairs():
        w = int(mdp.weight[(q, a)])
        branches = mdp.trans[(q, a)]
        if abs(w) <= 1:
            b.add_action(q, a, w, branches)
            continue
        unit = 1 if w > 0 else -1
        chain = [f"{q}~{a}~{i}" for i in range(1, abs(w))]
        for c in chain:
            if c in b._seen:
                raise ValueError(f"name collision while expanding: {c!r}")
        b.add_action(q, a, unit, [(1, chain[0])])
        for c, nxt in zip(chain, chain[1:]):
            b.add_action(c, "unit", unit, [(1, nxt)])
        b.add_action(chain[-1], "unit", unit, branches)
    for m, qs in mdp.marks.items():
        for q in qs:
            b.mark(m, q)
    return b.build()


def to_prism(mdp):
    """PRISM-style text: one module, integer state variable, weights as rewards.

    Negative rewards are emitted verbatim; the text is meant for
    cross-checking in external tools that accept them.
    """
    require_integer_weights(mdp)
    idx = {q: i for i, q in enumerate(mdp.states)}
    lines = ["mdp", "", "module reduction"]
    lines.append(f"  s : [0..{len(mdp.states) - 1}] init {idx[mdp.initial]};")
    for q, a in mdp.pairs():
        rhs = " + ".join(f"{fmt_rat(p)}:(s'={idx[r]})" for p, r in mdp.trans[(q, a)])
        lines.append(f"  [{_prism_ident(a)}] s={idx[q]} -> {rhs}; // {q}")
    lines.append("endmodule")
    lines.append("")
    for name, wmap in (("weight", mdp.weight), ("fail_weight", mdp.fail_weight)):
        if wmap is None:
            continue
        lines.append(f'rewards "{name}"')
        for q, a in mdp.pairs():
            w = wmap[(q, a)]
            if w != 0:
                lines.append(f"  [{_prism_ident(a)}] s={idx[q]} : {fmt_rat(w)};")
        lines.append("endrewards")
        lines.append("")
    for m in sorted(mdp.marks):
        qs = mdp.marks[m]
        cond = " | ".join(f"s={idx[q]}" for q in qs) or "false"
        lines.append(f'label "{m}" = {cond};')
    lines.append("")
    return "\n".join(lines)


def _prism_ident(a):
    return "".join(ch if ch.isalnum() or ch == "_" else "_" for ch in a)
