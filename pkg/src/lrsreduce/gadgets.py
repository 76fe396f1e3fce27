"""MDP fragments ("gadgets") and their assembly into full reduction MDPs.

State names used throughout:

    s_init, choice            initial component (actions step / tau / sigma)
    t, s                      the two anchors whose value difference encodes u_n
    t1..tk, s1..sk            recurrence helpers (action "back", weight -i)
    trap / goal / fail        sinks
    x<j>, y<j>                initial-value helpers behind gamma<j> / delta<j>

Probabilities are always exact Fractions; every constructor returns a
fragment whose distributions sum to 1.
"""

from dataclasses import dataclass
from fractions import Fraction

from .mdp import Mdp, MdpBuilder, validate
from .rational import to_rat

HALF = Fraction(1, 2)


@dataclass(frozen=True)
class Gadget:
    mdp: Mdp
    ports: dict  # role -> state name

    def validate(self):
        out = validate(self.mdp, reachability=False)
        names = list(self.ports.values())
        if len(set(names)) != len(names):
            out.append("port states are not distinct")
        for role, q in self.ports.items():
            if q not in self.mdp.states:
                out.append(f"port {role!r} names missing state {q!r}")
        return out

    def to_json(self):
        obj = self.mdp.to_json()
        obj["ports"] = dict(sorted(self.ports.items()))
        return obj

    @classmethod
    def from_json(cls, obj):
        return cls(Mdp.from_json(obj), dict(obj["ports"]))


def _gadget(b, ports):
    b.initial = b.initial or next(iter(ports.values()))
    return Gadget(b.build(), dict(ports))


def _rats(xs):
    return tuple(to_rat(x) for x in xs)


def _check_betas(betas, cap, what):
    for j, b in enumerate(betas):
        if b < 0:
            raise ValueError(f"initial value b'_{j} = {b} is negative")
        if not b < cap:
            raise ValueError(f"initial value b'_{j} = {b} violates the {what} bound {cap}")


def base_prob(k, j):
    """1/(2 k^(2(k-j))): goal probability of the partial-expectation helpers."""
    return Fraction(1, 2 * k ** (2 * (k - j)))


def build_initial():
    """s_init loops with weight +1 and exits to choice w.p. 1/2 each step,
    so choice is reached with accumulated weight w with probability (1/2)^w."""
    b = MdpBuilder("s_init")
    b.add_action("s_init", "step", 1, [(HALF, "s_init"), (HALF, "choice")])
    b.add_action("choice", "tau", 0, [(1, "t")])
    b.add_action("choice", "sigma", 0, [(1, "s")])
    return _gadget(b, {"s_init": "s_init", "choice": "choice", "t": "t", "s": "s"})


def build_recurrence(alphas, sink_name="trap"):
    """gamma at t / delta at s push the weight down by i with probability |a'_i|,
    crossing to the other anchor when a'_i < 0; the rest goes to the sink.

    sink "trap" is absorbing, "goal" terminal; "pretrap" is left without
    actions for the min-termination initial-value gadget to complete.
    """
    alphas = _rats(alphas)
    k = len(alphas)
    mass = sum(abs(a) for a in alphas)
    if not mass < 1:
        raise ValueError(f"coefficient mass {mass} must be < 1")
    if sink_name not in ("trap", "goal", "pretrap"):
        raise ValueError("sink must be 'trap', 'goal' or 'pretrap'")
    b = MdpBuilder("t")
    for anchor, other in (("t", "s"), ("s", "t")):
        act = "gamma" if anchor == "t" else "delta"
        branches = []
        for i, a in enumerate(alphas, start=1):
            if a > 0:
                branches.append((a, f"{anchor}{i}"))
            elif a < 0:
                branches.append((-a, f"{other}{i}"))
        branches.append((1 - mass, sink_name))
        b.add_action(anchor, act, 0, branches)
    for anchor in ("t", "s"):
        for i, a in enumerate(alphas, start=1):
            if a != 0:  # helpers for zero coefficients would be unreachable
                b.add_action(f"{anchor}{i}", "back", -i, [(1, anchor)])
    if sink_name == "trap":
        b.absorbing("trap")
        b.mark("trap", "trap")
    elif sink_name == "goal":
        b.add_state("goal")
        b.mark("goal", "goal")
    else:
        # pretrap is completed by the min-termination initial-value gadget
        b.add_state(sink_name)
    return _gadget(b, {"t": "t", "s": "s", "sink": sink_name})


def build_termination_init_values(betas):
    """gamma_j reaches x_j w.p. (k-j)/(k+1) + b'_j, delta_j reaches y_j w.p.
    (k-j)/(k+1); x_j / y_j drop the weight by j+1 into trap.  From weight j
    this terminates exactly through x_j / y_j."""
    betas = _rats(betas)
    k = len(betas)
    _check_betas(betas, Fraction(1, k + 1), "1/(k+1)")
    b = MdpBuilder("t")
    for j, beta in enumerate(betas):
        base = Fraction(k - j, k + 1)
        b.add_action("t", f"gamma{j}", 0, [(base + beta, f"x{j}"), (1 - base - beta, "trap")])
        b.add_action("s", f"delta{j}", 0, [(base, f"y{j}"), (1 - base, "trap")])
        b.add_action(f"x{j}", "drop", -(j + 1), [(1, "trap")])
        b.add_action(f"y{j}", "drop", -(j + 1), [(1, "trap")])
    b.absorbing("trap")
    b.mark("trap", "trap")
    return _gadget(b, {"t": "t", "s": "s", "sink": "trap"})


def build_min_termination_init_values(betas, literal=False):
    """Initial values for the minimal-termination variant.

    gamma_j reaches x_j w.p. (j+1)/(k+1) + b'_j and x_j / y_j step into the
    absorbing trap with weight -j.  The recurrence sink becomes ``pretrap``,
    which steps into trap with weight -k.

    The remaining probability of gamma_j / delta_j goes to ``drain``, a
    self-loop of weight -1 that terminates surely from any weight.  With
    ``literal=True`` it goes to ``pretrap`` instead; then gamma_j is worth 0
    at every weight >= k and beats gamma for a minimiser, so the recurrence
    is never exercised (kept only to demonstrate that defect).
    """
    betas = _rats(betas)
    k = len(betas)
    _check_betas(betas, Fraction(1, k + 1), "1/(k+1)")
    rest = "pretrap" if literal else "drain"
    b = MdpBuilder("t")
    for j, beta in enumerate(betas):
        base = Fraction(j + 1, k + 1)
        b.add_action("t", f"gamma{j}", 0, [(base + beta, f"x{j}"), (1 - base - beta, rest)])
        b.add_action("s", f"delta{j}", 0, [(base, f"y{j}"), (1 - base, rest)])
        b.add_action(f"x{j}", "drop", -j, [(1, "trap")])
        b.add_action(f"y{j}", "drop", -j, [(1, "trap")])
    b.add_action("pretrap", "drop", -k, [(1, "trap")])
    if not literal:
        b.add_action("drain", "drop", -1, [(1, "drain")])
    b.absorbing("trap")
    b.mark("trap", "trap")
    return _gadget(b, {"t": "t", "s": "s", "sink": "pretrap"})


def build_partial_init_values(betas):
    """gamma_j (weight k-j) leads to x_j, which reaches goal w.p.
    1/(2k^(2(k-j))) + b'_j and fail otherwise; delta_j / y_j likewise without b'_j."""
    betas = _rats(betas)
    k = len(betas)
    _check_betas(betas, Fraction(1, 4 * k ** (2 * k + 2)), "1/(4k^(2k+2))")
    b = MdpBuilder("t")
    for j, beta in enumerate(betas):
        g = base_prob(k, j)
        b.add_action("t", f"gamma{j}", k - j, [(1, f"x{j}")])
        b.add_action("s", f"delta{j}", k - j, [(1, f"y{j}")])
        b.add_action(f"x{j}", "exit", 0, [(g + beta, "goal"), (1 - g - beta, "fail")])
        b.add_action(f"y{j}", "exit", 0, [(g, "goal"), (1 - g, "fail")])
    for q in ("goal", "fail"):
        b.add_state(q)
        b.mark(q, q)
    return _gadget(b, {"t": "t", "s": "s", "sink": "goal"})


def build_two_sided_init_values(betas, alpha_sum):
    """Same goal/fail probabilities and weights as the partial gadget, but
    absorption is spread over an exit/echo loop whose exit probability
    alternates between 1-a and 0 - the same rhythm as gamma/delta.

    gamma_j itself is the first exit step (weight k-j): goal w.p.
    (1-a)(g_j + b'_j), fail w.p. (1-a)(1 - g_j - b'_j), else the echo state
    xe_j, which returns to the loop state x_j with weight 0; x_j repeats the
    exit step with weight 0.  Hence from t every scheduler needs 1+2l steps
    with probability a^l (1-a), and from x_j the expected number of steps to
    absorption is 2/(1-a) - 1.
    """
    betas = _rats(betas)
    a = to_rat(alpha_sum)
    k = len(betas)
    if not 0 <= a < 1:
        raise ValueError(f"alpha sum {a} must lie in [0, 1)")
    _check_betas(betas, Fraction(1, 4 * k ** (2 * k + 2)), "1/(4k^(2k+2))")
    b = MdpBuilder("t")
    for j, beta in enumerate(betas):
        g = base_prob(k, j)
        for anchor, act, loop, echo, pg in (
            ("t", f"gamma{j}", f"x{j}", f"xe{j}", g + beta),
            ("s", f"delta{j}", f"y{j}", f"ye{j}", g),
        ):
            exit_branches = [((1 - a) * pg, "goal"), ((1 - a) * (1 - pg), "fail"), (a, echo)]
            b.add_action(anchor, act, k - j, exit_branches)
            if a != 0:
                b.add_action(echo, "echo", 0, [(1, loop)])
                b.add_action(loop, "exit", 0, exit_branches)
    for q in ("goal", "fail"):
        b.add_state(q)
        b.mark(q, q)
    return _gadget(b, {"t": "t", "s": "s", "sink": "goal"})


def build_cvar_init_values(betas, alpha_sum, collapse=True):
    """Initial values for E(min(total weight at goal, 0)).

    delta_i at s has weight k-i and goes to goal w.p. 1-a, to y_i w.p.
    a - b'_i (entry helper ye_i adds -2k+2i, so the net change is -k+i) and
    to y'_i (``yp``) w.p. b'_i (helper ype_i adds 2i-k, net change +i).
    gamma_i is the same without the b'_i branch.  y_i (weight -k) and y'_i
    (weight -2k) reach goal w.p. k/(k+1) per step and stay otherwise.

    ``collapse=False`` realises the y'_i entry as two steps (+2k, then
    2i-3k) instead of one.
    """
    betas = _rats(betas)
    a = to_rat(alpha_sum)
    k = len(betas)
    if not 0 < a <= Fraction(1, 5 * (k + 1)):
        raise ValueError(f"alpha sum {a} must lie in (0, 1/(5(k+1))]")
    for j, beta in enumerate(betas):
        if beta < 0 or beta > a / 3:
            raise ValueError(f"initial value b'_{j} = {beta} outside [0, a/3]")
    stay = Fraction(1, k + 1)
    b = MdpBuilder("t")
    for i, beta in enumerate(betas):
        b.add_action("t", f"gamma{i}", k - i, [(1 - a, "goal"), (a, f"ye{i}")])
        b.add_action("s", f"delta{i}", k - i,
                     [(1 - a, "goal"), (a - beta, f"ye{i}"), (beta, f"ype{i}")])
        b.add_action(f"ye{i}", "enter", -2 * k + 2 * i, [(1, f"y{i}")])
        b.add_action(f"y{i}", "drop", -k, [(1 - stay, "goal"), (stay, f"y{i}")])
        if beta == 0:
            continue  # the y'_i branch has probability 0
        if collapse:
            b.add_action(f"ype{i}", "enter", 2 * i - k, [(1, f"yp{i}")])
        else:
            b.add_action(f"ype{i}", "enter", 2 * k, [(1, f"ypm{i}")])
            b.add_action(f"ypm{i}", "enter", 2 * i - 3 * k, [(1, f"yp{i}")])
        b.add_action(f"yp{i}", "drop", -2 * k, [(1 - stay, "goal"), (stay, f"yp{i}")])
    b.add_state("goal")
    b.mark("goal", "goal")
    return _gadget(b, {"t": "t", "s": "s", "sink": "goal"})


def assemble(*gadgets, initial="s_init"):
    """Glue fragments at their shared port states.

    A state may carry actions from several fragments as long as no action
    name is defined twice with different content; any non-port state may
    occur in one fragment only.
    """
    ports = set()
    for g in gadgets:
        ports.update(g.ports.values())
    owner = {}
    for gi, g in enumerate(gadgets):
        for q in g.mdp.states:
            if q in ports:
                continue
            if q in owner and owner[q] != gi:
                raise ValueError(f"state name collision: {q!r}")
            owner[q] = gi
    b = MdpBuilder(initial)
    seen = {}
    for g in gadgets:
        m = g.mdp
        for q in m.states:
            b.add_state(q)
        for q, a in m.pairs():
            content = (m.weight[(q, a)], m.trans[(q, a)])
            if (q, a) in seen:
                if seen[(q, a)] != content:
                    raise ValueError(f"conflicting definitions of {q}/{a}")
                continue
            seen[(q, a)] = content
            b.add_action(q, a, *content)
        for mark, qs in m.marks.items():
            for q in qs:
                b.mark(mark, q)
    if initial not in b._seen:
        raise ValueError(f"no fragment provides the initial state {initial!r}")
    return b.build()


def build_time_variant(term_mdp):
    """Re-time a termination MDP so that every step changes the counter by at
    most 1 and the expected termination time is 8 + 3p, p = Pr(reach trap).

    * s_init offers tau / sigma itself (weight +1, exit w.p. 1/2 to t or s),
      so t is reached with weight i after exactly i steps;
    * every step of weight -m (m >= 1) becomes -1, 0, -1, ..., -1, so below
      the anchors the counter alternates "unchanged" / "minus one" and a path
      from t or s with weight w that terminates before trap needs 2(w+1) steps;
    * trap is replaced by trap -(+1)-> trap_a -(0)-> trap_b -(-1)-> trap_a,
      adding exactly 3 steps to any path that reaches it; arrivals after a
      weight-0 step enter through trap0 -(+1)-> trap_b to keep the rhythm.

    The input must be an assembled termination MDP (max or min variant).
    """
    required = ("s_init", "choice", "t", "s", "trap")
    missing = [q for q in required if q not in term_mdp.states]
    if missing or not term_mdp.is_absorbing("trap"):
        raise ValueError(f"not an assembled termination MDP (missing {missing})")
    if set(term_mdp.actions("choice")) != {"tau", "sigma"}:
        raise ValueError("choice state must offer tau and sigma")

    b = MdpBuilder("s_init")
    zero_arrivals = False
    b.add_action("s_init", "tau", 1, [(HALF, "s_init"), (HALF, "t")])
    b.add_action("s_init", "sigma", 1, [(HALF, "s_init"), (HALF, "s")])

    for q in term_mdp.states:
        if q in ("s_init", "choice", "trap"):
            continue
        b.add_state(q)
        for a in term_mdp.actions(q):
            w = term_mdp.weight[(q, a)]
            branches = term_mdp.trans[(q, a)]
            if w.denominator != 1:
                raise ValueError("termination MDP with non-integer weights")
            w = int(w)
            if w > 0:
                raise ValueError(f"unexpected positive weight at {q}/{a}")
            if w == 0:
                redirected = [(p, "trap0" if r == "trap" else r) for p, r in branches]
                if q != "t" and q != "s" and [r for _, r in branches] == ["trap"]:
                    # weight-0 hop into trap right after a weight-0 step
                    b.add_action(q, a, 1, [(1, "trap_b")])
                else:
                    zero_arrivals = zero_arrivals or any(r == "trap" for _, r in branches)
                    b.add_action(q, a, 0, redirected)
                continue
            if [r for _, r in branches] == [q]:
                # weight -1 self-loop: -1 then 0
                if w != -1:
                    raise ValueError(f"unsupported self-loop weight at {q}")
                b.add_action(q, a, -1, [(1, f"{q}~z")])
                b.add_action(f"{q}~z", "pause", 0, [(1, q)])
                continue
            steps = [-1] + [0, -1] * (-w - 1)
            chain = [f"{q}~{a}~{n}" for n in range(1, len(steps))]
            if not chain:
                b.add_action(q, a, -1, branches)
                continue
            b.add_action(q, a, steps[0], [(1, chain[0])])
            for c, nxt, st in zip(chain, chain[1:], steps[1:]):
                b.add_action(c, "pause" if st == 0 else "unit", st, [(1, nxt)])
            b.add_action(chain[-1], "unit", steps[-1], branches)

    b.add_action("trap", "bump", 1, [(1, "trap_a")])
    if zero_arrivals:
        b.add_action("trap0", "bump", 1, [(1, "trap_b")])
        b.mark("trap", "trap0")
    b.add_action("trap_a", "pause", 0, [(1, "trap_b")])
    b.add_action("trap_b", "unit", -1, [(1, "trap_a")])
    for m, qs in term_mdp.marks.items():
        for q in qs:
            b.mark(m, q)
    return b.build()
