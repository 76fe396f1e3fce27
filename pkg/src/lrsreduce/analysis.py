"""Generic exact analyses of weighted MDPs.

* ``WeightScheduler`` - deterministic schedulers keyed by (state, weight).
* ``SchedulerEvaluator`` - exact values under a fixed scheduler by memoised
  Bellman unrolling (the independent oracle for the matrix recursions).
* ``weight_unfold`` / ``value_iteration`` - optimal values on a finite
  weight window with optimistic or pessimistic clamping.
* ``transient_distribution`` - exact step-by-step outcome distribution.
* ``simulate`` - seeded Monte Carlo, a sanity cross-check only.
"""

import random
import sys
from dataclasses import dataclass, field
from fractions import Fraction

from . import kernels
from .linalg import RatMatrix, mat_inverse
from .mdp import require_integer_weights

TERMINATION = "termination"
PARTIAL = "partial"
MIN_GOAL = "min_goal"
OBJECTIVES = (TERMINATION, PARTIAL, MIN_GOAL)


@dataclass(frozen=True)
class WeightScheduler:
    """Deterministic weight-based scheduler.

    Lookup order for a decision state q at accumulated weight w: the explicit
    ``table`` entry, a weight-independent ``fixed`` action, then ``below`` /
    ``above`` when w lies outside ``window``.  Inside the window a missing
    table entry falls back to ``above`` when the state has no ``below`` rule
    (handy for rules like "use gamma whenever the weight is large").
    """

    window: tuple = (0, -1)
    table: dict = field(default_factory=dict)
    fixed: dict = field(default_factory=dict)
    below: dict = field(default_factory=dict)
    above: dict = field(default_factory=dict)

    def choose(self, mdp, q, w):
        acts = mdp.actions(q)
        if len(acts) == 1:
            return acts[0]
        a = self.table.get((q, w))
        if a is None:
            a = self.fixed.get(q)
        if a is None:
            lo, hi = self.window
            if w < lo:
                a = self.below.get(q)
            elif w > hi:
                a = self.above.get(q)
        if a is None:
            raise KeyError(f"scheduler undefined at state {q!r}, weight {w}")
        if a not in acts:
            raise KeyError(f"scheduler picks {a!r} which is not enabled at {q!r}")
        return a

    def with_choice(self, q, w, action):
        table = dict(self.table)
        table[(q, w)] = action
        return WeightScheduler(self.window, table, self.fixed, self.below, self.above)

    def check(self, mdp):
        """Names of entries that point to actions not enabled at their state."""
        bad = []
        for (q, w), a in self.table.items():
            if a not in mdp.actions(q):
                bad.append(f"table[{q},{w}] = {a}")
        for name, rules in (("fixed", self.fixed), ("below", self.below), ("above", self.above)):
            for q, a in rules.items():
                if a not in mdp.actions(q):
                    bad.append(f"{name}[{q}] = {a}")
        return bad


def random_scheduler(mdp, seed, window):
    """Uniformly random deterministic choices on ``window``; random fixed rules outside."""
    rng = random.Random(seed)
    lo, hi = window
    table, below, above = {}, {}, {}
    for q in mdp.states:
        acts = mdp.actions(q)
        if len(acts) < 2:
            continue
        for w in range(lo, hi + 1):
            table[(q, w)] = rng.choice(acts)
        below[q] = rng.choice(acts)
        above[q] = rng.choice(acts)
    return WeightScheduler((lo, hi), table, {}, below, above)


# ---------------------------------------------------------------------------
# Bellman unrolling under a fixed scheduler


class SchedulerEvaluator:
    """Exact value V(q, w) of ``objective`` under ``sched``.

    Objectives:
      termination - probability that the accumulated weight ever drops below 0
      partial     - accumulated weight on reaching a goal state, 0 otherwise
      min_goal    - min(accumulated weight on reaching goal, 0), 0 otherwise

    Absorbing and non-goal terminal states are worth 0.  Infinite descents
    through negative-weight loops are closed with an exact absorbing-chain
    solve once the weight is non-positive (min_goal is linear there).
    """

    def __init__(self, mdp, sched, objective):
        if objective not in OBJECTIVES:
            raise ValueError(f"unknown objective {objective!r}")
        self.mdp = mdp
        self.sched = sched
        self.objective = objective
        self.goal = set(mdp.marked("goal"))
        self._memo = {}
        self._busy = set()
        self._tail = {}

    def terminal_value(self, q, w):
        if self.objective == TERMINATION:
            return Fraction(0)
        if q in self.goal:
            if self.objective == PARTIAL:
                return Fraction(w)
            return Fraction(min(w, 0))
        return Fraction(0)

    def value(self, q, w):
        key = (q, w)
        v = self._memo.get(key)
        if v is not None:
            return v
        limit = sys.getrecursionlimit()
        if limit < 20000:
            sys.setrecursionlimit(20000)
        v = self._value(q, w)
        self._memo[key] = v
        return v

    def _value(self, q, w):
        mdp = self.mdp
        if self.objective == TERMINATION and w < 0:
            return Fraction(1)
        if mdp.is_terminal(q) or mdp.is_absorbing(q):
            return self.terminal_value(q, w)
        if self.objective == MIN_GOAL and w <= 0:
            stats = self._tail_stats(q)
            if stats is not None:
                h, m = stats
                return w * h + m
        if (q, w) in self._busy:
            raise RuntimeError(f"zero-weight cycle through {q!r} at weight {w}")
        self._busy.add((q, w))
        try:
            return self.action_value(q, w, self.sched.choose(mdp, q, w))
        finally:
            self._busy.discard((q, w))

    def action_value(self, q, w, action):
        """Value of taking ``action`` at (q, w) and following the scheduler afterwards."""
        w2 = w + self.mdp.weight[(q, action)]
        total = Fraction(0)
        for p, r in self.mdp.trans[(q, action)]:
            total += p * self.value(r, w2)
        return total

    def _tail_stats(self, q):
        """(Pr(goal), E[weight gained * [goal]]) from q when every state reachable
        from q has one action of non-positive weight; None otherwise."""
        if q in self._tail:
            return self._tail[q]
        mdp = self.mdp
        closure, stack, ok = [q], [q], True
        seen = {q}
        while stack and ok:
            x = stack.pop()
            if mdp.is_terminal(x):
                continue
            acts = mdp.actions(x)
            if len(acts) != 1 or mdp.weight[(x, acts[0])] > 0 or mdp.is_absorbing(x):
                ok = False
                break
            for _, r in mdp.trans[(x, acts[0])]:
                if r not in seen:
                    seen.add(r)
                    closure.append(r)
                    stack.append(r)
        if not ok:
            self._tail[q] = None
            return None
        inner = [x for x in closure if not mdp.is_terminal(x)]
        pos = {x: i for i, x in enumerate(inner)}
        n = len(inner)
        rows = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
        hit = [Fraction(0)] * n
        for x in inner:
            i = pos[x]
            (a,) = mdp.actions(x)
            for p, r in mdp.trans[(x, a)]:
                if r in pos:
                    rows[i][pos[r]] -= p
                elif r in self.goal:
                    hit[i] += p
        inv = mat_inverse(RatMatrix(rows))
        h = inv.matvec(hit)
        # m = P m + wgt * h  (weight of each step counts iff goal is reached later)
        gain = [mdp.weight[(x, mdp.actions(x)[0])] * h[pos[x]] for x in inner]
        m = inv.matvec(gain)
        for x in inner:
            self._tail[x] = (h[pos[x]], m[pos[x]])
        return self._tail[q]


# ---------------------------------------------------------------------------
# Weight unfolding and value iteration

TERMINATED = ("<terminated>", None)
OVERFLOW = ("<overflow>", None)


@dataclass
class Unfolded:
    """Finite MDP over (state, clamped weight) in CSR layout."""

    nodes: list
    index: dict
    act_ptr: list
    br_ptr: list
    br_prob: list
    br_dst: list
    sink_values: dict
    window: tuple
    boundary: str
    objective: str

    @property
    def size(self):
        return len(self.nodes)


def weight_unfold(mdp, objective, w_lo, w_hi, boundary):
    """Unfold the accumulated weight into the state space on [w_lo, w_hi].

    Leaving the window downward (or dropping below 0 for termination) enters
    the "terminated" sink worth 1; leaving it upward enters the overflow sink
    worth 1 (optimistic) or 0 (pessimistic).  Terminal and absorbing states
    keep no actions and are worth 0.
    """
    if objective != TERMINATION:
        raise ValueError("weight unfolding is implemented for the termination objective")
    if boundary not in ("optimistic", "pessimistic"):
        raise ValueError("boundary must be 'optimistic' or 'pessimistic'")
    if not w_lo < 0 <= w_hi:
        raise ValueError("need w_lo < 0 <= w_hi")
    require_integer_weights(mdp)
    nodes = [(q, w) for q in mdp.states for w in range(w_lo, w_hi + 1)]
    nodes += [TERMINATED, OVERFLOW]
    index = {nd: i for i, nd in enumerate(nodes)}
    sinks = {
        index[TERMINATED]: Fraction(1),
        index[OVERFLOW]: Fraction(1 if boundary == "optimistic" else 0),
    }

    act_ptr, br_ptr, br_prob, br_dst = [0], [0], [], []
    for q, w in nodes:
        if w is not None and not (mdp.is_terminal(q) or mdp.is_absorbing(q)):
            for a in mdp.actions(q):
                w2 = w + int(mdp.weight[(q, a)])
                if w2 < 0 or w2 < w_lo:
                    dst = index[TERMINATED]
                    br_prob.append(Fraction(1))
                    br_dst.append(dst)
                else:
                    for p, r in mdp.trans[(q, a)]:
                        br_prob.append(p)
                        br_dst.append(index[OVERFLOW] if w2 > w_hi else index[(r, w2)])
                br_ptr.append(len(br_prob))
        act_ptr.append(len(br_ptr) - 1)
    return Unfolded(nodes, index, act_ptr, br_ptr, br_prob, br_dst, sinks,
                    (w_lo, w_hi), boundary, objective)


@dataclass
class ValueBounds:
    """One clamping side of the certified interval (``lower`` or ``upper``)."""

    values: dict
    boundary: str
    residual: Fraction
    exact: bool

    def at(self, q, w):
        return self.values[(q, w)]


def _successors(u):
    for n in range(u.size):
        out = set()
        for a in range(u.act_ptr[n], u.act_ptr[n + 1]):
            out.update(u.br_dst[u.br_ptr[a]:u.br_ptr[a + 1]])
        yield n, out


def value_iteration(unfolded, mode, budget=10_000):
    """Bellman optimum on the unfolding (exact when the live part is acyclic)."""
    if mode not in ("max", "min"):
        raise ValueError("mode must be 'max' or 'min'")
    u = unfolded
    succ = dict(_successors(u))
    pred = {n: [] for n in range(u.size)}
    for n, out in succ.items():
        for m in out:
            pred[m].append(n)

    # Nodes that cannot reach a sink of positive value are worth exactly 0.
    live = set()
    stack = [n for n, v in u.sink_values.items() if v > 0]
    live.update(stack)
    while stack:
        m = stack.pop()
        for n in pred[m]:
            if n not in live:
                live.add(n)
                stack.append(n)

    values = [Fraction(0)] * u.size
    for n, v in u.sink_values.items():
        values[n] = v

    order = _topological(u, succ, live)
    maximize = mode == "max"
    if order is not None:
        kernels.bellman_sweep(order, u.act_ptr, u.br_ptr, u.br_prob, u.br_dst, values, maximize)
        residual, exact = Fraction(0), True
    else:
        order = [n for n in range(u.size) if n in live and n not in u.sink_values]
        residual, exact = None, False
        for _ in range(budget):
            residual = kernels.bellman_sweep(
                order, u.act_ptr, u.br_ptr, u.br_prob, u.br_dst, values, maximize
            )
            if residual == 0:
                exact = True
                break
    out = {nd: values[i] for i, nd in enumerate(u.nodes) if nd[1] is not None}
    return ValueBounds(out, u.boundary, Fraction(residual), exact)


def _topological(u, succ, live):
    """Reverse topological order of live non-sink nodes, or None on a cycle."""
    state = {}
    order = []
    for root in range(u.size):
        if root not in live or root in state or root in u.sink_values:
            continue
        stack = [(root, iter(succ[root]))]
        state[root] = 1
        while stack:
            n, it = stack[-1]
            advanced = False
            for m in it:
                if m not in live or m in u.sink_values:
                    continue
                s = state.get(m)
                if s == 1:
                    return None
                if s is None:
                    state[m] = 1
                    stack.append((m, iter(succ[m])))
                    advanced = True
                    break
            if not advanced:
                state[n] = 2
                order.append(n)
                stack.pop()
    return order


# ---------------------------------------------------------------------------
# Transient analysis


@dataclass
class TransientResult:
    outcomes: dict  # (state, weight) -> mass absorbed there
    outcome_steps: dict  # (state, weight) -> sum of step * mass
    alive: dict  # (state, weight) -> mass still moving after the budget
    steps: int
    expected_steps: Fraction  # truncated E[min(T, steps)]
    outcome_aux: dict = field(default_factory=dict)  # name -> (state, weight) -> sum aux * mass

    @property
    def tail(self):
        return sum(self.alive.values(), Fraction(0))

    @property
    def total(self):
        return sum(self.outcomes.values(), Fraction(0)) + self.tail

    def mass(self, pred):
        return sum((m for (q, w), m in self.outcomes.items() if pred(q, w)), Fraction(0))

    def expectation(self, f):
        return sum((m * f(q, w) for (q, w), m in self.outcomes.items()), Fraction(0))


def transient_distribution(mdp, sched, step_budget, weight_window=None,
                           stop_below=None, tail_target=None, aux_weights=None):
    """Exact distribution of absorbed (state, weight) pairs after <= step_budget steps.

    A configuration is absorbed when its state is terminal or absorbing, or
    (if ``stop_below`` is given) when its weight drops below ``stop_below``.
    With ``weight_window`` set, configurations leaving it stay in ``alive``
    and are not expanded further.  ``tail_target`` stops early once the
    alive mass is at most that value.

    ``aux_weights`` maps names to further weight functions {(q, a): w}; for
    each, ``outcome_aux[name][(q, w)]`` accumulates E[aux sum ; absorbed at
    (q, w)] while the scheduler keeps deciding on the primary weight.
    """
    sid = {q: i for i, q in enumerate(mdp.states)}
    names = mdp.states
    act_ids = {}
    br_ptr, br_prob, br_dst, br_shift = [0], [], [], []
    for q, a in mdp.pairs():
        act_ids[(q, a)] = len(br_ptr) - 1
        w = mdp.weight[(q, a)]
        if w.denominator == 1:
            w = int(w)
        for p, r in mdp.trans[(q, a)]:
            br_prob.append(p)
            br_dst.append(sid[r])
            br_shift.append(w)
        br_ptr.append(len(br_prob))
    stopping = [mdp.is_terminal(q) or mdp.is_absorbing(q) for q in names]

    def absorbed(i, w):
        return stopping[i] or (stop_below is not None and w < stop_below)

    def outside(w):
        return weight_window is not None and not (weight_window[0] <= w <= weight_window[1])

    outcomes, outcome_steps, parked = {}, {}, {}
    alive = {}
    start = (sid[mdp.initial], 0)
    if absorbed(*start):
        outcomes[start] = Fraction(1)
        outcome_steps[start] = Fraction(0)
    else:
        alive[start] = Fraction(1)

    aux_weights = aux_weights or {}
    aux_by_act = {name: {act_ids[key]: Fraction(v) for key, v in wmap.items()}
                  for name, wmap in aux_weights.items()}
    aux_alive = {name: {} for name in aux_weights}
    outcome_aux = {name: {} for name in aux_weights}

    expected = Fraction(0)
    step = 0
    while alive and step < step_budget:
        if tail_target is not None and sum(alive.values()) <= tail_target:
            break
        expected += sum(alive.values())
        step += 1
        sources, src_states = [], []
        for (i, w), m in alive.items():
            q = names[i]
            sources.append((act_ids[(q, sched.choose(mdp, q, w))], w, m))
            src_states.append(i)
        nxt = {}
        kernels.push_mass(sources, br_ptr, br_prob, br_dst, br_shift, nxt)
        aux_next = {}
        for name, per_act in aux_by_act.items():
            cur, acc = aux_alive[name], {}
            for (act, w, m), i in zip(sources, src_states):
                carried = cur.get((i, w), 0) + m * per_act[act]
                for b in range(br_ptr[act], br_ptr[act + 1]):
                    key = (br_dst[b], w + br_shift[b])
                    acc[key] = acc.get(key, 0) + br_prob[b] * carried
            aux_next[name] = acc
        alive = {}
        for name in aux_alive:
            aux_alive[name] = {}
        for key, m in nxt.items():
            if absorbed(*key):
                outcomes[key] = outcomes.get(key, 0) + m
                outcome_steps[key] = outcome_steps.get(key, 0) + step * m
                for name, acc in aux_next.items():
                    out = outcome_aux[name]
                    out[key] = out.get(key, 0) + acc.get(key, 0)
            elif outside(key[1]):
                parked[key] = parked.get(key, 0) + m
            else:
                alive[key] = m
                for name, acc in aux_next.items():
                    aux_alive[name][key] = acc.get(key, 0)
    for key, m in parked.items():
        alive[key] = alive.get(key, 0) + m
    named = lambda d: {(names[i], w): Fraction(m) for (i, w), m in d.items()}  # noqa: E731
    return TransientResult(named(outcomes), named(outcome_steps), named(alive), step, expected,
                           {name: named(d) for name, d in outcome_aux.items()})


# ---------------------------------------------------------------------------
# Simulation


@dataclass(frozen=True)
class SimStats:
    episodes: int
    terminated: int  # accumulated weight dropped below 0 at some point
    goal_hits: int
    capped: int
    mean_goal_weight: float
    mean_steps: float
    termination_frequency: float


def simulate(mdp, sched, episodes, seed, step_cap, stop_below=None):
    """Monte Carlo estimates with a private seeded generator.

    An episode ends in a terminal or absorbing state, after ``step_cap``
    steps (counted as capped), or - with ``stop_below`` set - as soon as the
    accumulated weight drops below that value.
    """
    rng = random.Random(seed)
    goal = set(mdp.marked("goal"))
    terminated = goal_hits = capped = 0
    goal_weight_sum = Fraction(0)
    steps_sum = 0
    for _ in range(episodes):
        q, w, steps, dropped = mdp.initial, Fraction(0), 0, False
        while True:
            if mdp.is_terminal(q) or mdp.is_absorbing(q):
                break
            if steps >= step_cap:
                capped += 1
                break
            a = sched.choose(mdp, q, w)
            w += mdp.weight[(q, a)]
            x = rng.random()
            acc = 0.0
            branches = mdp.trans[(q, a)]
            nxt = branches[-1][1]
            for p, r in branches:
                acc += float(p)
                if x < acc:
                    nxt = r
                    break
            q = nxt
            steps += 1
            if w < 0:
                dropped = True
                if stop_below is not None and w < stop_below:
                    break
        terminated += dropped
        if q in goal:
            goal_hits += 1
            goal_weight_sum += w
        steps_sum += steps
    return SimStats(
        episodes=episodes,
        terminated=terminated,
        goal_hits=goal_hits,
        capped=capped,
        mean_goal_weight=float(goal_weight_sum / goal_hits) if goal_hits else 0.0,
        mean_steps=steps_sum / episodes if episodes else 0.0,
        termination_frequency=terminated / episodes if episodes else 0.0,
    )


def absorption_step_bound(mdp, horizon=8):
    """Upper bound on the expected number of steps until a terminal or
    absorbing state is hit, valid from every state and for every scheduler.

    With rho = min over states and schedulers of Pr(absorbed within
    ``horizon`` steps) (exact finite-horizon min-reachability), each block
    of ``horizon`` steps absorbs with probability >= rho, hence the bound
    horizon / rho.  Returns None when rho = 0.
    """
    stop = {q: mdp.is_terminal(q) or mdp.is_absorbing(q) for q in mdp.states}
    rho = {q: Fraction(int(stop[q])) for q in mdp.states}
    for _ in range(horizon):
        nxt = {}
        for q in mdp.states:
            if stop[q]:
                nxt[q] = Fraction(1)
                continue
            nxt[q] = min(sum((p * rho[r] for p, r in mdp.trans[(q, a)]), Fraction(0))
                         for a in mdp.actions(q))
        rho = nxt
    worst = min(rho.values())
    if worst == 0:
        return None
    return Fraction(horizon) / worst
