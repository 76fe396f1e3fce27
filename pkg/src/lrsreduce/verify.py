"""Exact desk-scale checks of the reductions.

Each ``check_*`` returns a VerifyReport.  Values are compared as exact
Fractions; where an infinite quantity is truncated the residual is
compared against an explicit bound that the report records.
"""

from dataclasses import dataclass, field
from fractions import Fraction

from . import threshold as th
from .analysis import (
    SchedulerEvaluator,
    absorption_step_bound,
    random_scheduler,
    transient_distribution,
    value_iteration,
    weight_unfold,
    TERMINATION,
)
from .linalg import RatMatrix, mat_inverse, neumann
from .lrs import evaluate, first_negative
from .mdp import validate
from .rational import fmt_rat
from .reductions import (
    ReductionTarget,
    conditional_identity,
    direct_mdp,
    expected_two_sided_time,
    time_threshold,
    two_sided_base_mdp,
)

TAIL_TARGET = Fraction(1, 2**40)
TAIL_LIMIT = Fraction(1, 2**30)


def _s(x):
    if isinstance(x, Fraction):
        return fmt_rat(x)
    if isinstance(x, dict):
        return {str(k): _s(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_s(v) for v in x]
    return x


@dataclass
class Check:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)
    witness: dict = None
    warnings: list = field(default_factory=list)

    def to_json(self):
        obj = {"name": self.name, "status": "pass" if self.passed else "fail",
               "detail": _s(self.detail)}
        if self.witness is not None:
            obj["witness"] = _s(self.witness)
        if self.warnings:
            obj["warnings"] = list(self.warnings)
        return obj

    @classmethod
    def from_json(cls, obj):
        # detail values stay in their serialised (string) form
        return cls(obj["name"], obj["status"] == "pass", dict(obj.get("detail", {})),
                   obj.get("witness"), list(obj.get("warnings", [])))


@dataclass
class VerifyReport:
    checks: list = field(default_factory=list)

    @property
    def ok(self):
        return all(c.passed for c in self.checks)

    def add(self, name, passed, detail=None, witness=None, warnings=None):
        if not passed and witness is None:
            witness = {"note": "no witness recorded"}
        self.checks.append(Check(name, bool(passed), detail or {}, witness, warnings or []))
        return self

    def extend(self, other):
        self.checks.extend(other.checks)
        return self

    def failures(self):
        return [c for c in self.checks if not c.passed]

    def to_json(self):
        checks = sorted(self.checks, key=lambda c: c.name)
        return {"ok": self.ok, "checks": [c.to_json() for c in checks]}

    @classmethod
    def from_json(cls, obj):
        rep = cls([Check.from_json(c) for c in obj["checks"]])
        if rep.ok != obj["ok"]:
            raise ValueError("report 'ok' flag disagrees with its checks")
        return rep


# ---------------------------------------------------------------------------
# Helpers


def _context(out):
    norm = out.normalization()
    lrs_n = norm.normalized
    return norm, lrs_n.coefficients, lrs_n.initials, lrs_n.order


def _table(al, be, kind, top_weight):
    k = len(al)
    sh = th.shape(kind, k)
    n_max = max(sh.base_block, -(-(top_weight - sh.origin) // k))
    return th.scheduler_values(al, be, kind, n_max)


def _evaluator(al, be, kind):
    k = len(al)
    mdp = direct_mdp(al, be, kind)
    sched = th.prescribed_scheduler(k, kind)
    return mdp, sched, SchedulerEvaluator(mdp, sched, th.shape(kind, k).objective)


# ---------------------------------------------------------------------------
# Difference sequence and matrix identities


def check_difference_sequence(out, lrs=None, window=50):
    """d(offset + n) equals the n-th normalised term for n = 0..window."""
    norm, al, be, k = _context(out)
    kind = out.kind
    off = th.shape(kind, k).offset(k)
    tab = _table(al, be, kind, off + window)
    rep = VerifyReport()
    for n in range(window + 1):
        want = evaluate(norm.normalized, n)
        got = tab.d(off + n)
        if got != want:
            return rep.add("difference-sequence", False, {"kind": kind, "window": window},
                           {"n": n, "weight": off + n, "d": got, "u": want})
    if lrs is not None:
        for n in range(window + 1):
            if norm.scaled(n, evaluate(lrs, n)) != evaluate(norm.normalized, n):
                return rep.add("difference-sequence", False, {"kind": kind},
                               {"n": n, "note": "normalised term is not mu*lam^n*u_n"})
    return rep.add("difference-sequence", True, {"kind": kind, "offset": off, "window": window})


def check_matrix_identities(out, max_n=8):
    """A v_base (+ affine terms) = next block by independent Bellman unrolling,
    the Neumann inverse, and the two finite-sum identities for n = 1..max_n."""
    norm, al, be, k = _context(out)
    kind = out.kind
    sh = th.shape(kind, k)
    system = th.build_A_a_b(al, kind)
    A = system.A
    rep = VerifyReport()

    v = th.base_vector(al, be, kind)
    n1 = sh.base_block + 1
    predicted = [x + n1 * y + z for x, y, z in zip(A.matvec(v), system.a, system.b)]
    _, _, ev = _evaluator(al, be, kind)
    mismatch = None
    for anchor in ("t", "s"):
        for r in range(k):
            w = sh.origin + n1 * k + r
            got = ev.value(anchor, w)
            if got != predicted[th.idx(k, anchor, r)]:
                mismatch = {"anchor": anchor, "weight": w, "bellman": got,
                            "matrix": predicted[th.idx(k, anchor, r)]}
                break
        if mismatch:
            break
    rep.add("block-recursion", mismatch is None, {"kind": kind, "block": n1}, mismatch)

    mass = sum(abs(a) for a in al)
    rep.add("row-sum-bound", A.norm_inf() <= mass, {"norm": A.norm_inf(), "mass": mass},
            None if A.norm_inf() <= mass else {"norm": A.norm_inf()})

    eye = RatMatrix.identity(2 * k)
    N = neumann(A, Fraction(1, 2**k))
    ok = (eye - A.scale(Fraction(1, 2**k))) @ N == eye
    rep.add("neumann-inverse", ok, {"scale": Fraction(1, 2**k)})

    inv = mat_inverse(eye - A)
    bad = None
    for n in range(1, max_n + 1):
        pw = [A.power(i) for i in range(n + 2)]
        s1 = _msum(pw[: n + 1], 2 * k)
        if s1 != inv @ (eye - pw[n + 1]):
            bad = {"identity": "sum A^i", "n": n}
            break
        s2 = _msum([p.scale(n - i) for i, p in enumerate(pw[: n + 1])], 2 * k)
        if s2 != inv @ inv @ (pw[n + 1] - A + (eye - A).scale(n)):
            bad = {"identity": "sum (n-i) A^i", "n": n}
            break
    rep.add("finite-sum-identities", bad is None, {"n_max": max_n}, bad)
    return rep


def _msum(ms, n):
    acc = RatMatrix.zeros(n)
    for m in ms:
        acc = acc + m
    return acc


# ---------------------------------------------------------------------------
# Local optimality


def check_local_optimality(out, window=None):
    """At every anchor state and weight of the window, the prescribed action
    is optimal among all enabled actions when the prescribed scheduler is
    followed afterwards.  Ties are reported as warnings."""
    norm, al, be, k = _context(out)
    kind = out.kind
    sh = th.shape(kind, k)
    lo, hi = window if window is not None else (-k, 10 * k)
    lo = max(lo, sh.offset(k))
    mdp, sched, ev = _evaluator(al, be, kind)
    tab = _table(al, be, kind, hi)
    better = (lambda x, y: x > y) if sh.mode == "max" else (lambda x, y: x < y)
    rep = VerifyReport()
    warnings = []
    failure = None
    low_bound_fail = None
    for anchor in ("t", "s"):
        for w in range(lo, hi + 1):
            chosen = sched.choose(mdp, anchor, w)
            values = {a: ev.action_value(anchor, w, a) for a in mdp.actions(anchor)}
            if values[chosen] != tab[(anchor, w)]:
                failure = {"anchor": anchor, "weight": w, "note": "table disagrees with Bellman",
                           "table": tab[(anchor, w)], "bellman": values[chosen]}
                break
            for a, v in values.items():
                if a == chosen:
                    continue
                if better(v, values[chosen]):
                    failure = {"anchor": anchor, "weight": w, "prescribed": chosen,
                               "value": values[chosen], "better_action": a, "better_value": v}
                    break
                if v == values[chosen]:
                    warnings.append(f"tie at {anchor}, weight {w}: {chosen} = {a}")
            if failure:
                break
            if kind == th.PARTIAL_KIND and w >= 1 and 4 * values[chosen] < 3 * w:
                low_bound_fail = {"anchor": anchor, "weight": w, "value": values[chosen]}
        if failure:
            break
    rep.add("local-optimality", failure is None,
            {"kind": kind, "window": [lo, hi], "mode": sh.mode}, failure, warnings)
    if kind == th.PARTIAL_KIND:
        rep.add("partial-gamma-lower-bound", low_bound_fail is None,
                {"claim": "value >= 3/4 w for w >= 1"}, low_bound_fail)
    return rep


# ---------------------------------------------------------------------------
# Thresholds


def expected_theta(out, base_theta, norm):
    """The target's threshold as a function of its direct construction's one."""
    T = ReductionTarget
    t = out.target
    if t in (T.ENERGY_MAX, T.ENERGY_MIN):
        return 1 - base_theta
    if t in (T.MAX_TERMINATION_TIME, T.MIN_TERMINATION_TIME):
        return time_threshold(base_theta)
    if t == T.CVAR_MAX:
        return Fraction(2, 3) * base_theta
    if t == T.TWO_SIDED_PARTIAL:
        k = norm.normalized.order
        alpha = sum(abs(a) for a in norm.normalized.coefficients)
        return base_theta + k * expected_two_sided_time(alpha)
    return base_theta


def check_theta_series(out, truncations=(16, 32, 64)):
    """Closed form vs sum_{w=1}^T 2^-w value(t, w) within the analytic tail bound."""
    norm, al, be, k = _context(out)
    kind = out.kind
    base_theta = th.theta_for(al, be, kind)
    rep = VerifyReport()
    want = expected_theta(out, base_theta, norm)
    rep.add("threshold-consistency", want == out.theta,
            {"target": out.target.value, "theta": out.theta},
            None if want == out.theta else {"expected": want, "emitted": out.theta})
    tab = _table(al, be, kind, max(truncations))
    base = th.base_vector(al, be, kind)
    for T in truncations:
        partial = sum((Fraction(1, 2**w) * tab[("t", w)] for w in range(1, T + 1)), Fraction(0))
        resid = abs(base_theta - partial)
        bound = th.series_tail_bound(kind, k, T, base)
        rep.add(f"theta-series-T{T:02d}", resid <= bound,
                {"kind": kind, "residual": resid, "bound": bound},
                None if resid <= bound else {"T": T, "residual": resid, "bound": bound})
    return rep


# ---------------------------------------------------------------------------
# Single deviations at the choice state


def check_deviation(out, lrs=None, bound=50):
    """Switching from tau to sigma at choice weight w changes the value by
    2^-w (V(s,w) - V(t,w)); with d oriented to reproduce the sequence this is
    an improvement of -2^-w d(w) for the optimising side.  A negative term
    must give a strictly improving deviation; otherwise none may improve."""
    norm, al, be, k = _context(out)
    kind = out.kind
    off = th.shape(kind, k).offset(k)
    tab = _table(al, be, kind, off + bound)
    rep = VerifyReport()
    _, _, ev = _evaluator(al, be, kind)
    sign = th.shape(kind, k).d_sign

    def gain(w):
        return -Fraction(1, 2**w) * tab.d(w)

    def gain_bellman(w):
        return -Fraction(1, 2**w) * sign * (ev.value("t", w) - ev.value("s", w))

    n_star = first_negative(norm.normalized, bound)
    if n_star is not None:
        for n in range(n_star, bound + 1):
            w = off + n
            if w >= 1 and evaluate(norm.normalized, n) < 0:
                g, gb = gain(w), gain_bellman(w)
                ok = g > 0 and g == gb
                return rep.add("deviation", ok,
                               {"first_negative": n_star, "index": n, "choice_weight": w,
                                "margin": g},
                               None if ok else {"weight": w, "table_gain": g, "bellman_gain": gb})
        return rep.add("deviation", False, {"first_negative": n_star},
                       {"note": "no negative term at a reachable choice weight within bound"})
    ties, worst = [], None
    for n in range(bound + 1):
        w = off + n
        if w < 1:
            continue
        g = gain(w)
        if g > 0:
            worst = {"weight": w, "gain": g}
            break
        if g == 0:
            ties.append(w)
    warnings = [f"neutral deviation at choice weights {ties[:5]}..."] if ties else []
    return rep.add("no-improving-deviation", worst is None, {"bound": bound}, worst, warnings)


# ---------------------------------------------------------------------------
# Wrappers


def _schedulers(mdp, k, kind, seeds, time_variant=False, seed0=0):
    out = [("prescribed", th.prescribed_scheduler(k, kind, time_variant))]
    for seed in range(seed0, seed0 + seeds):
        out.append((f"random-{seed}", random_scheduler(mdp, seed, (-2 * k, 12 * k))))
    return out


def _run(mdp, sched, budget, **kw):
    return transient_distribution(mdp, sched, budget, tail_target=TAIL_TARGET, **kw)


def _expectation_tol(res, step_bound, wmax):
    return sum((m * (abs(w) + wmax * step_bound) for (_, w), m in res.alive.items()), Fraction(0))


def _goal_stats(mdp, res):
    goal = set(mdp.marked("goal"))
    pe = res.expectation(lambda q, w: w if q in goal else 0)
    pr = res.mass(lambda q, w: q in goal)
    return pe, pr


def check_wrapper_identities(out, seeds=5, budget=10_000, seed=0):
    T = ReductionTarget
    if out.target == T.CONDITIONAL_SSPP_MAX:
        return _check_conditional(out, seeds, budget, seed)
    if out.target == T.TWO_SIDED_PARTIAL:
        return _check_two_sided(out, seeds, budget, seed)
    if out.target == T.CVAR_MAX:
        return _check_cvar(out, seeds, budget, seed)
    if out.target in (T.MAX_TERMINATION_TIME, T.MIN_TERMINATION_TIME):
        return _check_time(out, seeds, budget, seed)
    if out.target in (T.COST_MAX, T.COST_MIN):
        return _check_cost(out, budget)
    if out.target in (T.ENERGY_MAX, T.ENERGY_MIN):
        ok = out.theta == 1 - Fraction(out.meta["termination_theta"])
        return VerifyReport().add("energy-complement", ok, {"theta": out.theta})
    return VerifyReport()


def _check_conditional(out, seeds, budget, seed0=0):
    norm, al, be, k = _context(out)
    inner = direct_mdp(al, be, th.PARTIAL_KIND)
    outer = out.mdp
    theta = out.theta
    wmax = max(abs(w) for w in outer.weight.values())
    hb_in, hb_out = absorption_step_bound(inner), absorption_step_bound(outer)
    rep = VerifyReport()
    for name, sched in _schedulers(inner, k, th.PARTIAL_KIND, seeds, seed0=seed0):
        ri, ro = _run(inner, sched, budget), _run(outer, sched, budget)
        pe, pr = _goal_stats(inner, ri)
        num, den = _goal_stats(outer, ro)
        tol_i = _expectation_tol(ri, hb_in, wmax)
        tol_o = _expectation_tol(ro, hb_out, wmax)
        err_num = abs(num - (pe + pr * theta) / 2)
        err_den = abs(den - (1 + pr) / 2)
        bound_num = tol_o + tol_i * (1 + abs(theta)) / 2
        bound_den = ro.tail + ri.tail / 2
        tail = max(ri.tail, ro.tail)
        ok = err_num <= bound_num and err_den <= bound_den and tail < TAIL_LIMIT
        ce = num / den
        ce_formula = conditional_identity(pe, pr, theta)
        rep.add(f"conditional-identity[{name}]", ok,
                {"CE": ce, "identity": ce_formula, "tail": tail, "bound": bound_num},
                None if ok else {"err_num": err_num, "err_den": err_den, "tail": tail})
    return rep


def _check_two_sided(out, seeds, budget, seed0=0):
    norm, al, be, k = _context(out)
    base = two_sided_base_mdp(al, be)
    alpha = sum(abs(a) for a in al)
    T = expected_two_sided_time(alpha)
    rep = VerifyReport()
    rep.add("two-sided-nonnegative",
            all(w >= 0 for w in out.mdp.weight.values())
            and all(w >= 0 for w in out.mdp.fail_weight.values()), {})
    goal = set(base.marked("goal"))
    fail = set(base.marked("fail"))
    aux = {"goal": out.mdp.weight, "fail": out.mdp.fail_weight}
    for name, sched in _schedulers(base, k, th.PARTIAL_KIND, seeds, seed0=seed0):
        # the scheduler decides on the original weight; the two weight
        # functions of the emitted instance are accumulated alongside
        rb = _run(base, sched, budget, aux_weights=aux)
        pe = rb.expectation(lambda q, w: w if q in goal else 0)
        steps = sum(rb.outcome_steps.values(), Fraction(0))
        ex = (sum((v for (q, _), v in rb.outcome_aux["goal"].items() if q in goal), Fraction(0))
              + sum((v for (q, _), v in rb.outcome_aux["fail"].items() if q in fail), Fraction(0)))
        # same paths, same cut: on the absorbed part the identity is exact
        exact_ok = ex == pe + k * steps
        # E(steps) in [absorbed + alive*n, absorbed + alive*(n + T)]
        lo = steps + rb.tail * rb.steps
        hi = lo + rb.tail * T
        time_ok = lo <= T <= hi
        ok = exact_ok and time_ok and rb.tail < TAIL_LIMIT
        rep.add(f"two-sided-identity[{name}]", ok,
                {"E(X)": ex, "PE": pe, "k": k, "T": T, "steps_lower": lo, "steps_upper": hi,
                 "tail": rb.tail},
                None if ok else {"exact": exact_ok, "time": time_ok, "tail": rb.tail})
    return rep


def cvar_from_outcomes(outcomes, p):
    """(VaR, CVaR) of a finite distribution {value: mass}, lower tail of mass p."""
    acc = Fraction(0)
    total = Fraction(0)
    var = None
    for v in sorted(outcomes):
        m = outcomes[v]
        take = min(m, p - acc)
        if take > 0:
            total += take * v
            acc += take
        if acc >= p:
            var = v
            break
    if var is None:
        raise ValueError("distribution carries less mass than p")
    return var, total / p


def _check_cvar(out, seeds, budget, seed0=0):
    norm, al, be, k = _context(out)
    inner = direct_mdp(al, be, th.CVAR_KIND)
    outer = out.mdp
    p = out.cvar_p
    wmax = max(abs(w) for w in outer.weight.values())
    hb_in, hb_out = absorption_step_bound(inner), absorption_step_bound(outer)
    rep = VerifyReport()
    for name, sched in _schedulers(inner, k, th.CVAR_KIND, seeds, seed0=seed0):
        ri, ro = _run(inner, sched, budget), _run(outer, sched, budget)
        dist = {}
        for (q, w), m in ro.outcomes.items():
            dist[w] = dist.get(w, 0) + m
        zero_mass = dist.get(0, Fraction(0))
        neg_upper = sum((m for w, m in dist.items() if w < 0), Fraction(0)) + ro.tail
        var_ok = zero_mass >= Fraction(2, 3) and neg_upper <= p
        var, cvar = cvar_from_outcomes(dist, p)
        e_inner = ri.expectation(lambda q, w: min(w, 0))
        tol = 2 * _expectation_tol(ro, hb_out, wmax) + Fraction(2, 3) * _expectation_tol(ri, hb_in, wmax)
        err = abs(cvar - Fraction(2, 3) * e_inner)
        tail = max(ri.tail, ro.tail)
        ok = var_ok and var == 0 and err <= tol and tail < TAIL_LIMIT
        rep.add(f"cvar-identity[{name}]", ok,
                {"VaR": var, "CVaR": cvar, "two_thirds_E_min": Fraction(2, 3) * e_inner,
                 "mass_at_zero": zero_mass, "tail": tail, "bound": tol},
                None if ok else {"var": var, "err": err, "mass_at_zero": zero_mass})
        if name == "prescribed":
            theta_aux = Fraction(out.meta["theta_aux"])
            err_s = abs(e_inner - theta_aux)
            tol_s = _expectation_tol(ri, hb_in, wmax)
            rep.add("cvar-theta-aux-transient", err_s <= tol_s,
                    {"theta_aux": theta_aux, "transient": e_inner, "bound": tol_s},
                    None if err_s <= tol_s else {"err": err_s})
    return rep


def _time_bound(k):
    """Remaining steps from a configuration with weight w are at most 2w + 2k + 30."""
    return lambda w: 2 * max(w, 0) + 2 * k + 30


def _check_time(out, seeds, budget, seed0=0):
    norm, al, be, k = _context(out)
    kind = out.kind
    mdp = out.mdp
    rem = _time_bound(k)
    theta_term = Fraction(out.meta["termination_theta"])
    rep = VerifyReport()
    for name, sched in _schedulers(mdp, k, kind, seeds, time_variant=True, seed0=seed0):
        r = _run(mdp, sched, budget, stop_below=0)
        # termination inside the trap gadget always happens at trap_a
        p_lo = r.mass(lambda q, w: q == "trap_a")
        p_hi = p_lo + r.tail
        e_lo = sum(r.outcome_steps.values(), Fraction(0)) + r.tail * r.steps
        e_hi = e_lo + sum((m * rem(w) for (_, w), m in r.alive.items()), Fraction(0))
        ok = e_lo <= 8 + 3 * p_hi and 8 + 3 * p_lo <= e_hi and r.tail < TAIL_LIMIT
        detail = {"E_lower": e_lo, "E_upper": e_hi, "p_lower": p_lo, "tail": r.tail}
        if name == "prescribed":
            # under the prescribed scheduler p = 1 - Pr(terminate) = 1 - theta_term
            ok = ok and p_lo <= 1 - theta_term <= p_hi
            detail["threshold"] = out.theta
        rep.add(f"time-identity[{name}]", ok, detail,
                None if ok else detail)
    return rep


def _check_cost(out, budget):
    norm, al, be, k = _context(out)
    kind = out.kind
    sched = th.prescribed_scheduler(k, kind)
    # weights never increase after the choice, so a configuration with
    # weight < 0 can never return to >= 0; park those early
    r = transient_distribution(out.mdp, sched, budget, weight_window=(-1, 10**9),
                               tail_target=TAIL_TARGET)
    trap = set(out.mdp.marked("trap"))
    at_trap_neg = r.mass(lambda q, w: q in trap and w < 0)
    parked_neg = sum((m for (_, w), m in r.alive.items() if w < 0), Fraction(0))
    undecided = sum((m for (_, w), m in r.alive.items() if w >= 0), Fraction(0))
    lo = at_trap_neg + parked_neg
    hi = lo + undecided
    ok = lo <= out.theta <= hi and hi - lo < TAIL_LIMIT
    return VerifyReport().add("cost-event", ok,
                              {"lower": lo, "upper": hi, "theta": out.theta},
                              None if ok else {"lower": lo, "upper": hi})


# ---------------------------------------------------------------------------
# Independent optimal-value oracle


def certified_interval(mdp, mode, w_lo, w_hi):
    """(pessimistic, optimistic) optimal termination probability at the initial state."""
    vals = []
    for boundary in ("pessimistic", "optimistic"):
        u = weight_unfold(mdp, TERMINATION, w_lo, w_hi, boundary)
        vb = value_iteration(u, mode)
        vals.append(vb.at(mdp.initial, 0))
    return tuple(vals)


def check_certify_interval(out, w_his=(20, 40), width_limit=Fraction(1, 2**20)):
    """Optimal termination probability bracketed by clamped value iteration;
    theta must lie inside for a nonnegative sequence and must be strictly
    beaten (pessimistic side above / optimistic side below) otherwise."""
    norm, al, be, k = _context(out)
    mode = th.shape(out.kind, k).mode
    mdp = out.mdp
    rep = VerifyReport()
    widths = []
    lo = hi = None
    for w_hi in w_his:
        lo, hi = certified_interval(mdp, mode, -(k + 1), w_hi)
        widths.append(hi - lo)
    monotone = all(a >= b for a, b in zip(widths, widths[1:]))
    rep.add("interval-width", widths[-1] < width_limit and monotone,
            {"w_hi": list(w_his), "widths": widths, "limit": width_limit},
            None if widths[-1] < width_limit and monotone else {"widths": widths})
    negative = first_negative(norm.normalized, 50) is not None
    theta = out.theta
    if negative:
        ok = lo > theta if mode == "max" else hi < theta
        name = "interval-certifies-improvement"
    else:
        ok = lo <= theta <= hi
        name = "interval-contains-theta"
    rep.add(name, ok, {"lower": lo, "upper": hi, "theta": theta, "mode": mode},
            None if ok else {"lower": lo, "upper": hi, "theta": theta})
    return rep


# ---------------------------------------------------------------------------
# Suite


DIRECT = {ReductionTarget.MAX_TERMINATION, ReductionTarget.MIN_TERMINATION,
          ReductionTarget.PARTIAL_SSPP_MAX}
TERMINATION_LIKE = {ReductionTarget.MAX_TERMINATION, ReductionTarget.MIN_TERMINATION,
                    ReductionTarget.ONE_COUNTER_MAX_TERMINATION,
                    ReductionTarget.ONE_COUNTER_MIN_TERMINATION}


def verify_all(out, lrs=None, window=50, truncation=64, budget=10_000, seeds=5, seed=0,
               unfold_hi=None):
    """Every check that applies to the instance's target."""
    rep = VerifyReport()
    bad = validate(out.mdp)
    rep.add("validate", not bad, {"states": len(out.mdp.states)},
            {"violations": bad[:5]} if bad else None)
    if bad:
        return rep
    if out.mdp.to_json() != _rebuild(out).to_json():
        return rep.add("instance-matches-lrs", False, {},
                       {"note": "MDP differs from the reduction of the recorded sequence"})
    rep.add("instance-matches-lrs", True)
    rep.extend(check_difference_sequence(out, lrs, window))
    rep.extend(check_matrix_identities(out))
    rep.extend(check_local_optimality(out))
    rep.extend(check_theta_series(out, tuple(t for t in (16, 32, 64) if t <= truncation)
                                  or (truncation,)))
    rep.extend(check_deviation(out, lrs, window))
    rep.extend(check_wrapper_identities(out, seeds, budget, seed))
    if out.target in TERMINATION_LIKE:
        if unfold_hi is None:
            unfold_hi = max(12 * out.meta["k"], 40)
        rep.extend(check_certify_interval(out, (unfold_hi // 2, unfold_hi)))
    return rep


def _rebuild(out):
    from .reductions import reduce

    return reduce(out.normalization().source, out.target).mdp
