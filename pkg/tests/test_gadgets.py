from fractions import Fraction as F

import pytest

from conftest import reduced
from lrsreduce import threshold as th
from lrsreduce.analysis import WeightScheduler, transient_distribution
from lrsreduce.gadgets import (
    Gadget, assemble, base_prob, build_cvar_init_values, build_initial,
    build_min_termination_init_values, build_partial_init_values, build_recurrence,
    build_termination_init_values, build_time_variant, build_two_sided_init_values,
)
from lrsreduce.mdp import MdpBuilder, validate
from lrsreduce.reductions import direct_mdp
from oracles import scheduler_value

ALPHAS = (F(1, 32), F(-1, 32))
BETAS = (F(1, 512), F(1, 1024))


def started_at(mdp, state, weight):
    """Copy of ``mdp`` that first moves to ``state`` with the given weight."""
    b = MdpBuilder.from_mdp(mdp)
    b.add_action("start", "lift", weight, [(1, state)])
    b.initial = "start"
    return b.build()


def canonical(m):
    return (set(m.states), m.initial, {q: set(a) for q, a in m.enabled.items()},
            m.trans, m.weight, {k: set(v) for k, v in m.marks.items()})


def test_initial_gadget():
    g = build_initial()
    assert g.validate() == []
    b = MdpBuilder.from_mdp(g.mdp)
    b.remove_actions("choice")
    res = transient_distribution(b.build(), WeightScheduler(), 2)
    assert res.outcomes[("choice", 1)] == F(1, 2)
    assert ("choice", 0) not in res.outcomes
    # sum_w (1/2)^w = 1: the truncated masses converge to 1
    res = transient_distribution(b.build(), WeightScheduler(), 60)
    assert res.total == 1 and res.tail == F(1, 2**60)


def test_recurrence_branches():
    g = build_recurrence(ALPHAS)
    assert g.mdp.trans[("t", "gamma")] == ((F(1, 32), "t1"), (F(1, 32), "s2"), (F(15, 16), "trap"))
    assert g.mdp.trans[("s", "delta")] == ((F(1, 32), "s1"), (F(1, 32), "t2"), (F(15, 16), "trap"))
    assert g.mdp.weight[("t2", "back")] == -2
    assert g.validate() == []


def test_recurrence_zero_coefficients():
    g = build_recurrence((0, 0))
    assert g.mdp.trans[("t", "gamma")] == ((1, "trap"),)
    assert g.validate() == []


def test_recurrence_rejects_large_mass():
    with pytest.raises(ValueError):
        build_recurrence((F(1, 2), F(-1, 2)))


def test_termination_init_values():
    g = build_termination_init_values(BETAS)
    # (k-j)/(k+1) + b'_j with k=2, j=0
    assert g.mdp.trans[("t", "gamma0")][0] == (F(2, 3) + F(1, 512), "x0")
    assert g.validate() == []


def test_termination_delta_independent_of_betas():
    a = build_termination_init_values(BETAS).mdp
    b = build_termination_init_values((0, 0)).mdp
    for j in range(2):
        assert a.trans[("s", f"delta{j}")] == b.trans[("s", f"delta{j}")]


@pytest.mark.parametrize("j", [0, 1])
def test_termination_probability_after_gamma_j(j):
    mdp = direct_mdp(ALPHAS, BETAS, th.TERM_MAX)
    sched = WeightScheduler(table={("t", j): f"gamma{j}"})
    assert scheduler_value(mdp, sched, "t", j, "termination") == F(2 - j, 3) + BETAS[j]


def test_min_termination_init_values():
    g = build_min_termination_init_values(BETAS)
    # (j+1)/(k+1) + b'_j with k=2, j=1
    assert g.mdp.trans[("t", "gamma1")][0] == (F(2, 3) + F(1, 1024), "x1")
    assert g.mdp.weight[("pretrap", "drop")] == -2
    assert g.validate() == []


def test_min_termination_literal_variant_keeps_pretrap_branch():
    g = build_min_termination_init_values(BETAS, literal=True)
    assert "drain" not in g.mdp.states
    assert [r for _, r in g.mdp.trans[("t", "gamma0")]] == ["x0", "pretrap"]


def test_min_termination_literal_variant_breaks_local_optimality():
    # with the remainder into pretrap, gamma0 at a weight >= k never
    # terminates, so the minimiser prefers it over the recurrence action
    from lrsreduce.analysis import SchedulerEvaluator

    mdp = assemble(build_initial(), build_recurrence(ALPHAS, "pretrap"),
                   build_min_termination_init_values(BETAS, literal=True))
    ev = SchedulerEvaluator(mdp, th.prescribed_scheduler(2, th.TERM_MIN), "termination")
    assert ev.action_value("t", 2, "gamma0") == 0
    assert ev.action_value("t", 2, "gamma") > 0
    fixed = direct_mdp(ALPHAS, BETAS, th.TERM_MIN)
    ev = SchedulerEvaluator(fixed, th.prescribed_scheduler(2, th.TERM_MIN), "termination")
    assert ev.action_value("t", 2, "gamma0") > ev.action_value("t", 2, "gamma")


def test_partial_init_values():
    g = build_partial_init_values(BETAS)
    # 1/(2 k^(2(k-j))) + b'_j with k=2, j=1
    assert g.mdp.trans[("x1", "exit")][0] == (F(1, 8) + F(1, 1024), "goal")
    assert g.mdp.weight[("t", "gamma0")] == 2
    assert g.mdp.weight[("t", "gamma1")] == 1
    assert base_prob(2, 1) == F(1, 8)


@pytest.mark.parametrize("j", [0, 1])
def test_partial_expectation_after_gamma_j(j):
    mdp = direct_mdp(ALPHAS, BETAS, th.PARTIAL_KIND)
    w = -(2 - 1) + j
    sched = WeightScheduler(table={("t", w): f"gamma{j}"})
    assert scheduler_value(mdp, sched, "t", w, "partial") == base_prob(2, j) + BETAS[j]


@pytest.mark.parametrize("j", [0, 1])
def test_two_sided_goal_probability(j):
    a = F(1, 16)
    g = build_two_sided_init_values(BETAS, a)
    res = transient_distribution(started_at(g.mdp, f"x{j}", 0), WeightScheduler(), 400)
    goal = res.mass(lambda q, w: q == "goal")
    assert goal <= base_prob(2, j) + BETAS[j] <= goal + res.tail
    assert res.tail < F(1, 2**100)


def test_two_sided_expected_extra_steps():
    a = F(1, 16)
    g = build_two_sided_init_values(BETAS, a)
    res = transient_distribution(started_at(g.mdp, "x0", 0), WeightScheduler(), 400)
    steps = sum(res.outcome_steps.values()) - 1  # minus the lift step
    # 2/(1-a) - 1
    assert steps <= F(17, 15) <= steps + F(1, 2**90)


def test_two_sided_loop_weights_zero():
    g = build_two_sided_init_values(BETAS, F(1, 16))
    for (q, a), w in g.mdp.weight.items():
        if q not in ("t", "s"):
            assert w == 0


@pytest.mark.parametrize("i,j", [(0, 0), (0, 1), (1, 1)])
def test_cvar_min_goal_expectation(i, j):
    k, a = 2, F(1, 16)
    betas = (F(1, 100), F(1, 60))
    g = build_cvar_init_values(betas, a)
    mdp = started_at(g.mdp, "s", -k + j)
    sched = WeightScheduler(table={("s", -k + j): f"delta{i}"})
    res = transient_distribution(mdp, sched, 2000, tail_target=F(1, 2**60))
    e = res.expectation(lambda q, w: min(w, 0) if q == "goal" else 0)
    tol = sum((m * (abs(w) + 2 * (k + 1)) for (_, w), m in res.alive.items()), F(0))
    expected = a * (-3 * k + j + i - 1) - betas[i]
    assert abs(e - expected) <= tol < F(1, 2**50)
    # t side: same with b'_i = 0
    mdp = started_at(g.mdp, "t", -k + j)
    sched = WeightScheduler(table={("t", -k + j): f"gamma{i}"})
    res = transient_distribution(mdp, sched, 2000, tail_target=F(1, 2**60))
    e = res.expectation(lambda q, w: min(w, 0) if q == "goal" else 0)
    tol = sum((m * (abs(w) + 2 * (k + 1)) for (_, w), m in res.alive.items()), F(0))
    assert abs(e - a * (-3 * k + j + i - 1)) <= tol


def test_cvar_helper_paths_end_negative():
    k, a = 2, F(1, 16)
    g = build_cvar_init_values((F(1, 100), F(1, 60)), a)
    for i in range(k):
        for j in range(i, k):
            w0 = -k + j
            sched = WeightScheduler(table={("s", w0): f"delta{i}"})
            res = transient_distribution(started_at(g.mdp, "s", w0), sched, 40)
            for (q, w), m in res.outcomes.items():
                if w < 0 or q != "goal":
                    continue
                # only the direct goal branch (weight j - i >= 0) ends nonnegative
                assert w == j - i
            assert all(w <= -k - 2 for (q, w) in res.outcomes if q == "goal" and w < 0)


def test_cvar_uncollapsed_same_values():
    betas = (F(1, 100), F(1, 60))
    a = F(1, 16)
    m1 = build_cvar_init_values(betas, a).mdp
    m2 = build_cvar_init_values(betas, a, collapse=False).mdp
    assert "ypm0" in m2.states and "ypm0" not in m1.states
    sched = WeightScheduler(table={("s", -1): "delta1"})
    r1 = transient_distribution(started_at(m1, "s", -1), sched, 300)
    r2 = transient_distribution(started_at(m2, "s", -1), sched, 300)
    goal = lambda q, w: min(w, 0) if q == "goal" else 0  # noqa: E731
    assert abs(r1.expectation(goal) - r2.expectation(goal)) < F(1, 2**40)


def test_assemble_termination_state_count():
    m = reduced("reference-negative", "max-termination").mdp
    assert len(m.states) == 2 + (2 + 2 * 2 + 1) + 2 * 2
    assert validate(m) == []


def test_assemble_order_independent():
    parts = [build_initial(), build_recurrence(ALPHAS), build_termination_init_values(BETAS)]
    assert canonical(assemble(*parts)) == canonical(assemble(*reversed(parts)))


def test_assemble_collision():
    g = build_termination_init_values(BETAS)
    other = Gadget(g.mdp, {"t": "t"})  # x0 etc. are private to both copies
    with pytest.raises(ValueError):
        assemble(build_initial(), g, other)


def test_gadget_json_roundtrip():
    g = build_partial_init_values(BETAS)
    assert Gadget.from_json(g.to_json()) == g


def hand_made(reaches_trap):
    """Smallest termination-shaped MDP: from t (or s) the weight drops by one
    every two steps, or - with ``reaches_trap`` - t moves straight to trap."""
    b = MdpBuilder("s_init")
    b.add_action("s_init", "step", 1, [(F(1, 2), "s_init"), (F(1, 2), "choice")])
    b.add_action("choice", "tau", 0, [(1, "t")])
    b.add_action("choice", "sigma", 0, [(1, "s")])
    for anchor in ("t", "s"):
        b.add_action(anchor, "g", 0, [(1, "trap" if reaches_trap else f"{anchor}x")])
        b.add_action(f"{anchor}x", "drop", -1, [(1, anchor)])
    b.absorbing("trap")
    b.mark("trap", "trap")
    return b.build()


@pytest.mark.parametrize("reaches_trap,expected", [(False, 8), (True, 11)])
def test_time_variant_expected_time(reaches_trap, expected):
    # 8 + 3p with p = Pr(reach trap)
    m = build_time_variant(hand_made(reaches_trap))
    sched = WeightScheduler(fixed={"s_init": "tau"})
    res = transient_distribution(m, sched, 3000, stop_below=0, tail_target=F(1, 2**64))
    e = sum(res.outcome_steps.values(), F(0))
    assert e <= expected <= e + F(1, 2**50)
    assert set(m.weight.values()) <= {-1, 0, 1}


@pytest.mark.parametrize("w", [0, 1, 3, 6])
def test_time_variant_early_termination_takes_two_w_plus_two_steps(w):
    m = reduced("reference-negative", "max-termination-time").mdp
    sched = th.prescribed_scheduler(2, th.TERM_MIN, time_variant=True)
    res = transient_distribution(started_at(m, "t", w), sched, 400, stop_below=0)
    trap_side = {q for q in m.states if q.startswith("trap")}
    for key, mass in res.outcomes.items():
        if key[0] not in trap_side:
            assert res.outcome_steps[key] == mass * (2 * (w + 1) + 1)  # + lift step


def test_time_variant_state_counts():
    assert len(reduced("reference-negative", "max-termination-time").mdp.states) == 23
    term = build_min_termination_init_values(BETAS, literal=True)
    assert term.validate() == []
