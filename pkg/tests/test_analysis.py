from fractions import Fraction as F

import pytest

from conftest import reduced
from lrsreduce import threshold as th
from lrsreduce.analysis import (
    TERMINATION, WeightScheduler, absorption_step_bound, random_scheduler,
    simulate, transient_distribution, value_iteration, weight_unfold,
)
from lrsreduce.gadgets import build_initial
from lrsreduce.mdp import MdpBuilder


def one_step_termination():
    b = MdpBuilder("q")
    b.add_action("q", "drop", -1, [(1, "sink")])
    b.absorbing("sink")
    return b.build()


def initial_only():
    """The initial gadget with choice made terminal."""
    b = MdpBuilder.from_mdp(build_initial().mdp)
    b.remove_actions("choice")
    return b.build()


def test_unfold_one_step_chain():
    u = weight_unfold(one_step_termination(), TERMINATION, -1, 3, "pessimistic")
    vb = value_iteration(u, "max")
    assert vb.at("q", 0) == 1
    assert vb.at("sink", 0) == 0


def test_unfold_boundaries():
    b = MdpBuilder("q")
    b.add_action("q", "up", 1, [(1, "q")])
    m = b.build()
    opt = value_iteration(weight_unfold(m, TERMINATION, -1, 5, "optimistic"), "max")
    pes = value_iteration(weight_unfold(m, TERMINATION, -1, 5, "pessimistic"), "max")
    assert opt.at("q", 5) == 1 and pes.at("q", 5) == 0


def test_unfold_state_count():
    m = reduced("reference-negative", "max-termination").mdp
    u = weight_unfold(m, TERMINATION, -3, 40, "optimistic")
    assert u.size == len(m.states) * (40 - (-3) + 1) + 2


def test_unfold_rejects_bad_window():
    with pytest.raises(ValueError):
        weight_unfold(one_step_termination(), TERMINATION, 0, 3, "optimistic")


def test_goal_state_worth_zero():
    b = MdpBuilder("g")
    b.add_state("g")
    vb = value_iteration(weight_unfold(b.build(), TERMINATION, -1, 4, "optimistic"), "max")
    assert all(vb.at("g", w) == 0 for w in range(-1, 5))


def test_interval_narrow_on_reference_instance():
    m = reduced("reference-negative", "max-termination").mdp
    lo = value_iteration(weight_unfold(m, TERMINATION, -3, 30, "pessimistic"), "max")
    hi = value_iteration(weight_unfold(m, TERMINATION, -3, 30, "optimistic"), "max")
    assert 0 <= hi.at("t", 5) - lo.at("t", 5) < F(1, 2**20)


def test_transient_absorbing_initial():
    b = MdpBuilder("q")
    b.absorbing("q")
    res = transient_distribution(b.build(), WeightScheduler(), 5)
    assert res.outcomes == {("q", 0): 1}
    assert res.tail == 0


def test_transient_initial_gadget_budget_three():
    res = transient_distribution(initial_only(), WeightScheduler(), 3)
    assert res.outcomes == {("choice", 1): F(1, 2), ("choice", 2): F(1, 4), ("choice", 3): F(1, 8)}
    assert res.tail == F(1, 8)


def test_transient_mass_conservation():
    m = reduced("reference-negative", "partial-sspp-max").mdp
    res = transient_distribution(m, random_scheduler(m, 3, (-4, 24)), 40)
    assert res.total == 1


def test_transient_tail_target_stops_early():
    res = transient_distribution(initial_only(), WeightScheduler(), 10_000, tail_target=F(1, 2**20))
    assert res.tail <= F(1, 2**20)
    assert res.steps == 20


def test_scheduler_errors():
    m = reduced("reference-negative", "max-termination").mdp
    with pytest.raises(KeyError):
        WeightScheduler().choose(m, "choice", 1)
    sched = WeightScheduler(fixed={"choice": "gamma"})
    assert sched.check(m) == ["fixed[choice] = gamma"]


def test_prescribed_scheduler_defined_everywhere():
    m = reduced("reference-negative", "max-termination").mdp
    sched = th.prescribed_scheduler(2, th.TERM_MAX)
    assert sched.check(m) == []
    for w in range(-3, 30):
        for q in ("t", "s"):
            assert sched.choose(m, q, w) in m.actions(q)


def test_simulate_deterministic_termination():
    st = simulate(one_step_termination(), WeightScheduler(), 50, seed=1, step_cap=10)
    assert st.termination_frequency == 1.0


def test_simulate_initial_gadget_weight_one():
    # with step_cap=1 an episode escapes the cap iff choice is hit at weight 1
    n = 100_000
    st = simulate(initial_only(), WeightScheduler(), n, seed=7, step_cap=1)
    freq = (n - st.capped) / n
    sigma = (0.25 / n) ** 0.5
    assert abs(freq - 0.5) < 3 * sigma


def test_simulate_same_seed_same_stats():
    m = reduced("reference-negative", "max-termination").mdp
    sched = th.prescribed_scheduler(2, th.TERM_MAX)
    a = simulate(m, sched, 500, seed=3, step_cap=500)
    b = simulate(m, sched, 500, seed=3, step_cap=500)
    assert a == b


def test_absorption_step_bound():
    assert absorption_step_bound(one_step_termination()) == 8
    b = MdpBuilder("q")
    b.add_action("q", "stay", 0, [(1, "q")])
    b.add_action("q", "go", 0, [(1, "z")])
    b.add_state("z")
    assert absorption_step_bound(b.build()) is None
