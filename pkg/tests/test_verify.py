import dataclasses
from fractions import Fraction as F

import pytest

from conftest import reduced
from lrsreduce import threshold as th
from lrsreduce.lrs import Lrs, normalize
from lrsreduce.mdp import MdpBuilder
from lrsreduce.reductions import ReductionTarget, direct_mdp, reduce
from lrsreduce.verify import (
    TAIL_LIMIT, VerifyReport, certified_interval, check_certify_interval, check_deviation,
    check_difference_sequence, check_local_optimality, check_matrix_identities,
    check_theta_series, check_wrapper_identities, cvar_from_outcomes, verify_all,
)
from oracles import scheduler_value

T = ReductionTarget
DIRECT = [T.MAX_TERMINATION, T.MIN_TERMINATION, T.PARTIAL_SSPP_MAX, T.CVAR_MAX]


def detail(rep, name):
    return next(c for c in rep.checks if c.name == name)


@pytest.mark.parametrize("target", DIRECT)
@pytest.mark.parametrize("name", ["reference-negative", "reference-nonnegative"])
def test_difference_sequence(name, target):
    rep = check_difference_sequence(reduced(name, target), window=50)
    assert rep.ok


def test_difference_sequence_first_terms():
    out = reduced("reference-negative", T.MAX_TERMINATION)
    norm = out.normalization()
    al, be = norm.normalized.coefficients, norm.normalized.initials
    table = th.scheduler_values(al, be, th.TERM_MAX, 1)
    assert table.d(0) == be[0]
    assert table.d(2) == al[0] * be[1] + al[1] * be[0]


def test_difference_sequence_zero_initials():
    out = reduce(Lrs([F(1, 2), F(-1, 3)], [0, 0]), T.MAX_TERMINATION)
    norm = out.normalization()
    table = th.scheduler_values(norm.normalized.coefficients, norm.normalized.initials,
                                th.TERM_MAX, 30)
    assert all(table.d(w) == 0 for w in range(0, 60))
    assert check_difference_sequence(out).ok


@pytest.mark.parametrize("target", DIRECT)
def test_matrix_identities(target):
    rep = check_matrix_identities(reduced("reference-negative", target))
    assert rep.ok, [c.witness for c in rep.failures()]
    assert {c.name for c in rep.checks} >= {"block-recursion", "neumann-inverse",
                                            "finite-sum-identities", "row-sum-bound"}


@pytest.mark.parametrize("target", DIRECT)
@pytest.mark.parametrize("name", ["reference-negative", "reference-nonnegative"])
def test_local_optimality(name, target):
    rep = check_local_optimality(reduced(name, target))
    assert rep.ok, [c.witness for c in rep.failures()]


def test_local_optimality_gamma_j_at_base():
    # at t with weight j < k the prescribed gamma_j beats the other actions
    k = 2
    out = reduced("reference-negative", T.MAX_TERMINATION)
    norm = out.normalization()
    mdp = direct_mdp(norm.normalized.coefficients, norm.normalized.initials, th.TERM_MAX)
    sched = th.prescribed_scheduler(k, th.TERM_MAX)
    for w in range(0, 3 * k):
        vals = {}
        for a in mdp.actions("t"):
            s2 = sched.with_choice("t", w, a)
            vals[a] = scheduler_value(mdp, s2, "t", w, "termination")
        best = max(vals, key=vals.get)
        assert best == (f"gamma{w}" if w < k else "gamma")


def test_local_optimality_detects_bad_prescription():
    out = reduced("reference-negative", T.MAX_TERMINATION)
    orig = th.prescribed_scheduler

    def wrong(k, kind, time_variant=False):
        s = orig(k, kind, time_variant)
        return s.with_choice("t", 5, "gamma0")

    th.prescribed_scheduler = wrong
    try:
        rep = check_local_optimality(out)
    finally:
        th.prescribed_scheduler = orig
    assert not rep.ok


def test_theta_series_reports_tail():
    rep = check_theta_series(reduced("reference-negative", T.MAX_TERMINATION))
    assert rep.ok
    c = detail(rep, "theta-series-T64")
    assert c.detail["bound"] < F(1, 2**60)


def test_theta_series_zero_instance_exact():
    out = reduce(Lrs([0, 0], [0, 0]), T.MAX_TERMINATION)
    rep = check_theta_series(out)
    assert rep.ok
    assert detail(rep, "theta-series-T64").detail["residual"] == 0


def test_theta_series_catches_wrong_threshold():
    out = reduced("reference-negative", T.PARTIAL_SSPP_MAX)
    bad = dataclasses.replace(out, theta=out.theta + F(1, 10**30))
    rep = check_theta_series(bad)
    assert not rep.ok
    assert detail(rep, "threshold-consistency").witness["emitted"] == bad.theta


def test_deviation_margin_negative_instance():
    out = reduced("reference-negative", T.MAX_TERMINATION)
    rep = check_deviation(out)
    c = detail(rep, "deviation")
    assert c.passed
    w = c.detail["choice_weight"]
    assert w == 2
    norm = out.normalization()
    mdp = direct_mdp(norm.normalized.coefficients, norm.normalized.initials, th.TERM_MAX)
    sched = th.prescribed_scheduler(2, th.TERM_MAX)
    vt = scheduler_value(mdp, sched, "t", w, "termination")
    vs = scheduler_value(mdp, sched, "s", w, "termination")
    assert c.detail["margin"] == F(1, 2**w) * (vs - vt) > 0
    # the difference at the deviation weight is the (negative) normalised term
    from lrsreduce.lrs import evaluate
    assert vt - vs == evaluate(norm.normalized, w) < 0


@pytest.mark.parametrize("target", DIRECT)
def test_deviation_all_direct_targets(target):
    assert check_deviation(reduced("reference-negative", target)).ok
    assert check_deviation(reduced("reference-nonnegative", target)).ok


def test_deviation_fibonacci_none_within_50(fibonacci):
    rep = check_deviation(reduce(fibonacci, T.MAX_TERMINATION), bound=50)
    assert rep.ok and rep.checks[0].name == "no-improving-deviation"


def test_deviation_zero_sequence_ties():
    rep = check_deviation(reduce(Lrs([0, 0], [0, 0]), T.MAX_TERMINATION))
    assert rep.ok
    assert rep.checks[0].warnings


def test_cvar_from_outcomes():
    assert cvar_from_outcomes({-3: F(1, 4), 0: F(3, 4)}, F(1, 2)) == (0, F(-3, 2))
    assert cvar_from_outcomes({-1: F(1, 2), 2: F(1, 2)}, F(1, 2)) == (-1, -1)
    with pytest.raises(ValueError):
        cvar_from_outcomes({0: F(1, 4)}, F(1, 2))


@pytest.mark.parametrize("target", [T.CONDITIONAL_SSPP_MAX, T.TWO_SIDED_PARTIAL, T.CVAR_MAX,
                                    T.MAX_TERMINATION_TIME, T.MIN_TERMINATION_TIME,
                                    T.COST_MAX, T.COST_MIN, T.ENERGY_MAX])
def test_wrapper_identities(target):
    rep = check_wrapper_identities(reduced("reference-negative", target))
    assert rep.ok, [(c.name, c.witness) for c in rep.failures()]
    for c in rep.checks:
        if "tail" in c.detail:
            assert c.detail["tail"] < TAIL_LIMIT


def test_two_sided_time_closed_form_in_bracket():
    rep = check_wrapper_identities(reduced("reference-negative", T.TWO_SIDED_PARTIAL))
    c = detail(rep, "two-sided-identity[prescribed]")
    assert c.detail["steps_lower"] <= c.detail["T"] <= c.detail["steps_upper"]


def test_cvar_two_thirds_at_zero():
    rep = check_wrapper_identities(reduced("reference-negative", T.CVAR_MAX))
    names = {c.name for c in rep.checks}
    assert any(n.startswith("cvar-identity") for n in names)
    for c in rep.checks:
        if "mass_at_zero" in c.detail:
            assert c.detail["mass_at_zero"] >= F(2, 3)


def test_certified_interval_trivial():
    b = MdpBuilder("q")
    b.add_action("q", "drop", -1, [(1, "z")])
    b.absorbing("z")
    assert certified_interval(b.build(), "max", -1, 5) == (1, 1)


def test_certify_interval_both_instances():
    neg = check_certify_interval(reduced("reference-negative", T.MAX_TERMINATION))
    assert neg.ok and detail(neg, "interval-certifies-improvement")
    pos = check_certify_interval(reduced("reference-nonnegative", T.MAX_TERMINATION))
    assert pos.ok and detail(pos, "interval-contains-theta")
    widths = detail(pos, "interval-width").detail["widths"]
    assert widths[0] >= widths[1]
    assert widths[1] < F(1, 2**20)


def test_verify_all_reference_negative():
    rep = verify_all(reduced("reference-negative", T.MAX_TERMINATION))
    assert rep.ok


def test_verify_detects_corrupted_probability():
    out = reduced("reference-negative", T.MAX_TERMINATION)
    trans = dict(out.mdp.trans)
    (p, r), rest = trans[("t", "gamma")][0], trans[("t", "gamma")][1:]
    trans[("t", "gamma")] = ((p + F(1, 1000), r),) + rest
    bad = dataclasses.replace(out, mdp=dataclasses.replace(out.mdp, trans=trans))
    rep = verify_all(bad)
    assert not rep.ok
    assert rep.failures()[0].name == "validate"


def test_verify_detects_foreign_instance():
    out = reduced("reference-negative", T.MAX_TERMINATION)
    other = reduced("reference-nonnegative", T.MAX_TERMINATION)
    meta = dict(out.meta, source=other.meta["source"])
    rep = verify_all(dataclasses.replace(out, meta=meta))
    assert not rep.ok and rep.failures()[0].name == "instance-matches-lrs"


def test_failure_reports_reproducible():
    out = reduced("reference-negative", T.CVAR_MAX)
    bad = dataclasses.replace(out, theta=out.theta * 2)
    first = verify_all(bad, seeds=1).to_json()
    second = verify_all(bad, seeds=1).to_json()
    assert not first["ok"]
    assert first == second


def test_report_sorted_json():
    rep = VerifyReport().add("b", True).add("a", False)
    obj = rep.to_json()
    assert [c["name"] for c in obj["checks"]] == ["a", "b"]
    assert obj["ok"] is False
    assert obj["checks"][0]["witness"] == {"note": "no witness recorded"}


def test_scaling_normalization_recorded_in_instances():
    out = reduced("reference-negative", T.PARTIAL_SSPP_MAX)
    assert out.normalization() == normalize(Lrs.from_json(out.meta["source"]))
