from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lrsreduce import _kernels_py as pure
from lrsreduce import kernels

try:
    from lrsreduce import _kernels as compiled
except ImportError:  # extension not built
    compiled = None

needs_compiled = pytest.mark.skipif(compiled is None, reason="compiled kernels not built")

probs = st.fractions(min_value=0, max_value=1, max_denominator=16)


@st.composite
def csr(draw):
    n = draw(st.integers(1, 6))
    act_ptr, br_ptr, br_prob, br_dst, br_shift = [0], [0], [], [], []
    for _ in range(n):
        for _ in range(draw(st.integers(0, 3))):
            for _ in range(draw(st.integers(1, 3))):
                br_prob.append(draw(probs))
                br_dst.append(draw(st.integers(0, n - 1)))
                br_shift.append(draw(st.integers(-3, 3)))
            br_ptr.append(len(br_prob))
        act_ptr.append(len(br_ptr) - 1)
    values = [draw(probs) for _ in range(n)]
    return n, act_ptr, br_ptr, br_prob, br_dst, br_shift, values


def test_backend_name():
    assert kernels.BACKEND in ("cython", "python")


@needs_compiled
@settings(max_examples=200, deadline=None)
@given(csr(), st.booleans())
def test_bellman_parity(data, maximize):
    n, act_ptr, br_ptr, br_prob, br_dst, _, values = data
    order = list(range(n))
    v1, v2 = list(values), list(values)
    d1 = pure.bellman_sweep(order, act_ptr, br_ptr, br_prob, br_dst, v1, maximize)
    d2 = compiled.bellman_sweep(order, act_ptr, br_ptr, br_prob, br_dst, v2, maximize)
    assert v1 == v2 and d1 == d2


@needs_compiled
@settings(max_examples=200, deadline=None)
@given(csr(), st.lists(st.tuples(st.integers(-5, 5), probs), min_size=1, max_size=5))
def test_push_mass_parity(data, starts):
    n, act_ptr, br_ptr, br_prob, br_dst, br_shift, _ = data
    n_actions = len(br_ptr) - 1
    if n_actions == 0:
        return
    sources = [(i % n_actions, w, m) for i, (w, m) in enumerate(starts)]
    o1, o2 = {}, {}
    pure.push_mass(sources, br_ptr, br_prob, br_dst, br_shift, o1)
    compiled.push_mass(sources, br_ptr, br_prob, br_dst, br_shift, o2)
    assert o1 == o2


def test_pure_sweep_small_example():
    # node 0: max over {0.5 * v1, v2}; node 1, 2 fixed
    values = [F(0), F(1, 2), F(1, 3)]
    delta = pure.bellman_sweep([0], [0, 2, 2, 2], [0, 1, 2], [F(1, 2), F(1)], [1, 2], values, True)
    assert values[0] == F(1, 3) and delta == F(1, 3)
