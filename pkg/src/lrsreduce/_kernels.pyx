# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled versions of the loops in _kernels_py (same signatures).

Fraction arithmetic dominates both loops, and each Fraction operation
normalises by a gcd.  push_mass carries its sums as raw (numerator,
denominator) integer pairs and normalises once per result; equal
denominators (the common case for dyadic masses) add without any
multiplication.
"""

from fractions import Fraction


cdef inline tuple _add(object an, object ad, object bn, object bd):
    if ad == bd:
        return an + bn, ad
    return an * bd + bn * ad, ad * bd


def bellman_sweep(list order, list act_ptr, list br_ptr, list br_prob,
                  list br_dst, list values, bint maximize):
    # Value-iteration denominators grow every sweep, so unreduced pairs get
    # large quickly here; plain Fractions measured faster for this loop.
    cdef Py_ssize_t i, n, a, a0, a1, b
    cdef object acc, best, diff
    cdef object delta = 0
    for i in range(len(order)):
        n = order[i]
        a0 = act_ptr[n]
        a1 = act_ptr[n + 1]
        if a0 == a1:
            continue
        best = None
        for a in range(a0, a1):
            acc = 0
            for b in range(br_ptr[a], br_ptr[a + 1]):
                acc = acc + br_prob[b] * values[<Py_ssize_t>br_dst[b]]
            if best is None or (acc > best if maximize else acc < best):
                best = acc
        diff = abs(best - values[n])
        if diff > delta:
            delta = diff
        values[n] = best
    return delta


def push_mass(list sources, list br_ptr, list br_prob, list br_dst,
              list br_shift, dict out):
    cdef Py_ssize_t a, b
    cdef object w, m, key, p, cur, mn, md
    cdef dict acc = {}
    for a, w, m in sources:
        mn = m.numerator
        md = m.denominator
        for b in range(br_ptr[a], br_ptr[a + 1]):
            key = (br_dst[b], w + br_shift[b])
            p = br_prob[b]
            cur = acc.get(key)
            if cur is None:
                acc[key] = (p.numerator * mn, p.denominator * md)
            else:
                acc[key] = _add(cur[0], cur[1], p.numerator * mn, p.denominator * md)
    for key, cur in acc.items():
        m = Fraction(cur[0], cur[1])
        old = out.get(key)
        out[key] = m if old is None else old + m
