"""Pure-Python hot loops; the compiled module ``_kernels`` mirrors this API."""


def bellman_sweep(order, act_ptr, br_ptr, br_prob, br_dst, values, maximize):
    """One pass over ``order`` writing the Bellman optimum into ``values``.

    Node n owns actions act_ptr[n]..act_ptr[n+1]-1; action a owns branches
    br_ptr[a]..br_ptr[a+1]-1.  Nodes without actions keep their value.
    Returns the largest absolute change (0 when ``order`` is topological).
    """
    delta = 0
    for n in order:
        a0 = act_ptr[n]
        a1 = act_ptr[n + 1]
        if a0 == a1:
            continue
        best = None
        for a in range(a0, a1):
            acc = 0
            for b in range(br_ptr[a], br_ptr[a + 1]):
                acc += br_prob[b] * values[br_dst[b]]
            if best is None or (acc > best if maximize else acc < best):
                best = acc
        diff = abs(best - values[n])
        if diff > delta:
            delta = diff
        values[n] = best
    return delta


def push_mass(sources, br_ptr, br_prob, br_dst, br_shift, out):
    """Distribute mass along the chosen actions.

    ``sources`` holds (action_id, weight, mass) triples; every branch b of
    the action sends prob*mass to (br_dst[b], weight + br_shift[b]) which is
    accumulated into the dict ``out``.
    """
    for a, w, m in sources:
        for b in range(br_ptr[a], br_ptr[a + 1]):
            key = (br_dst[b], w + br_shift[b])
            pm = br_prob[b] * m
            if key in out:
                out[key] += pm
            else:
                out[key] = pm
