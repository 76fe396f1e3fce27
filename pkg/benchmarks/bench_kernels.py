"""Compare the compiled and pure-Python kernels on the two hot paths.

    python3 benchmarks/bench_kernels.py [--repeat 3]

Each backend runs in a fresh interpreter (LRSREDUCE_PURE=1 selects the
fallback), so the timings include nothing but the workload.
"""

import argparse
import json
import os
import subprocess
import sys

WORKLOAD = r"""
import json, time
from fractions import Fraction
from lrsreduce import kernels, threshold as th
from lrsreduce.analysis import TERMINATION, transient_distribution, value_iteration, weight_unfold
from lrsreduce.lrs import reference
from lrsreduce.reductions import reduce

out = reduce(reference("reference-negative"), "max-termination")
part = reduce(reference("reference-negative"), "partial-sspp-max")
sched = th.prescribed_scheduler(2, th.PARTIAL_KIND)
res = {"backend": kernels.BACKEND}
for _ in range(REPEAT):
    t = time.perf_counter()
    for boundary in ("optimistic", "pessimistic"):
        value_iteration(weight_unfold(out.mdp, TERMINATION, -3, 2000, boundary), "max")
    res.setdefault("value_iteration", []).append(time.perf_counter() - t)
    t = time.perf_counter()
    transient_distribution(part.mdp, sched, 10_000, tail_target=Fraction(1, 2**200))
    res.setdefault("transient", []).append(time.perf_counter() - t)
print(json.dumps(res))
"""


def run(pure, repeat):
    env = dict(os.environ)
    if pure:
        env["LRSREDUCE_PURE"] = "1"
    else:
        env.pop("LRSREDUCE_PURE", None)
    code = WORKLOAD.replace("REPEAT", str(repeat))
    out = subprocess.run([sys.executable, "-c", code], env=env, check=True,
                         capture_output=True, text=True)
    return json.loads(out.stdout)


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    fast = run(False, args.repeat)
    slow = run(True, args.repeat)
    if fast["backend"] != "cython":
        print("compiled kernels not built; both runs use the pure-Python fallback")
    print(f"{'workload':<16}{'python [s]':>12}{fast['backend'] + ' [s]':>14}{'speedup':>10}")
    for key in ("value_iteration", "transient"):
        a, b = min(slow[key]), min(fast[key])
        print(f"{key:<16}{a:>12.3f}{b:>14.3f}{a / b:>9.2f}x")


if __name__ == "__main__":
    main()
