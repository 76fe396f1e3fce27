"""Command-line front end.

    lrsreduce reduce   --target max-termination --in lrs.json --out inst.json
    lrsreduce verify   --instance inst.json [--lrs lrs.json] [--out report.json]
    lrsreduce eval-lrs --in lrs.json --n 20
    lrsreduce export   --instance inst.json --format prism [--integerize] [--unary]
    lrsreduce info     [--instance inst.json]

Sequence inputs may also name a bundled example: builtin:reference-negative,
builtin:reference-nonnegative, builtin:fibonacci.

Exit status: 0 ok, 1 verification failure, 2 parse error,
3 trivially negative sequence, 4 export precondition failure.
"""

import argparse
import json
import sys

from . import __version__, kernels
from .lrs import Lrs, evaluate, first_negative, reference
from .mdp import integerize_weights, to_prism, unary_expand
from .rational import fmt_rat
from .reductions import ReductionOutput, ReductionTarget, TriviallyNegative, reduce
from .verify import verify_all

OK, VERIFY_FAILED, PARSE_ERROR, TRIVIALLY_NEGATIVE, EXPORT_FAILED = 0, 1, 2, 3, 4


class InputError(Exception):
    pass


def _load_json(path):
    try:
        if path == "-":
            return json.load(sys.stdin)
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"{path}: {exc}") from exc


def _parse(loader, obj, what):
    try:
        return loader(obj)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed {what}: {exc}") from exc


def load_lrs(path):
    """A sequence from a JSON file, stdin ("-"), or a bundled name ("builtin:fibonacci")."""
    if path.startswith("builtin:"):
        try:
            return reference(path.removeprefix("builtin:"))
        except ValueError as exc:
            raise InputError(str(exc)) from exc
    return _parse(Lrs.from_json, _load_json(path), "sequence")


def load_instance(path):
    return _parse(ReductionOutput.from_json, _load_json(path), "instance")


def _dump(obj, path):
    text = json.dumps(obj, indent=2, sort_keys=False, ensure_ascii=False) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _write_text(text, path):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def cmd_reduce(args):
    lrs = load_lrs(args.input)
    try:
        target = ReductionTarget.parse(args.target)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    try:
        out = reduce(lrs, target)
    except TriviallyNegative as exc:
        value = fmt_rat(exc.value).replace("-", "−", 1)
        print(f"trivially negative instance: u_{exc.index} = {value} < 0", file=sys.stderr)
        return TRIVIALLY_NEGATIVE
    _dump(out.to_json(), args.out)
    where = sys.stderr if args.out in (None, "-") else sys.stdout
    print(f"theta = {fmt_rat(out.theta)}  direction = {out.direction}", file=where)
    return OK


def cmd_verify(args):
    out = load_instance(args.instance)
    lrs = load_lrs(args.lrs) if args.lrs else None
    report = None
    if lrs is not None and lrs.to_json() != out.meta.get("source"):
        from .verify import VerifyReport

        report = VerifyReport().add("instance-matches-lrs", False, {},
                                    {"note": "instance was not built from the given sequence"})
    if report is None:
        try:
            report = verify_all(out, lrs, window=args.window, truncation=args.truncation,
                                budget=args.budget, seeds=args.seeds, seed=args.seed,
                                unfold_hi=args.unfold_hi)
        except (KeyError, ValueError) as exc:
            raise InputError(f"cannot verify instance: {exc}") from exc
    if args.out:
        _dump(report.to_json(), args.out)
    for c in sorted(report.checks, key=lambda c: c.name):
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}")
    return OK if report.ok else VERIFY_FAILED


def cmd_eval_lrs(args):
    lrs = load_lrs(args.input)
    for n in range(args.n + 1):
        print(fmt_rat(evaluate(lrs, n)))
    neg = first_negative(lrs, args.n)
    print(f"first-negative: {'none' if neg is None else neg}")
    return OK


def cmd_export(args):
    out = load_instance(args.instance)
    mdp, theta = out.mdp, out.theta
    if args.integerize:
        mdp, theta = integerize_weights(mdp, theta)
    if args.unary:
        if not mdp.has_integer_weights() or mdp.fail_weight is not None:
            print("unary expansion needs a single integer weight function "
                  "(try --integerize)", file=sys.stderr)
            return EXPORT_FAILED
        mdp = unary_expand(mdp)
    if args.format == "prism":
        if not mdp.has_integer_weights():
            print("PRISM export needs integer weights (use --integerize)", file=sys.stderr)
            return EXPORT_FAILED
        _write_text(to_prism(mdp), args.out)
    else:
        _dump(mdp.to_json(), args.out)
    if theta != out.theta:
        print(f"scaled threshold = {fmt_rat(theta)}", file=sys.stderr)
    return OK


def cmd_info(args):
    if args.instance:
        out = load_instance(args.instance)
        m = out.meta
        print(f"target:     {out.target.value}")
        print(f"direction:  {out.direction}")
        print(f"theta:      {fmt_rat(out.theta)}")
        if out.cvar_p is not None:
            print(f"cvar p:     {fmt_rat(out.cvar_p)}")
        print(f"states:     {len(out.mdp.states)}")
        print(f"k:          {m.get('k')}   lambda: {m.get('lambda')}   mu: {m.get('mu')}")
        print(f"objective:  {m.get('objective')}")
        return OK
    print(f"lrsreduce {__version__} (kernels: {kernels.BACKEND})")
    print("targets:")
    for t in ReductionTarget:
        print(f"  {t.value}")
    return OK


def build_parser():
    p = argparse.ArgumentParser(prog="lrsreduce", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("reduce", help="build a decision instance from a sequence")
    r.add_argument("--target", required=True)
    r.add_argument("--in", dest="input", required=True)
    r.add_argument("--out")
    r.set_defaults(func=cmd_reduce)

    v = sub.add_parser("verify", help="run the exact checks on an instance")
    v.add_argument("--instance", required=True)
    v.add_argument("--lrs")
    v.add_argument("--out")
    v.add_argument("--window", type=int, default=50)
    v.add_argument("--truncation", type=int, default=64)
    v.add_argument("--budget", type=int, default=10_000)
    v.add_argument("--seeds", type=int, default=5, help="number of random schedulers")
    v.add_argument("--seed", type=int, default=0, help="first random-scheduler seed")
    v.add_argument("--unfold-hi", type=int, default=None,
                   help="upper weight of the unfolding (default max(12k, 40))")
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("eval-lrs", help="print u_0..u_N and the first negative index")
    e.add_argument("--in", dest="input", required=True)
    e.add_argument("--n", type=int, default=20)
    e.set_defaults(func=cmd_eval_lrs)

    x = sub.add_parser("export", help="write the instance's MDP as JSON or PRISM text")
    x.add_argument("--instance", required=True)
    x.add_argument("--format", choices=("json", "prism"), default="json")
    x.add_argument("--integerize", action="store_true")
    x.add_argument("--unary", action="store_true")
    x.add_argument("--out")
    x.set_defaults(func=cmd_export)

    i = sub.add_parser("info", help="summarise an instance or list the targets")
    i.add_argument("--instance")
    i.set_defaults(func=cmd_info)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return PARSE_ERROR if exc.code else OK
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return PARSE_ERROR


if __name__ == "__main__":
    sys.exit(main())
