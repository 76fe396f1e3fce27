"""Canonical string form for exact rationals ("p/q", integers may omit "/q")."""

from fractions import Fraction
from numbers import Rational


def to_rat(x):
    """Coerce ints, Fractions and "p/q" strings to a Fraction.

    Floats are refused on purpose: they would silently smuggle rounding
    error into an exact pipeline.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, str):
        s = x.strip()
        if not s:
            raise ValueError("empty rational")
        num, sep, den = s.partition("/")
        try:
            if sep:
                return Fraction(int(num), int(den))
            return Fraction(int(num))
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not a rational: {x!r}") from exc
    raise TypeError(f"cannot convert {type(x).__name__} to an exact rational")


def fmt_rat(x):
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def fmt_vec(xs):
    return [fmt_rat(x) for x in xs]
