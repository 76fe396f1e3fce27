"""Small dense matrices over Fraction: products, exact inverse, Neumann series."""

from fractions import Fraction

from .rational import fmt_rat, to_rat


class RatMatrix:
    __slots__ = ("rows",)

    def __init__(self, rows):
        rows = [[Fraction(x) for x in r] for r in rows]
        if rows and any(len(r) != len(rows[0]) for r in rows):
            raise ValueError("ragged matrix")
        self.rows = rows

    @classmethod
    def zeros(cls, n, m=None):
        return cls([[0] * (n if m is None else m) for _ in range(n)])

    @classmethod
    def identity(cls, n):
        return cls([[int(i == j) for j in range(n)] for i in range(n)])

    @property
    def shape(self):
        return (len(self.rows), len(self.rows[0]) if self.rows else 0)

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def __eq__(self, other):
        return isinstance(other, RatMatrix) and self.rows == other.rows

    def __repr__(self):
        return f"RatMatrix({[[fmt_rat(x) for x in r] for r in self.rows]})"

    def __add__(self, other):
        return RatMatrix([[a + b for a, b in zip(r, s)] for r, s in zip(self.rows, other.rows)])

    def __sub__(self, other):
        return RatMatrix([[a - b for a, b in zip(r, s)] for r, s in zip(self.rows, other.rows)])

    def scale(self, c):
        c = Fraction(c)
        return RatMatrix([[c * a for a in r] for r in self.rows])

    def __matmul__(self, other):
        if isinstance(other, RatMatrix):
            cols = list(zip(*other.rows))
            return RatMatrix([[sum((a * b for a, b in zip(r, c)), Fraction(0)) for c in cols]
                              for r in self.rows])
        return self.matvec(other)

    def matvec(self, v):
        return [sum((a * b for a, b in zip(r, v)), Fraction(0)) for r in self.rows]

    def vecmat(self, v):
        n, m = self.shape
        return [sum((v[i] * self.rows[i][j] for i in range(n)), Fraction(0)) for j in range(m)]

    def power(self, e):
        out = RatMatrix.identity(self.shape[0])
        base = self
        while e:
            if e & 1:
                out = out @ base
            base = base @ base
            e >>= 1
        return out

    def norm_inf(self):
        """Max absolute row sum (the operator norm induced by the max norm)."""
        return max((sum((abs(a) for a in r), Fraction(0)) for r in self.rows), default=Fraction(0))

    def to_json(self):
        return [[fmt_rat(x) for x in r] for r in self.rows]

    @classmethod
    def from_json(cls, obj):
        return cls([[to_rat(x) for x in r] for r in obj])


def mat_inverse(m):
    """Gauss-Jordan elimination over Fraction.

    Pivot choice: the non-zero candidate with the smallest numerator*denominator
    "height", which keeps intermediate entries short; exactness does not
    depend on it.
    """
    n, cols = m.shape
    if n != cols:
        raise ValueError("matrix is not square")
    a = [list(r) + [Fraction(int(i == j)) for j in range(n)] for i, r in enumerate(m.rows)]
    for c in range(n):
        cands = [r for r in range(c, n) if a[r][c] != 0]
        if not cands:
            raise ZeroDivisionError("matrix is singular")
        p = min(cands, key=lambda r: abs(a[r][c].numerator) * a[r][c].denominator)
        a[c], a[p] = a[p], a[c]
        piv = a[c][c]
        a[c] = [x / piv for x in a[c]]
        for r in range(n):
            if r != c and a[r][c] != 0:
                f = a[r][c]
                a[r] = [x - f * y for x, y in zip(a[r], a[c])]
    return RatMatrix([r[n:] for r in a])


def neumann(a, scale):
    """(I - scale*A)^-1, which equals sum_n (scale*A)^n; needs ||scale*A||_inf < 1."""
    sa = a.scale(scale)
    if not sa.norm_inf() < 1:
        raise ValueError(f"Neumann series diverges: ||scale*A||_inf = {sa.norm_inf()} >= 1")
    return mat_inverse(RatMatrix.identity(a.shape[0]) - sa)


def neumann_partial(a, scale, terms):
    """sum_{n=0}^{terms} (scale*A)^n, for checking the closed form."""
    sa = a.scale(scale)
    acc = RatMatrix.identity(a.shape[0])
    p = acc
    for _ in range(terms):
        p = p @ sa
        acc = acc + p
    return acc
