"""Exact arithmetic over the Gaussian rationals Q(i) and dense exact linear algebra.

Every quantity in this package (eigenvalues, polynomial-part coefficients,
matrix entries) lives in Q(i), so equality, rank and kernel questions are
decidable and all downstream certificates are reproducible bit for bit.
Rank uses fraction-free (Bareiss) elimination over the Gaussian integers
after clearing denominators; pivoting always takes the first nonzero entry,
never a magnitude heuristic.
"""

from __future__ import annotations

from fractions import Fraction

import sympy


class GaussParseError(ValueError):
    """Malformed Gaussian-rational literal; carries the offending position."""

    def __init__(self, message, position):
        super().__init__("%s (at position %d)" % (message, position))
        self.position = position


class SingularOperatorError(ArithmeticError):
    """A linear system that was required to be uniquely solvable is not."""


class NonSplitError(ArithmeticError):
    """Spectral data whose eigenvalues do not all lie in Q(i)."""


class GaussRat:
    """Immutable Gaussian rational a + bi with exact Fraction components."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        object.__setattr__(self, "re", Fraction(re))
        object.__setattr__(self, "im", Fraction(im))

    def __setattr__(self, name, value):
        raise AttributeError("GaussRat is immutable")

    def __bool__(self):
        return self.re != 0 or self.im != 0

    def __eq__(self, other):
        if isinstance(other, GaussRat):
            return self.re == other.re and self.im == other.im
        if isinstance(other, (int, Fraction)):
            return self.re == other and self.im == 0
        return NotImplemented

    def __hash__(self):
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def __add__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return GaussRat(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return GaussRat(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return GaussRat(other.re - self.re, other.im - self.im)

    def __mul__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return GaussRat(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    __rmul__ = __mul__

    def __neg__(self):
        return GaussRat(-self.re, -self.im)

    def __truediv__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return other * self.inverse()

    def inverse(self):
        n = self.re * self.re + self.im * self.im
        if n == 0:
            raise ZeroDivisionError("division by zero in Q(i)")
        return GaussRat(self.re / n, -self.im / n)

    def conjugate(self):
        return GaussRat(self.re, -self.im)

    def sort_key(self):
        """Lexicographic (re, im) key used for all deterministic orderings."""
        return (self.re, self.im)

    def __str__(self):
        if self.im == 0:
            return _frac_str(self.re)
        if self.re == 0:
            return _frac_str(self.im) + "i"
        sign = "+" if self.im > 0 else "-"
        return _frac_str(self.re) + sign + _frac_str(abs(self.im)) + "i"

    def __repr__(self):
        return "GaussRat(%r, %r)" % (str(self.re), str(self.im))


def _coerce(value):
    if isinstance(value, GaussRat):
        return value
    if isinstance(value, (int, Fraction)):
        return GaussRat(value)
    return None


def _frac_str(f):
    if f.denominator == 1:
        return str(f.numerator)
    return "%d/%d" % (f.numerator, f.denominator)


ZERO = GaussRat(0)
ONE = GaussRat(1)
I_UNIT = GaussRat(0, 1)


def _scan_rational(text, pos, allow_sign):
    """Scan `['-'] digits ['/' digits]` starting at pos; return (Fraction, new pos)."""
    start = pos
    if pos < len(text) and text[pos] == "-" and allow_sign:
        pos += 1
    d0 = pos
    while pos < len(text) and text[pos].isdigit():
        pos += 1
    if pos == d0:
        raise GaussParseError("expected digits", pos)
    num = int(text[start:pos])
    if pos < len(text) and text[pos] == "/":
        pos += 1
        d1 = pos
        while pos < len(text) and text[pos].isdigit():
            pos += 1
        if pos == d1:
            raise GaussParseError("expected denominator digits", pos)
        den = int(text[d1:pos])
        if den == 0:
            raise GaussParseError("zero denominator", d1)
        return Fraction(num, den), pos
    return Fraction(num), pos


def gauss_parse(text: str) -> GaussRat:
    """Parse a Gaussian-rational literal.

    Grammar: rational ::= ['-'] digits ['/' digits];
    gauss ::= rational | [rational] ('+'|'-') rational 'i' | rational 'i'.
    """
    if not isinstance(text, str):
        raise GaussParseError("expected a string", 0)
    s = text.strip()
    offset = text.find(s) if s else 0
    if not s:
        raise GaussParseError("empty literal", offset)
    try:
        return _parse_body(s)
    except GaussParseError as exc:
        raise GaussParseError(str(exc).rsplit(" (at position", 1)[0],
                              exc.position + offset) from None


def _parse_body(s):
    if s.endswith("i"):
        body = s[:-1]
        # Interior sign splits re from im; a sign at 0 with no interior sign
        # belongs to the imaginary part itself.
        split = -1
        for k in range(len(body) - 1, 0, -1):
            if body[k] in "+-":
                split = k
                break
        if split > 0:
            re_part, _ = _scan_full(body[:split], 0)
            sign = 1 if body[split] == "+" else -1
            im_mag, pos = _scan_rational(body, split + 1, allow_sign=False)
            if pos != len(body):
                raise GaussParseError("trailing characters", pos)
            return GaussRat(re_part, sign * im_mag)
        if body.startswith("+"):
            im, pos = _scan_rational(body, 1, allow_sign=False)
            if pos != len(body):
                raise GaussParseError("trailing characters", pos)
            return GaussRat(0, im)
        im, pos = _scan_rational(body, 0, allow_sign=True)
        if pos != len(body):
            raise GaussParseError("trailing characters", pos)
        return GaussRat(0, im)
    value, pos = _scan_rational(s, 0, allow_sign=True)
    if pos != len(s):
        raise GaussParseError("trailing characters", pos)
    return GaussRat(value)


def _scan_full(fragment, pos):
    value, end = _scan_rational(fragment, pos, allow_sign=True)
    if end != len(fragment):
        raise GaussParseError("trailing characters", end)
    return value, end


class ExactMatrix:
    """Dense matrix over Q(i), row-major, immutable after construction."""

    __slots__ = ("rows", "cols", "entries")

    def __init__(self, rows, cols, entries):
        entries = tuple(entries)
        if len(entries) != rows * cols:
            raise ValueError("entry count %d != %d x %d" % (len(entries), rows, cols))
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "entries", entries)

    def __setattr__(self, name, value):
        raise AttributeError("ExactMatrix is immutable")

    @staticmethod
    def from_rows(rows):
        r = len(rows)
        c = len(rows[0]) if r else 0
        flat = []
        for row in rows:
            if len(row) != c:
                raise ValueError("ragged rows")
            for x in row:
                g = _coerce(x)
                if g is None:
                    raise ValueError("entry %r is not a Gaussian rational" % (x,))
                flat.append(g)
        return ExactMatrix(r, c, flat)

    @staticmethod
    def zeros(rows, cols=None):
        if cols is None:
            cols = rows
        return ExactMatrix(rows, cols, [ZERO] * (rows * cols))

    @staticmethod
    def identity(n):
        return ExactMatrix(n, n, [ONE if i == j else ZERO
                                  for i in range(n) for j in range(n)])

    @staticmethod
    def scalar(n, value):
        value = _coerce(value)
        return ExactMatrix(n, n, [value if i == j else ZERO
                                  for i in range(n) for j in range(n)])

    def entry(self, i, j):
        return self.entries[i * self.cols + j]

    def row_list(self, i):
        return list(self.entries[i * self.cols:(i + 1) * self.cols])

    def to_rows(self):
        return [self.row_list(i) for i in range(self.rows)]

    def __eq__(self, other):
        if not isinstance(other, ExactMatrix):
            return NotImplemented
        return (self.rows, self.cols, self.entries) == (other.rows, other.cols, other.entries)

    def __hash__(self):
        return hash((self.rows, self.cols, self.entries))

    def __repr__(self):
        return "ExactMatrix(%d x %d)" % (self.rows, self.cols)

    def __add__(self, other):
        self._same_shape(other)
        return ExactMatrix(self.rows, self.cols,
                           [a + b for a, b in zip(self.entries, other.entries)])

    def __sub__(self, other):
        self._same_shape(other)
        return ExactMatrix(self.rows, self.cols,
                           [a - b for a, b in zip(self.entries, other.entries)])

    def __neg__(self):
        return ExactMatrix(self.rows, self.cols, [-a for a in self.entries])

    def _same_shape(self, other):
        if self.rows != other.rows or self.cols != other.cols:
            raise ValueError("shape mismatch")

    def scale(self, c):
        c = _coerce(c)
        return ExactMatrix(self.rows, self.cols, [c * a for a in self.entries])

    def __mul__(self, other):
        if not isinstance(other, ExactMatrix):
            return NotImplemented
        if self.cols != other.rows:
            raise ValueError("inner dimension mismatch")
        n, m, k = self.rows, other.cols, self.cols
        out = []
        oe = other.entries
        for i in range(n):
            base = i * k
            for j in range(m):
                acc = ZERO
                for t in range(k):
                    a = self.entries[base + t]
                    if a:
                        acc = acc + a * oe[t * m + j]
                out.append(acc)
        return ExactMatrix(n, m, out)

    def transpose(self):
        return ExactMatrix(self.cols, self.rows,
                           [self.entry(i, j) for j in range(self.cols)
                            for i in range(self.rows)])

    def trace(self):
        if self.rows != self.cols:
            raise ValueError("trace of a non-square matrix")
        acc = ZERO
        for i in range(self.rows):
            acc = acc + self.entry(i, i)
        return acc

    def is_zero(self):
        return all(not a for a in self.entries)

    def block(self, r0, r1, c0, c1):
        return ExactMatrix(r1 - r0, c1 - c0,
                           [self.entry(i, j) for i in range(r0, r1)
                            for j in range(c0, c1)])

    def power(self, k):
        if self.rows != self.cols:
            raise ValueError("power of a non-square matrix")
        acc = ExactMatrix.identity(self.rows)
        for _ in range(k):
            acc = acc * self
        return acc

    def add_scalar(self, c):
        """self + c * identity."""
        return self + ExactMatrix.scalar(self.rows, c)


def hstack(blocks):
    rows = blocks[0].rows
    for b in blocks:
        if b.rows != rows:
            raise ValueError("row mismatch in hstack")
    out = []
    for i in range(rows):
        for b in blocks:
            out.extend(b.entries[i * b.cols:(i + 1) * b.cols])
    return ExactMatrix(rows, sum(b.cols for b in blocks), out)


def vstack(blocks):
    cols = blocks[0].cols
    flat = []
    for b in blocks:
        if b.cols != cols:
            raise ValueError("column mismatch in vstack")
        flat.extend(b.entries)
    return ExactMatrix(sum(b.rows for b in blocks), cols, flat)


def block_diag(blocks):
    n = sum(b.rows for b in blocks)
    m = sum(b.cols for b in blocks)
    out = [[ZERO] * m for _ in range(n)]
    r = c = 0
    for b in blocks:
        for i in range(b.rows):
            for j in range(b.cols):
                out[r + i][c + j] = b.entry(i, j)
        r += b.rows
        c += b.cols
    return ExactMatrix.from_rows(out)


# ---------------------------------------------------------------------------
# rank: fraction-free Bareiss elimination over the Gaussian integers


def _zmul(a, b):
    return (a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0])


def _zdiv_exact(a, b):
    # Exact division in Z[i]; Bareiss guarantees divisibility.
    n = b[0] * b[0] + b[1] * b[1]
    re = a[0] * b[0] + a[1] * b[1]
    im = a[1] * b[0] - a[0] * b[1]
    if re % n or im % n:
        raise ArithmeticError("inexact Gaussian-integer division (internal)")
    return (re // n, im // n)


def mat_rank(m: ExactMatrix) -> int:
    """Exact rank over Q(i); Bareiss on denominator-cleared rows, first-nonzero pivoting."""
    work = []
    for i in range(m.rows):
        row = m.row_list(i)
        lcm = 1
        for x in row:
            lcm = lcm * x.re.denominator // _gcd(lcm, x.re.denominator)
            lcm = lcm * x.im.denominator // _gcd(lcm, x.im.denominator)
        work.append([(int(x.re * lcm), int(x.im * lcm)) for x in row])
    rows, cols = m.rows, m.cols
    rank = 0
    prev = (1, 0)
    r = 0
    for c in range(cols):
        pivot_row = None
        for i in range(r, rows):
            if work[i][c] != (0, 0):
                pivot_row = i
                break
        if pivot_row is None:
            continue
        if pivot_row != r:
            work[r], work[pivot_row] = work[pivot_row], work[r]
        piv = work[r][c]
        for i in range(r + 1, rows):
            for j in range(c + 1, cols):
                num0 = _zmul(work[i][j], piv)
                num1 = _zmul(work[i][c], work[r][j])
                work[i][j] = _zdiv_exact((num0[0] - num1[0], num0[1] - num1[1]), prev)
            work[i][c] = (0, 0)
        prev = piv
        rank += 1
        r += 1
        if r == rows:
            break
    return rank


def _gcd(a, b):
    while b:
        a, b = b, a % b
    return a if a else 1


# ---------------------------------------------------------------------------
# reduced row echelon form over Q(i) and its consumers


def rref(m: ExactMatrix):
    """Return (rref rows as lists, pivot column list); first-nonzero pivoting."""
    rows = [m.row_list(i) for i in range(m.rows)]
    pivots = []
    r = 0
    for c in range(m.cols):
        pivot_row = None
        for i in range(r, m.rows):
            if rows[i][c]:
                pivot_row = i
                break
        if pivot_row is None:
            continue
        rows[r], rows[pivot_row] = rows[pivot_row], rows[r]
        inv = rows[r][c].inverse()
        rows[r] = [inv * x for x in rows[r]]
        for i in range(m.rows):
            if i != r and rows[i][c]:
                f = rows[i][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == m.rows:
            break
    return rows, pivots


def mat_kernel(m: ExactMatrix):
    """Deterministic basis of the right kernel, one vector per free column."""
    rows, pivots = rref(m)
    pivot_set = set(pivots)
    free = [c for c in range(m.cols) if c not in pivot_set]
    basis = []
    for fc in free:
        vec = [ZERO] * m.cols
        vec[fc] = ONE
        for r, pc in enumerate(pivots):
            vec[pc] = -rows[r][fc]
        basis.append(tuple(vec))
    return basis


def solve_general(a: ExactMatrix, b: ExactMatrix) -> ExactMatrix:
    """One exact solution X of a X = b; raises SingularOperatorError if none exists."""
    aug = hstack([a, b])
    rows, pivots = rref(aug)
    for r in range(len(rows)):
        if all(not x for x in rows[r][:a.cols]) and any(rows[r][a.cols:]):
            raise SingularOperatorError("inconsistent linear system")
    x = [[ZERO] * b.cols for _ in range(a.cols)]
    for r, pc in enumerate(pivots):
        if pc >= a.cols:
            raise SingularOperatorError("inconsistent linear system")
        for j in range(b.cols):
            x[pc][j] = rows[r][a.cols + j]
    return ExactMatrix.from_rows(x) if a.cols else ExactMatrix.zeros(0, b.cols)


def invert(m: ExactMatrix) -> ExactMatrix:
    if m.rows != m.cols:
        raise ValueError("inverse of a non-square matrix")
    if mat_rank(m) != m.rows:
        raise SingularOperatorError("matrix is singular")
    return solve_general(m, ExactMatrix.identity(m.rows))


def column_space_basis(m: ExactMatrix) -> ExactMatrix:
    """Pivot columns of m, as a matrix; deterministic spanning subset of the image."""
    _, pivots = rref(m)
    if not pivots:
        return ExactMatrix.zeros(m.rows, 0)
    return hstack([m.block(0, m.rows, c, c + 1) for c in pivots])


def complete_basis(basis: ExactMatrix) -> ExactMatrix:
    """Standard vectors, greedily by index, completing the columns of `basis`."""
    n = basis.rows
    chosen = []
    current = basis
    for j in range(n):
        e = ExactMatrix(n, 1, [ONE if i == j else ZERO for i in range(n)])
        cand = hstack([current, e])
        if mat_rank(cand) > mat_rank(current):
            chosen.append(e)
            current = cand
        if current.cols == n:
            break
    if current.cols != n:
        raise ValueError("could not complete basis")
    return hstack(chosen) if chosen else ExactMatrix.zeros(n, 0)


def solve_sylvester(a: ExactMatrix, b: ExactMatrix, c: ExactMatrix) -> ExactMatrix:
    """Unique X with aX - Xb = c; SingularOperatorError when spectra intersect."""
    s, t = a.rows, b.rows
    if a.cols != s or b.cols != t or c.rows != s or c.cols != t:
        raise ValueError("shape mismatch in Sylvester equation")
    # Row (i,j) of the Kronecker system: sum_k a[i,k] X[k,j] - sum_k X[i,k] b[k,j].
    dim = s * t
    sys_rows = []
    rhs = []
    for i in range(s):
        for j in range(t):
            row = [ZERO] * dim
            for k in range(s):
                row[k * t + j] = row[k * t + j] + a.entry(i, k)
            for k in range(t):
                row[i * t + k] = row[i * t + k] - b.entry(k, j)
            sys_rows.append(row)
            rhs.append([c.entry(i, j)])
    sys_m = ExactMatrix.from_rows(sys_rows) if dim else ExactMatrix.zeros(0, 0)
    if dim and mat_rank(sys_m) != dim:
        raise SingularOperatorError("Sylvester operator X -> aX - Xb is singular")
    x = solve_general(sys_m, ExactMatrix.from_rows(rhs) if dim else ExactMatrix.zeros(0, 1))
    return ExactMatrix(s, t, [x.entry(i * t + j, 0) for i in range(s) for j in range(t)])


# ---------------------------------------------------------------------------
# characteristic polynomial and Q(i) eigen-decomposition


def char_poly(m: ExactMatrix):
    """Monic characteristic polynomial coefficients [1, c_{n-1}, ..., c_0]."""
    if m.rows != m.cols:
        raise ValueError("characteristic polynomial of a non-square matrix")
    n = m.rows
    coeffs = [ONE]
    mk = ExactMatrix.identity(n)
    for k in range(1, n + 1):
        mk = m * mk
        ck = -(mk.trace() / GaussRat(k))
        coeffs.append(ck)
        mk = mk.add_scalar(ck)
    return coeffs


_LAM = sympy.Symbol("_gadsp_lambda")


def _to_sympy(g: GaussRat):
    return sympy.Rational(g.re) + sympy.Rational(g.im) * sympy.I


def _from_sympy(expr) -> GaussRat:
    re, im = expr.as_real_imag()
    return GaussRat(Fraction(int(re.p), int(re.q)), Fraction(int(im.p), int(im.q)))


def qi_roots(coeffs):
    """Roots in Q(i) of a monic polynomial with GaussRat coefficients.

    Returns sorted (root, multiplicity) pairs; raises NonSplitError if some
    irreducible factor over Q(i) has degree > 1.
    """
    poly = sympy.Poly([_to_sympy(c) for c in coeffs], _LAM, domain="QQ_I")
    _, factors = poly.factor_list()
    roots = []
    for fac, mult in factors:
        if fac.degree() > 1:
            raise NonSplitError("polynomial does not split over Q(i)")
        if fac.degree() == 1:
            lead, const = fac.all_coeffs()
            root = _from_sympy(sympy.together(-const / lead))
            roots.append((root, mult))
    roots.sort(key=lambda p: p[0].sort_key())
    return roots


def qi_eigenvalues(m: ExactMatrix):
    """Sorted (eigenvalue, algebraic multiplicity) pairs; NonSplitError if not in Q(i)."""
    return qi_roots(char_poly(m))


def eigenspace_basis(m: ExactMatrix, eigenvalue: GaussRat) -> ExactMatrix:
    vecs = mat_kernel(m.add_scalar(-eigenvalue))
    if not vecs:
        return ExactMatrix.zeros(m.rows, 0)
    return hstack([ExactMatrix(m.rows, 1, v) for v in vecs])
