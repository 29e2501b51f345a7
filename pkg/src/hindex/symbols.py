"""Coefficient symbols: expression DSL, ellipticity, and Fock-level actions.

The DSL covers matrix-valued polynomial symbols over the ambient coordinates
x1..x{2n+2} (equivalently z1, z2 and conjugates for n = 1):

    expr    := term (('+'|'-') term)*
    term    := factor ('*' factor)*
    factor  := ['-'] atom ('^' INT)*
    atom    := NUMBER['i'] | 'i' | 'x<k>' | 'z1' | 'z2' | 'z'
             | 'conj' '(' expr ')' | 'adj' '(' expr ')' | 'su2' ['(' 'x' ')']
             | '(' expr ')' | '[' '[' expr,... ']' ,... ']'

'conj' is the complex conjugate (elementwise on matrices), 'adj' the
conjugate transpose.  Adding a scalar to an r x r matrix means adding
scalar * I.  A negative integer power is circle sugar: z^-k parses as
conj(z)^k, which agrees with z^-k on |z| = 1.

Everything evaluates vectorized over a batch of points and differentiates
exactly (no finite differences anywhere in the integrands).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .contact import ContactSphere, QuadratureRule, SpherePoint, quadrature_s3
from .errors import EllipticityError, ShapeError, SymbolParseError

SCALAR = ()


def _as_points(x, ambient_dim):
    if isinstance(x, SpherePoint):
        pts = x.coords[None, :]
    else:
        pts = np.asarray(x, dtype=float)
        if pts.ndim == 1:
            pts = pts[None, :]
    if pts.shape[1] != ambient_dim:
        raise ShapeError(f"points have dimension {pts.shape[1]}, expected {ambient_dim}")
    return pts


# -- expression nodes ---------------------------------------------------------

class Expr:
    shape = SCALAR

    def eval(self, pts):
        raise NotImplementedError

    def diff(self, k):
        """Exact partial derivative with respect to ambient coordinate x_{k+1}."""
        raise NotImplementedError

    def max_coord(self):
        return 0

    def degree(self):
        """Total degree as a polynomial in z1, z2 and conjugates."""
        raise NotImplementedError

    def __str__(self):
        raise NotImplementedError

    def __eq__(self, other):
        return isinstance(other, Expr) and str(self) == str(other)

    def __hash__(self):
        return hash(str(self))


def _fmt_complex(c: complex) -> str:
    re, im = c.real, c.imag
    if im == 0:
        return repr(re) if re != int(re) else repr(int(re))
    re_s = repr(re) if re != int(re) else repr(int(re))
    im_s = repr(im) if im != int(im) else repr(int(im))
    if re == 0:
        return f"{im_s}i"
    return f"({re_s}+{im_s}i)" if im > 0 else f"({re_s}{im_s}i)"


class Const(Expr):
    def __init__(self, value):
        self.value = complex(value)

    def eval(self, pts):
        return np.full(pts.shape[0], self.value, dtype=complex)

    def diff(self, k):
        return Const(0)

    def degree(self):
        return 0

    def __str__(self):
        return _fmt_complex(self.value)


class Coord(Expr):
    def __init__(self, k):
        self.k = k  # 1-based ambient index

    def eval(self, pts):
        return pts[:, self.k - 1].astype(complex)

    def diff(self, k):
        return Const(1 if k == self.k - 1 else 0)

    def max_coord(self):
        return self.k

    def degree(self):
        return 1

    def __str__(self):
        return f"x{self.k}"


class Z(Expr):
    """z_j = x_{2j-1} + i x_{2j}."""

    def __init__(self, j):
        self.j = j

    def eval(self, pts):
        return pts[:, 2 * self.j - 2] + 1j * pts[:, 2 * self.j - 1]

    def diff(self, k):
        if k == 2 * self.j - 2:
            return Const(1)
        if k == 2 * self.j - 1:
            return Const(1j)
        return Const(0)

    def max_coord(self):
        return 2 * self.j

    def degree(self):
        return 1

    def __str__(self):
        return f"z{self.j}"


class Su2(Expr):
    """The defining symbol [[z1, -conj(z2)], [z2, conj(z1)]] on S^3."""

    shape = (2, 2)

    def eval(self, pts):
        z1 = pts[:, 0] + 1j * pts[:, 1]
        z2 = pts[:, 2] + 1j * pts[:, 3]
        out = np.empty((pts.shape[0], 2, 2), dtype=complex)
        out[:, 0, 0] = z1
        out[:, 0, 1] = -np.conj(z2)
        out[:, 1, 0] = z2
        out[:, 1, 1] = np.conj(z1)
        return out

    _D = [
        np.array([[1, 0], [0, 1]], dtype=complex),
        np.array([[1j, 0], [0, -1j]], dtype=complex),
        np.array([[0, -1], [1, 0]], dtype=complex),
        np.array([[0, 1j], [1j, 0]], dtype=complex),
    ]

    def diff(self, k):
        return MatConst(self._D[k])

    def max_coord(self):
        return 4

    def degree(self):
        return 1

    def __str__(self):
        return "su2(x)"


class MatConst(Expr):
    def __init__(self, m):
        self.m = np.asarray(m, dtype=complex)
        if self.m.ndim != 2 or self.m.shape[0] != self.m.shape[1]:
            raise ShapeError("matrix literal must be square")
        self.shape = self.m.shape

    def eval(self, pts):
        return np.broadcast_to(self.m, (pts.shape[0],) + self.shape).copy()

    def diff(self, k):
        return MatConst(np.zeros(self.shape))

    def degree(self):
        return 0

    def __str__(self):
        rows = ",".join("[" + ",".join(_fmt_complex(v) for v in row) + "]" for row in self.m)
        return f"[{rows}]"


class Matrix(Expr):
    def __init__(self, rows):
        r = len(rows)
        if any(len(row) != r for row in rows):
            raise ShapeError("matrix literal must be square")
        if any(e.shape != SCALAR for row in rows for e in row):
            raise ShapeError("matrix literal entries must be scalar expressions")
        self.rows = rows
        self.shape = (r, r)

    def eval(self, pts):
        r = self.shape[0]
        out = np.empty((pts.shape[0], r, r), dtype=complex)
        for i, row in enumerate(self.rows):
            for j, e in enumerate(row):
                out[:, i, j] = e.eval(pts)
        return out

    def diff(self, k):
        return Matrix([[e.diff(k) for e in row] for row in self.rows])

    def max_coord(self):
        return max(e.max_coord() for row in self.rows for e in row)

    def degree(self):
        return max(e.degree() for row in self.rows for e in row)

    def __str__(self):
        rows = ",".join("[" + ",".join(str(e) for e in row) + "]" for row in self.rows)
        return f"[{rows}]"


class Conj(Expr):
    def __init__(self, a):
        self.a = a
        self.shape = a.shape

    def eval(self, pts):
        return np.conj(self.a.eval(pts))

    def diff(self, k):
        return Conj(self.a.diff(k))

    def max_coord(self):
        return self.a.max_coord()

    def degree(self):
        return self.a.degree()

    def __str__(self):
        return f"conj({self.a})"


class Adj(Expr):
    def __init__(self, a):
        if a.shape == SCALAR:
            raise ShapeError("adj(.) expects a matrix expression; use conj(.) for scalars")
        self.a = a
        self.shape = a.shape

    def eval(self, pts):
        return np.conj(np.swapaxes(self.a.eval(pts), -1, -2))

    def diff(self, k):
        return Adj(self.a.diff(k))

    def max_coord(self):
        return self.a.max_coord()

    def degree(self):
        return self.a.degree()

    def __str__(self):
        return f"adj({self.a})"


def _broadcast_shapes(sa, sb, what):
    if sa == sb:
        return sa
    if sa == SCALAR:
        return sb
    if sb == SCALAR:
        return sa
    raise ShapeError(f"shape mismatch in {what}: {sa} vs {sb}")


def _promote(vals, shape):
    """Scalar batch -> scalar * I batch when combined additively with matrices."""
    if vals.ndim == 1 and shape != SCALAR:
        return vals[:, None, None] * np.eye(shape[0], dtype=complex)
    return vals


class Add(Expr):
    def __init__(self, a, b, sign=+1):
        self.a, self.b, self.sign = a, b, sign
        self.shape = _broadcast_shapes(a.shape, b.shape, "'+'" if sign > 0 else "'-'")

    def eval(self, pts):
        va = _promote(self.a.eval(pts), self.shape)
        vb = _promote(self.b.eval(pts), self.shape)
        return va + vb if self.sign > 0 else va - vb

    def diff(self, k):
        return Add(self.a.diff(k), self.b.diff(k), self.sign)

    def max_coord(self):
        return max(self.a.max_coord(), self.b.max_coord())

    def degree(self):
        return max(self.a.degree(), self.b.degree())

    def __str__(self):
        op = "+" if self.sign > 0 else "-"
        return f"({self.a}{op}{self.b})"


class Mul(Expr):
    def __init__(self, a, b):
        self.a, self.b = a, b
        if a.shape != SCALAR and b.shape != SCALAR and a.shape != b.shape:
            raise ShapeError(f"cannot multiply shapes {a.shape} and {b.shape}")
        self.shape = a.shape if a.shape != SCALAR else b.shape

    def eval(self, pts):
        va, vb = self.a.eval(pts), self.b.eval(pts)
        if va.ndim == 1 and vb.ndim == 1:
            return va * vb
        if va.ndim == 1:
            return va[:, None, None] * vb
        if vb.ndim == 1:
            return va * vb[:, None, None]
        return va @ vb

    def diff(self, k):
        return Add(Mul(self.a.diff(k), self.b), Mul(self.a, self.b.diff(k)))

    def max_coord(self):
        return max(self.a.max_coord(), self.b.max_coord())

    def degree(self):
        return self.a.degree() + self.b.degree()

    def __str__(self):
        return f"({self.a}*{self.b})"


def Pow(base, k):
    if k < 0:
        raise ShapeError("negative powers are only parser sugar on the circle")
    if k == 0:
        return Const(1) if base.shape == SCALAR else MatConst(np.eye(base.shape[0]))
    out = base
    for _ in range(k - 1):
        out = Mul(out, base)
    return out


# -- parser -------------------------------------------------------------------

class _Tokens:
    def __init__(self, text):
        self.text = text
        self.pos = 0

    def _skip(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self):
        self._skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def error(self, msg):
        raise SymbolParseError(msg, position=self.pos + 1)

    def take_number(self):
        self._skip()
        start = self.pos
        while self.pos < len(self.text) and (self.text[self.pos].isdigit() or self.text[self.pos] == "."):
            self.pos += 1
        if self.pos == start:
            self.error("expected a number")
        val = float(self.text[start:self.pos])
        if self.pos < len(self.text) and self.text[self.pos] == "i":
            self.pos += 1
            return complex(0, val)
        return complex(val)

    def take_word(self):
        self._skip()
        start = self.pos
        while self.pos < len(self.text) and (self.text[self.pos].isalnum() or self.text[self.pos] == "_"):
            self.pos += 1
        return self.text[start:self.pos]

    def expect(self, ch):
        self._skip()
        if self.peek() != ch:
            self.error(f"expected '{ch}'")
        self.pos += 1

    def accept(self, ch):
        if self.peek() == ch:
            self.pos += 1
            return True
        return False


def parse_symbol(text: str) -> Expr:
    """Parse a symbol expression; raises SymbolParseError with a column."""
    toks = _Tokens(text)
    expr = _parse_expr(toks)
    toks._skip()
    if toks.pos != len(text):
        toks.error("unexpected trailing input")
    return expr


def _parse_expr(t):
    node = _parse_term(t)
    while True:
        if t.accept("+"):
            node = Add(node, _parse_term(t), +1)
        elif t.accept("-"):
            node = Add(node, _parse_term(t), -1)
        else:
            return node


def _parse_term(t):
    node = _parse_factor(t)
    while t.accept("*"):
        node = Mul(node, _parse_factor(t))
    return node


def _parse_factor(t):
    if t.accept("-"):
        return Add(Const(0), _parse_factor(t), -1)
    node = _parse_atom(t)
    while t.accept("^"):
        neg = t.accept("-")
        ch = t.peek()
        if not ch.isdigit():
            t.error("power must be an integer")
        k = 0
        while t.peek().isdigit():
            k = 10 * k + int(t.text[t.pos])
            t.pos += 1
        if neg:
            node = Pow(Conj(node), k)  # z^-k == conj(z)^k on |z| = 1
        else:
            node = Pow(node, k)
    return node


def _parse_atom(t):
    ch = t.peek()
    if ch == "":
        t.error("unexpected end of expression")
    if ch.isdigit() or ch == ".":
        return Const(t.take_number())
    if ch == "(":
        t.expect("(")
        node = _parse_expr(t)
        t.expect(")")
        return node
    if ch == "[":
        return _parse_matrix(t)
    if ch.isalpha():
        word = t.take_word()
        if word == "i":
            return Const(1j)
        if word in ("conj", "adj"):
            t.expect("(")
            inner = _parse_expr(t)
            t.expect(")")
            return Conj(inner) if word == "conj" else Adj(inner)
        if word == "su2":
            if t.accept("("):
                if t.take_word() != "x":
                    t.error("su2 takes the point variable 'x'")
                t.expect(")")
            return Su2()
        if word in ("z", "z1"):
            return Z(1)
        if word == "z2":
            return Z(2)
        if word.startswith("x") and word[1:].isdigit():
            k = int(word[1:])
            if k < 1:
                t.error("coordinate index starts at 1")
            return Coord(k)
        t.error(f"unknown identifier '{word}'")
    t.error(f"unexpected character '{ch}'")


def _parse_matrix(t):
    t.expect("[")
    rows = []
    while True:
        t.expect("[")
        row = [_parse_expr(t)]
        while t.accept(","):
            row.append(_parse_expr(t))
        t.expect("]")
        rows.append(row)
        if not t.accept(","):
            break
    t.expect("]")
    return Matrix(rows)


# -- monomial expansion (used by the finite-section oracles) -----------------

def to_z_polynomial(expr: Expr):
    """Expand into monomials z1^a conj(z1)^abar z2^b conj(z2)^bbar.

    Returns an (r, r) array of dicts {(a, abar, b, bbar): coeff} for matrix
    expressions and a bare dict for scalars.
    """
    res = _poly(expr)
    return res


def _pscale(d, c):
    return {k: c * v for k, v in d.items() if c * v != 0}


def _padd(d1, d2, sign=1):
    out = dict(d1)
    for k, v in d2.items():
        out[k] = out.get(k, 0) + sign * v
        if out[k] == 0:
            del out[k]
    return out


def _pmul(d1, d2):
    out = {}
    for k1, v1 in d1.items():
        for k2, v2 in d2.items():
            k = tuple(a + b for a, b in zip(k1, k2))
            out[k] = out.get(k, 0) + v1 * v2
    return {k: v for k, v in out.items() if v != 0}


def _pconj(d):
    return {(abar, a, bbar, b): np.conj(v) for (a, abar, b, bbar), v in d.items()}


_Z1 = {(1, 0, 0, 0): 1.0}
_Z1B = {(0, 1, 0, 0): 1.0}
_Z2 = {(0, 0, 1, 0): 1.0}
_Z2B = {(0, 0, 0, 1): 1.0}


def _poly(e: Expr):
    if isinstance(e, Const):
        return {(0, 0, 0, 0): e.value} if e.value != 0 else {}
    if isinstance(e, Coord):
        z, zb = (_Z1, _Z1B) if e.k <= 2 else (_Z2, _Z2B)
        if e.k in (1, 3):
            return _padd(_pscale(z, 0.5), _pscale(zb, 0.5))
        return _padd(_pscale(z, -0.5j), _pscale(zb, 0.5j))
    if isinstance(e, Z):
        return dict(_Z1 if e.j == 1 else _Z2)
    if isinstance(e, Su2):
        out = np.empty((2, 2), dtype=object)
        out[0, 0] = dict(_Z1)
        out[0, 1] = _pscale(_Z2B, -1.0)
        out[1, 0] = dict(_Z2)
        out[1, 1] = dict(_Z1B)
        return out
    if isinstance(e, MatConst):
        r = e.shape[0]
        out = np.empty((r, r), dtype=object)
        for i in range(r):
            for j in range(r):
                out[i, j] = {(0, 0, 0, 0): e.m[i, j]} if e.m[i, j] != 0 else {}
        return out
    if isinstance(e, Matrix):
        r = e.shape[0]
        out = np.empty((r, r), dtype=object)
        for i in range(r):
            for j in range(r):
                out[i, j] = _poly(e.rows[i][j])
        return out
    if isinstance(e, Conj):
        inner = _poly(e.a)
        if isinstance(inner, dict):
            return _pconj(inner)
        out = np.empty(inner.shape, dtype=object)
        for i in range(inner.shape[0]):
            for j in range(inner.shape[1]):
                out[i, j] = _pconj(inner[i, j])
        return out
    if isinstance(e, Adj):
        inner = _poly(e.a)
        out = np.empty(inner.shape, dtype=object)
        for i in range(inner.shape[0]):
            for j in range(inner.shape[1]):
                out[i, j] = _pconj(inner[j, i])
        return out
    if isinstance(e, Add):
        pa, pb = _poly(e.a), _poly(e.b)
        sgn = e.sign
        if isinstance(pa, dict) and isinstance(pb, dict):
            return _padd(pa, pb, sgn)
        if isinstance(pa, dict):
            pa = _scalar_to_diag(pa, pb.shape[0])
        if isinstance(pb, dict):
            pb = _scalar_to_diag(pb, pa.shape[0])
        out = np.empty(pa.shape, dtype=object)
        for i in range(pa.shape[0]):
            for j in range(pa.shape[1]):
                out[i, j] = _padd(pa[i, j], pb[i, j], sgn)
        return out
    if isinstance(e, Mul):
        pa, pb = _poly(e.a), _poly(e.b)
        if isinstance(pa, dict) and isinstance(pb, dict):
            return _pmul(pa, pb)
        if isinstance(pa, dict):
            out = np.empty(pb.shape, dtype=object)
            for i in range(pb.shape[0]):
                for j in range(pb.shape[1]):
                    out[i, j] = _pmul(pa, pb[i, j])
            return out
        if isinstance(pb, dict):
            out = np.empty(pa.shape, dtype=object)
            for i in range(pa.shape[0]):
                for j in range(pa.shape[1]):
                    out[i, j] = _pmul(pa[i, j], pb)
            return out
        r = pa.shape[0]
        out = np.empty((r, r), dtype=object)
        for i in range(r):
            for j in range(r):
                acc = {}
                for k in range(r):
                    acc = _padd(acc, _pmul(pa[i, k], pb[k, j]))
                out[i, j] = acc
        return out
    raise ShapeError(f"cannot expand node {type(e).__name__}")


def _scalar_to_diag(d, r):
    out = np.empty((r, r), dtype=object)
    for i in range(r):
        for j in range(r):
            out[i, j] = dict(d) if i == j else {}
    return out


# -- coefficient fields -------------------------------------------------------

@dataclass(frozen=True)
class MatrixSymbolField:
    """A coefficient map gamma: S^{2n+1} -> M(r, C) given by an expression."""

    sphere: ContactSphere
    expr: Expr
    r: int

    @staticmethod
    def from_expr(sphere: ContactSphere, expr) -> "MatrixSymbolField":
        if isinstance(expr, str):
            expr = parse_symbol(expr)
        if expr.max_coord() > sphere.ambient_dim:
            raise ShapeError(
                f"expression uses x{expr.max_coord()} but the sphere is {sphere.ambient_dim}-dimensional")
        r = 1 if expr.shape == SCALAR else expr.shape[0]
        probe = np.zeros((1, sphere.ambient_dim))
        probe[0, 0] = 1.0
        expr.eval(probe)  # shape problems surface at construction, never at eval
        return MatrixSymbolField(sphere=sphere, expr=expr, r=r)

    def eval(self, x) -> np.ndarray:
        """Evaluate at points; returns (N, r, r)."""
        pts = _as_points(x, self.sphere.ambient_dim)
        vals = self.expr.eval(pts)
        if vals.ndim == 1:
            vals = vals[:, None, None]
        return vals

    def eval_partials(self, x) -> np.ndarray:
        """All ambient partial derivatives, shape (dim, N, r, r)."""
        pts = _as_points(x, self.sphere.ambient_dim)
        out = np.empty((self.sphere.ambient_dim, pts.shape[0], self.r, self.r), dtype=complex)
        for k in range(self.sphere.ambient_dim):
            vals = self.expr.diff(k).eval(pts)
            if vals.ndim == 1:
                vals = vals[:, None, None]
            out[k] = np.broadcast_to(vals, out[k].shape)
        return out

    def shifted(self, c: complex) -> "MatrixSymbolField":
        """The field gamma - c*I (same r)."""
        new = Add(self.expr, Const(c), -1)
        return MatrixSymbolField(sphere=self.sphere, expr=new, r=self.r)


def eval_gamma(field: MatrixSymbolField, x) -> np.ndarray:
    """Evaluate the coefficient matrix at a single point; returns (r, r)."""
    return field.eval(x)[0]


# -- Fock model and level actions --------------------------------------------

def multiplicity(n: int, j: int) -> int:
    """dim Sym^j C^n = C(n+j-1, j)."""
    if n < 1 or j < 0:
        raise ValueError("multiplicity requires n >= 1, j >= 0")
    return math.comb(n + j - 1, j)


@dataclass(frozen=True)
class FockModel:
    n: int
    N: int

    @property
    def multiplicities(self):
        return [multiplicity(self.n, j) for j in range(self.N + 1)]


def fock_action(field: MatrixSymbolField, sign: str, j: int, x) -> np.ndarray:
    """Level-j action of the symbol: (2j+n) I -/+ gamma(x).

    sign '+' gives (2j+n)I - gamma (holomorphic levels), '-' gives
    (2j+n)I + gamma (conjugate levels).
    """
    if j < 0:
        raise ValueError("level j must be >= 0")
    if sign not in ("+", "-"):
        raise ValueError("sign must be '+' or '-'")
    g = eval_gamma(field, x)
    base = (2 * j + field.sphere.n) * np.eye(field.r, dtype=complex)
    return base - g if sign == "+" else base + g


# -- Heisenberg ellipticity ---------------------------------------------------

@dataclass(frozen=True)
class EllipticityReport:
    elliptic: bool
    worst_margin: float
    witness_point: np.ndarray
    witness_lambda: float
    thresholds: tuple
    tol: float
    sup_norm: float


def _threshold_set(n: int, bound: float):
    out = []
    j = 0
    while n + 2 * j <= bound:
        out.extend([float(n + 2 * j), float(-(n + 2 * j))])
        j += 1
    if not out:  # empty scan set: nearest thresholds are +-n, margin via norm bound
        out = [float(n), float(-n)]
    return tuple(sorted(out))


def check_heisenberg_elliptic(field: MatrixSymbolField, grid=None, tol: float = 1e-8) -> EllipticityReport:
    """Scan sigma_min(gamma(x) - lambda I) over grid points and thresholds.

    Thresholds lambda in {+-(n+2j)} are scanned for n+2j <= sup|gamma| + 1;
    beyond that gamma - lambda I is invertible by norm comparison.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    nodes = _grid_nodes(field, grid)
    if nodes.shape[0] == 0:
        raise ValueError("empty evaluation grid")
    vals = field.eval(nodes)
    svals = np.linalg.svd(vals, compute_uv=False)
    sup = float(svals[:, 0].max())
    thresholds = _threshold_set(field.sphere.n, sup + 1.0)
    worst, wit_x, wit_l = np.inf, nodes[0], thresholds[0]
    eye = np.eye(field.r)
    for lam in thresholds:
        smin = np.linalg.svd(vals - lam * eye, compute_uv=False)[:, -1]
        i = int(np.argmin(smin))
        if smin[i] < worst:
            worst, wit_x, wit_l = float(smin[i]), nodes[i], lam
    return EllipticityReport(elliptic=bool(worst > tol), worst_margin=worst,
                             witness_point=wit_x, witness_lambda=wit_l,
                             thresholds=thresholds, tol=tol, sup_norm=sup)


def _grid_nodes(field, grid):
    if grid is None:
        if field.sphere.n == 1:
            return quadrature_s3(32).nodes
        if field.sphere.n == 0:
            th = 2 * np.pi * np.arange(256) / 256
            return np.stack([np.cos(th), np.sin(th)], axis=-1)
        raise ValueError("an explicit grid is required for n >= 2")
    if isinstance(grid, QuadratureRule):
        return grid.nodes
    return np.asarray(grid, dtype=float)


def choose_truncation(field: MatrixSymbolField, resolution: int = 96,
                      report: Optional[EllipticityReport] = None) -> FockModel:
    """Smallest level cutoff N with all higher levels invertible.

    N = max(0, ceil((sup|gamma| - n)/2)), with the grid sup inflated by a
    covering-radius x directional-Lipschitz slack so the estimate is an upper
    bound for the true sup rather than a sample artifact.  For j > N both
    level actions stay invertible along the straight-line path to (2j+n)I.
    """
    if report is None:
        report = check_heisenberg_elliptic(field)
    if not report.elliptic:
        raise EllipticityError("truncation level is defined only for elliptic fields")
    n = field.sphere.n
    if n == 1:
        quad = quadrature_s3(resolution)
        nodes = quad.nodes
        rho = _covering_radius(quad)
    else:
        th = 2 * np.pi * np.arange(max(resolution, 64)) / max(resolution, 64)
        nodes = np.stack([np.cos(th), np.sin(th)], axis=-1)
        rho = float(np.pi / max(resolution, 64))
    vals = field.eval(nodes)
    sup = float(np.linalg.svd(vals, compute_uv=False)[:, 0].max())
    partials = field.eval_partials(nodes)  # (dim, N, r, r)
    dim, npts, r, _ = partials.shape
    jac = partials.transpose(1, 2, 3, 0).reshape(npts, r * r, dim)
    lip = float(np.linalg.svd(jac, compute_uv=False)[:, 0].max())
    sup_est = sup + rho * lip
    N = max(0, math.ceil((sup_est - n) / 2.0))
    return FockModel(n=n, N=N)


def _covering_radius(quad: QuadratureRule) -> float:
    """Half of the largest coordinate step of the Hopf product grid."""
    eta = np.unique(quad.hopf[:, 0])
    gaps = np.diff(eta)
    eta_gap = max(float(gaps.max()), float(eta[0] - 0.0), float(np.pi / 2 - eta[-1]))
    xi_gap = 2 * np.pi / quad.resolution
    return 0.5 * math.sqrt(eta_gap ** 2 + 2 * xi_gap ** 2)
