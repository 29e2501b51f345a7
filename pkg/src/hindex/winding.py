"""Winding numbers on S^1 and S^3 and the topological index assembly.

beta(f) is computed as a normalized odd-Chern integral:

    S^1:  beta = c1 * integral of tr(f^{-1} df),          c1 = 1/(2 pi i)
    S^3:  beta = c3 * integral of Tr((f^{-1} df)^3),      c3 = -1/(24 pi^2)

c1 is fixed so that beta(z) = +1 on the counterclockwise circle; c3 so that
beta(su2) = +1 with the Hopf-coordinate orientation (eta, xi1, xi2) used by
`quadrature_s3`.  Both constants are frozen here and re-verified against the
generators by `calibration()`; the raw (unnormalized) integral is reported
alongside the integer.

The analytic Fredholm index of a Hardy-space compression relates to beta by
the frozen SIGN_CONVENTION = -1, fixed once by the circle shift operator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .contact import ContactSphere, QuadratureRule, quadrature_s3
from .errors import (EllipticityError, InternalConsistencyError,
                     NonInvertibleSymbolError, WindingResidualError)
from .symbols import (FockModel, MatrixSymbolField, check_heisenberg_elliptic,
                      choose_truncation, multiplicity, parse_symbol)

C1 = 1.0 / (2.0j * math.pi)
C3 = -1.0 / (24.0 * math.pi ** 2)
SIGN_CONVENTION = -1
RESIDUAL_LIMIT = 0.05
DET_FLOOR = 1e-8


@dataclass(frozen=True)
class WindingResult:
    beta: int
    raw: complex
    residual: float
    resolution: int


@dataclass(frozen=True)
class CalibrationReport:
    c1: complex
    c3: float
    sign_convention: int
    beta_z: WindingResult
    beta_su2: WindingResult

    @property
    def ok(self):
        return (self.beta_z.beta == 1 and self.beta_z.residual < 1e-6
                and self.beta_su2.beta == 1 and self.beta_su2.residual < 1e-6)


def _round_to_int(value: complex, resolution: int, limit: float = RESIDUAL_LIMIT) -> WindingResult:
    beta = int(round(value.real))
    residual = abs(value - beta)
    if residual >= limit:
        raise WindingResidualError(
            f"winding integral {value} is {residual:.3g} away from an integer; "
            f"resolution {resolution} insufficient")
    return WindingResult(beta=beta, raw=value, residual=residual, resolution=resolution)


def _check_invertible(vals: np.ndarray, what: str):
    dets = np.abs(np.linalg.det(vals))
    if dets.min() < DET_FLOOR:
        raise NonInvertibleSymbolError(
            f"{what}: min |det| = {dets.min():.3g} < {DET_FLOOR} on the sample grid")


def circle_nodes(resolution: int) -> np.ndarray:
    th = 2.0 * math.pi * np.arange(resolution) / resolution
    return np.stack([np.cos(th), np.sin(th)], axis=-1)


def winding_s1(f, resolution: int = 64) -> WindingResult:
    """Winding number of an invertible matrix symbol on the circle."""
    expr = parse_symbol(f) if isinstance(f, str) else (f.expr if isinstance(f, MatrixSymbolField) else f)
    pts = circle_nodes(resolution)
    vals = expr.eval(pts)
    if vals.ndim == 1:
        vals = vals[:, None, None]
    _check_invertible(vals, "winding_s1")
    # d/dtheta along the circle: dx1 = -sin, dx2 = cos
    d1 = expr.diff(0).eval(pts)
    d2 = expr.diff(1).eval(pts)
    if d1.ndim == 1:
        d1, d2 = d1[:, None, None], d2[:, None, None]
    d1 = np.broadcast_to(d1, vals.shape)
    d2 = np.broadcast_to(d2, vals.shape)
    dth = -pts[:, 1, None, None] * d1 + pts[:, 0, None, None] * d2
    integrand = np.trace(np.linalg.solve(vals, dth), axis1=1, axis2=2)
    raw = (2.0 * math.pi / resolution) * np.sum(integrand)
    return _round_to_int(C1 * raw, resolution)


def _hopf_pullbacks(field_expr, quad: QuadratureRule):
    vals = field_expr.eval(quad.nodes)
    if vals.ndim == 1:
        vals = vals[:, None, None]
    partials = []
    for k in range(4):
        d = field_expr.diff(k).eval(quad.nodes)
        if d.ndim == 1:
            d = d[:, None, None]
        partials.append(np.broadcast_to(d, vals.shape))
    partials = np.stack(partials)  # (4, N, r, r)
    out = []
    for jac in (quad.jac_eta, quad.jac_xi1, quad.jac_xi2):
        out.append(np.einsum("nk,knij->nij", jac, partials))
    return vals, out


def winding_s3_raw(f, quad: QuadratureRule) -> complex:
    """Unnormalized integral of Tr((f^{-1} df)^3) over S^3."""
    expr = parse_symbol(f) if isinstance(f, str) else (f.expr if isinstance(f, MatrixSymbolField) else f)
    vals, (de, d1, d2) = _hopf_pullbacks(expr, quad)
    _check_invertible(vals, "winding_s3")
    ae = np.linalg.solve(vals, de)
    a1 = np.linalg.solve(vals, d1)
    a2 = np.linalg.solve(vals, d2)
    integrand = 3.0 * np.trace(ae @ (a1 @ a2 - a2 @ a1), axis1=1, axis2=2)
    return complex(np.sum(quad.box_weights * integrand))


def winding_s3(f, quad: Optional[QuadratureRule] = None) -> WindingResult:
    """Degree-style winding of an invertible matrix symbol on S^3."""
    if quad is None:
        quad = quadrature_s3(64)
    raw = winding_s3_raw(f, quad)
    return _round_to_int(C3 * raw, quad.resolution)


def calibration(resolution: int = 64) -> CalibrationReport:
    """Recompute the calibration anchors and check the frozen constants."""
    bz = winding_s1("z", resolution)
    bsu2 = winding_s3("su2", quadrature_s3(resolution))
    rep = CalibrationReport(c1=C1, c3=C3, sign_convention=SIGN_CONVENTION,
                            beta_z=bz, beta_su2=bsu2)
    if not rep.ok:
        raise InternalConsistencyError(
            f"calibration anchors failed: beta(z) = {bz}, beta(su2) = {bsu2}")
    return rep


# -- index assembly -----------------------------------------------------------

@dataclass(frozen=True)
class TopIndexReport:
    index: int
    contributions: list  # (sign, level j, multiplicity, beta, residual)
    N: int
    n: int
    r: int
    resolution: int


def _winding_of_shift(field: MatrixSymbolField, shift: float, quad) -> WindingResult:
    shifted = field.shifted(shift)
    if field.sphere.n == 1:
        return winding_s3(shifted.expr, quad)
    raise EllipticityError("numeric winding is implemented for n = 1 only")


def index_topological(field: MatrixSymbolField, fock: Optional[FockModel] = None,
                      quad: Optional[QuadratureRule] = None,
                      beta_values: Optional[dict] = None) -> TopIndexReport:
    """Index from the level decomposition:

        index = sum_{j<=N} m_j [ beta(gamma - (n+2j)I) + (-1)^{n+1} beta(gamma + (n+2j)I) ]

    For n = 1 the windings are integrated numerically; for n >= 2 the caller
    must supply beta_values[(sign, j)] and only the weighted sum is formed.
    """
    n = field.sphere.n
    report = check_heisenberg_elliptic(field)
    if not report.elliptic:
        raise EllipticityError(
            f"field is not Heisenberg-elliptic (margin {report.worst_margin:.3g} "
            f"at lambda = {report.witness_lambda})")
    if fock is None:
        fock = choose_truncation(field, report=report)
    sign_minus = (-1) ** (n + 1)
    contributions = []
    total = 0
    if n == 1:
        if quad is None:
            quad = quadrature_s3(64)
        for j in range(fock.N + 1):
            m = multiplicity(n, j)
            wp = _winding_of_shift(field, n + 2 * j, quad)
            wm = _winding_of_shift(field, -(n + 2 * j), quad)
            contributions.append(("+", j, m, wp.beta, wp.residual))
            contributions.append(("-", j, m, wm.beta, wm.residual))
            total += m * (wp.beta + sign_minus * wm.beta)
        return TopIndexReport(index=total, contributions=contributions,
                              N=fock.N, n=n, r=field.r, resolution=quad.resolution)
    if beta_values is None:
        raise EllipticityError("n >= 2 requires precomputed beta values")
    for j in range(fock.N + 1):
        m = multiplicity(n, j)
        bp, bm = beta_values[("+", j)], beta_values[("-", j)]
        contributions.append(("+", j, m, bp, 0.0))
        contributions.append(("-", j, m, bm, 0.0))
        total += m * (bp + sign_minus * bm)
    return TopIndexReport(index=total, contributions=contributions,
                          N=fock.N, n=n, r=field.r, resolution=0)


def index_s3_simple(field: MatrixSymbolField, quad: Optional[QuadratureRule] = None,
                    fock: Optional[FockModel] = None) -> TopIndexReport:
    """S^3 re-indexing: index = sum over odd k (both signs) of beta(gamma - kI).

    Asserts exact agreement with index_topological on the same inputs.
    """
    if field.sphere.n != 1:
        raise EllipticityError("index_s3_simple requires n = 1")
    base = index_topological(field, fock=fock, quad=quad)
    if quad is None:
        quad = quadrature_s3(64)
    total = 0
    contributions = []
    for j in range(base.N + 1):
        for k in (1 + 2 * j, -(1 + 2 * j)):
            w = _winding_of_shift(field, k, quad)
            contributions.append((f"k={k:+d}", j, 1, w.beta, w.residual))
            total += w.beta
    if total != base.index:
        raise InternalConsistencyError(
            f"odd-k sum {total} != level-sum index {base.index}")
    return TopIndexReport(index=total, contributions=contributions,
                          N=base.N, n=1, r=field.r, resolution=quad.resolution)


def toeplitz_topological_index(f, sphere: ContactSphere,
                               quad: Optional[QuadratureRule] = None,
                               resolution: int = 64) -> int:
    """Predicted Fredholm index of the Hardy compression: SIGN_CONVENTION * beta(f)."""
    if sphere.n == 0:
        w = winding_s1(f, resolution)
    elif sphere.n == 1:
        w = winding_s3(f, quad if quad is not None else quadrature_s3(resolution))
    else:
        raise EllipticityError("Toeplitz index is implemented on S^1 and S^3")
    return SIGN_CONVENTION * w.beta


def twisted_index(field: MatrixSymbolField, fock: FockModel, rankF: int,
                  pairing_terms) -> float:
    """Index after twisting by a rank-rankF bundle:

        rankF * index + sum over odd k of the supplied curvature pairings.

    On S^3 all pairings vanish (H^2 = 0); the argument is kept so synthetic
    values can exercise the arithmetic contract.
    """
    terms = list(pairing_terms)
    expected = 2 * (fock.N + 1)
    if len(terms) != expected:
        raise ValueError(
            f"expected {expected} pairing terms for odd |k| <= {field.sphere.n + 2 * fock.N}, "
            f"got {len(terms)}")
    base = index_topological(field, fock=fock)
    return rankF * base.index + float(sum(terms))
