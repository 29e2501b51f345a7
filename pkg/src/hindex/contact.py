"""Model contact spheres: geometry, frames, and quadrature.

Numeric geometry is implemented for n=0 (the circle) and n=1 (S^3 with its
standard contact form theta = sum x_{2i} dx_{2i-1} - x_{2i-1} dx_{2i}).
Higher n is supported only through dimension/volume bookkeeping.

On S^3 the Reeb field and the horizontal frame come from the quaternionic
vector fields; the horizontal fields are rescaled by kappa = 2^{-1/2} so that
the frame is orthonormal for the metric <v,w> = dtheta(Jv, w).  That scaling
is what places the spectral thresholds of the model operators at the odd
integers, and it is validated end to end by the spectral oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ResolutionError, UnsupportedModelError

KAPPA_S3 = 1.0 / math.sqrt(2.0)


@dataclass(frozen=True)
class ContactSphere:
    """Descriptor of the model sphere S^{2n+1}."""

    n: int
    ambient_dim: int
    volume: float


@dataclass(frozen=True)
class SpherePoint:
    """A point on S^{2n+1}, stored as a unit vector in R^{2n+2}."""

    coords: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=float)
        if abs(np.linalg.norm(c) - 1.0) > 1e-12:
            raise ValueError("point is not on the unit sphere (|x| != 1 within 1e-12)")
        object.__setattr__(self, "coords", c)

    def hopf(self):
        """Hopf parameters (eta, xi1, xi2); n=1 points only."""
        x = self.coords
        if x.shape != (4,):
            raise UnsupportedModelError("Hopf parameters are defined for S^3 points")
        r1 = math.hypot(x[0], x[1])
        r2 = math.hypot(x[2], x[3])
        return (
            math.atan2(r2, r1),
            math.atan2(x[1], x[0]),
            math.atan2(x[3], x[2]),
        )


@dataclass(frozen=True)
class ContactFrame:
    """Reeb field T plus the rescaled horizontal frame (X1, X2 = J X1)."""

    T: np.ndarray
    X1: np.ndarray
    X2: np.ndarray
    kappa: float


@dataclass(frozen=True)
class QuadratureRule:
    """Product quadrature on S^3 in Hopf coordinates.

    `weights` include the volume density sin(eta)cos(eta) and sum to 2 pi^2;
    `box_weights` are the bare coordinate-box weights used when integrating a
    pulled-back 3-form (no density).
    """

    nodes: np.ndarray        # (N, 4) unit vectors
    hopf: np.ndarray         # (N, 3) columns eta, xi1, xi2
    weights: np.ndarray      # (N,)
    box_weights: np.ndarray  # (N,)
    resolution: int
    jac_eta: np.ndarray = field(repr=False, default=None)
    jac_xi1: np.ndarray = field(repr=False, default=None)
    jac_xi2: np.ndarray = field(repr=False, default=None)

    def points(self):
        return [SpherePoint(x) for x in self.nodes]


def make_sphere(n: int) -> ContactSphere:
    """Sphere descriptor with volume 2 pi^{n+1} / n!."""
    if n < 0:
        raise ValueError("n must be >= 0")
    return ContactSphere(n=n, ambient_dim=2 * n + 2,
                         volume=2.0 * math.pi ** (n + 1) / math.factorial(n))


def hopf_embedding(eta, xi1, xi2):
    """Map Hopf coordinates to R^4: z1 = cos(eta) e^{i xi1}, z2 = sin(eta) e^{i xi2}."""
    ce, se = np.cos(eta), np.sin(eta)
    return np.stack(
        [ce * np.cos(xi1), ce * np.sin(xi1), se * np.cos(xi2), se * np.sin(xi2)],
        axis=-1,
    )


def quadrature_s3(resolution: int) -> QuadratureRule:
    """Gauss-Legendre x uniform-trapezoid product rule on S^3.

    Gauss nodes in eta keep the degenerate chart points eta in {0, pi/2}
    out of the node set.
    """
    if resolution < 8:
        raise ResolutionError(f"resolution {resolution} below the floor of 8")
    k = int(resolution)
    gl_x, gl_w = np.polynomial.legendre.leggauss(k)
    eta = 0.25 * math.pi * (gl_x + 1.0)          # (0, pi/2), open
    w_eta = 0.25 * math.pi * gl_w
    xi = 2.0 * math.pi * np.arange(k) / k        # periodic trapezoid
    w_xi = 2.0 * math.pi / k

    E, P, Q = np.meshgrid(eta, xi, xi, indexing="ij")
    e, p, q = E.ravel(), P.ravel(), Q.ravel()
    box = (np.repeat(w_eta, k * k)) * (w_xi * w_xi)
    dens = np.sin(e) * np.cos(e)

    nodes = hopf_embedding(e, p, q)
    ce, se = np.cos(e), np.sin(e)
    jac_eta = np.stack([-se * np.cos(p), -se * np.sin(p), ce * np.cos(q), ce * np.sin(q)], axis=-1)
    jac_xi1 = np.stack([-ce * np.sin(p), ce * np.cos(p), np.zeros_like(e), np.zeros_like(e)], axis=-1)
    jac_xi2 = np.stack([np.zeros_like(e), np.zeros_like(e), -se * np.sin(q), se * np.cos(q)], axis=-1)

    return QuadratureRule(
        nodes=nodes, hopf=np.stack([e, p, q], axis=-1),
        weights=box * dens, box_weights=box, resolution=k,
        jac_eta=jac_eta, jac_xi1=jac_xi1, jac_xi2=jac_xi2,
    )


def integrate(rule: QuadratureRule, values: np.ndarray):
    """Integrate node values against the volume weights (pairwise summation)."""
    return np.sum(rule.weights * np.asarray(values), axis=0)


# -- contact form and frame on S^3 -------------------------------------------

def theta(x: np.ndarray, v: np.ndarray):
    """theta_x(v) = x2 v1 - x1 v2 + x4 v3 - x3 v4, broadcast over leading axes."""
    return (x[..., 1] * v[..., 0] - x[..., 0] * v[..., 1]
            + x[..., 3] * v[..., 2] - x[..., 2] * v[..., 3])


def dtheta(v: np.ndarray, w: np.ndarray):
    """dtheta(v, w) = -2[(v1 w2 - v2 w1) + (v3 w4 - v4 w3)]."""
    return -2.0 * (v[..., 0] * w[..., 1] - v[..., 1] * w[..., 0]
                   + v[..., 2] * w[..., 3] - v[..., 3] * w[..., 2])


def reeb_field(x: np.ndarray) -> np.ndarray:
    """Reeb field of theta on S^3: T(x) = (x2, -x1, x4, -x3)."""
    return np.stack([x[..., 1], -x[..., 0], x[..., 3], -x[..., 2]], axis=-1)


def _u2(x):
    return np.stack([-x[..., 2], x[..., 3], x[..., 0], -x[..., 1]], axis=-1)


def _u3(x):
    return np.stack([-x[..., 3], -x[..., 2], x[..., 1], x[..., 0]], axis=-1)


def frame_at(sphere: ContactSphere, x, kappa_scale: float = 1.0) -> ContactFrame:
    """Contact frame at x: Reeb field plus kappa-rescaled horizontal fields.

    `kappa_scale` multiplies the correct normalization; it exists as a fault
    injection hook for the negative-control tests and must be 1.0 in real use.
    """
    if sphere.n != 1:
        raise UnsupportedModelError("numeric contact frames exist only for n = 1")
    coords = x.coords if isinstance(x, SpherePoint) else np.asarray(x, dtype=float)
    kappa = KAPPA_S3 * kappa_scale
    return ContactFrame(T=reeb_field(coords), X1=kappa * _u2(coords),
                        X2=kappa * _u3(coords), kappa=kappa)


@dataclass(frozen=True)
class FrameValidationReport:
    sample_count: int
    max_violation: float
    worst: dict


def random_points(sphere: ContactSphere, count: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((count, sphere.ambient_dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def validate_contact_frame(sphere: ContactSphere, sample_count: int,
                           seed: int = 0, kappa_scale: float = 1.0) -> FrameValidationReport:
    """Check the frame identities at random points; returns the max violation.

    Identities: theta(T) = 1, dtheta(T, X_i) = 0, dtheta(J X_i, X_j) = delta_ij,
    and |theta ^ dtheta (T, X1, X2)| = 1 with constant sign (the form is
    nowhere vanishing; with the dtheta(Jv,v) >= 0 convention its sign on the
    ordered frame (T, X1, X2) is -1).
    """
    if sphere.n != 1:
        raise UnsupportedModelError("frame validation requires n = 1")
    if sample_count == 0:
        return FrameValidationReport(0, 0.0, {})
    xs = random_points(sphere, sample_count, seed)
    T = reeb_field(xs)
    kappa = KAPPA_S3 * kappa_scale
    X1, X2 = kappa * _u2(xs), kappa * _u3(xs)
    # J X1 = X2, J X2 = -X1 on the horizontal plane
    checks = {
        "theta(T)-1": theta(xs, T) - 1.0,
        "dtheta(T,X1)": dtheta(T, X1),
        "dtheta(T,X2)": dtheta(T, X2),
        "dtheta(JX1,X1)-1": dtheta(X2, X1) - 1.0,
        "dtheta(JX2,X2)-1": dtheta(-X1, X2) - 1.0,
        "dtheta(JX1,X2)": dtheta(X2, X2),
        "dtheta(JX2,X1)": dtheta(-X1, X1),
        "|theta^dtheta(T,X1,X2)|-1": np.abs(theta(xs, T) * dtheta(X1, X2)) - 1.0,
    }
    worst = {name: float(np.max(np.abs(vals))) for name, vals in checks.items()}
    top = max(worst, key=worst.get)
    return FrameValidationReport(sample_count, worst[top], worst)
