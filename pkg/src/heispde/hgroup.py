"""Exact horizontal calculus on the Heisenberg group H^d.

Points are arrays over R^(2d+1) with coordinates (x_1, ..., x_2d, t): the
first 2d coordinates are horizontal, the last one is vertical.  The group
law is

    (x o y)_i = x_i + y_i                       for i <= 2d,
    (x o y)_t = x_t + y_t + 2 * sum_i (x_i y_{i+d} - x_{i+d} y_i),

with identity 0 and inverse -x.  Anisotropic dilations scale the horizontal
block by lam and the vertical coordinate by lam^2; the homogeneous dimension
is Q = 2d + 2.  The gauge norm is rho(x) = (|x_H|^4 + t^2)^(1/4).

The left-invariant horizontal frame is

    X_i     = d_i     + 2 x_{i+d} d_t,
    X_{i+d} = d_{i+d} - 2 x_i     d_t,        i = 1..d,

collected column-wise in the (2d+1) x 2d matrix sigma(x) whose top block is
the identity and whose bottom row is (2 x_{d+1..2d}, -2 x_{1..d}).  The
horizontal gradient of u is sigma(x)^T Du and the symmetrized horizontal
Hessian is sigma^T D^2u sigma plus a first-order correction assembled from
the frame Jacobians (which cancels identically for this frame).

Every function accepts arbitrary leading batch axes; the last axis is the
coordinate axis.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

__all__ = [
    "HeisDims",
    "RadialHessSpectrum",
    "dilate",
    "eta",
    "euclid_grad_rho",
    "euclid_hess_rho",
    "frame",
    "frame_correction",
    "group_inverse",
    "group_mul",
    "h_gradient",
    "h_hessian",
    "hnorm",
    "horizontal_part",
    "hperp",
    "point_dims",
    "radial_h_gradient",
    "radial_h_hessian",
]

_D_CAP = 16


@dataclass(frozen=True)
class HeisDims:
    """Dimension bundle for H^d.

    n = 2d + 1 coordinates, m = 2d horizontal directions, homogeneous
    dimension Q = 2d + 2.  The default cap keeps accidental huge-dimension
    requests from allocating absurd stencils; pass a larger cap to override.
    """

    d: int
    cap: int = _D_CAP

    def __post_init__(self) -> None:
        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"d must be a positive integer, got {self.d!r}")
        if self.d > self.cap:
            raise ValueError(
                f"d={self.d} exceeds the cap {self.cap}; "
                "pass HeisDims(d, cap=d) explicitly if this is intended"
            )
        object.__setattr__(self, "d", int(self.d))

    @property
    def m(self) -> int:
        return 2 * self.d

    @property
    def n(self) -> int:
        return 2 * self.d + 1

    @property
    def Q(self) -> int:
        return 2 * self.d + 2


def _as_points(x) -> tuple[np.ndarray, int]:
    """Validate an array of points, return (array, d)."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim < 1:
        raise ValueError("a point must have at least one axis")
    n = arr.shape[-1]
    if n < 3 or n % 2 == 0:
        raise ValueError(f"point width must be odd and >= 3, got {n}")
    if not np.isfinite(arr).all():
        raise ValueError("coordinates must be finite")
    return arr, (n - 1) // 2


def point_dims(x) -> HeisDims:
    """Dimensions inferred from the trailing axis of x."""
    _, d = _as_points(x)
    return HeisDims(d)


def group_mul(x, y) -> np.ndarray:
    """Group product x o y (broadcasts over leading axes)."""
    xa, d = _as_points(x)
    ya, dy = _as_points(y)
    if d != dy:
        raise ValueError("x and y live on different groups")
    out_h = xa[..., : 2 * d] + ya[..., : 2 * d]
    twist = np.einsum("...i,...i->...", xa[..., :d], ya[..., d : 2 * d])
    twist -= np.einsum("...i,...i->...", xa[..., d : 2 * d], ya[..., :d])
    out_t = xa[..., -1] + ya[..., -1] + 2.0 * twist
    return np.concatenate([out_h, out_t[..., None]], axis=-1)


def group_inverse(x) -> np.ndarray:
    """Group inverse; coordinatewise negation."""
    xa, _ = _as_points(x)
    return -xa


def dilate(lam, x) -> np.ndarray:
    """Anisotropic dilation: horizontal block times lam, vertical times lam^2."""
    xa, d = _as_points(x)
    lam = np.asarray(lam, dtype=float)
    if not np.isfinite(lam).all() or np.any(lam <= 0.0):
        raise ValueError("dilation factor must be finite and positive")
    lam = lam[..., None]
    return np.concatenate(
        [lam * xa[..., : 2 * d], lam**2 * xa[..., -1:]], axis=-1
    )


def horizontal_part(x) -> np.ndarray:
    xa, d = _as_points(x)
    return xa[..., : 2 * d]


def hperp(x) -> np.ndarray:
    """Rotated horizontal part (x_{d+1..2d}, -x_{1..d}).

    Orthogonal to x_H with the same length; spans, together with x_H, the
    plane that carries the nonzero spectrum of gauge-radial Hessians.
    """
    xa, d = _as_points(x)
    return np.concatenate([xa[..., d : 2 * d], -xa[..., :d]], axis=-1)


def _hsq(x: np.ndarray, d: int) -> np.ndarray:
    return np.einsum("...i,...i->...", x[..., : 2 * d], x[..., : 2 * d])


def hnorm(x) -> np.ndarray:
    """Gauge norm rho(x) = (|x_H|^4 + t^2)^(1/4).

    Uses hypot-style scaling so coordinates up to ~1e75 do not overflow.
    """
    xa, d = _as_points(x)
    return np.sqrt(np.hypot(_hsq(xa, d), np.abs(xa[..., -1])))


def eta(x) -> np.ndarray:
    """The horizontal vector |x_H|^2 x_H + t * hperp(x).

    Satisfies |eta|^2 = |x_H|^2 rho^4 and D_H rho = eta / rho^3.
    """
    xa, d = _as_points(x)
    s = _hsq(xa, d)[..., None]
    return s * xa[..., : 2 * d] + xa[..., -1:] * hperp(xa)


def frame(x) -> np.ndarray:
    """Horizontal frame sigma(x), shape (..., 2d+1, 2d).

    Columns are the coordinate coefficients of X_1..X_2d: identity on top,
    bottom row (2 x_{d+1..2d}, -2 x_{1..d}).
    """
    xa, d = _as_points(x)
    m = 2 * d
    out = np.zeros(xa.shape[:-1] + (m + 1, m), dtype=float)
    out[..., :m, :] = np.eye(m)
    out[..., m, :] = 2.0 * hperp(xa)
    return out


def h_gradient(grad_u, x) -> np.ndarray:
    """Horizontal gradient sigma(x)^T Du from the Euclidean gradient Du."""
    xa, d = _as_points(x)
    g = np.asarray(grad_u, dtype=float)
    if g.shape[-1] != 2 * d + 1:
        raise ValueError("gradient width does not match the point width")
    return g[..., : 2 * d] + g[..., -1:] * (2.0 * hperp(xa))


@functools.lru_cache(maxsize=None)
def _correction_weights(d: int) -> np.ndarray:
    # (D sigma^j sigma^i) . Du = Du_t * A[i, j]; only the bottom frame row
    # depends on x, so A is constant: A[i, j+d] = -2 delta_ij on the upper
    # right, A[i+d, j] = +2 delta_ij on the lower left.  The symmetrized
    # weights (A + A^T)/2 cancel exactly; the antisymmetric remainder is the
    # commutator [X_i, X_{i+d}] = -4 d_t.
    m = 2 * d
    a = np.zeros((m, m))
    a[:d, d:] = -2.0 * np.eye(d)
    a[d:, :d] = 2.0 * np.eye(d)
    return 0.5 * (a + a.T)


def frame_correction(grad_u, x) -> np.ndarray:
    """First-order part of the symmetrized horizontal Hessian.

    Assembled from the (constant) frame Jacobians rather than assumed zero,
    although for this frame the symmetrization cancels it identically.
    """
    xa, d = _as_points(x)
    g = np.asarray(grad_u, dtype=float)
    if g.shape[-1] != 2 * d + 1:
        raise ValueError("gradient width does not match the point width")
    w = _correction_weights(d)
    return g[..., -1, None, None] * w


def h_hessian(grad_u, hess_u, x, *, atol: float = 1e-12) -> np.ndarray:
    """Symmetrized horizontal Hessian sigma^T D^2u sigma + correction.

    hess_u must be symmetric within atol (absolute, entrywise); the output is
    symmetrized exactly.
    """
    xa, d = _as_points(x)
    h = np.asarray(hess_u, dtype=float)
    n = 2 * d + 1
    if h.shape[-2:] != (n, n):
        raise ValueError("Hessian shape does not match the point width")
    if not np.isfinite(h).all():
        raise ValueError("Hessian entries must be finite")
    skew = np.abs(h - np.swapaxes(h, -1, -2)).max()
    if skew > atol:
        raise ValueError(f"Hessian is not symmetric: max |H - H^T| = {skew:.3e}")
    hs = 0.5 * (h + np.swapaxes(h, -1, -2))
    s = frame(xa)
    out = np.einsum("...ia,...ij,...jb->...ab", s, hs, s)
    out += frame_correction(grad_u, xa)
    return 0.5 * (out + np.swapaxes(out, -1, -2))


def _rho_positive(xa: np.ndarray, d: int) -> np.ndarray:
    rho = np.sqrt(np.hypot(_hsq(xa, d), np.abs(xa[..., -1])))
    if np.any(rho == 0.0):
        raise ValueError("undefined at the group identity (rho = 0)")
    return rho


def euclid_grad_rho(x) -> np.ndarray:
    """Euclidean gradient of the gauge norm: (|x_H|^2 x_H, t/2) / rho^3.

    Computed from bounded ratios (|x_H|^2/rho^2 <= 1, |t|/rho^2 <= 1,
    |x_H|/rho <= 1) so large points do not overflow.
    """
    xa, d = _as_points(x)
    rho = _rho_positive(xa, d)
    s_r2 = _hsq(xa, d) / rho**2
    xh_r = xa[..., : 2 * d] / rho[..., None]
    out_h = s_r2[..., None] * xh_r
    out_t = (xa[..., -1] / rho**2) / (2.0 * rho)
    return np.concatenate([out_h, out_t[..., None]], axis=-1)


def euclid_hess_rho(x) -> np.ndarray:
    """Euclidean Hessian of the gauge norm.

    With phi = rho^4 (a polynomial), D^2 rho = D^2 phi / (4 rho^3)
    - 3 Drho Drho^T / rho; the phi block is diagonal-plus-rank-one in the
    horizontal coordinates and constant in the vertical one.
    """
    xa, d = _as_points(x)
    m = 2 * d
    rho = _rho_positive(xa, d)
    grad = euclid_grad_rho(xa)
    s = _hsq(xa, d)
    out = np.einsum("...a,...b->...ab", grad, grad) * (-3.0 / rho[..., None, None])
    xh = xa[..., :m]
    out[..., :m, :m] += (
        (s / rho**3)[..., None, None] * np.eye(m)
        + 2.0 * np.einsum("...a,...b->...ab", xh, xh) / rho[..., None, None] ** 3
    )
    out[..., m, m] += 1.0 / (2.0 * rho**3)
    return out


def _radial_jets(fprime, fsecond, xa, d):
    rho = _rho_positive(xa, d)
    fp = np.asarray(fprime(rho), dtype=float)
    fpp = None if fsecond is None else np.asarray(fsecond(rho), dtype=float)
    return rho, fp, fpp


def radial_h_gradient(fprime, x) -> np.ndarray:
    """Horizontal gradient of f(rho(.)): f'(rho) * eta / rho^3."""
    xa, d = _as_points(x)
    rho, fp, _ = _radial_jets(fprime, None, xa, d)
    s_r2 = _hsq(xa, d) / rho**2
    xh_r = xa[..., : 2 * d] / rho[..., None]
    hp_r = hperp(xa) / rho[..., None]
    dh_rho = s_r2[..., None] * xh_r + (xa[..., -1] / rho**2)[..., None] * hp_r
    return fp[..., None] * dh_rho


@dataclass(frozen=True)
class RadialHessSpectrum:
    """Closed-form spectrum of the horizontal Hessian of f(rho(.)).

    With w = |D_H rho|^2 = |x_H|^2 / rho^2 the eigenvalues are
    f''(rho) w (simple, along D_H rho), 3 f'(rho) w / rho (simple, along the
    rotated direction), and f'(rho) w / rho with multiplicity 2d - 2.  All of
    them vanish on the characteristic set |x_H| = 0.
    """

    grad_dir: np.ndarray
    rotated: np.ndarray
    transverse: np.ndarray
    transverse_mult: int

    def eigenvalues(self) -> np.ndarray:
        """Full multiset as a sorted array of shape (..., 2d)."""
        parts = [self.grad_dir, self.rotated]
        parts += [self.transverse] * self.transverse_mult
        return np.sort(np.stack(np.broadcast_arrays(*parts), axis=-1), axis=-1)


def radial_h_hessian(fprime, fsecond, x) -> tuple[np.ndarray, RadialHessSpectrum]:
    """Horizontal Hessian of f(rho(.)) and its closed-form spectrum.

    The matrix is (f'/rho) w I + (2 f'/rho^3) K + (f'' - 3 f'/rho)
    D_H rho (x) D_H rho, where K = x_H x_H^T + hperp hperp^T.
    """
    xa, d = _as_points(x)
    m = 2 * d
    rho, fp, fpp = _radial_jets(fprime, fsecond, xa, d)
    w = _hsq(xa, d) / rho**2
    xh_r = xa[..., :m] / rho[..., None]
    hp_r = hperp(xa) / rho[..., None]
    dh_rho = w[..., None] * xh_r + (xa[..., -1] / rho**2)[..., None] * hp_r

    mat = (fp * w / rho)[..., None, None] * np.eye(m)
    mat += (2.0 * fp / rho)[..., None, None] * (
        np.einsum("...a,...b->...ab", xh_r, xh_r)
        + np.einsum("...a,...b->...ab", hp_r, hp_r)
    )
    mat += (fpp - 3.0 * fp / rho)[..., None, None] * np.einsum(
        "...a,...b->...ab", dh_rho, dh_rho
    )

    spectrum = RadialHessSpectrum(
        grad_dir=fpp * w,
        rotated=3.0 * fp * w / rho,
        transverse=fp * w / rho,
        transverse_mult=m - 2,
    )
    return mat, spectrum
