"""Extremal second-order operators and Bellman first-order envelopes.

All second-order operators act on symmetric m x m matrices and use the sign
convention F(M) = sup/inf of Tr(-A M) over the relevant matrix set, so that
F(D^2 u) <= 0 is the subsolution inequality and >= 0 the supersolution one.

Two families are provided:

* Pucci extremal operators over the ellipticity box lam I <= A <= Lam I:
      pucci_max(M) = -Lam * sum(e_k < 0) - lam * sum(e_k > 0)
      pucci_min(M) = -Lam * sum(e_k > 0) - lam * sum(e_k < 0)
  where e_k are the eigenvalues of M.

* Trace-normalized extremal operators over
  B_alpha = {A >= alpha I, Tr A = 1} (needs 0 < alpha <= 1/m):
      pucci_plus_alpha(M)  = -alpha Tr M - (1 - m alpha) e_min
      pucci_minus_alpha(M) = -alpha Tr M - (1 - m alpha) e_max

plus the trace form of the normalized p-Laplacian and plain -Tr.

Eigenvalues with |e| <= zero_tol * ||M||_F are treated as zero and enter
neither signed sum.  Matrix arguments may carry leading batch axes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "Ellipticity",
    "HJBCoefficients",
    "PucciAlpha",
    "hjb_inf",
    "hjb_sup",
    "neg_trace",
    "pnorm_operator",
    "pucci_max",
    "pucci_min",
    "pucci_minus_alpha",
    "pucci_plus_alpha",
    "signed_eig_sums",
    "sym_eigenvalues",
]


@dataclass(frozen=True)
class Ellipticity:
    """Ellipticity interval 0 < lam <= Lam."""

    lam: float
    Lam: float

    def __post_init__(self) -> None:
        lam = float(self.lam)
        Lam = float(self.Lam)
        if not (np.isfinite(lam) and np.isfinite(Lam)):
            raise ValueError("ellipticity constants must be finite")
        if not (0.0 < lam <= Lam):
            raise ValueError(f"need 0 < lam <= Lam, got ({lam}, {Lam})")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "Lam", Lam)


@dataclass(frozen=True)
class PucciAlpha:
    """Parameter pair for the trace-normalized operators: 0 < alpha <= 1/m."""

    alpha: float
    m: int

    def __post_init__(self) -> None:
        alpha = float(self.alpha)
        m = int(self.m)
        if m < 1:
            raise ValueError("matrix size m must be >= 1")
        if not np.isfinite(alpha) or not (0.0 < alpha <= 1.0 / m):
            raise ValueError(
                f"need 0 < alpha <= 1/m = {1.0 / m:.6g}, got alpha = {alpha}"
            )
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "m", m)


def _as_sym(mat, atol: float) -> np.ndarray:
    m = np.asarray(mat, dtype=float)
    if m.ndim < 2 or m.shape[-1] != m.shape[-2]:
        raise ValueError(f"expected square matrices, got shape {m.shape}")
    if not np.isfinite(m).all():
        raise ValueError("matrix entries must be finite")
    skew = np.abs(m - np.swapaxes(m, -1, -2)).max()
    if skew > atol:
        raise ValueError(f"matrix is not symmetric: max |M - M^T| = {skew:.3e}")
    return 0.5 * (m + np.swapaxes(m, -1, -2))


def sym_eigenvalues(mat, *, atol: float = 1e-12) -> np.ndarray:
    """Eigenvalues of symmetric matrices, ascending along the last axis.

    Validates symmetry within atol (absolute, entrywise) and finiteness.
    """
    return np.linalg.eigvalsh(_as_sym(mat, atol))


def _fro(mat: np.ndarray) -> np.ndarray:
    return np.sqrt(np.einsum("...ij,...ij->...", mat, mat))


def signed_eig_sums(
    eigs: np.ndarray, scale: np.ndarray, zero_tol: float
) -> tuple[np.ndarray, np.ndarray]:
    """(sum of negative, sum of positive) eigenvalues per matrix.

    Eigenvalues within zero_tol * scale of zero count in neither sum; scale
    is normally the Frobenius norm of the source matrix.
    """
    eigs = np.asarray(eigs, dtype=float)
    scale = np.asarray(scale, dtype=float)
    dead = np.abs(eigs) <= zero_tol * scale[..., None]
    neg = np.where((eigs < 0.0) & ~dead, eigs, 0.0).sum(axis=-1)
    pos = np.where((eigs > 0.0) & ~dead, eigs, 0.0).sum(axis=-1)
    return neg, pos


def pucci_max(e: Ellipticity, mat, *, zero_tol: float = 1e-12) -> np.ndarray:
    """Maximal Pucci operator sup Tr(-A M) over lam I <= A <= Lam I."""
    m = _as_sym(mat, 1e-12)
    eigs = np.linalg.eigvalsh(m)
    neg, pos = signed_eig_sums(eigs, _fro(m), zero_tol)
    return -e.Lam * neg - e.lam * pos


def pucci_min(e: Ellipticity, mat, *, zero_tol: float = 1e-12) -> np.ndarray:
    """Minimal Pucci operator inf Tr(-A M) over lam I <= A <= Lam I."""
    m = _as_sym(mat, 1e-12)
    eigs = np.linalg.eigvalsh(m)
    neg, pos = signed_eig_sums(eigs, _fro(m), zero_tol)
    return -e.Lam * pos - e.lam * neg


def pucci_plus_alpha(pa: PucciAlpha, mat) -> np.ndarray:
    """sup Tr(-A M) over A >= alpha I with Tr A = 1."""
    m = _as_sym(mat, 1e-12)
    if m.shape[-1] != pa.m:
        raise ValueError(f"matrix size {m.shape[-1]} does not match pa.m = {pa.m}")
    eigs = np.linalg.eigvalsh(m)
    tr = np.einsum("...ii->...", m)
    return -pa.alpha * tr - (1.0 - pa.m * pa.alpha) * eigs[..., 0]


def pucci_minus_alpha(pa: PucciAlpha, mat) -> np.ndarray:
    """inf Tr(-A M) over A >= alpha I with Tr A = 1."""
    m = _as_sym(mat, 1e-12)
    if m.shape[-1] != pa.m:
        raise ValueError(f"matrix size {m.shape[-1]} does not match pa.m = {pa.m}")
    eigs = np.linalg.eigvalsh(m)
    tr = np.einsum("...ii->...", m)
    return -pa.alpha * tr - (1.0 - pa.m * pa.alpha) * eigs[..., -1]


def neg_trace(mat) -> np.ndarray:
    """-Tr M, the trace form of the (sub-)Laplacian with the sign flipped."""
    m = _as_sym(mat, 1e-12)
    return -np.einsum("...ii->...", m)


def pnorm_operator(p: float, q, mat) -> np.ndarray:
    """Trace form of the normalized p-Laplacian: -Tr[(I + (p-2) qq^T/|q|^2) M].

    Requires p in (1, inf) and q != 0 (the operator is discontinuous there);
    a zero gradient raises ValueError.
    """
    p = float(p)
    if not np.isfinite(p) or p <= 1.0:
        raise ValueError(f"need p in (1, inf), got {p}")
    m = _as_sym(mat, 1e-12)
    qa = np.asarray(q, dtype=float)
    if qa.shape[-1] != m.shape[-1]:
        raise ValueError("gradient and matrix sizes do not match")
    qq = np.einsum("...i,...i->...", qa, qa)
    if np.any(qq == 0.0):
        raise ValueError("normalized p-Laplacian is undefined at q = 0")
    tr = np.einsum("...ii->...", m)
    qmq = np.einsum("...i,...ij,...j->...", qa, m, qa)
    return -(tr + (p - 2.0) * qmq / qq)


@dataclass(frozen=True)
class HJBCoefficients:
    """Finite family of drift/cost pairs for Bellman-type first-order parts.

    drifts[k](x) -> vector (horizontal, length 2d, or Euclidean, length n,
    per gradient_space); costs[k](x) -> nonnegative scalar.  Callables must
    be vectorized over leading point axes.
    """

    drifts: tuple[Callable, ...]
    costs: tuple[Callable, ...]
    gradient_space: str = "horizontal"
    label: str = ""

    def __post_init__(self) -> None:
        drifts = tuple(self.drifts)
        costs = tuple(self.costs)
        if len(drifts) == 0:
            raise ValueError("the control family must be nonempty")
        if len(drifts) != len(costs):
            raise ValueError("drifts and costs must pair up one-to-one")
        if self.gradient_space not in ("horizontal", "euclidean"):
            raise ValueError(f"unknown gradient space {self.gradient_space!r}")
        object.__setattr__(self, "drifts", drifts)
        object.__setattr__(self, "costs", costs)

    @property
    def n_controls(self) -> int:
        return len(self.drifts)


def _hjb_terms(coeffs: HJBCoefficients, x, r, p) -> np.ndarray:
    xa = np.asarray(x, dtype=float)
    ra = np.asarray(r, dtype=float)
    pa = np.asarray(p, dtype=float)
    batch = np.broadcast_shapes(xa.shape[:-1], ra.shape, pa.shape[:-1])
    vals = np.empty((coeffs.n_controls,) + batch, dtype=float)
    for k, (b, c) in enumerate(zip(coeffs.drifts, coeffs.costs)):
        cv = np.asarray(c(xa), dtype=float)
        if np.any(cv < 0.0):
            raise ValueError("running costs must be nonnegative")
        bv = np.asarray(b(xa), dtype=float)
        vals[k] = cv * ra - np.einsum("...i,...i->...", bv, pa)
    if not np.isfinite(vals).all():
        raise ValueError("Bellman terms must evaluate to finite values")
    return vals


def hjb_inf(coeffs: HJBCoefficients, x, r, p) -> np.ndarray:
    """inf over controls of c(x) r - b(x) . p."""
    return _hjb_terms(coeffs, x, r, p).min(axis=0)


def hjb_sup(coeffs: HJBCoefficients, x, r, p) -> np.ndarray:
    """sup over controls of c(x) r - b(x) . p; equals -hjb_inf at (-r, -p)."""
    return _hjb_terms(coeffs, x, r, p).max(axis=0)
