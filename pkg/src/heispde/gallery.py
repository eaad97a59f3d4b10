"""Closed-form radial profiles and the scalar fields they induce.

Two kinds of profile are shipped.  "heisenberg" profiles are functions of the
gauge norm rho on H^d and are differentiated exactly through rho; their
horizontal Hessian has the closed-form three-eigenvalue structure implemented
in hgroup.  "euclidean" profiles are functions of |x| on R^d with the usual
radial spectrum f'' (simple) and f'/r (multiplicity d - 1).

The two-piece profiles share one template: a quartic core glued at radius 1
to a decaying power tail,

    f(r) = s/8 * [k(k-2) r^4 - 2(k^2-4) r^2 + k(k+2)]   for r < 1,
    f(r) = s * r^(2-k)                                   for r >= 1,

with sign s in {+1, -1} and exponent k > 2.  The gluing is C^1 (in fact C^2)
and the field is bounded, nonconstant, and one-signed.  Each named profile
fixes (s, k):

    u2       s=+1  k = (Lam/lam)(d-1) + 1     euclidean, needs k > 2
    u3       s=-1  k = (lam/Lam)(d-1) + 1     euclidean, needs k > 2
    u_tilde  s=+1  k = Q                      heisenberg
    u4       s=-1  k = (lam/Lam)(Q-1) + 1     heisenberg, needs k > 2
    u5       s=+1  k = (Lam/lam)(Q-1) + 1     heisenberg

Single-piece profiles: folland (rho^(2-Q), annihilated by the horizontal
Laplacian away from the origin), log_rho / neg_log_rho, and power (rho^kappa
for a caller-chosen kappa).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from . import hgroup
from .hgroup import HeisDims
from .operators import Ellipticity

__all__ = [
    "EuclidRadialSpectrum",
    "PROFILE_NAMES",
    "ProfilePiece",
    "ProfileRegimeError",
    "RadialProfile",
    "ScalarField",
    "euclid_radial_spectrum",
    "field_from_profile",
    "make_profile",
    "profile_catalog",
]


class ProfileRegimeError(ValueError):
    """Raised when a profile's exponent leaves its nondegenerate regime."""


@dataclass(frozen=True)
class ProfilePiece:
    """One closed-form piece f on [lo, hi) with exact first two derivatives."""

    lo: float
    hi: float
    f: Callable
    df: Callable
    d2f: Callable


@dataclass(frozen=True)
class RadialProfile:
    """Piecewise radial profile with exact derivatives.

    kind is "heisenberg" (radius = gauge norm) or "euclidean" (radius = |x|).
    params records the constants the pieces were built from; bounded and
    sup_abs describe sup |f| over (0, inf).
    """

    name: str
    kind: str
    pieces: tuple[ProfilePiece, ...]
    breakpoints: tuple[float, ...]
    params: dict
    bounded: bool
    sup_abs: float | None = None

    def _eval(self, which: int, r) -> np.ndarray:
        ra = np.asarray(r, dtype=float)
        if np.any(ra < 0.0):
            raise ValueError("radius must be nonnegative")
        # side="right": a radius equal to a breakpoint uses the outer piece.
        idx = np.searchsorted(np.asarray(self.breakpoints), ra, side="right")
        out = np.empty_like(ra)
        for k, piece in enumerate(self.pieces):
            mask = idx == k
            if np.any(mask):
                fn = (piece.f, piece.df, piece.d2f)[which]
                out[mask] = fn(ra[mask])
        return out

    def value(self, r) -> np.ndarray:
        return self._eval(0, r)

    def deriv(self, r) -> np.ndarray:
        return self._eval(1, r)

    def second_deriv(self, r) -> np.ndarray:
        return self._eval(2, r)


def _bump_pieces(k: float, s: float) -> tuple[ProfilePiece, ProfilePiece]:
    c4 = k * (k - 2.0) / 8.0
    c2 = (k * k - 4.0) / 4.0
    c0 = k * (k + 2.0) / 8.0

    def f_in(r, c4=c4, c2=c2, c0=c0, s=s):
        r2 = r * r
        return s * ((c4 * r2 - c2) * r2 + c0)

    def df_in(r, c4=c4, c2=c2, s=s):
        return s * (4.0 * c4 * r * r - 2.0 * c2) * r

    def d2f_in(r, c4=c4, c2=c2, s=s):
        return s * (12.0 * c4 * r * r - 2.0 * c2)

    def f_out(r, k=k, s=s):
        return s * r ** (2.0 - k)

    def df_out(r, k=k, s=s):
        return s * (2.0 - k) * r ** (1.0 - k)

    def d2f_out(r, k=k, s=s):
        return s * (2.0 - k) * (1.0 - k) * r ** (-k)

    return (
        ProfilePiece(0.0, 1.0, f_in, df_in, d2f_in),
        ProfilePiece(1.0, np.inf, f_out, df_out, d2f_out),
    )


def _power_pieces(k: float, s: float = 1.0) -> tuple[ProfilePiece, ...]:
    def f(r, k=k, s=s):
        return s * r**k

    def df(r, k=k, s=s):
        return s * k * r ** (k - 1.0)

    def d2f(r, k=k, s=s):
        return s * k * (k - 1.0) * r ** (k - 2.0)

    return (ProfilePiece(0.0, np.inf, f, df, d2f),)


def _log_pieces(s: float) -> tuple[ProfilePiece, ...]:
    def f(r, s=s):
        return s * np.log(r)

    def df(r, s=s):
        return s / r

    def d2f(r, s=s):
        return -s / (r * r)

    return (ProfilePiece(0.0, np.inf, f, df, d2f),)


# name -> (kind, description, needs ellipticity)
PROFILE_NAMES: dict[str, tuple[str, str, bool]] = {
    "u2": (
        "euclidean",
        "positive quartic core / power tail, exponent (Lam/lam)(d-1)+1; "
        "maximal operator of its Hessian is >= 0, valid for exponent > 2",
        True,
    ),
    "u3": (
        "euclidean",
        "negative quartic core / power tail, exponent (lam/Lam)(d-1)+1; "
        "maximal operator of its Hessian is <= 0, valid for exponent > 2",
        True,
    ),
    "u_tilde": (
        "heisenberg",
        "positive quartic core / power tail with exponent Q; horizontal "
        "Laplacian is <= 0, and vanishes outside the unit gauge ball",
        False,
    ),
    "u4": (
        "heisenberg",
        "negative quartic core / power tail, exponent (lam/Lam)(Q-1)+1; "
        "maximal operator of the horizontal Hessian is <= 0, valid for "
        "exponent > 2",
        True,
    ),
    "u5": (
        "heisenberg",
        "positive quartic core / power tail, exponent (Lam/lam)(Q-1)+1; "
        "maximal operator of the horizontal Hessian is >= 0",
        True,
    ),
    "folland": (
        "heisenberg",
        "rho^(2-Q); horizontal Laplacian vanishes away from the origin",
        False,
    ),
    "log_rho": (
        "heisenberg",
        "log rho; minimal-operator value has a closed form in |x_H| and rho",
        False,
    ),
    "neg_log_rho": ("heisenberg", "-log rho", False),
    "power": ("heisenberg", "rho^kappa for a caller-chosen kappa", False),
}


def _require_regime(name: str, label: str, k: float) -> None:
    if not k > 2.0:
        raise ProfileRegimeError(
            f"{name}: exponent {label} = {k:.6g} must exceed 2; at or below "
            "the threshold the profile degenerates to a constant"
        )


def make_profile(
    name: str,
    e: Ellipticity | None = None,
    dims: HeisDims | None = None,
    *,
    kappa: float | None = None,
) -> RadialProfile:
    """Build a named profile.

    dims is required for every name except power/log variants; e is required
    exactly for the names whose exponent depends on the ellipticity pair.
    For euclidean-kind names (u2, u3) dims.d is read as the ambient Euclidean
    dimension.
    """
    if name not in PROFILE_NAMES:
        raise ValueError(f"unknown profile {name!r}; see PROFILE_NAMES")
    kind, _, needs_e = PROFILE_NAMES[name]
    if needs_e and e is None:
        raise ValueError(f"profile {name!r} needs an Ellipticity")
    params: dict = {"kind": kind}
    if e is not None:
        params.update(lam=e.lam, Lam=e.Lam)
    if dims is not None:
        params.update(d=dims.d, Q=dims.Q)

    def bump(k: float, s: float, label: str, check: bool = True) -> RadialProfile:
        if check:
            _require_regime(name, label, k)
        params.update(exponent=k, sign=s)
        return RadialProfile(
            name=name,
            kind=kind,
            pieces=_bump_pieces(k, s),
            breakpoints=(1.0,),
            params=params,
            bounded=True,
            sup_abs=k * (k + 2.0) / 8.0,
        )

    if name in ("u2", "u3", "u_tilde", "u4", "u5", "folland"):
        if dims is None:
            raise ValueError(f"profile {name!r} needs HeisDims")

    if name == "u2":
        return bump((e.Lam / e.lam) * (dims.d - 1) + 1.0, +1.0, "beta")
    if name == "u3":
        return bump((e.lam / e.Lam) * (dims.d - 1) + 1.0, -1.0, "alpha")
    if name == "u_tilde":
        return bump(float(dims.Q), +1.0, "Q", check=False)
    if name == "u4":
        return bump((e.lam / e.Lam) * (dims.Q - 1) + 1.0, -1.0, "alpha_tilde")
    if name == "u5":
        return bump((e.Lam / e.lam) * (dims.Q - 1) + 1.0, +1.0, "beta_tilde")
    if name == "folland":
        k = 2.0 - dims.Q
        params.update(exponent=k)
        return RadialProfile(
            name, kind, _power_pieces(k), (), params, bounded=False
        )
    if name in ("log_rho", "neg_log_rho"):
        s = 1.0 if name == "log_rho" else -1.0
        params.update(sign=s)
        return RadialProfile(name, kind, _log_pieces(s), (), params, bounded=False)
    if name == "power":
        if kappa is None:
            raise ValueError("profile 'power' needs kappa")
        k = float(kappa)
        params.update(exponent=k)
        return RadialProfile(
            name,
            kind,
            _power_pieces(k),
            (),
            params,
            bounded=(k == 0.0),
            sup_abs=1.0 if k == 0.0 else None,
        )
    raise AssertionError("unreachable")


@dataclass(frozen=True)
class ScalarField:
    """A scalar field with exact value/gradient/Hessian evaluators.

    space is "heisenberg" (points in R^(2d+1)) or "euclidean" (points in
    R^dim).  Evaluators are vectorized over leading axes.  singular_radii
    lists radii where the second derivative jumps in its third derivative
    (piece gluings); evaluating exactly there uses the outer piece, and the
    checker excludes a tube around each.  The origin is genuinely singular
    for gradient and Hessian and raises.
    """

    name: str
    space: str
    dim: int
    value: Callable
    gradient: Callable
    hessian: Callable
    singular_radii: tuple[float, ...] = ()
    profile: RadialProfile | None = None
    dims: HeisDims | None = None

    def __neg__(self) -> "ScalarField":
        v, g, h = self.value, self.gradient, self.hessian
        return replace(
            self,
            name=f"-({self.name})",
            value=lambda x: -v(x),
            gradient=lambda x: -g(x),
            hessian=lambda x: -h(x),
        )


def field_from_profile(profile: RadialProfile, dims: HeisDims) -> ScalarField:
    """Exact field evaluators for a profile, chain-ruled through its radius."""
    if profile.kind == "heisenberg":

        def value(x):
            return profile.value(hgroup.hnorm(x))

        def gradient(x):
            rho = hgroup.hnorm(x)
            return profile.deriv(rho)[..., None] * hgroup.euclid_grad_rho(x)

        def hessian(x):
            rho = hgroup.hnorm(x)
            g = hgroup.euclid_grad_rho(x)
            out = profile.second_deriv(rho)[..., None, None] * np.einsum(
                "...a,...b->...ab", g, g
            )
            out += profile.deriv(rho)[..., None, None] * hgroup.euclid_hess_rho(x)
            return out

        return ScalarField(
            name=profile.name,
            space="heisenberg",
            dim=dims.n,
            value=value,
            gradient=gradient,
            hessian=hessian,
            singular_radii=profile.breakpoints,
            profile=profile,
            dims=dims,
        )

    if profile.kind == "euclidean":
        de = dims.d
        if de < 2:
            raise ValueError("euclidean radial fields need ambient dimension >= 2")

        def _radius(x):
            xa = np.asarray(x, dtype=float)
            if xa.shape[-1] != de:
                raise ValueError(f"expected points in R^{de}")
            r = np.sqrt(np.einsum("...i,...i->...", xa, xa))
            return xa, r

        def value(x):
            _, r = _radius(x)
            return profile.value(r)

        def gradient(x):
            xa, r = _radius(x)
            if np.any(r == 0.0):
                raise ValueError("radial gradient undefined at the origin")
            return profile.deriv(r)[..., None] * (xa / r[..., None])

        def hessian(x):
            xa, r = _radius(x)
            if np.any(r == 0.0):
                raise ValueError("radial Hessian undefined at the origin")
            xh = xa / r[..., None]
            pr = np.einsum("...a,...b->...ab", xh, xh)
            fp = profile.deriv(r)[..., None, None]
            fpp = profile.second_deriv(r)[..., None, None]
            eye = np.eye(de)
            return fpp * pr + (fp / r[..., None, None]) * (eye - pr)

        return ScalarField(
            name=profile.name,
            space="euclidean",
            dim=de,
            value=value,
            gradient=gradient,
            hessian=hessian,
            singular_radii=profile.breakpoints,
            profile=profile,
            dims=dims,
        )

    raise ValueError(f"unknown profile kind {profile.kind!r}")


@dataclass(frozen=True)
class EuclidRadialSpectrum:
    """Spectrum of the Euclidean Hessian of f(|x|): f'' and f'/r x (d-1)."""

    radial: np.ndarray
    tangential: np.ndarray
    tangential_mult: int

    def eigenvalues(self) -> np.ndarray:
        parts = [self.radial] + [self.tangential] * self.tangential_mult
        return np.sort(np.stack(np.broadcast_arrays(*parts), axis=-1), axis=-1)


def euclid_radial_spectrum(fprime, fsecond, x) -> EuclidRadialSpectrum:
    """Closed-form Hessian spectrum of f(|x|) at a nonzero Euclidean point."""
    xa = np.asarray(x, dtype=float)
    r = np.sqrt(np.einsum("...i,...i->...", xa, xa))
    if np.any(r == 0.0):
        raise ValueError("radial spectrum undefined at the origin")
    return EuclidRadialSpectrum(
        radial=np.asarray(fsecond(r), dtype=float),
        tangential=np.asarray(fprime(r), dtype=float) / r,
        tangential_mult=xa.shape[-1] - 1,
    )


def profile_catalog(
    e: Ellipticity | None = None, dims: HeisDims | None = None
) -> list[dict]:
    """Rows describing every shipped profile, optionally instantiated."""
    rows = []
    for name, (kind, desc, needs_e) in PROFILE_NAMES.items():
        row = {"name": name, "kind": kind, "description": desc}
        if dims is not None and name != "power" and (e is not None or not needs_e):
            try:
                prof = make_profile(name, e, dims)
                row["exponent"] = prof.params.get("exponent")
                row["valid"] = True
            except ProfileRegimeError as exc:
                row["valid"] = False
                row["reason"] = str(exc)
        rows.append(row)
    return rows
