"""Sampled verification of operator inequalities and growth conditions.

The checker draws admissible points from an annulus of gauge radii, excludes
tubes around the characteristic set (|x_H|/rho < char_eps) and around
declared gluing radii (|rho - r_k| < kink_eps), evaluates the requested
operator exactly through the field's closed-form derivatives, and reports a
pass/fail/vacuous verdict with the worst signed violation and a witness.

A point passes the declared sense when the signed excess does not exceed
max(1e-12, tol * max(1, local operator magnitude)); the raw per-sample
operator values are available for stricter downstream assertions.

Reports are deterministic functions of (config, seed): identical inputs give
identical reports except for wall_time.  Sample evaluation is chunked and can
run on several threads (HEISPDE_THREADS); the merge is ordered, so the result
does not depend on the thread count.
"""

from __future__ import annotations

import dataclasses
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import ndtri
from scipy.stats import qmc

from . import gallery, hgroup, operators
from .gallery import ScalarField
from .hgroup import HeisDims
from .operators import Ellipticity, HJBCoefficients, PucciAlpha

__all__ = [
    "BarrierBundle",
    "CheckReport",
    "ConvergenceResult",
    "LYAPUNOV_CONDITIONS",
    "Region",
    "OperatorSpec",
    "SECOND_ORDER_OPS",
    "TabulatedField",
    "check_inequality",
    "check_lyapunov",
    "check_tabulated",
    "convergence_study",
    "fd_h_hessian",
    "lyapunov_fixture",
    "sample_region",
]

SCHEMA = "heispde-report-v1"
THREADS_ENV = "HEISPDE_THREADS"

SECOND_ORDER_OPS = (
    "pucci_max",
    "pucci_min",
    "pucci_plus_alpha",
    "pucci_minus_alpha",
    "pnorm",
    "neg_trace",
)

LYAPUNOV_CONDITIONS = (
    "condcor1",
    "condcor1bis",
    "condcor1p",
    "OUtype",
    "schrodinger",
)

_ABS_FLOOR = 1e-12
_N_SHELLS = 16


@dataclass(frozen=True)
class Region:
    """Sampling annulus and admissibility tubes.

    sampler "sobol" draws scrambled quasi-random points stratified over
    geometric radius shells; "grid" builds a deterministic product of a
    radius ladder with a ladder in tau = |x_H|/rho (both vertical signs,
    horizontal axes cycling), which parametrizes exactly the data
    gauge-radial operators depend on.
    """

    rho_min: float
    rho_max: float
    n_samples: int = 4096
    seed: int = 0
    char_eps: float = 1e-3
    kink_eps: float = 1e-6
    sampler: str = "sobol"

    def __post_init__(self) -> None:
        if not (
            np.isfinite(self.rho_min)
            and np.isfinite(self.rho_max)
            and 0.0 < self.rho_min < self.rho_max
        ):
            raise ValueError("need 0 < rho_min < rho_max < inf")
        if int(self.n_samples) != self.n_samples or self.n_samples < 1:
            raise ValueError("n_samples must be a positive integer")
        if not 0.0 <= self.char_eps < 1.0:
            raise ValueError("char_eps must lie in [0, 1)")
        if self.kink_eps < 0.0:
            raise ValueError("kink_eps must be nonnegative")
        if self.sampler not in ("sobol", "grid"):
            raise ValueError(f"unknown sampler {self.sampler!r}")
        object.__setattr__(self, "n_samples", int(self.n_samples))
        object.__setattr__(self, "seed", int(self.seed))


@dataclass(frozen=True)
class OperatorSpec:
    """Operator expression F[u] = second-order part + optional Bellman part.

    sense "subsolution" tests F[u] <= 0, "supersolution" tests F[u] >= 0.
    gradient_space picks which gradient feeds the Bellman part and the
    normalized p-Laplacian; None means the field's natural one (horizontal
    on the group, Euclidean otherwise).
    """

    second_order: str
    sense: str = "subsolution"
    ell: Ellipticity | None = None
    alpha: float | None = None
    p: float | None = None
    first_order: HJBCoefficients | None = None
    envelope: str = "inf"
    gradient_space: str | None = None
    zero_tol: float = 1e-12

    def __post_init__(self) -> None:
        if self.second_order not in SECOND_ORDER_OPS:
            raise ValueError(f"unknown second-order operator {self.second_order!r}")
        if self.sense not in ("subsolution", "supersolution"):
            raise ValueError(f"unknown sense {self.sense!r}")
        if self.envelope not in ("inf", "sup"):
            raise ValueError(f"unknown envelope side {self.envelope!r}")
        if self.second_order in ("pucci_max", "pucci_min") and self.ell is None:
            raise ValueError(f"{self.second_order} needs an Ellipticity")
        if self.second_order in ("pucci_plus_alpha", "pucci_minus_alpha"):
            if self.alpha is None:
                raise ValueError(f"{self.second_order} needs alpha")
        if self.second_order == "pnorm" and self.p is None:
            raise ValueError("pnorm needs the exponent p")
        if self.gradient_space not in (None, "horizontal", "euclidean"):
            raise ValueError(f"unknown gradient space {self.gradient_space!r}")
        if (
            self.first_order is not None
            and self.gradient_space is not None
            and self.first_order.gradient_space != self.gradient_space
        ):
            raise ValueError("gradient_space disagrees with the Bellman family")


@dataclass(frozen=True)
class TabulatedField:
    """Per-point jets for a field known only through a table."""

    points: np.ndarray
    values: np.ndarray
    gradients: np.ndarray
    hessians: np.ndarray
    space: str = "heisenberg"
    name: str = "tabulated"
    singular_radii: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2:
            raise ValueError("tabulated points must form an (N, dim) array")
        n, dim = pts.shape
        vals = np.asarray(self.values, dtype=float)
        grads = np.asarray(self.gradients, dtype=float)
        hess = np.asarray(self.hessians, dtype=float)
        if vals.shape != (n,) or grads.shape != (n, dim) or hess.shape != (n, dim, dim):
            raise ValueError("tabulated jet shapes do not match the points")
        if self.space not in ("heisenberg", "euclidean"):
            raise ValueError(f"unknown space {self.space!r}")
        if self.space == "heisenberg" and (dim < 3 or dim % 2 == 0):
            raise ValueError("group points need odd width >= 3")
        for name, arr in (("points", pts), ("values", vals), ("gradients", grads), ("hessians", hess)):
            if not np.isfinite(arr).all():
                raise ValueError(f"tabulated {name} must be finite")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "gradients", grads)
        object.__setattr__(self, "hessians", hess)

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass
class CheckReport:
    """Outcome of one verification run.  to_dict() is JSON-ready."""

    kind: str
    verdict: str
    worst_violation: float | None
    tol: float
    n_samples: int
    n_evaluated: int
    n_excluded: int
    excluded_by: dict
    witness: dict | None
    config: dict
    formula_comparison: dict | None = None
    scan: list | None = None
    components: dict | None = None
    wall_time: float = 0.0
    samples: dict | None = None

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "kind": self.kind,
            "verdict": self.verdict,
            "worst_violation": self.worst_violation,
            "tol": self.tol,
            "n_samples": self.n_samples,
            "n_evaluated": self.n_evaluated,
            "n_excluded": self.n_excluded,
            "excluded_by": self.excluded_by,
            "witness": self.witness,
            "formula_comparison": self.formula_comparison,
            "scan": self.scan,
            "components": self.components,
            "config": self.config,
            "wall_time": self.wall_time,
        }


@dataclass
class SampleBatch:
    points: np.ndarray
    radius: np.ndarray
    tau: np.ndarray | None
    admissible: np.ndarray
    excluded_by: dict
    space: str
    dim: int

    @property
    def n_admissible(self) -> int:
        return int(self.admissible.sum())


def _thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from exc
    if n < 1:
        raise ValueError(f"{THREADS_ENV} must be >= 1, got {n}")
    return n


def _sobol_unit(n: int, k: int, seed: int) -> np.ndarray:
    eng = qmc.Sobol(d=k, scramble=True, seed=seed)
    m = max(1, int(math.ceil(math.log2(max(n, 2)))))
    return eng.random_base2(m)[:n]


def _shell_radii(u: np.ndarray, rho_min: float, rho_max: float) -> np.ndarray:
    n = u.shape[0]
    n_shells = min(_N_SHELLS, n)
    edges = np.geomspace(rho_min, rho_max, n_shells + 1)
    k = np.arange(n) % n_shells
    lo, hi = edges[k], edges[k + 1]
    return lo * (hi / lo) ** u


def _gaussian_directions(u: np.ndarray) -> np.ndarray:
    g = ndtri(np.clip(u, 1e-12, 1.0 - 1e-12))
    bad = np.einsum("ij,ij->i", g, g) < 1e-280
    if np.any(bad):
        g[bad] = 0.0
        g[bad, 0] = 1.0
    return g


def _sample_heis(region: Region, dim: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    d = (dim - 1) // 2
    n = region.n_samples
    if region.sampler == "sobol":
        u = _sobol_unit(n, dim + 1, region.seed)
        r = _shell_radii(u[:, 0], region.rho_min, region.rho_max)
        g = _gaussian_directions(u[:, 1:])
        # rho is 1-homogeneous under dilations, so dilating by r/rho(g)
        # lands exactly on the target gauge sphere.
        pts = hgroup.dilate(r / hgroup.hnorm(g), g)
    else:
        nt = max(2, int(math.ceil(math.sqrt(n / 2.0))))
        nr = max(1, int(math.ceil(n / (2.0 * nt))))
        rr = np.geomspace(region.rho_min, region.rho_max, nr)
        tt = np.linspace(0.0, 1.0, nt)
        r_g, t_g, s_g = np.meshgrid(rr, tt, np.array([1.0, -1.0]), indexing="ij")
        r_g, t_g, s_g = (a.ravel()[:n] for a in (r_g, t_g, s_g))
        N = r_g.shape[0]
        xh = np.zeros((N, 2 * d))
        xh[np.arange(N), np.arange(N) % (2 * d)] = r_g * t_g
        vert = s_g * r_g**2 * np.sqrt(np.clip(1.0 - t_g**4, 0.0, None))
        pts = np.concatenate([xh, vert[:, None]], axis=1)
    rho = hgroup.hnorm(pts)
    xh2 = np.einsum("ij,ij->i", pts[:, : 2 * d], pts[:, : 2 * d])
    tau = np.sqrt(xh2) / rho
    return pts, rho, tau


def _sample_euclid(region: Region, dim: int) -> tuple[np.ndarray, np.ndarray]:
    n = region.n_samples
    if region.sampler == "sobol":
        u = _sobol_unit(n, dim + 1, region.seed)
        r = _shell_radii(u[:, 0], region.rho_min, region.rho_max)
        g = _gaussian_directions(u[:, 1:])
        pts = g * (r / np.sqrt(np.einsum("ij,ij->i", g, g)))[:, None]
    else:
        nr = max(1, int(math.ceil(n / (2.0 * dim))))
        rr = np.geomspace(region.rho_min, region.rho_max, nr)
        r_g, axis_g, sign_g = np.meshgrid(
            rr, np.arange(dim), np.array([1.0, -1.0]), indexing="ij"
        )
        r_g, axis_g, sign_g = (a.ravel()[:n] for a in (r_g, axis_g, sign_g))
        N = r_g.shape[0]
        pts = np.zeros((N, dim))
        pts[np.arange(N), axis_g.astype(int)] = sign_g * r_g
    return pts, np.sqrt(np.einsum("ij,ij->i", pts, pts))


def sample_region(
    region: Region,
    *,
    space: str,
    dim: int,
    singular_radii: tuple[float, ...] = (),
) -> SampleBatch:
    """Draw region.n_samples points and mark the admissible ones.

    Exclusions are counted by reason; n_admissible + sum(excluded_by.values())
    equals n_samples.
    """
    if space == "heisenberg":
        pts, radius, tau = _sample_heis(region, dim)
    elif space == "euclidean":
        pts, radius = _sample_euclid(region, dim)
        tau = None
    else:
        raise ValueError(f"unknown space {space!r}")

    admissible = np.ones(region.n_samples, dtype=bool)
    excluded_by: dict[str, int] = {}
    if tau is not None and region.char_eps > 0.0:
        hit = admissible & (tau < region.char_eps)
        if np.any(hit):
            excluded_by["characteristic_tube"] = int(hit.sum())
            admissible &= ~hit
    if region.kink_eps > 0.0:
        hit = np.zeros_like(admissible)
        for rk in singular_radii:
            hit |= np.abs(radius - rk) < region.kink_eps
        hit &= admissible
        if np.any(hit):
            excluded_by["kink_tube"] = int(hit.sum())
            admissible &= ~hit
    return SampleBatch(pts, radius, tau, admissible, excluded_by, space, dim)


def _resolve_gspace(space: str, spec: OperatorSpec) -> str:
    gs = spec.gradient_space
    if gs is None and spec.first_order is not None:
        gs = spec.first_order.gradient_space
    if gs is None:
        gs = "horizontal" if space == "heisenberg" else "euclidean"
    if space == "euclidean" and gs == "horizontal":
        raise ValueError("a Euclidean field has no horizontal gradient")
    return gs


def _magnitude_factor(spec: OperatorSpec) -> float:
    if spec.second_order in ("pucci_max", "pucci_min"):
        return spec.ell.Lam
    if spec.second_order == "pnorm":
        return 1.0 + abs(spec.p - 2.0)
    return 1.0


def _second_order_values(
    spec: OperatorSpec, mat: np.ndarray, eigs: np.ndarray, q: np.ndarray, alive: np.ndarray
) -> np.ndarray:
    out = np.zeros(eigs.shape[:-1])
    scale = np.sqrt(np.einsum("...ij,...ij->...", mat, mat))
    if spec.second_order == "pucci_max":
        neg, pos = operators.signed_eig_sums(eigs, scale, spec.zero_tol)
        out = -spec.ell.Lam * neg - spec.ell.lam * pos
    elif spec.second_order == "pucci_min":
        neg, pos = operators.signed_eig_sums(eigs, scale, spec.zero_tol)
        out = -spec.ell.Lam * pos - spec.ell.lam * neg
    elif spec.second_order in ("pucci_plus_alpha", "pucci_minus_alpha"):
        pa = PucciAlpha(spec.alpha, mat.shape[-1])
        tr = np.einsum("...ii->...", mat)
        extreme = eigs[..., 0] if spec.second_order == "pucci_plus_alpha" else eigs[..., -1]
        out = -pa.alpha * tr - (1.0 - pa.m * pa.alpha) * extreme
    elif spec.second_order == "pnorm":
        out = np.zeros(eigs.shape[:-1])
        if np.any(alive):
            out[alive] = operators.pnorm_operator(spec.p, q[alive], mat[alive])
    elif spec.second_order == "neg_trace":
        out = -np.einsum("...ii->...", mat)
    return out


def _terms_for(field, spec: OperatorSpec, pts: np.ndarray) -> dict:
    """Evaluate operator ingredients at points (N, dim)."""
    if isinstance(field, TabulatedField):
        sel = _match_rows(field.points, pts)
        val = field.values[sel]
        grad = field.gradients[sel]
        hess = field.hessians[sel]
        space = field.space
    else:
        val = np.asarray(field.value(pts), dtype=float)
        grad = np.asarray(field.gradient(pts), dtype=float)
        hess = np.asarray(field.hessian(pts), dtype=float)
        space = field.space

    if space == "heisenberg":
        mat = hgroup.h_hessian(grad, hess, pts)
        hgrad = hgroup.h_gradient(grad, pts)
    else:
        mat = 0.5 * (hess + np.swapaxes(hess, -1, -2))
        hgrad = grad

    gspace = _resolve_gspace(space, spec)
    q = hgrad if gspace == "horizontal" else grad

    alive = np.ones(pts.shape[0], dtype=bool)
    if spec.second_order == "pnorm":
        alive = np.einsum("...i,...i->...", q, q) > 0.0

    eigs = operators.sym_eigenvalues(mat)
    second = _second_order_values(spec, mat, eigs, q, alive)

    if spec.first_order is not None:
        side = operators.hjb_inf if spec.envelope == "inf" else operators.hjb_sup
        first = np.asarray(side(spec.first_order, pts, val, q), dtype=float)
    else:
        first = np.zeros(pts.shape[0])

    return {
        "value": val,
        "eigs": eigs,
        "second": second,
        "first": first,
        "total": second + first,
        "alive": alive,
    }


def _match_rows(table_pts: np.ndarray, pts: np.ndarray) -> np.ndarray:
    # The checker feeds back the very rows it was given, in order; recover
    # indices by identity of the admissible mask application.
    if pts.shape[0] == table_pts.shape[0] and np.array_equal(pts, table_pts):
        return np.arange(pts.shape[0])
    # Fall back to a positional scan (admissible subset keeps order).
    idx = []
    j = 0
    for row in pts:
        while j < table_pts.shape[0] and not np.array_equal(table_pts[j], row):
            j += 1
        if j == table_pts.shape[0]:
            raise ValueError("points are not a subsequence of the table")
        idx.append(j)
        j += 1
    return np.asarray(idx, dtype=int)


def _chunked_terms(field, spec, pts) -> dict:
    n_threads = _thread_count()
    n = pts.shape[0]
    if n_threads <= 1 or n < 2 * n_threads:
        return _terms_for(field, spec, pts)
    chunks = np.array_split(pts, n_threads)
    with ThreadPoolExecutor(max_workers=n_threads) as pool:
        parts = list(pool.map(lambda c: _terms_for(field, spec, c), chunks))
    return {
        key: np.concatenate([p[key] for p in parts], axis=0) for key in parts[0]
    }


def _allowance(tol: float, mag: np.ndarray) -> np.ndarray:
    return np.maximum(_ABS_FLOOR, tol * np.maximum(1.0, mag))


# Closed-form reference values for (profile, operator) pairs that admit one.
def _reference_values(field, spec, rho, tau):
    profile = getattr(field, "profile", None)
    if profile is None:
        return None
    if field.name != profile.name:
        # A wrapped or negated field no longer matches the tabulated form.
        return None
    key = (profile.name, spec.second_order)
    params = profile.params
    if key == ("log_rho", "pucci_min"):
        Q = params["Q"]
        return (spec.ell.lam - spec.ell.Lam * (Q - 1)) * tau**2 / rho**2, np.ones_like(rho, bool)
    if key == ("log_rho", "pucci_minus_alpha"):
        d = params["d"]
        return (4.0 * d * spec.alpha - 3.0) * tau**2 / rho**2, np.ones_like(rho, bool)
    if key == ("u_tilde", "neg_trace"):
        Q = params["Q"]
        ref = np.where(
            rho < 1.0,
            0.5 * (Q - 2.0) * Q * (Q + 2.0) * (1.0 - rho**2) * tau**2,
            0.0,
        )
        return ref, np.ones_like(rho, bool)
    if key == ("folland", "neg_trace"):
        return np.zeros_like(rho), np.ones_like(rho, bool)
    if key in (("u4", "pucci_max"), ("u5", "pucci_max"), ("u2", "pucci_max"), ("u3", "pucci_max")):
        return np.zeros_like(rho), rho >= 1.0
    return None


def _witness(batch, idx_adm, terms, excess, allow, order):
    k = int(order)
    pt = batch.points[idx_adm][k]
    w = {
        "point": [float(v) for v in pt],
        "radius": float(batch.radius[idx_adm][k]),
        "tau": None if batch.tau is None else float(batch.tau[idx_adm][k]),
        "value": float(terms["value"][k]),
        "eigenvalues": [float(v) for v in terms["eigs"][k]],
        "second_order": float(terms["second"][k]),
        "first_order": float(terms["first"][k]),
        "total": float(terms["total"][k]),
        "excess": float(excess[k]),
        "allowance": float(allow[k]),
    }
    return w


def _field_echo(field) -> dict:
    echo = {"name": field.name, "space": field.space, "dim": int(field.dim)}
    profile = getattr(field, "profile", None)
    if profile is not None:
        echo["profile_params"] = {
            k: (float(v) if isinstance(v, (int, float)) and not isinstance(v, bool) else v)
            for k, v in profile.params.items()
        }
    return echo


def _spec_echo(spec: OperatorSpec) -> dict:
    echo = {
        "second_order": spec.second_order,
        "sense": spec.sense,
        "envelope": spec.envelope,
        "gradient_space": spec.gradient_space,
        "zero_tol": spec.zero_tol,
    }
    if spec.ell is not None:
        echo["lam"] = spec.ell.lam
        echo["Lam"] = spec.ell.Lam
    if spec.alpha is not None:
        echo["alpha"] = spec.alpha
    if spec.p is not None:
        echo["p"] = spec.p
    if spec.first_order is not None:
        echo["first_order"] = {
            "label": spec.first_order.label,
            "n_controls": spec.first_order.n_controls,
            "gradient_space": spec.first_order.gradient_space,
        }
    return echo


def _vacuous_report(kind, tol, region, batch, config, t0) -> CheckReport:
    return CheckReport(
        kind=kind,
        verdict="vacuous",
        worst_violation=None,
        tol=tol,
        n_samples=region.n_samples,
        n_evaluated=0,
        n_excluded=region.n_samples,
        excluded_by=dict(batch.excluded_by),
        witness=None,
        config=config,
        wall_time=time.perf_counter() - t0,
    )


def check_inequality(
    field,
    spec: OperatorSpec,
    region: Region,
    tol: float = 1e-9,
    *,
    mode: str = "sense",
    keep_samples: bool = False,
) -> CheckReport:
    """Test the declared inequality (or a closed-form comparison) on samples.

    mode "sense" checks the sub/supersolution inequality.  mode "formula"
    instead compares operator values against the registered closed form for
    this (profile, operator) pair and passes when the deviation stays within
    tol * max(1, |reference|) pointwise.
    """
    t0 = time.perf_counter()
    if mode not in ("sense", "formula"):
        raise ValueError(f"unknown mode {mode!r}")
    if isinstance(field, TabulatedField):
        raise TypeError("use check_tabulated for tabulated fields")

    batch = sample_region(
        region, space=field.space, dim=field.dim, singular_radii=field.singular_radii
    )
    config = {
        "field": _field_echo(field),
        "operator": _spec_echo(spec),
        "region": dataclasses.asdict(region),
        "mode": mode,
    }
    return _inequality_from_batch(
        field, spec, region, tol, mode, keep_samples, batch, config, t0
    )


def check_tabulated(
    table: TabulatedField,
    spec: OperatorSpec,
    region: Region,
    tol: float = 1e-9,
    *,
    keep_samples: bool = False,
) -> CheckReport:
    """check_inequality over the rows of a precomputed jet table.

    The table's own points replace the sampler; region admissibility tubes
    and accounting still apply, with n_samples = number of rows.
    """
    t0 = time.perf_counter()
    pts = table.points
    radius = (
        hgroup.hnorm(pts)
        if table.space == "heisenberg"
        else np.sqrt(np.einsum("ij,ij->i", pts, pts))
    )
    n = pts.shape[0]
    region = dataclasses.replace(region, n_samples=n)
    if table.space == "heisenberg":
        d = (table.dim - 1) // 2
        xh2 = np.einsum("ij,ij->i", pts[:, : 2 * d], pts[:, : 2 * d])
        tau = np.sqrt(xh2) / radius
    else:
        tau = None

    admissible = (radius >= region.rho_min) & (radius <= region.rho_max)
    excluded_by: dict[str, int] = {}
    out_of_range = int((~admissible).sum())
    if out_of_range:
        excluded_by["outside_radius_range"] = out_of_range
    if tau is not None and region.char_eps > 0.0:
        hit = admissible & (tau < region.char_eps)
        if np.any(hit):
            excluded_by["characteristic_tube"] = int(hit.sum())
            admissible &= ~hit
    if region.kink_eps > 0.0:
        hit = np.zeros_like(admissible)
        for rk in table.singular_radii:
            hit |= np.abs(radius - rk) < region.kink_eps
        hit &= admissible
        if np.any(hit):
            excluded_by["kink_tube"] = int(hit.sum())
            admissible &= ~hit

    batch = SampleBatch(pts, radius, tau, admissible, excluded_by, table.space, table.dim)
    config = {
        "field": {"name": table.name, "space": table.space, "dim": table.dim, "rows": n},
        "operator": _spec_echo(spec),
        "region": dataclasses.asdict(region),
        "mode": "sense",
    }
    return _inequality_from_batch(
        table, spec, region, tol, "sense", keep_samples, batch, config, t0
    )


def _inequality_from_batch(
    field, spec, region, tol, mode, keep_samples, batch, config, t0
) -> CheckReport:
    adm = batch.admissible
    if not np.any(adm):
        return _vacuous_report("inequality", tol, region, batch, config, t0)

    pts = batch.points[adm]
    terms = _chunked_terms(field, spec, pts)

    alive = terms["alive"]
    excluded_by = dict(batch.excluded_by)
    if not np.all(alive):
        excluded_by["zero_gradient"] = int((~alive).sum())
    n_evaluated = int(alive.sum())
    if n_evaluated == 0:
        rep = _vacuous_report("inequality", tol, region, batch, config, t0)
        rep.excluded_by = excluded_by
        return rep

    rho_adm = batch.radius[adm]
    tau_adm = None if batch.tau is None else batch.tau[adm]

    mag = _magnitude_factor(spec) * np.abs(terms["eigs"]).sum(axis=-1) + np.abs(
        terms["first"]
    )
    allow = _allowance(tol, mag)

    formula = None
    if mode == "formula":
        ref = _reference_values(field, spec, rho_adm, tau_adm)
        if ref is None:
            raise ValueError(
                f"no closed-form reference registered for "
                f"({getattr(getattr(field, 'profile', None), 'name', None)!r}, "
                f"{spec.second_order!r})"
            )
        ref_vals, ref_valid = ref
        use = ref_valid & alive
        dev = np.abs(terms["total"] - ref_vals)
        dev_allow = np.maximum(_ABS_FLOOR, tol * np.maximum(1.0, np.abs(ref_vals)))
        excess = np.where(use, dev, -np.inf)
        allow_f = dev_allow
        nonzero = use & (ref_vals != 0.0)
        max_rel = float((dev[nonzero] / np.abs(ref_vals[nonzero])).max()) if np.any(nonzero) else None
        formula = {
            "n_compared": int(use.sum()),
            "n_nonzero_reference": int(nonzero.sum()),
            "max_abs_deviation": float(dev[use].max()) if np.any(use) else None,
            "max_rel_deviation": max_rel,
        }
        viol = np.where(use, dev - dev_allow, -np.inf)
        verdict = "pass" if np.any(use) and viol.max() <= 0.0 else "fail"
        if not np.any(use):
            verdict = "vacuous"
        worst = float(np.where(use, dev, -np.inf).max()) if np.any(use) else None
        order = int(np.argmax(viol))
        witness = _witness(batch, adm, terms, excess, allow_f, order) if np.any(use) else None
        formula["pass"] = verdict == "pass"
    else:
        signed = terms["total"] if spec.sense == "subsolution" else -terms["total"]
        excess = np.where(alive, signed, -np.inf)
        viol = np.where(alive, signed - allow, -np.inf)
        verdict = "pass" if viol.max() <= 0.0 else "fail"
        worst = float(excess.max())
        order = int(np.argmax(viol))
        witness = _witness(batch, adm, terms, excess, allow, order)

    samples = None
    if keep_samples:
        samples = {
            "points": pts,
            "radius": rho_adm,
            "tau": tau_adm,
            "value": terms["value"],
            "eigs": terms["eigs"],
            "second": terms["second"],
            "first": terms["first"],
            "total": terms["total"],
            "alive": alive,
        }

    return CheckReport(
        kind="inequality",
        verdict=verdict,
        worst_violation=worst,
        tol=tol,
        n_samples=region.n_samples,
        n_evaluated=n_evaluated,
        n_excluded=region.n_samples - n_evaluated,
        excluded_by=excluded_by,
        witness=witness,
        config=config,
        formula_comparison=formula,
        wall_time=time.perf_counter() - t0,
        samples=samples,
    )


@dataclass(frozen=True)
class BarrierBundle:
    """Aggregated coefficient bounds b-bar, g-bar, c-bar (g, c nonnegative)."""

    bbar: Callable
    gbar: Callable
    cbar: Callable
    label: str = ""


def lyapunov_fixture(name: str, dims: HeisDims, *, gamma0: float = 1.0, c0: float = 1.0, gammas=None):
    """Built-in coefficient families: returns (condition, data, kwargs)."""
    m, n = dims.m, dims.n
    zero_vec_h = lambda x: np.zeros(x.shape[:-1] + (m,))  # noqa: E731
    zero_scalar = lambda x: np.zeros(x.shape[:-1])  # noqa: E731
    if name == "zero-coeffs":
        coeffs = HJBCoefficients(
            (zero_vec_h,), (zero_scalar,), "horizontal", label="zero-coeffs"
        )
        return "condcor1", coeffs, {}
    if name == "schro":
        coeffs = HJBCoefficients(
            (zero_vec_h,),
            (lambda x: np.full(x.shape[:-1], float(c0)),),
            "horizontal",
            label=f"schro(c0={c0})",
        )
        return "schrodinger", coeffs, {}
    if name == "hou":
        coeffs = HJBCoefficients(
            (lambda x: -float(gamma0) * hgroup.eta(x),),
            (zero_scalar,),
            "horizontal",
            label=f"hou(gamma0={gamma0})",
        )
        return "condcor1", coeffs, {}
    if name == "ou":
        g = np.ones(n) if gammas is None else np.asarray(gammas, dtype=float)
        coeffs = HJBCoefficients(
            (lambda x: -(g * x),),
            (zero_scalar,),
            "euclidean",
            label="ou(b=-gamma*x)",
        )
        return "OUtype", coeffs, {"gammas": g}
    raise ValueError(f"unknown Lyapunov fixture {name!r}")


def check_lyapunov(
    cond: str,
    data,
    e: Ellipticity,
    region: Region,
    dims: HeisDims,
    *,
    alpha: float | None = None,
    gammas=None,
    tol: float = 1e-9,
) -> CheckReport:
    """Test a coefficient growth condition on sampled points.

    Margins are positive where the condition holds; the verdict requires
    margin >= -allowance at every admissible sample ("schrodinger" asks for
    strictly positive margins, liminf-style).  An R-ladder scan of the worst
    margin over rho >= R is attached as evidence at sampled scales.
    """
    t0 = time.perf_counter()
    if cond not in LYAPUNOV_CONDITIONS:
        raise ValueError(f"unknown condition {cond!r}")
    divides_by_s = cond in ("condcor1", "condcor1bis", "condcor1p") or (
        cond == "schrodinger"
        and isinstance(data, HJBCoefficients)
        and data.gradient_space == "horizontal"
    )
    if divides_by_s and region.char_eps <= 0.0:
        raise ValueError(
            f"{cond} divides by |x_H|^2; the region needs char_eps > 0"
        )
    batch = sample_region(region, space="heisenberg", dim=dims.n)
    config = {
        "condition": cond,
        "d": dims.d,
        "lam": e.lam,
        "Lam": e.Lam,
        "alpha": alpha,
        "gammas": None if gammas is None else [float(v) for v in np.atleast_1d(gammas)],
        "coefficients": getattr(data, "label", ""),
        "region": dataclasses.asdict(region),
    }
    adm = batch.admissible
    if not np.any(adm):
        return _vacuous_report("lyapunov", tol, region, batch, config, t0)

    pts = batch.points[adm]
    rho = batch.radius[adm]
    lg = np.log(rho)
    d = dims.d
    s = np.einsum("ij,ij->i", pts[:, : 2 * d], pts[:, : 2 * d])
    et = hgroup.eta(pts)
    components: dict[str, float] = {}
    euclid_schro = False

    def drift_cost_arrays(coeffs: HJBCoefficients):
        bs, cs = [], []
        for b, c in zip(coeffs.drifts, coeffs.costs):
            bv = np.asarray(b(pts), dtype=float)
            cv = np.asarray(c(pts), dtype=float)
            if np.any(cv < 0.0):
                raise ValueError("running costs must be nonnegative")
            bs.append(bv)
            cs.append(np.broadcast_to(cv, rho.shape))
        return bs, cs

    if cond in ("condcor1", "condcor1p", "schrodinger") and isinstance(data, HJBCoefficients) and data.gradient_space == "horizontal":
        bs, cs = drift_cost_arrays(data)
        terms = [
            np.einsum("ij,ij->i", bv, et) / s - cv * rho**4 * lg / s
            for bv, cv in zip(bs, cs)
        ]
        lhs = np.max(np.stack(terms, axis=0), axis=0)
        if cond == "condcor1p":
            if alpha is None:
                raise ValueError("condcor1p needs alpha")
            PucciAlpha(alpha, dims.m)
            rhs = 4.0 * d * float(alpha) - 3.0
        else:
            rhs = e.lam - e.Lam * (dims.Q - 1)
        margin = rhs - lhs
        mag = np.abs(lhs) + abs(rhs)
        components["min_margin"] = float(margin.min())
    elif cond == "schrodinger" and isinstance(data, HJBCoefficients):
        # Euclidean-gradient family: strictly positive cost route plus a
        # nonpositive (within allowance) radial drift component.
        euclid_schro = True
        bs, cs = drift_cost_arrays(data)
        c_margin = np.min(np.stack([cv * lg for cv in cs], axis=0), axis=0)
        grad_rho = hgroup.euclid_grad_rho(pts)
        sign_evid = np.max(
            np.stack([np.einsum("ij,ij->i", bv, grad_rho) for bv in bs], axis=0), axis=0
        )
        margin = c_margin
        mag = np.abs(c_margin) + np.abs(sign_evid)
        components["min_cost_margin"] = float(c_margin.min())
        components["max_drift_sign"] = float(sign_evid.max())
    elif cond == "condcor1bis":
        if not isinstance(data, BarrierBundle):
            raise TypeError("condcor1bis expects a BarrierBundle")
        bv = np.asarray(data.bbar(pts), dtype=float)
        gv = np.broadcast_to(np.asarray(data.gbar(pts), dtype=float), rho.shape)
        cv = np.broadcast_to(np.asarray(data.cbar(pts), dtype=float), rho.shape)
        if np.any(gv < 0.0) or np.any(cv < 0.0):
            raise ValueError("gbar and cbar must be nonnegative")
        et_norm = np.sqrt(np.einsum("ij,ij->i", et, et))
        lhs = np.einsum("ij,ij->i", bv, et) / s + gv * et_norm / s
        rhs = cv * rho**4 * lg / s + (e.lam - e.Lam * (dims.Q - 1))
        margin = rhs - lhs
        mag = np.abs(lhs) + np.abs(rhs)
        components["min_margin"] = float(margin.min())
    elif cond == "OUtype":
        if not isinstance(data, HJBCoefficients) or data.gradient_space != "euclidean":
            raise TypeError("OUtype expects HJBCoefficients with euclidean drifts")
        if gammas is None:
            raise ValueError("OUtype needs the gamma vector")
        g = np.asarray(gammas, dtype=float)
        if g.shape != (dims.n,) or np.any(g <= 0.0):
            raise ValueError(f"gammas must be {dims.n} positive reals")
        bs, cs = drift_cost_arrays(data)
        grad_rho = hgroup.euclid_grad_rho(pts)
        drift_dot = np.max(
            np.stack([np.einsum("ij,ij->i", bv, grad_rho) for bv in bs], axis=0), axis=0
        )
        ou_dot = np.einsum("ij,j,ij->i", pts, g, grad_rho)
        hyp = rho**3 * (-ou_dot - drift_dot)
        c1 = e.Lam * (2 * d + 1) - e.lam
        proof_terms = np.stack(
            [cv * lg - np.einsum("ij,ij->i", bv, grad_rho) / rho for bv, cv in zip(bs, cs)],
            axis=0,
        )
        proof = -c1 * s / rho**4 + np.min(proof_terms, axis=0)
        margin = np.minimum(hyp, proof)
        mag = np.maximum(
            rho**3 * (np.abs(ou_dot) + np.abs(drift_dot)),
            c1 * s / rho**4 + np.abs(np.min(proof_terms, axis=0)),
        )
        components["min_scaled_drift_margin"] = float(hyp.min())
        components["min_proof_margin"] = float(proof.min())
    else:
        raise TypeError(f"condition {cond!r} got incompatible data {type(data).__name__}")

    allow = _allowance(tol, mag)
    if euclid_schro:
        viol = np.maximum(-margin, sign_evid - allow)
        verdict = "pass" if margin.min() > 0.0 and np.max(sign_evid - allow) <= 0.0 else "fail"
    elif cond == "schrodinger":
        viol = -margin  # strict: any nonpositive margin is a violation
        verdict = "pass" if margin.min() > 0.0 else "fail"
    else:
        viol = -margin - allow
        verdict = "pass" if viol.max() <= 0.0 else "fail"

    order = int(np.argmax(viol))
    witness = {
        "point": [float(v) for v in pts[order]],
        "radius": float(rho[order]),
        "tau": float(batch.tau[adm][order]),
        "margin": float(margin[order]),
        "allowance": float(allow[order]),
    }

    scan = []
    ladder = [region.rho_min * 2.0**k for k in range(8)]
    for R in ladder:
        if R > region.rho_max:
            break
        sel = rho >= R
        scan.append(
            {
                "R": float(R),
                "n": int(sel.sum()),
                "min_margin": float(margin[sel].min()) if np.any(sel) else None,
            }
        )
    return CheckReport(
        kind="lyapunov",
        verdict=verdict,
        worst_violation=float((-margin).max()),
        tol=tol,
        n_samples=region.n_samples,
        n_evaluated=int(adm.sum()),
        n_excluded=region.n_samples - int(adm.sum()),
        excluded_by=dict(batch.excluded_by),
        witness=witness,
        config=config,
        scan=scan,
        components=components,
        wall_time=time.perf_counter() - t0,
    )


@dataclasses.dataclass
class ConvergenceResult:
    rows: list
    c_estimate: float
    n_points: int
    n_shrinks: int

    def to_rows(self) -> list:
        return self.rows


def _stencil_offsets(dim: int) -> np.ndarray:
    rows = [np.zeros(dim)]
    eye = np.eye(dim)
    for i in range(dim):
        rows.append(eye[i])
        rows.append(-eye[i])
    for i in range(dim):
        for j in range(i + 1, dim):
            for si in (1.0, -1.0):
                for sj in (1.0, -1.0):
                    rows.append(si * eye[i] + sj * eye[j])
    return np.asarray(rows)


def fd_h_hessian(
    value_fn,
    x,
    h: float,
    *,
    space: str = "heisenberg",
    singular_radii: tuple[float, ...] = (),
    max_shrinks: int = 40,
    return_info: bool = False,
):
    """Central-difference horizontal (or Euclidean) Hessian at one point.

    The stencil is refused whenever it would straddle a declared gluing
    radius or the origin; the step is halved until it fits (recorded), and a
    ValueError is raised if max_shrinks halvings do not suffice.
    """
    xa = np.asarray(x, dtype=float)
    if xa.ndim != 1:
        raise ValueError("fd_h_hessian works on a single point")
    dim = xa.shape[0]
    if h <= 0.0 or not np.isfinite(h):
        raise ValueError("step h must be positive and finite")
    offsets = _stencil_offsets(dim)

    def radius(p):
        return hgroup.hnorm(p) if space == "heisenberg" else np.sqrt(
            np.einsum("...i,...i->...", p, p)
        )

    rc = float(radius(xa))
    n_shrinks = 0
    while True:
        pts = xa + h * offsets
        rad = radius(pts)
        ok = np.all(rad > 0.0)
        for rk in singular_radii:
            if rc == rk:
                ok = False
                break
            if rc > rk:
                ok = ok and bool(np.all(rad > rk))
            else:
                ok = ok and bool(np.all(rad < rk))
        if ok:
            break
        n_shrinks += 1
        if n_shrinks > max_shrinks:
            raise ValueError(
                "stencil still crosses a singular set at the minimum step"
            )
        h *= 0.5

    vals = np.asarray(value_fn(pts), dtype=float)
    v0 = vals[0]
    plus = vals[1 : 2 * dim + 1 : 2]
    minus = vals[2 : 2 * dim + 1 : 2]
    grad = (plus - minus) / (2.0 * h)
    hess = np.zeros((dim, dim))
    np.fill_diagonal(hess, (plus - 2.0 * v0 + minus) / h**2)
    k = 2 * dim + 1
    for i in range(dim):
        for j in range(i + 1, dim):
            vpp, vpm, vmp, vmm = vals[k : k + 4]
            k += 4
            hij = (vpp - vpm - vmp + vmm) / (4.0 * h**2)
            hess[i, j] = hij
            hess[j, i] = hij

    out = hgroup.h_hessian(grad, hess, xa) if space == "heisenberg" else hess
    if return_info:
        return out, {"h": h, "n_shrinks": n_shrinks, "n_points": offsets.shape[0]}
    return out


def convergence_study(
    field,
    region: Region,
    h0: float = 1e-2,
    levels: int = 4,
    n_points: int = 48,
) -> ConvergenceResult:
    """Max deviation between analytic and FD Hessians over halved steps.

    Needs at least two levels so an observed order can be formed; raises on
    a region with no admissible points.
    """
    if levels < 2:
        raise ValueError("need at least two levels to observe an order")
    if n_points < 1:
        raise ValueError("n_points must be positive")
    batch = sample_region(
        region, space=field.space, dim=field.dim, singular_radii=field.singular_radii
    )
    if batch.n_admissible == 0:
        raise ValueError("region left no admissible sample points")
    pts = batch.points[batch.admissible][:n_points]

    grads = np.asarray(field.gradient(pts), dtype=float)
    hessians = np.asarray(field.hessian(pts), dtype=float)
    if field.space == "heisenberg":
        refs = hgroup.h_hessian(grads, hessians, pts)
    else:
        refs = 0.5 * (hessians + np.swapaxes(hessians, -1, -2))

    rows = []
    n_shrinks = 0
    prev_err = None
    for level in range(levels):
        h = h0 / 2.0**level
        worst = 0.0
        for i in range(pts.shape[0]):
            fd, info = fd_h_hessian(
                field.value,
                pts[i],
                h,
                space=field.space,
                singular_radii=field.singular_radii,
                return_info=True,
            )
            n_shrinks += info["n_shrinks"]
            worst = max(worst, float(np.abs(fd - refs[i]).max()))
        order = None if prev_err is None else math.log2(prev_err / worst)
        rows.append({"h": h, "max_err": worst, "order": order})
        prev_err = worst

    c_est = float(np.median([r["max_err"] / r["h"] ** 2 for r in rows]))
    return ConvergenceResult(rows, c_est, int(pts.shape[0]), n_shrinks)
