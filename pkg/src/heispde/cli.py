"""Command line front end.

Subcommands
    verify       sampled inequality (or closed-form comparison) for a field
    lyapunov     growth-condition check for a built-in coefficient fixture
    op-eval      evaluate one extremal operator on explicit matrices
    convergence  finite-difference consistency study for a field
    gallery list describe the shipped radial profiles

Options can come from a JSON config file (--config) and are overridden by
flags; unknown config keys are rejected.  Reports are written with --out as
JSON whose floats are printed with repr-faithful precision, so identical
inputs produce identical files except for the wall_time entry.

Exit codes: 0 verified, 1 inequality or condition failed, 2 usage or config
error, 3 vacuous run (no admissible sample points).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from . import checker, gallery, operators
from .checker import OperatorSpec, Region
from .gallery import PROFILE_NAMES, ProfileRegimeError
from .hgroup import HeisDims
from .operators import Ellipticity, PucciAlpha

__all__ = ["FIXTURES", "PROFILE_DEFAULTS", "main", "run_fixture", "write_json_report"]

SCHEMA = checker.SCHEMA

# Default (operator, sense) under which each shipped profile is checked.
PROFILE_DEFAULTS: dict[str, tuple[str, str]] = {
    "u2": ("pucci_max", "supersolution"),
    "u3": ("pucci_max", "subsolution"),
    "u_tilde": ("neg_trace", "supersolution"),
    "u4": ("pucci_max", "subsolution"),
    "u5": ("pucci_max", "supersolution"),
    "folland": ("neg_trace", "supersolution"),
    "log_rho": ("pucci_min", "subsolution"),
    "neg_log_rho": ("pucci_max", "supersolution"),
    "power": ("neg_trace", "subsolution"),
}

_EXIT_BY_VERDICT = {"pass": 0, "fail": 1, "vacuous": 3}


class CliError(Exception):
    pass


# ---------------------------------------------------------------------------
# deterministic JSON


def _format_float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        raise ValueError("refusing to serialize a non-finite number")
    return format(x, ".17g")


def _json_str(obj, level: int = 0) -> str:
    pad = "  " * level
    inner = "  " * (level + 1)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _format_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        body = ",\n".join(inner + _json_str(v, level + 1) for v in obj)
        return "[\n" + body + "\n" + pad + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        body = ",\n".join(
            inner + json.dumps(str(k)) + ": " + _json_str(v, level + 1)
            for k, v in obj.items()
        )
        return "{\n" + body + "\n" + pad + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _atomic_write(path: str, text: str) -> None:
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_json_report(path: str, payload: dict) -> None:
    """Serialize payload deterministically and move it into place atomically."""
    _atomic_write(path, _json_str(payload) + "\n")


def _payload(command: str, report: checker.CheckReport) -> dict:
    out = {"schema": SCHEMA, "command": command}
    for k, v in report.to_dict().items():
        if k != "schema":
            out[k] = v
    return out


# ---------------------------------------------------------------------------
# option plumbing


def _as_float(v):
    if isinstance(v, bool):
        raise ValueError("expected a number")
    return float(v)


def _as_int(v):
    if isinstance(v, bool):
        raise ValueError("expected an integer")
    i = int(v)
    if i != float(v):
        raise ValueError(f"expected an integer, got {v!r}")
    return i


def _as_bool(v):
    if isinstance(v, bool):
        return v
    raise ValueError(f"expected true/false, got {v!r}")


def _as_str(v):
    if isinstance(v, str):
        return v
    raise ValueError(f"expected a string, got {v!r}")


def _one_of(*options):
    def conv(v):
        s = _as_str(v)
        if s not in options:
            raise ValueError(f"expected one of {options}, got {s!r}")
        return s

    return conv


def _as_gammas(v):
    if isinstance(v, str):
        parts = [p for p in v.split(",") if p.strip()]
        return tuple(float(p) for p in parts)
    if isinstance(v, (list, tuple)):
        return tuple(float(x) for x in v)
    raise ValueError("gammas must be a comma-separated string or a list")


def _as_matrix(v):
    if isinstance(v, str):
        if v.startswith("@"):
            with open(v[1:], encoding="utf-8") as fh:
                v = json.load(fh)
        else:
            v = json.loads(v)
    arr = np.asarray(v, dtype=float)
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim != 3 or arr.shape[-1] != arr.shape[-2]:
        raise ValueError("matrix must be a square matrix or a list of them")
    return arr


def _as_vector(v):
    if isinstance(v, str):
        if v.startswith("@"):
            with open(v[1:], encoding="utf-8") as fh:
                v = json.load(fh)
        else:
            v = json.loads(v)
    arr = np.asarray(v, dtype=float)
    if arr.ndim == 1:
        arr = arr[None]
    if arr.ndim != 2:
        raise ValueError("vector must be flat or a list of flat vectors")
    return arr


_REGION_DEFAULTS = {
    "rho_min": 0.5,
    "rho_max": 4.0,
    "n_samples": 4096,
    "seed": 0,
    "char_eps": 1e-3,
    "kink_eps": 1e-6,
    "sampler": "sobol",
}

_REGION_CONVERT = {
    "rho_min": _as_float,
    "rho_max": _as_float,
    "n_samples": _as_int,
    "seed": _as_int,
    "char_eps": _as_float,
    "kink_eps": _as_float,
    "sampler": _one_of("sobol", "grid"),
}

_FIELD_DEFAULTS = {
    "field": None,
    "kappa": None,
    "negate": False,
    "d": 1,
    "lam": 1.0,
    "Lam": 2.0,
}

_FIELD_CONVERT = {
    "field": _one_of(*PROFILE_NAMES),
    "kappa": _as_float,
    "negate": _as_bool,
    "d": _as_int,
    "lam": _as_float,
    "Lam": _as_float,
}

_CMD_SPECS: dict[str, dict] = {
    "verify": {
        "defaults": {
            **_FIELD_DEFAULTS,
            **_REGION_DEFAULTS,
            "op": None,
            "sense": None,
            "alpha": None,
            "p": None,
            "zero_tol": 1e-12,
            "envelope": "inf",
            "tol": 1e-9,
            "compare_formula": False,
            "field_table": None,
            "out": None,
        },
        "convert": {
            **_FIELD_CONVERT,
            **_REGION_CONVERT,
            "op": _one_of(*checker.SECOND_ORDER_OPS),
            "sense": _one_of("subsolution", "supersolution"),
            "alpha": _as_float,
            "p": _as_float,
            "zero_tol": _as_float,
            "envelope": _one_of("inf", "sup"),
            "tol": _as_float,
            "compare_formula": _as_bool,
            "field_table": _as_str,
            "out": _as_str,
        },
    },
    "lyapunov": {
        "defaults": {
            "fixture": None,
            "d": 1,
            "lam": 1.0,
            "Lam": 2.0,
            "alpha": None,
            "gamma0": 1.0,
            "c0": 1.0,
            "gammas": None,
            **_REGION_DEFAULTS,
            "tol": 1e-9,
            "out": None,
        },
        "convert": {
            "fixture": _one_of("zero-coeffs", "schro", "hou", "ou"),
            "d": _as_int,
            "lam": _as_float,
            "Lam": _as_float,
            "alpha": _as_float,
            "gamma0": _as_float,
            "c0": _as_float,
            "gammas": _as_gammas,
            **_REGION_CONVERT,
            "tol": _as_float,
            "out": _as_str,
        },
    },
    "op-eval": {
        "defaults": {
            "op": None,
            "lam": 1.0,
            "Lam": 2.0,
            "alpha": None,
            "p": None,
            "zero_tol": 1e-12,
            "matrix": None,
            "q": None,
            "out": None,
        },
        "convert": {
            "op": _one_of(*checker.SECOND_ORDER_OPS),
            "lam": _as_float,
            "Lam": _as_float,
            "alpha": _as_float,
            "p": _as_float,
            "zero_tol": _as_float,
            "matrix": _as_matrix,
            "q": _as_vector,
            "out": _as_str,
        },
    },
    "convergence": {
        "defaults": {
            **_FIELD_DEFAULTS,
            **_REGION_DEFAULTS,
            "h0": 1e-2,
            "levels": 4,
            "n_points": 48,
            "min_order": 1.9,
            "out": None,
        },
        "convert": {
            **_FIELD_CONVERT,
            **_REGION_CONVERT,
            "h0": _as_float,
            "levels": _as_int,
            "n_points": _as_int,
            "min_order": _as_float,
            "out": _as_str,
        },
    },
    "gallery": {
        "defaults": {
            "d": None,
            "lam": None,
            "Lam": None,
            "json": False,
            "out": None,
        },
        "convert": {
            "d": _as_int,
            "lam": _as_float,
            "Lam": _as_float,
            "json": _as_bool,
            "out": _as_str,
        },
    },
}


def _add_region_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rho-min", type=float, dest="rho_min")
    p.add_argument("--rho-max", type=float, dest="rho_max")
    p.add_argument("--n-samples", type=int, dest="n_samples")
    p.add_argument("--seed", type=int)
    p.add_argument("--char-eps", type=float, dest="char_eps")
    p.add_argument("--kink-eps", type=float, dest="kink_eps")
    p.add_argument("--sampler", choices=["sobol", "grid"])


def _add_field_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--field", choices=sorted(PROFILE_NAMES))
    p.add_argument("--kappa", type=float)
    p.add_argument("--negate", action="store_true", default=None)
    p.add_argument("--d", type=int)
    p.add_argument("--lam", type=float)
    p.add_argument("--Lam", type=float)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="heispde",
        description="sampled verification of fully nonlinear operator "
        "inequalities on the first Heisenberg-type groups",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    pv = sub.add_parser("verify", help="check an inequality for a shipped field")
    pv.add_argument("--config")
    _add_field_args(pv)
    _add_region_args(pv)
    pv.add_argument("--op", choices=list(checker.SECOND_ORDER_OPS))
    pv.add_argument("--sense", choices=["subsolution", "supersolution"])
    pv.add_argument("--alpha", type=float)
    pv.add_argument("--p", type=float)
    pv.add_argument("--zero-tol", type=float, dest="zero_tol")
    pv.add_argument("--envelope", choices=["inf", "sup"])
    pv.add_argument("--tol", type=float)
    pv.add_argument("--compare-formula", action="store_true", default=None, dest="compare_formula")
    pv.add_argument("--field-table", dest="field_table")
    pv.add_argument("--out")

    pl = sub.add_parser("lyapunov", help="check a growth condition fixture")
    pl.add_argument("--config")
    pl.add_argument("--fixture", choices=["zero-coeffs", "schro", "hou", "ou"])
    pl.add_argument("--d", type=int)
    pl.add_argument("--lam", type=float)
    pl.add_argument("--Lam", type=float)
    pl.add_argument("--alpha", type=float)
    pl.add_argument("--gamma0", type=float)
    pl.add_argument("--c0", type=float)
    pl.add_argument("--gammas")
    _add_region_args(pl)
    pl.add_argument("--tol", type=float)
    pl.add_argument("--out")

    po = sub.add_parser("op-eval", help="evaluate an extremal operator")
    po.add_argument("--config")
    po.add_argument("--op", choices=list(checker.SECOND_ORDER_OPS))
    po.add_argument("--lam", type=float)
    po.add_argument("--Lam", type=float)
    po.add_argument("--alpha", type=float)
    po.add_argument("--p", type=float)
    po.add_argument("--zero-tol", type=float, dest="zero_tol")
    po.add_argument("--matrix")
    po.add_argument("--q")
    po.add_argument("--out")

    pc = sub.add_parser("convergence", help="finite-difference consistency study")
    pc.add_argument("--config")
    _add_field_args(pc)
    _add_region_args(pc)
    pc.add_argument("--h0", type=float)
    pc.add_argument("--levels", type=int)
    pc.add_argument("--n-points", type=int, dest="n_points")
    pc.add_argument("--min-order", type=float, dest="min_order")
    pc.add_argument("--out")

    pg = sub.add_parser("gallery", help="describe the shipped radial profiles")
    pg.add_argument("action", choices=["list"])
    pg.add_argument("--config")
    pg.add_argument("--d", type=int)
    pg.add_argument("--lam", type=float)
    pg.add_argument("--Lam", type=float)
    pg.add_argument("--json", action="store_true", default=None)
    pg.add_argument("--out")

    return parser


def _effective(ns: argparse.Namespace) -> dict:
    spec = _CMD_SPECS[ns.command]
    eff = dict(spec["defaults"])
    convert = spec["convert"]
    config_path = getattr(ns, "config", None)
    if config_path:
        with open(config_path, encoding="utf-8") as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise CliError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise CliError("config must be a JSON object")
        for key, value in raw.items():
            if key not in eff:
                raise CliError(f"unknown config key {key!r} for {ns.command}")
            try:
                eff[key] = None if value is None else convert[key](value)
            except (ValueError, TypeError) as exc:
                raise CliError(f"config key {key!r}: {exc}") from exc
    for key in eff:
        flag = getattr(ns, key, None)
        if flag is not None:
            eff[key] = convert[key](flag)
    return eff


def _region_from(eff: dict) -> Region:
    return Region(
        rho_min=eff["rho_min"],
        rho_max=eff["rho_max"],
        n_samples=eff["n_samples"],
        seed=eff["seed"],
        char_eps=eff["char_eps"],
        kink_eps=eff["kink_eps"],
        sampler=eff["sampler"],
    )


def _field_from(eff: dict):
    name = eff["field"]
    if name is None:
        raise CliError("--field is required")
    dims = HeisDims(eff["d"])
    kind, _, needs_e = PROFILE_NAMES[name]
    e = Ellipticity(eff["lam"], eff["Lam"])
    profile = gallery.make_profile(
        name, e if needs_e else None, dims, kappa=eff["kappa"]
    )
    field = gallery.field_from_profile(profile, dims)
    if eff["negate"]:
        field = -field
    return field, e, dims


def _summary(line_prefix: str, report: checker.CheckReport) -> None:
    worst = report.worst_violation
    w = "none" if worst is None else format(worst, ".6e")
    print(
        f"{line_prefix}: verdict={report.verdict} worst_violation={w} "
        f"n_evaluated={report.n_evaluated} n_excluded={report.n_excluded}"
    )


def _write_field_table(path: str, report: checker.CheckReport, space: str) -> None:
    samples = report.samples
    pts = samples["points"]
    n, dim = pts.shape
    n_eig = samples["eigs"].shape[1]
    header = (
        ["space"]
        + [f"x{i + 1}" for i in range(dim)]
        + ["radius", "tau", "value", "second_order", "first_order", "total", "alive"]
        + [f"eig{i + 1}" for i in range(n_eig)]
    )
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(n):
            tau = "" if samples["tau"] is None else _format_float(samples["tau"][i])
            row = (
                [space]
                + [_format_float(v) for v in pts[i]]
                + [
                    _format_float(samples["radius"][i]),
                    tau,
                    _format_float(samples["value"][i]),
                    _format_float(samples["second"][i]),
                    _format_float(samples["first"][i]),
                    _format_float(samples["total"][i]),
                    int(samples["alive"][i]),
                ]
                + [_format_float(v) for v in samples["eigs"][i]]
            )
            writer.writerow(row)
    os.replace(tmp, path)


def _cmd_verify(eff: dict) -> int:
    field, e, _ = _field_from(eff)
    op = eff["op"]
    sense = eff["sense"]
    default_op, default_sense = PROFILE_DEFAULTS[eff["field"]]
    if op is None:
        op = default_op
    if sense is None:
        sense = default_sense
    spec = OperatorSpec(
        second_order=op,
        sense=sense,
        ell=e if op in ("pucci_max", "pucci_min") else None,
        alpha=eff["alpha"],
        p=eff["p"],
        envelope=eff["envelope"],
        zero_tol=eff["zero_tol"],
    )
    region = _region_from(eff)
    mode = "formula" if eff["compare_formula"] else "sense"
    report = checker.check_inequality(
        field,
        spec,
        region,
        eff["tol"],
        mode=mode,
        keep_samples=eff["field_table"] is not None,
    )
    if eff["field_table"] is not None and report.samples is not None:
        _write_field_table(eff["field_table"], report, field.space)
    if eff["out"]:
        write_json_report(eff["out"], _payload("verify", report))
    _summary("verify", report)
    return _EXIT_BY_VERDICT[report.verdict]


def _cmd_lyapunov(eff: dict) -> int:
    if eff["fixture"] is None:
        raise CliError("--fixture is required (library callers can pass "
                       "arbitrary coefficient families)")
    dims = HeisDims(eff["d"])
    e = Ellipticity(eff["lam"], eff["Lam"])
    cond, data, extra = checker.lyapunov_fixture(
        eff["fixture"],
        dims,
        gamma0=eff["gamma0"],
        c0=eff["c0"],
        gammas=eff["gammas"],
    )
    gammas = extra.get("gammas")
    region = _region_from(eff)
    report = checker.check_lyapunov(
        cond,
        data,
        e,
        region,
        dims,
        alpha=eff["alpha"],
        gammas=gammas,
        tol=eff["tol"],
    )
    if eff["out"]:
        write_json_report(eff["out"], _payload("lyapunov", report))
    _summary(f"lyapunov[{cond}]", report)
    return _EXIT_BY_VERDICT[report.verdict]


def _cmd_op_eval(eff: dict) -> int:
    if eff["op"] is None or eff["matrix"] is None:
        raise CliError("op-eval needs --op and --matrix")
    op = eff["op"]
    mats = eff["matrix"]
    m = mats.shape[-1]
    eigs = operators.sym_eigenvalues(mats)
    if op == "pucci_max":
        values = operators.pucci_max(Ellipticity(eff["lam"], eff["Lam"]), mats, zero_tol=eff["zero_tol"])
    elif op == "pucci_min":
        values = operators.pucci_min(Ellipticity(eff["lam"], eff["Lam"]), mats, zero_tol=eff["zero_tol"])
    elif op == "pucci_plus_alpha":
        if eff["alpha"] is None:
            raise CliError("pucci_plus_alpha needs --alpha")
        values = operators.pucci_plus_alpha(PucciAlpha(eff["alpha"], m), mats)
    elif op == "pucci_minus_alpha":
        if eff["alpha"] is None:
            raise CliError("pucci_minus_alpha needs --alpha")
        values = operators.pucci_minus_alpha(PucciAlpha(eff["alpha"], m), mats)
    elif op == "pnorm":
        if eff["p"] is None or eff["q"] is None:
            raise CliError("pnorm needs --p and --q")
        q = eff["q"]
        if q.shape[0] == 1 and mats.shape[0] > 1:
            q = np.broadcast_to(q, (mats.shape[0], q.shape[1]))
        values = operators.pnorm_operator(eff["p"], q, mats)
    else:
        values = operators.neg_trace(mats)
    payload = {
        "schema": SCHEMA,
        "command": "op-eval",
        "kind": "op_eval",
        "op": op,
        "params": {
            "lam": eff["lam"],
            "Lam": eff["Lam"],
            "alpha": eff["alpha"],
            "p": eff["p"],
            "zero_tol": eff["zero_tol"],
        },
        "values": np.atleast_1d(values),
        "eigenvalues": eigs,
    }
    if eff["out"]:
        write_json_report(eff["out"], payload)
    for v in np.atleast_1d(values):
        print(_format_float(float(v)))
    return 0


def _cmd_convergence(eff: dict) -> int:
    field, _, _ = _field_from(eff)
    region = _region_from(eff)
    result = checker.convergence_study(
        field, region, h0=eff["h0"], levels=eff["levels"], n_points=eff["n_points"]
    )
    orders = [r["order"] for r in result.rows if r["order"] is not None]
    median_order = float(np.median(orders))
    verdict = "pass" if median_order >= eff["min_order"] else "fail"
    payload = {
        "schema": SCHEMA,
        "command": "convergence",
        "kind": "convergence",
        "verdict": verdict,
        "median_order": median_order,
        "min_order": eff["min_order"],
        "c_estimate": result.c_estimate,
        "n_points": result.n_points,
        "n_shrinks": result.n_shrinks,
        "rows": result.rows,
        "config": {
            "field": eff["field"],
            "d": eff["d"],
            "lam": eff["lam"],
            "Lam": eff["Lam"],
            "h0": eff["h0"],
            "levels": eff["levels"],
        },
    }
    if eff["out"]:
        write_json_report(eff["out"], payload)
    print(f"{'h':>12}  {'max_err':>12}  {'order':>8}")
    for row in result.rows:
        order = "" if row["order"] is None else format(row["order"], "8.4f")
        print(f"{row['h']:>12.6g}  {row['max_err']:>12.6g}  {order:>8}")
    print(f"convergence: verdict={verdict} median_order={median_order:.4f} "
          f"c_estimate={result.c_estimate:.6g}")
    return 0 if verdict == "pass" else 1


def _cmd_gallery(eff: dict) -> int:
    dims = None if eff["d"] is None else HeisDims(eff["d"])
    e = None
    if eff["lam"] is not None and eff["Lam"] is not None:
        e = Ellipticity(eff["lam"], eff["Lam"])
    rows = gallery.profile_catalog(e, dims)
    payload = {"schema": SCHEMA, "command": "gallery", "kind": "gallery", "rows": rows}
    if eff["out"]:
        write_json_report(eff["out"], payload)
    if eff["json"]:
        print(_json_str(payload))
    else:
        for row in rows:
            bits = [f"{row['name']:<12}", f"{row['kind']:<11}"]
            if "exponent" in row and row["exponent"] is not None:
                bits.append(f"exponent={row['exponent']:.6g}")
            if "valid" in row:
                bits.append("ok" if row["valid"] else "out-of-regime")
            bits.append(row["description"])
            print("  ".join(bits))
    return 0


_DISPATCH = {
    "verify": _cmd_verify,
    "lyapunov": _cmd_lyapunov,
    "op-eval": _cmd_op_eval,
    "convergence": _cmd_convergence,
    "gallery": _cmd_gallery,
}


# Named invocations with known outcomes, used for determinism checks and as
# documentation of working command lines.
FIXTURES: dict[str, dict] = {
    "verify-log-rho": {
        "argv": [
            "verify", "--field", "log_rho", "--op", "pucci_min",
            "--sense", "subsolution", "--d", "2", "--lam", "1.0", "--Lam", "2.0",
            "--rho-min", "0.5", "--rho-max", "4.0", "--n-samples", "512",
            "--char-eps", "0.05", "--seed", "7",
        ],
        "expected_exit": 0,
    },
    "verify-log-rho-formula": {
        "argv": [
            "verify", "--field", "log_rho", "--op", "pucci_min",
            "--sense", "subsolution", "--d", "2", "--lam", "1.0", "--Lam", "2.0",
            "--rho-min", "0.5", "--rho-max", "4.0", "--n-samples", "512",
            "--char-eps", "0.05", "--seed", "7", "--compare-formula",
        ],
        "expected_exit": 0,
    },
    "verify-u4": {
        "argv": [
            "verify", "--field", "u4", "--d", "1", "--lam", "1.0", "--Lam", "1.5",
            "--rho-min", "0.1", "--rho-max", "5.0", "--n-samples", "512",
            "--char-eps", "0.02", "--seed", "3",
        ],
        "expected_exit": 0,
    },
    "verify-u-tilde": {
        "argv": [
            "verify", "--field", "u_tilde", "--d", "2",
            "--rho-min", "0.25", "--rho-max", "4.0", "--n-samples", "512",
            "--char-eps", "0.05", "--seed", "5",
        ],
        "expected_exit": 0,
    },
    "lyapunov-zero-coeffs": {
        "argv": [
            "lyapunov", "--fixture", "zero-coeffs", "--d", "1",
            "--lam", "1.0", "--Lam", "2.0", "--rho-min", "1.0", "--rho-max", "8.0",
            "--n-samples", "512", "--seed", "11",
        ],
        "expected_exit": 1,
    },
    "lyapunov-schro": {
        "argv": [
            "lyapunov", "--fixture", "schro", "--d", "1",
            "--lam", "1.0", "--Lam", "2.0", "--rho-min", "10.0", "--rho-max", "80.0",
            "--n-samples", "512", "--seed", "13",
        ],
        "expected_exit": 0,
    },
    "lyapunov-hou": {
        "argv": [
            "lyapunov", "--fixture", "hou", "--gamma0", "1.0", "--d", "1",
            "--lam", "1.0", "--Lam", "2.0", "--rho-min", "2.0", "--rho-max", "16.0",
            "--n-samples", "512", "--seed", "17",
        ],
        "expected_exit": 0,
    },
    "lyapunov-ou": {
        "argv": [
            "lyapunov", "--fixture", "ou", "--d", "1",
            "--lam", "1.0", "--Lam", "2.0", "--rho-min", "2.5", "--rho-max", "20.0",
            "--n-samples", "512", "--seed", "19",
        ],
        "expected_exit": 0,
    },
    "op-eval-pucci": {
        "argv": [
            "op-eval", "--op", "pucci_max", "--lam", "1.0", "--Lam", "2.0",
            "--matrix", "[[1.0, 0.0], [0.0, -1.0]]",
        ],
        "expected_exit": 0,
    },
    "convergence-folland": {
        "argv": [
            "convergence", "--field", "folland", "--d", "1",
            "--rho-min", "0.8", "--rho-max", "2.0", "--n-samples", "64",
            "--seed", "2", "--h0", "0.01", "--levels", "3", "--n-points", "6",
            "--min-order", "1.8",
        ],
        "expected_exit": 0,
    },
    "gallery-list": {
        "argv": ["gallery", "list", "--d", "1", "--lam", "1.0", "--Lam", "2.0"],
        "expected_exit": 0,
    },
}


def run_fixture(name: str, out: str | None = None) -> int:
    """Run a named fixture, optionally writing its report to out."""
    entry = FIXTURES[name]
    argv = list(entry["argv"])
    if out is not None:
        argv += ["--out", out]
    return main(argv)


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        eff = _effective(ns)
        return _DISPATCH[ns.command](eff)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ProfileRegimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, TypeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
