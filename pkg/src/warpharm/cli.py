"""Command-line entry point: JSON config in, deterministic JSON or CSV reports out."""

from __future__ import annotations

import argparse
import copy
import json
import math
import sys
from dataclasses import dataclass

import jsonschema
import numpy as np
import sympy as sp

from . import lie3
from . import oracle as orc
from .errors import BadParams, NoCase, SchemaError, WarpHarmError
from .families import COORDS, build_family, default_fiber_points, frame_residual_exprs, section_residual
from .harmonicity import (
    CLOSED_TOL,
    DEFAULT_SAMPLES,
    NUMERIC_TOL,
    HarmonicityProblem,
    assemble_system,
    chebyshev_points,
    classify,
    check,
)
from .lie3 import NonUnimodularAlgebra, UnimodularAlgebra
from .report import canonical_json, envelope, rows_csv
from .tension import (
    chart_s_of_v,
    classify_harmonic_maps_nonunimodular,
    classify_harmonic_maps_unimodular,
    harmonic_map_check,
    s_of_v,
)
from .warp import (
    AffinePhi,
    ConstantWarp,
    CubeRootWarp,
    EulerPhi,
    LinearWarp,
    SqrtQuadraticWarp,
    solve_phi,
    solve_warp,
)

COMMANDS = ("classify", "solve", "check", "map-check", "oracle", "table1", "sweep")
DEFAULT_SEED = 0
DEFAULT_ORACLE_POINTS = 6

# ------------------------------------------------------------------ schema --

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_PAIR = {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}
_TRIPLE = {"type": "array", "items": _NUM, "minItems": 3, "maxItems": 3}


def _kind(kind: str, props: dict, required=()) -> dict:
    return {
        "if": {"properties": {"kind": {"const": kind}}, "required": ["kind"]},
        "then": {"properties": {"kind": {"const": kind}, **props}, "required": ["kind", *required],
                 "additionalProperties": False},
    }


def _family(name: str, props: dict, required=()) -> dict:
    return {
        "if": {"properties": {"family": {"const": name}}, "required": ["family"]},
        "then": {"properties": {"params": {"type": "object", "properties": props, "required": list(required),
                                           "additionalProperties": False}}},
    }


def _section(kinds: list, *variants) -> dict:
    return {"type": "object", "required": ["kind"], "properties": {"kind": {"enum": kinds}}, "allOf": list(variants)}


CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "fiber": {
            **_section(
                ["unimodular", "non_unimodular", "chart_family"],
                _kind("unimodular", {"lambda": _TRIPLE}, ["lambda"]),
                _kind("non_unimodular", {"alpha": _NUM, "beta": _NUM, "delta": _NUM}, ["alpha", "beta", "delta"]),
                _kind("chart_family", {"family": {"enum": ["R3", "H3", "RxH2"]}, "params": {"type": "object"}},
                      ["family", "params"]),
            ),
        },
        "warp": _section(
            ["constant", "linear", "cube_root", "sqrt_quadratic", "epsilon_numeric"],
            _kind("constant", {"c": _POS}, ["c"]),
            _kind("linear", {"slope": _NUM, "offset": _NUM}, ["slope", "offset"]),
            _kind("cube_root", {"c1": _NUM, "c2": _NUM}, ["c1", "c2"]),
            _kind("sqrt_quadratic", {"kappa0": _NUM, "c1": _NUM, "c2": _NUM, "component": {"enum": [0, -1]}},
                  ["kappa0", "c1", "c2"]),
            _kind("epsilon_numeric", {"epsilon": _NUM, "t0": _NUM, "f0": _POS, "df0": _NUM, "bounds": _PAIR},
                  ["epsilon", "t0", "f0", "df0"]),
        ),
        "field": _section(
            ["left_invariant", "family_params"],
            _kind("left_invariant", {"coeffs": _TRIPLE}, ["coeffs"]),
            _kind("family_params", {}),
        ),
        "phi": _section(
            ["euler", "ivp", "affine"],
            _kind("euler", {"c1": _NUM, "c2": _NUM}, ["c1", "c2"]),
            _kind("ivp", {"t0": _NUM, "phi0": _NUM, "dphi0": _NUM, "span": _PAIR}, ["t0", "phi0", "dphi0"]),
            _kind("affine", {"g1": _NUM, "g2": _NUM}, ["g1", "g2"]),
        ),
        "check": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"tol": _POS, "samples": {"type": "integer", "minimum": 2},
                           "seed": {"type": "integer", "minimum": 0}, "h": _POS,
                           "points": {"type": "integer", "minimum": 1}},
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"format": {"enum": ["json", "csv"]}, "path": {"type": "string"}},
        },
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "required": ["path", "values", "command"],
            "properties": {
                "path": {"type": "string", "pattern": "^(/[^/]+)+$"},
                "values": {"type": "array", "minItems": 1, "items": {"type": ["number", "string"]}},
                "command": {"enum": ["classify", "solve", "check", "map-check", "oracle"]},
            },
        },
    },
    "allOf": [
        {
            "if": {"properties": {"fiber": {"properties": {"kind": {"const": "chart_family"}}, "required": ["kind"]}},
                   "required": ["fiber"]},
            "then": {"properties": {"fiber": {"allOf": [
                _family("R3", {"eps": _NUM, "v1": _NUM, "v2": _NUM, "kappa1": _NUM, "b": {"type": "string"}},
                        ["eps"]),
                _family("H3", {"kappa": _NUM, "kappa_prime": _NUM}, ["kappa", "kappa_prime"]),
                _family("RxH2", {"alpha": _POS, "eps": _NUM, "b_coeffs": _PAIR, "c_coeffs": _PAIR,
                                 "b_branch": {"type": "string"}, "c_branch": {"type": "string"}},
                        ["alpha", "eps"]),
            ]}}},
        },
    ],
}

_VALIDATOR = jsonschema.Draft202012Validator(CONFIG_SCHEMA)


def _pointer(path) -> str:
    return "/" + "/".join(str(p) for p in path) if path else "/"


def _finite_violations(obj, path=()):
    if isinstance(obj, dict):
        for k, v in obj.items():
            yield from _finite_violations(v, path + (k,))
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            yield from _finite_violations(v, path + (i,))
    elif isinstance(obj, float) and not math.isfinite(obj):
        yield _pointer(path), "numeric fields must be finite"


def _semantic_violations(cfg: dict):
    fib = cfg.get("fiber", {})
    if fib.get("kind") == "non_unimodular":
        a, d = fib["alpha"], fib["delta"]
        if not a + d > 0:
            yield "/fiber", f"invariant alpha + delta > 0 violated (alpha={a}, delta={d})"
        if not a >= d:
            yield "/fiber", f"invariant alpha >= delta violated (alpha={a}, delta={d})"
    fld = cfg.get("field", {}).get("kind")
    if fld is not None and fib.get("kind") is not None:
        if (fib["kind"] == "chart_family") != (fld == "family_params"):
            yield "/field/kind", f"field kind {fld!r} does not match fiber kind {fib['kind']!r}"
    phi, warp = cfg.get("phi", {}).get("kind"), cfg.get("warp", {})
    if phi == "euler" and warp.get("kind") != "linear":
        yield "/phi/kind", "euler phi needs a linear warp"
    if phi == "affine" and not (warp.get("kind") == "constant"
                                or (warp.get("kind") == "linear" and warp.get("slope") == 0)):
        yield "/phi/kind", "affine phi needs a constant warp"


def validate_config(cfg) -> None:
    errors = sorted(((_pointer(e.absolute_path), e.message) for e in _VALIDATOR.iter_errors(cfg)))
    if not errors and isinstance(cfg, dict):
        errors = list(_finite_violations(cfg)) + list(_semantic_violations(cfg))
    if errors:
        raise SchemaError(errors)


@dataclass(frozen=True)
class RunConfig:
    raw: dict

    def section(self, name: str, command: str) -> dict:
        if name not in self.raw:
            raise SchemaError([(f"/{name}", f"required by command {command!r}")])
        return self.raw[name]

    def check_opt(self, key, default=None):
        return self.raw.get("check", {}).get(key, default)


def _reject_constant(token):
    raise SchemaError([("/", f"non-finite literal {token} is not allowed")])


def parse_config(text: str) -> RunConfig:
    try:
        raw = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise SchemaError([("/", f"invalid JSON: {exc.msg} at line {exc.lineno} column {exc.colno}")]) from None
    validate_config(raw)
    return RunConfig(raw)


# -------------------------------------------------------------- builders --


def build_algebra(spec: dict):
    if spec["kind"] == "unimodular":
        return UnimodularAlgebra(tuple(spec["lambda"]))
    if spec["kind"] == "non_unimodular":
        return NonUnimodularAlgebra(spec["alpha"], spec["beta"], spec["delta"])
    raise BadParams("expected a unimodular or non_unimodular fiber")


def build_chart_field(spec: dict):
    params = {k: (tuple(v) if isinstance(v, list) else v) for k, v in spec["params"].items()}
    return build_family(spec["family"], **params)


def build_warp(spec: dict):
    k = spec["kind"]
    if k == "constant":
        return ConstantWarp(spec["c"])
    if k == "linear":
        return LinearWarp(spec["slope"], spec["offset"])
    if k == "cube_root":
        return CubeRootWarp(spec["c1"], spec["c2"])
    if k == "sqrt_quadratic":
        return SqrtQuadraticWarp(spec["kappa0"], spec["c1"], spec["c2"], spec.get("component", -1))
    bounds = tuple(spec["bounds"]) if "bounds" in spec else None
    return solve_warp(spec["epsilon"], spec["t0"], spec["f0"], spec["df0"], bounds=bounds)


def build_phi(spec: dict, warp, rhs_coeff: float):
    k = spec["kind"]
    if k == "euler":
        return EulerPhi(spec["c1"], spec["c2"], warp.slope, warp.offset, rhs_coeff)
    if k == "affine":
        return AffinePhi(spec["g1"], spec["g2"], rhs_coeff)
    span = tuple(spec["span"]) if "span" in spec else None
    return solve_phi(warp, rhs_coeff, t0=spec["t0"], phi0=spec["phi0"], dphi0=spec["dphi0"], span=span)


@dataclass
class Setup:
    """Objects built from a config for one command."""

    algebra: object = None
    family: object = None
    v2: np.ndarray | None = None
    warp: object = None
    phi: object = None

    @property
    def rhs_coeff(self) -> float:
        if self.family is not None:
            return 2.0 * self.family.kappa
        return 2.0 * lie3.divergence(lie3.connection(self.algebra), self.v2)

    def problem(self) -> HarmonicityProblem:
        return HarmonicityProblem(self.algebra, self.v2, self.warp, self.phi)

    def window(self) -> tuple[float, float]:
        if self.phi is None:
            return self.warp.sample_window()
        if self.algebra is not None:
            return self.problem().window()
        # only the warp and phi domains matter here
        return HarmonicityProblem(UnimodularAlgebra((0, 0, 0)), (1, 0, 0), self.warp, self.phi).window()


def _setup(cfg: RunConfig, command: str, need=("fiber", "field", "warp", "phi")) -> Setup:
    s = Setup()
    if "fiber" in need:
        fib = cfg.section("fiber", command)
        if fib["kind"] == "chart_family":
            s.family = build_chart_field(fib)
        else:
            s.algebra = build_algebra(fib)
            if "field" in need:
                s.v2 = np.asarray(cfg.section("field", command)["coeffs"], dtype=float)
    if "warp" in need:
        s.warp = build_warp(cfg.section("warp", command))
        if "phi" in need:
            rhs = s.rhs_coeff if (s.algebra is not None and s.v2 is not None) or s.family is not None else 0.0
            s.phi = build_phi(cfg.section("phi", command), s.warp, rhs)
    return s


# -------------------------------------------------------------- commands --


@dataclass
class Outcome:
    code: int
    result: dict
    csv: str
    tolerances: dict


def _tol(cfg: RunConfig, flag_tol, default):
    if flag_tol is not None:
        return float(flag_tol)
    return float(cfg.check_opt("tol", default))


def cmd_classify(cfg: RunConfig, opts) -> Outcome:
    s = _setup(cfg, "classify", need=("fiber", "field"))
    if s.family is not None:
        d = s.family.to_dict()
        csv = rows_csv(("chart", "branch", "sigma", "kappa"), [(d["chart"], d["branch"], d["sigma"], d["kappa"])])
        return Outcome(0, {"verdict": True, "family": d}, csv, {})
    try:
        cases = classify(s.algebra, s.v2)
    except NoCase as exc:
        return Outcome(1, {"verdict": False, "cases": [], "no_case": str(exc)},
                       rows_csv(("family", "case_id", "epsilon", "admissible", "rhs_coeff"), []), {})
    rows = [(c.family, c.case_id, c.epsilon, c.admissible_text, c.rhs_coeff) for c in cases]
    return Outcome(0, {"verdict": True, "cases": [c.to_dict() for c in cases]},
                   rows_csv(("family", "case_id", "epsilon", "admissible", "rhs_coeff"), rows), {})


def cmd_solve(cfg: RunConfig, opts) -> Outcome:
    need = ["warp"]
    if "phi" in cfg.raw:
        need.append("phi")
        if "fiber" in cfg.raw and ("field" in cfg.raw or cfg.raw["fiber"]["kind"] == "chart_family"):
            need += ["fiber", "field"]
    s = _setup(cfg, "solve", need=tuple(need))
    samples = int(cfg.check_opt("samples", DEFAULT_SAMPLES))
    lo, hi = s.window()
    ts = chebyshev_points(lo, hi, samples)
    f, df, d2f = s.warp.eval(ts)
    cols = {"t": ts, "f": f, "df": df, "d2f": d2f}
    result = {"verdict": True, "warp": s.warp.to_dict(), "window": [lo, hi], "samples": samples}
    if s.phi is not None:
        ph, dph, d2ph = s.phi.eval(ts)
        cols.update(phi=ph, dphi=dph, d2phi=d2ph)
        result["phi"] = s.phi.to_dict()
    result["grid"] = {k: np.asarray(v).tolist() for k, v in cols.items()}
    csv = rows_csv(tuple(cols), zip(*cols.values()))
    return Outcome(0, result, csv, {"samples": samples})


def _family_ts(s: Setup, samples: int):
    lo, hi = s.window()
    return chebyshev_points(lo, hi, samples)


def cmd_check(cfg: RunConfig, opts) -> Outcome:
    s = _setup(cfg, "check")
    samples = int(cfg.check_opt("samples", DEFAULT_SAMPLES))
    if s.family is None:
        p = s.problem()
        tol = _tol(cfg, opts.tol, CLOSED_TOL if p.is_closed_form() else NUMERIC_TOL)
        rep = check(p, samples=samples, tol=tol)
        out = rep.to_dict(rows=True)
        out["verdict"] = rep.verdict
        return Outcome(0 if rep.verdict else 1, out, rep.to_csv(), {"tol": tol, "samples": samples})
    closed = s.warp.kind in ("constant", "linear", "cube_root", "sqrt_quadratic") and s.phi.kind != "numeric"
    tol = _tol(cfg, opts.tol, CLOSED_TOL if closed else NUMERIC_TOL)
    ts = _family_ts(s, samples)
    pts = default_fiber_points(s.family)
    channels = section_residual(s.family, s.warp, s.phi, ts, pts)
    mx = max(channels.values())
    verdict = bool(mx < tol)
    out = {"verdict": verdict, "max_abs": mx, "channels": channels, "tol": tol, "family": s.family.to_dict(),
           "warp": s.warp.to_dict(), "phi": s.phi.to_dict(), "fiber_points": len(pts), "samples": samples}
    csv = rows_csv(("channel", "max_abs"), sorted(channels.items()))
    return Outcome(0 if verdict else 1, out, csv, {"tol": tol, "samples": samples})


def cmd_map_check(cfg: RunConfig, opts) -> Outcome:
    s = _setup(cfg, "map-check")
    samples = int(cfg.check_opt("samples", DEFAULT_SAMPLES))
    if s.family is not None:
        tol = _tol(cfg, opts.tol, CLOSED_TOL)
        ts = _family_ts(s, samples)
        pts = default_fiber_points(s.family)
        harm = max(section_residual(s.family, s.warp, s.phi, ts, pts).values())
        rows = []
        for pt in pts:
            tv = chart_s_of_v(s.family, s.warp, s.phi, ts, pt)
            rows.append((*pt, tv.max_abs))
        ten = max(r[-1] for r in rows)
        verdict = bool(harm < tol and ten < tol)
        out = {"verdict": verdict, "tol": tol, "harmonicity_max": harm, "tension_max": ten,
               "max_abs": max(harm, ten), "family": s.family.to_dict(), "samples": samples}
        return Outcome(0 if verdict else 1, out, rows_csv(("x", "y", "z", "tension_max"), rows),
                       {"tol": tol, "samples": samples})
    p = s.problem()
    tol = _tol(cfg, opts.tol, CLOSED_TOL if p.is_closed_form() else NUMERIC_TOL)
    if isinstance(s.algebra, NonUnimodularAlgebra):
        rep = classify_harmonic_maps_nonunimodular(s.algebra, s.v2, s.warp, s.phi, samples=samples, tol=tol)
        out = rep.to_dict()
        derived = rep.derived
    else:
        derived = harmonic_map_check(p, samples=samples, tol=tol)
        out = derived.to_dict()
        if abs(np.linalg.norm(s.v2) - 1.0) <= 1e-9:
            out["catalogue"] = [c.to_dict() for c in classify_harmonic_maps_unimodular(s.algebra, s.v2)]
    out["max_abs"] = derived.max_residual
    return Outcome(0 if derived.verdict else 1, out, derived.tension.to_csv(), {"tol": tol, "samples": samples})


def _oracle_points(rng, lo, hi, count, positive_y):
    pad = 0.1 * (hi - lo)
    pts = []
    for _ in range(count):
        t = rng.uniform(lo + pad, hi - pad)
        x, z = rng.uniform(-1.0, 1.0, 2)
        y = rng.uniform(0.5, 2.0) if positive_y else rng.uniform(-1.0, 1.0)
        pts.append(np.array([t, x, y, z]))
    return pts


def _fiber_chart_for(s: Setup):
    if s.family is not None:
        cid = s.family.chart_id
        if cid == "R3":
            return orc.flat_r3()
        if cid == "H3":
            return orc.heisenberg()
        return orc.rxh2(float(s.family.params["alpha"]))
    if isinstance(s.algebra, UnimodularAlgebra):
        return orc.unimodular_chart(s.algebra.lam)
    a = s.algebra
    return orc.nonunimodular_chart(a.alpha, a.beta, a.delta)


def cmd_oracle(cfg: RunConfig, opts) -> Outcome:
    s = _setup(cfg, "oracle")
    h = float(opts.h) if opts.h is not None else float(cfg.check_opt("h", orc.H_SECOND))
    tol = _tol(cfg, opts.tol, orc.TOL_SECOND)
    seed = int(cfg.check_opt("seed", DEFAULT_SEED))
    count = int(cfg.check_opt("points", DEFAULT_ORACLE_POINTS))
    fiber = _fiber_chart_for(s)
    lo, hi = s.window()
    rng = np.random.default_rng(seed)
    positive_y = s.family is not None and s.family.chart.positive_y
    pts = _oracle_points(rng, lo, hi, count, positive_y)
    if s.family is not None:
        field = s.family.coord_function()
    else:
        v = s.v2
        field = lambda q: orc.orthonormal_frame(fiber, q) @ v  # noqa: E731
    fd = orc.warped_field_check(lambda t: s.warp.eval(t)[0], lambda t: s.phi.eval(t)[0], fiber, field, pts,
                                lo, hi, h=h)
    rows = []
    for k, q in enumerate(pts):
        t = float(q[0])
        if s.family is None:
            hor, ver = assemble_system(s.problem(), t)
            tv = s_of_v(s.problem(), t)
            lap = np.r_[-hor, ver]
        else:
            lap = _family_laplacian(s, t, q[1:])
            tv = chart_s_of_v(s.family, s.warp, s.phi, t, q[1:])
        ss = np.r_[tv.horizontal[0] if np.ndim(tv.horizontal) else tv.horizontal, np.ravel(tv.vertical)[:3]]
        rows.append((*map(float, q), float(np.max(np.abs(fd.laplacian[k] - lap))),
                     float(np.max(np.abs(fd.s_part[k] - ss)))))
    lap_diff = max(r[4] for r in rows)
    s_diff = max(r[5] for r in rows)
    verdict = bool(max(lap_diff, s_diff) < tol)
    out = {"verdict": verdict, "tol": tol, "h": h, "seed": seed, "points": count, "chart": fd.chart,
           "max_laplacian_diff": lap_diff, "max_tension_diff": s_diff, "max_abs": max(lap_diff, s_diff),
           "oracle": fd.to_dict()}
    csv = rows_csv(("t", "x", "y", "z", "laplacian_diff", "tension_diff"), rows)
    return Outcome(0 if verdict else 1, out, csv, {"tol": tol, "h": h, "seed": seed, "points": count})


def _family_laplacian(s: Setup, t: float, point) -> np.ndarray:
    """Closed-form rough Laplacian of ``phi d/dt + V2`` for a chart family at one point."""
    cf = s.family
    f, df, d2f = s.warp.eval(t)
    ph, dph, d2ph = s.phi.eval(t)
    q = df / f
    horizontal = d2ph + 3 * q * dph - 3 * q * q * ph - 2.0 * cf.kappa * q
    lap_exprs, _ = frame_residual_exprs(cf, 0.0)
    subs = dict(zip(COORDS, map(float, point)))
    lap = np.array([float(sp.N(e.subs(subs))) for e in lap_exprs])
    a = np.array([float(sp.N(sp.sympify(e).subs(subs))) for e in cf.coeffs])
    sigma = f * d2f + 2 * df * df
    return np.r_[-horizontal, (lap - sigma * a) / f**2]


def cmd_table1(cfg: RunConfig, opts) -> Outcome:
    rows = [(signs, tag.value, name) for signs, tag, name in lie3.TABLE1_ROWS]
    out = {"verdict": True, "rows": [dict(zip(("signs", "tag", "group"), r)) for r in rows]}
    return Outcome(0, out, rows_csv(("signs", "tag", "group"), rows), {})


def _set_pointer(obj: dict, pointer: str, value):
    parts = [p.replace("~1", "/").replace("~0", "~") for p in pointer.strip("/").split("/")]
    cur = obj
    for p in parts[:-1]:
        cur = cur[int(p)] if isinstance(cur, list) else cur[p]
    last = parts[-1]
    if isinstance(cur, list):
        cur[int(last)] = value
    else:
        cur[last] = value


def cmd_sweep(cfg: RunConfig, opts) -> Outcome:
    sw = cfg.section("sweep", "sweep")
    base = {k: v for k, v in cfg.raw.items() if k != "sweep"}
    rows = []
    for value in sw["values"]:
        sub = copy.deepcopy(base)
        row = {"value": value, "exit_code": 2, "verdict": None, "max_abs": None, "error": None}
        try:
            try:
                _set_pointer(sub, sw["path"], value)
            except (KeyError, IndexError, ValueError, TypeError):
                raise SchemaError([("/sweep/path", f"{sw['path']} does not exist in the config")]) from None
            validate_config(sub)
            res = COMMAND_FUNCS[sw["command"]](RunConfig(sub), opts)
            row.update(exit_code=res.code, verdict=res.result.get("verdict"), max_abs=res.result.get("max_abs"))
        except (WarpHarmError, ValueError, ArithmeticError) as exc:
            row["error"] = f"{type(exc).__name__}: {exc}"
        rows.append(row)
    out = {"verdict": True, "path": sw["path"], "command": sw["command"], "rows": rows}
    csv = rows_csv(("value", "exit_code", "verdict", "max_abs", "error"),
                   [(r["value"], r["exit_code"], r["verdict"], r["max_abs"], r["error"] or "") for r in rows])
    return Outcome(0, out, csv, {"tol": opts.tol})


COMMAND_FUNCS = {
    "classify": cmd_classify,
    "solve": cmd_solve,
    "check": cmd_check,
    "map-check": cmd_map_check,
    "oracle": cmd_oracle,
    "table1": cmd_table1,
    "sweep": cmd_sweep,
}


# ------------------------------------------------------------------ main --


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="warpharm", description=__doc__)
    ap.add_argument("--config", help="JSON run configuration")
    ap.add_argument("--command", required=True, choices=COMMANDS)
    ap.add_argument("--tol", type=float, help="override the verdict tolerance")
    ap.add_argument("--out", help="write the report here instead of stdout")
    ap.add_argument("--h", type=float, help="finite-difference step for the oracle command")
    return ap


def run(command: str, cfg: RunConfig, opts) -> tuple[int, str, dict]:
    """Execute one command; returns (exit code, rendered report, envelope)."""
    res = COMMAND_FUNCS[command](cfg, opts)
    env = envelope(command, cfg.raw, res.tolerances, res.result)
    fmt = cfg.raw.get("output", {}).get("format", "csv" if command == "table1" else "json")
    text = res.csv if fmt == "csv" else canonical_json(env)
    return res.code, text, env


def _write(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _error(exc: Exception) -> int:
    body = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, SchemaError):
        body["violations"] = [{"path": p, "message": m} for p, m in exc.errors]
    sys.stderr.write(canonical_json(body))
    return 2


def main(argv=None) -> int:
    opts = build_parser().parse_args(argv)
    try:
        if opts.config is None:
            if opts.command != "table1":
                raise SchemaError([("/", f"--config is required for {opts.command!r}")])
            cfg = RunConfig({})
        else:
            with open(opts.config, encoding="utf-8") as fh:
                cfg = parse_config(fh.read())
        code, text, env = run(opts.command, cfg, opts)
        path = opts.out or cfg.raw.get("output", {}).get("path")
        _write(path, text)
        if path is not None and cfg.raw.get("output", {}).get("format") == "csv":
            # CSV has no room for metadata; the envelope goes next to it
            _write(path + ".meta.json", canonical_json({k: v for k, v in env.items() if k != "result"}))
        return code
    except (WarpHarmError, ValueError, ArithmeticError, OSError) as exc:
        return _error(exc)


if __name__ == "__main__":
    sys.exit(main())
