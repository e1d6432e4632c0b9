"""Command-line experiment runner.

Usage::

    grunskylab <command> --config cfg.json --out results/ [--seed S] [--threads T]

Each command validates its JSON config, writes ``<command>.json`` and
``<command>.csv`` to the output directory and prints a one-screen summary.
Exit status: 0 on success, 2 for an invalid config, 3 for a numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import beltrami as bt
from .errors import GrunskyLabError
from .grunsky import grunsky_matrix, grunsky_norm
from .lspace import GrunskyPoint, segment_scan
from .metrics import (
    alpha_functional,
    grunsky_bound_check,
    green_function,
    limit_grunsky_estimate,
    outer_limit_estimate,
    reflection_coefficient,
    teich_distance,
)
from .models import (
    PolygonSpec,
    catalog,
    get_model,
    polygon_extremality_report,
    polygon_schwarzian,
    r0_root,
    radial_stretch_mu,
)
from .series import MapClass, TaylorMap
from .transforms import LOWER_HALF_PLANE_FROM_DISK, Mobius

LOGGER = logging.getLogger("grunskylab")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

_COMPLEX = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_POS_INT = {"type": "integer", "minimum": 1}
_MAP = {
    "type": "object",
    "oneOf": [
        {"required": ["catalog"]},
        {"required": ["coefficients"]},
        {"required": ["coefficient_file"]},
    ],
    "properties": {
        "catalog": {"type": "string"},
        "params": {"type": "object"},
        "coefficients": {"type": "array", "items": _COMPLEX, "minItems": 1},
        "coefficient_file": {"type": "string"},
        "kind": {"enum": ["DiskS", "ExteriorSigma"]},
    },
}
_POLYGON = {
    "type": "object",
    "required": ["alphas", "prevertices"],
    "properties": {
        "alphas": {"type": "array", "items": {"type": "number"}, "minItems": 1},
        "prevertices": {"type": "array", "items": {"type": "number"}, "minItems": 1},
        "d0": _COMPLEX,
        "d1": _COMPLEX,
    },
}
_MU = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["disk_indicator", "annulus", "radial_stretch", "saturating",
                          "annulus_rotation", "catalog", "grid_file"]},
        "k": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
        "alpha": {"type": "number", "exclusiveMinimum": 0},
        "inner": {"type": "number", "exclusiveMinimum": 0},
        "outer": {"type": "number", "exclusiveMinimum": 0},
        "name": {"type": "string"},
        "params": {"type": "object"},
        "path": {"type": "string"},
    },
}

SCHEMAS = {
    "grunsky": {"required": ["map", "N"], "properties": {"map": _MAP, "N": _POS_INT}},
    "rootnorm": {
        "required": ["map", "N", "p_max"],
        "properties": {"map": _MAP, "N": _POS_INT,
                       "p_max": {"type": "integer", "minimum": 2, "multipleOf": 2},
                       "k_reference": {"type": ["number", "null"]}},
    },
    "solve": {
        "required": ["mu"],
        "properties": {
            "mu": _MU,
            "extent": {"type": "number", "exclusiveMinimum": 0},
            "resolution": {"type": "integer", "minimum": 8, "multipleOf": 2},
            "normalization": {"enum": ["Hydrodynamic", "ZeroFixed"]},
            "coeff_radius": {"type": "number", "exclusiveMinimum": 0},
            "coeff_count": _POS_INT,
            "save_grid": {"type": "boolean"},
        },
    },
    "alpha": {
        "required": ["mu"],
        "properties": {
            "mu": _MU,
            "k": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
            "kappa": {"type": "number", "minimum": 0},
            "n_coords": _POS_INT,
            "rho_grid": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0,
                                                    "exclusiveMaximum": 1}},
            "p_grid": {"type": "array", "items": _POS_INT},
        },
    },
    "reflect": {
        "required": ["kappa_hat"],
        "properties": {"kappa_hat": {"type": "number", "minimum": 0, "exclusiveMaximum": 1}},
    },
    "polygon": {
        "oneOf": [{"required": ["polygon"]}, {"required": ["polygon_file"]}],
        "properties": {
            "polygon": _POLYGON,
            "polygon_file": {"type": "string"},
            "r_fraction": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
            "N": _POS_INT,
            "radius": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
            "sigma": {"type": "array", "items": _COMPLEX, "minItems": 4, "maxItems": 4},
            "points": {"type": "array", "items": _COMPLEX},
        },
    },
    "lscan": {
        "required": ["steps"],
        "oneOf": [{"required": ["map"]}, {"required": ["diagonal"]},
                  {"required": ["point_file"]}, {"required": ["polygon"]}],
        "properties": {
            "steps": {"type": "integer", "minimum": 2},
            "N": _POS_INT,
            "map": _MAP,
            "diagonal": {"type": "object", "required": ["t"], "properties": {"t": {"type": "number"}}},
            "point_file": {"type": "string"},
            "polygon": _POLYGON,
            "r_fraction": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        },
    },
}
for _s in SCHEMAS.values():
    _s["type"] = "object"


class ConfigError(Exception):
    pass


# -- helpers -------------------------------------------------------------------

def _complex(pair) -> complex:
    return complex(pair[0], pair[1])


def _load_map(spec: dict, N: int, base: Path):
    """Returns ``(TaylorMap, known_k)``; catalog maps get ``2N + 2`` coefficients."""
    if "catalog" in spec:
        try:
            model = get_model(spec["catalog"], **spec.get("params", {}))
        except KeyError as exc:
            raise ConfigError(str(exc)) from exc
        return model.taylor(2 * N + 2), model.known_k
    if "coefficient_file" in spec:
        data = json.loads((base / spec["coefficient_file"]).read_text())
        coeffs = data["coefficients"] if isinstance(data, dict) else data
        kind = data.get("kind", "DiskS") if isinstance(data, dict) else "DiskS"
    else:
        coeffs, kind = spec["coefficients"], spec.get("kind", "DiskS")
    vals = np.array([_complex(c) for c in coeffs])
    if kind == "DiskS":
        return TaylorMap.disk(vals, exact=True), None
    return TaylorMap.sigma(vals, exact=True), None


def _mu_callable(spec: dict):
    """Beltrami coefficient from a config entry (a vectorized callable)."""
    kind = spec["kind"]
    k = float(spec.get("k", 0.3))
    inner, outer = float(spec.get("inner", 1.0)), float(spec.get("outer", 2.0))
    if kind == "disk_indicator":
        return lambda z: k * (np.abs(z) < 1)
    if kind == "annulus":
        return lambda z: k * ((np.abs(z) > inner) & (np.abs(z) < outer))
    if kind == "radial_stretch":
        return radial_stretch_mu(float(spec.get("alpha", 0.5)), inner, outer)
    if kind == "saturating":
        # k |psi_0| / psi_0 for psi_0 proportional to z^-4
        return lambda z: np.where(np.abs(z) > 1, k * (z / np.where(z == 0, 1, np.conj(z))) ** 2, 0)
    if kind == "annulus_rotation":
        return lambda z: np.where((np.abs(z) > inner) & (np.abs(z) < outer),
                                  k * np.conj(z) / np.where(z == 0, 1, z), 0)
    if kind == "catalog":
        try:
            return get_model(spec.get("name", ""), **spec.get("params", {})).exterior_mu
        except KeyError as exc:
            raise ConfigError(str(exc)) from exc
    raise ConfigError(f"mu kind {kind!r} needs a grid")


def _polygon(cfg: dict, base: Path) -> PolygonSpec:
    try:
        if "polygon_file" in cfg:
            return PolygonSpec.from_json((base / cfg["polygon_file"]).read_text())
        return PolygonSpec.from_json(json.dumps(cfg["polygon"]))
    except (OSError, KeyError, ValueError) as exc:
        raise ConfigError(f"invalid polygon: {exc}") from exc


def _write(out: Path, name: str, payload: dict, rows: list, header: list):
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{name}.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    (out / f"{name}.csv").write_text(buf.getvalue())


# -- commands -------------------------------------------------------------------

def cmd_grunsky(cfg, args, base):
    N = cfg["N"]
    f, known_k = _load_map(cfg["map"], N, base)
    G = grunsky_matrix(f, N)
    kappa = grunsky_norm(G)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "grunsky_matrix.json").write_text(G.to_json() + "\n")
    _write(out, "grunsky", {"N": N, "kappa": kappa, "k_reference": known_k, "seed": args.seed},
           [[N, repr(kappa)]], ["N", "kappa"])
    return f"N={N} kappa={kappa:.12g}"


def cmd_rootnorm(cfg, args, base):
    N = cfg["N"]
    f, known_k = _load_map(cfg["map"], N, base)
    rep = limit_grunsky_estimate(f, cfg["p_max"], N, cfg.get("k_reference", known_k), args.threads)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    payload = json.loads(rep.to_json())
    payload["seed"] = args.seed
    (out / "rootnorm.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    (out / "rootnorm.csv").write_text(rep.to_csv())
    table = ", ".join(f"p={p}: {v:.8f}" for p, _, v in rep.rows())
    return f"{table}\nkappa_hat={rep.kappa_hat_estimate:.10g} k_reference={rep.k_reference}"


def cmd_solve(cfg, args, base):
    spec = cfg["mu"]
    if spec["kind"] == "grid_file":
        grid = bt.load_grid(base / spec["path"])
        if not isinstance(grid, bt.BeltramiGrid):
            raise ConfigError("grid file does not hold a Beltrami coefficient")
    else:
        grid = bt.BeltramiGrid.from_function(_mu_callable(spec), float(cfg.get("extent", 4.0)),
                                             int(cfg.get("resolution", 512)))
    norm = bt.Normalization(cfg.get("normalization", "Hydrodynamic"))
    w = bt.solve_beltrami(grid, norm)
    radius = float(cfg.get("coeff_radius", 0.75 * grid.extent))
    count = int(cfg.get("coeff_count", 16))
    lc = bt.conformal_coeffs(w, radius, count)
    out = Path(args.out)
    if cfg.get("save_grid", False):
        out.mkdir(parents=True, exist_ok=True)
        bt.save_grid(out / "mapped", w)
    rows = [[k, repr(lc.coef(k).real), repr(lc.coef(k).imag)] for k in range(-count, count + 1)]
    b1 = lc.coef(-1)
    payload = {"dilatation": bt.dilatation(grid), "iterations": len(w.history),
               "last_update": w.history[-1] if w.history else 0.0,
               "normalization": norm.value, "radius": radius, "residual": lc.residual,
               "b1": [b1.real, b1.imag], "seed": args.seed,
               "extent": grid.extent, "resolution": grid.resolution}
    _write(out, "solve", payload, rows, ["k", "re", "im"])
    return (f"||mu||={payload['dilatation']:.6g} iterations={payload['iterations']} "
            f"b1={b1.real:.8g}{b1.imag:+.3g}i residual={lc.residual:.2e}")


def cmd_alpha(cfg, args, base):
    mu = _mu_callable(cfg["mu"])
    n = int(cfg.get("n_coords", 32))
    res = alpha_functional(mu, n)
    k = cfg.get("k", cfg["mu"].get("k"))
    payload = {"alpha": res.value, "converged": res.converged, "mu_sup": res.bound,
               "n_coords": n, "seed": args.seed}
    if k is not None:
        payload["k"] = k
        payload["bound"] = grunsky_bound_check(float(k), min(res.value, float(k)))
        if "kappa" in cfg:
            payload["kappa"] = cfg["kappa"]
            payload["bound_holds"] = bool(cfg["kappa"] <= payload["bound"] + 1e-3)
    rows = []
    if cfg.get("rho_grid"):
        outer = outer_limit_estimate(mu, cfg["rho_grid"], cfg.get("p_grid", [1]), n, args.threads)
        payload["outer_limit"] = outer.value
        rows = [[rho, p, repr(v), repr(m)] for (rho, p, v), m in zip(outer.table, outer.running_max)]
    _write(Path(args.out), "alpha", payload, rows, ["rho", "p", "alpha", "running_max"])
    msg = f"alpha={res.value:.10g}"
    if "bound" in payload:
        msg += f" bound={payload['bound']:.10g}"
    if "outer_limit" in payload:
        msg += f" outer_limit={payload['outer_limit']:.10g}"
    return msg


def cmd_reflect(cfg, args, base):
    kh = float(cfg["kappa_hat"])
    q, Q = reflection_coefficient(kh)
    g = green_function(kh)
    d = teich_distance(kh)
    payload = {"kappa_hat": kh, "q_L": q, "Q_L": Q, "green": g if np.isfinite(g) else None,
               "teich_distance": d, "seed": args.seed}
    _write(Path(args.out), "reflect", payload, [[kh, repr(q), repr(Q), repr(g), repr(d)]],
           ["kappa_hat", "q_L", "Q_L", "green", "teich_distance"])
    return f"q_L={q:.12g} Q_L={Q:.12g} green={g:.12g}"


def _sigma(cfg) -> Mobius:
    if "sigma" not in cfg:
        return LOWER_HALF_PLANE_FROM_DISK
    return Mobius(*[_complex(c) for c in cfg["sigma"]])


def cmd_polygon(cfg, args, base):
    P = _polygon(cfg, base)
    r0 = r0_root(P)
    S = polygon_schwarzian(P)
    rows = []
    for pt in cfg.get("points", []):
        z = _complex(pt)
        v = complex(S(np.array([z]))[0])
        rows.append([repr(z.real), repr(z.imag), repr(v.real), repr(v.imag)])
    rep = polygon_extremality_report(P, float(cfg.get("r_fraction", 0.1)), int(cfg.get("N", 64)),
                                     _sigma(cfg), float(cfg.get("radius", 0.95)))
    payload = {"r0": r0, "report": rep.as_dict(), "seed": args.seed,
               "polygon": json.loads(P.to_json())}
    _write(Path(args.out), "polygon", payload, rows, ["x", "y", "S_re", "S_im"])
    return (f"r0={r0:.10g} r={rep.r:.6g} kappa={rep.kappa:.8g} "
            f"(r/2)||S||={rep.predicted:.8g} gap={rep.relative_gap:.3%}")


def _scan_point(cfg, base) -> GrunskyPoint:
    N = int(cfg.get("N", 16))
    if "diagonal" in cfg:
        return GrunskyPoint.diagonal(float(cfg["diagonal"]["t"]), N)
    if "point_file" in cfg:
        return GrunskyPoint.from_json((base / cfg["point_file"]).read_text())
    if "map" in cfg:
        f, _ = _load_map(cfg["map"], N, base)
        return GrunskyPoint.from_map(f, N)
    # Schwarz-Christoffel pipeline: coefficients of the reconstructed disk map
    from .models import disk_taylor_from_map
    from .transforms import Domain, map_from_schwarzian, schwarzian_compose

    P = _polygon(cfg, base)
    r0 = r0_root(P)
    phi = polygon_schwarzian(P, t=r0).scaled(float(cfg.get("r_fraction", 0.1)) * r0)
    w = map_from_schwarzian(schwarzian_compose(phi, LOWER_HALF_PLANE_FROM_DISK, Domain.UNIT_DISK))
    a = disk_taylor_from_map(w, 2 * N + 1)
    a[0], a[1] = 0.0, 1.0
    return GrunskyPoint.from_map(TaylorMap(MapClass.DISK_S, a), N)


def cmd_lscan(cfg, args, base):
    c = _scan_point(cfg, base)
    res = segment_scan(c, int(cfg["steps"]))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "lscan.csv").write_text(res.to_csv())
    (out / "lscan.json").write_text(json.dumps(
        {"N": res.N, "interval": res.interval, "seed": args.seed,
         "rows": [r.__dict__ for r in res.rows]}, indent=2, sort_keys=True) + "\n")
    inside = sum(r.inside for r in res.rows)
    return f"N={res.N} steps={len(res.rows)} inside={inside} interval={res.interval}"


def cmd_catalog(cfg, args, base):
    rows = []
    for m in catalog():
        rows.append([m.name, json.dumps(m.params), "" if m.known_k is None else repr(m.known_k),
                     int(m.root_invariant), m.note])
    _write(Path(args.out), "catalog", {"maps": [r[0] for r in rows], "seed": args.seed}, rows,
           ["name", "params", "known_k", "root_invariant", "note"])
    return "\n".join(f"{r[0]:22s} k={r[2] or '-':6s} {r[4]}" for r in rows)


COMMANDS = {
    "grunsky": cmd_grunsky,
    "rootnorm": cmd_rootnorm,
    "solve": cmd_solve,
    "alpha": cmd_alpha,
    "reflect": cmd_reflect,
    "polygon": cmd_polygon,
    "lscan": cmd_lscan,
    "catalog": cmd_catalog,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="grunskylab", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON experiment config", required=name != "catalog")
        p.add_argument("--out", default="results", help="output directory")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=1)
    return parser


def load_config(command: str, path) -> dict:
    if path is None:
        return {}
    try:
        cfg = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        jsonschema.validate(cfg, SCHEMAS[command])
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config {path}: {exc.message}") from exc
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.seed < 0 or args.threads < 1:
        print("error: --seed must be >= 0 and --threads >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.command, args.config)
        base = Path(args.config).parent if args.config else Path(".")
        summary = COMMANDS[args.command](cfg, args, base)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (GrunskyLabError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(f"[{args.command}] {summary}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
