"""Command-line front end.

Every subcommand resolves a nested config (command defaults, then
``--config`` JSON, then explicit flags, then ``--set key=value`` with dotted
keys and JSON values), runs, and prints a JSON report holding the config
echo, library versions, the result, the asserted checks and a separate
``metadata`` block with wall-clock data.  The exit code is 0 iff every
asserted check passed; configuration and runtime errors print an error
JSON and exit with 2.
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import platform
import sys
import time
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .field import (SampledField, gaussian_bump, indicator, knapp_plate, load_field, lp_norm, radial_chirp,
                    random_patch, save_field, weak_lp)
from .symbol import IndexPack, SymbolSpec, apply, critical_p, rhombus

__all__ = ["main", "build_parser", "resolve_config", "COMMANDS"]


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- config

_COMMON = {"grid": {"N": 256, "L": 128.0}, "pack": {"lambda": 0.25, "q": 4.5}, "seed": 0}

DEFAULTS = {
    "gen": {"options": {"kind": "indicator", "params": {}, "out": None}},
    "apply": {"options": {"f": None, "piece": "full", "check": True, "out": None}},
    "kernel-decay": {"options": {"js": [2, 3, 4, 5], "orders": [1, 2, 3], "samples": 400,
                                 "variation_max": 10.0, "slope_slack": 0.3, "csv": None}},
    "czd": {"options": {"f": None, "p": None, "multiplier": 100.0}},
    "dominate": {"options": {"f": None, "h": None, "multiplier": 100.0, "check_range": True,
                             "collection_out": None}},
    "audit": {"options": {"f": None, "h": None, "sigma_max": 4, "corpus": False, "check_range": True}},
    "norm-growth": {"options": {"p": 8 / 7, "jmin": 2, "jmax": 6, "family": "knapp", "csv": None}},
    "weighted-weak": {"options": {"weight": "power:0.5", "rho": 8.0, "f": None, "margin": 10.0}},
    "verify": {"options": {"collection": None, "eta": None}},
    "sparse-form": {"options": {"collection": None, "f": None, "h": None, "r": None, "s": None,
                                "dilation": 3.0}},
    "region": {"options": {}},
}

COMMANDS = tuple(DEFAULTS)

# flag name -> dotted config key
_FLAG_KEYS = {"N": "grid.N", "L": "grid.L", "lam": "pack.lambda", "q": "pack.q", "seed": "seed"}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _set_dotted(cfg: dict, key: str, value):
    parts = key.split(".")
    node = cfg
    for p in parts[:-1]:
        if not isinstance(node.get(p), dict):
            node[p] = {}
        node = node[p]
    node[parts[-1]] = value


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def resolve_config(command: str, config_path=None, flags: dict | None = None, sets=()) -> dict:
    cfg = _merge(_COMMON, DEFAULTS[command])
    if config_path:
        try:
            user = json.loads(Path(config_path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {config_path}: {exc}") from exc
        if not isinstance(user, dict):
            raise ConfigError("config file must hold a JSON object")
        cfg = _merge(cfg, user)
    for name, value in (flags or {}).items():
        if value is None:
            continue
        _set_dotted(cfg, _FLAG_KEYS.get(name, f"options.{name}"), value)
    for item in sets:
        key, sep, text = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        _set_dotted(cfg, key.strip(), _parse_value(text))
    _validate(cfg)
    return cfg


def _validate(cfg: dict):
    N = cfg["grid"]["N"]
    if not isinstance(N, int) or N <= 0 or N & (N - 1):
        raise ConfigError(f"grid.N must be a power of 2, got {N!r}")
    if not float(cfg["grid"]["L"]) > 0:
        raise ConfigError("grid.L must be positive")
    lam = float(_fraction(cfg["pack"]["lambda"]))
    if not 0 < lam < 0.5:
        raise ConfigError(f"lambda must lie in (0, 1/2), got {lam}")


def _fraction(v):
    if isinstance(v, str):
        return Fraction(v)
    return v


# ---------------------------------------------------------------- inputs

GENERATORS = {
    "indicator": lambda N, L, seed, P: indicator(N, L, tuple(P.get("lower", (-1.0, -1.0))), P.get("side", 2.0)),
    "gaussian": lambda N, L, seed, P: gaussian_bump(N, L, P.get("width", 1.0), tuple(P.get("center", (0.0, 0.0))),
                                                    P.get("cutoff", 4.0)),
    "knapp": lambda N, L, seed, P: knapp_plate(N, L, int(P.get("j", 2)), P.get("theta", 0.0), P.get("radius"),
                                               tuple(P.get("center", (0.0, 0.0))), P.get("long_scale")),
    "chirp": lambda N, L, seed, P: radial_chirp(N, L, P.get("R", 2.0), tuple(P.get("center", (0.0, 0.0))),
                                                P.get("frequency", 1.0)),
    "random": lambda N, L, seed, P: random_patch(N, L, P.get("half_width", 4.0), seed,
                                                 tuple(P.get("center", (0.0, 0.0))),
                                                 bool(P.get("complex_values", True))),
}


def _grid_of(cfg) -> tuple[int, float]:
    return int(cfg["grid"]["N"]), float(cfg["grid"]["L"])


def _lam(cfg) -> float:
    return float(_fraction(cfg["pack"]["lambda"]))


def load_input(spec, cfg, role: str) -> SampledField:
    """A field from a saved stem/path or ``corpus:NAME`` (generated on the config grid)."""
    if spec is None:
        raise ConfigError(f"missing input field --{role}")
    N, L = _grid_of(cfg)
    if isinstance(spec, str) and spec.startswith("corpus:"):
        from .corpus import corpus_f

        name = spec.split(":", 1)[1]
        fields = corpus_f(N, L, int(cfg["seed"]), critical_p(_lam(cfg)))
        if name not in fields:
            raise ConfigError(f"unknown corpus field {name!r}; choose from {sorted(fields)}")
        return fields[name]
    try:
        return load_field(spec)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot load field {spec!r}: {exc}") from exc


# ---------------------------------------------------------------- commands

def _check(name, ok, **detail):
    return {"name": name, "ok": bool(ok), **detail}


def cmd_gen(cfg):
    o = cfg["options"]
    N, L = _grid_of(cfg)
    kind = o["kind"]
    if kind not in GENERATORS:
        raise ConfigError(f"unknown generator {kind!r}; choose from {sorted(GENERATORS)}")
    f = GENERATORS[kind](N, L, int(cfg["seed"]), dict(o.get("params") or {}))
    files = None
    if o.get("out"):
        files = [str(p) for p in save_field(f, o["out"])]
    res = {"kind": kind, "N": N, "L": L, "l2": lp_norm(f, 2), "linf": lp_norm(f, math.inf), "files": files}
    return res, [_check("finite", np.all(np.isfinite(f.data)))]


def cmd_apply(cfg):
    o = cfg["options"]
    f = load_input(o["f"], cfg, "f")
    lam = _lam(cfg)
    spec = SymbolSpec.parse(lam, o["piece"])
    g = apply(spec, f, check=bool(o["check"]))
    files = [str(p) for p in save_field(g, o["out"])] if o.get("out") else None
    p = critical_p(lam)
    res = {"piece": str(spec), "lambda": lam, "input": {"l2": lp_norm(f, 2), "lp": lp_norm(f, p)},
           "output": {"l2": lp_norm(g, 2), "lp": lp_norm(g, p), "weak_lp": weak_lp(g, p)},
           "p": p, "files": files}
    return res, [_check("finite", np.all(np.isfinite(g.data)))]


def cmd_kernel_decay(cfg):
    from .kernel import decay_certificate, radial_kernel

    o = cfg["options"]
    lam = _lam(cfg)
    rows, checks = [], []
    profiles = {}
    for j in o["js"]:
        u = np.geomspace(2.0**j, 2.0 ** (j + 4), int(o["samples"]))
        profiles[j] = radial_kernel(SymbolSpec(lam, "annular", j), u)
    for order in o["orders"]:
        Cs = []
        for j in o["js"]:
            prof = profiles[j]
            c = decay_certificate(j, order, lam, profile=prof)
            rows.append(c.to_dict())
            Cs.append(c.C_N)
            checks.append(_check(f"slope N={order} j={j}", c.slope <= -2 * order + o["slope_slack"],
                                 slope=c.slope, bound=-2 * order + o["slope_slack"]))
        finite = all(np.isfinite(Cs))
        checks.append(_check(f"C_N finite N={order}", finite))
        spread = max(Cs) / min(Cs) if finite and min(Cs) > 0 else math.inf
        checks.append(_check(f"C_N variation N={order}", spread <= o["variation_max"], spread=spread))
    if o.get("csv"):
        path = Path(o["csv"])
        path.parent.mkdir(parents=True, exist_ok=True)
        lines = ["j,u,tau"] + [f"{j},{u!r},{t!r}" for j, prof in profiles.items()
                               for u, t in zip(prof.u.tolist(), prof.values.tolist())]
        path.write_text("\n".join(lines) + "\n")
    return {"lambda": lam, "certificates": rows, "csv": o.get("csv")}, checks


def cmd_czd(cfg):
    from .czd import cz_decompose, cz_invariants
    from .engine import root_square

    o = cfg["options"]
    f = load_input(o["f"], cfg, "f")
    p = float(o["p"]) if o.get("p") is not None else float(critical_p(_lam(cfg)))
    out = cz_decompose(f, root_square(f.N), p, float(o["multiplier"]))
    inv = cz_invariants(out, f)
    res = out.to_dict(f.h)
    res["invariants"] = inv
    checks = [_check(k, inv[k]) for k in ("good_bound", "mean_zero", "bad_lp_bound", "bad_measure",
                                           "reconstruction", "regroup", "disjoint")]
    return res, checks


def _pack(cfg, check_range=True) -> tuple[IndexPack, float]:
    lam = _lam(cfg)
    pack = IndexPack(lam)
    q = float(cfg["pack"]["q"])
    if check_range:
        q = pack.check_q(q)
    return pack, q


def cmd_dominate(cfg):
    from .dyadic import collection_to_json
    from .engine import build_sparse

    o = cfg["options"]
    pack, q = _pack(cfg, bool(o["check_range"]))
    f = load_input(o["f"], cfg, "f")
    h = load_input(o["h"], cfg, "h")
    from .dyadic import verify_sparse

    rep = build_sparse(f, h, pack, q, check_range=bool(o["check_range"]), multiplier=float(o["multiplier"]))
    ver = verify_sparse(rep.collection)
    res = rep.to_dict()
    res["verify"] = ver.to_dict()
    if o.get("collection_out"):
        path = Path(o["collection_out"])
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(collection_to_json(rep.collection, lam=pack.lam, q=q), sort_keys=True) + "\n")
        res["collection_file"] = str(path)
    checks = [_check("sparse", ver.ok), _check("eta", rep.collection.eta == Fraction(99, 100)),
              _check("ratio_finite", math.isfinite(rep.ratio), ratio=rep.ratio)]
    return res, checks


def cmd_audit(cfg):
    from .engine import audit_terms, summarize_audits

    o = cfg["options"]
    pack, q = _pack(cfg, bool(o["check_range"]))
    if o.get("corpus"):
        from .corpus import corpus

        N, L = _grid_of(cfg)
        pairs = corpus(N, L, pack.lam, int(cfg["seed"]))
        reports = {name: audit_terms(f, h, pack, q, check_range=bool(o["check_range"])) for name, f, h in pairs}
    else:
        f = load_input(o["f"], cfg, "f")
        h = load_input(o["h"], cfg, "h")
        reports = {"pair": audit_terms(f, h, pack, q, check_range=bool(o["check_range"]))}
    summary = summarize_audits(list(reports.values()), int(o["sigma_max"]))
    res = {"lambda": pack.lam, "q": q, "pairs": {k: r.to_dict() for k, r in reports.items()},
           "summary": {k: ({str(a): b for a, b in v.items()} if isinstance(v, dict) else v)
                       for k, v in summary.items()}}
    checks = [_check("triangle", all(r.triangle_ok for r in reports.values())),
              _check("signed_reconstruction", max(r.signed_error for r in reports.values()) <= 1e-9)]
    return res, checks


def cmd_norm_growth(cfg):
    from .bench import kernel_l1_growth, norm_growth

    o = cfg["options"]
    js = range(int(o["jmin"]), int(o["jmax"]) + 1)
    if o["family"] == "kernel":
        tab = kernel_l1_growth(js)
    else:
        tab = norm_growth(float(_fraction(o["p"])), js, o["family"])
    if o.get("csv"):
        path = Path(o["csv"])
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(tab.to_csv())
    res = tab.to_dict()
    res["csv"] = o.get("csv")
    return res, [_check("positive_finite", all(0 < v < math.inf for _, v in tab.rows))]


def _parse_weight(text: str) -> float:
    name, _, arg = str(text).partition(":")
    if name != "power" or not arg:
        raise ConfigError(f"weight must look like power:a, got {text!r}")
    return float(arg)


def cmd_weighted_weak(cfg):
    from .weights import power_weight, quantitative_rhs, rho_threshold, strong_quotient, weighted_weak_quotient

    o = cfg["options"]
    lam = _lam(cfg)
    N, L = _grid_of(cfg)
    a = _parse_weight(o["weight"])
    rho = float(o["rho"])
    prof = power_weight(a, N, L, rho)
    if o.get("f"):
        fields = {str(o["f"]): load_input(o["f"], cfg, "f")}
    else:
        from .corpus import corpus_f

        fields = corpus_f(N, L, int(cfg["seed"]), critical_p(lam))
    rows = {}
    for name, f in fields.items():
        rows[name] = {"weighted_weak": weighted_weak_quotient(f, lam, prof),
                      "weighted_strong": strong_quotient(f, lam, prof)}
    qmax = max(r["weighted_weak"] for r in rows.values())
    rhs = quantitative_rhs(prof, lam)
    res = {"lambda": lam, "weight": prof.to_dict(), "rho_threshold": rho_threshold(lam),
           "rho_admissible": rho > rho_threshold(lam), "fields": rows, "quotient_max": qmax,
           "rhs_c1": rhs, "margin": qmax / rhs}
    checks = [_check("finite", math.isfinite(qmax)),
              _check("chebyshev", all(r["weighted_weak"] <= r["weighted_strong"] * (1 + 1e-12) for r in rows.values())),
              _check("margin", qmax <= float(o["margin"]) * rhs, margin=qmax / rhs)]
    return res, checks


def _load_collection(cfg):
    from .dyadic import load_collection

    path = cfg["options"].get("collection")
    if not path:
        raise ConfigError("missing --collection")
    try:
        return load_collection(path)
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot load collection {path!r}: {exc}") from exc


def cmd_verify(cfg):
    from .dyadic import verify_sparse

    S = _load_collection(cfg)
    eta = cfg["options"].get("eta")
    rep = verify_sparse(S, None if eta is None else Fraction(str(eta)))
    return rep.to_dict(), [_check("sparse", rep.ok)]


def cmd_sparse_form(cfg):
    from .dyadic import sparse_form

    o = cfg["options"]
    S = _load_collection(cfg)
    f = load_input(o["f"], cfg, "f")
    h = load_input(o["h"], cfg, "h")
    if f.N != S.N:
        raise ConfigError(f"collection is on N={S.N}, fields on N={f.N}")
    pack = IndexPack(_lam(cfg))
    r = float(o["r"]) if o.get("r") is not None else pack.p
    s = float(o["s"]) if o.get("s") is not None else float(cfg["pack"]["q"])
    val = sparse_form(S, f, h, r, s, float(o["dilation"]))
    return {"r": r, "s": s, "value": val, "n_squares": len(S)}, [_check("finite", math.isfinite(val))]


def cmd_region(cfg):
    raw = cfg["pack"]["lambda"]
    lam = Fraction(raw) if isinstance(raw, str) else Fraction(raw).limit_denominator(10**12)
    reg = rhombus(lam)
    verts = [{"x": str(Fraction(x)), "y": str(Fraction(y)), "x_float": float(x), "y_float": float(y)}
             for x, y in reg.vertices]
    p = critical_p(lam)
    return {"lambda": str(lam), "p": str(p), "vertices": verts}, [_check("vertices", len(verts) == 4)]


RUNNERS = {
    "gen": cmd_gen,
    "apply": cmd_apply,
    "kernel-decay": cmd_kernel_decay,
    "czd": cmd_czd,
    "dominate": cmd_dominate,
    "audit": cmd_audit,
    "norm-growth": cmd_norm_growth,
    "weighted-weak": cmd_weighted_weak,
    "verify": cmd_verify,
    "sparse-form": cmd_sparse_form,
    "region": cmd_region,
}


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="brlab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="dotted config override, value parsed as JSON when possible")
        sp.add_argument("--out", dest="report", help="also write the JSON report here")
        sp.add_argument("--N", type=int)
        sp.add_argument("--L", type=float)
        sp.add_argument("--lambda", dest="lam", type=str)
        sp.add_argument("--q", type=float)
        sp.add_argument("--seed", type=int)
        return sp

    sp = add("gen", "generate a field")
    sp.add_argument("--kind")
    sp.add_argument("--field-out", dest="out")
    sp = add("apply", "apply a symbol piece")
    sp.add_argument("--f")
    sp.add_argument("--piece")
    sp.add_argument("--field-out", dest="out")
    sp = add("kernel-decay", "decay certificates of the annular kernels")
    sp.add_argument("--j", dest="js", type=int, nargs="+")
    sp.add_argument("--order", dest="orders", type=int, nargs="+")
    sp.add_argument("--csv")
    sp = add("czd", "Calderon-Zygmund decomposition")
    sp.add_argument("--f")
    sp.add_argument("--p", type=float)
    sp.add_argument("--multiplier", type=float)
    sp = add("dominate", "sparse domination ratio")
    sp.add_argument("--f")
    sp.add_argument("--h")
    sp.add_argument("--collection-out")
    sp = add("audit", "four-term audit")
    sp.add_argument("--f")
    sp.add_argument("--h")
    sp.add_argument("--sigma-max", type=int)
    sp.add_argument("--corpus", action="store_const", const=True)
    sp = add("norm-growth", "norm probes of T_j")
    sp.add_argument("--p", type=str)
    sp.add_argument("--jmin", type=int)
    sp.add_argument("--jmax", type=int)
    sp.add_argument("--family", choices=("knapp", "radial-chirp", "random", "kernel"))
    sp.add_argument("--csv")
    sp = add("weighted-weak", "weighted weak-type quotient")
    sp.add_argument("--weight")
    sp.add_argument("--rho", type=float)
    sp.add_argument("--f")
    sp = add("verify", "verify a sparse collection")
    sp.add_argument("--collection")
    sp.add_argument("--eta")
    sp = add("sparse-form", "evaluate a sparse form")
    sp.add_argument("--collection")
    sp.add_argument("--f")
    sp.add_argument("--h")
    sp.add_argument("--r", type=float)
    sp.add_argument("--s", type=float)
    add("region", "rhombus of sparse exponents")
    return ap


def _versions() -> dict:
    return {"brlab": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        x = float(x)
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    if isinstance(x, Fraction):
        return str(x)
    return x


def _dump(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True)


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    command = args.command
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config", "set", "report")}
    if flags.get("lam") is not None:
        flags["lam"] = _parse_value(flags["lam"]) if "/" not in flags["lam"] else flags["lam"]
    if flags.get("p") is not None and isinstance(flags["p"], str):
        flags["p"] = _parse_value(flags["p"]) if "/" not in flags["p"] else flags["p"]
    started = datetime.now(timezone.utc).isoformat()
    t0 = time.perf_counter()
    try:
        cfg = resolve_config(command, args.config, flags, args.set)
        result, checks = RUNNERS[command](cfg)
    except Exception as exc:  # every failure becomes a machine-readable error report
        err = {"command": command, "error": {"type": type(exc).__name__, "message": str(exc)},
               "versions": _versions()}
        print(_dump(err))
        return 2
    ok = all(c["ok"] for c in checks)
    report = {"command": command, "config": cfg, "versions": _versions(), "result": result,
              "checks": checks, "ok": ok,
              "metadata": {"started": started, "wall_clock_s": time.perf_counter() - t0}}
    text = _dump(report)
    if args.report:
        path = Path(args.report)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text + "\n")
    print(text)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
