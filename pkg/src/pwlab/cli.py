"""Scenario runner: ``python -m pwlab <subcommand> [options]``.

Subcommands ``limit``, ``classify``, ``conjugate``, ``verify``,
``rosen2brinkmann`` and ``flowprofile`` read one scenario (a built-in name
or a TOML file), run the pipeline and write CSV/JSON files into the output
directory.  Exit codes: 0 success, 2 configuration error, 3 numerical
failure.  Output is deterministic for a given configuration.

Config file (TOML), every table optional::

    scenario = "sphere-2"                # built-in; or give [metric]
    [metric]
    components = [["1", "0"], ["0", "sin(th)^2"]]
    names = ["th", "ph"]
    base_point = [1.0, 0.0]
    [geodesic]
    x0 = [1.0, 0.0]
    v0 = [0.0, 1.0]
    span = [0.0, 10.0]
    t0 = 0.0
    unit_speed = true
    [tolerances]
    integration = 1e-10
    classify = 1e-7
    [classify]
    target = "auto"                      # auto | metric | limit
    [conjugate]
    interval = [0.0, 7.85]
    [verify]
    item = "ii"
    count = 16
    seed = 0
    [rosen]
    components = [["cos(t)^2"]]
    span = [0.0, 1.2]
    t0 = 0.0
    [flow]
    field = ["x1/sqrt(x1^2+x2^2+x3^2)", "..."]
    [output]
    dir = "out"
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .deviation import conjugate_points, focusing_check, limit_conjugate_points, morse_bound
from .errors import ConfigError, PwlabError
from .evidence import ITEMS, verify_item
from .geometry import MetricSpec
from .limit import assemble_plane_wave, flow_profile, rosen_to_brinkmann, wave_profile
from .ppwave import brinkmann_parts, classify
from .scenarios import Scenario, scenario, unit_speed
from .transport import geodesic_with_frame

__all__ = ["main", "load_config", "build_scenario"]

SUBCOMMANDS = ("limit", "classify", "conjugate", "verify", "rosen2brinkmann", "flowprofile")


def _clean(obj):
    """Make ``obj`` JSON-safe: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    return obj


def _write_json(path: Path, obj):
    path.write_text(json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n")


def load_config(path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from exc


def _vector(value, what):
    try:
        return np.array([float(c) for c in value])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{what} must be a list of numbers") from exc


def _pair(value, what):
    v = _vector(value, what)
    if len(v) != 2:
        raise ConfigError(f"{what} must have two entries")
    return float(v[0]), float(v[1])


def parse_span(text: str):
    try:
        a, b = text.split(":")
        return float(a), float(b)
    except ValueError as exc:
        raise ConfigError(f"--span expects A:B, got {text!r}") from exc


def build_scenario(cfg: dict, name: str | None = None) -> Scenario:
    """Scenario from a built-in name and/or ``[metric]``/``[geodesic]`` tables."""
    name = name or cfg.get("scenario")
    if name is not None:
        sc = scenario(str(name))
    elif "metric" in cfg:
        mt = cfg["metric"]
        if "components" not in mt:
            raise ConfigError("[metric] needs components")
        m = MetricSpec(mt["components"], names=mt.get("names"), base_point=mt.get("base_point"),
                       name=mt.get("name", "custom"))
        n = m.n
        sc = Scenario(m.name, m, np.asarray(m.base_point, float),
                      np.eye(n)[0], (0.0, 1.0))
    else:
        sc = None
    geo = cfg.get("geodesic", {})
    if sc is None:
        if geo or "rosen" not in cfg:
            raise ConfigError("no scenario: give a built-in name or a [metric] table")
        return None
    if "x0" in geo:
        sc.x0 = _vector(geo["x0"], "geodesic.x0")
    if "v0" in geo:
        sc.v0 = _vector(geo["v0"], "geodesic.v0")
    if "span" in geo:
        sc.span = _pair(geo["span"], "geodesic.span")
    if "t0" in geo:
        sc.t0 = float(geo["t0"])
    if len(sc.x0) != sc.metric.n or len(sc.v0) != sc.metric.n:
        raise ConfigError(f"x0 and v0 need {sc.metric.n} components")
    if geo.get("unit_speed", False):
        sc.v0 = unit_speed(sc.metric, sc.x0, sc.v0)
    return sc


def _tol(cfg, key, default, override=None):
    if override is not None:
        return override
    return float(cfg.get("tolerances", {}).get(key, default))


def _profile(sc, cfg, args):
    span = parse_span(args.span) if args.span else sc.span
    t0 = min(max(sc.t0, span[0]), span[1])
    rec, fr = geodesic_with_frame(sc.metric, sc.x0, sc.v0, span, t0=t0,
                                  tol=_tol(cfg, "integration", 1e-10))
    return rec, fr, wave_profile(rec, fr)


def run_limit(sc, cfg, args, out: Path):
    rec, fr, p = _profile(sc, cfg, args)
    pw = assemble_plane_wave(p)
    p.to_csv(out / "profile.csv")
    p.to_json(out / "profile.json")
    _write_json(out / "limit_metric.json", {
        "scenario": sc.name,
        "coordinates": list(pw.metric.names),
        "index": pw.metric.index,
        "components": pw.metric.matrix_source(),
        "H": "sum_ij A_ij(t) x^i x^j, A_ij sampled in profile.csv",
        "eps": p.eps,
        "causal": p.causal,
        "status": p.status,
        "provenance": {"stage": "limit", "geodesic": "transport.geodesic_with_frame",
                       "profile": "limit.wave_profile", "assembly": "limit.assemble_plane_wave"},
    })
    return {"profile": str(out / "profile.csv"), "nodes": len(p.t), "status": p.status}


def run_classify(sc, cfg, args, out: Path):
    tol = _tol(cfg, "classify", 1e-7, args.tol)
    target = cfg.get("classify", {}).get("target", "auto")
    if target not in ("auto", "metric", "limit"):
        raise ConfigError("classify.target must be auto, metric or limit")
    use_metric = False
    if target in ("auto", "metric"):
        try:
            brinkmann_parts(sc.metric)
            use_metric = True
        except ConfigError:
            if target == "metric":
                raise
    if use_metric:
        span = parse_span(args.span) if args.span else sc.span
        cls = classify(sc.metric, tol=tol, t_range=span)
        stage = "ppwave.classify on the scenario metric"
    else:
        _, _, p = _profile(sc, cfg, args)
        cls = classify(assemble_plane_wave(p), tol=tol)
        stage = "ppwave.classify on the assembled limit"
    report = {"scenario": sc.name, "path": cls.path, "flags": cls.to_dict(),
              "provenance": {"stage": stage}}
    _write_json(out / "classification.json", report)
    return report


def run_conjugate(sc, cfg, args, out: Path):
    conj = cfg.get("conjugate", {})
    if args.span:
        interval = parse_span(args.span)
    elif "interval" in conj:
        interval = _pair(conj["interval"], "conjugate.interval")
    else:
        interval = sc.span
    lo, hi = min(interval[0], sc.span[0]), max(interval[1], sc.span[1])
    t0 = min(max(sc.t0, lo), hi)
    rec, fr = geodesic_with_frame(sc.metric, sc.x0, sc.v0, (lo, hi), t0=t0,
                                  tol=_tol(cfg, "integration", 1e-10))
    p = wave_profile(rec, fr)
    rep = conjugate_points(p, interval)
    lrep = limit_conjugate_points(p, interval)
    ok = morse_bound(rep, lrep)
    report = rep.to_dict()
    report.update({"scenario": sc.name, "limit_points": lrep.to_dict()["points"],
                   "limit_index": lrep.total, "morse_bound_holds": ok,
                   "provenance": {"stage": "deviation.conjugate_points",
                                  "limit": "deviation.limit_conjugate_points"}})
    _write_json(out / "conjugate.json", report)
    (out / "conjugate_scan.csv").write_text(rep.plot_csv())
    return report


def run_verify(sc, cfg, args, out: Path):
    v = cfg.get("verify", {})
    item = str(v.get("item", "i"))
    if item not in ITEMS:
        raise ConfigError(f"verify.item must be one of {', '.join(ITEMS)} or 'focusing'")
    span = parse_span(args.span) if args.span else None
    report = verify_item(sc, item, count=int(v.get("count", 16)), seed=int(v.get("seed", 0)),
                         tol=_tol(cfg, "verify", 1e-6, args.tol), span=span,
                         integration_tol=_tol(cfg, "integration", 1e-10))
    report["provenance"] = {"stage": "evidence.verify_item"}
    _write_json(out / "verify.json", report)
    return report


def run_focusing(sc, cfg, args, out: Path):
    T = float(cfg.get("verify", {}).get("horizon", 4.0))
    rec, fr = geodesic_with_frame(sc.metric, sc.x0, sc.v0, (-T, T), t0=0.0,
                                  tol=_tol(cfg, "integration", 1e-10))
    report = focusing_check(wave_profile(rec, fr), T)
    report.update({"scenario": sc.name, "item": "focusing", "horizon": T,
                   "provenance": {"stage": "deviation.focusing_check"}})
    _write_json(out / "verify.json", report)
    return report


def run_rosen(cfg, args, out: Path):
    ro = cfg.get("rosen")
    if not ro or "components" not in ro:
        raise ConfigError("rosen2brinkmann needs a [rosen] table with components")
    span = parse_span(args.span) if args.span else _pair(ro.get("span", [0.0, 1.0]), "rosen.span")
    p = rosen_to_brinkmann(ro["components"], span, t0=ro.get("t0"),
                           f0=None if "f0" not in ro else np.array(ro["f0"], float))
    p.to_csv(out / "profile.csv")
    p.to_json(out / "profile.json")
    return {"profile": str(out / "profile.csv"), "nodes": len(p.t)}


def run_flow(sc, cfg, args, out: Path):
    field = cfg.get("flow", {}).get("field") or sc.extra.get("field")
    if not field:
        raise ConfigError("flowprofile needs [flow] field or a scenario with a built-in field")
    rec, fr, _ = _profile(sc, cfg, args)
    fp = flow_profile(sc.metric, field, rec, fr)
    report = {"scenario": sc.name, "riccati_residual": fp.residual,
              "geodesic_residual": fp.geodesic_residual,
              "tangency_residual": fp.tangency_residual, "nodes": len(fp.t),
              "provenance": {"stage": "limit.flow_profile"}}
    _write_json(out / "flowprofile.json", report)
    rows = ["t,residual"] + [
        f"{t:.17g},{float(np.max(np.abs(a + d - z @ z))):.17g}"
        for t, a, d, z in zip(fp.t, fp.A, fp.dAZ, fp.AZ)]
    (out / "flowprofile.csv").write_text("\n".join(rows) + "\n")
    return report


def _parser():
    ap = argparse.ArgumentParser(prog="pwlab", description="plane wave limit scenario runner")
    ap.add_argument("command", choices=SUBCOMMANDS)
    ap.add_argument("--config", help="TOML scenario file")
    ap.add_argument("--scenario", help="built-in scenario name (overrides the config)")
    ap.add_argument("--out", help="output directory (default: [output] dir or ./out)")
    ap.add_argument("--tol", type=float, help="classification / verification tolerance")
    ap.add_argument("--span", help="parameter interval A:B")
    ap.add_argument("--item", help="verify: theorem item i..vii or 'focusing'")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else {}
        if args.item:
            cfg.setdefault("verify", {})["item"] = args.item
        out = Path(args.out or cfg.get("output", {}).get("dir", "out"))
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "rosen2brinkmann":
            result = run_rosen(cfg, args, out)
        else:
            sc = build_scenario(cfg, args.scenario)
            if sc is None:
                raise ConfigError("no scenario: give --scenario, scenario = ..., or [metric]")
            if args.command == "verify" and cfg.get("verify", {}).get("item") == "focusing":
                result = run_focusing(sc, cfg, args, out)
            else:
                run = {"limit": run_limit, "classify": run_classify, "conjugate": run_conjugate,
                       "verify": run_verify, "flowprofile": run_flow}[args.command]
                result = run(sc, cfg, args, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (PwlabError, ArithmeticError, ValueError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    print(json.dumps(_clean({"command": args.command, "out": str(out),
                             "result": _summary(result)}), sort_keys=True))
    return 0


def _summary(result):
    keep = ("pass", "status", "nodes", "total", "morse_bound_holds", "riccati_residual",
            "verdict", "path")
    return {k: v for k, v in result.items() if k in keep}


if __name__ == "__main__":
    sys.exit(main())
