"""Command-line front end.

Exit codes: 0 for a clean result, 1 for a finding (witness, empty fiber,
non-open probe, contradiction, gallery mismatch), 2 for usage or input errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time

import numpy as np

from . import gallery
from .bodies.io import BodyParseError, load
from .config import DEFAULT, ToolConfig
from .linalg import LinearMap
from .lnc import lnc_search, lnc_verdict_crosscheck, openness_probe
from .sections import METHODS, Section, probe_continuity
from .solvers.fiber import EmptyFiberError

EXIT_OK, EXIT_FINDING, EXIT_ERROR = 0, 1, 2


class UsageError(ValueError):
    pass


def fmt(x: float) -> str:
    """Fixed 17-significant-digit formatting used in CSV output."""
    return format(float(x), ".17g")


def _numbers(text: str) -> list[float]:
    text = text.strip()
    if text.startswith("["):
        return [float(v) for v in json.loads(text)]
    return [float(v) for v in text.replace(";", ",").split(",") if v.strip()]


def parse_map(spec: str, dim: int) -> LinearMap:
    """Shorthand (``proj-xy``, ``x``, ``x+y``), JSON rows, or ``;``-separated rows."""
    spec = spec.strip()
    if spec in ("proj-xy", "x", "x+y"):
        return gallery.named_map(spec, dim)
    try:
        if spec.startswith("["):
            rows = json.loads(spec)
        else:
            rows = [[float(v) for v in r.split(",")] for r in spec.split(";")]
        M = np.atleast_2d(np.asarray(rows, dtype=float))
    except (ValueError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot parse map {spec!r}") from exc
    if M.shape[1] != dim:
        raise UsageError(f"map has {M.shape[1]} columns but the body lives in R^{dim}")
    return LinearMap(M)


def parse_path(spec: str, entry=None) -> list[np.ndarray]:
    """Path specification.

    ``points:x1,y1;x2,y2;...``, ``segment:a1,..:b1,..:STEPS``,
    ``circle:CX,CY:R:PHI0:PHI1:STEPS`` (optionally followed by ``|X,Y`` for a
    final point), or ``default`` for the gallery entry's own path.
    """
    tail = None
    if "|" in spec:
        spec, tail = spec.split("|", 1)
    kind, _, rest = spec.partition(":")
    try:
        if kind == "default":
            if entry is None:
                raise UsageError("path 'default' needs --gallery")
            pts = _default_path(entry)
        elif kind == "points":
            pts = [np.array(_numbers(p)) for p in rest.split(";") if p.strip()]
        elif kind == "segment":
            a, b, steps = rest.split(":")
            a, b = np.array(_numbers(a)), np.array(_numbers(b))
            pts = [a + s * (b - a) for s in np.linspace(0.0, 1.0, int(steps))]
        elif kind == "circle":
            c, r, p0, p1, steps = rest.split(":")
            c, r = np.array(_numbers(c)), float(r)
            pts = [c + r * np.array([math.cos(p), math.sin(p)])
                   for p in np.linspace(float(p0), float(p1), int(steps))]
        else:
            raise UsageError(f"unknown path kind {kind!r}")
    except (TypeError, ValueError) as exc:
        if isinstance(exc, UsageError):
            raise
        raise UsageError(f"cannot parse path {spec!r}") from exc
    if tail is not None:
        pts.append(np.array(_numbers(tail)))
    if len(pts) < 2:
        raise UsageError("a path needs at least two points")
    return pts


def _default_path(entry):
    ident = entry.identifier
    if ident == "cone9":
        return gallery.cone_path()
    if ident == "helix10":
        return gallery.helix_path(entry.body.vertices.shape[0])
    if ident == "epigraph19":
        return gallery.epigraph_path()
    if ident == "square":
        return [np.array([s]) for s in np.linspace(0.1, 0.9, 100)]
    raise UsageError(f"gallery entry {ident!r} has no default path")


def _params(items) -> dict:
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"parameter {item!r} must look like KEY=VALUE")
        try:
            out[key] = int(value)
        except ValueError:
            try:
                out[key] = float(value)
            except ValueError:
                out[key] = value
    return out


def _resolve(args):
    """Body, gallery entry (or None) and map from the common flags."""
    if bool(args.body) == bool(args.gallery):
        raise UsageError("give exactly one of --body and --gallery")
    entry = None
    if args.gallery:
        try:
            entry = gallery.build(args.gallery, **_params(args.param))
        except gallery.UnknownEntryError as exc:
            raise UsageError(str(exc.args[0])) from exc
        body = entry.body
    else:
        body = load(args.body)
    T = None
    if getattr(args, "map", None):
        T = parse_map(args.map, body.dim)
    elif entry is not None:
        T = entry.T
    return body, entry, T


def _config(args) -> ToolConfig:
    cfg = DEFAULT
    if args.config:
        with open(args.config) as fh:
            data = json.load(fh)
        cfg = ToolConfig.from_dict(data.get("config", data))
    return cfg.override(pairs=args.pairs, scales=args.scales, seed=args.seed)


def _report(args, cfg: ToolConfig, command: str, payload: dict) -> dict:
    out = {"command": command, "config": cfg.to_dict(), "seed": cfg.seed}
    if args.gallery:
        out["gallery"] = args.gallery
    if not args.deterministic:
        out["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    out.update(payload)
    return out


def _emit(args, text: str) -> None:
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_json(args, report: dict) -> None:
    _emit(args, json.dumps(report, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"not serializable: {type(obj).__name__}")


def _need_map(T):
    if T is None:
        raise UsageError("--map is required for bodies outside the gallery")
    return T


# -- commands -------------------------------------------------------------------------


def cmd_check_lnc(args) -> int:
    body, entry, _ = _resolve(args)
    cfg = _config(args)
    res = lnc_search(body, config=cfg)
    _emit_json(args, _report(args, cfg, "check-lnc", {"result": res.to_dict()}))
    return EXIT_FINDING if res.found else EXIT_OK


def cmd_section(args) -> int:
    body, entry, T = _resolve(args)
    T = _need_map(T)
    if not args.target:
        raise UsageError("--target is required")
    y = np.array(_numbers(args.target))
    cfg = _config(args)
    try:
        val = Section(body, T, args.method).value(y)
    except EmptyFiberError as exc:
        sys.stderr.write(f"EMPTY_FIBER: {exc}\n")
        _emit_json(args, _report(args, cfg, "section", {"error": "EMPTY_FIBER", "message": str(exc)}))
        return EXIT_FINDING
    g = val.x
    payload = {
        "method": args.method,
        "target": y.tolist(),
        "value": g.tolist(),
        "residual": float(np.linalg.norm(T(g) - y)),
        "margin": float(body.violation(g)),
        "clipped": bool(val.clipped),
    }
    if val.clipped:
        sys.stderr.write("CLIPPED: the optimum touches the extent cap\n")
    _emit_json(args, _report(args, cfg, "section", payload))
    return EXIT_OK


def cmd_probe(args) -> int:
    body, entry, T = _resolve(args)
    T = _need_map(T)
    cfg = _config(args)
    path = parse_path(args.path, entry)
    try:
        pr = probe_continuity(Section(body, T, args.method), path, refine=args.refine)
    except EmptyFiberError as exc:
        sys.stderr.write(f"EMPTY_FIBER: {exc}\n")
        return EXIT_FINDING
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    m, n = len(pr.path[0]), len(pr.values[0])
    w.writerow(["index"] + [f"y{i}" for i in range(m)] + [f"x{i}" for i in range(n)] + ["jump"])
    for i, (yv, xv) in enumerate(zip(pr.path, pr.values)):
        jump = "" if i == 0 else fmt(pr.jumps[i - 1])
        w.writerow([i] + [fmt(v) for v in yv] + [fmt(v) for v in xv] + [jump])
    w.writerow(["max_jump", fmt(pr.max_jump)])
    w.writerow(["argmax", pr.argmax])
    w.writerow(["config", json.dumps(_report(args, cfg, "probe", {"method": args.method}), sort_keys=True)])
    _emit(args, buf.getvalue())
    return EXIT_OK


def cmd_openness(args) -> int:
    body, entry, T = _resolve(args)
    T = _need_map(T)
    if not args.point:
        raise UsageError("--point is required")
    cfg = _config(args)
    rep = openness_probe(body, T, _numbers(args.point), args.radius, targets=args.targets, seed=cfg.seed,
                         config=cfg)
    _emit_json(args, _report(args, cfg, "openness", {"result": rep.to_dict()}))
    return EXIT_FINDING if rep.verdict == "NOT_OPEN_AT" else EXIT_OK


def cmd_crosscheck(args) -> int:
    body, entry, T = _resolve(args)
    T = _need_map(T)
    cfg = _config(args)
    rep = lnc_verdict_crosscheck(body, T, config=cfg)
    _emit_json(args, _report(args, cfg, "crosscheck", {"result": rep.to_dict()}))
    return EXIT_OK if rep.consistent else EXIT_FINDING


def cmd_gallery_list(args) -> int:
    lines = []
    for ident in gallery.identifiers():
        e = gallery.build(ident)
        lines.append(f"{ident}\t{e.verdict.value}\t{e.reference}\n")
    _emit(args, "".join(lines))
    return EXIT_OK


def cmd_gallery_run(args) -> int:
    try:
        entry = gallery.build(args.identifier, **_params(args.param))
    except gallery.UnknownEntryError as exc:
        raise UsageError(str(exc.args[0])) from exc
    cfg = _config(args)
    payload = {"identifier": entry.identifier, "expected": entry.verdict.value}
    if entry.verdict is gallery.Verdict.LIMIT_FAMILY or not entry.body.is_bounded:
        payload["search"] = "skipped"
        ok = True
    else:
        res = lnc_search(entry.body, config=cfg)
        payload["search"] = res.to_dict()
        ok = res.found == (entry.verdict is gallery.Verdict.NOT_LNC_WITNESS)
    try:
        tpl = gallery.expected_witness(entry.identifier)
        problems = tpl.check(entry.body)
        payload["template"] = {"witness": tpl.to_dict(), "problems": problems}
        ok = ok and not problems
    except ValueError:
        pass
    payload["matches_expected"] = ok
    args.gallery = entry.identifier
    _emit_json(args, _report(args, cfg, "gallery-run", payload))
    return EXIT_OK if ok else EXIT_FINDING


# -- parser -----------------------------------------------------------------------------


def _common(p, body=True):
    if body:
        src = p.add_argument_group("body")
        src.add_argument("--body", help="body JSON file")
        src.add_argument("--gallery", help="gallery identifier")
    p.add_argument("--param", action="append", help="gallery parameter KEY=VALUE (repeatable)")
    p.add_argument("--seed", type=int)
    p.add_argument("--pairs", type=int)
    p.add_argument("--scales", type=int)
    p.add_argument("--config", help="JSON file with a ToolConfig or a report embedding one")
    p.add_argument("--deterministic", action="store_true", help="omit the timestamp")
    p.add_argument("--out", help="write output to this file")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lnckit", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check-lnc", help="search for a non-LNC witness")
    _common(p)
    p.set_defaults(func=cmd_check_lnc)

    p = sub.add_parser("section", help="evaluate a section at a target")
    _common(p)
    p.add_argument("--map")
    p.add_argument("--target")
    p.add_argument("--method", choices=METHODS, default="min-norm")
    p.set_defaults(func=cmd_section)

    p = sub.add_parser("probe", help="continuity probe along a path (CSV)")
    _common(p)
    p.add_argument("--map")
    p.add_argument("--method", choices=METHODS, default="min-norm")
    p.add_argument("--path", required=True)
    p.add_argument("--refine", type=int, default=0)
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("openness", help="probe openness of the restricted map at a point")
    _common(p)
    p.add_argument("--map")
    p.add_argument("--point")
    p.add_argument("--radius", type=float, default=0.1)
    p.add_argument("--targets", type=int, default=24)
    p.set_defaults(func=cmd_openness)

    p = sub.add_parser("crosscheck", help="LNC search, openness probes and image search")
    _common(p)
    p.add_argument("--map")
    p.set_defaults(func=cmd_crosscheck)

    g = sub.add_parser("gallery", help="gallery entries")
    gsub = g.add_subparsers(dest="gallery_command", required=True)
    p = gsub.add_parser("list")
    p.add_argument("--out")
    p.set_defaults(func=cmd_gallery_list)
    p = gsub.add_parser("run")
    p.add_argument("identifier")
    _common(p, body=False)
    p.set_defaults(func=cmd_gallery_run, gallery=None)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (UsageError, BodyParseError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_ERROR
    except ValueError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
