"""Batch command-line front end.

Commands parse parameters, run the library pipelines, and write CSV/JSON
artifacts plus a manifest echoing the fully resolved configuration.
Outputs are deterministic: fixed float formatting, fixed orderings, no
timestamps.  Exit codes: 0 success, 2 validation error, 3 numerical
failure; errors are also emitted as JSON on standard error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from . import approx, converge, geometry, renorm
from .errors import AgresError, NumericalError, ValidationError
from .exact import as_fraction, point_decimal_str, point_exact_str

COMMANDS = ("solve", "boundary", "graph", "resistance", "resolvent", "relations",
            "estimates", "converge", "hausdorff")


@dataclass
class RunConfig:
    """Resolved configuration of one invocation; echoed into the manifest."""
    command: str
    lam: Optional[str] = None
    lam2: Optional[str] = None
    target: Optional[str] = None
    s: Optional[float] = None
    level: int = 3
    depth: int = 8
    n_range: Optional[str] = None
    alpha: Optional[float] = None
    pairs: Optional[str] = None
    measure: str = "hausdorff"
    eigen_tol: float = 1e-12
    bisect_tol: float = 1e-10
    max_iters: int = 10_000
    relation_depth: int = 1
    guard: int = 12
    mode: str = "fast"
    grid: bool = False
    out: str = "."
    threads: int = 1

    def manifest(self) -> dict:
        return {k: getattr(self, k) for k in sorted(self.__dataclass_fields__)}


def _parse_pairs(text: str) -> list:
    """Pairs like '(4,1):(4,2);(,1):(,2)'; empty word means a bare corner."""
    pairs = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        halves = chunk.split(":")
        if len(halves) != 2:
            raise ValidationError(f"pair {chunk!r} must be '(w,i):(w,i)'")
        addrs = []
        for half in halves:
            half = half.strip()
            if not (half.startswith("(") and half.endswith(")")):
                raise ValidationError(f"address {half!r} must be parenthesized")
            body = half[1:-1]
            word_s, _, corner_s = body.rpartition(",")
            word_s = word_s.strip().strip("-")
            try:
                word = tuple(int(ch) for ch in word_s if not ch.isspace())
                corner = int(corner_s)
            except ValueError as exc:
                raise ValidationError(f"bad address {half!r}") from exc
            addrs.append((word, corner))
        pairs.append((addrs[0], addrs[1]))
    if not pairs:
        raise ValidationError("no pairs given")
    return pairs


def _parse_range(text: str) -> list[int]:
    text = text.strip()
    if ".." in text:
        a, b = text.split("..", 1)
        return list(range(int(a), int(b) + 1))
    return [int(x) for x in text.replace(",", " ").split()]


def validate(cfg: RunConfig) -> list[str]:
    """Total validation pass; returns human-readable violations."""
    v: list[str] = []
    if cfg.command not in COMMANDS:
        v.append(f"command: unknown command {cfg.command!r}")
        return v

    def check_lambda(text, name="lambda"):
        if text is None:
            v.append(f"{name}: required for {cfg.command}")
            return None
        try:
            lam = as_fraction(text, name)
        except AgresError as exc:
            v.append(f"{name}: {exc}")
            return None
        if not (0 < lam < Fraction(1, 2)):
            v.append(f"{name}: must lie in (0, 1/2), got {lam}")
            return None
        return lam

    needs_lambda = cfg.command in ("solve", "boundary", "graph", "resistance",
                                   "resolvent", "relations", "estimates", "hausdorff")
    lam = check_lambda(cfg.lam) if needs_lambda else None
    if cfg.command == "hausdorff":
        check_lambda(cfg.lam2, "lambda2")
    if cfg.command == "converge":
        if cfg.target is None:
            v.append("target: required for converge")
        else:
            try:
                tgt = converge.Target.parse(cfg.target)
                if not tgt.in_open_interval():
                    v.append("target: must lie in (0, 1/2)")
            except AgresError as exc:
                v.append(f"target: {exc}")
        if cfg.n_range is None:
            v.append("n: schedule range required")
        else:
            try:
                if not _parse_range(cfg.n_range):
                    v.append("n: schedule range is empty")
            except ValueError:
                v.append(f"n: malformed range {cfg.n_range!r}")
        if cfg.pairs:
            try:
                _parse_pairs(cfg.pairs)
            except ValidationError as exc:
                v.append(f"pairs: {exc}")
    if cfg.command in ("solve", "resistance", "resolvent", "estimates", "converge"):
        if cfg.s is None:
            v.append("s: required")
        elif not (0.0 < cfg.s < 1.0):
            v.append("s must lie in (0,1); irregular cases s >= 1 are out of scope")
    if cfg.command == "resistance" and not cfg.pairs:
        v.append("pairs: required for resistance")
    if cfg.command == "resistance" and cfg.pairs:
        try:
            _parse_pairs(cfg.pairs)
        except ValidationError as exc:
            v.append(f"pairs: {exc}")
    if cfg.command == "relations" and lam is not None:
        try:
            orbit = geometry.doubling_orbit(2 * lam)
            size = 3 + 3 * len(orbit)
            if size > cfg.guard:
                v.append(f"lambda: boundary set has {size} points, guard is {cfg.guard}")
        except AgresError as exc:
            v.append(f"lambda: {exc}")
    if cfg.level < 0:
        v.append("level: must be nonnegative")
    if cfg.depth < 0 or cfg.depth > geometry.GRAPH_LEVEL_CAP:
        v.append(f"depth: must lie in 0..{geometry.GRAPH_LEVEL_CAP}")
    if cfg.alpha is not None and cfg.alpha <= 0:
        v.append("alpha: must be positive")
    if cfg.measure not in ("hausdorff", "uniform"):
        v.append(f"measure: must be hausdorff or uniform, got {cfg.measure!r}")
    if cfg.threads < 1:
        v.append("threads: must be >= 1")
    return v


def _write(outdir: Path, name: str, text: str) -> None:
    (outdir / name).write_text(text)


def _write_json(outdir: Path, name: str, obj) -> None:
    _write(outdir, name, json.dumps(obj, indent=1, sort_keys=True) + "\n")


def _points_json(points, labels=None) -> list:
    rows = []
    for i, p in enumerate(points):
        dx, dy = point_decimal_str(p)
        ex, ey = point_exact_str(p)
        row = {"id": i, "x": dx, "y": dy, "x_exact": ex, "y_exact": ey}
        if labels is not None:
            lab = labels[i]
            row["label"] = ({"kind": "corner", "corner": lab.corner}
                            if lab.kind == "corner"
                            else {"kind": "edge", "edge": geometry.EDGE_NAMES[lab.edge],
                                  "t": f"{lab.t.numerator}/{lab.t.denominator}"})
        rows.append(row)
    return rows


def _cmd_solve(cfg: RunConfig, outdir: Path) -> None:
    ifs = geometry.make_ifs(cfg.lam)
    sol = renorm.solve_r(ifs, cfg.s, eigen_tol=cfg.eigen_tol,
                         bisect_tol=cfg.bisect_tol, max_iters=cfg.max_iters)
    _write_json(outdir, "solution.json", sol.to_json_obj())


def _cmd_boundary(cfg: RunConfig, outdir: Path) -> None:
    ifs = geometry.make_ifs(cfg.lam)
    bset = geometry.boundary_set(ifs, cfg.mode,
                                 depth=cfg.depth if cfg.mode == "oracle" else None)
    obj = {"lambda": cfg.lam, "size": bset.size,
           "parameters": [f"{t.numerator}/{t.denominator}" for t in bset.parameter_set()],
           "points": _points_json(bset.points, bset.labels)}
    _write_json(outdir, "boundary.json", obj)


def _cmd_graph(cfg: RunConfig, outdir: Path) -> None:
    ifs = geometry.make_ifs(cfg.lam)
    g = geometry.approximation_graph(ifs, cfg.level)
    _write(outdir, "edges.csv", g.edge_list_csv())
    _write(outdir, "vertices.csv", g.vertex_csv())


def _cmd_resistance(cfg: RunConfig, outdir: Path) -> None:
    ifs = geometry.make_ifs(cfg.lam)
    sol = renorm.solve_r(ifs, cfg.s, eigen_tol=cfg.eigen_tol, bisect_tol=cfg.bisect_tol)
    pairs = _parse_pairs(cfg.pairs)
    rows = approx.resistance_metric(ifs, sol, cfg.level, pairs)
    lf = approx.level_form(ifs, sol, cfg.level)
    lines = ["word_1,corner_1,word_2,corner_2,x1,y1,x2,y2,"
             "x1_exact,y1_exact,x2_exact,y2_exact,resistance"]
    for ((a1, a2), val) in rows:
        p1 = lf.points[lf.vid_of_address(a1[0], a1[1])]
        p2 = lf.points[lf.vid_of_address(a2[0], a2[1])]
        w1 = "".join(map(str, a1[0]))
        w2 = "".join(map(str, a2[0]))
        d1 = point_decimal_str(p1)
        d2 = point_decimal_str(p2)
        e1 = point_exact_str(p1)
        e2 = point_exact_str(p2)
        lines.append(f"{w1},{a1[1]},{w2},{a2[1]},{d1[0]},{d1[1]},{d2[0]},{d2[1]},"
                     f'"{e1[0]}","{e1[1]}","{e2[0]}","{e2[1]}",{val:.17g}')
    _write(outdir, "resistance.csv", "\n".join(lines) + "\n")


def _cmd_resolvent(cfg: RunConfig, outdir: Path) -> None:
    ifs = geometry.make_ifs(cfg.lam)
    sol = renorm.solve_r(ifs, cfg.s, eigen_tol=cfg.eigen_tol, bisect_tol=cfg.bisect_tol)
    alpha = cfg.alpha if cfg.alpha is not None else 1.0
    mspec = approx.measure_weights(ifs, cfg.measure)
    kernel, lf, _ = approx.resolvent_kernel(ifs, sol, cfg.level, alpha, mspec)
    lines = ["x_id,y_id,x,y,x_exact,y_exact,u"]
    for i in range(lf.form.n):
        dx, dy = point_decimal_str(lf.points[i])
        ex, ey = point_exact_str(lf.points[i])
        for j in range(lf.form.n):
            lines.append(f'{i},{j},{dx},{dy},"{ex}","{ey}",{kernel.matrix[i, j]:.17g}')
    _write(outdir, "resolvent.csv", "\n".join(lines) + "\n")
    _write_json(outdir, "resolvent.json", {
        "lambda": cfg.lam, "s": cfg.s, "alpha": alpha, "level": cfg.level,
        "measure": mspec.to_json_obj(),
        "row_mass_error": kernel.row_mass_error(),
        "symmetry_error": kernel.symmetry_error(),
    })


def _cmd_relations(cfg: RunConfig, outdir: Path) -> None:
    ifs = geometry.make_ifs(cfg.lam)
    rels = renorm.enumerate_preserved_relations(ifs, k=cfg.relation_depth, guard=cfg.guard)
    bset = geometry.boundary_set(ifs)
    obj = {
        "lambda": cfg.lam,
        "boundary_size": bset.size,
        "count": len(rels),
        "all_trivial": all(r.is_trivial for r in rels),
        "relations": [
            {"blocks": [list(b) for b in r.blocks],
             "full": r.is_full, "empty": r.is_empty}
            for r in rels
        ],
    }
    _write_json(outdir, "relations.json", obj)


def _cmd_estimates(cfg: RunConfig, outdir: Path) -> None:
    ifs = geometry.make_ifs(cfg.lam)
    sol = renorm.solve_r(ifs, cfg.s, eigen_tol=cfg.eigen_tol, bisect_tol=cfg.bisect_tol)
    bottom = []
    for m in (4, 5, 6):
        value, bound, ok = approx.boundary_resistance_check(ifs, sol, m)
        bottom.append({"level": m, "value": value, "bound": bound, "pass": ok})
    tfit, theta, env = approx.scaling_exponent(ifs, sol, range(4, 10))
    genv = approx.envelope_check(ifs, sol, m=4)
    obj = {
        "lambda": cfg.lam, "s": cfg.s, "r": sol.r, "theta": theta,
        "bottom_edge_resistance": bottom,
        "exponent_fit": {"theta_fit": tfit, "theta": theta,
                         "c1": env.c1, "c2": env.c2, "spread": env.spread},
        "global_envelope": {"eta_star": genv.eta_star, "eta_sub": genv.eta_sub,
                            "c1": genv.c1, "c2": genv.c2},
    }
    if cfg.grid:
        rows = []
        worst = 0.0
        for den in (8, 16, 32):
            for num in range(1, den):
                lam = Fraction(num, den)
                if not (Fraction(1, 8) <= lam <= Fraction(3, 8)) or lam.denominator != den:
                    continue
                for s in (0.2, 0.5, 0.8, 0.95):
                    rsol = renorm.solve_r(geometry.make_ifs(lam), s,
                                          eigen_tol=cfg.eigen_tol, bisect_tol=cfg.bisect_tol)
                    rows.append({"lambda": f"{lam.numerator}/{lam.denominator}",
                                 "s": s, "r": rsol.r})
                    worst = max(worst, rsol.r)
        obj["uniform_bound_scan"] = {"max_r": worst, "rows": rows}
    _write_json(outdir, "estimates.json", obj)


def _cmd_converge(cfg: RunConfig, outdir: Path) -> None:
    pairs = _parse_pairs(cfg.pairs) if cfg.pairs else [(((), 1), ((), 2))]
    ns = _parse_range(cfg.n_range)
    rep = converge.convergence_report(cfg.target, cfg.s, ns, pairs,
                                      alpha=cfg.alpha, m=cfg.level,
                                      measure_scheme=cfg.measure,
                                      eigen_tol=cfg.eigen_tol,
                                      bisect_tol=cfg.bisect_tol,
                                      threads=cfg.threads)
    _write(outdir, "report.csv", rep.to_csv())
    _write_json(outdir, "report.json", rep.to_json_obj())


def _cmd_hausdorff(cfg: RunConfig, outdir: Path) -> None:
    est, bound, ok = converge.hausdorff_check(cfg.lam, cfg.lam2, cfg.depth)
    _write_json(outdir, "hausdorff.json", {
        "lambda1": cfg.lam, "lambda2": cfg.lam2, "depth": cfg.depth,
        "estimate": est, "bound": bound,
        "slack": 2.0 * 2.0 ** -cfg.depth, "pass": ok,
    })


_DISPATCH = {
    "solve": _cmd_solve,
    "boundary": _cmd_boundary,
    "graph": _cmd_graph,
    "resistance": _cmd_resistance,
    "resolvent": _cmd_resolvent,
    "relations": _cmd_relations,
    "estimates": _cmd_estimates,
    "converge": _cmd_converge,
    "hausdorff": _cmd_hausdorff,
}


_CONFIG_ALIASES = {"lambda": "lam", "lambda2": "lam2", "n": "n_range"}


def _read_config_file(path: str) -> dict:
    """Flat key = value lines mirroring the flags; '#' starts a comment."""
    out = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"config line {raw!r} is not 'key = value'")
        key, val = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        out[_CONFIG_ALIASES.get(key, key)] = val
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="agres",
        description="Self-similar resistance forms on gaskets with an added rotated triangle")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--lambda", dest="lam", help="rational 'p/q' in (0,1/2)")
        p.add_argument("--lambda2", dest="lam2", help="second rational (hausdorff)")
        p.add_argument("--target", help="'p/q', decimal, or '1/sqrtN'")
        p.add_argument("--s", type=float, help="added-cell weight in (0,1)")
        p.add_argument("--level", type=int, default=3)
        p.add_argument("--depth", type=int, default=8)
        p.add_argument("--n", dest="n_range", help="schedule range 'a..b'")
        p.add_argument("--alpha", type=float)
        p.add_argument("--pairs", help="'(w,i):(w,i);...' addressed vertex pairs")
        p.add_argument("--measure", choices=("hausdorff", "uniform"), default="hausdorff")
        p.add_argument("--eigen-tol", dest="eigen_tol", type=float, default=1e-12)
        p.add_argument("--bisect-tol", dest="bisect_tol", type=float, default=1e-10)
        p.add_argument("--max-iters", dest="max_iters", type=int, default=10_000)
        p.add_argument("--relation-depth", dest="relation_depth", type=int, default=1)
        p.add_argument("--guard", type=int, default=12)
        p.add_argument("--mode", choices=("fast", "oracle"), default="fast")
        p.add_argument("--grid", action="store_true",
                       help="estimates: add the uniform-bound parameter scan")
        p.add_argument("--out", default=".")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--config", help="flat key = value file; flags override")
    return parser


def _error_json(exc: Exception) -> str:
    return json.dumps({"error": {"type": type(exc).__name__, "message": str(exc)}},
                      sort_keys=True)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    values = vars(ns).copy()
    config_path = values.pop("config", None)
    if config_path:
        try:
            file_vals = _read_config_file(config_path)
        except (OSError, ValidationError) as exc:
            print(_error_json(exc), file=sys.stderr)
            return 2
        defaults = RunConfig(command=values["command"])
        for key, val in file_vals.items():
            if key not in values or values[key] is None or \
                    values[key] == getattr(defaults, key, None):
                values[key] = val
    # normalize typed fields that may arrive as strings from the config file
    cfg = RunConfig(command=values["command"])
    for key, val in values.items():
        if not hasattr(cfg, key):
            continue
        cur = getattr(cfg, key)
        if val is None:
            continue
        if isinstance(cur, bool):
            val = val if isinstance(val, bool) else str(val).lower() in ("1", "true", "yes")
        elif isinstance(cur, int) and not isinstance(val, bool):
            val = int(val)
        elif isinstance(cur, float):
            val = float(val)
        setattr(cfg, key, val)

    violations = validate(cfg)
    if violations:
        exc = ValidationError("; ".join(violations))
        print(_error_json(exc), file=sys.stderr)
        return 2
    outdir = Path(cfg.out)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
        _write_json(outdir, "manifest.json", {"tool": "agres", "config": cfg.manifest()})
        _DISPATCH[cfg.command](cfg, outdir)
    except ValidationError as exc:
        print(_error_json(exc), file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(_error_json(exc), file=sys.stderr)
        return 3
    except AgresError as exc:
        print(_error_json(exc), file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
