"""Command-line front end.

Usage:
    hermite-lp [options] SUBCOMMAND [key=value ...]

Subcommands: eval, regions, extremal, sweep, weights, propagator, report.
Parameters are flat key=value pairs; ``--config FILE`` supplies defaults in
the same form (one per line, '#' comments), overridden by the command line.
Every run writes CSV data plus ``manifest.json`` (sorted keys) into the
output directory; the wall time goes to ``timing.json`` so that manifests
of identical runs are byte-identical.

Exit status: 0 success, 1 usage error, 2 failed check.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import platform
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

OUTPUT_ENV = "HERMITE_LP_OUTPUT_DIR"
DEFAULT_OUTPUT = "hermite_lp_out"
SUBCOMMANDS = ("eval", "regions", "extremal", "sweep", "weights", "propagator", "report")


class UsageError(Exception):
    pass


class CheckFailed(Exception):
    pass


# ---------------------------------------------------------------------------
# parameter parsing
# ---------------------------------------------------------------------------

def _float(s: str) -> float:
    t = s.strip().lower()
    if t in ("inf", "infinity", "+inf"):
        return math.inf
    return float(t)


def _floats(s: str) -> list[float]:
    return [_float(v) for v in s.split(",") if v.strip()]


def _int(s: str) -> int:
    return int(s)


def _bool(s: str) -> bool:
    t = s.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _degrees(s: str) -> list[int]:
    """'64..16384' (doubling), '64..16384:8' (8 geometric points) or '64,128,...'."""
    s = s.strip()
    if ".." in s:
        lo_s, rest = s.split("..", 1)
        hi_s, _, count_s = rest.partition(":")
        lo, hi = int(lo_s), int(hi_s)
        if lo < 0 or hi < lo:
            raise ValueError(f"bad degree range {s!r}")
        if count_s:
            from .bounds import geometric_degrees
            return geometric_degrees(max(lo, 1), hi, int(count_s))
        out, k = [], max(lo, 1)
        while k <= hi:
            out.append(k)
            k *= 2
        return out
    return [int(v) for v in s.split(",") if v.strip()]


def _choice(*options):
    def parse(s: str) -> str:
        if s not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return s
    return parse


# key -> (parser, default as text, help)
SCHEMAS: dict[str, dict[str, tuple]] = {
    "eval": {
        "k": (_int, "10", "degree"),
        "x": (_floats, "0.0", "comma separated points"),
        "deriv": (_bool, "false", "also evaluate the derivative"),
    },
    "regions": {
        "lambda": (_float, "", "lam; lam^2 must equal n + 2N for an integer N"),
        "n": (_int, "", "dimension (default: smallest matching lambda, or 1)"),
        "N": (_int, "", "degree (alternative to lambda)"),
        "x": (_floats, "", "radii whose region labels are listed"),
    },
    "extremal": {
        "construction": (_choice("tube_d0", "point_d0", "point_dj", "tube_dj"), "point_d0", "construction"),
        "N": (_int, "256", "total degree"),
        "n": (_int, "2", "dimension"),
        "j": (_int, "1", "dyadic index for the j constructions"),
        "p": (_floats, "2,4,inf", "exponents for the concentration report"),
        "grid": (_int, "0", "if > 0, write the field on a grid x grid box [-1.2 lam, 1.2 lam]^2"),
    },
    "sweep": {
        "family": (_choice("hermite1d", "construction", "theorem31"), "hermite1d", "what to sweep"),
        "p": (_floats, "8", "exponents"),
        "n": (_int, "1", "dimension"),
        "N": (_degrees, "64..16384", "degrees: lo..hi (doubling), lo..hi:count, or a list"),
        "construction": (_choice("tube_d0", "point_d0", "point_dj", "tube_dj"), "point_d0",
                         "construction (family=construction)"),
        "j": (_int, "1", "dyadic index (family=construction)"),
        "part": (_choice("a", "b"), "a", "theorem part (family=theorem31)"),
        "decay": (_float, "4", "decay power for part b"),
        "tol": (_float, "", "if set, exit 2 when |slope - predicted| > tol"),
    },
    "weights": {
        "eps": (_choice("default", "block"), "default", "eps sequence"),
        "K": (_int, "9", "number of dyadic blocks"),
        "lambda": (_float, "100", "lam for eps=block"),
        "j": (_int, "1", "dyadic index for eps=block"),
        "c_b": (_float, "4", "slope of b for y < 0"),
        "y_max": (_float, "1000", "grid extent"),
    },
    "propagator": {
        "t": (_floats, "0.39269908169872414,0.7853981633974483,1.1780972450961724", "times"),
        "n": (_int, "1", "dimension"),
        "points": (_int, "5", "random (x, y) samples per time"),
        "tol": (_float, "1e-4", "relative tolerance on the radial limit"),
    },
    "report": {
        "n": (_int, "1", "dimension of the rho(p) table"),
        "p": (_floats, "2,2.5,3,4,6,8,16,inf", "exponents of the rho(p) table"),
    },
}


def parse_params(sub: str, pairs: list[str], config_text: str | None = None) -> dict:
    schema = SCHEMAS[sub]
    raw: dict[str, str] = {}
    sources = []
    if config_text is not None:
        for line in config_text.splitlines():
            line = line.split("#", 1)[0].strip()
            if line:
                sources.append(line)
    sources.extend(pairs)
    for item in sources:
        if "=" not in item:
            raise UsageError(f"expected key=value, got {item!r}")
        k, v = item.split("=", 1)
        k = k.strip()
        if k not in schema:
            raise UsageError(f"unknown parameter {k!r} for {sub}; valid keys: {', '.join(sorted(schema))}")
        raw[k] = v.strip()
    out = {}
    for k, (parse, default, _) in schema.items():
        text = raw.get(k, default)
        if text == "":
            out[k] = None
            continue
        try:
            out[k] = parse(text)
        except ValueError as exc:
            raise UsageError(f"bad value for {k}: {text!r} ({exc})") from None
    return out


@dataclass
class RunConfig:
    subcommand: str
    parameters: dict
    output_dir: Path
    seed: int = 0
    threads: int | str = "auto"
    dry_run: bool = False
    raw: list = field(default_factory=list)

    def __post_init__(self):
        if self.subcommand not in SUBCOMMANDS:
            raise UsageError(f"unknown subcommand {self.subcommand!r}")
        if not 0 <= self.seed < 2 ** 64:
            raise UsageError("seed must be a 64-bit unsigned integer")


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def _jsonable(v):
    if isinstance(v, float):
        return "inf" if math.isinf(v) else v
    if isinstance(v, (np.floating,)):
        return _jsonable(float(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _pkey(p: float) -> str:
    return "inf" if math.isinf(p) else f"{p:g}"


def _versions() -> dict:
    import numba
    import scipy

    from . import __version__
    return {"hermite_lp": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "numba": numba.__version__, "python": platform.python_version()}


def _plan(cfg: RunConfig) -> dict:
    return {"command": cfg.subcommand, "parameters": cfg.parameters, "output_dir": str(cfg.output_dir),
            "seed": cfg.seed, "threads": cfg.threads}


# ---------------------------------------------------------------------------
# subcommands: each returns (results summary, failed-check message or None)
# ---------------------------------------------------------------------------

def _run_eval(cfg: RunConfig, out: Path):
    from .hermite import hermite_deriv, hermite_eval
    import csv

    P = cfg.parameters
    k = P["k"]
    rows, summary = [], []
    for x in P["x"]:
        v = hermite_eval(k, x)
        line = {"k": k, "x": x, "value": float(v), "mantissa": v.mantissa, "exp2": v.exp2}
        print(f"hhat_{k}({x!r}) = {float(v):.17g}  [mantissa {v.mantissa:.17g} x 2^{v.exp2}]")
        if P["deriv"]:
            dv = hermite_deriv(k, x)
            line.update(deriv=float(dv), deriv_mantissa=dv.mantissa, deriv_exp2=dv.exp2)
            print(f"hhat_{k}'({x!r}) = {float(dv):.17g}  [mantissa {dv.mantissa:.17g} x 2^{dv.exp2}]")
        rows.append(line)
        summary.append(line)
    keys = list(rows[0].keys())
    with open(out / "eval.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(keys)
        for r in rows:
            w.writerow([f"{r[c]:.17g}" if isinstance(r[c], float) else r[c] for c in keys])
    return {"values": summary}, None


def _scale_from(P: dict):
    from .regions import SpectralScale

    if P["N"] is not None:
        return SpectralScale(P["n"] or 1, P["N"])
    if P["lambda"] is None:
        raise UsageError("regions needs lambda= or N=")
    l2 = P["lambda"] ** 2
    e = int(round(l2))
    if abs(l2 - e) > 1e-9 * max(1.0, l2):
        raise UsageError(f"lambda^2 = {l2} is not an integer n + 2N")
    ns = [P["n"]] if P["n"] else [1, 2]
    for n in ns:
        if e - n >= 0 and (e - n) % 2 == 0:
            return SpectralScale(n, (e - n) // 2)
    raise UsageError(f"no N with n + 2N = {e} for n = {ns[0]}")


def _run_regions(cfg: RunConfig, out: Path):
    from .regions import region_membership, region_table, write_region_csv

    P = cfg.parameters
    scale = _scale_from(P)
    write_region_csv(out / "regions.csv", scale)
    print(f"lambda = {scale.lam:.17g} (n = {scale.n}, N = {scale.N})")
    for name, lo, hi in region_table(scale):
        print(f"  {name:>6}  [{lo:.10g}, {hi:.10g}]")
    radii = P["x"] if P["x"] is not None else [0.0, scale.lam - 0.001 * scale.lam, scale.lam + 0.05 * scale.lam]
    members = {}
    for r in radii:
        labels = sorted(region_membership(r, scale))
        members[f"{r:.17g}"] = [str(l) for l in labels]
        print(f"  |x| = {r:g}: {', '.join(members[f'{r:.17g}']) or '-'}")
    return {"lambda": scale.lam, "n": scale.n, "N": scale.N, "table": region_table(scale),
            "membership": members}, None


def _run_extremal(cfg: RunConfig, out: Path):
    from .extremal import apply_H_residual, build, concentration_report, evaluate_mode_sum, write_field_csv
    from .extremal import TensorGrid
    from .regions import SpectralScale

    P = cfg.parameters
    scale = SpectralScale(P["n"], P["N"])
    v = build(P["construction"], scale, j=P["j"])
    (out / "mode_sum.json").write_text(v.to_json() + "\n", encoding="utf-8")
    lam = scale.lam
    # residual on a small tensor grid through the concentration region
    axes = [np.linspace(-1.1 * lam, 1.1 * lam, 33) for _ in range(scale.n)]
    grid = TensorGrid(axes, [np.ones_like(a) for a in axes])
    vals = evaluate_mode_sum(v, grid)
    res = apply_H_residual(v, grid)
    rel = res / max(float(np.max(np.abs(vals))), 1e-300)
    summary = {"construction": P["construction"], "terms": len(v), "l2_norm": v.l2_norm(),
               "residual_relative": rel, "meta": {k: v.meta[k] for k in sorted(v.meta)}}
    if scale.n == 2:
        rep = concentration_report(v, P["p"])
        summary["region"] = rep.region
        summary["ratios"] = {_pkey(p): r for p, r in rep.ratios().items()}
        summary["predicted_exponents"] = {_pkey(p): list(e) for p, e in rep.predicted_ratio_exponents.items()}
    if P["grid"] and P["grid"] > 0:
        g = np.linspace(-1.2 * lam, 1.2 * lam, P["grid"])
        mesh = np.stack(np.meshgrid(*([g] * scale.n), indexing="ij"), axis=-1).reshape(-1, scale.n)
        write_field_csv(out / "field.csv", mesh, evaluate_mode_sum(v, mesh))
    print(json.dumps(_jsonable(summary), sort_keys=True, indent=2))
    fail = None if rel <= 1e-7 else f"eigen-equation residual {rel:.3g} exceeds 1e-7"
    return summary, fail


def _run_sweep(cfg: RunConfig, out: Path):
    from .bounds import (construction_sweep, fit_summary, hermite_norm_sweep, sweep_fit, theorem31_lhs,
                         SweepPoint, write_fit_json, write_sweep_csv, band)
    from .extremal import predicted_exponents

    P = cfg.parameters
    Ns = P["N"]
    family = P["family"]
    results, fail = {}, None
    if family == "hermite1d":
        if P["n"] != 1:
            raise UsageError("family=hermite1d needs n=1")
        data = hermite_norm_sweep(P["p"], Ns)
    elif family == "construction":
        if P["n"] != 2:
            raise UsageError("family=construction needs n=2")
        data = construction_sweep(P["construction"], P["p"], Ns, j=P["j"])
    else:
        data = {p: [SweepPoint(N, math.sqrt(2 * N + 1),
                               theorem31_lhs(N, p, P["part"], P["decay"], seed=cfg.seed)) for N in Ns]
                for p in P["p"]}
    for p, pts in data.items():
        tag = _pkey(p)
        write_sweep_csv(out / f"sweep_p{tag}.csv", pts)
        if family == "theorem31":
            results[tag] = {"band": band(pts), "points": len(pts)}
            print(f"p = {tag}: band {band(pts):.6g}")
            continue
        fit = sweep_fit(pts)
        pred = predicted_exponents(P["construction"], p, 2)[0] if family == "construction" else None
        summ = fit_summary(p, P["n"], fit, pred)
        write_fit_json(out / f"fit_p{tag}.json", summ)
        results[tag] = summ
        print(f"p = {tag}: slope {fit.slope:.6g}, predicted {summ['predicted']:.6g}")
        if P["tol"] is not None and abs(fit.slope - summ["predicted"]) > P["tol"]:
            fail = f"slope {fit.slope:.4g} differs from {summ['predicted']:.4g} by more than {P['tol']}"
    return results, fail


def _run_weights(cfg: RunConfig, out: Path):
    from .carleman import (EpsSequence, build_weights, check_derivative_bounds, check_lab_inequalities,
                           default_y_grid, write_weights_csv)

    P = cfg.parameters
    eps = EpsSequence.default(P["K"]) if P["eps"] == "default" else EpsSequence.for_block(P["lambda"], P["j"], P["K"])
    w = build_weights(eps, default_y_grid(P["y_max"]), c_b=P["c_b"])
    m = check_lab_inequalities(w)
    abd, bbd = check_derivative_bounds(w)
    write_weights_csv(out / "weights.csv", w)
    summary = {"eps": list(eps.eps), "kappa": w.kappa, "floor_constant": eps.floor_constant(),
               "margins": m.as_dict(), "min_first": m.min_first, "min_second": m.min_second,
               "abd_ratio": abd, "bbd_ratio": bbd, "d_range": [float(w.d.min()), float(w.d.max())]}
    print(f"min margins: first {m.min_first:.6g}, second {m.min_second:.6g}, (a'-yb)|y| {m.inverse_y:.6g}")
    print(f"derivative envelope ratios: a {abd:.6g}, b {bbd:.6g}")
    fail = None if m.all_positive else "a weight margin is not positive"
    return summary, fail


def _run_propagator(cfg: RunConfig, out: Path):
    from .propagator import kernel_magnitude_table, write_kernel_csv

    P = cfg.parameters
    rows = kernel_magnitude_table(P["t"], P["n"], P["points"], seed=cfg.seed % (2 ** 32))
    write_kernel_csv(out / "kernel.csv", rows)
    summary = {"rows": [{"t": r.t, "predicted": r.predicted, "measured": r.measured, "relerr": r.relerr,
                         "sin_t_form": r.sin_t_form} for r in rows]}
    for r in rows:
        print(f"t = {r.t:.6g}: predicted {r.predicted:.10g}, measured {r.measured:.10g}, "
              f"relerr {r.relerr:.3g} (|sin t| form {r.sin_t_form:.6g})")
    worst = max(r.relerr for r in rows)
    fail = None if worst <= P["tol"] else f"radial limit off by {worst:.3g}"
    return summary, fail


def _run_report(cfg: RunConfig, out: Path):
    from .regions import rho, rho_kinks

    P = cfg.parameters
    table = {_pkey(p): rho(p, P["n"]) for p in P["p"]}
    runs = {}
    for sub in sorted(out.iterdir()) if out.exists() else []:
        m = sub / "manifest.json"
        if sub.is_dir() and m.exists():
            d = json.loads(m.read_text(encoding="utf-8"))
            runs[sub.name] = {"command": d.get("command"), "status": d.get("status")}
    print(f"rho(p, {P['n']}), kinks at {', '.join(_pkey(k) for k in rho_kinks(P['n']))}:")
    for k, v in table.items():
        print(f"  p = {k:>5}: {v:.6g}")
    for name, r in runs.items():
        print(f"  run {name}: {r['command']} -> {r['status']}")
    return {"rho": table, "kinks": [_pkey(k) for k in rho_kinks(P["n"])], "runs": runs}, None


RUNNERS = {"eval": _run_eval, "regions": _run_regions, "extremal": _run_extremal, "sweep": _run_sweep,
           "weights": _run_weights, "propagator": _run_propagator, "report": _run_report}


def run(cfg: RunConfig) -> int:
    if cfg.dry_run:
        print(json.dumps(_jsonable(_plan(cfg)), sort_keys=True, indent=2))
        return 0
    if cfg.threads != "auto":
        import numba
        numba.set_num_threads(int(cfg.threads))
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    summary, fail = RUNNERS[cfg.subcommand](cfg, out)
    manifest = {"command": cfg.subcommand, "parameters": cfg.parameters, "seed": cfg.seed,
                "versions": _versions(), "results": summary, "status": "fail" if fail else "ok"}
    _write_json(out / "manifest.json", manifest)
    _write_json(out / "timing.json", {"wall_time": time.perf_counter() - start})
    if fail:
        print(f"check failed: {fail}", file=sys.stderr)
        return 2
    return 0


def _threads(s: str):
    if s == "auto":
        return s
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("threads must be positive or 'auto'")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hermite-lp", description="Hermite eigenfunction L^p bounds toolkit")
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("params", nargs="*", metavar="key=value")
    ap.add_argument("--config", help="file of key=value defaults")
    ap.add_argument("--output-dir", help=f"output directory (default ${OUTPUT_ENV} or ./{DEFAULT_OUTPUT})")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=_threads, default="auto")
    ap.add_argument("--dry-run", action="store_true", help="print the resolved plan and exit")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_intermixed_args(argv)
    except SystemExit as exc:
        return 1 if exc.code else 0
    try:
        cfg_text = Path(args.config).read_text(encoding="utf-8") if args.config else None
        params = parse_params(args.subcommand, args.params, cfg_text)
        out = args.output_dir or os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT
        cfg = RunConfig(args.subcommand, params, Path(out), args.seed, args.threads, args.dry_run, args.params)
        return run(cfg)
    except (UsageError, OSError) as exc:
        print(f"hermite-lp: {exc}", file=sys.stderr)
        return 1
