"""Command-line entry point.

Every subcommand reads JSON/CSV inputs, writes CSV tables and JSON reports
into ``--out DIR`` and finishes by writing ``manifest.json`` with a checksum
for every file in the directory. Exit status is 0 when all assertions pass,
2 when an assertion fails and 1 on errors.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import dirichlet, fields, regularity, symbol_heat, verification
from .errors import ConfigError, QuadratureBudgetExceeded, StableOpError
from .grid import GridFunction, GridSpec
from .measure import operator_from_json
from .nonlocal_apply import EvaluableField, QuadratureBudget, apply_pointwise

SUBCOMMANDS = ("symbol", "heat-kernel", "heat-checks", "apply", "solve", "measure", "verify")


class Outputs:
    """Collects files for one run and writes them deterministically."""

    def __init__(self, root):
        self.root = Path(root)
        self.verdicts = {}
        self.bounds = {}

    def path(self, rel):
        p = self.root / rel
        p.parent.mkdir(parents=True, exist_ok=True)
        return p

    def json(self, rel, obj):
        text = json.dumps(_plain(obj), indent=2, sort_keys=True, ensure_ascii=False) + "\n"
        self.path(rel).write_text(text, encoding="utf-8", newline="\n")

    def csv(self, rel, header, rows):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])
        self.path(rel).write_text(buf.getvalue(), encoding="utf-8", newline="\n")

    def grid(self, rel, gf: GridFunction):
        text = gf.to_csv()
        self.path(rel).write_text(text, encoding="utf-8", newline="\n")

    def manifest(self, config, seconds):
        files = {}
        for p in sorted(self.root.rglob("*")):
            if p.is_file() and p.name != "manifest.json":
                files[p.relative_to(self.root).as_posix()] = hashlib.sha256(p.read_bytes()).hexdigest()
        body = {
            "config": config,
            "config_hash": config_hash(config),
            "files": files,
            "verdicts": self.verdicts,
            "error_bounds": self.bounds,
            "passed": all(self.verdicts.values()),
            "wall_clock_seconds": seconds,
        }
        self.json("manifest.json", body)


def _cell(v):
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "nan" if math.isnan(v) else repr(v)
    return v


def _plain(obj):
    """JSON-safe copy: numpy scalars and arrays become Python values, NaN becomes null."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def config_hash(config):
    canon = json.dumps(_plain(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def thread_cap():
    raw = os.environ.get("STABLE_OP_LAB_THREADS")
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"STABLE_OP_LAB_THREADS: expected an integer, got {raw!r}") from exc
    if n < 1:
        raise ConfigError("STABLE_OP_LAB_THREADS must be at least 1")
    return n


# ---------------------------------------------------------------------------
# input loading


def _load_json(path, what):
    if path is None:
        raise ConfigError(f"--{what}: a file is required for this subcommand")
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"--{what}: file not found: {path}")
    try:
        return json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"--{what}: malformed JSON in {path}: {exc}") from exc


def _operator(args):
    return operator_from_json(_load_json(args.op, "op"))


def _floats(text, what):
    try:
        return [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise ConfigError(f"--{what}: expected comma-separated numbers, got {text!r}") from exc


def _points_csv(path, what="points"):
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"--{what}: file not found: {path}")
    with p.open(encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise ConfigError(f"--{what}: empty file {path}")
    try:
        return np.array([[float(c) for c in r] for r in rows[1:]], dtype=float).reshape(len(rows) - 1, len(rows[0]))
    except ValueError as exc:
        raise ConfigError(f"--{what}: non-numeric entry in {path}") from exc


FIELD_BUILDERS = {
    "gaussian": lambda o: fields.gaussian(o["center"], o.get("sigma", 1.0), o.get("amplitude", 1.0)),
    "bump": lambda o: fields.bump(o["center"], o.get("radius", 1.0), o.get("power", 6), o.get("amplitude", 1.0)),
    "ball_power": lambda o: fields.ball_power(o["exponent"], o.get("radius", 1.0), o.get("scale", 1.0), o["n"], o.get("center")),
    "halfspace_power": lambda o: fields.halfspace_power(o["exponent"], o["normal"], o.get("offset", 0.0), o.get("scale", 1.0)),
    "outside_ball_power": lambda o: fields.outside_ball_power(o["exponent"], o["n"], o.get("radius", 1.0)),
    "inside_ball_power": lambda o: fields.inside_ball_power(o["exponent"], o["n"], o.get("radius", 1.0)),
}


def _field(path):
    """A closed-form field from JSON ``{"kind": ...}`` or a grid dump CSV."""
    p = Path(path)
    if p.suffix.lower() == ".csv":
        if not p.is_file():
            raise ConfigError(f"--field: file not found: {path}")
        return EvaluableField.from_grid(GridFunction.from_csv(p))
    obj = _load_json(path, "field")
    kind = obj.get("kind") if isinstance(obj, dict) else None
    if kind not in FIELD_BUILDERS:
        raise ConfigError(f"field.kind: expected one of {sorted(FIELD_BUILDERS)}, got {kind!r}")
    try:
        return FIELD_BUILDERS[kind](obj)
    except KeyError as exc:
        raise ConfigError(f"field: missing field {exc}") from exc


def _grid_field(path):
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"--field: file not found: {path}")
    try:
        return GridFunction.from_csv(p)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _centered_grid(args, ndim):
    points = args.points or (4096 if ndim == 1 else 256)
    return GridSpec.centered(args.extent, points, ndim)


# ---------------------------------------------------------------------------
# subcommands


def cmd_symbol(args, out):
    op = _operator(args)
    if args.points_file:
        xi = _points_csv(args.points_file)
    elif op.dim == 1:
        xi = np.array([[-2.0], [-1.0], [-0.5], [0.5], [1.0], [2.0]])
    else:
        ang = np.linspace(0, 2 * np.pi, args.samples, endpoint=False)
        xi = np.zeros((args.samples, op.dim))
        xi[:, 0], xi[:, 1] = np.cos(ang), np.sin(ang)
    vals = symbol_heat.symbol_eval(op, xi)
    mult = op.c_s * vals
    out.csv("symbol.csv", [f"xi{i + 1}" for i in range(op.dim)] + ["A", "multiplier"], [(*x, a, m) for x, a, m in zip(xi, vals, mult)])
    out.json("report.json", {"s": op.s, "c_s": op.c_s, "lambda": op.lam, "Lambda": op.Lam, "operator": op.to_json()})
    out.verdicts["symbol_finite"] = bool(np.all(np.isfinite(vals)))


def cmd_heat_kernel(args, out):
    op = _operator(args)
    p = symbol_heat.heat_kernel(op, args.t, _centered_grid(args, op.dim), args.nyquist_tol)
    out.grid("p.csv", p.as_grid_function())
    mass = p.mass()
    out.json("report.json", {"t": p.t, "mass": mass, "nyquist_damping": p.nyquist_damping, "imag_max": p.imag_max, "h": p.grid.h})
    tol = args.tol if args.tol is not None else 1e-6
    out.verdicts["mass"] = abs(mass - 1.0) <= tol
    out.bounds["mass"] = abs(mass - 1.0)


def cmd_heat_checks(args, out):
    op = _operator(args)
    grid = _centered_grid(args, op.dim)
    p = symbol_heat.heat_kernel(op, args.t, grid, args.nyquist_tol)
    delta = args.delta if args.delta is not None else min(op.s, 2 * op.s - 0.01)
    moment, tail = symbol_heat.moment_integral(p, delta)
    report = {
        "mass": p.mass(),
        "moment": moment,
        "moment_delta": delta,
        "tail_bound": tail,
        "lipschitz": symbol_heat.lipschitz_seminorm(p),
        "selfsimilarity": symbol_heat.heat_selfsimilarity_check(op, 0.5 * args.t, args.t, grid, args.nyquist_tol),
    }
    out.json("report.json", report)
    tol = args.tol if args.tol is not None else 1e-6
    out.verdicts["mass"] = abs(report["mass"] - 1.0) <= tol
    out.verdicts["selfsimilarity"] = report["selfsimilarity"] <= max(tol, 1e-6)
    out.bounds.update(mass=abs(report["mass"] - 1.0), selfsimilarity=report["selfsimilarity"])


def cmd_apply(args, out):
    op = _operator(args)
    if not args.field or not args.points_file:
        raise ConfigError("apply needs --field and --points")
    u = _field(args.field)
    pts = _points_csv(args.points_file)
    if pts.shape[1] != op.dim:
        raise ConfigError(f"--points: expected {op.dim} columns, got {pts.shape[1]}")
    tol = args.tol if args.tol is not None else 1e-6
    budget = QuadratureBudget(tol=tol, n_directions=args.directions)
    rows, ok, worst = [], True, 0.0
    for x in pts:
        try:
            val, err = apply_pointwise(op, u, x, budget)
        except QuadratureBudgetExceeded as exc:
            val, err, ok = float("nan"), exc.bound, False
        worst = max(worst, err)
        rows.append((*x, val, err))
    out.csv("Lu.csv", [f"x{i + 1}" for i in range(op.dim)] + ["Lu", "err_bound"], rows)
    out.verdicts["within_tol"] = ok
    out.bounds["max_err_bound"] = worst


def _problem(obj, seed):
    try:
        op = operator_from_json(obj["operator"], "problem.operator")
        dom = dirichlet.domain_from_json(obj["domain"], "problem.domain")
        h = float(obj["h"])
    except KeyError as exc:
        raise ConfigError(f"problem: missing field {exc}") from exc
    if not h > 0:
        raise ConfigError("problem.h: must be positive")
    prob = dirichlet.DirichletProblem(
        op, dom, obj.get("f", 1.0), h, obj.get("margin"), int(obj.get("n_directions", 32)), obj.get("method", "auto")
    )
    probes = obj.get("probes")
    if isinstance(probes, int):
        # random interior probes, reproducible through --seed
        rng = np.random.default_rng(seed)
        lo, hi = dom.bounding_box()
        cand = rng.uniform(lo, hi, size=(64 * probes, dom.dim))
        cand = cand[dom.signed_distance(cand) > 0.1 * dom.diameter()]
        probes = cand[:probes]
    return prob, probes


def cmd_solve(args, out):
    cfg = _load_json(args.problem, "problem")
    prob, probes = _problem(cfg, args.seed)
    u = dirichlet.solve(prob)
    out.grid("u.csv", u)
    meta = {k: v for k, v in u.meta.items() if not k.endswith("seconds")}
    report = {"solve": meta, "grid": u.grid.to_json(), "max_u": float(np.max(u.values)), "min_u": float(np.min(u.values))}
    if probes is not None and len(probes):
        res = dirichlet.residual_check(prob, u, probes)
        report["residual_check"] = res
        report["probes"] = np.asarray(probes).tolist()
        tol = args.tol if args.tol is not None else float(cfg.get("residual_tol", 0.02))
        out.verdicts["residual"] = res <= tol
        out.bounds["residual_check"] = res
    out.bounds["discrete_residual"] = meta["discrete_residual"]
    out.json("report.json", report)
    out.verdicts.setdefault("solved", True)


def cmd_measure(args, out):
    if not args.field:
        raise ConfigError("measure needs --field u.csv")
    u = _grid_field(args.field)
    if args.mode == "interior":
        center = _floats(args.center, "center") if args.center else [0.0] * u.ndim
        rep = regularity.exponent_fit(u, center, window=args.window, order=args.order)
        body = rep.to_json()
        if args.beta is not None:
            body["holder"] = regularity.holder_seminorm(u, None, args.beta).to_json()
        out.verdicts["fit_not_flagged"] = not rep.flagged
    elif args.mode == "boundary":
        if args.s is None or not args.band or not args.domain:
            raise ConfigError("boundary mode needs --s, --band and --domain")
        dom = dirichlet.domain_from_json(_load_json(args.domain, "domain"))
        ratio = regularity.boundary_ratio(u, dom, args.s, _floats(args.band, "band"))
        rep = regularity.holder_seminorm(ratio, None, args.beta if args.beta is not None else max(args.s - 0.1, 0.05))
        body = rep.to_json()
        out.grid("ratio.csv", ratio)
        out.verdicts["seminorm_finite"] = bool(np.isfinite(rep.seminorm_estimate))
    else:
        if args.s is None or not args.z or not args.nu:
            raise ConfigError("coefficient mode needs --s, --z and --nu")
        rep = regularity.boundary_coefficient(u, _floats(args.z, "z"), _floats(args.nu, "nu"), args.s, beta=args.beta)
        body = rep.to_json()
        out.verdicts["coefficient_finite"] = bool(np.isfinite(rep.q_limit))
    out.json("report.json", body)


def cmd_verify(args, out):
    experiments = verification.run_suite(args.suite, workers=thread_cap())
    for e in experiments:
        out.json(f"{e.name}/verdict.json", e.to_json())
        if e.rows:
            out.csv(f"{e.name}/table.csv", list(e.columns), e.rows)
        out.verdicts[e.name] = bool(e.passed)


COMMANDS = {
    "symbol": cmd_symbol,
    "heat-kernel": cmd_heat_kernel,
    "heat-checks": cmd_heat_checks,
    "apply": cmd_apply,
    "solve": cmd_solve,
    "measure": cmd_measure,
    "verify": cmd_verify,
}


def build_parser():
    ap = argparse.ArgumentParser(prog="stable-op-lab", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=SUBCOMMANDS)
    ap.add_argument("--op", help="operator JSON file")
    ap.add_argument("--problem", help="Dirichlet problem JSON file")
    ap.add_argument("--out", default="out", help="output directory")
    ap.add_argument("--tol", type=float, help="tolerance for the run's hard assertion")
    ap.add_argument("--seed", type=int, default=0, help="seed for random probe selection")
    ap.add_argument("--suite", default="all", choices=sorted(verification.SUITES) + ["all"])
    ap.add_argument("--field", help="field JSON or grid CSV")
    ap.add_argument("--points", dest="points_file", help="CSV of evaluation points (header row)")
    ap.add_argument("--t", type=float, default=1.0, help="heat kernel time")
    ap.add_argument("--extent", type=float, default=40.0, help="heat kernel grid extent")
    ap.add_argument("--grid-points", dest="points", type=int, help="heat kernel nodes per axis (4096 in 1-D, 256 in 2-D)")
    ap.add_argument("--nyquist-tol", type=float, default=1e-12)
    ap.add_argument("--delta", type=float, help="moment weight deficit")
    ap.add_argument("--samples", type=int, default=16, help="symbol samples on the unit circle")
    ap.add_argument("--directions", type=int, default=128, help="directions for uniform measures")
    ap.add_argument("--mode", choices=("interior", "boundary", "coefficient"), default="interior")
    ap.add_argument("--center", help="comma-separated point")
    ap.add_argument("--window", type=float, default=1.0)
    ap.add_argument("--order", type=int, default=2, choices=(1, 2))
    ap.add_argument("--beta", type=float)
    ap.add_argument("--s", type=float)
    ap.add_argument("--band", help="d_min,d_max")
    ap.add_argument("--domain", help="domain JSON file")
    ap.add_argument("--z", help="boundary point")
    ap.add_argument("--nu", help="inward normal")
    return ap


def run(argv=None):
    """Run one subcommand; returns the exit code."""
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    # the output location is not part of the experiment, so it stays out of the hash
    config = {k: v for k, v in sorted(vars(args).items()) if k != "out"}
    try:
        if args.tol is not None and not args.tol > 0:
            raise ConfigError("--tol must be positive")
        for key in ("op", "problem"):
            if getattr(args, key) is not None:
                config[f"{key}_json"] = _load_json(getattr(args, key), key)
        out = Outputs(args.out)
        out.root.mkdir(parents=True, exist_ok=True)
        t0 = time.perf_counter()
        COMMANDS[args.command](args, out)
        out.manifest(config, time.perf_counter() - t0)
    except (StableOpError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    failed = [k for k, v in out.verdicts.items() if not v]
    for k in failed:
        print(f"assertion failed: {k}", file=sys.stderr)
    return 2 if failed else 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
