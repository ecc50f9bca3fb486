"""Command-line front end.

Subcommands: ``solve``, ``transform``, ``verify``, ``counterexample`` and
``symmetry-test``. Exit status is 0 when every check passes, 1 when the
computation ran but failed a check, and 2 for invalid input. Inputs are
validated before anything is computed or written.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .dual_energy import DualPair, make_exponents, recover_solution
from .errors import DomainError, ExponentError, PreconditionError, UnsupportedError
from .grid import DomainKind, RadialFunction, RadialGrid, make_grid
from .minimizer import MinimizeOptions, MinResult, minimize
from .rearrange import (
    cumulative_I,
    decreasing_rearrangement,
    flip_profile,
    schwarz_symmetrization,
    star_transform,
)
from . import verify_suite as vs

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INVALID = 2

INPUT_ERRORS = (DomainError, ExponentError, PreconditionError, UnsupportedError)

SUITES = (
    "all",
    "matrix",
    "counterexample",
    "star-invariants",
    "energy-decrease",
    "K",
    "gradient",
    "hardy-littlewood",
    "rigidity",
)


class InvalidInput(Exception):
    """Raised for anything that should end with status 2."""


@dataclass
class RunConfig:
    """Every flag of the tool; a JSON config file may set any of them."""

    domain: str = "ball"
    N: int = 3
    delta: float = 0.0
    p: float = 3.0
    q: float = 3.0
    nodes: int = 1024
    seed: int = 0
    tol: float = 1e-9
    max_iterations: int = 1500
    out: str | None = None
    format: str = "csv"
    suite: str = "all"
    op: str | None = None
    input: str | None = None
    report: str | None = None
    points: int = 20000

    def kind(self) -> DomainKind:
        if self.domain == "interval":
            return DomainKind.interval()
        if self.domain == "ball":
            return DomainKind.ball(self.N)
        return DomainKind(self.domain, self.N, self.delta)


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--nodes", type=int, default=None, help="grid node count")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--tol", type=float, default=None, help="criticality tolerance")
    common.add_argument("--out", default=None, help="output path")
    common.add_argument("--format", choices=("csv", "json"), default=None)
    common.add_argument("--config", default=None, help="JSON file with flag values")

    domain = argparse.ArgumentParser(add_help=False)
    domain.add_argument("--domain", choices=("ball", "annulus", "interval"), default=None)
    domain.add_argument("--N", type=int, default=None, help="space dimension")
    domain.add_argument("--delta", type=float, default=None, help="annulus inner radius")

    ap = argparse.ArgumentParser(prog="neumann-dual", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", parents=[common, domain], help="least-energy solve")
    s.add_argument("--p", type=float, default=None)
    s.add_argument("--q", type=float, default=None)
    s.add_argument("--max-iterations", dest="max_iterations", type=int, default=None)

    t = sub.add_parser("transform", parents=[common, domain], help="star, schwarz, flip or rearrange a profile")
    t.add_argument("op", choices=("star", "schwarz", "flip", "rearrange"))
    t.add_argument("input", help="CSV with columns r,value")

    v = sub.add_parser("verify", parents=[common], help="run verification checks")
    v.add_argument("--suite", choices=SUITES, default=None)

    c = sub.add_parser("counterexample", parents=[common], help="reproduce the 5-ball energies")
    c.add_argument("--points", type=int, default=None)

    y = sub.add_parser("symmetry-test", parents=[common], help="second variation of a saved solution")
    y.add_argument("input", help="solution CSV written by solve")
    y.add_argument("--report", default=None, help="JSON sidecar; defaults to the CSV path with .json")
    return ap


def _config(args: argparse.Namespace) -> RunConfig:
    base: dict = {}
    if args.config:
        try:
            base = json.loads(Path(args.config).read_text())
        except (OSError, ValueError) as exc:
            raise InvalidInput(f"cannot read config: {exc}") from exc
        if not isinstance(base, dict):
            raise InvalidInput("config must be a JSON object")
    names = {f.name for f in fields(RunConfig)}
    unknown = set(base) - names - {"matrix", "static_checks", "samples"}
    if unknown:
        raise InvalidInput(f"unknown config keys: {sorted(unknown)}")
    merged = {k: v for k, v in base.items() if k in names}
    for name in names:
        val = getattr(args, name, None)
        if val is not None:
            merged[name] = val
    cfg = RunConfig(**merged)
    if cfg.domain == "interval":
        cfg.N = 1
    if cfg.format not in ("csv", "json"):
        raise InvalidInput("format must be csv or json")
    if cfg.out is not None:
        parent = Path(cfg.out).resolve().parent
        if not parent.is_dir():
            raise InvalidInput(f"output directory {parent} does not exist")
    return cfg


def _sidecar(path: str) -> Path:
    return Path(path).with_suffix(".json")


def _write(path: str | Path, text: str) -> None:
    Path(path).write_text(text)


def _dumps(obj) -> str:
    return json.dumps(vs._jsonable(obj), sort_keys=True, indent=2) + "\n"


# ----------------------------------------------------------------------------
# solve


def cmd_solve(cfg: RunConfig) -> int:
    try:
        kind = cfg.kind()
        exps = make_exponents(cfg.p, cfg.q, kind.N)
        grid = make_grid(kind, cfg.nodes)
        opts = MinimizeOptions(seed=cfg.seed, tol=cfg.tol, max_iterations=cfg.max_iterations)
    except INPUT_ERRORS as exc:
        raise InvalidInput(str(exc)) from exc
    res = minimize(grid, exps, opts)
    sol = res.solution
    d = sol.diagnostics
    report = {
        "domain": kind.to_dict(),
        "exponents": exps.to_dict(),
        "nodes": grid.n_nodes,
        "grid": "uniform-r",
        "run": res.report(),
    }
    print(f"regime {exps.regime}  phi {d.phi:.12g}  I {d.I:.12g}")
    print(f"residual {d.residual:.3e}  compat_u {d.compat_u:.3e}  compat_v {d.compat_v:.3e}")
    print("converged" if res.converged else "NOT converged")
    if cfg.out is not None:
        if cfg.format == "csv":
            _write(cfg.out, sol.to_csv())
            _write(_sidecar(cfg.out), _dumps(report))
        else:
            report["solution"] = {
                "r": grid.midpoints.tolist(),
                "f": sol.pair.f.values.tolist(),
                "g": sol.pair.g.values.tolist(),
                "u": sol.u.values.tolist(),
                "v": sol.v.values.tolist(),
            }
            _write(cfg.out, _dumps(report))
    return EXIT_OK if res.converged else EXIT_FAILED


# ----------------------------------------------------------------------------
# transform


def read_profile_input(cfg: RunConfig, path: str) -> RadialFunction:
    """Load ``r,value`` rows on the declared domain as a cell function.

    Rows spanning the whole radial interval are taken as node samples that
    define the grid. Otherwise the rows must be the cell midpoints of the
    uniform grid with ``--nodes`` nodes.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InvalidInput(f"cannot read {path}: {exc}") from exc
    try:
        kind = cfg.kind()
        rows = [line.split(",") for line in text.strip().splitlines()]
        if [c.strip() for c in rows[0]] != ["r", "value"]:
            raise PreconditionError("expected header 'r,value'")
        r = np.array([float(a) for a, _ in rows[1:]])
        lo = -1.0 if kind.tag == "interval" else kind.delta
        if r.size >= 16 and abs(r[0] - lo) <= 1e-12 and abs(r[-1] - 1.0) <= 1e-12:
            nodes = r.copy()
            nodes[0], nodes[-1] = lo, 1.0
            grid = RadialGrid(kind, nodes)
        else:
            grid = make_grid(kind, cfg.nodes)
        return RadialFunction.from_csv(grid, text).as_cells()
    except (ValueError, IndexError) as exc:
        raise InvalidInput(f"bad profile input: {exc}") from exc


def transform_report(op: str, h: RadialFunction, prof) -> dict:
    norms = {str(t): {"input": h.lp_norm(t), "output": prof.lp_norm(t)} for t in (1.0, 1.5, 2.0, 3.0)}
    rep = {
        "op": op,
        "domain": h.grid.kind.to_dict(),
        "average": {"input": float(np.dot(h.grid.cell_measures, h.values)), "output": prof.integral()},
        "norms": norms,
    }
    if op in ("flip", "star"):
        fp = flip_profile(h)
        gap = np.abs(fp.cumulative(h.grid.s_nodes) - np.abs(cumulative_I(h).values))
        rep["cumulative_identity_max"] = float(np.max(gap))
        rep["cumulative"] = {
            "s": h.grid.s_nodes.tolist(),
            "I_h": cumulative_I(h).values.tolist(),
            "I_flip": fp.cumulative(h.grid.s_nodes).tolist(),
        }
    return rep


def cmd_transform(cfg: RunConfig) -> int:
    if cfg.input is None or cfg.op is None:
        raise InvalidInput("transform needs an op and an input CSV")
    h = read_profile_input(cfg, cfg.input)
    ops = {
        "star": star_transform,
        "schwarz": schwarz_symmetrization,
        "flip": flip_profile,
        "rearrange": decreasing_rearrangement,
    }
    try:
        prof = ops[cfg.op](h)
    except INPUT_ERRORS as exc:
        raise InvalidInput(str(exc)) from exc
    report = transform_report(cfg.op, h, prof)
    if cfg.format == "json":
        report["profile"] = {"breakpoints": prof.breakpoints.tolist(), "values": prof.values.tolist()}
        text = _dumps(report)
        if cfg.out is None:
            sys.stdout.write(text)
        else:
            _write(cfg.out, text)
    elif cfg.out is None:
        sys.stdout.write(prof.to_csv())
    else:
        _write(cfg.out, prof.to_csv())
        _write(_sidecar(cfg.out), _dumps(report))
    return EXIT_OK


# ----------------------------------------------------------------------------
# verify, counterexample, symmetry test


def _emit_reports(cfg: RunConfig, suite_cfg: vs.SuiteConfig, reports: list[vs.CheckReport]) -> int:
    for rep in reports:
        print(rep.line())
    text = vs.report_json(suite_cfg, reports) + "\n"
    if cfg.out is not None:
        _write(cfg.out, text)
    elif cfg.format == "json":
        sys.stdout.write(text)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAILED


def _suite_config(cfg: RunConfig, raw: dict) -> vs.SuiteConfig:
    try:
        base = vs.SuiteConfig.from_dict({**raw, "seed": cfg.seed if cfg.seed else raw.get("seed", 42)})
    except TypeError as exc:
        raise InvalidInput(f"bad matrix entry: {exc}") from exc
    if cfg.suite == "all":
        return base
    if cfg.suite == "matrix":
        return vs.SuiteConfig(matrix=base.matrix, static_checks=(), seed=base.seed, samples=base.samples)
    return vs.SuiteConfig(matrix=(), static_checks=(cfg.suite,), seed=base.seed, samples=base.samples)


def cmd_verify(cfg: RunConfig, raw: dict) -> int:
    if cfg.suite not in SUITES:
        raise InvalidInput(f"unknown suite {cfg.suite!r}")
    suite_cfg = _suite_config(cfg, raw)
    return _emit_reports(cfg, suite_cfg, vs.run_all(suite_cfg))


def cmd_counterexample(cfg: RunConfig) -> int:
    if cfg.points < 10_000:
        raise InvalidInput("counterexample needs at least 10000 points")
    rep = vs.run_counterexample(cfg.points)
    v = rep.values
    print(f"A = {v['A']:.6f}")
    print(f"B = {v['B']:.6f}")
    print(rep.line())
    if cfg.out is not None or cfg.format == "json":
        text = _dumps(rep.to_dict())
        if cfg.out is not None:
            _write(cfg.out, text)
        else:
            sys.stdout.write(text)
    return EXIT_OK if rep.passed else EXIT_FAILED


def load_solution(csv_path: str, report_path: str | None = None) -> MinResult:
    """Rebuild a minimizer result from ``solve`` output."""
    side = Path(report_path) if report_path else _sidecar(csv_path)
    try:
        meta = json.loads(side.read_text())
        text = Path(csv_path).read_text()
    except (OSError, ValueError) as exc:
        raise InvalidInput(f"cannot read solution files: {exc}") from exc
    try:
        dom = meta["domain"]
        kind = DomainKind(dom["kind"], dom["N"], dom["delta"])
        e = meta["exponents"]
        exps = make_exponents(e["p"], e["q"], kind.N)
        grid = make_grid(kind, meta["nodes"])
        lines = text.strip().splitlines()
        if lines[0].strip() != "r,f,g,u,v":
            raise PreconditionError("expected header 'r,f,g,u,v'")
        data = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:]])
        if data.shape != (grid.n_cells, 5) or not np.allclose(data[:, 0], grid.midpoints, rtol=0, atol=1e-12):
            raise PreconditionError("solution rows do not match the recorded grid")
        pair = DualPair.from_arrays(grid, data[:, 1], data[:, 2], exps)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInput(f"bad solution files: {exc}") from exc
    sol = recover_solution(pair)
    run = meta.get("run", {})
    return MinResult(
        pair=pair,
        solution=sol,
        phi_value=sol.diagnostics.phi,
        iterations=int(run.get("iterations", 0)),
        converged=bool(run.get("converged", False)),
        history=[],
    )


def cmd_symmetry_test(cfg: RunConfig) -> int:
    if cfg.input is None:
        raise InvalidInput("symmetry-test needs a solution CSV")
    res = load_solution(cfg.input, cfg.report)
    reports = []
    try:
        for eps in (1e-2, 1e-3):
            rep = vs.second_variation_test(res, eps)
            reports.append(vs._relabel(rep, f"eps={eps:g}"))
    except (PreconditionError, UnsupportedError) as exc:
        raise InvalidInput(str(exc)) from exc
    for rep in reports:
        print(f"{rep.line()}  integral {rep.values['integral']:.10g}")
    signs = {np.sign(r.values["integral"]) for r in reports}
    ok = all(r.passed for r in reports) and len(signs) == 1
    if cfg.out is not None:
        _write(cfg.out, _dumps({"checks": [r.to_dict() for r in reports], "passed": ok}))
    return EXIT_OK if ok else EXIT_FAILED


def main(argv: list[str] | None = None) -> int:
    ap = _parser()
    args = ap.parse_args(argv)
    try:
        cfg = _config(args)
        raw = json.loads(Path(args.config).read_text()) if args.config else {}
        if args.command == "solve":
            return cmd_solve(cfg)
        if args.command == "transform":
            return cmd_transform(cfg)
        if args.command == "verify":
            return cmd_verify(cfg, raw)
        if args.command == "counterexample":
            return cmd_counterexample(cfg)
        return cmd_symmetry_test(cfg)
    except InvalidInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
