"""Command line interface.

Every subcommand reads a JSON parameter document (``-m model.json``) and
writes a JSON report to stdout (or ``--out``).  Grids go to CSV files in the
output directory.  Exit codes: 0 success, 1 domain or validation error,
2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import bvp, curve, gluing, inversion, simulate
from .model import ModelError, ModelParams, load_params, mass_constants

__all__ = ["RunConfig", "dispatch", "emit_report", "format_float", "main", "report_schema"]

log = logging.getLogger("wedgerbm")

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2

# per-subcommand tolerance when --tol is not given
DEFAULT_TOL = {"transform": 1e-10, "density": 1e-4, "boundary": 1e-5}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    model: Path
    command: str
    out: Path | None = None
    tol: float | None = None
    verbosity: int = 0
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.tol is None:
            self.tol = DEFAULT_TOL.get(self.command, 1e-8)
        if not 0.0 < self.tol <= 1e-2:
            raise UsageError(f"--tol must lie in (0, 1e-2], got {self.tol}")
        if not self.model.is_file():
            raise UsageError(f"model file not found: {self.model}")
        if self.out is not None:
            self.out.mkdir(parents=True, exist_ok=True)
            if not os.access(self.out, os.W_OK):
                raise UsageError(f"output directory not writable: {self.out}")


# -- deterministic output --------------------------------------------------------
def format_float(x: float) -> float | None:
    """Round to 12 significant digits; non-finite values become ``None``."""
    if not math.isfinite(x):
        return None
    return float(f"{x:.12g}")


def _plain(obj):
    """Recursively convert numpy/complex/enum values into JSON-ready objects."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return format_float(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": format_float(obj.real), "im": format_float(obj.imag)}
    if hasattr(obj, "value") and isinstance(obj.value, str):
        return obj.value
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def _csv_cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        f = format_float(float(v))
        return "nan" if f is None else repr(f)
    return str(v)


def emit_report(results: dict, fmt: str = "json", path: Path | None = None,
                header: list[str] | None = None) -> str:
    """Serialize ``results`` byte-stably and write it to ``path`` (if given).

    ``fmt="json"`` dumps a dict with sorted keys; ``fmt="csv"`` expects
    ``results["rows"]`` (a list of sequences) and a ``header``.
    """
    if fmt == "json":
        text = json.dumps(_plain(results), sort_keys=True, indent=2) + "\n"
    elif fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in results["rows"]:
            w.writerow([_csv_cell(v) for v in row])
        text = buf.getvalue()
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if path is not None:
        try:
            Path(path).write_text(text)
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc.strerror}") from exc
    return text


def report_schema() -> dict:
    """The JSON schema every report satisfies."""
    return json.loads(resources.files("wedgerbm").joinpath("report.schema.json").read_text())


# -- subcommands -------------------------------------------------------------------
def _header(cfg: RunConfig, params: ModelParams) -> dict:
    return {"command": cfg.command, "params": params.to_dict(), "notes": list(params.notes)}


def _complex_list(text: str) -> list[complex]:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"--at expects comma-separated reals, got {text!r}") from None
    if len(vals) not in (2, 4):
        raise UsageError("--at expects p_re,p_im or p_re,p_im,q_re,q_im")
    return [complex(vals[i], vals[i + 1]) for i in range(0, len(vals), 2)]


def cmd_validate(cfg: RunConfig, params: ModelParams) -> tuple[dict, int]:
    a0, b0 = mass_constants(params)
    bp = curve.branch_points(params)
    out = _header(cfg, params)
    out.update(beta=params.beta, A0=a0, B0=b0, p0=bvp.pole_p0(params), chi=bvp.index_chi(params, bp),
               branch_points={"p1": bp.p1, "p2": bp.p2, "q1": bp.q1, "q2": bp.q2})
    return out, EXIT_OK


def cmd_curve(cfg: RunConfig, params: ModelParams) -> tuple[dict, int]:
    o = cfg.options
    bp = curve.branch_points(params)
    hb = curve.bvp_contour(params, o["n"])
    out = _header(cfg, params)
    out.update(branch_points={"p1": bp.p1, "p2": bp.p2, "q1": bp.q1, "q2": bp.q2},
               side=hb.side, vertex=hb.vertex,
               max_hyperbola_residual=float(np.max(np.abs(curve.hyperbola_residual(params, hb.upper)))))
    if cfg.out is not None:
        rows = [(q, t.real, t.imag) for q, t in zip(hb.q, hb.upper)]
        emit_report({"rows": rows}, "csv", cfg.out / "contour.csv", ["q", "re_t", "im_t"])
        s = np.exp(1j * np.linspace(0.0, 2 * math.pi, o["n"], endpoint=False))
        p, q = curve.uniformize(params, s, bp)
        rows = [(a.real, a.imag, b.real, b.imag, c.real, c.imag) for a, b, c in zip(s, p, q)]
        emit_report({"rows": rows}, "csv", cfg.out / "uniformization.csv",
                    ["s_re", "s_im", "p_re", "p_im", "q_re", "q_im"])
        w = gluing.glue_w(params, hb.upper[1:])
        rows = [(t.real, t.imag, v.real, v.imag) for t, v in zip(hb.upper[1:], w)]
        emit_report({"rows": rows}, "csv", cfg.out / "gluing.csv",
                    ["p_re", "p_im", "w_re", "w_im"])
        out["files"] = ["contour.csv", "gluing.csv", "uniformization.csv"]
    return out, EXIT_OK


def cmd_transform(cfg: RunConfig, params: ModelParams) -> tuple[dict, int]:
    o = cfg.options
    pts = _complex_list(o["at"])
    which = o["which"]
    if which == "L":
        if len(pts) != 2:
            raise UsageError("--which L needs --at p_re,p_im,q_re,q_im")
        tv = bvp.eval_L(params, pts[0], pts[1], cfg.tol)
    else:
        if len(pts) != 1:
            raise UsageError(f"--which {which} needs --at re,im")
        tv = (bvp.eval_A if which == "A" else bvp.eval_B)(params, pts[0], cfg.tol)
    out = _header(cfg, params)
    out.update(which=which, at=pts, value_re=tv.value.real, value_im=tv.value.imag,
               est_error=tv.estimated_error, domain_tag=tv.domain_tag.value)
    return out, EXIT_OK


def _grid_rows(g: inversion.DensityGrid):
    if len(g.axes) == 1:
        return [(z, v) for z, v in zip(g.coords(0), g.values)]
    x, y = g.coords(0), g.coords(1)
    return [(x[i], y[j], g.values[i, j]) for i in range(len(x)) for j in range(len(y))]


def cmd_density(cfg: RunConfig, params: ModelParams) -> tuple[dict, int]:
    o = cfg.options
    ax = (o["zmin"], o["zmax"], o["step"])
    g = inversion.pi_grid(params, ax, ax, cfg.tol)
    out = _header(cfg, params)
    out.update(axes=g.axes, diagnostics=g.diagnostics, mass=g.mass())
    if cfg.out is not None:
        emit_report({"rows": _grid_rows(g)}, "csv", cfg.out / "density.csv", ["z1", "z2", "pi"])
        emit_report(out, "json", cfg.out / "density.json")
    return out, EXIT_OK


def cmd_boundary(cfg: RunConfig, params: ModelParams) -> tuple[dict, int]:
    o = cfg.options
    g = inversion.nu_grid(params, o["which"], o["zmin"], o["zmax"], o["step"], cfg.tol)
    idx = 0 if o["which"] == "nu1" else 1
    target = mass_constants(params)[idx]
    out = _header(cfg, params)
    out.update(which=o["which"], axes=g.axes, diagnostics=g.diagnostics, mass=g.mass(),
               mass_target=target, mass_relative_error=abs(g.mass() - target) / target)
    if cfg.out is not None:
        emit_report({"rows": _grid_rows(g)}, "csv", cfg.out / f"{o['which']}.csv",
                    ["z1" if idx == 0 else "z2", o["which"]])
        emit_report(out, "json", cfg.out / f"{o['which']}.json")
    return out, EXIT_OK


def _sim_config(o: dict) -> simulate.SimConfig:
    return simulate.SimConfig(dt=o["dt"], horizon=o["horizon"], n_paths=o["paths"], seed=o["seed"])


def _sim_summary(meas: simulate.EmpiricalMeasures) -> dict:
    m, se = meas.boundary_masses()
    c = meas.config
    return {"config": {"dt": c.dt, "horizon": c.horizon, "burn_in": c.burn, "n_paths": c.n_paths,
                       "seed": c.seed, "scheme": c.scheme.value,
                       "corner_policy": c.corner_policy.value},
            "n_batches": meas.n_batches, "steps": meas.steps, "rejections": meas.rejections,
            "overflow": float(meas.overflow.mean()),
            "boundary_mass": {"A0_hat": m[0], "B0_hat": m[1], "se": se},
            "mean_z": meas.mean_z.mean(axis=0)}


def cmd_simulate(cfg: RunConfig, params: ModelParams) -> tuple[dict, int]:
    meas = simulate.run(params, _sim_config(cfg.options))
    out = _header(cfg, params)
    out.update(_sim_summary(meas))
    if cfg.out is not None:
        c = meas.centers
        m, se = meas.density()
        rows = [(c[i], c[j], m[i, j], se[i, j]) for i in range(len(c)) for j in range(len(c))]
        emit_report({"rows": rows}, "csv", cfg.out / "histogram.csv", ["z1", "z2", "pi", "se"])
        w = meas.config.hist.bin_width
        for name, b in (("nu1", meas.b1), ("nu2", meas.b2)):
            bm, bs = meas._mean_se(b / w)
            emit_report({"rows": list(zip(c, bm, bs))}, "csv", cfg.out / f"{name}_hist.csv",
                        ["z", name, "se"])
        emit_report(out, "json", cfg.out / "report.json")
    return out, EXIT_OK


def cmd_check(cfg: RunConfig, params: ModelParams) -> tuple[dict, int]:
    meas = simulate.run(params, _sim_config(cfg.options))
    rep = simulate.validation_report(params, meas, cfg.tol, density=cfg.options["density"])
    need = math.ceil(0.96 * rep["n_points"])
    ok = rep["passed"] >= need and rep["F_passed"] >= need
    if "density" in rep:
        ok = ok and rep["density"]["ok"]
    out = _header(cfg, params)
    out.update(_sim_summary(meas), report=rep, ok=ok)
    if cfg.out is not None:
        emit_report(out, "json", cfg.out / "check.json")
    return out, EXIT_OK if ok else EXIT_DOMAIN


def cmd_compare(cfg: RunConfig, params: ModelParams) -> tuple[dict, int]:
    out = _header(cfg, params)
    out.update(bvp.comparison_table(params))
    return out, EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "curve": cmd_curve,
    "transform": cmd_transform,
    "density": cmd_density,
    "boundary": cmd_boundary,
    "simulate": cmd_simulate,
    "check": cmd_check,
    "compare": cmd_compare,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-m", "--model", required=True, type=Path, help="parameter JSON file")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--tol", type=float, default=None,
                        help="tolerance in (0, 1e-2]; default depends on the subcommand")
    common.add_argument("-v", "--verbose", action="count", default=0)

    ap = argparse.ArgumentParser(prog="wedgerbm",
                                 description="Stationary reflected Brownian motion in wedges.")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common], help="check parameters, print beta, A0, B0, p0, chi")
    p = sub.add_parser("curve", parents=[common], help="branch points and contour samples")
    p.add_argument("--n", type=int, default=200)
    p = sub.add_parser("transform", parents=[common], help="evaluate A, B or L")
    p.add_argument("--at", required=True, help="p_re,p_im[,q_re,q_im]")
    p.add_argument("--which", choices=["A", "B", "L"], default="A")
    for name in ("density", "boundary"):
        p = sub.add_parser(name, parents=[common], help=f"invert to the {name} density on a grid")
        p.add_argument("--zmin", type=float, default=-4.0 if name == "density" else -6.0)
        p.add_argument("--zmax", type=float, default=4.0 if name == "density" else 0.0)
        p.add_argument("--step", type=float, default=0.1)
        if name == "boundary":
            p.add_argument("--which", choices=["nu1", "nu2"], default="nu1")
    for name in ("simulate", "check"):
        p = sub.add_parser(name, parents=[common],
                           help="Monte Carlo run" if name == "simulate" else "simulation vs analytic")
        p.add_argument("--horizon", type=float, default=1e4)
        p.add_argument("--dt", type=float, default=1e-3)
        p.add_argument("--paths", type=int, default=32)
        p.add_argument("--seed", type=int, default=0)
        if name == "check":
            p.add_argument("--density", action="store_true", help="also compare densities")
    sub.add_parser("compare", parents=[common], help="three-quarter vs quarter plane table")
    return ap


def dispatch(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as exc:  # argparse already printed the usage text
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.WARNING - 10 * min(ns.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    opts = {k: v for k, v in vars(ns).items()
            if k not in ("model", "out", "tol", "verbose", "command")}
    try:
        cfg = RunConfig(ns.model, ns.command, ns.out, ns.tol, ns.verbose, opts)
    except UsageError as exc:
        ap.print_usage(sys.stderr)
        print(f"wedgerbm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        params = load_params(cfg.model)
        result, code = COMMANDS[cfg.command](cfg, params)
    except UsageError as exc:
        ap.print_usage(sys.stderr)
        print(f"wedgerbm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ModelError, json.JSONDecodeError) as exc:
        print(f"wedgerbm: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"wedgerbm: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    sys.stdout.write(emit_report(result))
    return code


def main() -> None:
    sys.exit(dispatch())
