"""Command-line entry point: ``roadspread CONFIG --out DIR``.

One configuration file per run. Every run writes ``summary.json``; commands
add their own CSV and plot files. Exit status: 0 success, 2 configuration
error, 3 solver failure, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__, _backend
from . import analysis, dispersion, sim
from ._io import atomic_write_text, config_hash, csv_text, emit_plot_bundle, json_text
from .config import (
    ConfigError,
    apply_overrides,
    control_of,
    kernel_from_block,
    load_config,
    parse_overrides,
    params_of,
    spec_of,
    validate,
)
from .errors import DomainError, KernelError, SolverError

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4


class Run:
    """Output directory plus the list of files written so far."""

    def __init__(self, out: Path, cfg: dict, threads: int):
        self.out = out
        self.cfg = cfg
        self.threads = threads
        self.files: list[str] = []

    def write(self, name: str, text: str) -> None:
        atomic_write_text(self.out / name, text)
        self.files.append(name)

    def bundle(self, table, style, stem, **extras) -> None:
        emit_plot_bundle(table, style, self.out, stem, **extras)
        self.files += [f"{stem}.dat", f"{stem}.gp"]


def _cmd_speed(run: Run, params, spec, control) -> dict:
    res = dispersion.spreading_speed(params, spec, control)
    out = {"speed": res.to_record()}
    if res.lambda_star is not None:
        chk = dispersion.check_inequality_chain(res, params)
        out["chain"] = {"ok": chk.ok, "slack_low": chk.slack_low, "slack_high": chk.slack_high}
    return out


def _cmd_curves(run: Run, params, spec, control) -> dict:
    opts = run.cfg.get("options", {})
    tab = dispersion.curve_sample(params, spec, opts["c"], opts.get("n", 200), control, opts.get("margin"))
    run.write("curves.csv", csv_text(["lambda", "psi1", "psi2"], tab.rows()))
    run.bundle({"lambda": tab.lam, "psi1": tab.psi1, "psi2": tab.psi2}, "curves", "curves")
    return {"c": tab.c, "n": len(tab.lam), "psi2_min": float(tab.psi2.min()), "psi1_max": float(tab.psi1.max())}


def _cmd_sweep(run: Run, params, spec, control) -> dict:
    opts = run.cfg["options"]
    rep = analysis.sweep_D(params, opts["d_values"], spec, control, workers=run.threads)
    rows = rep.rows()
    run.write("sweep_d.csv", csv_text(["big_d", "c_star", "ratio", "distance_to_c_inf"], rows))
    run.bundle({"big_d": [r[0] for r in rows], "c_star": [r[1] for r in rows], "ratio": [r[2] for r in rows]},
               "sweep", "sweep_d", c_inf=rep.c_inf)
    return rep.to_record()


def _cmd_compare(run: Run, params, spec, control) -> dict:
    opts = run.cfg.get("options", {})
    kernels = {name: kernel_from_block(b, params.mu_bar) for name, b in run.cfg["kernels"].items()}
    base = opts.get("mollify_base")
    if base is not None and base not in kernels:
        raise ConfigError(f"mollify_base {base!r} is not one of the kernels")
    rep = analysis.rpsl2_compare(params, kernels, opts.get("eps_ladder", (0.4, 0.2, 0.1)),
                                 kernels[base] if base else None, control)
    run.write("compare_kernels.csv", csv_text(["kernel", "c_star", "c_star_minus_c_star_0"], rep.rows()))
    return rep.to_record()


def _cmd_perturb(run: Run, params, spec, control) -> dict:
    opts = run.cfg.get("options", {})
    ups = kernel_from_block(run.cfg["upsilon"], 1.0)
    ctl = replace(control, c_rtol=min(control.c_rtol, 1e-11), grid=replace(control.grid, extrapolate=True))
    rep = analysis.perturbation_study(params, ups, opts.get("eps_ladder", (0.1, 0.05, 0.02)), ctl)
    run.write("perturb.csv", csv_text(["eps", "c_star_eps", "delta"], rep.rows()))
    return rep.to_record()


def _cmd_selfsim(run: Run, params, spec, control) -> dict:
    opts = run.cfg.get("options", {})
    base = kernel_from_block(run.cfg["base_kernel"], params.nu_bar)
    ladder = opts.get("eps_ladder", (0.08, 0.04, 0.02, 0.01))
    grid = replace(control.grid, extrapolate=True)
    if "p_value" in opts:
        rep = analysis.dpsi2_deps_selfsimilar(params, math.nan, math.nan, base, ladder, grid, p_value=opts["p_value"])
    elif "c" in opts and "lambda" in opts:
        rep = analysis.dpsi2_deps_selfsimilar(params, opts["c"], opts["lambda"], base, ladder, grid)
    else:
        raise ConfigError("selfsim needs options.p_value or both options.c and options.lambda")
    run.write("selfsim.csv", csv_text(["eps", "psi2", "difference_quotient"], rep.rows()))
    return rep.to_record()


def _sim_config(run: Run, params, spec) -> sim.SimConfig:
    opts = dict(run.cfg.get("options", {}))
    init = sim.InitialData(**opts.pop("initial", {}))
    keys = ("lx", "ly", "nx", "ny", "t_end", "dt", "snapshot_stride", "trace_interval", "theta",
            "stop_at_boundary")
    return sim.SimConfig(params, spec, initial=init, **{k: opts[k] for k in keys if k in opts})


def _cmd_simulate(run: Run, params, spec, control) -> dict:
    cfg = _sim_config(run, params, spec)
    res = sim.simulate(cfg)
    head = cfg.header()
    tr = res.trace
    run.write("front.csv", csv_text(["t", "x_f"], zip(tr.times, tr.positions), head))
    run.write("road.csv", csv_text(["x", "u"], zip(res.x, res.u), head))
    rows = ((x, y, res.v[j, i]) for j, y in enumerate(res.y) for i, x in enumerate(res.x))
    run.write("field.csv", csv_text(["x", "y", "v"], rows, head))
    if len(tr.times):
        run.bundle({"t": tr.times, "x_f": tr.positions}, "front", "front")
    fit = tr.fit
    return {"t_final": res.t, "steps": res.steps, "dt": res.dt, "U_s": res.stationary.u,
            "front_final": float(tr.positions[-1]) if len(tr.positions) else None,
            "fitted_speed": fit.speed if fit else None, "r2": fit.r2 if fit else None,
            "slope_drift": fit.drift if fit else None,
            "fit_accepted": fit.accepted if fit else False, "diagnostic": fit.diagnostic if fit else "no fit",
            "warnings": res.warnings, "grid": {"hx": cfg.hx, "hy": cfg.hy}}


def _cmd_stationary(run: Run, params, spec, control) -> dict:
    opts = run.cfg.get("options", {})
    st = sim.stationary_state(params, spec, opts.get("ly", 10.0), opts.get("ny", 201), opts.get("tol", 1e-10))
    run.write("stationary.csv", csv_text(["y", "v"], zip(st.ygrid, st.v)))
    return {"U_s": st.u, "V_s_max": float(st.v.max()), "V_s_min": float(st.v.min()),
            "V_s_at_road": float(st.v[st.v.size // 2]), "steps": st.steps, "residual": st.residual}


def _cmd_cinf(run: Run, params, spec, control) -> dict:
    c = analysis.c_infinity(params.d, params.growth, params.mu_bar, spec.nu, spec.mu, control)
    lo, hi = analysis.cinf_chain(c, params.growth, params.mu_bar)
    return {"c_inf": c, "chain_slack_low": lo, "chain_slack_high": hi}


COMMAND_TABLE = {
    "speed": _cmd_speed,
    "curves": _cmd_curves,
    "sweep-d": _cmd_sweep,
    "compare-kernels": _cmd_compare,
    "perturb": _cmd_perturb,
    "selfsim": _cmd_selfsim,
    "simulate": _cmd_simulate,
    "stationary": _cmd_stationary,
    "cinf": _cmd_cinf,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="roadspread", description="Road-field spreading speed computations.")
    ap.add_argument("config", help="YAML or JSON run configuration")
    ap.add_argument("--out", default="out", help="output directory (created if missing)")
    ap.add_argument("--threads", type=int, default=1, help="worker threads for parameter sweeps")
    ap.add_argument("--seed", type=int, default=0, help="recorded in the summary; all solvers are deterministic")
    ap.add_argument("--tolerance-overrides", default=None,
                    help="inline JSON or file with search/grid tolerance keys")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return ap


def _error(out: Path | None, code: int, exc: BaseException) -> int:
    rec = {"status": "error", "exit_code": code, "error_type": type(exc).__name__, "message": str(exc)}
    print(json.dumps(rec, sort_keys=True), file=sys.stderr)
    if out is not None:
        try:
            atomic_write_text(out / "summary.json", json_text(rec))
        except OSError:
            pass
    return code


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        return _error(None, EXIT_IO, exc)
    try:
        raw = load_config(args.config)
        cfg = apply_overrides(raw, parse_overrides(args.tolerance_overrides))
        validate(cfg)
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        params = params_of(cfg)
        spec = spec_of(cfg, params)
        spec.check_masses(params)
        control = control_of(cfg)
    except OSError as exc:
        return _error(out, EXIT_IO, exc)
    except (ConfigError, KernelError, DomainError) as exc:
        return _error(out, EXIT_CONFIG, exc)
    r = Run(out, cfg, args.threads)
    try:
        results = COMMAND_TABLE[cfg["command"]](r, params, spec, control)
    except ConfigError as exc:
        return _error(out, EXIT_CONFIG, exc)
    except (SolverError, DomainError, KernelError, ValueError) as exc:
        return _error(out, EXIT_SOLVER, exc)
    except OSError as exc:
        return _error(out, EXIT_IO, exc)
    summary = {
        "status": "ok",
        "command": cfg["command"],
        "config": cfg,
        "config_hash": config_hash(cfg),
        "kind": spec.kind,
        "params": params.to_dict(),
        "c_kpp": params.c_kpp(),
        "search": {k: v for k, v in control.to_dict().items() if k != "grid"},
        "grid": control.grid.to_dict(),
        "backend": _backend.BACKEND,
        "seed": args.seed,
        "threads": args.threads,
        "version": __version__,
        "results": results,
        "outputs": sorted(r.files + ["summary.json"]),
    }
    try:
        atomic_write_text(out / "summary.json", json_text(summary))
    except OSError as exc:
        return _error(out, EXIT_IO, exc)
    return EXIT_OK


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
