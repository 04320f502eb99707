"""Command-line front end: strategy runs, comparisons, analysis and certificates.

Exit codes: 0 ok, 2 configuration error, 3 solver/validation failure (including
a sweep that did not converge), 4 I/O error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import dataclasses
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import (
    analysis_report,
    basic_reproduction_number,
    contraction_certificate,
    disease_free_equilibrium,
    stability_at,
    write_report,
)
from .eigen import EigenConvergenceError
from .frac_solver import (
    DivergenceError,
    Grid,
    KernelNormalization,
    SchemeOptions,
    Trajectory,
    solve_forward,
)
from .model import (
    COMPARTMENTS,
    ModelParams,
    SingularPopulationError,
    StateVector,
    make_rhs,
    validate_state,
)
from .optimal_control import SweepOptions, Weights, fbsm_solve, objective

__all__ = [
    "STRATEGY_MASKS",
    "StrategySpec",
    "RunConfig",
    "RunArtifact",
    "RunResult",
    "ConfigError",
    "ValidationFailure",
    "load_config",
    "run_strategy",
    "compare_strategies",
    "emit_csv",
    "read_csv",
    "main",
]

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4

STRATEGY_MASKS = {
    "1.1": (True, False, False),
    "1.2": (False, True, False),
    "1.3": (False, False, True),
    "2.1": (True, True, False),
    "2.2": (True, False, True),
    "2.3": (False, True, True),
    "3": (True, True, True),
    "uncontrolled": (False, False, False),
}

CSV_HEADER = ("t",) + COMPARTMENTS + ("u1", "u2", "u3")

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


class ValidationFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class StrategySpec:
    id: str
    mask: tuple
    alpha: float = 0.9
    weights: Weights = Weights()

    def __post_init__(self):
        expected = STRATEGY_MASKS.get(self.id)
        if expected is None:
            raise ConfigError(f"unknown strategy {self.id!r}; choose from {', '.join(STRATEGY_MASKS)}")
        if tuple(bool(m) for m in self.mask) != expected:
            raise ConfigError(f"strategy {self.id} requires mask {expected}")

    @classmethod
    def from_id(cls, sid: str, alpha: float = 0.9, weights: Weights = Weights()):
        if sid not in STRATEGY_MASKS:
            raise ConfigError(f"unknown strategy {sid!r}; choose from {', '.join(STRATEGY_MASKS)}")
        return cls(sid, STRATEGY_MASKS[sid], alpha, weights)


_STATE_KEYS = {f"{c.lower()}0": c for c in COMPARTMENTS}
_SWEEP_KEYS = ("max_iters", "tol", "relaxation", "control_sign")
_SCHEME_KEYS = ("nonlocal_term", "corrector_sign")
_GRID_KEYS = ("t_f", "h")


@dataclass(frozen=True)
class RunConfig:
    params: ModelParams = ModelParams()
    x0: StateVector = StateVector()
    grid: Grid = Grid()
    weights: Weights = Weights()
    sweep: SweepOptions = SweepOptions()
    scheme: SchemeOptions = SchemeOptions()
    norm: KernelNormalization = KernelNormalization.UNIT


def allowed_config_keys():
    return (
        set(ModelParams.field_names())
        | set(_STATE_KEYS)
        | {"w1", "w2", "w3"}
        | set(_SWEEP_KEYS)
        | set(_SCHEME_KEYS)
        | set(_GRID_KEYS)
        | {"normalization"}
    )


def parse_config_text(text: str) -> RunConfig:
    """Parse flat ``key = value`` text. Section headers are tolerated and ignored."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    body = text if text.lstrip().startswith("[") else "[config]\n" + text
    try:
        cp.read_string(body)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    raw = {}
    for section in cp.sections():
        for key, value in cp.items(section):
            if key in raw:
                raise ConfigError(f"duplicate key {key!r}")
            raw[key] = value.strip()
    unknown = sorted(set(raw) - allowed_config_keys())
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    return _build_config(raw)


def _num(key, value, kind=float):
    try:
        return kind(value)
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot read {value!r} as {kind.__name__}") from exc


def _build_config(raw: dict, base: RunConfig = RunConfig()) -> RunConfig:
    try:
        p_kw = {k: _num(k, v) for k, v in raw.items() if k in ModelParams.field_names()}
        params = dataclasses.replace(base.params, **p_kw)
        x_kw = {_STATE_KEYS[k]: _num(k, v) for k, v in raw.items() if k in _STATE_KEYS}
        x0 = dataclasses.replace(base.x0, **x_kw)
        g_kw = {k: _num(k, raw[k]) for k in _GRID_KEYS if k in raw}
        grid = dataclasses.replace(base.grid, **g_kw)
        w_kw = {k: _num(k, raw[k]) for k in ("w1", "w2", "w3") if k in raw}
        weights = dataclasses.replace(base.weights, **w_kw)
        s_kw = {}
        if "max_iters" in raw:
            s_kw["max_iters"] = _num("max_iters", raw["max_iters"], int)
        for k in ("tol", "relaxation"):
            if k in raw:
                s_kw[k] = _num(k, raw[k])
        if "control_sign" in raw:
            s_kw["control_sign"] = raw["control_sign"]
        sweep = dataclasses.replace(base.sweep, **s_kw)
        sc_kw = {k: raw[k] for k in _SCHEME_KEYS if k in raw}
        scheme = dataclasses.replace(base.scheme, **sc_kw)
        norm = KernelNormalization(raw.get("normalization", base.norm.value))
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    if min(x0.to_array()) < 0:
        raise ConfigError("initial compartments must be non-negative")
    return RunConfig(params, x0, grid, weights, sweep, scheme, norm)


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    return parse_config_text(text)


# --------------------------------------------------------------------- output


def _row(values):
    return ",".join(repr(float(v)) for v in values)


def emit_csv(traj: Trajectory, controls, path) -> None:
    """Write ``t, 8 compartments, u1..u3`` with round-trip (``repr``) floats."""
    t = np.asarray(traj.t)
    x = np.asarray(traj.x)
    u = np.zeros((len(t), 3)) if controls is None else np.asarray(controls, dtype=float)
    if x.shape != (len(t), 8) or u.shape != (len(t), 3):
        raise ValueError("trajectory and controls must be grid-aligned")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(CSV_HEADER) + "\n")
        for i in range(len(t)):
            fh.write(_row((t[i], *x[i], *u[i])) + "\n")


def read_csv(path):
    """Inverse of :func:`emit_csv`: returns ``(t, x, u)`` arrays."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != CSV_HEADER:
            raise ValueError(f"unexpected header {header}")
        data = np.array([[float(v) for v in row] for row in reader])
    data = data.reshape(-1, len(CSV_HEADER))
    return data[:, 0], data[:, 1:9], data[:, 9:12]


def _emit_controls(t, u, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("t,u1,u2,u3\n")
        for i in range(len(t)):
            fh.write(_row((t[i], *u[i])) + "\n")


def _plot_series(series: dict, t, path_stem: Path, title_prefix=""):
    """One SVG line chart per compartment; ``series`` maps label -> (N+1, 8)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "mpox-abc"
    paths = []
    for c, name in enumerate(COMPARTMENTS):
        fig, ax = plt.subplots(figsize=(6, 4))
        for label, x in series.items():
            ax.plot(t, x[:, c], label=label, linewidth=1.2)
        ax.set_xlabel("t (months)")
        ax.set_ylabel(name)
        ax.set_title(f"{title_prefix}{name}")
        ax.legend(fontsize=8)
        fig.tight_layout()
        out = Path(f"{path_stem}_{name}.svg")
        fig.savefig(out, format="svg", metadata={"Date": None})
        plt.close(fig)
        paths.append(out)
    return paths


@dataclass(frozen=True)
class RunArtifact:
    trajectory_csv: Path
    controls_csv: Path
    summary: Path
    plots: tuple = ()


@dataclass(frozen=True)
class RunResult:
    spec: StrategySpec
    artifact: RunArtifact
    objective: float
    iterations: int
    converged: bool
    peak_I_h: float
    peak_E_h: float
    final_R_h: float
    x: np.ndarray = field(repr=False, default=None)


def _solve(spec: StrategySpec, cfg: RunConfig):
    params = cfg.params.with_alpha(spec.alpha) if spec.alpha != cfg.params.alpha else cfg.params
    if spec.id == "uncontrolled":
        U = np.zeros((cfg.grid.N + 1, 3))
        traj = solve_forward(
            make_rhs(params), cfg.x0.to_array(), cfg.grid, params.alpha, U, cfg.norm, cfg.scheme
        )
        return params, traj, U, objective(traj, U, spec.weights), 0, True
    sweep = dataclasses.replace(cfg.sweep, strategy_mask=spec.mask)
    sol = fbsm_solve(params, cfg.x0, cfg.grid, spec.weights, cfg.norm, cfg.scheme, sweep)
    return params, sol.state, np.asarray(sol.controls), sol.objective, sol.iterations, sol.converged


def run_strategy(spec: StrategySpec, cfg: RunConfig, out_dir, plot: bool = False) -> RunResult:
    """Solve one strategy and write its CSVs and summary into ``out_dir``.

    Raises ``ValidationFailure`` if the trajectory leaves the positive region
    or breaks a population bound that held initially; artifacts are written
    first so the failure can be inspected.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    params, traj, U, J, iters, converged = _solve(spec, cfg)
    art = RunArtifact(out / "trajectory.csv", out / "controls.csv", out / "summary.txt")
    emit_csv(traj, U, art.trajectory_csv)
    _emit_controls(traj.t, U, art.controls_csv)

    report = validate_state(traj.x, params, tol=1e-8)
    dfe = disease_free_equilibrium(params)
    summary = {
        "strategy": spec.id,
        "alpha": params.alpha,
        "w1": spec.weights.w1,
        "w2": spec.weights.w2,
        "w3": spec.weights.w3,
        "J": J,
        "R0": basic_reproduction_number(params, 0.0, 0.0),
        "iterations": iters,
        "converged": converged,
        "stability_margin_dfe": stability_at(params, dfe.state).margin,
        "peak_I_h": float(np.max(traj.x[:, 2])),
        "peak_E_h": float(np.max(traj.x[:, 1])),
        "final_R_h": float(traj.x[-1, 4]),
        "state_valid": report.ok,
    }
    write_report(art.summary, summary)
    if plot:
        plots = _plot_series({spec.id: np.asarray(traj.x)}, traj.t, out / "plot", f"strategy {spec.id}: ")
        art = dataclasses.replace(art, plots=tuple(plots))
    if not report.ok:
        first = (report.negative + report.bound)[0]
        raise ValidationFailure(f"strategy {spec.id}: state check failed at {first}")
    return RunResult(
        spec, art, J, iters, converged,
        summary["peak_I_h"], summary["peak_E_h"], summary["final_R_h"], np.asarray(traj.x),
    )


def _run_member(args):
    spec, cfg, out_dir = args
    return run_strategy(spec, cfg, out_dir)


def compare_strategies(specs, cfg: RunConfig, out_dir, jobs: int = 1, plot: bool = True):
    """Run several strategies, write ``comparison.csv`` and per-compartment plots.

    Member runs go to ``out_dir/<label>/``; duplicated ids get a ``#k`` suffix
    in the table and directory name so nothing is overwritten.
    """
    specs = list(specs)
    if len(specs) < 2:
        raise ConfigError("compare needs at least two strategies")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    labels, seen = [], {}
    for s in specs:
        seen[s.id] = seen.get(s.id, 0) + 1
        labels.append(s.id if seen[s.id] == 1 else f"{s.id}#{seen[s.id]}")
    tasks = [(s, cfg, out / lab.replace("#", "_")) for s, lab in zip(specs, labels)]
    results = []
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_run_member, t) for t in tasks]
            for lab, fut in zip(labels, futures):
                try:
                    results.append(fut.result())
                except Exception as exc:
                    exc.strategy_id = lab
                    raise
    else:
        for lab, t in zip(labels, tasks):
            try:
                results.append(_run_member(t))
            except Exception as exc:
                exc.strategy_id = lab
                raise

    table = out / "comparison.csv"
    with open(table, "w", encoding="utf-8", newline="") as fh:
        fh.write("strategy,J,peak_I_h,peak_E_h,final_R_h,iterations,converged\n")
        for lab, r in zip(labels, results):
            fh.write(
                f"{lab},{r.objective!r},{r.peak_I_h!r},{r.peak_E_h!r},{r.final_R_h!r},"
                f"{r.iterations},{str(r.converged).lower()}\n"
            )
    plots = ()
    if plot:
        t = cfg.grid.times
        plots = tuple(_plot_series({lab: r.x for lab, r in zip(labels, results)}, t, out / "compare"))
    return table, plots, results


# ------------------------------------------------------------------------ CLI


def _build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value parameter file")
    common.add_argument("--alpha", type=float, help="fractional order in (0, 1]")
    common.add_argument("--tf", type=float, help="final time (months)")
    common.add_argument("--step", type=float, help="step size h (months)")
    common.add_argument("--out-dir", help="output root (default: $MPOX_OUT_DIR or ./mpox_out)")
    common.add_argument("--scheme", choices=("ab", "paper"), help="ab: AB-integral scheme; paper: literal fractional Adams variant")
    common.add_argument("--control-sign", choices=("stationarity", "paper"))
    common.add_argument("--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="mpox-abc", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", parents=[common], help="solve one strategy")
    r.add_argument("--strategy", default="3", help=f"one of {', '.join(STRATEGY_MASKS)}")
    r.add_argument("--plot", action="store_true", help="also write per-compartment SVGs")
    c = sub.add_parser("compare", parents=[common], help="run and compare several strategies")
    c.add_argument("--strategy", action="append", help="repeat or comma-separate; default: all eight")
    c.add_argument("--jobs", type=int, default=1, help="parallel member runs")
    c.add_argument("--no-plot", action="store_true")
    sub.add_parser("analyze", parents=[common], help="equilibria, R0 and stability report")
    k = sub.add_parser("certify", parents=[common], help="contraction certificate")
    k.add_argument("--m0", type=float, default=1.0, help="time horizon M0")
    return ap


def _config_from_args(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    raw = {}
    if args.alpha is not None:
        raw["alpha"] = str(args.alpha)
    if args.tf is not None:
        raw["t_f"] = str(args.tf)
    if args.step is not None:
        raw["h"] = str(args.step)
    if args.scheme is not None:
        raw["nonlocal_term"] = "ab_integral" if args.scheme == "ab" else "paper_literal"
    if args.control_sign is not None:
        raw["control_sign"] = "stationarity_minus" if args.control_sign == "stationarity" else "paper_plus"
    cfg = _build_config(raw, cfg) if raw else cfg
    if args.verbose:
        cfg = dataclasses.replace(cfg, sweep=dataclasses.replace(cfg.sweep, verbose=True))
    return cfg


def _out_root(args) -> Path:
    return Path(args.out_dir or os.environ.get("MPOX_OUT_DIR") or "mpox_out")


def _strategy_ids(values):
    if not values:
        return list(STRATEGY_MASKS)
    ids = []
    for v in values:
        ids.extend(s.strip() for s in v.split(",") if s.strip())
    return ids


def _cmd_run(args, cfg):
    spec = StrategySpec.from_id(args.strategy, cfg.params.alpha, cfg.weights)
    res = run_strategy(spec, cfg, _out_root(args) / f"strategy_{spec.id}", plot=args.plot)
    print(f"strategy {spec.id}: J = {res.objective:.10g}, iterations = {res.iterations}, "
          f"converged = {res.converged}")
    print(f"wrote {res.artifact.trajectory_csv}")
    return EXIT_OK if res.converged else EXIT_SOLVER


def _cmd_compare(args, cfg):
    specs = [StrategySpec.from_id(s, cfg.params.alpha, cfg.weights) for s in _strategy_ids(args.strategy)]
    table, _, results = compare_strategies(specs, cfg, _out_root(args), jobs=args.jobs, plot=not args.no_plot)
    print(table.read_text(encoding="utf-8"), end="")
    bad = [r.spec.id for r in results if not r.converged]
    if bad:
        print(f"not converged: {', '.join(bad)}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def _cmd_analyze(args, cfg):
    out = _out_root(args)
    out.mkdir(parents=True, exist_ok=True)
    report = analysis_report(cfg.params)
    path = out / "analysis.txt"
    write_report(path, report)
    print(path.read_text(encoding="utf-8"), end="")
    return EXIT_OK


def _cmd_certify(args, cfg):
    if not args.m0 > 0:
        raise ConfigError("--m0 must be positive")
    cert = contraction_certificate(cfg.params, M0=args.m0, norm=cfg.norm)
    out = _out_root(args)
    out.mkdir(parents=True, exist_ok=True)
    rep = {"alpha": cfg.params.alpha, "M0": cert.M0}
    for i, (m, li, fi) in enumerate(zip(cert.bounds, cert.lipschitz, cert.factors), start=1):
        rep[f"m{i}"] = m
        rep[f"L{i}"] = li
        rep[f"factor{i}"] = fi
    rep["satisfied"] = cert.satisfied
    path = out / "certificate.txt"
    write_report(path, rep)
    print(path.read_text(encoding="utf-8"), end="")
    return EXIT_OK


_COMMANDS = {"run": _cmd_run, "compare": _cmd_compare, "analyze": _cmd_analyze, "certify": _cmd_certify}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = _config_from_args(args)
        return _COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"config error: {_where(exc)}{exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DivergenceError, ValidationFailure, SingularPopulationError,
            EigenConvergenceError, ArithmeticError) as exc:
        print(f"solver failure: {_where(exc)}{exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"i/o error: {_where(exc)}{exc}", file=sys.stderr)
        return EXIT_IO


def _where(exc):
    sid = getattr(exc, "strategy_id", None)
    return f"[strategy {sid}] " if sid else ""


if __name__ == "__main__":
    sys.exit(main())
