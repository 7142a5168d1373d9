"""Experiment harness: JSON configs in, CSV traces, a JSON summary, and
SVG log-error plots out.

Each experiment kind maps onto one solver: "sym" and "eig" build a
diagonal target from the configured spectrum, "asym" feeds the same
matrix to the two-factor solver, and "bench" times the two eigenspace
methods back to back. Repeats draw their seeds as base_seed + index, so
re-running a config reproduces every CSV byte for byte.
"""

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import asym_gd, eigenspace, initialization, spectrum, sym_gd

FLOAT_FMT = ".17g"

SYM_COLUMNS = ("iter", "error", "sigma1_x", "sigma1_j", "sigmar_u", "ratio", "sigma1_p", "in_r", "in_r2")
ASYM_COLUMNS = ("iter", "error", "balance")
EIG_COLUMNS = ("iter", "proj_error")

KINDS = ("sym", "asym", "eig", "bench")

_TOP_KEYS = {
    "kind", "dim", "rank", "spectrum", "eta", "epsilon", "max_iters",
    "init", "repeats", "record_every", "regularized", "method", "out_dir",
}
_INIT_KEYS = {"scheme", "alpha", "seed", "multiplier"}
_SPECTRUM_KEYS = {"experiment", "equal_top", "explicit"}


class ConfigError(ValueError):
    """A config file failed to parse or validate."""


@dataclass
class ExperimentConfig:
    kind: str
    dim: int
    rank: int
    values: np.ndarray
    eta: float
    epsilon: float
    max_iters: int
    alphas: list
    scheme: str = "moderate"
    seed: int = 0
    multiplier: float = 1.0
    repeats: int = 1
    record_every: int = 1
    regularized: str = "both"          # "reg", "unreg", or "both"
    methods: tuple = ("retraction_free", "rgd")
    out_dir: str = "out"
    raw: dict = field(default_factory=dict, repr=False)


@dataclass
class RunResult:
    variant: str
    repeat: int
    seed: int
    csv_path: str
    converged: bool
    diverged: bool
    iterations: int
    iterations_to_tolerance: int | None
    final_error: float
    wall_time_s: float


@dataclass
class ExperimentResult:
    summary: dict
    summary_path: str
    csv_paths: list
    diverged: bool


def _require(obj: dict, key: str, types, what: str):
    if key not in obj:
        raise ConfigError(f"missing required key '{what}'")
    value = obj[key]
    if isinstance(value, bool) and bool not in (types if isinstance(types, tuple) else (types,)):
        raise ConfigError(f"invalid value for '{what}': expected {types}, got a boolean")
    if not isinstance(value, types):
        raise ConfigError(f"invalid value for '{what}': expected {types}, got {type(value).__name__}")
    return value


def _positive(value, what: str):
    if value <= 0:
        raise ConfigError(f"invalid value for '{what}': must be positive, got {value}")
    return value


def _resolve_spectrum(spec, dim: int, rank: int) -> np.ndarray:
    if not isinstance(spec, dict) or len(spec) != 1:
        raise ConfigError("invalid value for 'spectrum': expected exactly one of "
                          f"{sorted(_SPECTRUM_KEYS)}")
    (key, value), = spec.items()
    if key not in _SPECTRUM_KEYS:
        raise ConfigError(f"unknown key 'spectrum.{key}'")
    if key == "experiment":
        if not isinstance(value, dict) or set(value) != {"hi", "lo"}:
            raise ConfigError("invalid value for 'spectrum.experiment': expected {hi, lo}")
        try:
            return spectrum.experiment_spectrum(float(value["hi"]), float(value["lo"]), rank, dim)
        except ValueError as exc:
            raise ConfigError(f"invalid value for 'spectrum.experiment': {exc}") from exc
    if key == "equal_top":
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ConfigError("invalid value for 'spectrum.equal_top': expected a number")
        if value <= 1.0:
            raise ConfigError("invalid value for 'spectrum.equal_top': must exceed the unit tail")
        return np.concatenate([np.full(rank, float(value)), np.ones(dim - rank)])
    if not isinstance(value, list) or not value:
        raise ConfigError("invalid value for 'spectrum.explicit': expected a non-empty list")
    return np.asarray(value, dtype=np.float64)


def parse_config(raw: dict) -> ExperimentConfig:
    """Validate a parsed JSON object. Unknown keys are rejected by name."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(raw) - _TOP_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")

    kind = _require(raw, "kind", str, "kind")
    if kind not in KINDS:
        raise ConfigError(f"invalid value for 'kind': expected one of {KINDS}, got {kind!r}")
    dim = _positive(_require(raw, "dim", int, "dim"), "dim")
    rank = _positive(_require(raw, "rank", int, "rank"), "rank")
    if rank >= dim:
        raise ConfigError(f"invalid value for 'rank': must be below dim={dim}, got {rank}")
    values = _resolve_spectrum(_require(raw, "spectrum", dict, "spectrum"), dim, rank)
    if values.size != dim:
        raise ConfigError(f"invalid value for 'spectrum': expected {dim} values, got {values.size}")
    eta = _positive(float(_require(raw, "eta", (int, float), "eta")), "eta")
    epsilon = _positive(float(_require(raw, "epsilon", (int, float), "epsilon")), "epsilon")
    max_iters = _positive(_require(raw, "max_iters", int, "max_iters"), "max_iters")

    init = _require(raw, "init", dict, "init")
    unknown = sorted(set(init) - _INIT_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join('init.' + k for k in unknown)}")
    scheme = init.get("scheme", "moderate")
    if scheme not in ("small", "moderate"):
        raise ConfigError(f"invalid value for 'init.scheme': expected 'small' or 'moderate', got {scheme!r}")
    alpha_raw = init.get("alpha", 0.5)
    alphas = alpha_raw if isinstance(alpha_raw, list) else [alpha_raw]
    if not alphas:
        raise ConfigError("invalid value for 'init.alpha': list must be non-empty")
    parsed_alphas = []
    for a in alphas:
        if not isinstance(a, (int, float)) or isinstance(a, bool) or a <= 0:
            raise ConfigError(f"invalid value for 'init.alpha': must be positive numbers, got {a!r}")
        parsed_alphas.append(float(a))
    seed = init.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError(f"invalid value for 'init.seed': expected a nonnegative integer, got {seed!r}")
    multiplier = init.get("multiplier", 1.0)
    if not isinstance(multiplier, (int, float)) or isinstance(multiplier, bool) or multiplier <= 0:
        raise ConfigError(f"invalid value for 'init.multiplier': must be positive, got {multiplier!r}")

    repeats = raw.get("repeats", 1)
    if not isinstance(repeats, int) or isinstance(repeats, bool) or repeats < 1:
        raise ConfigError(f"invalid value for 'repeats': expected an integer >= 1, got {repeats!r}")
    record_every = raw.get("record_every", 1)
    if not isinstance(record_every, int) or isinstance(record_every, bool) or record_every < 1:
        raise ConfigError(f"invalid value for 'record_every': expected an integer >= 1, got {record_every!r}")

    regularized = raw.get("regularized", "both")
    if regularized is True:
        regularized = "reg"
    elif regularized is False:
        regularized = "unreg"
    elif regularized != "both":
        raise ConfigError("invalid value for 'regularized': expected true, false, or \"both\"")

    method = raw.get("method", "both")
    if method == "both":
        methods = eigenspace.METHODS
    elif method in eigenspace.METHODS:
        methods = (method,)
    else:
        raise ConfigError(
            f"invalid value for 'method': expected one of {eigenspace.METHODS + ('both',)}, got {method!r}"
        )

    out_dir = raw.get("out_dir", "out")
    if not isinstance(out_dir, str):
        raise ConfigError(f"invalid value for 'out_dir': expected a string, got {type(out_dir).__name__}")

    try:
        spectrum.make_diagonal_target(values, dim, rank)
    except ValueError as exc:
        raise ConfigError(f"invalid value for 'spectrum': {exc}") from exc

    return ExperimentConfig(
        kind=kind, dim=dim, rank=rank, values=values, eta=eta, epsilon=epsilon,
        max_iters=max_iters, alphas=parsed_alphas, scheme=scheme, seed=seed,
        multiplier=multiplier, repeats=repeats, record_every=record_every,
        regularized=regularized, methods=methods, out_dir=out_dir, raw=raw,
    )


def load_config(path) -> ExperimentConfig:
    """Read and validate a JSON experiment config."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return parse_config(raw)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), FLOAT_FMT)


def _write_csv(path: Path, columns, rows):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _sym_rows(trace):
    for rec in trace.records:
        yield (rec.iter, rec.error, rec.sigma1_x, rec.sigma1_j, rec.sigmar_u,
               rec.ratio, rec.sigma1_p, rec.in_r, rec.in_r2)


def _asym_rows(trace):
    for rec in trace.records:
        yield (rec.iter, rec.error, rec.balance)


def _eig_rows(trace):
    for rec in trace.records:
        yield (rec.iter, rec.proj_error)


def _worker_count() -> int:
    env = os.environ.get("LOWRANK_GD_THREADS", "")
    if env.strip():
        try:
            n = int(env)
        except ValueError as exc:
            raise ConfigError(f"LOWRANK_GD_THREADS must be an integer, got {env!r}") from exc
        return max(1, n)
    return os.cpu_count() or 1


def _alpha_for(config: ExperimentConfig, alpha: float, target) -> float:
    if config.scheme == "small":
        return initialization.small_alpha_bound(target, config.eta, config.multiplier)
    return alpha


def _alpha_regime(target, eta: float, alpha: float) -> str:
    try:
        bound = initialization.small_alpha_bound(target, eta)
    except ValueError:
        return "unknown"
    return "small" if alpha <= bound else "moderate"


def _solver_config(config: ExperimentConfig, record_every=None) -> sym_gd.SolverConfig:
    return sym_gd.SolverConfig(
        eta=config.eta, epsilon=config.epsilon, max_iters=config.max_iters,
        record_every=record_every or config.record_every,
    )


def _build_jobs(config: ExperimentConfig, target, seed_base: int):
    jobs = []
    for alpha in config.alphas:
        alpha_eff = _alpha_for(config, alpha, target)
        if config.kind == "sym":
            variants = [(f"a{alpha:g}", {"alpha": alpha_eff})]
        elif config.kind == "asym":
            flags = {"reg": [True], "unreg": [False], "both": [True, False]}[config.regularized]
            variants = [(f"a{alpha:g}_{'reg' if f else 'unreg'}", {"alpha": alpha_eff, "regularized": f})
                        for f in flags]
        else:
            short = {"retraction_free": "rf", "rgd": "rgd"}
            variants = [(f"a{alpha:g}_{short[m]}", {"alpha": alpha_eff, "method": m})
                        for m in config.methods]
        for name, params in variants:
            for rep in range(config.repeats):
                jobs.append((name, rep, seed_base + rep, params))
    return jobs


def _execute(config: ExperimentConfig, target, job, out_dir: Path):
    name, rep, seed, params = job
    d, r = config.dim, config.rank
    solver_cfg = _solver_config(config)
    diverged = False
    if config.kind == "sym":
        x0 = params["alpha"] * initialization.gaussian_factor(d, r, seed)
        try:
            trace = sym_gd.run(sym_gd.FactorState(x0), target, solver_cfg)
        except sym_gd.DivergenceError as exc:
            trace, diverged = exc.trace, True
        columns, rows = SYM_COLUMNS, _sym_rows(trace)
    elif config.kind == "asym":
        n0, n1 = initialization.gaussian_pair(d, d, r, seed)
        state0 = asym_gd.AsymState(params["alpha"] * n0, params["alpha"] * n1)
        try:
            trace = asym_gd.run_asym(state0, target.matrix, solver_cfg, regularized=params["regularized"])
        except sym_gd.DivergenceError as exc:
            trace, diverged = exc.trace, True
        columns, rows = ASYM_COLUMNS, _asym_rows(trace)
    else:
        l0 = params["alpha"] * initialization.gaussian_factor(d, r, seed)
        try:
            trace = eigenspace.run_eig(eigenspace.EigState(l0), target, solver_cfg, method=params["method"])
        except sym_gd.DivergenceError as exc:
            trace, diverged = exc.trace, True
        columns, rows = EIG_COLUMNS, _eig_rows(trace)

    csv_path = out_dir / f"{config.kind}_{name}_rep{rep}.csv"
    _write_csv(csv_path, columns, rows)
    return RunResult(
        variant=name, repeat=rep, seed=seed, csv_path=str(csv_path),
        converged=trace.converged, diverged=diverged, iterations=trace.iterations,
        iterations_to_tolerance=trace.iterations_to(config.epsilon),
        final_error=trace.final_error, wall_time_s=trace.wall_time,
    ), trace


def _run_bench(config: ExperimentConfig, target, seed_base: int, out_dir: Path):
    """Timed comparison of the two eigenspace methods, strictly sequential
    and interleaved (rf, rgd, rf, rgd, ...) across repeats."""
    d, r = config.dim, config.rank
    record_every = config.raw.get("record_every") or config.max_iters
    solver_cfg = _solver_config(config, record_every=record_every)
    alpha = config.alphas[0]
    per_method = {m: [] for m in config.methods}
    runs = []
    csv_paths = []
    diverged_any = False
    for rep in range(config.repeats):
        seed = seed_base + rep
        l0 = alpha * initialization.gaussian_factor(d, r, seed)
        for method in config.methods:
            diverged = False
            try:
                trace = eigenspace.run_eig(eigenspace.EigState(l0), target, solver_cfg, method=method)
            except sym_gd.DivergenceError as exc:
                trace, diverged = exc.trace, True
                diverged_any = True
            short = "rf" if method == "retraction_free" else "rgd"
            csv_path = out_dir / f"bench_{short}_rep{rep}.csv"
            _write_csv(csv_path, EIG_COLUMNS, _eig_rows(trace))
            csv_paths.append(str(csv_path))
            per_method[method].append(trace)
            runs.append(RunResult(
                variant=short, repeat=rep, seed=seed, csv_path=str(csv_path),
                converged=trace.converged, diverged=diverged, iterations=trace.iterations,
                iterations_to_tolerance=trace.iterations_to(config.epsilon),
                final_error=trace.final_error, wall_time_s=trace.wall_time,
            ))
    methods_summary = {}
    for method, traces in per_method.items():
        times = np.array([t.wall_time for t in traces])
        methods_summary[method] = {
            "runs": len(traces),
            "total_wall_time_s": float(times.sum()),
            "median_wall_time_s": float(np.median(times)),
            "median_iterations": float(np.median([t.iterations for t in traces])),
        }
    saving = None
    if set(per_method) == set(eigenspace.METHODS):
        rgd_total = methods_summary["rgd"]["total_wall_time_s"]
        rf_total = methods_summary["retraction_free"]["total_wall_time_s"]
        if rgd_total > 0:
            saving = (rgd_total - rf_total) / rgd_total
    bench = {"methods": methods_summary, "saving_fraction": saving}
    return runs, csv_paths, bench, diverged_any


def run_experiment(config: ExperimentConfig, out_dir=None, seed_override=None) -> ExperimentResult:
    """Execute every (variant, repeat) run of the experiment.

    Writes one CSV per run plus ``summary.json`` under the output
    directory. Diverged runs keep their partial trace and flag the result;
    the CLI turns that flag into a nonzero exit code.
    """
    out = Path(out_dir) if out_dir is not None else Path(config.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise OSError(f"output directory {out} is not writable: {exc}") from exc

    seed_base = config.seed if seed_override is None else int(seed_override)
    target = spectrum.make_diagonal_target(config.values, config.dim, config.rank)

    if config.kind == "bench":
        runs, csv_paths, bench, diverged_any = _run_bench(config, target, seed_base, out)
    else:
        bench = None
        jobs = _build_jobs(config, target, seed_base)
        workers = min(_worker_count(), len(jobs))
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                outcomes = list(pool.map(lambda j: _execute(config, target, j, out), jobs))
        else:
            outcomes = [_execute(config, target, job, out) for job in jobs]
        runs = [res for res, _ in outcomes]
        csv_paths = [res.csv_path for res in runs]
        diverged_any = any(res.diverged for res in runs)

    summary = {
        "kind": config.kind,
        "seed_base": seed_base,
        "epsilon": config.epsilon,
        "eta": config.eta,
        "eta_within_theory": bool(config.eta <= sym_gd.max_step_size(target)),
        "alpha_regimes": {
            f"{a:g}": _alpha_regime(target, config.eta, _alpha_for(config, a, target))
            for a in config.alphas
        },
        "runs": [vars(r) for r in runs],
        "any_diverged": diverged_any,
        "config": config.raw,
    }
    if bench is not None:
        summary["bench"] = bench
    summary_path = out / "summary.json"
    summary_path.write_text(json.dumps(summary, indent=2) + "\n")
    return ExperimentResult(
        summary=summary, summary_path=str(summary_path),
        csv_paths=csv_paths, diverged=diverged_any,
    )


# ---------------------------------------------------------------------------
# SVG plotting

_PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
            "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")
_LOG_FLOOR = 1e-16

_WIDTH, _HEIGHT = 720, 480
_ML, _MR, _MT, _MB = 70, 20, 20, 50


def _read_curve(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValueError(f"CSV {path} is empty")
        err_col = next((c for c in ("error", "proj_error") if c in reader.fieldnames), None)
        if err_col is None or "iter" not in reader.fieldnames:
            raise ValueError(f"CSV {path} lacks iter/error columns")
        iters, errs = [], []
        for row in reader:
            iters.append(float(row["iter"]))
            errs.append(max(float(row[err_col]), _LOG_FLOOR))
    if not iters:
        raise ValueError(f"CSV {path} has no data rows")
    return np.array(iters), np.log10(np.array(errs))


def emit_plot(csv_paths, out_path) -> str:
    """Render log10(error) against iteration as a self-contained SVG, one
    polyline per CSV. Errors are clipped at 1e-16 before taking logs."""
    if not csv_paths:
        raise ValueError("no CSV paths given")
    curves = [_read_curve(p) for p in csv_paths]
    x_max = max(float(x.max()) for x, _ in curves)
    x_max = max(x_max, 1.0)
    y_min = min(float(y.min()) for _, y in curves)
    y_max = max(float(y.max()) for _, y in curves)
    if y_max - y_min < 1e-9:
        y_min, y_max = y_min - 1.0, y_max + 1.0

    plot_w = _WIDTH - _ML - _MR
    plot_h = _HEIGHT - _MT - _MB

    def sx(v):
        return _ML + plot_w * v / x_max

    def sy(v):
        return _MT + plot_h * (y_max - v) / (y_max - y_min)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect x="0" y="0" width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<line x1="{_ML}" y1="{_MT + plot_h}" x2="{_ML + plot_w}" y2="{_MT + plot_h}" '
        'stroke="black" stroke-width="1"/>',
        f'<line x1="{_ML}" y1="{_MT}" x2="{_ML}" y2="{_MT + plot_h}" stroke="black" stroke-width="1"/>',
    ]
    for i in range(5):
        xv = x_max * i / 4
        parts.append(
            f'<text x="{sx(xv):.1f}" y="{_MT + plot_h + 18}" font-size="11" '
            f'text-anchor="middle">{xv:.0f}</text>'
        )
        yv = y_min + (y_max - y_min) * i / 4
        parts.append(
            f'<text x="{_ML - 8}" y="{sy(yv):.1f}" font-size="11" '
            f'text-anchor="end" dominant-baseline="middle">{yv:.1f}</text>'
        )
    parts.append(
        f'<text x="{_ML + plot_w / 2:.1f}" y="{_HEIGHT - 12}" font-size="12" '
        'text-anchor="middle">iteration</text>'
    )
    parts.append(
        f'<text x="16" y="{_MT + plot_h / 2:.1f}" font-size="12" text-anchor="middle" '
        f'transform="rotate(-90 16 {_MT + plot_h / 2:.1f})">log10 error</text>'
    )
    for i, ((xs, ys), path) in enumerate(zip(curves, csv_paths)):
        color = _PALETTE[i % len(_PALETTE)]
        points = " ".join(f"{sx(xv):.2f},{sy(yv):.2f}" for xv, yv in zip(xs, ys))
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{points}"/>')
        label = Path(path).stem
        parts.append(
            f'<text x="{_ML + plot_w - 6}" y="{_MT + 16 + 14 * i}" font-size="11" '
            f'text-anchor="end" fill="{color}">{label}</text>'
        )
    parts.append("</svg>")
    svg = "\n".join(parts) + "\n"
    out_path = Path(out_path)
    out_path.write_text(svg)
    return str(out_path)
