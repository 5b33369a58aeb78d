"""Command-line front end.

Every subcommand accepts ``--config file.json``; any flag given on the
command line overrides the matching config field. Output files go to
``--out-dir``, falling back to ``$SELFSTAB_OUT_DIR`` and then the current
directory.

Exit codes: 0 success, 2 configuration or input error, 3 numeric failure.
"""

import argparse
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .alpha_model import FIGURE1_MODEL, FIGURE2_MODEL, AlphaModel
from .analysis import holder_constant, holder_fit, localization_experiment
from .errors import (
    AllIncrementsZero, DomainError, Infeasible, InsufficientScales, InvariantViolation,
    MissingBound, NoConvergence, NotContractive, ParseError, QuadratureFailure, RangeViolation,
)
from .expr import compile_expression
from .point_process import StripSpec, generate_poisson_strip, load_points, save_points
from .rng import PRNG_NAME, derive_seed
from .simulate import (
    SampledPath, TruncationPlan, grid_for, sample_path, simulate_batch, simulate_path,
    simulate_stable_motion, simulate_subordinator, simulate_tempered, small_jump_cutoff,
    truncation_level,
)
from .solver import solve_nonautonomous, solve_sequential, write_metadata
from .svg import write_step_plot

log = logging.getLogger("selfstab")

OUT_DIR_ENV = "SELFSTAB_OUT_DIR"
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
VARIANTS = ("selfstab", "stable", "subordinator", "weighted", "tempered", "nonautonomous")

PRESETS = {
    "fig1": {"variant": "selfstab", "alpha": FIGURE1_MODEL, "interval": [0.0, 1.0], "a0": 0.0,
             "K": 1.0, "N": 1e4, "seed": 1, "grid_len": 2000},
    "fig2": {"variant": "selfstab", "alpha": FIGURE2_MODEL, "interval": [0.0, 1.0], "a0": 0.0,
             "K": 1.0, "N": 1e4, "seed": 1, "grid_len": 2000},
}

_CONFIG_ERRORS = (DomainError, ParseError, InvariantViolation, MissingBound, InsufficientScales,
                  KeyError, TypeError, OSError, json.JSONDecodeError)
_NUMERIC_ERRORS = (Infeasible, NotContractive, NoConvergence, QuadratureFailure, RangeViolation,
                   AllIncrementsZero, FloatingPointError, OverflowError)


class ConfigError(Exception):
    pass


# config handling


def load_config(args):
    cfg = {}
    if getattr(args, "preset", None):
        cfg.update(json.loads(json.dumps(PRESETS[args.preset])))
    if getattr(args, "config", None):
        with open(args.config) as fh:
            loaded = json.load(fh)
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        cfg.update(loaded)
    for key, value in vars(args).items():
        if key in ("config", "preset", "func", "command", "verbose") or value is None:
            continue
        cfg[key] = value
    return cfg


def config_hash(cfg):
    text = json.dumps(cfg, sort_keys=True, default=str)
    return hashlib.sha256(text.encode()).hexdigest()


def parse_alpha(spec):
    """Index model from a mapping, a preset name, or a JSON string of either."""
    if spec is None:
        raise ConfigError("an alpha model is required")
    if isinstance(spec, str):
        if spec in ("fig1", "fig2"):
            return AlphaModel.from_config(FIGURE1_MODEL if spec == "fig1" else FIGURE2_MODEL)
        try:
            spec = json.loads(spec)
        except json.JSONDecodeError:
            raise ConfigError(f"alpha must be fig1, fig2 or a JSON object, got {spec!r}") from None
        if isinstance(spec, (int, float)):
            return AlphaModel.constant(spec)
    if isinstance(spec, (int, float)):
        return AlphaModel.constant(spec)
    if not isinstance(spec, dict):
        raise ConfigError("alpha must be a JSON object")
    return AlphaModel.from_config(spec)


def interval_of(cfg):
    t0, t1 = cfg.get("interval", [0.0, 1.0])
    t0, t1 = float(t0), float(t1)
    if not t0 < t1:
        raise ConfigError(f"interval must satisfy t0 < t1, got [{t0}, {t1}]")
    return t0, t1


def plan_of(cfg, alpha, T):
    """Truncation plan from either ``epsilon`` or explicit ``N`` (with optional ``K``)."""
    has_eps = cfg.get("epsilon") is not None
    has_n = cfg.get("N") is not None
    if has_eps == has_n:
        raise ConfigError("give exactly one of epsilon or an explicit N")
    if has_eps:
        return truncation_level(float(cfg["epsilon"]), T, alpha, float(cfg.get("K") or 1.0))
    K = float(cfg.get("K") or 0.0)
    try:
        return TruncationPlan.explicit(K, float(cfg["N"]), T, alpha)
    except MissingBound:
        return TruncationPlan.explicit(K, float(cfg["N"]))


def out_dir(cfg):
    d = Path(cfg.get("out_dir") or os.environ.get(OUT_DIR_ENV) or ".")
    d.mkdir(parents=True, exist_ok=True)
    if not os.access(d, os.W_OK):
        raise ConfigError(f"output directory {d} is not writable")
    return d


def write_manifest(path, command, cfg, **extra):
    manifest = {
        "command": command,
        "library_version": __version__,
        "config": cfg,
        "config_sha256": config_hash(cfg),
        "prng": PRNG_NAME,
    }
    manifest.update(extra)
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, default=str)
        fh.write("\n")
    return manifest


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return str(obj)


# subcommands


def _simulate_one(cfg, alpha, interval, plan, variant):
    a0 = float(cfg.get("a0", 0.0))
    grid_len = int(cfg.get("grid_len", 1000))

    def run(seed):
        if variant in ("selfstab", "weighted"):
            weight = cfg.get("weight") if variant == "weighted" else None
            if variant == "weighted":
                weight = _weight_of(weight)
            return simulate_path(alpha, a0, interval, plan, seed, grid_len, variant=variant, weight=weight)
        if variant == "stable":
            if alpha.kind != "constant":
                raise ConfigError("the stable variant needs a constant alpha")
            return simulate_stable_motion(alpha.a, interval, plan.K, plan.N, seed, grid_len)
        if variant == "subordinator":
            if alpha.kind != "constant":
                raise ConfigError("the subordinator variant needs a constant alpha")
            return simulate_subordinator(alpha.a, interval, plan.K, plan.N, seed, grid_len)
        if variant == "tempered":
            if interval[0] != 0.0:
                raise ConfigError("the tempered variant runs on [0, T]")
            return simulate_tempered(alpha, interval[1], int(cfg.get("n_terms", 10_000)), seed, grid_len, a0)
        if variant == "nonautonomous":
            return _simulate_nonautonomous(cfg, interval, plan, seed, grid_len, a0)
        raise ConfigError(f"unknown variant {variant!r}; choose from {', '.join(VARIANTS)}")

    return run


def _weight_of(value):
    if value is None:
        raise ConfigError("the weighted variant needs a 'weight' (number or \"C\")")
    if isinstance(value, str) and value.upper() != "C":
        try:
            return float(value)
        except ValueError:
            raise ConfigError(f"weight must be a number or \"C\", got {value!r}") from None
    return value


def _simulate_nonautonomous(cfg, interval, plan, seed, grid_len, a0):
    if "alpha3" not in cfg:
        raise ConfigError("the nonautonomous variant needs 'alpha3', an expression in t, z and g")
    alpha3 = compile_expression(cfg["alpha3"], ("t", "z", "g"))
    g = compile_expression(str(cfg.get("g", "0")), ("t",))
    bounds = tuple(cfg.get("bounds", (0.0, 1.0)))
    ps = generate_poisson_strip(StripSpec(interval[0], interval[1], plan.K, plan.N, int(seed)))
    f = solve_nonautonomous(ps, lambda t, z, gv: float(alpha3(t, z, gv)), lambda t: float(g(t)), a0, bounds)
    meta = {"variant": "nonautonomous", "seed": int(seed), "a0": a0, "alpha3": cfg["alpha3"],
            "g": str(cfg.get("g", "0")), "n_points": len(ps), "point_set_sha256": ps.digest(),
            "prng": PRNG_NAME}
    return sample_path(f, grid_for(ps, grid_len), meta)


def cmd_simulate(cfg):
    variant = cfg.get("variant", "selfstab")
    if variant not in VARIANTS:
        raise ConfigError(f"unknown variant {variant!r}; choose from {', '.join(VARIANTS)}")
    interval = interval_of(cfg)
    T = interval[1] - interval[0]
    if variant == "nonautonomous":
        # the index comes from alpha3, so there is no certified plan
        alpha = None
        if cfg.get("N") is None:
            raise ConfigError("the nonautonomous variant needs an explicit N")
        plan = TruncationPlan.explicit(float(cfg.get("K") or 0.0), float(cfg["N"]))
    else:
        alpha = parse_alpha(cfg.get("alpha"))
        plan = None if variant == "tempered" else plan_of(cfg, alpha, T)
    if plan is not None:
        print(plan.to_json())
    seed = int(cfg.get("seed", 0))
    n_paths = int(cfg.get("n_paths", 1))
    run = _simulate_one(cfg, alpha, interval, plan, variant)
    paths = [run(seed)] if n_paths == 1 else simulate_batch(run, seed, n_paths, cfg.get("workers"))
    d = out_dir(cfg)
    prefix = cfg.get("prefix", "path")
    files = []
    for i, path in enumerate(paths):
        stem = prefix if n_paths == 1 else f"{prefix}_{i:04d}"
        path.save_csv(d / f"{stem}.csv")
        label = cfg.get("alpha3", "") if alpha is None else alpha.label
        write_step_plot(d / f"{stem}.svg", path, title=f"{variant}: {label}",
                        alpha=alpha if variant not in ("stable", "subordinator") else None)
        files += [f"{stem}.csv", f"{stem}.svg"]
    write_manifest(d / f"{prefix}_manifest.json", "simulate", cfg, files=files,
                   plan=plan.to_dict() if plan else None,
                   paths=[json.loads(json.dumps(p.meta, default=_json_default)) for p in paths])
    print(f"wrote {len(paths)} path(s) to {d}")
    return EXIT_OK


def cmd_plan(cfg):
    alpha = _plan_alpha(cfg)
    eps = cfg.get("epsilon")
    if eps is None:
        raise ConfigError("plan needs --epsilon")
    eps = float(eps)
    if not 0 < eps < 1:
        raise ConfigError(f"epsilon must lie in (0, 1), got {eps}")
    T = float(cfg.get("T", 1.0))
    if cfg.get("K") is None:
        K = small_jump_cutoff(eps, T)
        print(json.dumps({"small_jump_cutoff": K}))
        # the planning bound only holds for K >= 1
        plan = truncation_level(eps, T, alpha, max(K, 1.0))
    else:
        plan = truncation_level(eps, T, alpha, float(cfg["K"]))
    print(plan.to_json())
    print(f"N = {int(plan.N)}")
    return EXIT_OK


class _BoundsOnly:
    """Stand-in exposing just ``b`` and ``M`` for planning from bare numbers."""

    def __init__(self, b, M):
        self.b, self.M = float(b), float(M)


def _plan_alpha(cfg):
    if cfg.get("alpha") is not None:
        alpha = parse_alpha(cfg["alpha"])
        if cfg.get("b") is not None or cfg.get("M") is not None:
            raise ConfigError("give either an alpha model or explicit b and M, not both")
        return alpha
    if cfg.get("b") is None or cfg.get("M") is None:
        raise ConfigError("plan needs an alpha model or both --b and --M")
    b, M = float(cfg["b"]), float(cfg["M"])
    if not 0 < b < 1 or M < 0:
        raise ConfigError("need 0 < b < 1 and M >= 0")
    return _BoundsOnly(b, M)


def cmd_solve(cfg):
    if not cfg.get("points"):
        raise ConfigError("solve needs a points CSV")
    alpha = parse_alpha(cfg.get("alpha"))
    interval = interval_of(cfg)
    a0 = float(cfg.get("a0", 0.0))
    ps = load_points(cfg["points"], interval)
    f = solve_sequential(ps, alpha, a0)
    d = out_dir(cfg)
    prefix = cfg.get("prefix", "solution")
    f.save_csv(d / f"{prefix}.csv")
    write_metadata(d / f"{prefix}_meta.json", f, alpha, ps, library_version=__version__,
                   config_sha256=config_hash(cfg))
    if cfg.get("svg", True):
        ts, vs = f.rows()
        write_step_plot(d / f"{prefix}.svg", SampledPath(ts, vs), title=alpha.label, alpha=alpha)
    print(f"{len(ps)} points, {len(f)} jump times, f(t1-) = {f.final_value:.17g}")
    return EXIT_OK


def cmd_points(cfg):
    action = cfg.get("action")
    d = out_dir(cfg)
    if action == "gen":
        interval = interval_of(cfg)
        if cfg.get("N") is None:
            raise ConfigError("points gen needs N")
        spec = StripSpec(interval[0], interval[1], float(cfg.get("K") or 0.0), float(cfg["N"]),
                         int(cfg.get("seed", 0)))
        ps = generate_poisson_strip(spec)
        target = d / cfg.get("output", "points.csv")
        save_points(ps, target)
        write_manifest(d / f"{Path(target).stem}_manifest.json", "points gen", cfg,
                       strip=spec.to_config(), n_points=len(ps), point_set_sha256=ps.digest())
        print(f"{len(ps)} points -> {target}")
        return EXIT_OK
    if action == "convert":
        if not cfg.get("input"):
            raise ConfigError("points convert needs an input CSV")
        ps = load_points(cfg["input"], interval_of(cfg))
        target = d / cfg.get("output", "points.csv")
        save_points(ps, target)
        print(f"{len(ps)} points -> {target}")
        return EXIT_OK
    raise ConfigError("points needs an action: gen or convert")


def cmd_localize(cfg):
    alpha = parse_alpha(cfg.get("alpha"))
    r_values = cfg.get("r_values") or [1e-2, 1e-3, 1e-4]
    plan = TruncationPlan.explicit(float(cfg.get("K") or 0.0), float(cfg.get("N") or 1e4))
    z0_list = cfg.get("z0", [0.0])
    if not isinstance(z0_list, list):
        z0_list = [z0_list]
    d = out_dir(cfg)
    prefix = cfg.get("prefix", "localize")
    reports = []
    for z0 in z0_list:
        rep = localization_experiment(
            alpha, float(z0), r_values, u=float(cfg.get("u", 1.0)),
            n_paths=int(cfg.get("n_paths", 4000)), plan=plan, seed=int(cfg.get("seed", 0)),
            n_reference=int(cfg.get("n_reference", 100_000)), workers=cfg.get("workers"),
        )
        stem = f"{prefix}_z{z0:g}"
        rep.save(d / f"{stem}.json", d / f"{stem}.csv")
        reports.append(rep)
        for r, ks, se in zip(rep.r_values, rep.ks_stats, rep.standard_errors()):
            print(f"z0={z0:g} r={r:g} ks={ks:.4f} se={se:.4f}")
    write_manifest(d / f"{prefix}_manifest.json", "localize", cfg,
                   reports=[f"{prefix}_z{z0:g}.json" for z0 in z0_list])
    return EXIT_OK


def cmd_holder(cfg):
    alpha_const = float(cfg.get("alpha_const", 0.5))
    interval = interval_of(cfg)
    K = float(cfg.get("K") or 0.0)
    N = float(cfg.get("N") or 1e4)
    grid_len = int(cfg.get("grid_len", 4001))
    t = float(cfg.get("t", interval[0]))
    h_values = cfg.get("h_values") or list(np.geomspace(1e-3, 0.2, 12) * (interval[1] - interval[0]))
    n_paths = int(cfg.get("n_paths", 1))
    seed = int(cfg.get("seed", 0))
    exponent = 1.0 / alpha_const - float(cfg.get("holder_eps", 0.1))
    d = out_dir(cfg)
    prefix = cfg.get("prefix", "holder")
    fits = []
    for i in range(n_paths):
        path = simulate_subordinator(alpha_const, interval, K, N, derive_seed(seed, i), grid_len)
        try:
            fit = holder_fit(path, t, h_values)
        except AllIncrementsZero as exc:
            log.warning("path %d: %s", i, exc)
            fits.append({"path": i, "quiescent": True})
            continue
        fits.append({"path": i, "slope": fit.slope, "intercept": fit.intercept,
                     "residuals": fit.residuals, "holder_constant": holder_constant(path, t, exponent)})
    slopes = [f["slope"] for f in fits if "slope" in f]
    summary = {"median_slope": float(np.median(slopes)) if slopes else None,
               "expected_exponent": 1.0 / alpha_const, "fits": fits}
    with open(d / f"{prefix}.json", "w") as fh:
        json.dump(summary, fh, indent=2)
    write_manifest(d / f"{prefix}_manifest.json", "holder", cfg)
    print(f"median slope {summary['median_slope']} over {len(slopes)} path(s)")
    return EXIT_OK


def cmd_tempered(cfg):
    cfg = dict(cfg, variant="tempered")
    cfg.setdefault("interval", [0.0, float(cfg.pop("horizon", 1.0))])
    return cmd_simulate(cfg)


# argument parsing


def _common(p, seed=True):
    p.add_argument("--config", help="JSON config file; flags override its fields")
    p.add_argument("--out-dir", dest="out_dir", help=f"output directory (default ${OUT_DIR_ENV} or .)")
    p.add_argument("--prefix", help="stem for output file names")
    if seed:
        p.add_argument("--seed", type=int)


def _interval(p):
    p.add_argument("--interval", type=float, nargs=2, metavar=("T0", "T1"))


def build_parser():
    parser = argparse.ArgumentParser(prog="selfstab", description="Self-stabilizing jump process toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate paths and write CSV, SVG and a manifest")
    _common(p)
    _interval(p)
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--variant", choices=VARIANTS)
    p.add_argument("--alpha", help="fig1, fig2, a constant, or a JSON model spec")
    p.add_argument("--a0", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--K", type=float)
    p.add_argument("--N", type=float)
    p.add_argument("--grid-len", dest="grid_len", type=int)
    p.add_argument("--n-paths", dest="n_paths", type=int)
    p.add_argument("--n-terms", dest="n_terms", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--weight", help='jump weight for the weighted variant: a number or "C"')
    p.add_argument("--alpha3", help="nonautonomous index, an expression in t, z and g")
    p.add_argument("--g", help="nonautonomous driver, an expression in t")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("plan", help="truncation level N(epsilon)")
    p.add_argument("--config")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--T", type=float)
    p.add_argument("--alpha")
    p.add_argument("--b", type=float, help="upper index bound, instead of --alpha")
    p.add_argument("--M", type=float, help="derivative-ratio bound, instead of --alpha")
    p.add_argument("--K", type=float)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("solve", help="solve for a user-supplied point set")
    _common(p, seed=False)
    _interval(p)
    p.add_argument("points", nargs="?")
    p.add_argument("--alpha")
    p.add_argument("--a0", type=float)
    p.add_argument("--no-svg", dest="svg", action="store_false", default=None)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("points", help="generate or normalise point-set CSVs")
    _common(p)
    _interval(p)
    p.add_argument("action", choices=("gen", "convert"))
    p.add_argument("input", nargs="?")
    p.add_argument("--K", type=float)
    p.add_argument("--N", type=float)
    p.add_argument("--output")
    p.set_defaults(func=cmd_points)

    p = sub.add_parser("localize", help="KS distance of scaled increments to the local stable law")
    _common(p)
    p.add_argument("--alpha")
    p.add_argument("--z0", type=float, nargs="+")
    p.add_argument("--r-values", dest="r_values", type=float, nargs="+")
    p.add_argument("--u", type=float)
    p.add_argument("--n-paths", dest="n_paths", type=int)
    p.add_argument("--n-reference", dest="n_reference", type=int)
    p.add_argument("--K", type=float)
    p.add_argument("--N", type=float)
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_localize)

    p = sub.add_parser("holder", help="log-log growth fits on subordinator paths")
    _common(p)
    _interval(p)
    p.add_argument("--alpha-const", dest="alpha_const", type=float)
    p.add_argument("--t", type=float)
    p.add_argument("--h-values", dest="h_values", type=float, nargs="+")
    p.add_argument("--n-paths", dest="n_paths", type=int)
    p.add_argument("--grid-len", dest="grid_len", type=int)
    p.add_argument("--K", type=float)
    p.add_argument("--N", type=float)
    p.set_defaults(func=cmd_holder)

    p = sub.add_parser("tempered", help="simulate tempered paths")
    _common(p)
    p.add_argument("--alpha")
    p.add_argument("--horizon", type=float)
    p.add_argument("--a0", type=float)
    p.add_argument("--n-terms", dest="n_terms", type=int)
    p.add_argument("--grid-len", dest="grid_len", type=int)
    p.add_argument("--n-paths", dest="n_paths", type=int)
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_tempered)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args)
        return args.func(cfg)
    except (ConfigError, *_CONFIG_ERRORS) as exc:
        print(f"selfstab {args.command}: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _NUMERIC_ERRORS as exc:
        print(f"selfstab {args.command}: numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
