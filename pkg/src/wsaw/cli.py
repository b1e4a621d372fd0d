"""Command-line front end.

Subcommands cover the ten studies plus ensemble sampling and report
rendering.  A TOML config file mirrors the flags one to one; flags given on
the command line override file values, and the effective configuration is
echoed into the run manifest.  Exit codes: 0 when every study predicate
passed, 2 when the run finished but a predicate failed, 1 on errors.
"""

import argparse
import json
import math
import sys
from pathlib import Path

try:
    import tomllib as tomli
except ModuleNotFoundError:
    import tomli

from . import ensemble as ens_mod
from . import figures
from ._version import __version__
from .harness import (
    OUTPUT_ROOT_ENV,
    ExperimentSpec,
    RunManifest,
    default_output_root,
    run_experiment,
)
from .rng import SeededSource


def _parse_floats(text):
    return tuple(float("inf") if t.strip() in ("inf", "Inf") else float(t)
                 for t in text.split(",") if t.strip())


def _parse_ints(text):
    return tuple(int(t) for t in text.split(",") if t.strip())


def _add_common(p):
    p.add_argument("--config", help="TOML config file; flags override its values")
    p.add_argument("--seed", type=int, help="base RNG seed (default 0)")
    p.add_argument("--threads", type=int, help="worker processes (default 1)")
    p.add_argument("--out", help=f"output directory (default ${OUTPUT_ROOT_ENV}/<study>)")
    p.add_argument("--d", type=int, help="lattice dimension (default 2)")


def _add_grid(p):
    p.add_argument("--n-grid", help="comma-separated walk lengths")
    p.add_argument("--betas", help="comma-separated beta values ('inf' allowed)")
    p.add_argument("--samples", type=int, help="samples per grid point")
    p.add_argument("--sampler", choices=("mcmc", "reweight"), help="sampling backend")
    p.add_argument("--use-window", action="store_true", default=None,
                   help="restrict to the default silt window")
    p.add_argument("--burn-sweeps", type=int, help="MCMC burn-in sweeps")
    p.add_argument("--thin-moves", type=int, help="moves between retained samples")
    p.add_argument("--pivot-fraction", type=float, help="share of pivot proposals")


PARAM_FLAGS = {
    "n_max": ("--n-max", int),
    "ess_target": ("--ess-target", float),
    "chi_band": ("--chi-band", _parse_floats),
    "msd_band": ("--msd-band", _parse_floats),
    "v_lines": ("--v-lines", float),
    "a1_beta": ("--a1-beta", float),
    "a2_beta": ("--a2-beta", float),
    "delta": ("--delta", float),
    "rho": ("--rho", float),
    "gamma": ("--gamma", float),
    "epsilon": ("--epsilon", float),
    "rho_star": ("--rho-star", float),
    "slack": ("--slack", float),
    "percentile": ("--percentile", float),
    "intensity": ("--intensity", float),
    "area": ("--area", float),
    "radius": ("--radius", float),
    "mark_beta": ("--mark-beta", float),
    "band": ("--band", _parse_ints),
    "d_max": ("--d-max", int),
}

STUDY_PARAMS = {
    "census": ("n_max",),
    "exact-small-n": (),
    "srw-baseline": ("ess_target", "msd_band"),
    "weaksaw-exponent": ("ess_target", "chi_band", "msd_band"),
    "saw-exponent": ("ess_target", "chi_band", "msd_band"),
    "shape-study": ("v_lines", "a1_beta", "a2_beta", "delta", "rho"),
    "condition-d": ("v_lines", "a1_beta", "a2_beta", "gamma", "epsilon", "rho_star"),
    "convex-hull": ("slack", "percentile"),
    "palm-poisson": ("intensity", "area", "radius", "mark_beta", "band"),
    "nu-table": ("d_max",),
}

SUBCOMMANDS = {
    "census": "census",
    "exact": "exact-small-n",
    "srw": "srw-baseline",
    "exponent": "weaksaw-exponent",
    "shapes": "shape-study",
    "condition-d": "condition-d",
    "hull": "convex-hull",
    "palm": "palm-poisson",
    "nu": "nu-table",
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="wsaw",
        description="Lattice-polymer laboratory for weakly self-avoiding walks.",
    )
    parser.add_argument("--version", action="version", version=f"wsaw {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    for cmd, study in SUBCOMMANDS.items():
        p = sub.add_parser(cmd, help=f"run the {study} study")
        _add_common(p)
        if study not in ("census", "nu-table", "palm-poisson"):
            _add_grid(p)
        if cmd == "exponent":
            p.add_argument("--saw", action="store_true",
                           help="run the strict self-avoiding variant (beta = inf)")
        for name in STUDY_PARAMS[study]:
            flag, cast = PARAM_FLAGS[name]
            p.add_argument(flag, type=str, dest=f"param_{name}",
                           help=f"study parameter {name}")

    p = sub.add_parser("sample", help="sample one ensemble and persist it")
    _add_common(p)
    p.add_argument("--n", type=int, required=True, help="walk length")
    p.add_argument("--beta", required=True, help="penalty strength ('inf' allowed)")
    p.add_argument("--samples", type=int, default=1000, help="records to retain")
    p.add_argument("--sampler", choices=("mcmc", "reweight"), default="mcmc")
    p.add_argument("--window", default="none",
                   help="'none', 'default', or explicit 'lo,hi' silt bounds")
    p.add_argument("--retain-paths", action="store_true", help="store packed paths")
    p.add_argument("--burn-sweeps", type=int)
    p.add_argument("--thin-moves", type=int)
    p.add_argument("--pivot-fraction", type=float)

    p = sub.add_parser("report", help="render figures for a finished run directory")
    p.add_argument("run_dir", help="directory holding manifest.json")

    return parser


def _load_config(path):
    with open(path, "rb") as fp:
        return tomli.load(fp)


def _effective(args, config, key, default, cast=None):
    """Flag value if given, else config value, else default."""
    val = getattr(args, key.replace("-", "_"), None)
    if val is None:
        val = config.get(key, default)
    if val is not None and cast is not None and isinstance(val, str):
        val = cast(val)
    return val


def _build_spec(study, args):
    config = _load_config(args.config) if args.config else {}
    mcmc_cfg = config.get("mcmc", {})
    param_cfg = dict(config.get("params", {}))

    n_grid = _effective(args, config, "n_grid", None, _parse_ints)
    betas = _effective(args, config, "betas", None, _parse_floats)
    kwargs = dict(
        study=study,
        out_dir=_effective(args, config, "out", None),
        seed=int(_effective(args, config, "seed", 0)),
        threads=int(_effective(args, config, "threads", 1)),
        d=int(_effective(args, config, "d", 2)),
        samples=int(_effective(args, config, "samples", 20000)),
        sampler=_effective(args, config, "sampler", "mcmc"),
        use_window=bool(_effective(args, config, "use_window", False)),
        burn_sweeps=int(_effective(args, mcmc_cfg, "burn_sweeps", 32)),
        thin_moves=int(_effective(args, mcmc_cfg, "thin_moves", 16)),
        pivot_fraction=float(_effective(args, mcmc_cfg, "pivot_fraction", 0.5)),
    )
    if n_grid:
        kwargs["n_grid"] = n_grid
    if betas:
        kwargs["betas"] = betas

    params = {}
    for name in STUDY_PARAMS[study]:
        _, cast = PARAM_FLAGS[name]
        raw = getattr(args, f"param_{name}", None)
        if raw is not None:
            params[name] = cast(raw)
        elif name in param_cfg:
            params[name] = param_cfg[name]
    kwargs["params"] = params
    return ExperimentSpec(**kwargs)


def _cmd_study(cmd, args):
    study = SUBCOMMANDS[cmd]
    if cmd == "exponent" and getattr(args, "saw", False):
        study = "saw-exponent"
    spec = _build_spec(study, args)
    manifest = run_experiment(spec)
    for name, ok in manifest.predicates.items():
        print(f"{name}: {'pass' if ok else 'FAIL'}")
    print(f"wrote {len(manifest.artifacts)} artifacts to {spec.out_dir}")
    return 0 if manifest.status == "pass" else 2


def _cmd_sample(args):
    config = _load_config(args.config) if args.config else {}
    mcmc_cfg = config.get("mcmc", {})
    beta = float("inf") if args.beta in ("inf", "Inf") else float(args.beta)
    n = args.n
    d = int(_effective(args, config, "d", 2))
    window_arg = _effective(args, config, "window", "none")
    if window_arg in (None, "none", ""):
        window = None
    elif window_arg == "default":
        window = ens_mod.default_window(beta, n, d)
    else:
        lo, hi = _parse_floats(window_arg)
        window = (lo, hi)
    mcmc = ens_mod.McmcParams(
        burn_sweeps=int(_effective(args, mcmc_cfg, "burn_sweeps", 32)),
        thin_moves=int(_effective(args, mcmc_cfg, "thin_moves", 16)),
        pivot_fraction=float(_effective(args, mcmc_cfg, "pivot_fraction", 0.5)),
    )
    cfg = ens_mod.EnsembleConfig(
        n=n, beta=beta, samples=args.samples, d=d,
        sampler=args.sampler, window=window,
        seed=SeededSource(int(_effective(args, config, "seed", 0))),
        mcmc=mcmc, retain_paths=args.retain_paths,
    )
    ens = ens_mod.sample_ensemble(cfg)
    out = Path(_effective(args, config, "out", None) or default_output_root() / "sample")
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "ensemble.txt", "w", newline="\n") as fp:
        ens.save(fp)
    spec_echo = cfg.to_dict()
    spec_echo["study"] = "sample"
    manifest = RunManifest(
        spec=spec_echo,
        spec_hash="",
        tool_version=__version__,
        tasks=[{"task": f"sample n={n} beta={beta}", "seed": cfg.seed.seed, "stream": cfg.seed.stream}],
        artifacts=["ensemble.txt"],
        predicates={},
        status="pass",
    )
    manifest.write(out)
    if ens.diagnostics.get("ess_warning"):
        print("warning: effective sample size below the configured floor")
    print(f"wrote {out / 'ensemble.txt'} ({len(ens)} records)")
    return 0


def _cmd_report(args):
    run_dir = Path(args.run_dir)
    with open(run_dir / "manifest.json") as fp:
        manifest = json.load(fp)
    study = manifest["spec"]["study"]
    if study == "sample":
        with open(run_dir / "ensemble.txt") as fp:
            ens = ens_mod.WeightedEnsemble.load(fp)
        paths = figures.ensemble_figure(run_dir, ens)
    else:
        paths = figures.render_study(run_dir)
    for p in paths:
        print(f"wrote {p}")
    return 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "report":
            return _cmd_report(args)
        if args.command == "sample":
            return _cmd_sample(args)
        return _cmd_study(args.command, args)
    except BrokenPipeError:
        return 1
    except Exception as exc:  # CLI boundary: report and signal failure
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
