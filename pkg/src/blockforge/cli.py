"""Batch command line: simulate, fit, evaluate, ppc, compare, elicit.

Configuration precedence per run: built-in defaults, then a JSON config
file (--config; a manifest.json from an earlier run also works, its
nested "config" object is used), then --paper-scale, then explicit flags.
Every run writes a manifest.json with the fully resolved configuration,
so runs are reproducible from their own output directory.

Exit codes: 0 success, 2 unknown subcommand or configuration error,
3 numerical failure inside a chain.
"""

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .blockmodels import CBM, CDM, CM
from .evaluation import fit_report
from .evaluation import ppc as posterior_predictive_check
from .graph import FORMATS, load_network, save_network, sniff_edge_list_header
from .partition import load_partition, point_estimate, save_partition
from .priors import elicit, prior_from_dict
from .sampler import (
    ChainConfig,
    NumericalFailure,
    PosteriorSamples,
    cell_terms,
    load_checkpoints,
    run_chain,
    save_checkpoints,
    save_trace,
)
from .synthgen import ScenarioSpec, generate, scenario

GRID_MODELS = ("cm", "cdm", "cbm")
GRID_PRIORS = ("dm", "dp", "pyp", "gnp")
PAPER_SCALE = {"burnin": 100000, "samples": 10000, "thin": 50}
DM_DEFAULT_K_CAP = 50


@dataclass
class RunConfig:
    """Resolved settings for one fit (also the unit stored in manifests)."""

    input: str
    format: str = "edge-list"
    model: str = "cm"
    Q: int = 4
    prior: dict = None
    seed: int = 0
    burnin: int = 10000
    samples: int = 2000
    thin: int = 10
    truth: str = None
    output: str = "out"
    fixed_eta_variance: bool = False

    def __post_init__(self):
        if self.prior is None:
            self.prior = {"prior": "dp", "auto": True}
        if self.model not in GRID_MODELS:
            raise ValueError(f"unknown model {self.model!r}, expected one of {GRID_MODELS}")
        if self.format not in FORMATS:
            raise ValueError(f"unknown format {self.format!r}, expected one of {FORMATS}")


_FIT_KEYS = tuple(RunConfig.__dataclass_fields__)


def _load_config_file(path):
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(data, dict) and isinstance(data.get("config"), dict):
        data = data["config"]  # manifests nest the run config
    if not isinstance(data, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    return data


def _merge_run_config(args):
    merged = {k: RunConfig.__dataclass_fields__[k].default for k in _FIT_KEYS}
    merged["prior"] = {"prior": "dp", "auto": True}
    if getattr(args, "config", None):
        file_cfg = _load_config_file(args.config)
        unknown = set(file_cfg) - set(_FIT_KEYS)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        merged.update(file_cfg)
    if getattr(args, "paper_scale", None):
        merged.update(PAPER_SCALE)

    for key in ("input", "format", "model", "Q", "seed", "burnin", "samples",
                "thin", "truth", "output"):
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = val
    if getattr(args, "fixed_eta_variance", None):
        merged["fixed_eta_variance"] = True

    prior = dict(merged["prior"])
    fam = getattr(args, "prior", None)
    if fam is not None and fam != prior.get("prior"):
        prior = {"prior": fam}  # family switch drops stale parameters
    for flag, key in (("alpha", "alpha"), ("sigma", "sigma"), ("gamma", "gamma"), ("K", "K")):
        val = getattr(args, flag, None)
        if val is not None:
            prior[key] = val
            if flag != "K":
                prior.pop("auto", None)  # explicit parameters disable elicitation
    if getattr(args, "auto", None):
        prior["auto"] = True
    merged["prior"] = prior

    if merged["input"] is None:
        raise ValueError("an input network is required (-i/--input)")
    # absolute paths keep manifests usable from any working directory
    for key in ("input", "truth", "output"):
        if merged[key] is not None:
            merged[key] = os.path.abspath(merged[key])
    return RunConfig(**merged)


def _load_net(path, fmt):
    if fmt == "edge-list":
        return load_network(path, format=fmt, header=sniff_edge_list_header(path))
    return load_network(path, format=fmt)


def _build_kind(model, Q):
    if model == "cm":
        return CM()
    return CDM(Q=Q) if model == "cdm" else CBM(Q=Q)


def _resolve_prior(prior_cfg, g):
    fam = prior_cfg.get("prior")
    if fam not in GRID_PRIORS:
        raise ValueError(f"unknown prior {fam!r}, expected one of {GRID_PRIORS}")
    if prior_cfg.get("auto"):
        md = g.mean_degree()
        if md == 0:
            raise ValueError("cannot auto-elicit on a network with no edges")
        k_dm = int(prior_cfg.get("K", min(g.n, DM_DEFAULT_K_CAP)))
        return elicit(fam, g.n, md, K_dm=k_dm)
    try:
        return prior_from_dict(prior_cfg)
    except KeyError as exc:
        raise ValueError(f"prior {fam!r} needs parameter {exc.args[0]!r} (or use --auto)") from None


def _write_manifest(outdir, command, config):
    manifest = {"artifact": "blockforge", "version": __version__,
                "command": command, "config": config}
    (Path(outdir) / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _csv_val(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _jsonable(v):
    if isinstance(v, float) and math.isnan(v):
        return None
    return v


# ---- subcommands ------------------------------------------------------------


def _cmd_simulate(args):
    cfg = {}
    if args.config:
        cfg = _load_config_file(args.config)
        unknown = set(cfg) - {"scenario", "seed", "n", "K", "within_pool", "between_pool", "sizes"}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
    if args.scenario is not None:
        cfg["scenario"] = args.scenario
    if args.seed is not None:
        cfg["seed"] = args.seed
    seed = int(cfg.get("seed", 0))

    if "n" in cfg or "K" in cfg:
        if not ("n" in cfg and "K" in cfg):
            raise ValueError("custom generation needs both n and K")
        spec = ScenarioSpec(
            n=int(cfg["n"]), K=int(cfg["K"]),
            within_pool=tuple(cfg.get("within_pool", ScenarioSpec.within_pool)),
            between_pool=tuple(cfg.get("between_pool", ScenarioSpec.between_pool)),
            sizes=tuple(cfg["sizes"]) if cfg.get("sizes") else None,
            seed=seed,
        )
        cfg_out = {"n": spec.n, "K": spec.K, "within_pool": list(spec.within_pool),
                   "between_pool": list(spec.between_pool),
                   "sizes": list(spec.sizes) if spec.sizes else None, "seed": seed}
    else:
        if "scenario" not in cfg:
            raise ValueError("simulate needs --scenario (or n and K in a config file)")
        spec = scenario(int(cfg["scenario"]), seed=seed)
        cfg_out = {"scenario": int(cfg["scenario"]), "seed": seed}

    g, truth, B = generate(spec)
    outdir = Path(args.output or "out")
    outdir.mkdir(parents=True, exist_ok=True)
    save_network(g, outdir / "network.txt", format="edge-list", header=True)
    save_partition(truth, outdir / "truth.csv")
    np.savetxt(outdir / "blocks.csv", B, fmt="%.17g", delimiter=",", newline="\n")
    _write_manifest(outdir, "simulate", cfg_out)
    print(f"simulated n={g.n} network with {truth.k_star} communities, "
          f"{g.n_edges()} edges -> {outdir}")
    return 0


def _fit_one(cfg):
    """Shared by fit and compare workers: run one chain, write artifacts."""
    g = _load_net(cfg.input, cfg.format)
    kind = _build_kind(cfg.model, cfg.Q)
    prior = _resolve_prior(cfg.prior, g)
    chain_cfg = ChainConfig(
        burn_in=cfg.burnin, n_samples=cfg.samples, thin=cfg.thin, seed=cfg.seed,
        fixed_eta_variance=cfg.fixed_eta_variance,
    )
    samples = run_chain(kind, g, prior, chain_cfg)
    outdir = Path(cfg.output)
    outdir.mkdir(parents=True, exist_ok=True)
    save_checkpoints(samples, outdir / "checkpoints.jsonl")
    save_trace(samples, outdir / "trace.csv")
    resolved = asdict(cfg)
    resolved["prior"] = _prior_dict(prior)
    _write_manifest(outdir, "fit", resolved)
    return samples


def _prior_dict(prior):
    from .priors import prior_to_dict

    return prior_to_dict(prior)


def _cmd_fit(args):
    cfg = _merge_run_config(args)
    samples = _fit_one(cfg)
    print(f"fit {cfg.model}+{cfg.prior['prior']}: {samples.n_draws} draws retained, "
          f"K* range {samples.k_star.min()}..{samples.k_star.max()} -> {cfg.output}")
    return 0


def _load_run(rundir):
    rundir = Path(rundir)
    manifest = json.loads((rundir / "manifest.json").read_text(encoding="utf-8"))
    rcfg = manifest["config"]
    g = _load_net(rcfg["input"], rcfg.get("format", "edge-list"))
    labels, etas, kstars, logliks, iters = load_checkpoints(rundir / "checkpoints.jsonl")
    cells = [cell_terms(g, lab, eta) for lab, eta in zip(labels, etas)]
    nan = np.full(len(labels), math.nan)
    samples = PosteriorSamples(
        labels=labels, eta_blocks=etas, k_star=kstars, loglik=logliks,
        cell_loglik=cells,
        trace={"iter": iters, "k_star": kstars, "loglik": logliks,
               "accept_eta": nan, "accept_u": nan},
        config=ChainConfig(
            burn_in=rcfg.get("burnin", 0), n_samples=len(labels),
            thin=rcfg.get("thin", 1), seed=rcfg.get("seed", 0),
            fixed_eta_variance=rcfg.get("fixed_eta_variance", False),
        ),
        kind=_build_kind(rcfg.get("model", "cm"), rcfg.get("Q", 4)),
        prior=prior_from_dict(rcfg["prior"]),
        network=g,
    )
    return samples, rcfg


REPORT_COLUMNS = ("vi_to_truth", "vi_ball_radius", "H_median", "H_q25", "H_q75",
                  "ari", "fdr", "fnr", "waic", "auc", "mse", "logloss")


def _report_row(report, head):
    d = report.as_dict()
    return ",".join(list(head) + [_csv_val(d[c]) for c in REPORT_COLUMNS])


def _cmd_evaluate(args):
    samples, rcfg = _load_run(args.input)
    truth_path = args.truth or rcfg.get("truth")
    truth = load_partition(truth_path) if truth_path else None
    report = fit_report(samples, truth=truth)
    outdir = Path(args.output or args.input)
    outdir.mkdir(parents=True, exist_ok=True)

    center = point_estimate(samples.partitions())
    save_partition(center, outdir / "point_estimate.csv")
    with open(outdir / "report.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("model,prior," + ",".join(REPORT_COLUMNS) + "\n")
        fh.write(_report_row(report, (rcfg.get("model", "cm"), rcfg["prior"]["prior"])) + "\n")
    payload = {k: _jsonable(v) for k, v in report.as_dict().items()}
    payload.update(model=rcfg.get("model", "cm"), prior=rcfg["prior"]["prior"])
    (outdir / "report.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                                        encoding="utf-8")
    print(_report_row(report, (rcfg.get("model", "cm"), rcfg["prior"]["prior"])))
    return 0


def _cmd_ppc(args):
    samples, rcfg = _load_run(args.input)
    rng = np.random.default_rng(args.seed if args.seed is not None else 0)
    rep = posterior_predictive_check(samples, samples.network, rng,
                                     draws_per_sample=args.draws_per_sample)
    outdir = Path(args.output or args.input)
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / "ppc_summary.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("statistic,observed,median,lo95,hi95,lo99,hi99,dropped\n")
        for name, e in rep.entries.items():
            fh.write(",".join([name] + [_csv_val(v) for v in
                     (e.observed, e.median, e.lo95, e.hi95, e.lo99, e.hi99, e.dropped)]) + "\n")
    with open(outdir / "ppc_replicates.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("statistic,replicate_value\n")
        for name, vals in rep.replicates.items():
            for v in vals:
                fh.write(f"{name},{_csv_val(float(v))}\n")
    print(f"ppc: {rep.n_replicates} replicates -> {outdir}")
    return 0


def _compare_cell(payload):
    """Worker: one model x prior cell of the comparison grid."""
    cfg = RunConfig(**payload["cfg"])
    samples = _fit_one(cfg)
    truth = load_partition(payload["truth"]) if payload["truth"] else None
    report = fit_report(samples, truth=truth)
    return payload["idx"], _report_row(report, (payload["run_id"], cfg.model,
                                                cfg.prior["prior"]))


def _append_line(path, line):
    # single O_APPEND write keeps concurrent rows from interleaving
    fd = os.open(path, os.O_WRONLY | os.O_APPEND | os.O_CREAT, 0o644)
    try:
        os.write(fd, (line + "\n").encode("utf-8"))
    finally:
        os.close(fd)


def _cmd_compare(args):
    cfg = _merge_run_config(args)
    if getattr(args, "grid", None) not in (None, "full"):
        raise ValueError(f"unknown grid {args.grid!r}, expected 'full'")
    outdir = Path(cfg.output)
    outdir.mkdir(parents=True, exist_ok=True)

    cells = [(m, p) for m in GRID_MODELS for p in GRID_PRIORS]
    seeds = np.random.SeedSequence(cfg.seed).spawn(len(cells))
    payloads = []
    for idx, ((model, fam), ss) in enumerate(zip(cells, seeds)):
        cell_cfg = asdict(cfg)
        cell_cfg.update(
            model=model, prior={"prior": fam, "auto": True},
            seed=int(ss.generate_state(1, np.uint64)[0]),
            output=str(outdir / "cells" / f"{model}_{fam}"),
        )
        payloads.append({"idx": idx, "cfg": cell_cfg, "truth": cfg.truth,
                         "run_id": f"{model}-{fam}"})

    env_cap = os.environ.get("BLOCKFORGE_THREADS")
    max_workers = int(env_cap) if env_cap else (os.cpu_count() or 1)
    max_workers = max(1, min(max_workers, len(cells)))

    table_path = outdir / "compare.csv"
    header = "run_id,model,prior," + ",".join(REPORT_COLUMNS)
    with open(table_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
    rows = {}
    with ProcessPoolExecutor(max_workers=max_workers) as pool:
        futures = [pool.submit(_compare_cell, pl) for pl in payloads]
        for fut in as_completed(futures):
            idx, row = fut.result()
            rows[idx] = row
            _append_line(table_path, row)
    # rewrite in grid order once all cells finished
    with open(table_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for idx in range(len(cells)):
            fh.write(rows[idx] + "\n")
    _write_manifest(outdir, "compare", asdict(cfg))
    print(f"compare: {len(cells)} cells -> {table_path}")
    return 0


def _cmd_elicit(args):
    g = _load_net(args.input, args.format or "edge-list")
    md = g.mean_degree()
    if md == 0:
        raise ValueError("cannot elicit on a network with no edges")
    families = [args.prior] if args.prior else list(GRID_PRIORS)
    out = {}
    for fam in families:
        try:
            prior = elicit(fam, g.n, md, K_dm=args.K or min(g.n, DM_DEFAULT_K_CAP))
            out[fam] = _prior_dict(prior)
        except ValueError as exc:
            out[fam] = {"error": str(exc)}
    print(json.dumps(out, indent=2, sort_keys=True))
    return 0


# ---- parser -----------------------------------------------------------------


def _add_chain_flags(p):
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--burnin", type=int, default=None)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--thin", type=int, default=None)
    p.add_argument("--paper-scale", dest="paper_scale", action="store_true", default=None,
                   help="use the long-chain settings (burn-in 100000, 10000 draws, thin 50)")
    p.add_argument("--fixed-eta-variance", dest="fixed_eta_variance",
                   action="store_true", default=None,
                   help="fix the hybrid intercept prior variance at 3 instead of learning it")
    p.add_argument("--config", default=None,
                   help="JSON config file (a manifest.json from a previous run also works)")


def _add_model_flags(p):
    p.add_argument("--model", choices=GRID_MODELS, default=None)
    p.add_argument("--Q", type=int, default=None, help="latent dimension for cdm/cbm")
    p.add_argument("--prior", choices=GRID_PRIORS, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--K", type=int, default=None, help="slot count for the dm prior")
    p.add_argument("--auto", action="store_true", default=None,
                   help="elicit prior parameters from the network's mean degree")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="blockforge",
        description="Bayesian community detection in binary networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a planted-partition network")
    p.add_argument("--scenario", type=int, choices=(1, 2), default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--config", default=None)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("fit", help="run one MCMC fit")
    p.add_argument("-i", "--input", default=None)
    p.add_argument("--format", choices=FORMATS, default=None)
    p.add_argument("--truth", default=None)
    p.add_argument("-o", "--output", default=None)
    _add_model_flags(p)
    _add_chain_flags(p)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("evaluate", help="summarize a finished fit (input = run directory)")
    p.add_argument("-i", "--input", required=True, help="run directory from a fit")
    p.add_argument("--truth", default=None)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("ppc", help="posterior predictive checks (input = run directory)")
    p.add_argument("-i", "--input", required=True, help="run directory from a fit")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--draws-per-sample", dest="draws_per_sample", type=int, default=1)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=_cmd_ppc)

    p = sub.add_parser("compare", help="fit the full model x prior grid")
    p.add_argument("-i", "--input", default=None)
    p.add_argument("--format", choices=FORMATS, default=None)
    p.add_argument("--truth", default=None)
    p.add_argument("-o", "--output", default=None)
    p.add_argument("--grid", default=None, help="grid preset (full = 3 models x 4 priors)")
    p.add_argument("--Q", type=int, default=None)
    _add_chain_flags(p)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("elicit", help="print elicited prior parameters for a network")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("--format", choices=FORMATS, default=None)
    p.add_argument("--prior", choices=GRID_PRIORS, default=None)
    p.add_argument("--K", type=int, default=None)
    p.set_defaults(func=_cmd_elicit)
    return parser


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except NumericalFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
