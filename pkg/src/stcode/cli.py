"""Command-line interface: ``stcode <command> ...``.

Every command builds an experiment config, runs it and writes results plus a
manifest into ``--out`` (default: ``$STCODE_OUT`` or ``./results``).  Exit codes:
0 success, 1 runtime failure, 2 invalid configuration.
"""

from __future__ import annotations

import argparse
import json
import sys

from .harness import (
    ConfigError,
    ExperimentConfig,
    load_config,
    resolve_out,
    run_experiment,
    sweep,
)


def _common(p: argparse.ArgumentParser, plot: bool = False):
    p.add_argument("--seed", type=int, default=None, help="global seed (default 0)")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--threads", type=int, default=1, help="parallel worker processes")
    if plot:
        p.add_argument("--plot", action="store_true", help="also write PNG figures (needs matplotlib)")


def _mc_common(p: argparse.ArgumentParser):
    p.add_argument("--L", type=int, help="spatial size (even)")
    p.add_argument("--Lt", type=int, help="temporal size")
    p.add_argument("--N", type=int, help="gauge group Z_N")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="stcode", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("code-info", help="qubit/check counts, k and logical operators")
    p.add_argument("--dims", help="Lx,Ly,Lz")
    p.add_argument("--boundary", help="Periodic3Torus | OpenZ_KV | OpenZ_WrongA | OpenZ_WrongB")
    p.add_argument("--N", type=int)
    _common(p)

    p = sub.add_parser("ssec", help="single-shot error correction Monte Carlo")
    ssub = p.add_subparsers(dest="action", required=True)
    r = ssub.add_parser("run")
    r.add_argument("--L", type=int, help="lattice size, dims = (L, L, L)")
    r.add_argument("--dims", help="Lx,Ly,Lz (overrides --L)")
    r.add_argument("--boundary")
    r.add_argument("--sequence", help="standard | ybgr | ybrg")
    r.add_argument("--p", type=float, help="physical error rate (pX = pZ = p/2)")
    r.add_argument("--q", type=float, help="measurement flip rate")
    r.add_argument("--rounds", type=int)
    r.add_argument("--trials", type=int)
    r.add_argument("--backend", help="frame | tableau")
    r.add_argument("--mode", help="exact | fast matching")
    _common(r)

    p = sub.add_parser("mc", help="Z_N lattice gauge theory Monte Carlo")
    msub = p.add_subparsers(dest="action", required=True)
    r = msub.add_parser("run", help="plaquette vs beta, independent chains")
    _mc_common(r)
    r.add_argument("--betas", help="comma-separated beta values")
    r.add_argument("--beta-tau", dest="beta_tau", type=float, help="fixed temporal coupling")
    r.add_argument("--therm", type=int)
    r.add_argument("--meas", type=int)
    r.add_argument("--bin", type=int)
    r.add_argument("--start", help="hot | cold")
    _common(r, plot=True)
    r = msub.add_parser("hysteresis", help="ascending (hot start) and descending (cold start) beta scans")
    _mc_common(r)
    r.add_argument("--betas")
    r.add_argument("--sweeps-per-beta", dest="sweeps_per_beta", type=int)
    r.add_argument("--discard", type=int, help="sweeps dropped per beta (default: a fifth)")
    r.add_argument("--replicas", type=int, help="independent scans averaged per point")
    _common(r, plot=True)
    r = msub.add_parser("wilson", help="Wilson loops and area/perimeter fits")
    _mc_common(r)
    r.add_argument("--beta", type=float)
    r.add_argument("--beta-tau", dest="beta_tau", type=float)
    r.add_argument("--sizes", help="loop sizes as SxT list, e.g. 1x1,1x2,2x2")
    r.add_argument("--therm", type=int)
    r.add_argument("--meas", type=int)
    r.add_argument("--bin", type=int)
    r.add_argument("--start")
    _common(r, plot=True)

    p = sub.add_parser("zn", help="Z_N code verification")
    zsub = p.add_subparsers(dest="action", required=True)
    r = zsub.add_parser("verify")
    r.add_argument("--N", type=int)
    r.add_argument("--L", type=int)
    _common(r)

    p = sub.add_parser("sweep", help="run a config once per parameter value")
    p.add_argument("--config", required=True, help="template config file")
    p.add_argument("--param", required=True, help="parameter to vary")
    p.add_argument("--values", default="", help="values separated by ';' (each may be a comma list)")
    _common(p)

    p = sub.add_parser("run", help="run a config file")
    p.add_argument("--config", required=True)
    _common(p, plot=True)
    return ap


KIND = {
    ("code-info", None): "code-info",
    ("ssec", "run"): "ssec",
    ("mc", "run"): "mc-scan",
    ("mc", "hysteresis"): "mc-hysteresis",
    ("mc", "wilson"): "mc-wilson",
    ("zn", "verify"): "zn-verify",
}
SKIP = {"command", "action", "seed", "out", "threads", "plot", "config", "param", "values"}


def _report(res) -> int:
    if res.exit_code == 0:
        print(json.dumps({"status": "ok", "out": str(res.out_dir), "files": res.files}))
    else:
        print(json.dumps(res.error), file=sys.stderr)
    return res.exit_code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command in ("run", "sweep"):
            cfg = load_config(args.config)
            if args.seed is not None:
                cfg.seed = args.seed
            cfg.out = resolve_out(args.out, cfg.out)
            if args.command == "run":
                return _report(run_experiment(cfg, args.threads, args.plot))
            values = [v.strip() for v in args.values.split(";") if v.strip()]
            return _report(sweep(cfg, args.param, values, args.threads))
        kind = KIND[(args.command, getattr(args, "action", None))]
        params = {k: v for k, v in vars(args).items() if k not in SKIP and v is not None}
        cfg = ExperimentConfig.create(kind, seed=args.seed or 0, out=resolve_out(args.out), **params)
    except ConfigError as exc:
        print(json.dumps({"status": "error", "exit_code": 2, "error": "config", "message": str(exc)}),
              file=sys.stderr)
        return 2
    return _report(run_experiment(cfg, args.threads, getattr(args, "plot", False)))


if __name__ == "__main__":
    sys.exit(main())
