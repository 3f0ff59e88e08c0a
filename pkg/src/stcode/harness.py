"""Experiment configuration, execution and result persistence.

Config files are plain ``key = value`` text (``#`` starts a comment, lists are
comma separated).  Keys: ``kind``, ``seed``, ``out`` and the kind-specific
parameters of ``SCHEMA``.  Every run writes its results, the config echo
(``config.txt``) and ``manifest.json`` into the output directory.

Seeds: an SSEC run gives trial ``t`` the streams ``SeedSequence(seed,
spawn_key=(t, k))``; a Monte Carlo scan gives the chain at beta index ``i``
``SeedSequence(seed, spawn_key=(i,))``; hysteresis replica ``r`` uses keys
``(2r,)`` for the ascending and ``(2r + 1,)`` for the descending branch.  Results therefore do not
depend on ``threads``.
"""

from __future__ import annotations

import csv
import io
import json
import os
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

OUT_ENV = "STCODE_OUT"
DEFAULT_OUT = "results"


class ConfigError(ValueError):
    """Schema violation in an experiment config (exit code 2)."""


# --------------------------------------------------------------------------
# schema


def _ints(text):
    return tuple(int(v) for v in _split(text))


def _floats(text):
    return tuple(float(v) for v in _split(text))


def _split(text):
    if isinstance(text, (list, tuple)):
        return list(text)
    text = str(text).strip()
    return [t.strip() for t in text.split(",") if t.strip()] if text else []


def _sizes(text):
    out = []
    for item in _split(text):
        if isinstance(item, (list, tuple)):
            a, b = item
        else:
            a, b = str(item).lower().split("x")
        out.append((int(a), int(b)))
    return tuple(out)


def _opt_float(text):
    if text is None or str(text).strip().lower() in ("", "none"):
        return None
    return float(text)


def _fmt(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, tuple):
        if v and isinstance(v[0], tuple):
            return ",".join(f"{a}x{b}" for a, b in v)
        return ",".join(_fmt(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


# name -> (parser, default); None default means required
SCHEMA: dict[str, dict[str, tuple]] = {
    "code-info": {
        "dims": (_ints, (2, 2, 3)),
        "boundary": (str, "OpenZ_KV"),
        "N": (int, 2),
    },
    "ssec": {
        "L": (int, 2),
        "dims": (_ints, ()),
        "boundary": (str, "OpenZ_KV"),
        "sequence": (str, "standard"),
        "p": (float, 0.005),
        "q": (float, 0.005),
        "rounds": (int, 4),
        "trials": (int, 1000),
        "backend": (str, "frame"),
        "mode": (str, "exact"),
    },
    "mc-scan": {
        "L": (int, 4),
        "Lt": (int, 4),
        "N": (int, 2),
        "betas": (_floats, (0.44,)),
        "beta_tau": (_opt_float, None),
        "therm": (int, 2000),
        "meas": (int, 10000),
        "bin": (int, 100),
        "start": (str, "cold"),
    },
    "mc-hysteresis": {
        "L": (int, 4),
        "Lt": (int, 4),
        "N": (int, 2),
        "betas": (_floats, (0.40, 0.42, 0.44, 0.46, 0.48)),
        "sweeps_per_beta": (int, 2000),
        "discard": (int, -1),
        "replicas": (int, 1),
    },
    "mc-wilson": {
        "L": (int, 6),
        "Lt": (int, 6),
        "N": (int, 2),
        "beta": (float, 0.30),
        "beta_tau": (_opt_float, None),
        "sizes": (_sizes, ((1, 1), (1, 2), (2, 1), (2, 2), (1, 3), (3, 1), (2, 3), (3, 2))),
        "therm": (int, 2000),
        "meas": (int, 10000),
        "bin": (int, 100),
        "start": (str, "cold"),
    },
    "zn-verify": {
        "N": (int, 3),
        "L": (int, 2),
    },
}

CHOICES = {
    "boundary": ("Periodic3Torus", "OpenZ_KV", "OpenZ_WrongA", "OpenZ_WrongB"),
    "sequence": ("standard", "ybgr", "ybrg"),
    "backend": ("frame", "tableau"),
    "mode": ("exact", "fast"),
    "start": ("hot", "cold"),
}


@dataclass
class ExperimentConfig:
    kind: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    out: str = DEFAULT_OUT

    @classmethod
    def create(cls, kind: str, seed: int = 0, out: str = DEFAULT_OUT, **params) -> "ExperimentConfig":
        return cls(kind, normalize_params(kind, params), int(seed), str(out))

    def replace(self, **params) -> "ExperimentConfig":
        merged = dict(self.params)
        merged.update(params)
        return ExperimentConfig(self.kind, normalize_params(self.kind, merged), self.seed, self.out)

    def serialize(self) -> str:
        lines = [f"kind = {self.kind}", f"seed = {self.seed}", f"out = {self.out}"]
        for key in SCHEMA[self.kind]:
            lines.append(f"{key} = {_fmt(self.params[key])}")
        return "\n".join(lines) + "\n"


def normalize_params(kind: str, params: dict) -> dict:
    if kind not in SCHEMA:
        raise ConfigError(f"unknown experiment kind {kind!r}; expected one of {sorted(SCHEMA)}")
    schema = SCHEMA[kind]
    unknown = set(params) - set(schema)
    if unknown:
        raise ConfigError(f"unknown keys for {kind}: {sorted(unknown)}")
    out = {}
    for key, (parse, default) in schema.items():
        raw = params.get(key, default)
        try:
            out[key] = parse(raw) if raw is not None else None
        except (TypeError, ValueError):
            raise ConfigError(f"bad value for {key}: {raw!r}") from None
        if key in CHOICES and out[key] not in CHOICES[key]:
            raise ConfigError(f"{key} must be one of {CHOICES[key]}, got {out[key]!r}")
    _validate(kind, out)
    return out


def _validate(kind: str, p: dict):
    def need(cond, msg):
        if not cond:
            raise ConfigError(msg)

    if "dims" in p and p["dims"]:
        need(len(p["dims"]) == 3, "dims needs three integers")
    for key in ("p", "q"):
        if key in p:
            need(0.0 <= p[key] <= 1.0, f"{key} must lie in [0, 1]")
    for key in ("rounds", "trials", "therm", "meas", "bin", "sweeps_per_beta", "replicas", "N", "L", "Lt"):
        if key in p:
            need(p[key] >= (1 if key in ("bin", "N", "L", "Lt", "sweeps_per_beta", "replicas") else 0),
                 f"{key} out of range")
    if kind.startswith("mc-"):
        need(p["L"] % 2 == 0, "L must be even")
        need(p["Lt"] >= 2, "Lt must be >= 2")
        need(p["N"] >= 2, "N must be >= 2")
    if kind in ("mc-scan", "mc-hysteresis"):
        need(all(b >= 0 for b in p["betas"]), "betas must be non-negative")
    if kind == "mc-hysteresis":
        need(p["discard"] < p["sweeps_per_beta"], "discard must be smaller than sweeps_per_beta")
    if kind == "mc-wilson":
        need(len(p["sizes"]) >= 2, "a Wilson fit needs at least two loop sizes")
    if kind == "zn-verify":
        need(p["N"] >= 2, "N must be >= 2")


def parse_config(text: str) -> ExperimentConfig:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = val
    kind = values.pop("kind", None)
    if kind is None:
        raise ConfigError("missing 'kind'")
    try:
        seed = int(values.pop("seed", 0))
    except ValueError:
        raise ConfigError("seed must be an integer") from None
    out = values.pop("out", DEFAULT_OUT)
    return ExperimentConfig(kind, normalize_params(kind, values), seed, out)


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return parse_config(text)


def resolve_out(flag: str | None, config_out: str | None = None) -> str:
    """Output directory precedence: explicit flag, then $STCODE_OUT, then the config."""
    if flag:
        return flag
    env = os.environ.get(OUT_ENV)
    if env:
        return env
    return config_out or DEFAULT_OUT


# --------------------------------------------------------------------------
# writers


def _csv_text(header: list[str], rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=header, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _cell(r.get(k)) for k in header})
    return buf.getvalue()


def _cell(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (np.floating,)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


def _json_text(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(type(o).__name__)


def code_version() -> str:
    from importlib.metadata import PackageNotFoundError, version

    try:
        return version("artifact")
    except PackageNotFoundError:
        from . import __version__

        return __version__


# --------------------------------------------------------------------------
# experiments (each returns {filename: text} and a table of rows)


@dataclass
class ExperimentOutput:
    files: dict  # name -> text
    rows: list  # primary table rows (used by sweeps)
    header: list


def _lattice_spec(p):
    from .lattice import LatticeSpec

    dims = tuple(p["dims"]) if p.get("dims") else (p["L"],) * 3
    return LatticeSpec(dims, p["boundary"], p.get("N", 2))


def _exp_code_info(cfg: ExperimentConfig, threads: int) -> ExperimentOutput:
    from .analysis import code_info
    from .lattice import build_code_lattice

    info = code_info(build_code_lattice(_lattice_spec(cfg.params)))
    row = {k: info[k] for k in ("qubits", "checks", "stabilizers", "k")}
    return ExperimentOutput({"code_info.json": _json_text(info)}, [row], list(row))


SSEC_HEADER = ["dims", "boundary", "sequence", "p", "q", "rounds", "trials", "failures", "rate",
               "wilson_lo", "wilson_hi"]


def _exp_ssec(cfg: ExperimentConfig, threads: int) -> ExperimentOutput:
    from .ssec import NoiseModel, run_trials

    p = cfg.params
    res = run_trials(_lattice_spec(p), p["sequence"], p["rounds"], NoiseModel(p["p"], p["q"]),
                     p["trials"], cfg.seed, p["backend"], threads, p["mode"])
    return ExperimentOutput({"ssec.csv": _csv_text(SSEC_HEADER, [res])}, [res], SSEC_HEADER)


MC_HEADER = ["beta", "observable", "value", "error", "branch"]


def _scan_one(args):
    from .gauge import build_euclidean_lattice, run_chain

    L, Lt, N, beta, beta_tau, therm, meas, bin_size, start, seed, idx = args
    g = build_euclidean_lattice(L, Lt, N)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(idx,))))
    res, _ = run_chain(g, beta, therm, meas, rng, start, beta_t=beta_tau, bin_size=bin_size)
    return res.mean, res.error, res.acceptance


def _exp_mc_scan(cfg: ExperimentConfig, threads: int) -> ExperimentOutput:
    p = cfg.params
    jobs = [(p["L"], p["Lt"], p["N"], b, p["beta_tau"], p["therm"], p["meas"], p["bin"], p["start"],
             cfg.seed, i) for i, b in enumerate(p["betas"])]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(_scan_one, jobs))
    else:
        results = [_scan_one(j) for j in jobs]
    rows = []
    for b, (m, e, acc) in zip(p["betas"], results):
        rows.append({"beta": b, "observable": "plaquette", "value": m, "error": e, "branch": p["start"]})
        rows.append({"beta": b, "observable": "acceptance", "value": acc, "error": 0.0, "branch": p["start"]})
    return ExperimentOutput({"plaquette.csv": _csv_text(MC_HEADER, rows)}, rows, MC_HEADER)


def _exp_mc_hysteresis(cfg: ExperimentConfig, threads: int) -> ExperimentOutput:
    from .gauge import build_euclidean_lattice, hysteresis_scan

    p = cfg.params
    g = build_euclidean_lattice(p["L"], p["Lt"], p["N"])
    discard = None if p["discard"] < 0 else p["discard"]
    h = hysteresis_scan(g, p["betas"], p["sweeps_per_beta"], cfg.seed, discard, replicas=p["replicas"])
    rows = []
    for branch, res in (("up", h.up), ("down", h.down)):
        for r in res:
            rows.append({"beta": float(r.beta), "observable": "plaquette", "value": r.mean,
                         "error": r.error, "branch": branch})
    sep = h.separation()
    report = {"loop_area": h.area, "betas": h.betas, "separation_sigma": sep, "replicas": h.replicas,
              "max_separation_sigma": float(np.max(sep)) if len(sep) else 0.0,
              "branches": {"up": "beta ascending from a hot start",
                           "down": "beta descending from a cold start"}}
    files = {"hysteresis.csv": _csv_text(MC_HEADER, rows), "hysteresis.json": _json_text(report)}
    return ExperimentOutput(files, rows, MC_HEADER)


WILSON_HEADER = ["spatial", "temporal", "area", "perimeter", "W", "W_err"]


def _exp_mc_wilson(cfg: ExperimentConfig, threads: int) -> ExperimentOutput:
    from .gauge import build_euclidean_lattice, wilson_loop_scan

    p = cfg.params
    g = build_euclidean_lattice(p["L"], p["Lt"], p["N"])
    rep = wilson_loop_scan(g, p["beta"], p["sizes"], p["therm"], p["meas"], cfg.seed, p["start"],
                           p["bin"], beta_t=p["beta_tau"])
    rows = [{"spatial": a, "temporal": b, "area": a * b, "perimeter": 2 * (a + b), "W": w, "W_err": e}
            for (a, b), w, e in zip(rep.sizes, rep.values, rep.errors)]
    files = {"wilson.csv": _csv_text(WILSON_HEADER, rows), "wilson_fit.json": _json_text(rep.to_dict())}
    return ExperimentOutput(files, rows, WILSON_HEADER)


def _exp_zn_verify(cfg: ExperimentConfig, threads: int) -> ExperimentOutput:
    from .analysis import zn_verify

    rep = zn_verify(cfg.params["N"], cfg.params["L"])
    row = {"N": rep["N"], "L": rep["L"], "ok": rep["all commutation identities hold"]}
    return ExperimentOutput({"zn_verify.json": _json_text(rep)}, [row], list(row))


RUNNERS = {
    "code-info": _exp_code_info,
    "ssec": _exp_ssec,
    "mc-scan": _exp_mc_scan,
    "mc-hysteresis": _exp_mc_hysteresis,
    "mc-wilson": _exp_mc_wilson,
    "zn-verify": _exp_zn_verify,
}


# --------------------------------------------------------------------------
# running


@dataclass
class RunResult:
    exit_code: int
    out_dir: Path
    files: list
    output: ExperimentOutput | None = None
    error: dict | None = None


def _write(out_dir: Path, files: dict):
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (out_dir / name).write_text(text, encoding="utf-8")


def run_experiment(config: ExperimentConfig, threads: int = 1, plot: bool = False) -> RunResult:
    """Run one experiment; never raises.  Exit codes: 0 ok, 1 runtime failure, 2 invalid config."""
    out_dir = Path(config.out)
    t0 = time.perf_counter()
    try:
        params = normalize_params(config.kind, config.params)
        config = ExperimentConfig(config.kind, params, config.seed, config.out)
    except ConfigError as exc:
        return _fail(out_dir, 2, "config", str(exc), config)
    try:
        output = RUNNERS[config.kind](config, max(1, int(threads)))
    except Exception as exc:  # noqa: BLE001 - reported as a machine-readable error
        return _fail(out_dir, 1, "runtime", f"{type(exc).__name__}: {exc}", config,
                     traceback.format_exc())
    files = dict(output.files)
    files["config.txt"] = config.serialize()
    _write(out_dir, files)
    if plot:
        from .plotting import plot_outputs

        for name in plot_outputs(config.kind, out_dir):
            files[name] = None
    manifest = {
        "status": "ok",
        "kind": config.kind,
        "config": config.serialize(),
        "version": code_version(),
        "wall_time_s": round(time.perf_counter() - t0, 3),
        "threads": threads,
        "outputs": sorted(files),
    }
    (out_dir / "manifest.json").write_text(_json_text(manifest), encoding="utf-8")
    return RunResult(0, out_dir, sorted(files) + ["manifest.json"], output)


def _fail(out_dir: Path, code: int, kind: str, message: str, config, tb: str | None = None) -> RunResult:
    err = {"status": "error", "exit_code": code, "error": kind, "message": message}
    if tb:
        err["traceback"] = tb
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "error.json").write_text(_json_text(err), encoding="utf-8")
    except OSError:
        pass
    return RunResult(code, out_dir, ["error.json"], None, err)


# --------------------------------------------------------------------------
# sweeps


def _sweep_one(args):
    cfg, threads = args
    return run_experiment(cfg, threads)


def sweep(template: ExperimentConfig, param: str, values, threads: int = 1) -> RunResult:
    """Run ``template`` once per value of ``param`` and aggregate the primary tables.

    Row runs go to ``<out>/<param>=<value>/``; the aggregate ``sweep.csv`` is
    sorted by the parameter value.
    """
    out_dir = Path(template.out)
    t0 = time.perf_counter()
    values = list(values)
    try:
        if template.kind not in SCHEMA:
            raise ConfigError(f"unknown experiment kind {template.kind!r}")
        if param not in SCHEMA[template.kind]:
            raise ConfigError(f"{param!r} is not a parameter of {template.kind}")
        parse = SCHEMA[template.kind][param][0]
        parsed = [parse(v) if isinstance(v, str) else v for v in values]
        labels = [_fmt(v) for v in parsed]
        if len(set(labels)) != len(labels):
            raise ConfigError("conflicting output paths: repeated sweep values")
        cfgs = [ExperimentConfig(template.kind,
                                 normalize_params(template.kind, {**template.params, param: v}),
                                 template.seed, str(out_dir / f"{param}={lab}"))
                for v, lab in zip(parsed, labels)]
    except (ConfigError, ValueError) as exc:
        return _fail(out_dir, 2, "config", str(exc), template)

    if threads > 1 and len(cfgs) > 1 and template.kind != "ssec":
        with ProcessPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(_sweep_one, [(c, 1) for c in cfgs]))
    else:
        results = [run_experiment(c, threads) for c in cfgs]
    failed = [r for r in results if r.exit_code != 0]
    if failed:
        return _fail(out_dir, failed[0].exit_code, "runtime", f"sweep row failed: {failed[0].error}",
                     template)

    order = sorted(range(len(parsed)), key=lambda i: parsed[i])
    header = [param]
    rows = []
    for i in order:
        out = results[i].output
        for h in out.header:
            if h not in header:
                header.append(h)
        for r in out.rows:
            rows.append({param: labels[i], **r})
    files = {"sweep.csv": _csv_text(header, rows)}
    _write(out_dir, files)
    manifest = {
        "status": "ok",
        "kind": "sweep",
        "template": template.serialize(),
        "param": param,
        "values": [labels[i] for i in order],
        "version": code_version(),
        "wall_time_s": round(time.perf_counter() - t0, 3),
        "outputs": ["sweep.csv"],
    }
    (out_dir / "manifest.json").write_text(_json_text(manifest), encoding="utf-8")
    return RunResult(0, out_dir, ["sweep.csv", "manifest.json"],
                     ExperimentOutput(files, rows, header))
