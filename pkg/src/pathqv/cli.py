"""Command-line frontend: ``pathqv <command> [options]``.

Exit codes: 0 success, 2 validation error, 3 internal invariant violation
(a diagnostic dump goes to stderr).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from typing import Sequence

import numpy as np

from . import __version__
from ._numerics import sup_norm
from .exceptions import InvariantViolation, PathError
from .integrals import common_grid, follmer_integral, ibp_residual_typical, lebesgue_stieltjes
from .partitions import (drawupdown, epsilon_partition, lebesgue_1d, lebesgue_multi,
                         oscillation)
from .paths import SampledPath, load_csv, synth_oscillator, synth_walk, write_csv
from .quadvar import discrete_qv, qv_limit
from .truncvar import qv_via_tv, truncated_variation, tv_integral_identity, tv_sandwich_check

COMMANDS = ("synth", "partition", "qv", "tv", "integrate", "converge", "report")
IDENTITY_RTOL = 1e-9
NO_LIMIT_RUN = 4
NO_LIMIT_GROWTH = 2.0


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    input: str | None = None
    output: str | None = None
    format: str | None = None
    n_min: int = 3
    n_max: int = 10
    c_grid: tuple = (0.25, 0.125, 0.0625)
    tol: float = 1e-9
    seeds: tuple = (0,)
    jump_threshold: float | None = None  # None: h for generated walks, else 0
    # generators
    generator: str | None = None
    steps: int = 4096
    h: float = 2.0 ** -6
    horizon: float | None = None
    osc_n_max: int = 32
    # command specific
    family: str = "lebesgue"
    level: int = 4
    eps: float | None = None
    coord: int = 1
    method: str = "auto"
    integrand: str | None = None
    process_csv: str | None = None
    trace: str | None = None
    out_dir: str | None = None

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.n_min > self.n_max:
            raise ConfigError(f"empty level range {self.n_min}..{self.n_max}")
        if self.n_min < 0:
            raise ConfigError("levels must be >= 0")
        if not self.tol > 0:
            raise ConfigError("tolerance must be > 0")
        cs = list(self.c_grid)
        if not cs or any(not c > 0 for c in cs):
            raise ConfigError("c grid must be non-empty and positive")
        if any(b >= a for a, b in zip(cs, cs[1:])):
            raise ConfigError("c grid must be strictly decreasing")
        if self.jump_threshold is not None and self.jump_threshold < 0:
            raise ConfigError("jump threshold must be >= 0")
        if self.format not in (None, "csv", "json"):
            raise ConfigError("format must be csv or json")
        if self.steps < 1 or self.osc_n_max < 1:
            raise ConfigError("generator sizes must be positive")
        if not (self.h > 0 and (self.horizon is None or self.horizon > 0)):
            raise ConfigError("step size and horizon must be positive")
        if self.method not in ("auto", "dp", "fast"):
            raise ConfigError("method must be auto, dp or fast")
        if self.eps is not None and not self.eps > 0:
            raise ConfigError("eps must be > 0")
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d["c_grid"] = list(self.c_grid)
        d["seeds"] = list(self.seeds)
        return d


# -- parsing -----------------------------------------------------------------

def parse_levels(text: str) -> tuple[int, int]:
    text = str(text).strip()
    lo, sep, hi = text.partition("..")
    try:
        a = int(lo)
        b = int(hi) if sep else a
    except ValueError:
        raise ConfigError(f"bad level range {text!r}; expected N or A..B") from None
    return a, b


def parse_floats(text) -> tuple:
    if isinstance(text, (list, tuple)):
        return tuple(float(x) for x in text)
    try:
        return tuple(float(x) for x in str(text).split(",") if x.strip())
    except ValueError:
        raise ConfigError(f"bad number list {text!r}") from None


def parse_ints(text) -> tuple:
    if isinstance(text, (list, tuple)):
        return tuple(int(x) for x in text)
    text = str(text).strip()
    if ".." in text:
        a, b = parse_levels(text)
        return tuple(range(a, b + 1))
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise ConfigError(f"bad integer list {text!r}") from None


def read_config_file(path: str) -> dict:
    """``key = value`` lines; ``#`` starts a comment; keys use flag names."""
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    for no, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{no}: expected key=value")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


_CONVERTERS = {
    "input": str, "output": str, "format": str, "tol": float, "jump_threshold": float,
    "steps": int, "h": float, "horizon": float, "osc_n_max": int, "family": str,
    "level": int, "eps": float, "coord": int, "method": str, "integrand": str,
    "process_csv": str, "trace": str, "out_dir": str, "generator": str,
}
_ALIASES = {"n_max_osc": "osc_n_max", "n_max_oscillator": "osc_n_max", "c": "c_grid", "seed": "seeds"}


def _apply(settings: dict, key: str, value) -> None:
    key = _ALIASES.get(key, key)
    if key == "levels":
        settings["n_min"], settings["n_max"] = parse_levels(value)
    elif key == "c_grid":
        settings["c_grid"] = parse_floats(value)
    elif key == "seeds":
        settings["seeds"] = parse_ints(value)
    elif key in _CONVERTERS:
        try:
            settings[key] = _CONVERTERS[key](value)
        except ValueError:
            raise ConfigError(f"bad value for {key}: {value!r}") from None
    else:
        raise ConfigError(f"unknown setting {key!r}")


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    common = argparse.ArgumentParser(add_help=False, argument_default=S)
    common.add_argument("--config", help="key=value file; flags override it")
    common.add_argument("-o", "--output", help="primary artifact path")
    common.add_argument("--format", choices=("csv", "json"), help="primary artifact format (default: from -o suffix)")
    common.add_argument("--horizon", type=float, help="time horizon T")

    gen = argparse.ArgumentParser(add_help=False, argument_default=S)
    g = gen.add_mutually_exclusive_group()
    g.add_argument("--walk", dest="generator", action="store_const", const="walk", help="scaled ±h random walk")
    g.add_argument("--oscillator", dest="generator", action="store_const", const="oscillator",
                   help="n² swings of size 1/√n on [1/(n+1), 1/n]")
    gen.add_argument("--steps", type=int)
    gen.add_argument("--h", type=float, help="walk step size")
    gen.add_argument("--n-max", dest="osc_n_max", type=int, help="oscillator blocks")

    inp = argparse.ArgumentParser(add_help=False, argument_default=S)
    inp.add_argument("-i", "--input", help="CSV with header t,x1..xd")

    levels = argparse.ArgumentParser(add_help=False, argument_default=S)
    levels.add_argument("--levels", help="dyadic level range, e.g. 3..10")
    levels.add_argument("--tol", type=float, help="Cauchy tolerance")
    levels.add_argument("--jump-threshold", dest="jump_threshold", type=float, help="jump size threshold")

    cgrid = argparse.ArgumentParser(add_help=False, argument_default=S)
    cgrid.add_argument("--c", dest="c_grid", help="comma-separated decreasing truncation levels")
    cgrid.add_argument("--method", choices=("auto", "dp", "fast"))

    p = argparse.ArgumentParser(prog="pathqv", description="Pathwise quadratic variation toolkit.")
    p.add_argument("--version", action="version", version=f"pathqv {__version__}")
    sub = p.add_subparsers(dest="command", required=True, metavar="command")

    s = sub.add_parser("synth", parents=[common, gen], help="write a synthetic path as CSV")
    s.add_argument("--seed", dest="seeds", default=S)

    s = sub.add_parser("partition", parents=[common, inp], help="compute one partition")
    s.add_argument("--family", choices=("lebesgue", "drawupdown", "epsilon"), default=S)
    s.add_argument("--level", type=int, default=S)
    s.add_argument("--eps", type=float, default=S)
    s.add_argument("--trace", default=S, help="also write the JSON trace here")

    s = sub.add_parser("qv", parents=[common, inp, levels], help="QV along Lebesgue partitions")
    s.add_argument("--process-csv", dest="process_csv", default=S)

    sub.add_parser("tv", parents=[common, inp, cgrid], help="truncated variation table")

    s = sub.add_parser("integrate", parents=[common, inp, levels], help="Föllmer integral ∫ g(s-) dx(s)")
    s.add_argument("--integrand", default=S, help="CSV for g (default: x itself)")
    s.add_argument("--coord", type=int, default=S, help="1-based coordinate of the input")
    s.add_argument("--process-csv", dest="process_csv", default=S)

    for name, text in (("converge", "TV and partition convergence study"),
                       ("report", "study plus CSV tables and PNG figures")):
        s = sub.add_parser(name, parents=[common, inp, gen, levels, cgrid], help=text)
        s.add_argument("--seeds", default=S, help="e.g. 0..31 or 1,2,3")
        s.add_argument("--out-dir", dest="out_dir", default=S, help="directory for tables and figures")
    return p


def resolve_config(argv: Sequence[str] | None = None) -> RunConfig:
    try:
        ns = build_parser().parse_args(argv)
    except SystemExit as exc:
        raise ConfigError("invalid arguments") if exc.code == 2 else exc
    flags = vars(ns)
    settings: dict = {}
    if "config" in flags:
        for k, v in read_config_file(flags.pop("config")).items():
            _apply(settings, k, v)
    command = flags.pop("command")
    for k, v in flags.items():
        if k == "levels":
            settings["n_min"], settings["n_max"] = parse_levels(v)
        elif k in ("c_grid", "seeds"):
            _apply(settings, k, v)
        else:
            settings[k] = v
    if command in ("converge", "report") and settings.get("input") and settings.get("generator"):
        raise ConfigError("give either --input or a generator, not both")
    settings.pop("command", None)
    cfg = RunConfig(command=command, **settings)
    if cfg.jump_threshold is None:
        # a generated walk stands in for a continuous path: its ±h moves are not jumps
        walk = cfg.generator == "walk" and command in ("converge", "report")
        cfg = replace(cfg, jump_threshold=cfg.h if walk else 0.0)
    return cfg.validate()


# -- helpers -------------------------------------------------------------------

def _threads() -> int:
    raw = os.environ.get("PATHQV_THREADS")
    if raw is None:
        return min(4, os.cpu_count() or 1)
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"PATHQV_THREADS must be an integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError("PATHQV_THREADS must be >= 1")
    return n


def pool_map(fn, items):
    """Map over a thread pool; results come back in input order."""
    items = list(items)
    n = min(_threads(), max(len(items), 1))
    if n == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=True) + "\n"


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    d = os.path.dirname(path)
    if d:
        os.makedirs(d, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _fmt(cfg: RunConfig, default: str) -> str:
    if cfg.format:
        return cfg.format
    if cfg.output and cfg.output.lower().endswith(".csv"):
        return "csv"
    if cfg.output and cfg.output.lower().endswith(".json"):
        return "json"
    return default


def _envelope(cfg: RunConfig, body: dict) -> dict:
    return {"version": __version__, "config": cfg.to_dict(), **body}


def _load(cfg: RunConfig, path: str | None = None) -> SampledPath:
    src = path or cfg.input
    if not src:
        raise ConfigError("an input CSV is required (-i)")
    if not os.path.exists(src):
        raise ConfigError(f"cannot read input {src}")
    return load_csv(src, horizon=cfg.horizon if path is None else None)


def _generate(cfg: RunConfig, seed: int) -> SampledPath:
    if cfg.generator == "oscillator":
        return synth_oscillator(cfg.osc_n_max)
    return synth_walk(cfg.steps, horizon=cfg.horizon or 1.0, step_size=cfg.h, seed=seed)


def _scalar_or_matrix(mat: np.ndarray):
    mat = np.asarray(mat, dtype=float)
    return float(mat[0, 0]) if mat.shape == (1, 1) else mat.tolist()


# -- commands ------------------------------------------------------------------

def cmd_synth(cfg: RunConfig) -> int:
    if cfg.generator is None:
        raise ConfigError("synth needs --walk or --oscillator")
    if len(cfg.seeds) != 1:
        raise ConfigError("synth takes a single --seed")
    _write(cfg.output, write_csv(_generate(cfg, cfg.seeds[0])))
    return 0


def cmd_partition(cfg: RunConfig) -> int:
    path = _load(cfg)
    trace = None
    if cfg.family == "lebesgue":
        if path.dim == 1:
            trace = lebesgue_1d(path, cfg.level)
            part = trace.partition
        else:
            part = lebesgue_multi(path, cfg.level)
    elif cfg.family == "drawupdown":
        trace = drawupdown(path, cfg.level)
        part = trace.combined
    else:
        eps = cfg.eps if cfg.eps is not None else math.ldexp(1.0, -cfg.level)
        part = epsilon_partition(path, eps)
    info = trace.to_dict() if trace is not None else {"times": part.times.tolist()}
    info.update(kind=part.kind, exhausted=part.exhausted, points=len(part),
                oscillation=oscillation(path, part))
    if cfg.trace:
        _write(cfg.trace, _dumps(_envelope(cfg, info)))
    if _fmt(cfg, "csv") == "csv":
        _write(cfg.output, part.to_csv())
    else:
        _write(cfg.output, _dumps(_envelope(cfg, info)))
    return 0


def cmd_qv(cfg: RunConfig) -> int:
    path = _load(cfg)
    proc, report = qv_limit(path, cfg.n_min, cfg.n_max, cfg.tol, cfg.jump_threshold)
    if cfg.process_csv:
        _write(cfg.process_csv, proc.to_csv())
    if _fmt(cfg, "json") == "csv":
        _write(cfg.output, proc.to_csv())
        return 0
    body = report.to_dict()
    body.update(qv_T=proc.terminal.tolist(), jump_T=proc.jump_part[-1].tolist(),
                cont_T=proc.cont_part[-1].tolist())
    _write(cfg.output, _dumps(_envelope(cfg, body)))
    return 0


def tv_table(path: SampledPath, c_grid, method: str = "auto") -> list[dict]:
    """Per-c TV, sandwich gaps and identity residual for one coordinate."""
    rows = []
    for c in c_grid:
        tv = truncated_variation(path, c, method)
        sw = tv_sandwich_check(path, c, method)
        ident = tv_integral_identity(path, c)
        if not ident.relative_residual <= IDENTITY_RTOL:
            raise InvariantViolation("integral identity residual too large", {
                "c": c, "lhs_T": float(ident.lhs[-1]), "rhs_T": float(ident.rhs[-1]), "relative_residual": ident.relative_residual})
        rows.append({k: float(v) for k, v in {
            "c": c,
            "tv_c": tv.total,
            "c_tv_c": c * tv.total,
            "tv_2c": sw.tv_2c[-1],
            "tv_regularized": sw.tv_regularized[-1],
            "sandwich_lower_gap": sw.lower_gap,
            "sandwich_upper_gap": sw.upper_gap,
            "identity_residual": ident.residual,
            "identity_relative_residual": ident.relative_residual,
        }.items()})
    return rows


def cmd_tv(cfg: RunConfig) -> int:
    path = _load(cfg)
    if path.dim != 1:
        raise ConfigError("tv needs a 1-d path")
    rows = tv_table(path, cfg.c_grid, cfg.method)
    if _fmt(cfg, "json") == "csv":
        cols = list(rows[0])
        text = ",".join(cols) + "\n" + "".join(",".join(repr(r[k]) for k in cols) + "\n" for r in rows)
        _write(cfg.output, text)
    else:
        _write(cfg.output, _dumps(_envelope(cfg, {"table": rows})))
    return 0


def cmd_integrate(cfg: RunConfig) -> int:
    x = _load(cfg)
    if not 1 <= cfg.coord <= x.dim:
        raise ConfigError(f"--coord must lie in 1..{x.dim}")
    x = x.coordinate(cfg.coord - 1)
    g = _load(cfg, cfg.integrand) if cfg.integrand else x
    if g.dim != 1:
        raise ConfigError("integrand must be 1-d")
    g, x = common_grid(g, x)
    joint = SampledPath(x.times, np.column_stack([g.values[:, 0], x.values[:, 0]]), x.horizon)
    levels = list(range(cfg.n_min, cfg.n_max + 1))
    ladder = [lebesgue_multi(joint, n) for n in levels]
    procs, report = follmer_integral(g, x, ladder, cfg.tol)
    report = replace(report, levels=levels)
    body = report.to_dict()
    body["integral_T"] = procs[-1].terminal
    body["integral_T_by_level"] = [p.terminal for p in procs]
    body["stieltjes_T"] = lebesgue_stieltjes(g, x).terminal
    if cfg.integrand is None:
        qv = discrete_qv(x, ladder[-1])
        body["ibp"] = ibp_residual_typical(x, qv, 0, 0, ladder).to_dict()
    if cfg.process_csv:
        _write(cfg.process_csv, procs[-1].to_csv())
    if _fmt(cfg, "json") == "csv":
        _write(cfg.output, procs[-1].to_csv())
    else:
        _write(cfg.output, _dumps(_envelope(cfg, body)))
    return 0


# -- studies -------------------------------------------------------------------

def no_finite_limit(values: Sequence[float], run: int = NO_LIMIT_RUN, growth: float = NO_LIMIT_GROWTH) -> bool:
    """A strictly increasing stretch of >= ``run`` values growing >= ``growth``×."""
    v = list(values)
    start = 0
    for k in range(1, len(v) + 1):
        if k == len(v) or not v[k] > v[k - 1]:
            if k - start >= run and v[start] > 0 and v[k - 1] >= growth * v[start]:
                return True
            start = k
    return False


def _study_one(cfg: RunConfig, path: SampledPath) -> dict:
    ref, rep = qv_limit(path, cfg.n_min, cfg.n_max, cfg.tol, cfg.jump_threshold)
    ests = qv_via_tv(path, cfg.c_grid, ref, cfg.method)
    ref_T = ref.cont_part[-1]
    tv = [{
        "c": e.c,
        "estimate": e.statement[-1],
        "proof_estimate": e.proof[-1],
        "reference": ref_T,
        "abs_err": float(np.sqrt(((e.statement[-1] - ref_T) ** 2).sum())),
        "sup_err": e.error,
    } for e in ests]
    parts = []
    levels = range(cfg.n_min, cfg.n_max + 1)
    for n in levels:
        parts.append(("lebesgue", n, lebesgue_multi(path, n)))
    if path.dim == 1:
        for n in levels:
            parts.append(("drawupdown", n, drawupdown(path, n).combined))
    for n in levels:
        parts.append(("epsilon", n, epsilon_partition(path, math.ldexp(1.0, -n))))
    prow = []
    for fam, n, part in parts:
        q = discrete_qv(path, part)
        prow.append({"family": fam, "level": n, "points": len(part),
                     "oscillation": oscillation(path, part),
                     "error": sup_norm(q.matrices, ref.matrices)})
    reference = rep.to_dict()
    reference.update(qv_T=_scalar_or_matrix(ref.terminal), jump_T=_scalar_or_matrix(ref.jump_part[-1]),
                     cont_T=_scalar_or_matrix(ref_T))
    return {"reference": reference, "tv": tv, "partitions": prow}


def converge_study(cfg: RunConfig) -> tuple[dict, SampledPath]:
    """Run the study over the input or over each seed; returns (study, first path)."""
    if cfg.input:
        paths = [_load(cfg)]
    elif cfg.generator == "oscillator":
        paths = [_generate(cfg, 0)]
    elif cfg.generator == "walk":
        paths = [_generate(cfg, s) for s in cfg.seeds]
    else:
        raise ConfigError("converge needs --input or a generator")
    per = pool_map(lambda p: _study_one(cfg, p), paths)

    tv_rows = []
    for k, c in enumerate(cfg.c_grid):
        rows = [r["tv"][k] for r in per]
        est = np.mean([r["estimate"] for r in rows], axis=0)
        tv_rows.append({
            "c": c,
            "estimate": _scalar_or_matrix(est),
            "proof_estimate": _scalar_or_matrix(np.mean([r["proof_estimate"] for r in rows], axis=0)),
            "reference": _scalar_or_matrix(np.mean([r["reference"] for r in rows], axis=0)),
            "abs_err": float(np.mean([r["abs_err"] for r in rows])),
            "sup_err": float(np.mean([r["sup_err"] for r in rows])),
        })
    part_rows = []
    for k, row in enumerate(per[0]["partitions"]):
        rows = [r["partitions"][k] for r in per]
        part_rows.append({
            "family": row["family"], "level": row["level"],
            "points": float(np.mean([r["points"] for r in rows])),
            "oscillation": float(np.mean([r["oscillation"] for r in rows])),
            "error": float(np.mean([r["error"] for r in rows])),
        })
    trend = [r["estimate"] if isinstance(r["estimate"], float) else r["estimate"][0][0] for r in tv_rows]
    study = {
        "paths": len(paths),
        "tv_table": tv_rows,
        "partition_table": part_rows,
        "references": [r["reference"] for r in per],
        "summary": {
            "c": [r["c"] for r in tv_rows],
            "estimate_T": [r["estimate"] for r in tv_rows],
            "reference_T": tv_rows[0]["reference"],
            "abs_err": [r["abs_err"] for r in tv_rows],
        },
        "flags": [],
    }
    if no_finite_limit(trend):
        study["flags"].append("no finite limit detected")
    bad = [i for i, r in enumerate(per) if not r["reference"]["converged"]]
    if bad:
        study["warning"] = f"reference QV did not converge for {len(bad)} of {len(per)} paths"
    return study, paths[0]


def _table_csv(rows: list[dict], cols: Sequence[str]) -> str:
    out = [",".join(cols)]
    for r in rows:
        cells = []
        for k in cols:
            v = r[k]
            if isinstance(v, list):
                v = np.asarray(v)[0, 0]
            cells.append(v if isinstance(v, str) else repr(float(v)) if not isinstance(v, int) else str(v))
        out.append(",".join(cells))
    return "\n".join(out) + "\n"


TV_COLUMNS = ("c", "estimate", "proof_estimate", "reference", "abs_err", "sup_err")
PARTITION_COLUMNS = ("family", "level", "points", "oscillation", "error")


def _write_tables(study: dict, out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    _write(os.path.join(out_dir, "tv_table.csv"), _table_csv(study["tv_table"], TV_COLUMNS))
    _write(os.path.join(out_dir, "partition_table.csv"), _table_csv(study["partition_table"], PARTITION_COLUMNS))


def cmd_converge(cfg: RunConfig) -> int:
    study, _ = converge_study(cfg)
    if cfg.out_dir:
        _write_tables(study, cfg.out_dir)
    _write(cfg.output, _dumps(_envelope(cfg, study)))
    return 0


def cmd_report(cfg: RunConfig) -> int:
    from . import plotting

    out_dir = cfg.out_dir or (os.path.dirname(cfg.output) if cfg.output else None) or "."
    study, first = converge_study(cfg)
    _write_tables(study, out_dir)
    study["figures"] = [os.path.basename(plotting.plot_tv_estimates(study, out_dir)),
                        os.path.basename(plotting.plot_partition_errors(study, out_dir)),
                        os.path.basename(plotting.plot_path(first, out_dir))]
    _write(cfg.output or os.path.join(out_dir, "study.json"), _dumps(_envelope(cfg, study)))
    return 0


HANDLERS = {
    "synth": cmd_synth, "partition": cmd_partition, "qv": cmd_qv, "tv": cmd_tv,
    "integrate": cmd_integrate, "converge": cmd_converge, "report": cmd_report,
}


def run(cfg: RunConfig) -> int:
    try:
        return HANDLERS[cfg.command](cfg)
    except InvariantViolation as exc:
        dump = {"error": str(exc), "diagnostics": exc.diagnostics, "config": cfg.to_dict()}
        sys.stderr.write("invariant violation\n" + json.dumps(dump, sort_keys=True, indent=2, default=float) + "\n")
        return 3
    except (ConfigError, PathError, ValueError, OSError) as exc:
        sys.stderr.write(f"pathqv: error: {exc}\n")
        return 2


def main(argv: Sequence[str] | None = None) -> int:
    try:
        cfg = resolve_config(argv)
    except ConfigError as exc:
        sys.stderr.write(f"pathqv: error: {exc}\n")
        return 2
    except (TypeError, ValueError) as exc:
        sys.stderr.write(f"pathqv: error: {exc}\n")
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
