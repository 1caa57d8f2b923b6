"""``forge``: seeded batch experiments driven by a TOML config file.

Usage::

    forge run CONFIG [--seed S] [--workers W] [--out DIR]
    forge validate CONFIG

Exit status is 0 on success, 1 for configuration errors and 2 when every
realization of a run failed numerically.
"""

import argparse
import csv
import json
import os
import platform
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace

import numpy as np
import scipy
import tomli

from . import __version__, engineer, experiments, models

KINDS = ("gap-sweep", "spectrum", "bound-audit", "haar-rate", "xxz", "ladder", "cqa", "uneven")
SPECTRUM_MODELS = ("engineered", "xxz", "ladder", "cqa")
EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2

TOP_KEYS = {"kind", "n", "m", "samples", "seed", "delta_e2", "tol", "output", "ensemble", "model", "uneven"}
TABLE_KEYS = {
    "ensemble": {"tag", "sigma"},
    "model": {"name", "n", "j", "j_z", "v", "bulk_fraction"},
    "uneven": {"n_b", "sigma_b"},
}


class ConfigError(ValueError):
    """Invalid configuration; ``problems`` lists every issue found."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    n: int = 4
    m: int = 2
    samples: int = 100
    seed: int = 0
    delta_e2: tuple = (1e-3,)
    tol: float = 1e-8
    ensemble: str = "ginibre"
    sigma: float = 1.0
    model: str = "engineered"
    chain_n: int = 2
    j: float = 1.0
    j_z: float = 0.0
    v: float = None
    bulk_fraction: float = models.DEFAULT_BULK_FRACTION
    n_b: int = None
    sigma_b: float = 0.5
    output: str = None

    def to_dict(self):
        d = asdict(self)
        d["delta_e2"] = list(self.delta_e2)
        return d

    @property
    def targets(self):
        return self.delta_e2

    @property
    def realizations(self):
        # chain models are deterministic: one row per target
        return 1 if self.kind in ("xxz", "ladder") else self.samples


_HEADER = re.compile(r"^\s*\[\s*([A-Za-z0-9_.\-\"' ]+?)\s*\]\s*(#.*)?$")
_KEY = re.compile(r"^\s*([A-Za-z0-9_\-]+|\"[^\"]*\"|'[^']*')\s*=")


def find_duplicate_keys(text, path="<config>"):
    """Locate keys or tables defined twice, reporting both line numbers.

    A line scanner is enough for the flat-table configs used here; the
    TOML parser itself only reports the second occurrence.
    """
    seen, problems = {}, []
    table = ""
    in_multiline = False
    for lineno, line in enumerate(text.splitlines(), 1):
        if line.count('"""') % 2 or line.count("'''") % 2:
            in_multiline = not in_multiline
            continue
        if in_multiline or not line.strip() or line.lstrip().startswith("#"):
            continue
        h = _HEADER.match(line)
        if h and not line.lstrip().startswith("[["):
            table = h.group(1).strip()
            key = ("table", table)
        else:
            k = _KEY.match(line)
            if not k:
                continue
            key = (table, k.group(1).strip("\"'"))
        if key in seen:
            name = f"[{key[1]}]" if key[0] == "table" else ".".join(p for p in key if p)
            problems.append(f"duplicate key {name!r} at {path}:{seen[key]} and {path}:{lineno}")
        else:
            seen[key] = lineno
    return problems


def _number(problems, name, value, kind=float, lo=None, hi=None, lo_open=False):
    if isinstance(value, bool) or not isinstance(value, (int, float) if kind is float else int):
        problems.append(f"{name} must be {'a number' if kind is float else 'an integer'}, got {value!r}")
        return None
    value = kind(value)
    if kind is float and not np.isfinite(value):
        problems.append(f"{name} must be finite, got {value!r}")
        return None
    if lo is not None and (value <= lo if lo_open else value < lo):
        problems.append(f"{name}={value!r} must be {'>' if lo_open else '>='} {lo!r}")
    if hi is not None and value > hi:
        problems.append(f"{name}={value!r} must be <= {hi!r}")
    return value


def normalize_config(raw):
    """Schema-check a parsed config mapping and fill defaults."""
    problems = []
    for key in sorted(set(raw) - TOP_KEYS):
        problems.append(f"unknown key {key!r}")
    tables = {}
    for name, allowed in TABLE_KEYS.items():
        t = raw.get(name, {})
        if not isinstance(t, dict):
            problems.append(f"{name} must be a table")
            t = {}
        for key in sorted(set(t) - allowed):
            problems.append(f"unknown key {name}.{key!r}")
        tables[name] = t

    kind = raw.get("kind")
    if kind not in KINDS:
        problems.append(f"kind must be one of {', '.join(KINDS)}; got {kind!r}")
        raise ConfigError(problems)

    out = {"kind": kind}
    defaults = ExperimentConfig(kind)
    for key, typ, lo in (("n", int, 2), ("m", int, 1), ("samples", int, 1)):
        out[key] = _number(problems, key, raw.get(key, getattr(defaults, key)), typ, lo)
    seed = raw.get("seed", 0)
    out["seed"] = _number(problems, "seed", seed, int, 0, experiments.MASK64)
    out["tol"] = _number(problems, "tol", raw.get("tol", defaults.tol), float, 0.0, lo_open=True)

    ens = tables["ensemble"]
    tag = ens.get("tag", defaults.ensemble)
    if tag not in engineer.ENSEMBLES:
        problems.append(f"ensemble.tag must be one of {', '.join(engineer.ENSEMBLES)}; got {tag!r}")
    out["ensemble"] = tag
    out["sigma"] = _number(problems, "ensemble.sigma", ens.get("sigma", 1.0), float, 0.0, lo_open=True)

    mod = tables["model"]
    name = mod.get("name", kind if kind in ("xxz", "ladder") else "engineered")
    if kind in ("xxz", "ladder") and name != kind:
        problems.append(f"model.name={name!r} conflicts with kind={kind!r}")
    if name not in SPECTRUM_MODELS:
        problems.append(f"model.name must be one of {', '.join(SPECTRUM_MODELS)}; got {name!r}")
    out["model"] = name
    max_chain = models.MAX_QUBITS // 2
    out["chain_n"] = _number(problems, "model.n", mod.get("n", 2), int, 1, max_chain)
    out["j"] = _number(problems, "model.j", mod.get("j", 1.0))
    out["j_z"] = _number(problems, "model.j_z", mod.get("j_z", 0.0))
    out["v"] = _number(problems, "model.v", mod["v"], float, 0.0, 1.0) if "v" in mod else None
    out["bulk_fraction"] = _number(
        problems, "model.bulk_fraction", mod.get("bulk_fraction", defaults.bulk_fraction),
        float, 0.0, 1.0, lo_open=True,
    )

    unev = tables["uneven"]
    n = out["n"] if out["n"] is not None else defaults.n
    out["n_b"] = _number(problems, "uneven.n_b", unev.get("n_b", n + 1), int, n + 1)
    out["sigma_b"] = _number(problems, "uneven.sigma_b", unev.get("sigma_b", 0.5), float, 0.0)

    targets = raw.get("delta_e2", list(defaults.delta_e2))
    if not isinstance(targets, list):
        targets = [targets]
    if not targets:
        problems.append("delta_e2 must list at least one target")
    chain = kind in ("xxz", "ladder") or name in ("xxz", "ladder")
    if chain:
        cn = out["chain_n"] or 1
        limit, what = models.rainbow_delta_e2(cn, 0.0), f"rainbow maximum for model.n={cn}"
    else:
        limit, what = 1.0 - 1.0 / n, f"1 - 1/n = {1.0 - 1.0 / n!r} for n={n}"
    clean = []
    for i, t in enumerate(targets):
        val = _number(problems, f"delta_e2[{i}]", t, float, 0.0)
        if val is not None and val > limit:
            problems.append(f"delta_e2[{i}]={val!r} exceeds the reachable bound {what}")
        clean.append(val)
    out["delta_e2"] = tuple(clean)

    output = raw.get("output")
    if output is not None and not isinstance(output, str):
        problems.append(f"output must be a string path, got {output!r}")
    out["output"] = output

    if kind == "cqa" or name == "cqa":
        if out["ensemble"] != "detailed_balance" and "tag" in ens:
            problems.append("cqa draws detailed_balance blocks; remove ensemble.tag or set it accordingly")
    if problems:
        raise ConfigError(problems)
    return ExperimentConfig(**out)


def load_config(path):
    """Read, duplicate-check, parse and normalize a config file."""
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise ConfigError([f"cannot read {path}: {exc.strerror}"]) from exc
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ConfigError([f"{path} is not UTF-8 text"]) from exc
    dups = find_duplicate_keys(text, path)
    if dups:
        raise ConfigError(dups)
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError([f"{path}: {exc}"]) from exc
    return normalize_config(raw)


def fmt(x):
    """CSV text for one field; floats at 17 significant digits so they round-trip."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(x) for x in row])


def _tasks(cfg):
    for t_idx, target in enumerate(cfg.targets):
        for r_idx in range(cfg.realizations):
            yield cfg, t_idx, r_idx, target, experiments.sub_seed(cfg.seed, t_idx, r_idx)


def collect_rows(cfg, workers=1):
    """All rows of an ensemble run, ordered by (target index, realization index)."""
    tasks = list(_tasks(cfg))
    if workers <= 1 or len(tasks) <= 1:
        results = [experiments.run_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(experiments.run_task, tasks, chunksize=1))
    results.sort(key=lambda kv: kv[0])
    return [row for _, row in results]


def _finite(values):
    a = np.asarray(values, dtype=float)
    return a[np.isfinite(a)]


def summarize_rows(cfg, rows):
    """Per-target summary statistics for the JSON sidecar."""
    cols = experiments.COLUMNS[cfg.kind]
    status = cols.index("status")
    summary = []
    for t_idx, target in enumerate(cfg.targets):
        block = rows[t_idx * cfg.realizations : (t_idx + 1) * cfg.realizations]
        ok = [r for r in block if r[status] == "ok"]
        entry = {"delta_e2_target": target, "realizations": len(block), "failed": len(block) - len(ok)}
        if cfg.kind in ("gap-sweep", "uneven"):
            gaps = _finite([r[cols.index("gap")] for r in ok])
            pred = experiments.bounds.ensemble_predictions(cfg.n, cfg.m, cfg.sigma, target)
            entry.update(
                mean_gap=float(gaps.mean()) if gaps.size else None,
                std_gap=float(gaps.std(ddof=1)) if gaps.size > 1 else None,
                predicted_mean_gap=pred.mean_gap,
                predicted_std_gap=float(np.sqrt(pred.var_gap)),
            )
        elif cfg.kind == "haar-rate":
            rates = _finite([r[cols.index("haar_rate_exact")] for r in ok])
            entry.update(
                mean_haar_rate=float(rates.mean()) if rates.size else None,
                predicted_mean_haar_rate=2.0 * cfg.m * cfg.sigma**2 * target,
            )
        elif cfg.kind == "bound-audit":
            entry.update(
                violations_gamma_max=int(sum(r[cols.index("violates_gamma_max")] for r in ok)),
                violations_gamma_max_prime=int(sum(r[cols.index("violates_gamma_max_prime")] for r in ok)),
                worst_case_exceeds_gamma_max=int(
                    sum(r[cols.index("worst_case_rate")] > r[cols.index("gamma_max")] for r in ok)
                ),
            )
        elif cfg.kind == "cqa":
            entry.update(max_inclusion_error=float(max((r[cols.index("inclusion_error")] for r in ok), default=np.nan)))
        elif cfg.kind in ("xxz", "ladder") and ok:
            entry.update(midgap_count=int(ok[0][cols.index("midgap_count")]))
        summary.append(entry)
    return summary


def provenance():
    return {
        "lindforge": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
    }


def run(cfg, out_dir, workers=1):
    """Execute a validated config; returns the exit status."""
    os.makedirs(out_dir, exist_ok=True)
    stem = os.path.join(out_dir, cfg.kind)
    sidecar = {"config": cfg.to_dict(), "versions": provenance()}
    if cfg.kind == "spectrum":
        try:
            rows, midgap, steady = experiments.spectrum_rows(cfg)
        except (ValueError, ArithmeticError, np.linalg.LinAlgError, RuntimeError) as exc:
            print(f"forge: numerical failure: {exc}", file=sys.stderr)
            return EXIT_NUMERICAL
        write_csv(stem + ".csv", experiments.COLUMNS["spectrum"], rows)
        sidecar["summary"] = {"eigenvalues": len(rows), "midgap_count": midgap, "steady_count": steady}
        status = EXIT_OK
    else:
        rows = collect_rows(cfg, workers)
        cols = experiments.COLUMNS[cfg.kind]
        write_csv(stem + ".csv", cols, rows)
        sidecar["summary"] = summarize_rows(cfg, rows)
        failed = sum(r[-1] != "ok" for r in rows)
        sidecar["failed_realizations"] = failed
        status = EXIT_NUMERICAL if failed == len(rows) else EXIT_OK
    with open(stem + ".json", "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return status


def _parser():
    p = argparse.ArgumentParser(prog="forge", description="Seeded Lindbladian ensemble experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("config")
    r.add_argument("--seed", type=int, help="override the master seed")
    r.add_argument("--workers", type=int, default=os.cpu_count() or 1, help="worker processes")
    r.add_argument("--out", help="output directory (default: config 'output' or ./forge-out)")
    v = sub.add_parser("validate", help="check a config and print the effective settings")
    v.add_argument("config")
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if getattr(args, "seed", None) is not None:
            if not 0 <= args.seed <= experiments.MASK64:
                raise ConfigError([f"--seed={args.seed} must lie in [0, 2**64)"])
            cfg = replace(cfg, seed=args.seed)
        if getattr(args, "workers", 1) is not None and args.command == "run" and args.workers < 1:
            raise ConfigError([f"--workers={args.workers} must be >= 1"])
    except ConfigError as exc:
        print(f"forge: invalid config {args.config}:", file=sys.stderr)
        for msg in exc.problems:
            print(f"  - {msg}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "validate":
        json.dump(cfg.to_dict(), sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
        return EXIT_OK
    out_dir = args.out or cfg.output or "forge-out"
    try:
        return run(cfg, out_dir, args.workers)
    except OSError as exc:
        print(f"forge: cannot write outputs to {out_dir}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
