"""Command-line front end: optimize, verify, and compare subcommands.

Configuration comes from ``key = value`` files with one section per
transformation plus ``[search]``, ``[model]``, ``[data]``, ``[oracle]``
and ``[output]`` sections; every flag has a config-file key and flags win
over the file.  The effective configuration is echoed into each output
header so results are self-describing.  Outputs carry a schema version
line for downstream tooling.
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
import time
from pathlib import Path

import numpy as np

from .baselines import grid_search, match_metric, random_pick
from .engine import FALSIFIED, VERIFIED_ESTIMATE, BudgetConfig, run, verify
from .images import read_image
from .netfwd import forward, load_weights
from .objectives import MarginObjective, TransformDomain, test_function
from .partition import ParamSpace

OUTPUT_VERSION = "warpcheck-output v1"
CLEAN_ERROR = "clean-error"

# flag destination -> (config section, config key)
KEYMAP = {
    "fn": ("function", "name"),
    "bounds": ("function", "bounds"),
    "weights": ("model", "weights"),
    "images": ("data", "images"),
    "labels": ("data", "labels"),
    "rotation": ("rotation", "range"),
    "scale": ("scale", "range"),
    "translate": ("translate", "range"),
    "depth": ("search", "depth"),
    "alpha": ("search", "alpha"),
    "tau": ("search", "tau"),
    "max_iters": ("search", "max_iters"),
    "max_queries": ("search", "max_queries"),
    "seed": ("search", "seed"),
    "skip_misclassified": ("search", "skip_misclassified"),
    "oracle_grid": ("oracle", "grid"),
    "oracle_random": ("oracle", "random"),
    "match_tolerance": ("oracle", "match_tolerance"),
    "out": ("output", "dir"),
}

DEFAULTS = {
    "depth": 6,
    "alpha": 2,
    "tau": 1e-4,
    "max_iters": 150,
    "max_queries": 2000,
    "seed": 0,
    "rotation": 0.0,
    "scale": 0.0,
    "translate": "0,0",
    "skip_misclassified": False,
    "oracle_grid": 5,
    "oracle_random": 1000,
    "match_tolerance": 0.0,
    "out": ".",
}


class ConfigError(ValueError):
    pass


class Resolver:
    """Flag-over-file-over-default lookup that records what it resolved."""

    def __init__(self, args: argparse.Namespace, config_path: str | None) -> None:
        self.args = args
        self.file = configparser.ConfigParser()
        if config_path is not None:
            read = self.file.read(config_path)
            if not read:
                raise ConfigError(f"cannot read config file {config_path}")
        self.effective: dict[str, str] = {}

    def get(self, dest: str, cast=str, required: bool = False):
        section, key = KEYMAP[dest]
        value = getattr(self.args, dest, None)
        if value is None and self.file.has_option(section, key):
            raw = self.file.get(section, key)
            try:
                value = cast(raw) if cast is not bool else _parse_bool(raw)
            except ValueError as exc:
                raise ConfigError(f"bad config value {section}.{key} = {raw!r}: {exc}")
        if value is None:
            value = DEFAULTS.get(dest)
        if value is None and required:
            raise ConfigError(f"missing required option --{dest.replace('_', '-')} "
                              f"(config key {section}.{key})")
        if value is not None:
            self.effective[f"{section}.{key}"] = _format_value(value)
        return value


def _parse_bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _format_value(value) -> str:
    if isinstance(value, (list, tuple)):
        return " ".join(str(v) for v in value)
    return str(value)


def _parse_bounds(raw: str) -> list[tuple[float, float]]:
    parts = [p for p in raw.replace(";", ",").split(",") if p.strip() != ""]
    if len(parts) == 0 or len(parts) % 2 != 0:
        raise ValueError(f"bounds need lo,hi pairs, got {raw!r}")
    values = [float(p) for p in parts]
    return [(values[i], values[i + 1]) for i in range(0, len(values), 2)]


def _parse_pair(raw: str) -> tuple[float, float]:
    parts = [p for p in raw.split(",") if p.strip() != ""]
    if len(parts) == 1:
        parts = parts * 2
    if len(parts) != 2:
        raise ValueError(f"expected one or two comma-separated values, got {raw!r}")
    return float(parts[0]), float(parts[1])


def _parse_images(raw) -> list[str]:
    if isinstance(raw, list):
        return raw
    return raw.split()


def _parse_labels(raw: str, count: int) -> list[int]:
    path = Path(raw)
    if path.exists():
        tokens = path.read_text().split()
    else:
        tokens = [t for t in raw.split(",") if t.strip() != ""]
    try:
        labels = [int(t) for t in tokens]
    except ValueError as exc:
        raise ConfigError(f"bad label list {raw!r}: {exc}")
    if len(labels) != count:
        raise ConfigError(f"{count} images but {len(labels)} labels")
    return labels


def _header_lines(command: str, effective: dict[str, str]) -> list[str]:
    lines = [f"# {OUTPUT_VERSION}", f"# command = {command}"]
    lines.extend(f"# {key} = {value}" for key, value in sorted(effective.items()))
    return lines


def _write_summary(outdir: Path, command: str, effective: dict[str, str], payload: dict) -> None:
    text = "\n".join(_header_lines(command, effective))
    text += "\n" + json.dumps(payload, indent=2, sort_keys=True) + "\n"
    (outdir / "summary.txt").write_text(text)
    sys.stdout.write(text)


def _write_csv(path: Path, command: str, effective: dict[str, str],
               columns: list[str], rows: list[list]) -> None:
    lines = _header_lines(command, effective)
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_cell(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _cell(value) -> str:
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def _budget(res: Resolver) -> BudgetConfig:
    return BudgetConfig(
        max_iters=res.get("max_iters", int),
        max_queries=res.get("max_queries", int),
        depth=res.get("depth", int),
        alpha=res.get("alpha", int),
        tau=res.get("tau", float),
    )


def _outdir(res: Resolver) -> Path:
    out = Path(res.get("out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_optimize(res: Resolver) -> int:
    name = res.get("fn", required=True)
    bounds_raw = res.get("bounds", required=True)
    budget = _budget(res)
    outdir = _outdir(res)

    fn = test_function(name)
    bounds = _parse_bounds(bounds_raw)
    if len(bounds) != fn.dim:
        raise ConfigError(f"{name} is {fn.dim}-dimensional but {len(bounds)} bounds given")
    space = ParamSpace(bounds)

    start = time.perf_counter()
    trace = run(fn, space, budget)
    elapsed = time.perf_counter() - start

    trace_path = outdir / "trace.csv"
    with open(trace_path, "w", newline="\n") as fh:
        for line in _header_lines("optimize", res.effective):
            fh.write(line + "\n")
        fh.write(trace.to_csv())
    payload = trace.summary()
    payload["function"] = name
    payload["runtime_s"] = elapsed
    payload["trace"] = str(trace_path)
    _write_summary(outdir, "optimize", res.effective, payload)
    return 0


def _load_examples(res: Resolver):
    weights_path = res.get("weights", required=True)
    images_raw = res.get("images", _parse_images, required=True)
    image_paths = _parse_images(images_raw)
    net = load_weights(weights_path)
    model = lambda batch: forward(net, batch)
    images = [read_image(p) for p in image_paths]
    if image_paths:
        labels_raw = res.get("labels", required=True)
        labels = _parse_labels(labels_raw, len(image_paths))
    else:
        res.get("labels")
        labels = []
    domain = TransformDomain.from_ranges(
        rotation=res.get("rotation", float),
        scale=res.get("scale", float),
        translate=_parse_pair(str(res.get("translate"))),
    )
    return model, image_paths, images, labels, domain


def _clean_skipped(objective, skip: bool) -> bool:
    return skip and objective.clean_margin <= 0.0


def cmd_verify(res: Resolver) -> int:
    budget = _budget(res)
    skip = res.get("skip_misclassified", bool)
    outdir = _outdir(res)
    model, paths, images, labels, domain = _load_examples(res)
    space = domain.param_space() if paths else None

    columns = ["index", "image", "label", "verdict", "clean_margin", "l_min",
               "l_star_min", "witness", "queries", "runtime_s"]
    rows = []
    counts = {VERIFIED_ESTIMATE: 0, FALSIFIED: 0, "undecided": 0, CLEAN_ERROR: 0}
    for i, (path, image, label) in enumerate(zip(paths, images, labels)):
        objective = MarginObjective(model, image, label, domain)
        clean = objective.clean_margin
        start = time.perf_counter()
        if _clean_skipped(objective, skip):
            counts[CLEAN_ERROR] += 1
            rows.append([i, path, label, CLEAN_ERROR, clean, clean, "", "", 0,
                         time.perf_counter() - start])
            continue
        result = verify(objective, space, budget)
        elapsed = time.perf_counter() - start
        counts[result.status] += 1
        witness = ";".join(repr(float(v)) for v in result.witness) if result.witness is not None else ""
        rows.append([i, path, label, result.status, clean, result.l_min,
                     result.l_star_min, witness, result.queries, elapsed])

    _write_csv(outdir / "results.csv", "verify", res.effective, columns, rows)
    total = len(paths)
    payload = {
        "examples": total,
        "verified": counts[VERIFIED_ESTIMATE],
        "falsified": counts[FALSIFIED],
        "undecided": counts["undecided"],
        "clean_error": counts[CLEAN_ERROR],
        "verified_accuracy": counts[VERIFIED_ESTIMATE] / total if total else 0.0,
        "results": str(outdir / "results.csv"),
    }
    _write_summary(outdir, "verify", res.effective, payload)
    return 0


def cmd_compare(res: Resolver) -> int:
    budget = _budget(res)
    skip = res.get("skip_misclassified", bool)
    seed = res.get("seed", int)
    grid_points = res.get("oracle_grid", int)
    random_samples = res.get("oracle_random", int)
    tolerance = res.get("match_tolerance", float)
    outdir = _outdir(res)
    model, paths, images, labels, domain = _load_examples(res)
    space = domain.param_space() if paths else None

    detail_cols = ["index", "method", "min_value", "queries", "runtime_s", "match"]
    details = []
    per_method: dict[str, dict[str, list]] = {
        m: {"mins": [], "queries": [], "runtime": [], "match": []}
        for m in ("warpcheck", "grid", "random")
    }
    attacked = 0
    for i, (path, image, label) in enumerate(zip(paths, images, labels)):
        objective = MarginObjective(model, image, label, domain)
        if _clean_skipped(objective, skip):
            continue
        attacked += 1

        start = time.perf_counter()
        trace = run(objective, space, budget)
        t_engine = time.perf_counter() - start
        start = time.perf_counter()
        grid = grid_search(objective, space, grid_points)
        t_grid = time.perf_counter() - start
        start = time.perf_counter()
        rand = random_pick(objective, space, random_samples, seed + i)
        t_rand = time.perf_counter() - start

        outcomes = {
            "warpcheck": (trace.l_min, trace.queries, t_engine),
            "grid": (grid.min_value, grid.n_points, t_grid),
            "random": (rand.min_value, rand.n_points, t_rand),
        }
        for method, (value, queries, elapsed) in outcomes.items():
            matched = match_metric(value, grid.min_value, tolerance)
            per_method[method]["mins"].append(value)
            per_method[method]["queries"].append(queries)
            per_method[method]["runtime"].append(elapsed)
            per_method[method]["match"].append(matched)
            details.append([i, method, value, queries, elapsed, int(matched)])

    columns = ["method", "verified_acc", "mean_queries", "mean_runtime_s", "match_rate"]
    rows = []
    for method, data in per_method.items():
        if attacked:
            survived = sum(1 for v in data["mins"] if v > 0.0)
            rows.append([
                method,
                survived / attacked,
                float(np.mean(data["queries"])),
                float(np.mean(data["runtime"])),
                sum(data["match"]) / attacked,
            ])
    _write_csv(outdir / "compare.csv", "compare", res.effective, columns, rows)
    _write_csv(outdir / "details.csv", "compare", res.effective, detail_cols, details)
    payload = {
        "examples": len(paths),
        "attacked": attacked,
        "methods": {
            row[0]: {"verified_acc": row[1], "mean_queries": row[2],
                     "mean_runtime_s": row[3], "match_rate": row[4]}
            for row in rows
        },
        "compare": str(outdir / "compare.csv"),
    }
    _write_summary(outdir, "compare", res.effective, payload)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="warpcheck",
        description="Worst-case geometric transformation search and robustness checks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--depth", type=int, help="max trisections per dimension (D)")
        p.add_argument("--alpha", type=int, help="candidates kept per size group")
        p.add_argument("--tau", type=float, help="minimum relative improvement")
        p.add_argument("--max-iters", type=int, dest="max_iters", help="iteration cap (T)")
        p.add_argument("--max-queries", type=int, dest="max_queries", help="query cap (Q)")
        p.add_argument("--seed", type=int, help="seed for randomised baselines")
        p.add_argument("--out", help="output directory")

    p_opt = sub.add_parser("optimize", help="minimise a named test function")
    common(p_opt)
    p_opt.add_argument("--fn", help="test function name (e.g. abs1d, multi-basin)")
    p_opt.add_argument("--bounds", help="comma-separated lo,hi per dimension")

    def model_opts(p: argparse.ArgumentParser) -> None:
        p.add_argument("--weights", help="weight file for the classifier")
        p.add_argument("--images", nargs="*", help="image files (.pgm/.ppm/.txt)")
        p.add_argument("--labels", help="label file or comma-separated integers")
        p.add_argument("--rotation", type=float, help="rotation range, +- degrees")
        p.add_argument("--scale", type=float, help="scale range, 1 +- value")
        p.add_argument("--translate", help="translation range, pixels: 'h,v'")
        p.add_argument("--skip-misclassified", dest="skip_misclassified",
                       action="store_const", const=True,
                       help="report clean mistakes instead of attacking them")

    p_ver = sub.add_parser("verify", help="robustness verdict per example")
    common(p_ver)
    model_opts(p_ver)

    p_cmp = sub.add_parser("compare", help="side-by-side with grid and random baselines")
    common(p_cmp)
    model_opts(p_cmp)
    p_cmp.add_argument("--oracle-grid", type=int, dest="oracle_grid",
                       help="grid points per dimension")
    p_cmp.add_argument("--oracle-random", type=int, dest="oracle_random",
                       help="random samples per example")
    p_cmp.add_argument("--match-tolerance", type=float, dest="match_tolerance",
                       help="slack for the match rule")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {"optimize": cmd_optimize, "verify": cmd_verify, "compare": cmd_compare}
    try:
        res = Resolver(args, args.config)
        return handlers[args.command](res)
    except ConfigError as exc:
        parser.exit(2, f"error: {exc}\n")
    except Exception as exc:  # unreadable files, bad formats, engine failures
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
