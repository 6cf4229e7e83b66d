"""Command-line surface: generate, ingest, cluster, score, benchmark.

Exit status discipline: 0 success, 2 usage errors (argparse), 1 data
errors (unreadable/malformed inputs). Label files are written with the
conventional external encoding: isolated points become -1, cluster ids
become 0-based. Identical config and seed give byte-identical output;
the STRUCTCLUST_THREADS variable only parallelizes work whose result
is order-independent.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import dataclasses
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import MODE_KNN, MODE_SD, Assignment, ParamSet, core_cluster
from .geometry import PointSet, default_workers, minmax_rescale
from .hierarchy import sdc_hsdd_ndsa
from .metrics import ari, nmi
from .synthetic import SUITE_NAMES, add_noise, gen_suite


class DataError(Exception):
    """Unreadable or malformed input data (exit status 1)."""


# ---------------------------------------------------------------------------
# ingestion


def _parse_cell(cell: str, row: int, col: int) -> float:
    try:
        return float(cell)
    except ValueError:
        raise DataError(
            f"non-numeric cell {cell!r} at row {row}, column {col}"
        ) from None


def ingest_csv(path: str | Path) -> PointSet:
    """Parse a points CSV: rows are points, columns are features.

    An optional header row is detected by non-numeric cells; a trailing
    column named "label" in the header is captured as ground-truth
    labels. Malformed cells are reported with 1-based (row, column)
    positions counted over data rows.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    rows = [line.split(",") for line in text.splitlines() if line.strip()]
    if not rows:
        raise DataError(f"{path}: no data rows")

    header: list[str] | None = None
    first = rows[0]
    if any(not _is_number(c) for c in first):
        header = [c.strip() for c in first]
        rows = rows[1:]
        if not rows:
            raise DataError(f"{path}: header but no data rows")

    has_labels = header is not None and header[-1].lower() == "label"
    width = len(rows[0])
    coords: list[list[float]] = []
    labels: list[int] = []
    for r, row in enumerate(rows, start=1):
        if len(row) != width:
            raise DataError(
                f"{path}: ragged row {r}: expected {width} cells, got {len(row)}"
            )
        values = [_parse_cell(c.strip(), r, j + 1) for j, c in enumerate(row)]
        if has_labels:
            coords.append(values[:-1])
            labels.append(int(values[-1]))
        else:
            coords.append(values)
    return PointSet(
        np.asarray(coords, dtype=np.float64),
        np.asarray(labels, dtype=np.int64) if has_labels else None,
    )


def _is_number(cell: str) -> bool:
    try:
        float(cell)
        return True
    except ValueError:
        return False


def ingest_image(path: str | Path, mode: str = "rgb") -> PointSet:
    """One point per pixel: (x, y, R, G, B) or (x, y, gray).

    Every feature component is divided by its maximum over the image,
    yielding values in [0, 1] (an all-zero component stays 0).
    """
    from PIL import Image, UnidentifiedImageError

    if mode not in ("rgb", "gray"):
        raise ValueError(f"mode must be 'rgb' or 'gray', got {mode!r}")
    try:
        with Image.open(path) as img:
            arr = np.asarray(img.convert("RGB" if mode == "rgb" else "L"), dtype=np.float64)
    except (OSError, UnidentifiedImageError) as exc:
        raise DataError(f"cannot decode image {path}: {exc}") from None

    h, w = arr.shape[:2]
    xs, ys = np.meshgrid(np.arange(w), np.arange(h), indexing="ij")
    channels = [xs.ravel().astype(np.float64), ys.ravel().astype(np.float64)]
    if mode == "rgb":
        for c in range(3):
            channels.append(arr[ys, xs, c].ravel())
    else:
        channels.append(arr[ys, xs].ravel())
    coords = np.column_stack(channels)
    maxes = coords.max(axis=0)
    coords = coords / np.where(maxes > 0.0, maxes, 1.0)
    return PointSet(coords)


# ---------------------------------------------------------------------------
# label export / import


def export_labels(assignment: Assignment) -> np.ndarray:
    """External label encoding: isolated -> -1, cluster ids 0-based."""
    out = assignment.cp.astype(np.int64) - 1
    out[assignment.cp <= 0] = -1
    return out


def write_labels_csv(path: str | Path, labels: np.ndarray) -> None:
    lines = ["index,label"]
    lines.extend(f"{i},{int(v)}" for i, v in enumerate(labels))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_labels_csv(path: str | Path) -> np.ndarray:
    ps = ingest_csv(path)
    if ps.labels is not None:
        return np.asarray(ps.labels)
    # index,label layout without the header being recognized is not expected;
    # fall back to the last column.
    return ps.coords[:, -1].astype(np.int64)


# ---------------------------------------------------------------------------
# run configuration

_BOOL_WORDS = {"true": True, "false": False, "1": True, "0": False}


@dataclass
class RunConfig:
    """Everything one clustering run needs, round-trippable to disk."""

    input: str | None = None
    gen: str | None = None
    seed: int = 0
    noise: float = 0.0
    rescale: bool = True
    labels_out: str | None = None
    summary_out: str | None = None
    params: ParamSet = field(default_factory=ParamSet)

    def to_text(self) -> str:
        lines = []
        for key, value in (
            ("input", self.input),
            ("gen", self.gen),
            ("seed", self.seed),
            ("noise", self.noise),
            ("rescale", self.rescale),
            ("labels-out", self.labels_out),
            ("summary-out", self.summary_out),
        ):
            lines.append(f"{key} = {_format_value(value)}")
        for f in dataclasses.fields(ParamSet):
            lines.append(
                f"{f.name.replace('_', '-')} = "
                f"{_format_value(getattr(self.params, f.name))}"
            )
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        raw = _parse_config_text(text)
        return cls._from_mapping(raw)

    @classmethod
    def _from_mapping(cls, raw: dict) -> "RunConfig":
        cfg = cls()
        param_kwargs = {}
        for key, value in raw.items():
            attr = key.replace("-", "_")
            if attr in _PARAM_FIELDS:
                param_kwargs[attr] = _coerce(value, _PARAM_FIELDS[attr])
            elif attr in _CONFIG_FIELDS:
                setattr(cfg, attr, _coerce(value, _CONFIG_FIELDS[attr]))
            else:
                raise DataError(f"unknown config key {key!r}")
        cfg.params = ParamSet(**param_kwargs)
        return cfg


_PARAM_FIELDS = {f.name: f.type for f in dataclasses.fields(ParamSet)}
_CONFIG_FIELDS = {
    "input": "str | None",
    "gen": "str | None",
    "seed": "int",
    "noise": "float",
    "rescale": "bool",
    "labels_out": "str | None",
    "summary_out": "str | None",
}


def _format_value(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _coerce(token: str, type_hint: str):
    if token == "none":
        return None
    if "bool" in type_hint:
        if token.lower() in _BOOL_WORDS:
            return _BOOL_WORDS[token.lower()]
        raise DataError(f"expected a boolean, got {token!r}")
    if "int" in type_hint:
        return int(token)
    if "float" in type_hint:
        return float(token)
    return token


def _parse_config_text(text: str) -> dict:
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise DataError(f"config line {lineno}: expected 'key = value'")
        key, _, value = stripped.partition("=")
        out[key.strip()] = value.strip()
    return out


# ---------------------------------------------------------------------------
# run / bench drivers


def _load_points(config: RunConfig) -> PointSet:
    if (config.input is None) == (config.gen is None):
        raise DataError("exactly one of --input and --gen is required")
    if config.input is not None:
        ps = ingest_csv(config.input)
    else:
        ps = gen_suite(config.gen, seed=config.seed)
    if config.noise > 0.0:
        ps = add_noise(ps, config.noise, seed=config.seed + 1)
    return ps


def run(config: RunConfig, workers: int | None = None, baseline: bool = False):
    """Cluster one dataset end to end; returns (labels, summary dict)."""
    ps = _load_points(config)
    if config.rescale:
        ps = minmax_rescale(ps)
    trace: list = []
    start = time.perf_counter()
    if baseline:
        assignment = core_cluster(
            ps, config.params.with_(mode=MODE_KNN), workers=workers
        )
    else:
        assignment = sdc_hsdd_ndsa(ps, config.params, workers=workers, trace=trace)
    elapsed = time.perf_counter() - start

    labels = export_labels(assignment)
    sizes = sorted((len(c) for c in assignment.clusters[1:]), reverse=True)
    summary = {
        "n": ps.n,
        "dim": ps.dim,
        "clusters": assignment.n_clusters,
        "cluster_sizes": sizes,
        "isolated": int(np.sum(labels == -1)),
        "subset_eps": [t["eps"] for t in trace],
        "wall_time_s": round(elapsed, 4),
    }
    if config.labels_out:
        write_labels_csv(config.labels_out, labels)
    if config.summary_out:
        Path(config.summary_out).write_text(
            json.dumps(summary, indent=2) + "\n", encoding="utf-8"
        )
    return labels, summary


def bench_cell(name: str, seed: int, noise: float, params: ParamSet) -> dict:
    """Generate, perturb, rescale, cluster, redistribute, score one cell."""
    ps = gen_suite(name, seed=seed)
    if noise > 0.0:
        ps = add_noise(ps, noise, seed=seed + 1)
    data = minmax_rescale(ps)
    start = time.perf_counter()
    assignment = sdc_hsdd_ndsa(data, params.with_(redistribute_isolated=True))
    elapsed = time.perf_counter() - start
    pred = export_labels(assignment)
    return {
        "dataset": name,
        "seed": seed,
        "noise": noise,
        "n": ps.n,
        "clusters": assignment.n_clusters,
        "ari": ari(ps.labels, pred),
        "nmi": nmi(ps.labels, pred),
        "seconds": elapsed,
    }


def bench(
    datasets: list[str],
    seeds: list[int],
    noise_levels: list[float],
    params: ParamSet | None = None,
    workers: int | None = None,
) -> list[dict]:
    """Score every (dataset, seed, noise) cell plus per-noise averages."""
    params = params or ParamSet()
    cells = [
        (name, seed, noise)
        for noise in noise_levels
        for name in datasets
        for seed in seeds
    ]
    w = default_workers() if workers is None else workers
    if w > 1 and len(cells) > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=w) as pool:
            rows = list(pool.map(lambda c: bench_cell(*c, params), cells))
    else:
        rows = [bench_cell(*c, params) for c in cells]
    rows.sort(key=lambda r: (r["noise"], datasets.index(r["dataset"]), r["seed"]))

    report = []
    for noise in noise_levels:
        at_noise = [r for r in rows if r["noise"] == noise]
        report.extend(at_noise)
        if at_noise:
            report.append(
                {
                    "dataset": "AVERAGE",
                    "seed": "",
                    "noise": noise,
                    "n": "",
                    "clusters": "",
                    "ari": float(np.mean([r["ari"] for r in at_noise])),
                    "nmi": float(np.mean([r["nmi"] for r in at_noise])),
                    "seconds": float(np.sum([r["seconds"] for r in at_noise])),
                }
            )
    return report


def _report_csv(rows: list[dict]) -> str:
    cols = ["dataset", "seed", "noise", "n", "clusters", "ari", "nmi", "seconds"]
    lines = [",".join(cols)]
    for r in rows:
        cells = []
        for c in cols:
            v = r[c]
            cells.append(f"{v:.4f}" if isinstance(v, float) else str(v))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# argument parsing


def _add_param_flags(parser: argparse.ArgumentParser) -> None:
    g = parser.add_argument_group("algorithm parameters")
    g.add_argument("--search-neighbor-k", type=int, default=None)
    g.add_argument("--rho-calculate-k", type=int, default=None)
    g.add_argument("--iso-neighbor-k", type=int, default=None)
    g.add_argument("--max-iso-point-rho", type=float, default=None)
    g.add_argument("--min-cluster-point", type=int, default=None)
    g.add_argument("--min-knn-cluster-point", type=int, default=None)
    g.add_argument("--eps", type=float, default=None)
    g.add_argument("--mineps", type=float, default=None)
    g.add_argument("--maxeps", type=float, default=None)
    g.add_argument("--adjust", type=float, default=None)
    g.add_argument("--fraction-f", type=float, default=None)
    g.add_argument("--mode", choices=[MODE_SD, MODE_KNN], default=None)
    g.add_argument("--kon", action=argparse.BooleanOptionalAction, default=None)
    g.add_argument("--ioc", action=argparse.BooleanOptionalAction, default=None)
    g.add_argument(
        "--merge-enabled", action=argparse.BooleanOptionalAction, default=None
    )
    g.add_argument(
        "--redistribute-isolated",
        action=argparse.BooleanOptionalAction,
        default=None,
    )
    g.add_argument(
        "--differential-source", choices=["nrho", "nisrho"], default=None
    )


def _params_from_args(args, base: ParamSet) -> ParamSet:
    overrides = {}
    for name in _PARAM_FIELDS:
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    return base.with_(**overrides) if overrides else base


def _config_from_args(args) -> RunConfig:
    if getattr(args, "config", None):
        try:
            text = Path(args.config).read_text(encoding="utf-8")
        except OSError as exc:
            raise DataError(f"cannot read config {args.config}: {exc}") from None
        config = RunConfig.from_text(text)
    else:
        config = RunConfig()
    for attr in ("input", "gen", "seed", "noise", "labels_out", "summary_out"):
        value = getattr(args, attr, None)
        if value is not None:
            setattr(config, attr, value)
    if getattr(args, "rescale", None) is not None:
        config.rescale = args.rescale
    config.params = _params_from_args(args, config.params)
    return config


def _cmd_gen(args) -> int:
    ps = gen_suite(args.name, seed=args.seed)
    if args.noise > 0.0:
        ps = add_noise(ps, args.noise, seed=args.seed + 1)
    header = [f"x{i}" for i in range(ps.dim)] + ["label"]
    lines = [",".join(header)]
    labels = ps.labels if ps.labels is not None else np.zeros(ps.n, dtype=np.int64)
    for row, lab in zip(ps.coords, labels):
        lines.append(",".join(repr(float(v)) for v in row) + f",{int(lab)}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_run(args, baseline: bool = False) -> int:
    config = _config_from_args(args)
    labels, summary = run(config, workers=args.workers, baseline=baseline)
    sys.stdout.write(json.dumps(summary, indent=2) + "\n")
    if not config.labels_out:
        sys.stdout.write("index,label\n")
        sys.stdout.writelines(f"{i},{int(v)}\n" for i, v in enumerate(labels))
    return 0


def _cmd_score(args) -> int:
    truth = read_labels_csv(args.truth)
    pred = read_labels_csv(args.pred)
    result = {"ari": ari(truth, pred), "nmi": nmi(truth, pred)}
    sys.stdout.write(json.dumps(result, indent=2) + "\n")
    return 0


def _cmd_bench(args) -> int:
    datasets = [d for d in args.datasets.split(",") if d] if args.datasets else []
    seeds = [int(s) for s in args.seeds.split(",") if s]
    noises = [float(x) for x in args.noise_levels.split(",") if x]
    base = ParamSet()
    params = _params_from_args(args, base)
    rows = bench(datasets, seeds, noises, params, workers=args.workers)
    text = _report_csv(rows)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="structclust",
        description="Structure-detecting density clustering and its benchmark suite.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate a benchmark dataset as CSV")
    p_gen.add_argument("--name", required=True)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--noise", type=float, default=0.0)
    p_gen.add_argument("--out", default=None)
    p_gen.set_defaults(func=_cmd_gen)

    for cmd, baseline in (("run", False), ("knn-baseline", True)):
        p = sub.add_parser(
            cmd,
            help="cluster a dataset end to end"
            if not baseline
            else "cluster by k-NN reachability only",
        )
        p.add_argument("--input", default=None)
        p.add_argument("--gen", default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--noise", type=float, default=None)
        p.add_argument("--config", default=None)
        p.add_argument("--labels-out", default=None)
        p.add_argument("--summary-out", default=None)
        p.add_argument(
            "--rescale", action=argparse.BooleanOptionalAction, default=None
        )
        p.add_argument("--workers", type=int, default=None)
        _add_param_flags(p)
        p.set_defaults(func=lambda a, b=baseline: _cmd_run(a, baseline=b))

    p_score = sub.add_parser("score", help="ARI/NMI between two label files")
    p_score.add_argument("--truth", required=True)
    p_score.add_argument("--pred", required=True)
    p_score.set_defaults(func=_cmd_score)

    p_bench = sub.add_parser("bench", help="run the benchmark suite and report")
    p_bench.add_argument("--datasets", default=",".join(SUITE_NAMES))
    p_bench.add_argument("--seeds", default="1,2,3,4,5")
    p_bench.add_argument("--noise-levels", default="0")
    p_bench.add_argument("--out", default=None)
    p_bench.add_argument("--workers", type=int, default=None)
    _add_param_flags(p_bench)
    p_bench.set_defaults(func=_cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
