"""Command-line front end: single runs, validation, trace dumps and
experiment matrices (network-size x protocol x seed x speed sweeps).

Matrix runs fan out over a process pool; rows are collected in submission
order and sorted before writing, so the CSV is byte-identical for any
worker count.  Exit codes: 0 success, 1 configuration error, 2 runtime
failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

from . import engine, kernels, report
from .model import Flow, InvalidConfigError, ScenarioConfig, load_scenario

_MATRIX_KEYS = {"base", "node_counts", "protocols", "seeds", "speeds",
                "flows", "output", "parallelism"}


@dataclass(frozen=True)
class MatrixSpec:
    base: str
    node_counts: tuple[int, ...]
    protocols: tuple[str, ...]
    seeds: tuple[int, ...]
    speeds: tuple[float, ...] | None  # None = keep the base scenario's speed
    flow_templates: tuple[dict, ...] | None
    output: str | None
    parallelism: int


def load_matrix(path) -> MatrixSpec:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidConfigError([("document", f"not valid JSON: {exc}")]) from exc
    if not isinstance(obj, dict):
        raise InvalidConfigError([("document", "matrix must be a JSON object")])
    unknown = set(obj) - _MATRIX_KEYS
    if unknown:
        raise InvalidConfigError([(k, "unknown key") for k in sorted(unknown)])
    missing = {"base", "node_counts", "protocols", "seeds"} - set(obj)
    if missing:
        raise InvalidConfigError([(k, "missing required key") for k in sorted(missing)])
    for key in ("node_counts", "protocols", "seeds"):
        if not obj[key]:
            raise InvalidConfigError([(key, "sweep list must be non-empty")])
    if "speeds" in obj and not obj["speeds"]:
        raise InvalidConfigError([("speeds", "sweep list must be non-empty")])
    return MatrixSpec(
        base=obj["base"],
        node_counts=tuple(obj["node_counts"]),
        protocols=tuple(obj["protocols"]),
        seeds=tuple(obj["seeds"]),
        speeds=tuple(obj["speeds"]) if "speeds" in obj else None,
        flow_templates=tuple(obj["flows"]) if "flows" in obj else None,
        output=obj.get("output"),
        parallelism=int(obj.get("parallelism", 1)))


def _resolve_flows(spec: MatrixSpec, base: ScenarioConfig,
                   node_count: int) -> tuple[Flow, ...]:
    """Per-cell flow placement.

    Default: one flow between node 0 and node node_count-1 with the base
    scenario's first flow's traffic parameters.  Templates override this;
    negative src/dst indices count from node_count (so -1 is the last node).
    """
    if spec.flow_templates is None:
        proto = base.flows[0]
        return (replace(proto, src=0, dst=node_count - 1),)
    flows = []
    for tpl in spec.flow_templates:
        tpl = dict(tpl)
        for end in ("src", "dst"):
            if tpl.get(end, 0) < 0:
                tpl[end] = node_count + tpl[end]
        flows.append(Flow(**tpl))
    return tuple(flows)


def matrix_cells(spec: MatrixSpec, base: ScenarioConfig) -> list[ScenarioConfig]:
    """The full Cartesian product as validated per-cell configs."""
    from .model import validate_config

    speeds = spec.speeds if spec.speeds is not None else (None,)
    cells = []
    for protocol in spec.protocols:
        for node_count in spec.node_counts:
            for speed in speeds:
                for seed in spec.seeds:
                    kwargs = dict(node_count=node_count, protocol=protocol,
                                  seed=seed,
                                  flows=_resolve_flows(spec, base, node_count))
                    if speed is not None:
                        kwargs.update(speed_min=float(speed),
                                      speed_max=float(speed))
                    cells.append(validate_config(replace(base, **kwargs)))
    return cells


def _run_cell(cfg: ScenarioConfig) -> report.MetricsReport:
    metrics, _ = engine.run(cfg, collect_trace=False)
    return metrics


def run_matrix(spec: MatrixSpec, base: ScenarioConfig | None = None) -> str:
    """Execute every cell and return the merged, sorted CSV text."""
    if base is None:
        base = load_scenario(spec.base)
    cells = matrix_cells(spec, base)
    print(f"matrix: {len(cells)} runs "
          f"({len(spec.protocols)} protocols x {len(spec.node_counts)} sizes"
          f"{'' if spec.speeds is None else f' x {len(spec.speeds)} speeds'}"
          f" x {len(spec.seeds)} seeds), parallelism={spec.parallelism}",
          file=sys.stderr)
    if spec.parallelism > 1:
        with ProcessPoolExecutor(max_workers=spec.parallelism) as pool:
            results = list(pool.map(_run_cell, cells))
    else:
        results = [_run_cell(cfg) for cfg in cells]
    return report.to_csv(results)


def _cmd_validate(args) -> int:
    try:
        load_scenario(args.scenario)
    except InvalidConfigError as exc:
        for name, constraint in exc.violations:
            print(f"invalid: {name}: {constraint}", file=sys.stderr)
        return 1
    print("OK")
    return 0


def _cmd_run(args) -> int:
    try:
        cfg = load_scenario(args.scenario)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
    except InvalidConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    try:
        metrics, _ = engine.run(cfg)
    except Exception as exc:  # pathological configs should not get here
        print(f"run failed: {exc}", file=sys.stderr)
        return 2
    print(report.CSV_HEADER)
    print(report.csv_row(metrics))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(report.to_csv([metrics]))
    return 0


def _cmd_trace(args) -> int:
    try:
        cfg = load_scenario(args.scenario)
    except InvalidConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    try:
        _, trace = engine.run(cfg, collect_trace=True)
    except Exception as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 2
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(trace)
    else:
        sys.stdout.write(trace)
    return 0


def _cmd_matrix(args) -> int:
    try:
        spec = load_matrix(args.matrix)
        if args.parallelism is not None:
            spec = replace(spec, parallelism=args.parallelism)
        if args.out is not None:
            spec = replace(spec, output=args.out)
        base = load_scenario(spec.base)
        csv_text = run_matrix(spec, base)
    except InvalidConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"matrix failed: {exc}", file=sys.stderr)
        return 2
    if spec.output:
        with open(spec.output, "w", encoding="utf-8") as fh:
            fh.write(csv_text)
        print(f"wrote {spec.output}", file=sys.stderr)
    else:
        sys.stdout.write(csv_text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dbmfsim",
        description="Deterministic MANET simulator with fuzzy multipath "
                    f"load balancing (kernel backend: {kernels.backend_name()})")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one scenario, print its metrics row")
    p.add_argument("scenario")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--out", default=None, help="also write a one-row CSV here")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("matrix", help="run a sweep matrix, emit merged CSV")
    p.add_argument("matrix")
    p.add_argument("--parallelism", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_matrix)

    p = sub.add_parser("validate", help="check a scenario file")
    p.add_argument("scenario")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("trace", help="run one scenario, dump the event trace")
    p.add_argument("scenario")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_trace)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
