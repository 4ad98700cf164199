"""Command-line entry point: `explain <subcommand> [flags] [-- external cmd]`.

Subcommands tie the pipeline together: load data, build or wrap a scorer,
run an explanation method, and write JSON / SVG / text artifacts. Runs are
reproducible: the seed is always materialized (default 42) and the full
configuration is echoed into every JSON output.

Exit codes: 0 success, 1 usage error, 2 data or model error. Diagnostics
go to standard error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__
from .breakdown import ag_break, attribution_text
from .errors import ExplainError, UsageError
from .live import add_predictions, fit_explanation, sample_locally
from .predict import external_scorer, fit_kernel_ridge, fit_ols
from .relax import relaxation_trace
from .render import render_forest, render_trace, render_waterfall
from .shapley import shapley_exact, shapley_sampled
from .tabular import load_csv

SUBCOMMANDS = ("breakdown", "shapley", "live", "trace")


@dataclass
class RunConfig:
    subcommand: str
    data: str
    response: str
    row: int | None
    observation: str | None
    model: str
    gamma: float
    ridge: float
    direction: str
    baseline: str
    up_distance: str
    size: int
    white_box: str
    lambda_: float | None
    method: str
    permutations: int
    seed: int
    threads: int
    json_path: str | None
    svg_path: str | None
    text_path: str | None
    external_command: tuple[str, ...] | None

    def echo(self) -> dict:
        out = asdict(self)
        out["lambda"] = out.pop("lambda_")
        out["external_command"] = (
            list(self.external_command) if self.external_command else None
        )
        return out


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="explain", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--data", required=True, help="CSV file to explain against")
        p.add_argument("--response", required=True, help="response column name")
        p.add_argument("--row", type=int, help="1-indexed row to explain")
        p.add_argument("--observation", help="inline feature values, comma separated")
        p.add_argument(
            "--model", choices=["ols", "kernel-ridge", "external"], default="ols"
        )
        p.add_argument("--gamma", type=float, default=1.0)
        p.add_argument("--ridge", type=float, default=0.1)
        p.add_argument("--direction", choices=["up", "down"], default="up")
        p.add_argument("--baseline", choices=["zero", "intercept"], default="zero")
        p.add_argument(
            "--up-distance",
            choices=["to-baseline", "to-fnew"],
            default="to-baseline",
            dest="up_distance",
        )
        p.add_argument("--size", type=int, default=500)
        p.add_argument("--white-box", choices=["ols", "lasso"], default="ols", dest="white_box")
        p.add_argument("--lambda", type=float, default=None, dest="lambda_")
        p.add_argument("--method", choices=["exact", "sample"], default="exact")
        p.add_argument("--permutations", type=int, default=1000)
        p.add_argument("--seed", type=int, default=42)
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--json", dest="json_path")
        p.add_argument("--svg", dest="svg_path")
        p.add_argument("--text", dest="text_path")
    return parser


def parse_args(argv: list[str]) -> RunConfig:
    argv = list(argv)
    external_command: tuple[str, ...] | None = None
    if "--" in argv:
        split = argv.index("--")
        external_command = tuple(argv[split + 1 :])
        argv = argv[:split]
        if not external_command:
            raise UsageError("nothing follows '--'")
    ns = _build_parser().parse_args(argv)

    if ns.model == "external" and not external_command:
        raise UsageError("--model external requires '-- <command ...>'")
    if ns.model != "external" and external_command:
        raise UsageError("'-- <command>' is only valid with --model external")
    if (ns.row is None) == (ns.observation is None):
        raise UsageError("exactly one of --row or --observation is required")
    if ns.threads is None:
        env = os.environ.get("EXPLAIN_THREADS")
        if env is not None:
            try:
                ns.threads = int(env)
            except ValueError:
                raise UsageError(f"EXPLAIN_THREADS must be an integer, got {env!r}")
        else:
            ns.threads = os.cpu_count() or 1
    if ns.threads < 1:
        raise UsageError("--threads must be at least 1")
    if ns.size < 0:
        raise UsageError("--size must be nonnegative")
    if ns.permutations < 2 and ns.subcommand == "shapley" and ns.method == "sample":
        raise UsageError("--permutations must be at least 2")

    return RunConfig(
        subcommand=ns.subcommand,
        data=ns.data,
        response=ns.response,
        row=ns.row,
        observation=ns.observation,
        model=ns.model,
        gamma=ns.gamma,
        ridge=ns.ridge,
        direction=ns.direction,
        baseline=ns.baseline,
        up_distance=ns.up_distance,
        size=ns.size,
        white_box=ns.white_box,
        lambda_=ns.lambda_,
        method=ns.method,
        permutations=ns.permutations,
        seed=ns.seed,
        threads=ns.threads,
        json_path=ns.json_path,
        svg_path=ns.svg_path,
        text_path=ns.text_path,
        external_command=external_command,
    )


def export_json(result, path: str) -> None:
    """Write canonical JSON: sorted keys, shortest-round-trip numbers,
    newline-terminated. Identical inputs produce identical bytes."""
    payload = result.to_json_dict() if hasattr(result, "to_json_dict") else result
    text = json.dumps(payload, sort_keys=True, indent=2, allow_nan=False) + "\n"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _surrogate_json(fit, white_box: str) -> dict:
    model = fit.model
    return {
        "white_box": white_box,
        "lambda": fit.lambda_,
        "r2": fit.r2,
        "selected_features": list(fit.selected_features),
        "intercept": model.intercept,
        "intercept_std_error": model.intercept_std_error,
        "coefficients": [
            {
                "feature": name,
                "estimate": float(est),
                "std_error": None if model.std_errors is None else float(se),
            }
            for name, est, se in zip(
                model.encoder.encoded_names,
                model.coefficients,
                model.std_errors
                if model.std_errors is not None
                else np.zeros(len(model.coefficients)),
            )
        ],
    }


def _resolve_observation(config: RunConfig, dataset) -> tuple:
    schema = dataset.schema()
    if config.row is not None:
        if not (1 <= config.row <= dataset.n_rows):
            raise UsageError(
                f"--row {config.row} out of range 1..{dataset.n_rows} (rows are 1-indexed)"
            )
        return dataset.observation(config.row - 1)
    cells = config.observation.split(",")
    try:
        return schema.validate_observation(cells)
    except ExplainError as exc:
        raise UsageError(f"bad --observation: {exc}") from exc


def _build_predictor(config: RunConfig, dataset):
    if config.model == "ols":
        return fit_ols(dataset, dataset.response_index)
    if config.model == "kernel-ridge":
        return fit_kernel_ridge(dataset, dataset.response_index, config.gamma, config.ridge)
    return external_scorer(list(config.external_command), dataset.schema())


def _feature_order_from_entries(attribution, schema) -> list[int]:
    index_of = {name: j for j, name in enumerate(schema.names)}
    return [index_of[e.feature] for e in attribution.feature_entries()]


def _execute(config: RunConfig):
    """Returns (result payload dict, svg text or None, text fallback or None)."""
    dataset = load_csv(config.data, response_name=config.response)
    x_new = _resolve_observation(config, dataset)
    predictor = _build_predictor(config, dataset)

    if config.subcommand == "breakdown":
        attribution = ag_break(
            predictor,
            dataset,
            x_new,
            direction=config.direction,
            baseline_mode=config.baseline,
            up_distance=config.up_distance,
        )
        doc = render_waterfall(attribution) if config.svg_path else None
        return attribution.to_json_dict(), doc, attribution_text(attribution)

    if config.subcommand == "shapley":
        if config.method == "exact":
            estimate = shapley_exact(
                predictor, dataset, x_new, baseline_mode=config.baseline
            )
        else:
            rng = np.random.Generator(np.random.PCG64(config.seed))
            estimate = shapley_sampled(
                predictor,
                dataset,
                x_new,
                n_permutations=config.permutations,
                rng=rng,
                baseline_mode=config.baseline,
            )
        doc = render_waterfall(estimate.attribution) if config.svg_path else None
        return estimate.to_json_dict(), doc, attribution_text(estimate.attribution)

    if config.subcommand == "live":
        local = sample_locally(
            dataset, x_new, config.response, size=config.size, seed=config.seed
        )
        local = add_predictions(local, predictor)
        fit = fit_explanation(local, white_box=config.white_box, lambda_=config.lambda_)
        doc = None
        text = None
        if config.svg_path or config.text_path:
            rendered = render_forest(fit) if fit.model.std_errors is not None else None
            doc = rendered if config.svg_path else None
            text = rendered.text_fallback if rendered else None
        return _surrogate_json(fit, config.white_box), doc, text

    # trace: walk the greedy order of the matching ag-break direction
    attribution = ag_break(
        predictor,
        dataset,
        x_new,
        direction=config.direction,
        baseline_mode="intercept",
        up_distance=config.up_distance,
    )
    order = _feature_order_from_entries(attribution, dataset.schema())
    if config.direction == "down":
        order = list(reversed(order))  # release least important first
    trace = relaxation_trace(predictor, dataset, x_new, order, config.direction)
    doc = render_trace(trace)
    return trace.to_json_dict(), doc, doc.text_fallback


def run(argv: list[str]) -> int:
    try:
        config = parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1

    try:
        result, doc, text = _execute(config)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ExplainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    envelope = {
        "version": __version__,
        "seed": config.seed,
        "config": config.echo(),
        "result": result,
    }
    try:
        if config.json_path:
            export_json(envelope, config.json_path)
        if config.svg_path:
            if doc is None:
                raise UsageError("no SVG output defined for this configuration")
            with open(config.svg_path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(doc.svg_text)
        if config.text_path:
            if text is None:
                raise UsageError("no text output defined for this configuration")
            with open(config.text_path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return 2

    if not (config.json_path or config.svg_path or config.text_path):
        print(json.dumps(envelope, sort_keys=True, indent=2, allow_nan=False))
    return 0


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
