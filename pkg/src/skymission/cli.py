"""Command-line surface: mission generation, evaluation, benchmark runs,
and GeoJSON export.

Exit codes are stable: 0 success, 2 bad input, 3 provider failure,
4 empty mission (nothing detected to fly to). Diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .evaluation import (
    METHODS,
    SampleResult,
    Trajectory,
    aggregate,
    evaluate_pair,
    trajectory_length_m,
)
from .fsutil import write_text_atomic
from .geo import GeoReference
from .mission import EmptyMissionError, MissionPlan, extract_trajectory, parse_wpl, serialize_wpl
from .pipeline import (
    ActionGenerationError,
    MissionRequest,
    PipelineTrace,
    RejectedPlanError,
    StageError,
    run_pipeline,
)
from .providers import (
    Instruction,
    NoGoalsError,
    ProviderConfig,
    ProviderError,
    ResponseParseError,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_PROVIDER = 3
EXIT_EMPTY = 4

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")

DEFAULT_ENDPOINT = "https://api.openai.com/v1/chat/completions"


def exit_code_for(exc: Exception) -> int:
    """Map an exception to the documented exit-code classes."""
    if isinstance(exc, (EmptyMissionError, NoGoalsError)):
        return EXIT_EMPTY
    if isinstance(exc, (StageError, ProviderError, ResponseParseError,
                        ActionGenerationError, RejectedPlanError)):
        return EXIT_PROVIDER
    return EXIT_INPUT


# --------------------------------------------------------------------------
# argument plumbing
# --------------------------------------------------------------------------

def _add_provider_args(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("model providers")
    group.add_argument("--provider", choices=("mock", "openai"), default="mock",
                       help="mock replays <image>.detections.json fixtures; openai talks "
                            "to an OpenAI-compatible chat endpoint (default: mock)")
    group.add_argument("--endpoint", default=DEFAULT_ENDPOINT,
                       help="chat-completions URL for goal/action stages")
    group.add_argument("--model", default="gpt-4o", help="model name for goal/action stages")
    group.add_argument("--vlm-endpoint", default=None,
                       help="chat-completions URL for the grounding stage (default: --endpoint)")
    group.add_argument("--vlm-model", default=None,
                       help="model name for the grounding stage (default: --model)")
    group.add_argument("--token-env", default="OPENAI_API_KEY",
                       help="environment variable holding the bearer token (never the token itself)")
    group.add_argument("--timeout", type=float, default=60.0, help="request timeout in seconds")
    group.add_argument("--max-retries", type=int, default=2,
                       help="transport retries per request (exponential backoff)")
    parser.add_argument("--action-mode", choices=("template", "llm"), default="template",
                        help="deterministic template plan (default) or LLM-generated actions")
    parser.add_argument("--altitude", type=float, default=100.0,
                        help="flight altitude in metres applied to every waypoint")


def _provider_configs(args: argparse.Namespace) -> tuple[ProviderConfig, ProviderConfig, ProviderConfig]:
    if args.provider == "mock":
        mock = ProviderConfig(kind="mock")
        return mock, mock, mock
    common = dict(token_env=args.token_env, timeout_s=args.timeout, max_retries=args.max_retries)
    chat = ProviderConfig(kind="http-chat", endpoint=args.endpoint, model=args.model, **common)
    vlm = ProviderConfig(
        kind="http-vlm",
        endpoint=args.vlm_endpoint or args.endpoint,
        model=args.vlm_model or args.model,
        **common,
    )
    return chat, vlm, chat


def _read_instruction(args: argparse.Namespace) -> Instruction:
    if args.prompt is not None:
        return Instruction(args.prompt)
    return Instruction(Path(args.prompt_file).read_text(encoding="utf-8").strip())


def _trace_path(out: Path) -> Path:
    return out.with_suffix(".trace.json") if out.suffix else Path(str(out) + ".trace.json")


def _load_plan(path: Path, lenient: bool) -> MissionPlan:
    return parse_wpl(path.read_text(encoding="utf-8"), lenient=lenient)


# --------------------------------------------------------------------------
# generate
# --------------------------------------------------------------------------

def cmd_generate(args: argparse.Namespace) -> int:
    image = Path(args.image)
    if not image.is_file():
        raise FileNotFoundError(f"image not found: {image}")
    meta = Path(args.meta) if args.meta else image.with_suffix(".meta.json")
    if not meta.is_file():
        raise FileNotFoundError(f"georeference metadata not found: {meta}")
    ref = GeoReference.load(meta)

    goal_cfg, vlm_cfg, action_cfg = _provider_configs(args)
    request = MissionRequest(
        instruction=_read_instruction(args),
        image_path=image,
        ref=ref,
        altitude_m=args.altitude,
        goal_provider=goal_cfg,
        grounding_provider=vlm_cfg,
        action_provider=action_cfg,
        action_mode=args.action_mode,
    )
    trace = run_pipeline(request)

    out = Path(args.out) if args.out else image.with_suffix(".waypoints")
    write_text_atomic(out, serialize_wpl(trace.plan))
    trace_out = Path(args.trace) if args.trace else _trace_path(out)
    write_text_atomic(trace_out, json.dumps(trace.to_json_dict(), indent=2) + "\n")
    print(f"wrote {out} ({len(trace.plan.items)} items) and {trace_out}")
    return EXIT_OK


# --------------------------------------------------------------------------
# evaluate
# --------------------------------------------------------------------------

def _metric_records(trace_gen: Trajectory, trace_truth: Trajectory, which: str) -> dict:
    metrics = evaluate_pair(trace_gen, trace_truth)
    if which != "all":
        metrics = {which: metrics[which]}
    return metrics


def cmd_evaluate(args: argparse.Namespace) -> int:
    gen_plan = _load_plan(Path(args.generated), args.lenient)
    truth_plan = _load_plan(Path(args.truth), args.lenient)
    gen = extract_trajectory(gen_plan)
    truth = extract_trajectory(truth_plan)
    metrics = _metric_records(gen, truth, args.metric)
    gen_len = trajectory_length_m(gen)
    truth_len = trajectory_length_m(truth)

    if args.json:
        records = {
            name: {
                "method": r.method,
                "rmse_m": r.rmse_m,
                "matched_pairs": r.matched_pairs,
                "length_mismatch": r.length_mismatch,
                "details": list(r.details) if r.details is not None else None,
            }
            for name, r in metrics.items()
        }
        print(json.dumps(
            {"metrics": records, "generated_length_m": gen_len, "truth_length_m": truth_len},
            indent=2,
        ))
        return EXIT_OK

    for name in ("knn", "dtw", "sequential"):
        if name in metrics:
            print(f"{name}_rmse_m: {metrics[name].rmse_m:.2f}")
    print(f"generated_length_m: {gen_len:.2f}")
    print(f"truth_length_m: {truth_len:.2f}")
    return EXIT_OK


# --------------------------------------------------------------------------
# benchmark
# --------------------------------------------------------------------------

def _discover_samples(root: Path) -> list[Path]:
    images = sorted(
        p for p in root.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES and p.is_file()
    )
    if not images:
        raise FileNotFoundError(f"no benchmark images found under {root}")
    return images


def _benchmark_sample(
    image: Path,
    instruction: Instruction,
    args: argparse.Namespace,
    plans_dir: Path,
) -> SampleResult:
    ref = GeoReference.load(image.with_suffix(".meta.json"))
    goal_cfg, vlm_cfg, action_cfg = _provider_configs(args)
    request = MissionRequest(
        instruction=instruction,
        image_path=image,
        ref=ref,
        altitude_m=args.altitude,
        goal_provider=goal_cfg,
        grounding_provider=vlm_cfg,
        action_provider=action_cfg,
        action_mode=args.action_mode,
    )
    trace = run_pipeline(request)
    write_text_atomic(plans_dir / f"{image.stem}.waypoints", serialize_wpl(trace.plan))
    write_text_atomic(
        plans_dir / f"{image.stem}.trace.json",
        json.dumps(trace.to_json_dict(), indent=2) + "\n",
    )

    truth_plan = _load_plan(image.with_suffix(".truth.waypoints"), args.lenient)
    gen = extract_trajectory(trace.plan)
    truth = extract_trajectory(truth_plan)
    return SampleResult(
        name=image.stem,
        generated_length_m=trajectory_length_m(gen),
        truth_length_m=trajectory_length_m(truth),
        metrics=evaluate_pair(gen, truth),
    )


def _print_summary(report) -> None:
    print(f"{'RMSE (m)':<10}{'knn':>12}{'dtw':>12}{'sequential':>12}")
    for stat in ("mean", "median", "max"):
        row = "".join(f"{report.aggregates[m][stat]:>12.2f}" for m in ("knn", "dtw", "sequential"))
        print(f"{stat:<10}{row}")
    print(
        f"totals: generated {report.generated_total_m / 1000.0:.2f} km, "
        f"truth {report.truth_total_m / 1000.0:.2f} km, delta {report.delta_pct:+.1f}%"
    )
    if report.failures:
        print(f"failed samples: {len(report.failures)}", file=sys.stderr)
        for name, message in sorted(report.failures.items()):
            print(f"  {name}: {message}", file=sys.stderr)


def cmd_benchmark(args: argparse.Namespace) -> int:
    root = Path(args.dataset)
    if not root.is_dir():
        raise FileNotFoundError(f"dataset root not found: {root}")
    prompt_file = root / "prompt.txt"
    if not prompt_file.is_file():
        raise FileNotFoundError(f"benchmark instruction not found: {prompt_file}")
    instruction = Instruction(prompt_file.read_text(encoding="utf-8").strip())
    images = _discover_samples(root)

    out_dir = Path(args.out_dir)
    plans_dir = out_dir / "plans"
    plans_dir.mkdir(parents=True, exist_ok=True)

    samples: list[SampleResult] = []
    failures: dict[str, str] = {}
    failure_codes: list[int] = []

    def process(image: Path) -> tuple[Path, SampleResult | None, Exception | None]:
        try:
            return image, _benchmark_sample(image, instruction, args, plans_dir), None
        except Exception as exc:  # per-sample isolation: one bad fixture must not void the run
            return image, None, exc

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            outcomes = list(pool.map(process, images))
    else:
        outcomes = [process(image) for image in images]

    for image, result, error in outcomes:
        if result is not None:
            samples.append(result)
        else:
            failures[image.stem] = f"{type(error).__name__}: {error}"
            failure_codes.append(exit_code_for(error))
            logger.warning("sample %s failed: %s", image.stem, error)

    if not samples:
        for name, message in sorted(failures.items()):
            print(f"skymission: sample {name} failed: {message}", file=sys.stderr)
        print("skymission: error: every benchmark sample failed", file=sys.stderr)
        return max(failure_codes, default=EXIT_INPUT)

    report = aggregate(samples, failures)
    write_text_atomic(out_dir / "report.json", json.dumps(report.to_json_dict(), indent=2) + "\n")
    write_text_atomic(out_dir / "report.csv", report.to_csv())
    if not args.no_figures:
        from .figures import render_report_figures

        render_report_figures(report, out_dir / "figures")
    _print_summary(report)
    print(f"report written to {out_dir}")
    return EXIT_OK


# --------------------------------------------------------------------------
# export-geojson
# --------------------------------------------------------------------------

def cmd_export_geojson(args: argparse.Namespace) -> int:
    from .geojson import plans_to_feature_collection

    named = [(Path(p).stem, _load_plan(Path(p), args.lenient)) for p in args.plans]
    collection = plans_to_feature_collection(named)
    write_text_atomic(args.out, json.dumps(collection, indent=2) + "\n")
    print(f"wrote {args.out} ({len(collection['features'])} features)")
    return EXIT_OK


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skymission",
        description="Generate ground-station waypoint missions from natural-language "
                    "requests over georeferenced satellite imagery, and evaluate them "
                    "against ground-truth plans.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a .waypoints mission for one image")
    p.add_argument("image", help="satellite image (<stem>.meta.json must sit beside it)")
    p.add_argument("--meta", default=None, help="georeference JSON (default: <image>.meta.json)")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--prompt", default=None, help="mission request text")
    src.add_argument("--prompt-file", default=None, help="file holding the mission request")
    p.add_argument("--out", default=None, help="output .waypoints path (default: <image>.waypoints)")
    p.add_argument("--trace", default=None, help="trace JSON path (default: beside --out)")
    _add_provider_args(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("evaluate", help="compare a generated plan against a ground-truth plan")
    p.add_argument("generated", help="generated .waypoints file")
    p.add_argument("truth", help="ground-truth .waypoints file")
    p.add_argument("--metric", choices=("all",) + METHODS, default="all",
                   help="restrict output to one method")
    p.add_argument("--json", action="store_true", help="emit metric records as JSON")
    p.add_argument("--lenient", action="store_true",
                   help="keep unknown command codes as opaque waypoint-like items")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("benchmark", help="run generate+evaluate over a dataset directory")
    p.add_argument("dataset", help="directory of <stem>.png/.jpg, <stem>.meta.json, "
                                   "<stem>.truth.waypoints and prompt.txt")
    p.add_argument("--out-dir", required=True, help="directory for report, figures and plans")
    p.add_argument("--jobs", type=int, default=1, help="samples processed in parallel")
    p.add_argument("--no-figures", action="store_true", help="skip rendering report figures")
    p.add_argument("--lenient", action="store_true",
                   help="keep unknown command codes when parsing truth plans")
    _add_provider_args(p)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("export-geojson", help="export plans as a GeoJSON FeatureCollection")
    p.add_argument("plans", nargs="+", help=".waypoints files")
    p.add_argument("--out", required=True, help="output GeoJSON path")
    p.add_argument("--lenient", action="store_true",
                   help="keep unknown command codes as opaque waypoint-like items")
    p.set_defaults(func=cmd_export_geojson)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except Exception as exc:
        logger.debug("command failed", exc_info=True)
        print(f"skymission: error: {exc}", file=sys.stderr)
        return exit_code_for(exc)


if __name__ == "__main__":
    sys.exit(main())
