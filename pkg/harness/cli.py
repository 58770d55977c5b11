"""
cli.py
------

CLI do therblig-kit / therblig-kit command line.

    python -m harness.cli [--seed N] [--threads N] [--deterministic] [--config FILE] <comando> ...
    python -m harness.cli <comando> --seed N ...

Comandos / Commands:
    gen-data   gera o corpus sintético / generate the synthetic corpus
    train      treina uma variante MGSF / train one MGSF variant
    eval       métricas de checkpoints + baseline por limiares / checkpoint metrics + threshold baseline
    ablate     ablação das variantes (e varredura de tamanho) / variant ablation (and size sweep)
    segment    segmenta uma demo / segment one demo
    transfer   transfere uma demo para uma nova cena / transfer one demo onto a new scene
    correct    corrige pontos com uma política LAP-VC / correct points with a LAP-VC policy
    simulate   suíte de sucesso sim/com / sim/com success suite
    report     relatório de uma execução / run report

Códigos de saída / Exit codes: 0 sucesso / success, 1 erro de validação / validation error,
2 falha de execução / runtime fault.

Dependências / Dependencies:
- polars
- numpy
"""

import argparse
import contextlib
import os
import sys
from typing import Optional, Sequence

import numpy as np
import polars as pl
from pydantic import ValidationError

from actionreg.calibration import load_calibration
from actionreg.transfer import transfer, write_trace
from contracts.config_contracts import GeneratorConfig, MgsfConfig, ScenarioConfig
from contracts.correction_contracts import CorrectionPolicy, ErrorModel
from contracts.domain_contracts import LabelSequence
from datagen.dataset import generate_dataset, load_dataset, load_demo_csv, write_demo_csv
from datagen.templates import resolve_templates
from domain.scenes import load_scene
from harness.reporting import ARTIFACTS, eval_table, report
from harness.suite import run_success_suite
from lapvc.correction import compare_policies, correct_points, make_anchor_corrector
from mgsf.ablation import SWEEP_SIZES, run_ablation, run_dataset_sweep, threshold_metrics
from mgsf.model import MgsfModel
from mgsf.segmentation import model_segmenter, segment
from mgsf.training import evaluate, train
from numeric.tensor import precision
from utils.errors import ContractError, TherbligKitError
from utils.files import ensure_dir, read_json, write_json, write_metadata
from utils.logger import setup_logger
from utils.settings import build_config, read_config_file

logger = setup_logger("harness_cli")

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2

DEFAULT_ABLATION_SEEDS = 5


# -------------------------------
# Helpers
# -------------------------------


def _overrides(args, *names) -> dict:
    return {name: getattr(args, name) for name in names if getattr(args, name, None) is not None}


def _generator_config(args) -> GeneratorConfig:
    return build_config(
        GeneratorConfig, "generator", args.file_values, {**_overrides(args, "num_demos", "num_distractors"), "seed": args.seed}
    )


def _mgsf_config(args, **extra) -> MgsfConfig:
    overrides = {**_overrides(args, "variant", "epochs", "batch_size", "lr"), **extra}
    if args.seed is not None:
        overrides.setdefault("seed", args.seed)
    return build_config(MgsfConfig, "mgsf", args.file_values, overrides)


def _scenario_config(args) -> ScenarioConfig:
    file_values = {k: v for k, v in args.file_values.items() if not k.startswith(("scenario.error", "scenario.policy"))}
    base = build_config(ScenarioConfig, "scenario", file_values, {**_overrides(args, "mode"), "seed": args.seed})
    update = {}
    if args.trials is not None:
        update["trials_per_task"] = args.trials
    if args.error_bias is not None or args.error_sigma is not None:
        bias = args.error_bias if args.error_bias is not None else list(base.error_model.bias)
        sigma = args.error_sigma if args.error_sigma is not None else base.error_model.noise_sigma
        update["error_model"] = ErrorModel(bias=tuple(bias), noise_sigma=sigma, seed=base.error_model.seed)
    if args.policy is not None:
        update["policy"] = _policy(args.policy)
    return base.model_validate({**base.model_dump(), **update}) if update else base


def _policy(text: str) -> CorrectionPolicy:
    try:
        return CorrectionPolicy.parse(text)
    except ValueError as e:
        raise ContractError(f"invalid correction policy {text!r}: {e}") from e


def ablation_seeds(values: Optional[Sequence[int]]) -> list[int]:
    """`--seeds N` runs seeds 0..N-1; two or more values are taken as the seed list."""
    if not values:
        return list(range(DEFAULT_ABLATION_SEEDS))
    if len(values) == 1:
        if values[0] < 1:
            raise ContractError(f"--seeds needs a positive count, got {values[0]}")
        return list(range(values[0]))
    return list(values)


def _progress(args) -> bool:
    return not args.quiet


def _load_model(path: str) -> MgsfModel:
    model = MgsfModel.load(path)
    logger.info(f"Modelo carregado: {path} ({model.variant}) / Model loaded: {path} ({model.variant})")
    return model


def _labels_payload(labels: LabelSequence, segments) -> dict:
    return {
        "labels": [int(c) for c in labels.labels],
        "segments": [{"therblig": s.therblig.name, "start": s.start, "end": s.end} for s in segments],
    }


def _read_labels(path: str) -> LabelSequence:
    payload = read_json(path)
    labels = payload["labels"] if isinstance(payload, dict) else payload
    return LabelSequence(labels=labels)


# -------------------------------
# Commands
# -------------------------------


def cmd_gen_data(args) -> int:
    config = _generator_config(args)
    manifest = generate_dataset(config, resolve_templates(args.templates), args.out, progress=_progress(args))
    logger.info(f"{len(manifest.records)} demos em {args.out} / {len(manifest.records)} demos in {args.out}")
    return EXIT_OK


def _write_log(result, path: str) -> None:
    frame = pl.DataFrame([e.model_dump() for e in result.log]) if result.log else pl.DataFrame()
    frame.write_csv(path, float_precision=6)


def cmd_train(args) -> int:
    corpus = load_dataset(args.data)
    config = _mgsf_config(args)
    model = MgsfModel.initialize(config)
    result = train(model, corpus, config, checkpoint_path=args.out, progress=_progress(args))
    _write_log(result, os.path.splitext(args.out)[0] + "_log.csv")
    if result.diverged:
        logger.error(f"Treino divergiu: {result.error} / Training diverged: {result.error}")
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_eval(args) -> int:
    corpus = load_dataset(args.data)
    items = corpus.split(args.split)
    rows = []
    for path in args.ckpt:
        model = _load_model(path)
        metrics = evaluate(model, items)
        rows.append({"name": f"{model.variant} ({os.path.basename(path)})", **metrics.model_dump(mode="json")})
    rows.append({"name": "threshold", **threshold_metrics(corpus, args.split).model_dump(mode="json")})
    config = {"split": args.split, "checkpoints": [os.path.basename(p) for p in args.ckpt]}
    payload = {"split": args.split, "rows": rows, "config": config}
    if args.report == "csv":
        eval_table(payload).write_csv(args.out, float_precision=6)
    else:
        write_json(payload, args.out)
    return EXIT_OK


def cmd_ablate(args) -> int:
    seeds = ablation_seeds(args.seeds)
    corpus = load_dataset(args.data)
    config = _mgsf_config(args)
    ensure_dir(args.out)
    table = run_ablation(corpus, seeds, config, args.variants, progress=_progress(args))
    path = os.path.join(args.out, ARTIFACTS["ablation"])
    table.write_csv(path, float_precision=6)
    write_metadata(table, path, os.path.join(args.out, "ablation_metadata.json"), origin="mgsf")
    if args.sweep:
        sweep = run_dataset_sweep(corpus, args.sizes or SWEEP_SIZES, seeds, config, progress=_progress(args))
        sweep.write_csv(os.path.join(args.out, ARTIFACTS["sweep"]), float_precision=6)
    failed = table.filter(pl.col("error").is_not_null()).height
    return EXIT_RUNTIME if failed == table.height else EXIT_OK


def cmd_segment(args) -> int:
    demo, _ = load_demo_csv(args.demo, task_id=os.path.basename(args.demo))
    labels, segments = segment(demo, _load_model(args.ckpt), args.window)
    write_json(_labels_payload(labels, segments), args.out)
    return EXIT_OK


def cmd_transfer(args) -> int:
    demo, csv_labels = load_demo_csv(args.demo, task_id=os.path.basename(args.demo))
    if args.ckpt:
        labels = model_segmenter(_load_model(args.ckpt))
    elif args.labels:
        labels = _read_labels(args.labels)
    else:
        labels = csv_labels
    corrector = make_anchor_corrector(_policy(args.policy)) if args.policy else None
    result = transfer(
        demo,
        labels,
        load_scene(args.demo_scene),
        load_scene(args.new_scene),
        load_calibration(args.calib),
        corrector,
    )
    if args.trace:
        write_trace(result, args.trace)
    if not result.ok:
        logger.error(f"Transferência falhou: {result.failure} / Transfer failed: {result.failure}")
        return EXIT_RUNTIME
    write_demo_csv(args.out, result.demo, result.labels)
    return EXIT_OK


def cmd_correct(args) -> int:
    payload = read_json(args.points)
    points = payload["points"] if isinstance(payload, dict) else payload
    scene = load_scene(args.scene)
    response = correct_points(np.asarray(points, dtype=np.float64), scene, _policy(args.policy))
    if args.out:
        write_json(response.model_dump(mode="json"), args.out)
    else:
        xy = np.asarray(response.corrected_points, dtype=np.float64).reshape(-1, 2)
        print(pl.DataFrame({"x": xy[:, 0], "y": xy[:, 1]}))
        print(response.rationale)
    return EXIT_OK


def cmd_simulate(args) -> int:
    scenario = _scenario_config(args)
    templates = resolve_templates(args.templates)
    segmenter = model_segmenter(_load_model(args.ckpt)) if args.ckpt else None
    run_success_suite(
        templates,
        scenario,
        segmenter,
        seeds=[scenario.seed],
        out_dir=args.out,
        threads=args.threads,
        progress=_progress(args),
        segmenter_name=os.path.basename(args.ckpt) if args.ckpt else "oracle",
    )
    if args.compare_policies:
        table = compare_policies(
            templates,
            scenario.error_model,
            trials_per_task=scenario.trials_per_task,
            num_distractors=scenario.max_distractors,
            seed=scenario.seed,
            progress=_progress(args),
        )
        table.write_csv(os.path.join(args.out, ARTIFACTS["lapvc"]), float_precision=6)
    return EXIT_OK


def cmd_report(args) -> int:
    text, _ = report(args.run, args.out)
    if not args.quiet:
        print(text)
    return EXIT_OK


# -------------------------------
# Parser
# -------------------------------


def _global_options(parser: argparse.ArgumentParser, suppress: bool) -> None:
    def default(value):
        return argparse.SUPPRESS if suppress else value

    parser.add_argument("--seed", type=int, default=default(0))
    parser.add_argument("--threads", type=int, default=default(1), help="trial workers of simulate")
    parser.add_argument("--deterministic", action="store_true", default=default(False), help="single thread, float64 numerics")
    parser.add_argument("--config", default=default(None), help="flat key=value config file")
    parser.add_argument("--quiet", action="store_true", default=default(False), help="no progress bars")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="therblig-kit", description="Therblig-based skill transfer toolkit")
    _global_options(parser, suppress=False)
    # same options after the command name; only given ones override the top level
    common = argparse.ArgumentParser(add_help=False)
    _global_options(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", parents=[common])
    p.add_argument("--out", required=True)
    p.add_argument("--templates", default="train")
    p.add_argument("--num-demos", type=int, dest="num_demos")
    p.add_argument("--num-distractors", type=int, dest="num_distractors")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", parents=[common])
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="checkpoint header path (.json)")
    p.add_argument("--variant", choices=["full", "no_meta", "no_gate", "backbone"])
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--lr", type=float)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", parents=[common])
    p.add_argument("--data", required=True)
    p.add_argument("--ckpt", nargs="+", required=True)
    p.add_argument("--split", default="test", choices=["train", "val", "test"])
    p.add_argument("--report", default="json", choices=["json", "csv"], help="json payload or flat csv table")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablate", parents=[common])
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="run directory")
    p.add_argument("--seeds", type=int, nargs="+", help="a count N (seeds 0..N-1) or an explicit seed list")
    p.add_argument("--variants", nargs="+", default=["full", "no_meta", "no_gate", "backbone"])
    p.add_argument("--sweep", action="store_true")
    p.add_argument("--sizes", type=int, nargs="+")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--lr", type=float)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("segment", parents=[common])
    p.add_argument("--demo", required=True)
    p.add_argument("--ckpt", required=True)
    p.add_argument("--window", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("transfer", parents=[common])
    p.add_argument("--demo", required=True)
    source = p.add_mutually_exclusive_group()
    source.add_argument("--labels")
    source.add_argument("--ckpt")
    p.add_argument("--demo-scene", required=True, dest="demo_scene")
    p.add_argument("--new-scene", required=True, dest="new_scene")
    p.add_argument("--calib")
    p.add_argument("--policy")
    p.add_argument("--out", required=True)
    p.add_argument("--trace")
    p.set_defaults(func=cmd_transfer)

    p = sub.add_parser("correct", parents=[common])
    p.add_argument("--points", required=True)
    p.add_argument("--scene", required=True)
    p.add_argument("--policy", default="snap")
    p.add_argument("--out")
    p.set_defaults(func=cmd_correct)

    p = sub.add_parser("simulate", parents=[common])
    p.add_argument("--mode", choices=["sim", "com"])
    p.add_argument("--templates", default="test")
    p.add_argument("--ckpt")
    p.add_argument("--trials", type=int)
    p.add_argument("--error-bias", type=float, nargs=2, dest="error_bias")
    p.add_argument("--error-sigma", type=float, dest="error_sigma")
    p.add_argument("--policy")
    p.add_argument("--compare-policies", action="store_true", dest="compare_policies")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", parents=[common])
    p.add_argument("--run", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.file_values = read_config_file(args.config)
        args.threads = 1 if args.deterministic else max(1, args.threads)
        numerics = precision(np.float64) if args.deterministic else contextlib.nullcontext()
        with numerics:
            return args.func(args)
    except (ContractError, ValidationError) as e:
        logger.error(f"Erro de validação: {e} / Validation error: {e}")
        return EXIT_VALIDATION
    except TherbligKitError as e:
        logger.error(f"Falha de execução: {e} / Runtime fault: {e}")
        return EXIT_RUNTIME
    except Exception as e:
        logger.exception(f"Falha inesperada: {e} / Unexpected fault: {e}")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
