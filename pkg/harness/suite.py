"""
suite.py
--------

Suíte de sucesso: N tentativas por template e semente, histograma de falhas e
relatório em JSON + CSV.
Success suite: N trials per template and seed, failure histogram and a
JSON + CSV report.

Cada tentativa é determinística por (semente, template, índice), então a
ordem de execução (ou o número de threads) não muda o resultado.
Every trial is deterministic per (seed, template, index), so execution order
(or the thread count) does not change the result.

Dependências / Dependencies:
- polars
- tqdm
"""

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Sequence

import polars as pl
from tqdm import tqdm

from contracts.config_contracts import GeneratorConfig, ScenarioConfig
from contracts.report_contracts import SuccessReport, TaskSuccess, TrialResult
from datagen.templates import TaskTemplate
from harness.trials import Segmenter, run_trial, trial_seed
from utils.errors import ContractError, FailureCategory
from utils.files import ensure_dir, write_json, write_metadata
from utils.logger import setup_logger

logger = setup_logger("harness_suite")

CATEGORY_NAMES = [c.value for c in FailureCategory]


def failure_histogram(trials: Sequence[TrialResult]) -> dict[str, int]:
    histogram = {name: 0 for name in CATEGORY_NAMES}
    for t in trials:
        if t.failure_category is not None:
            histogram[t.failure_category.value] += 1
    return histogram


def trials_frame(trials: Sequence[TrialResult]) -> pl.DataFrame:
    return pl.DataFrame(
        {
            "task_name": [t.task_name for t in trials],
            "trial_index": [t.trial_index for t in trials],
            "seed": [str(t.seed) for t in trials],
            "success": [t.success for t in trials],
            "failure_category": [t.failure_category.value if t.failure_category else "" for t in trials],
            "max_anchor_error": [max(t.anchor_errors) if t.anchor_errors else None for t in trials],
            "detail": [t.detail for t in trials],
        },
        schema_overrides={"max_anchor_error": pl.Float64},
    )


def run_success_suite(
    templates: Sequence[TaskTemplate],
    scenario: ScenarioConfig,
    segmenter: Optional[Segmenter] = None,
    seeds: Optional[Sequence[int]] = None,
    generator: Optional[GeneratorConfig] = None,
    out_dir: Optional[str] = None,
    threads: int = 1,
    progress: bool = True,
    segmenter_name: Optional[str] = None,
) -> tuple[SuccessReport, list[TrialResult]]:
    """
    Roda a suíte; falhas de tentativas são registradas, nunca interrompem.
    Run the suite; trial faults are recorded and never abort it.
    """
    if not templates:
        raise ContractError("a success suite needs at least one template")
    seeds = list(seeds) if seeds else [scenario.seed]
    jobs = [
        (template, trial_seed(seed, ti, k), si * scenario.trials_per_task + k)
        for si, seed in enumerate(seeds)
        for ti, template in enumerate(templates)
        for k in range(scenario.trials_per_task)
    ]
    logger.info(
        f"Suíte {scenario.mode}: {len(templates)} tarefas × {scenario.trials_per_task} tentativas × {len(seeds)} sementes / "
        f"Suite {scenario.mode}: {len(templates)} tasks × {scenario.trials_per_task} trials × {len(seeds)} seeds"
    )

    def one(job) -> TrialResult:
        template, seed, k = job
        return run_trial(template, scenario, segmenter, seed=seed, trial_index=k, generator=generator)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            trials = list(tqdm(pool.map(one, jobs), total=len(jobs), desc="simulate", disable=not progress))
    else:
        trials = [one(job) for job in tqdm(jobs, desc="simulate", disable=not progress)]

    per_task = []
    for template in templates:
        rows = [t for t in trials if t.task_name == template.name]
        per_task.append(
            TaskSuccess(task_name=template.name, successes=sum(t.success for t in rows), trials=len(rows))
        )
    report = SuccessReport(
        mode=scenario.mode,
        per_task=per_task,
        failure_histogram=failure_histogram(trials),
        config=scenario.model_dump(mode="json"),
        seeds=[int(s) for s in seeds],
        segmenter=segmenter_name or ("oracle" if segmenter is None else "model"),
    )
    logger.info(
        f"Sucesso total {report.total_rate:.1%} / Total success {report.total_rate:.1%} "
        f"({report.total_successes}/{report.total_trials})"
    )
    if out_dir:
        write_suite(report, trials, out_dir)
    return report, trials


def report_payload(report: SuccessReport) -> dict:
    payload = report.model_dump(mode="json")
    payload["per_task"] = [{**t.model_dump(mode="json"), "rate": t.rate} for t in report.per_task]
    payload["total"] = {
        "successes": report.total_successes,
        "trials": report.total_trials,
        "rate": report.total_rate,
    }
    return payload


def write_suite(report: SuccessReport, trials: Sequence[TrialResult], out_dir: str) -> dict[str, str]:
    ensure_dir(out_dir)
    stem = f"success_{report.mode}"
    paths = {
        "report": os.path.join(out_dir, f"{stem}.json"),
        "trials": os.path.join(out_dir, f"{stem}_trials.csv"),
        "traces": os.path.join(out_dir, f"{stem}_traces.json"),
    }
    write_json(report_payload(report), paths["report"])
    frame = trials_frame(trials)
    frame.write_csv(paths["trials"], float_precision=6)
    write_metadata(frame, paths["trials"], os.path.join(out_dir, f"{stem}_trials_metadata.json"), origin="harness")
    write_json(
        [{"task_name": t.task_name, "trial_index": t.trial_index, "trace": t.trace} for t in trials],
        paths["traces"],
    )
    return paths
