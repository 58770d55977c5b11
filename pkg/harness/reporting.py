"""
reporting.py
------------

Relatório de uma execução a partir dos artefatos em disco: tabela de
variantes (média ± desvio), métricas de avaliação, varredura de tamanho,
sucesso por tarefa com histograma de falhas e comparação de políticas LAP-VC.
Run report built from the artifacts on disk: variant table (mean ± std),
evaluation metrics, size sweep, per-task success with the failure histogram
and the LAP-VC policy comparison.

Artefatos ausentes viram lacunas sinalizadas; a saída não tem timestamp, então
rodar de novo sobre os mesmos artefatos gera bytes idênticos.
Missing artifacts become flagged gaps; the output has no timestamp, so running
again over the same artifacts yields identical bytes.

Dependências / Dependencies:
- polars
"""

import os
from typing import Optional

import polars as pl

from lapvc.correction import summarize_policies
from mgsf.ablation import METRIC_COLUMNS, summarize_ablation
from utils.errors import DatasetError
from utils.files import config_hash, read_json, write_json
from utils.logger import setup_logger

logger = setup_logger("harness_reporting")

ARTIFACTS = {
    "eval": "eval.json",
    "ablation": "ablation.csv",
    "sweep": "sweep.csv",
    "success_sim": "success_sim.json",
    "success_com": "success_com.json",
    "lapvc": "lapvc.csv",
}

REPORT_MARKDOWN = "report.md"
REPORT_JSON = "report.json"


def markdown_table(df: pl.DataFrame) -> str:
    with pl.Config(
        tbl_formatting="ASCII_MARKDOWN",
        tbl_hide_column_data_types=True,
        tbl_hide_dataframe_shape=True,
        tbl_rows=-1,
        tbl_cols=-1,
        tbl_width_chars=400,
        fmt_str_lengths=200,
        float_precision=2,
    ):
        return str(df)


def _read_csv(path: str) -> pl.DataFrame:
    try:
        return pl.read_csv(path)
    except (OSError, pl.exceptions.ComputeError) as e:
        raise DatasetError(path, f"falha ao ler CSV / failed to read CSV: {e}") from e


def variant_table(ablation: pl.DataFrame) -> pl.DataFrame:
    """One row per variant, each metric rendered as `mean ± std`."""
    summary = summarize_ablation(ablation)
    columns = [pl.col("variant"), pl.col("cells")]
    for name in METRIC_COLUMNS:
        columns.append(
            pl.format(
                "{} ± {}",
                pl.col(f"{name}_mean").round(2),
                pl.col(f"{name}_std").fill_null(0.0).round(2),
            ).alias(name)
        )
    return summary.select(columns)


def success_table(payload: dict) -> pl.DataFrame:
    rows = [
        {"task_name": t["task_name"], "successes": t["successes"], "trials": t["trials"], "rate": 100.0 * t["rate"]}
        for t in payload["per_task"]
    ]
    total = payload["total"]
    rows.append(
        {"task_name": "total", "successes": total["successes"], "trials": total["trials"], "rate": 100.0 * total["rate"]}
    )
    return pl.DataFrame(rows)


def histogram_table(payload: dict) -> pl.DataFrame:
    histogram = payload["failure_histogram"]
    return pl.DataFrame({"category": list(histogram), "failures": [int(v) for v in histogram.values()]})


def eval_table(payload: dict) -> pl.DataFrame:
    rows = []
    for row in payload["rows"]:
        rows.append(
            {
                "model": row["name"],
                "precision": row["precision"],
                "recall": row["recall"],
                "f1": row["f1"],
                "kappa": row["kappa"],
                "tp_min": row["tp_range"][0],
                "tp_max": row["tp_range"][1],
            }
        )
    return pl.DataFrame(rows)


def class_recall_table(payload: dict) -> Optional[pl.DataFrame]:
    """Per-task × per-therblig recall of the first evaluated model."""
    first = payload["rows"][0] if payload["rows"] else None
    if not first or not first.get("per_task_class_recall"):
        return None
    rows = [{"task_name": task, **classes} for task, classes in sorted(first["per_task_class_recall"].items())]
    return pl.DataFrame(rows)


def report(run_dir: str, out_dir: Optional[str] = None) -> tuple[str, dict]:
    """
    Monta o relatório e grava report.md e report.json em out_dir (padrão: run_dir).
    Build the report and write report.md and report.json into out_dir (default: run_dir).
    """
    out_dir = out_dir or run_dir
    present = {k: os.path.join(run_dir, f) for k, f in ARTIFACTS.items() if os.path.exists(os.path.join(run_dir, f))}
    missing = sorted(f for k, f in ARTIFACTS.items() if k not in present)
    if missing:
        logger.warning(f"Artefatos ausentes: {missing} / Missing artifacts: {missing}")

    sections: list[str] = ["# therblig-kit run report", ""]
    summary: dict = {"artifacts": sorted(os.path.basename(p) for p in present.values()), "missing": missing}
    configs: dict = {}
    seeds: set[int] = set()

    if "eval" in present:
        payload = read_json(present["eval"])
        configs["eval"] = payload.get("config", {})
        sections += ["## Segmentation metrics", "", markdown_table(eval_table(payload)), ""]
        classes = class_recall_table(payload)
        if classes is not None:
            sections += ["### Per-task therblig recall", "", markdown_table(classes), ""]
        summary["eval"] = eval_table(payload).to_dicts()

    if "ablation" in present:
        ablation = _read_csv(present["ablation"])
        table = variant_table(ablation)
        seeds.update(int(s) for s in ablation["seed"].unique().to_list())
        failed = ablation.filter(pl.col("error").is_not_null()).height
        sections += ["## Variant ablation (mean ± std over seeds)", "", markdown_table(table), ""]
        if failed:
            sections += [f"> {failed} ablation cells failed and are excluded.", ""]
        summary["ablation"] = table.to_dicts()

    if "sweep" in present:
        sweep = _read_csv(present["sweep"])
        table = (
            sweep.filter(pl.col("error").is_null())
            .group_by("size")
            .agg(pl.col("recall").mean().alias("recall_mean"), pl.col("recall").std().alias("recall_std"))
            .sort("size")
        )
        sections += ["## Dataset-size sweep", "", markdown_table(table), ""]
        summary["sweep"] = table.to_dicts()

    for mode in ("sim", "com"):
        key = f"success_{mode}"
        if key not in present:
            continue
        payload = read_json(present[key])
        configs[key] = payload.get("config", {})
        seeds.update(int(s) for s in payload.get("seeds", []))
        sections += [
            f"## Success rate ({mode}, segmenter: {payload.get('segmenter', 'oracle')})",
            "",
            markdown_table(success_table(payload)),
            "",
            "### Failure categories",
            "",
            markdown_table(histogram_table(payload)),
            "",
        ]
        summary[key] = {
            "per_task": success_table(payload).to_dicts(),
            "failure_histogram": payload["failure_histogram"],
        }

    if "lapvc" in present:
        table = summarize_policies(_read_csv(present["lapvc"]))
        sections += ["## LAP-VC alignment score", "", markdown_table(table), ""]
        summary["lapvc"] = table.to_dicts()

    if missing:
        sections += ["## Gaps", ""] + [f"- missing `{name}`" for name in missing] + [""]

    summary["config_hash"] = config_hash(configs)
    summary["seeds"] = sorted(seeds)
    sections += [
        "## Reproduction",
        "",
        f"- config hash: `{summary['config_hash']}`",
        f"- seeds: {', '.join(str(s) for s in summary['seeds']) or 'none recorded'}",
        "",
    ]
    text = "\n".join(sections)

    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, REPORT_MARKDOWN), "w", encoding="utf-8", newline="\n") as f:
        f.write(text)
    write_json(summary, os.path.join(out_dir, REPORT_JSON))
    logger.info(f"Relatório salvo em {out_dir} / Report saved to {out_dir}")
    return text, summary
