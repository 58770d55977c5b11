"""
correction.py
-------------

Ponto de entrada da LAP-VC: corrige pontos previstos com a política
configurada, adapta a correção para a transferência e compara políticas sob
erro injetado.
LAP-VC entry point: correct predicted points with the configured policy, wrap
the correction for transfer and compare policies under injected error.

Dependências / Dependencies:
- numpy
- polars
- tqdm
"""

from typing import Optional, Sequence

import numpy as np
import polars as pl
from tqdm import tqdm

from actionreg.transfer import AnchorCorrector
from contracts.correction_contracts import CorrectionPolicy, CorrectionResponse, ErrorModel, TaggedPoint
from contracts.domain_contracts import ANCHOR_THERBLIGS, SceneDescriptor
from contracts.registration_contracts import Anchor
from datagen.scene_generator import generate_scene
from datagen.templates import TaskTemplate
from lapvc.client import ExternalCorrector
from lapvc.error_injection import inject_error
from lapvc.policies import as_points, passthrough_points, snap_points
from lapvc.scoring import alignment_score
from utils.errors import ContractError
from utils.logger import setup_logger

logger = setup_logger("lapvc_correction")

COMPARED_POLICIES = ("passthrough", "snap", "external,mock")


def tag_points(points, therbligs: Optional[Sequence[str]] = None, object_ids=None) -> list[TaggedPoint]:
    pts = as_points(points)
    therbligs = list(therbligs) if therbligs is not None else ["unknown"] * pts.shape[0]
    object_ids = list(object_ids) if object_ids is not None else [None] * pts.shape[0]
    if not (len(therbligs) == len(object_ids) == pts.shape[0]):
        raise ContractError(f"{pts.shape[0]} points need as many therblig tags and object ids")
    return [
        TaggedPoint(x=float(p[0]), y=float(p[1]), therblig=t, object_id=o)
        for p, t, o in zip(pts, therbligs, object_ids)
    ]


def correct_points(
    points,
    scene: SceneDescriptor,
    policy: CorrectionPolicy,
    tags: Optional[Sequence[TaggedPoint]] = None,
    external: Optional[ExternalCorrector] = None,
) -> CorrectionResponse:
    """
    Corrige pontos (k, 2) no referencial da cena; a resposta tem a mesma contagem e ordem.
    Correct (k, 2) scene-frame points; the reply keeps their count and order.
    """
    if policy.kind == "passthrough":
        return passthrough_points(points)
    if policy.kind == "snap":
        return snap_points(points, scene, policy.snap_radius)
    tags = list(tags) if tags is not None else tag_points(points)
    external = external or ExternalCorrector(policy)
    return external.correct(tags, scene)


def make_anchor_corrector(
    policy: CorrectionPolicy,
    error_model: Optional[ErrorModel] = None,
    rng: Optional[np.random.Generator] = None,
    external: Optional[ExternalCorrector] = None,
    responses: Optional[list] = None,
) -> AnchorCorrector:
    """
    Corretor para transfer(): injeta o erro do modelo e aplica a política.
    Corrector for transfer(): injects the model error and applies the policy.

    `responses` recebe cada CorrectionResponse / `responses` collects every CorrectionResponse.
    """
    if policy.kind == "external" and external is None:
        external = ExternalCorrector(policy)

    def run(points: np.ndarray, anchors: Sequence[Anchor], scene: SceneDescriptor) -> np.ndarray:
        predicted = inject_error(points, error_model, rng) if error_model is not None else points
        tags = tag_points(predicted, [a.therblig.short for a in anchors], [a.object_id for a in anchors])
        response = correct_points(predicted, scene, policy, tags, external)
        if responses is not None:
            responses.append(response)
        return np.array(response.corrected_points, dtype=np.float64).reshape(-1, 2)

    return run


def anchor_targets(template: TaskTemplate, scene: SceneDescriptor) -> tuple[np.ndarray, list[str], list[str]]:
    """Centroids, object ids and therblig tags of the template's anchor phases in `scene`."""
    ids, tags = [], []
    for phase in template.phases:
        if phase.therblig in ANCHOR_THERBLIGS:
            ids.append(template.role_object_id(phase.target))
            tags.append(phase.therblig.short)
    points = np.array([scene.object_by_id(i).centroid for i in ids], dtype=np.float64)
    return points, ids, tags


def compare_policies(
    templates: Sequence[TaskTemplate],
    error_model: ErrorModel,
    trials_per_task: int = 100,
    num_distractors: int = 0,
    policies: Sequence[str] = COMPARED_POLICIES,
    seed: int = 0,
    progress: bool = False,
) -> pl.DataFrame:
    """
    Mesmas tentativas com erro injetado para cada política; uma linha por (política, tarefa, tentativa).
    Same injected-error trials for every policy; one row per (policy, task, trial).
    """
    if not templates:
        raise ContractError("at least one template is required")
    parsed = {name: CorrectionPolicy.parse(name) for name in policies}
    externals = {name: ExternalCorrector(p) for name, p in parsed.items() if p.kind == "external"}

    rows = []
    jobs = [(ti, t, k) for ti, t in enumerate(templates) for k in range(trials_per_task)]
    for ti, template, k in tqdm(jobs, desc="lapvc", disable=not progress):
        scene_seed = int(np.random.SeedSequence([seed, ti, k]).generate_state(1, np.uint64)[0])
        scene = generate_scene(template.num_task_objects, num_distractors, scene_seed)
        truth, ids, tags = anchor_targets(template, scene)
        rng = np.random.default_rng(np.random.SeedSequence([error_model.seed, seed, ti, k]))
        predicted = inject_error(truth, error_model, rng)
        tagged = tag_points(predicted, tags, ids)
        for name, policy in parsed.items():
            response = correct_points(predicted, scene, policy, tagged, externals.get(name))
            rows.append(
                {
                    "policy": name,
                    "task_name": template.name,
                    "trial": k,
                    "score": alignment_score(response.corrected_points, truth, scene, ids),
                    "fallback_used": response.fallback_used,
                }
            )
    return pl.DataFrame(rows)


def summarize_policies(table: pl.DataFrame) -> pl.DataFrame:
    """Mean score per (policy, task) plus an `all` row per policy, in policy order."""
    order = list(dict.fromkeys(table["policy"].to_list()))
    per_task = table.group_by(["policy", "task_name"]).agg(pl.col("score").mean().alias("mean_score"))
    overall = table.group_by("policy").agg(pl.col("score").mean().alias("mean_score")).with_columns(
        pl.lit("all").alias("task_name")
    )
    out = pl.concat([per_task, overall.select(per_task.columns)])
    return (
        out.with_columns(
            pl.col("policy").replace_strict(order, list(range(len(order))), default=None).alias("_order"),
            (pl.col("task_name") == "all").alias("_is_all"),
        )
        .sort(["_order", "_is_all", "task_name"])
        .drop(["_order", "_is_all"])
    )
