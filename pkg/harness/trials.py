"""
trials.py
---------

Uma tentativa one-shot: gera cena e demonstração, gera o novo layout,
transfere com correção LAP-VC e julga o sucesso.
One one-shot trial: generate scene and demonstration, generate the new layout,
transfer with LAP-VC correction and judge success.

Critério de sucesso / Success criterion (na ordem / in order):
1. etapa do transfer falhou -> categoria da etapa / a transfer stage failed -> its category
2. ordem dos segmentos difere da verdade -> TherbligSegmentation
   segment order differs from the truth -> TherbligSegmentation
3. âncora a menos de ε de um distrator -> ContextMatching
   anchor within ε of a distractor -> ContextMatching
4. âncora a mais de ε do alvo verdadeiro -> ActionRegistration
   anchor further than ε from its true target -> ActionRegistration
O caminho fora dos limites já falha no warping (TrajectoryPlanning).
A path out of bounds already fails in warping (TrajectoryPlanning).
Qualquer outra exceção -> Others / Any other exception -> Others.
"""

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from actionreg.transfer import TransferResult, transfer
from contracts.config_contracts import GeneratorConfig, ScenarioConfig
from contracts.domain_contracts import Demonstration, LabelSequence, SceneDescriptor
from contracts.registration_contracts import Calibration
from contracts.report_contracts import AnchorTruth, TrialResult
from datagen.demo_generator import generate_demo
from datagen.scene_generator import generate_scene, relayout
from datagen.templates import TaskTemplate
from domain.therbligs import segments_from_labels, therblig_order
from lapvc.correction import make_anchor_corrector
from utils.errors import FailureCategory
from utils.logger import setup_logger

logger = setup_logger("harness_trials")

TRIAL_MAX_ROTATION = math.pi / 4

Segmenter = Callable[[Demonstration], LabelSequence]


@dataclass
class TrialSetup:
    demo_scene: SceneDescriptor
    new_scene: SceneDescriptor
    demo: Demonstration
    labels: LabelSequence
    anchors: list[AnchorTruth]


def trial_seed(master_seed: int, template_index: int, trial_index: int) -> int:
    return int(np.random.SeedSequence([master_seed, template_index, trial_index]).generate_state(1, np.uint64)[0])


def prepare_trial(
    template: TaskTemplate,
    scenario: ScenarioConfig,
    seed: int,
    generator: Optional[GeneratorConfig] = None,
    same_layout: bool = False,
) -> TrialSetup:
    scene_seed, demo_seed, layout_seed, count_seed = (
        int(s) for s in np.random.SeedSequence(seed).generate_state(4, np.uint64)
    )
    demo_scene = generate_scene(template.num_task_objects, 0, scene_seed)
    demo, labels, anchors = generate_demo(template, demo_scene, demo_seed, generator)
    if same_layout:
        new_scene = demo_scene
    else:
        distractors = int(
            np.random.default_rng(count_seed).integers(scenario.min_distractors, scenario.max_distractors + 1)
        )
        new_scene = relayout(
            demo_scene,
            layout_seed,
            num_distractors=distractors,
            keep_ids=[o.id for o in demo_scene.objects],
            max_rotation=TRIAL_MAX_ROTATION,
        )
    return TrialSetup(demo_scene, new_scene, demo, labels, anchors)


def judge(
    outcome: TransferResult,
    setup: TrialSetup,
    tolerance: float,
) -> tuple[Optional[FailureCategory], str, list[float]]:
    """Failure category (None on success), detail and per-anchor errors in meters."""
    if outcome.failure is not None:
        return outcome.failure.category, str(outcome.failure), []

    truth_order = therblig_order(segments_from_labels(setup.labels))
    predicted_order = therblig_order(outcome.segments)
    if predicted_order != truth_order:
        return (
            FailureCategory.THERBLIG_SEGMENTATION,
            f"segment order {[t.short for t in predicted_order]} differs from {[t.short for t in truth_order]}",
            [],
        )

    targets = np.array([setup.new_scene.object_by_id(a.object_id).centroid for a in setup.anchors])
    points = outcome.warped_anchor_points
    errors = np.linalg.norm(points - targets, axis=1)
    task_ids = {o.id for o in setup.demo_scene.objects}
    distractors = np.array(
        [o.centroid for o in setup.new_scene.objects if o.id not in task_ids], dtype=np.float64
    ).reshape(-1, 2)
    for k, p in enumerate(points):
        if distractors.shape[0] and np.min(np.linalg.norm(distractors - p, axis=1)) <= tolerance:
            return FailureCategory.CONTEXT_MATCHING, f"anchor {k} lands on a distractor", errors.tolist()
    worst = int(np.argmax(errors))
    if errors[worst] > tolerance:
        return (
            FailureCategory.ACTION_REGISTRATION,
            f"anchor {worst} ({setup.anchors[worst].therblig.short}) misses its target by {errors[worst]:.4f} m",
            errors.tolist(),
        )
    return None, "", errors.tolist()


def run_trial(
    template: TaskTemplate,
    scenario: ScenarioConfig,
    segmenter: Optional[Segmenter] = None,
    seed: int = 0,
    trial_index: int = 0,
    generator: Optional[GeneratorConfig] = None,
    calibration: Optional[Calibration] = None,
    same_layout: bool = False,
) -> TrialResult:
    """
    Executa uma tentativa; segmenter=None usa os rótulos verdadeiros (oráculo).
    Run one trial; segmenter=None uses the true labels (oracle).
    """
    trace: list[dict] = []
    try:
        setup = prepare_trial(template, scenario, seed, generator, same_layout)
        rng = np.random.default_rng(np.random.SeedSequence([scenario.error_model.seed, seed]))
        corrector = make_anchor_corrector(scenario.policy, scenario.error_model, rng)
        outcome = transfer(
            setup.demo,
            segmenter if segmenter is not None else setup.labels,
            setup.demo_scene,
            setup.new_scene,
            calibration,
            corrector,
        )
        trace = outcome.trace_payload()
        category, detail, errors = judge(outcome, setup, scenario.success_tolerance)
    except Exception as e:
        category, detail, errors = FailureCategory.OTHERS, f"{type(e).__name__}: {e}", []

    if category is not None:
        logger.info(
            f"Tentativa {template.name}#{trial_index} falhou [{category.value}]: {detail} / "
            f"Trial {template.name}#{trial_index} failed [{category.value}]: {detail}"
        )
    return TrialResult(
        task_name=template.name,
        trial_index=trial_index,
        seed=seed,
        success=category is None,
        failure_category=category,
        anchor_errors=errors,
        detail=detail,
        trace=trace,
    )
