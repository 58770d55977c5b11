"""
matching.py
-----------

Associação de objetos entre a cena da demonstração e a nova cena por
descritores: vizinho mais próximo mútuo com teste de razão de Lowe.
Object association between the demo scene and the new scene by descriptors:
mutual nearest neighbour with Lowe's ratio test.

Regras / Rules:
- distância euclidiana entre descritores / Euclidean descriptor distance
- melhor / segundo melhor < 0.8 nas duas direções / best / second best < 0.8 both ways
- pares aceitos em ordem crescente de distância, um-para-um
  accepted pairs in ascending distance order, one-to-one
- empate (razão = 1) nunca é resolvido por palpite / a tie (ratio = 1) is never guessed
"""

from typing import Sequence

import numpy as np

from contracts.domain_contracts import SceneDescriptor
from contracts.registration_contracts import MatchResult, ObjectMatch
from utils.errors import ContractError, FailureCategory, StageFailure
from utils.logger import setup_logger

logger = setup_logger("actionreg_matching")

RATIO_THRESHOLD = 0.8


def descriptor_matrix(scene: SceneDescriptor) -> np.ndarray:
    if not scene.objects:
        return np.zeros((0, 0))
    lengths = {len(o.descriptor) for o in scene.objects}
    if len(lengths) != 1:
        raise ContractError(f"descriptors of one scene differ in length: {sorted(lengths)}")
    return np.array([o.descriptor for o in scene.objects], dtype=np.float64)


def _ratios(distances: np.ndarray) -> np.ndarray:
    """best / second best along the last axis; 0 when there is a single candidate."""
    if distances.shape[-1] < 2:
        return np.zeros(distances.shape[:-1])
    two = np.sort(distances, axis=-1)[..., :2]
    best, second = two[..., 0], two[..., 1]
    return np.divide(best, second, out=np.ones_like(best), where=second > 0)


def match_objects(
    demo_scene: SceneDescriptor,
    new_scene: SceneDescriptor,
    ratio_threshold: float = RATIO_THRESHOLD,
) -> MatchResult:
    demo_desc, new_desc = descriptor_matrix(demo_scene), descriptor_matrix(new_scene)
    demo_ids = [o.id for o in demo_scene.objects]
    if demo_desc.size == 0 or new_desc.size == 0:
        return MatchResult(unmatched_demo_ids=demo_ids)
    if demo_desc.shape[1] != new_desc.shape[1]:
        raise ContractError(
            f"descriptor length differs between scenes: {demo_desc.shape[1]} vs {new_desc.shape[1]}"
        )

    dist = np.linalg.norm(demo_desc[:, None, :] - new_desc[None, :, :], axis=2)
    row_ratio = _ratios(dist)
    col_ratio = _ratios(dist.T)
    row_best = np.argmin(dist, axis=1)
    col_best = np.argmin(dist, axis=0)

    candidates = []
    ambiguous = []
    for i in range(dist.shape[0]):
        j = int(row_best[i])
        if row_ratio[i] >= ratio_threshold or col_ratio[j] >= ratio_threshold:
            ambiguous.append(demo_ids[i])
            continue
        if int(col_best[j]) == i:
            candidates.append((float(dist[i, j]), i, j))

    used_demo, used_new = set(), set()
    matches = []
    for d, i, j in sorted(candidates):
        if i in used_demo or j in used_new:
            continue
        used_demo.add(i)
        used_new.add(j)
        confidence = 1.0 - max(float(row_ratio[i]), float(col_ratio[j]))
        matches.append(
            ObjectMatch(
                demo_object_id=demo_ids[i],
                new_object_id=new_scene.objects[j].id,
                descriptor_distance=d,
                confidence=min(1.0, max(0.0, confidence)),
            )
        )

    matches.sort(key=lambda m: demo_ids.index(m.demo_object_id))
    unmatched = [demo_ids[i] for i in range(len(demo_ids)) if i not in used_demo]
    if ambiguous:
        logger.debug(f"Razão ambígua para {ambiguous} / Ambiguous ratio for {ambiguous}")
    return MatchResult(matches=matches, unmatched_demo_ids=unmatched, ambiguous_demo_ids=ambiguous)


def require_matches(result: MatchResult, object_ids: Sequence[str]) -> None:
    """Raise a context-matching failure naming the first required object left unmatched."""
    for object_id in object_ids:
        if result.new_id_for(object_id) is None:
            reason = "ambiguous descriptor" if object_id in result.ambiguous_demo_ids else "no match"
            raise StageFailure(
                "context_matching",
                FailureCategory.CONTEXT_MATCHING,
                f"object {object_id} unmatched in the new scene ({reason})",
            )
