"""
Testes da geração sintética: cenas, demonstrações e corpus em disco.
Synthetic generation tests: scenes, demonstrations and the on-disk corpus.

Dependências / Dependencies:
- pytest
- numpy
- polars
"""

import math
import os

import numpy as np
import polars as pl
import pytest

from contracts.config_contracts import GeneratorConfig
from contracts.domain_contracts import DEMO_CSV_COLUMNS, NUM_FEATURES, Therblig
from datagen.arm_map import ARM_MATRIX, joint_angles, remap_joints
from datagen.dataset import (
    corpus_from_memory,
    generate_dataset,
    load_dataset,
    load_demo_csv,
    split_counts,
    write_demo_csv,
)
from datagen.demo_generator import generate_demo, sample_durations
from datagen.scene_generator import (
    MIN_SEPARATION,
    generate_scene,
    relayout,
    rotate_object_in_place,
    translate_scene,
    wrap_half_pi,
)
from datagen.templates import (
    PICK_AND_PLACE,
    TEST_TEMPLATES,
    TRAINING_TEMPLATES,
    Phase,
    TaskTemplate,
    resolve_templates,
)
from domain.therbligs import check_grammar, segments_from_labels, validate_demonstration
from utils.errors import ContractError, DatasetError

SMALL = GeneratorConfig(num_demos=5, duration_steps=150, seed=3)

# ---------------- Testes -------------------


def test_split_counts_for_52_demos():
    assert split_counts(52, (0.6, 0.2, 0.2)) == (31, 10, 11)


def test_generator_config_rejects_bad_fractions():
    with pytest.raises(ValueError):
        GeneratorConfig(split_fractions=(0.5, 0.2, 0.2))


def test_scene_respects_separation_and_ids():
    scene = generate_scene(2, 4, seed=11)
    ids = [o.id for o in scene.objects]
    assert ids == ["obj_0", "obj_1", "distractor_0", "distractor_1", "distractor_2", "distractor_3"]
    centroids = scene.centroids()
    for i in range(len(centroids)):
        for j in range(i + 1, len(centroids)):
            assert np.linalg.norm(centroids[i] - centroids[j]) >= MIN_SEPARATION
    assert all(-math.pi / 2 < o.orientation <= math.pi / 2 for o in scene.objects)


@pytest.mark.parametrize("block", range(10))
def test_min_separation_holds_over_many_seeds(block):
    for seed in range(block * 100, (block + 1) * 100):
        centroids = generate_scene(3, 5, seed=seed).centroids()
        gaps = np.linalg.norm(centroids[:, None, :] - centroids[None, :, :], axis=2)
        assert gaps[np.triu_indices(len(centroids), k=1)].min() >= MIN_SEPARATION


def test_scene_generation_is_deterministic():
    assert generate_scene(2, 2, seed=5) == generate_scene(2, 2, seed=5)


def test_crowded_workspace_fails_with_contract_error():
    with pytest.raises(ContractError, match="could not place"):
        generate_scene(500, 0, seed=0, max_attempts=20)
    # a 3 cm square of admissible centroids cannot hold two objects MIN_SEPARATION apart
    with pytest.raises(ContractError, match="could not place"):
        generate_scene(2, 0, seed=0, workspace=(0.0, 0.0, 0.19, 0.19))
    with pytest.raises(ContractError, match="too small"):
        generate_scene(1, 0, seed=0, workspace=(0.0, 0.0, 0.15, 0.6))


def test_relayout_keeps_task_objects_and_draws_new_distractors():
    scene = generate_scene(2, 0, seed=1)
    moved = relayout(scene, seed=2, num_distractors=3, max_rotation=math.pi / 4)
    assert [o.id for o in moved.objects][:2] == ["obj_0", "obj_1"]
    assert sum(o.id.startswith("distractor_") for o in moved.objects) == 3
    for obj in scene.objects:
        new = moved.object_by_id(obj.id)
        turn = wrap_half_pi(new.orientation - obj.orientation)
        assert abs(turn) <= math.pi / 4 + 1e-9
        assert np.linalg.norm(new.descriptor_array - obj.descriptor_array) < 0.2


def test_translate_and_rotate_keep_shape():
    scene = generate_scene(1, 0, seed=4)
    shifted = translate_scene(scene, (0.01, -0.02))
    assert np.allclose(
        shifted.objects[0].points_array - scene.objects[0].points_array, [0.01, -0.02]
    )
    turned = rotate_object_in_place(scene, "obj_0", 0.3)
    assert turned.objects[0].centroid == scene.objects[0].centroid
    assert turned.objects[0].orientation == pytest.approx(wrap_half_pi(scene.objects[0].orientation + 0.3))


def test_wrap_half_pi_range():
    assert wrap_half_pi(math.pi) == pytest.approx(0.0)
    assert wrap_half_pi(math.pi / 2) == pytest.approx(math.pi / 2)
    assert wrap_half_pi(-math.pi / 2) == pytest.approx(math.pi / 2)
    assert wrap_half_pi(3.0) == pytest.approx(3.0 - math.pi)


def test_templates_follow_the_grammar():
    assert len(TRAINING_TEMPLATES) == 6
    assert len(TEST_TEMPLATES) == 5
    for template in TRAINING_TEMPLATES + TEST_TEMPLATES:
        assert check_grammar([int(p.therblig) for p in template.phases]) == []


def test_template_rejects_anchor_away_from_arm():
    with pytest.raises(ContractError):
        TaskTemplate(
            name="broken",
            roles=("a", "b"),
            phases=(
                Phase(Therblig.REST, (5, 5)),
                Phase(Therblig.TRANSPORT_EMPTY, (5, 5), "a"),
                Phase(Therblig.GRASP, (5, 5), "b"),
                Phase(Therblig.TRANSPORT_LOADED, (5, 5), "b"),
                Phase(Therblig.RELEASE, (5, 5), "b"),
                Phase(Therblig.REST, (5, 5)),
            ),
        )


def test_resolve_templates_groups_and_unknown_names():
    assert [t.name for t in resolve_templates("train")] == [t.name for t in TRAINING_TEMPLATES]
    with pytest.raises(ContractError):
        resolve_templates("no_such_task")


def test_durations_fill_the_demo(rng):
    durations = sample_durations(PICK_AND_PLACE, 600, rng)
    assert sum(durations) == 600
    assert all(d >= 1 for d in durations)


def test_generated_demo_is_valid_and_labeled_in_template_order():
    scene = generate_scene(2, 0, seed=7)
    demo, labels, anchors = generate_demo(PICK_AND_PLACE, scene, seed=8)
    assert demo.states.shape == (600, NUM_FEATURES)
    assert validate_demonstration(demo).ok
    order = [s.therblig for s in segments_from_labels(labels)]
    assert order == [p.therblig for p in PICK_AND_PLACE.phases]
    assert [a.therblig for a in anchors] == [Therblig.GRASP, Therblig.RELEASE]
    assert anchors[0].object_id == "obj_0"
    assert anchors[1].point == scene.object_by_id("obj_1").centroid


def test_demo_reaches_anchor_object_without_noise():
    scene = generate_scene(2, 0, seed=7)
    config = GeneratorConfig(state_noise=0.0, label_jitter=0)
    demo, _, anchors = generate_demo(PICK_AND_PLACE, scene, seed=8, config=config)
    grasp = anchors[0]
    mid = (grasp.start + grasp.end) // 2
    assert np.allclose(demo.ee_xy[mid], grasp.point, atol=1e-9)


def test_demo_generation_is_deterministic():
    scene = generate_scene(2, 0, seed=7)
    a, la, _ = generate_demo(PICK_AND_PLACE, scene, seed=8)
    b, lb, _ = generate_demo(PICK_AND_PLACE, scene, seed=8)
    assert np.array_equal(a.states, b.states)
    assert np.array_equal(la.labels, lb.labels)


@pytest.mark.parametrize("template", [*TRAINING_TEMPLATES, *TEST_TEMPLATES], ids=lambda t: t.name)
def test_transport_moves_much_faster_than_rest(template):
    scene = generate_scene(template.num_task_objects, 0, seed=21)
    demo, labels, _ = generate_demo(template, scene, seed=22)
    speed = np.linalg.norm(np.diff(demo.ee_xy, axis=0), axis=1)
    codes = labels.labels[1:]
    moving = np.isin(codes, [Therblig.TRANSPORT_EMPTY, Therblig.TRANSPORT_LOADED])
    still = np.isin(codes, [Therblig.REST, Therblig.DELAY])
    assert moving.any() and still.any()
    assert speed[moving].mean() > 5.0 * speed[still].mean()


def test_demo_needs_template_objects():
    scene = generate_scene(1, 0, seed=7)
    with pytest.raises(ContractError):
        generate_demo(PICK_AND_PLACE, scene, seed=8)


def test_remap_joints_is_linear_response():
    poses = np.zeros((1, 6))
    delta = np.array([[0.01, -0.02, 0.0, 0.0, 0.0, 0.05]])
    moved = remap_joints(joint_angles(poses), delta)
    assert np.allclose(moved, joint_angles(poses + delta))
    assert np.allclose(moved - joint_angles(poses), delta @ ARM_MATRIX.T)


def test_demo_csv_round_trip(tmp_path):
    scene = generate_scene(2, 0, seed=1)
    demo, labels, _ = generate_demo(PICK_AND_PLACE, scene, seed=2, config=SMALL)
    path = str(tmp_path / "demo.csv")
    write_demo_csv(path, demo, labels)
    assert pl.read_csv(path).columns == DEMO_CSV_COLUMNS
    loaded, loaded_labels = load_demo_csv(path)
    assert np.allclose(loaded.states, demo.states, atol=1e-7)
    assert np.array_equal(loaded.gripper, demo.gripper)
    assert np.array_equal(loaded_labels.labels, labels.labels)


def test_demo_csv_with_bad_label_is_rejected(tmp_path):
    scene = generate_scene(2, 0, seed=1)
    demo, labels, _ = generate_demo(PICK_AND_PLACE, scene, seed=2, config=SMALL)
    path = str(tmp_path / "demo.csv")
    write_demo_csv(path, demo, labels)
    df = pl.read_csv(path).with_columns(pl.lit(9).alias("label"))
    df.write_csv(path)
    with pytest.raises(DatasetError):
        load_demo_csv(path)


def test_dataset_on_disk_matches_memory(tmp_path):
    out = str(tmp_path / "data")
    manifest = generate_dataset(SMALL, TRAINING_TEMPLATES[:2], out, progress=False)
    assert len(manifest.records) == 10
    assert os.path.exists(os.path.join(out, "manifest.json"))
    assert os.path.exists(os.path.join(out, "index.csv"))

    corpus = load_dataset(out)
    memory = corpus_from_memory(SMALL, TRAINING_TEMPLATES[:2])
    assert corpus.task_names() == ["pick_and_place", "crossbeam_cutting"]
    assert [it.record.split for it in corpus.items] == [it.record.split for it in memory.items]
    for a, b in zip(corpus.items, memory.items):
        assert np.array_equal(a.labels.labels, b.labels.labels)
        assert np.allclose(a.demo.states, b.demo.states, atol=1e-7)


def test_dataset_checksum_mismatch_is_reported(tmp_path):
    out = str(tmp_path / "data")
    manifest = generate_dataset(SMALL, TRAINING_TEMPLATES[:1], out, progress=False)
    with open(os.path.join(out, manifest.records[0].demo_path), "a", encoding="utf-8") as f:
        f.write("\n")
    with pytest.raises(DatasetError):
        load_dataset(out)
