"""
Testes do harness: tentativas, suíte de sucesso, relatório e a CLI.
Harness tests: trials, success suite, report and the CLI.

Dependências / Dependencies:
- pytest
- numpy
- polars
"""

import os
from dataclasses import replace

import numpy as np
import polars as pl
import pytest

from actionreg.transfer import TransferResult
from contracts.config_contracts import GeneratorConfig, MgsfConfig, ScenarioConfig
from contracts.correction_contracts import CorrectionPolicy, ErrorModel
from contracts.domain_contracts import LabelSequence, SceneDescriptor, Therblig
from datagen.dataset import generate_dataset, write_demo_csv
from datagen.demo_generator import generate_demo
from datagen.scene_generator import generate_scene
from datagen.templates import PICK_AND_PLACE, TEST_TEMPLATES, TRAINING_TEMPLATES
from domain.scenes import save_scene
from domain.therbligs import segments_from_labels
from harness.cli import EXIT_OK, EXIT_RUNTIME, EXIT_VALIDATION, ablation_seeds, build_parser, main
from harness.reporting import REPORT_JSON, REPORT_MARKDOWN, report
from harness.suite import CATEGORY_NAMES, run_success_suite
from harness.trials import judge, prepare_trial, run_trial
from mgsf.model import MgsfModel
from utils.errors import FailureCategory
from utils.files import read_json, write_json

SHORT = GeneratorConfig(duration_steps=150)
EXACT = ScenarioConfig(trials_per_task=3, error_model=ErrorModel(), policy=CorrectionPolicy(kind="passthrough"))

# ---------------- Fixtures -------------------


@pytest.fixture
def demo_files(tmp_path):
    scene = generate_scene(2, 0, seed=7)
    demo, labels, _ = generate_demo(PICK_AND_PLACE, scene, seed=8, config=SHORT)
    paths = {
        "demo": str(tmp_path / "demo.csv"),
        "scene": str(tmp_path / "scene.json"),
        "out": str(tmp_path / "out.csv"),
        "trace": str(tmp_path / "trace.json"),
    }
    write_demo_csv(paths["demo"], demo, labels)
    save_scene(scene, paths["scene"])
    return paths


# ---------------- Testes -------------------


def test_oracle_trial_on_same_layout_succeeds():
    result = run_trial(PICK_AND_PLACE, EXACT, seed=5, generator=SHORT, same_layout=True)
    assert result.success, result.detail
    assert result.failure_category is None
    assert len(result.anchor_errors) == 2
    assert max(result.anchor_errors) < 1e-3
    assert [e["status"] for e in result.trace] == ["ok"] * 6


def test_all_rest_segmenter_fails_as_segmentation():
    def rest(demo):
        return LabelSequence(labels=np.zeros(demo.n, dtype=np.int64))

    result = run_trial(PICK_AND_PLACE, EXACT, segmenter=rest, seed=5, generator=SHORT, same_layout=True)
    assert not result.success
    assert result.failure_category == FailureCategory.THERBLIG_SEGMENTATION


def test_wrong_segment_order_is_judged_as_segmentation():
    setup = prepare_trial(PICK_AND_PLACE, EXACT, 5, SHORT, same_layout=True)
    labels = setup.labels.labels.copy()
    first_rest_end = int(np.argmax(labels != int(Therblig.REST)))
    labels[:first_rest_end] = int(Therblig.TRANSPORT_EMPTY)
    result = run_trial(
        PICK_AND_PLACE, EXACT, segmenter=lambda d: LabelSequence(labels=labels), seed=5, generator=SHORT, same_layout=True
    )
    assert result.failure_category == FailureCategory.THERBLIG_SEGMENTATION
    assert "differs" in result.detail


def test_crashing_segmenter_is_recorded_as_others():
    def broken(demo):
        raise RuntimeError("segmenter crashed")

    result = run_trial(PICK_AND_PLACE, EXACT, segmenter=broken, seed=5, generator=SHORT)
    assert result.failure_category == FailureCategory.OTHERS
    assert "segmenter crashed" in result.detail


def test_unseen_object_near_an_anchor_is_a_distractor_whatever_its_id():
    setup = prepare_trial(PICK_AND_PLACE, EXACT, 5, SHORT, same_layout=True)
    anchor_object = setup.new_scene.object_by_id(setup.anchors[0].object_id)
    x, y = anchor_object.centroid
    impostor = anchor_object.model_copy(update={"id": "obj_9", "centroid": (x + 0.01, y)})
    crowded = SceneDescriptor(
        workspace=setup.new_scene.workspace_bounds, objects=[*setup.new_scene.objects, impostor]
    )
    targets = np.array([setup.new_scene.object_by_id(a.object_id).centroid for a in setup.anchors])
    outcome = TransferResult(segments=segments_from_labels(setup.labels), warped_anchor_points=targets)

    category, _, errors = judge(outcome, setup, tolerance=0.02)
    assert category is None
    assert max(errors) == 0.0

    category, detail, _ = judge(outcome, replace(setup, new_scene=crowded), tolerance=0.02)
    assert category == FailureCategory.CONTEXT_MATCHING
    assert "anchor 0" in detail


def test_trials_are_deterministic():
    scenario = ScenarioConfig(mode="com", trials_per_task=1)
    a = run_trial(PICK_AND_PLACE, scenario, seed=11, generator=SHORT)
    b = run_trial(PICK_AND_PLACE, scenario, seed=11, generator=SHORT)
    assert a == b
    assert a.success == (a.failure_category is None)


def test_suite_counts_and_thread_invariance(tmp_path):
    templates = TRAINING_TEMPLATES[:2]
    report_1, trials_1 = run_success_suite(templates, EXACT, generator=SHORT, progress=False)
    report_4, trials_4 = run_success_suite(
        templates, EXACT, generator=SHORT, threads=4, progress=False, out_dir=str(tmp_path)
    )
    assert [t.model_dump() for t in trials_1] == [t.model_dump() for t in trials_4]
    assert report_1.total_trials == 6
    assert [t.trials for t in report_1.per_task] == [3, 3]
    assert list(report_1.failure_histogram) == CATEGORY_NAMES
    assert sum(report_1.failure_histogram.values()) + report_1.total_successes == 6
    assert report_1.segmenter == "oracle"

    frame = pl.read_csv(str(tmp_path / "success_sim_trials.csv"))
    assert frame.height == 6
    assert read_json(str(tmp_path / "success_sim.json"))["total"]["trials"] == 6
    assert os.path.exists(str(tmp_path / "success_sim_traces.json"))


def test_report_is_deterministic_and_flags_gaps(tmp_path):
    run_dir = str(tmp_path / "run")
    run_success_suite([PICK_AND_PLACE], EXACT, generator=SHORT, progress=False, out_dir=run_dir)
    text_a, summary = report(run_dir)
    with open(os.path.join(run_dir, REPORT_MARKDOWN), "rb") as f:
        first = f.read()
    text_b, _ = report(run_dir)
    with open(os.path.join(run_dir, REPORT_MARKDOWN), "rb") as f:
        assert f.read() == first
    assert text_a == text_b
    assert "eval.json" in summary["missing"]
    assert "## Gaps" in text_a
    assert "## Success rate (sim, segmenter: oracle)" in text_a
    assert read_json(os.path.join(run_dir, REPORT_JSON))["seeds"] == [0]


def test_report_on_empty_directory_lists_every_gap(tmp_path):
    text, summary = report(str(tmp_path))
    assert summary["artifacts"] == []
    assert len(summary["missing"]) == 6
    assert "none recorded" in text


def test_cli_gen_data(tmp_path):
    out = str(tmp_path / "data")
    code = main(["--quiet", "gen-data", "--out", out, "--templates", "pick_and_place", "--num-demos", "3"])
    assert code == EXIT_OK
    assert len(read_json(os.path.join(out, "manifest.json"))["records"]) == 3


def test_cli_generated_data_matches_library(tmp_path):
    out_cli, out_lib = str(tmp_path / "cli"), str(tmp_path / "lib")
    main(["--quiet", "--seed", "4", "gen-data", "--out", out_cli, "--templates", "pick_and_place", "--num-demos", "2"])
    generate_dataset(GeneratorConfig(num_demos=2, seed=4), [PICK_AND_PLACE], out_lib, progress=False)
    a = pl.read_csv(os.path.join(out_cli, "index.csv"))
    b = pl.read_csv(os.path.join(out_lib, "index.csv"))
    assert a.equals(b)


def test_cli_seed_is_accepted_after_the_command(tmp_path):
    parser = build_parser()
    assert parser.parse_args(["gen-data", "--out", "d"]).seed == 0
    assert parser.parse_args(["--seed", "3", "gen-data", "--out", "d"]).seed == 3
    assert parser.parse_args(["--seed", "3", "gen-data", "--out", "d", "--seed", "1"]).seed == 1
    assert parser.parse_args(["simulate", "--out", "d", "--quiet", "--threads", "2"]).threads == 2

    cfg = tmp_path / "run.cfg"
    cfg.write_text("generator.duration_steps = 150\n", encoding="utf-8")
    after, before = str(tmp_path / "after"), str(tmp_path / "before")
    common = ["--templates", "pick_and_place", "--num-demos", "2", "--quiet"]
    assert main(["gen-data", "--config", str(cfg), "--out", after, "--seed", "1", *common]) == EXIT_OK
    assert main(["--seed", "1", "--config", str(cfg), "gen-data", "--out", before, *common]) == EXIT_OK
    assert pl.read_csv(os.path.join(after, "index.csv")).equals(pl.read_csv(os.path.join(before, "index.csv")))
    generator = read_json(os.path.join(after, "manifest.json"))["generator"]
    assert (generator["seed"], generator["duration_steps"]) == (1, 150)


def test_ablation_seed_count_expands_to_a_range(tmp_path):
    args = build_parser().parse_args(["ablate", "--data", "d", "--out", "o", "--seeds", "5"])
    assert ablation_seeds(args.seeds) == [0, 1, 2, 3, 4]
    assert ablation_seeds(None) == [0, 1, 2, 3, 4]
    assert ablation_seeds([3, 7]) == [3, 7]
    code = main(["--quiet", "ablate", "--data", str(tmp_path), "--out", str(tmp_path / "o"), "--seeds", "0"])
    assert code == EXIT_VALIDATION


def test_cli_eval_writes_a_csv_report(tmp_path):
    data = str(tmp_path / "data")
    generate_dataset(GeneratorConfig(num_demos=5, duration_steps=150), [PICK_AND_PLACE], data, progress=False)
    toy = MgsfConfig(lstm_hidden=4, d_model=8, heads=2, ffn_dim=8, encoder_layers=1, fusion_steps=2, meta_dim=4, meta_hidden=4)
    ckpt = MgsfModel.initialize(toy).save(str(tmp_path / "toy.json"))
    out_csv, out_json = str(tmp_path / "eval.csv"), str(tmp_path / "eval.json")
    base = ["--quiet", "eval", "--data", data, "--ckpt", ckpt]
    assert main([*base, "--report", "csv", "--out", out_csv]) == EXIT_OK
    assert main([*base, "--out", out_json]) == EXIT_OK

    frame = pl.read_csv(out_csv)
    assert frame.columns == ["model", "precision", "recall", "f1", "kappa", "tp_min", "tp_max"]
    assert frame["model"].to_list()[-1] == "threshold"
    assert frame.height == len(read_json(out_json)["rows"]) == 2


def test_cli_missing_config_file_is_a_validation_error(tmp_path):
    assert main(["--config", str(tmp_path / "nope.cfg"), "report", "--run", str(tmp_path)]) == EXIT_VALIDATION


def test_cli_bad_policy_is_a_validation_error(tmp_path):
    code = main(["--quiet", "simulate", "--templates", "pick_and_place", "--policy", "magic", "--out", str(tmp_path)])
    assert code == EXIT_VALIDATION


def test_cli_bad_config_value_is_a_validation_error(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("generator.num_demos = -3\n", encoding="utf-8")
    code = main(["--quiet", "--config", str(cfg), "gen-data", "--out", str(tmp_path / "data")])
    assert code == EXIT_VALIDATION


def test_cli_transfer_writes_demo_and_trace(demo_files):
    code = main(
        [
            "--quiet",
            "transfer",
            "--demo", demo_files["demo"],
            "--demo-scene", demo_files["scene"],
            "--new-scene", demo_files["scene"],
            "--policy", "snap",
            "--out", demo_files["out"],
            "--trace", demo_files["trace"],
        ]
    )
    assert code == EXIT_OK
    assert pl.read_csv(demo_files["out"]).height == 150
    assert [e["status"] for e in read_json(demo_files["trace"])] == ["ok"] * 6


def test_cli_transfer_failure_returns_runtime_code(demo_files, tmp_path):
    labels = str(tmp_path / "labels.json")
    write_json({"labels": [0] * 150}, labels)
    code = main(
        [
            "--quiet",
            "transfer",
            "--demo", demo_files["demo"],
            "--labels", labels,
            "--demo-scene", demo_files["scene"],
            "--new-scene", demo_files["scene"],
            "--out", demo_files["out"],
            "--trace", demo_files["trace"],
        ]
    )
    assert code == EXIT_RUNTIME
    assert not os.path.exists(demo_files["out"])
    assert read_json(demo_files["trace"])[1]["category"] == FailureCategory.THERBLIG_SEGMENTATION.value


def test_cli_correct_snaps_points(demo_files, tmp_path):
    scene = read_json(demo_files["scene"])
    centroid = scene["objects"][0]["centroid"]
    points = str(tmp_path / "points.json")
    out = str(tmp_path / "corrected.json")
    write_json({"points": [[centroid[0] + 0.02, centroid[1]]]}, points)
    assert main(["correct", "--points", points, "--scene", demo_files["scene"], "--out", out]) == EXIT_OK
    corrected = read_json(out)
    assert corrected["corrected_points"] == [centroid]
    assert corrected["rationale"] == ["snap:obj_0"]


def test_cli_simulate_then_report(tmp_path):
    run_dir = str(tmp_path / "run")
    code = main(
        ["--quiet", "--deterministic", "simulate", "--templates", "pick_and_place", "--trials", "2", "--compare-policies", "--out", run_dir]
    )
    assert code == EXIT_OK
    payload = read_json(os.path.join(run_dir, "success_sim.json"))
    assert payload["total"]["trials"] == 2
    assert pl.read_csv(os.path.join(run_dir, "lapvc.csv")).height == 6
    assert main(["--quiet", "report", "--run", run_dir]) == EXIT_OK
    assert os.path.exists(os.path.join(run_dir, REPORT_MARKDOWN))


@pytest.mark.slow
def test_oracle_suite_on_unseen_tasks_never_fails():
    oracle = ScenarioConfig(error_model=ErrorModel(), policy=CorrectionPolicy(kind="passthrough"))
    result, trials = run_success_suite(TEST_TEMPLATES, oracle, progress=False)
    assert result.total_trials == 5 * 50
    failures = [(t.task_name, t.seed, t.detail) for t in trials if not t.success]
    assert failures == []
    assert sum(result.failure_histogram.values()) == 0


def _tree_bytes(root: str) -> dict:
    contents = {}
    for base, _, files in os.walk(root):
        for name in files:
            path = os.path.join(base, name)
            with open(path, "rb") as f:
                contents[os.path.relpath(path, root)] = f.read()
    return contents


@pytest.mark.slow
def test_deterministic_cli_runs_are_byte_identical(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "generator.num_demos = 5\n"
        "generator.duration_steps = 60\n"
        "mgsf.lstm_hidden = 4\n"
        "mgsf.d_model = 8\n"
        "mgsf.heads = 2\n"
        "mgsf.ffn_dim = 8\n"
        "mgsf.encoder_layers = 1\n"
        "mgsf.fusion_steps = 2\n"
        "mgsf.meta_dim = 4\n"
        "mgsf.meta_hidden = 4\n",
        encoding="utf-8",
    )
    trees = []
    for run in ("a", "b"):
        root = tmp_path / run
        data, ckpt, sim = str(root / "data"), str(root / "ckpt.json"), str(root / "sim")
        base = ["--quiet", "--deterministic", "--config", str(cfg)]
        assert main([*base, "gen-data", "--out", data, "--seed", "3"]) == EXIT_OK
        assert main([*base, "train", "--data", data, "--out", ckpt, "--epochs", "2", "--seed", "3"]) == EXIT_OK
        sim_args = ["simulate", "--templates", "pick_and_place", "--trials", "3", "--ckpt", ckpt, "--out", sim]
        assert main([*base, *sim_args, "--seed", "3"]) == EXIT_OK
        trees.append(_tree_bytes(str(root)))

    assert "ckpt.json" in trees[0]
    assert any(name.startswith("sim") for name in trees[0])
    assert trees[0] == trees[1]
