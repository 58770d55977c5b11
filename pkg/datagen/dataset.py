"""
dataset.py
----------

Geração e leitura do corpus sintético em disco.
Generation and loading of the on-disk synthetic corpus.

Estrutura / Layout:
    <out>/manifest.json           manifesto com checksums / manifest with checksums
    <out>/index.csv               uma linha por demo / one row per demo
    <out>/index_metadata.json     metadados do índice / index metadata
    <out>/demos/<task>_<k>.csv    t,q0..q6,qd0..qd6,x,y,z,roll,pitch,yaw,fx,fy,fz,tx,ty,tz,gripper,label
    <out>/scenes/<task>_<k>.json  cena da demo / demo scene

Dependências / Dependencies:
- polars
- tqdm
"""

import os
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import polars as pl
from pydantic import ValidationError as PydanticValidationError
from tqdm import tqdm

from contracts.config_contracts import GeneratorConfig
from contracts.domain_contracts import (
    DEMO_CSV_COLUMNS,
    DEFAULT_SAMPLE_RATE_HZ,
    FEATURE_COLUMNS,
    Demonstration,
    DemoRow,
    LabelSequence,
    SceneDescriptor,
)
from contracts.report_contracts import DatasetManifest, DemoRecord
from datagen.demo_generator import generate_demo
from datagen.scene_generator import generate_scene
from datagen.templates import TaskTemplate
from domain.scenes import load_scene, save_scene
from domain.therbligs import check_codes
from utils.errors import ContractError, DatasetError
from utils.files import ensure_dir, read_json, sha256_of, write_json, write_metadata
from utils.logger import setup_logger
from utils.pydantic_validation import check_columns, validate_with_pydantic_batch

logger = setup_logger("datagen_dataset")

MANIFEST_FILE = "manifest.json"
CSV_FLOAT_PRECISION = 8
SPLITS = ("train", "val", "test")

# -------------------------------
# Demo CSV
# -------------------------------


def demo_to_frame(demo: Demonstration, labels: LabelSequence) -> pl.DataFrame:
    if len(labels) != demo.n:
        raise ContractError(f"labels have length {len(labels)}, demonstration has {demo.n} steps")
    data = {"t": np.arange(demo.n, dtype=np.int64)}
    for j, name in enumerate(FEATURE_COLUMNS):
        data[name] = demo.states[:, j]
    data["gripper"] = demo.gripper.astype(np.int64)
    data["label"] = np.asarray(labels.labels, dtype=np.int64)
    return pl.DataFrame(data).select(DEMO_CSV_COLUMNS)


def write_demo_csv(path: str, demo: Demonstration, labels: LabelSequence) -> str:
    ensure_dir(os.path.dirname(path) or ".")
    try:
        demo_to_frame(demo, labels).write_csv(path, float_precision=CSV_FLOAT_PRECISION)
    except OSError as e:
        raise DatasetError(path, f"falha ao escrever / write failed: {e}") from e
    return path


def load_demo_csv(
    path: str,
    task_id: str = "",
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ,
    validate_rows: bool = True,
) -> tuple[Demonstration, LabelSequence]:
    """
    Lê um CSV de demonstração. validate_rows=True valida linha a linha com pydantic.
    Read a demonstration CSV. validate_rows=True validates every row with pydantic.
    """
    try:
        df = pl.read_csv(path)
    except (OSError, pl.exceptions.PolarsError) as e:
        raise DatasetError(path, f"falha ao ler CSV / CSV read failed: {e}") from e

    try:
        if validate_rows:
            df = validate_with_pydantic_batch(df, DemoRow, strict=True)
        else:
            check_columns(df, DemoRow, strict=True)
    except ContractError as e:
        raise DatasetError(path, str(e)) from e

    states = df.select(FEATURE_COLUMNS).to_numpy().astype(np.float64)
    if not np.all(np.isfinite(states)):
        raise DatasetError(path, "non-finite feature values")
    labels = df["label"].to_numpy().astype(np.int64)
    check_codes(labels)
    demo = Demonstration(
        states=states,
        gripper=df["gripper"].to_numpy().astype(bool),
        task_id=task_id,
        sample_rate_hz=sample_rate_hz,
    )
    return demo, LabelSequence(labels=labels)


# -------------------------------
# Corpus
# -------------------------------


@dataclass
class CorpusItem:
    demo: Demonstration
    labels: LabelSequence
    record: DemoRecord
    scene: Optional[SceneDescriptor] = None

    @property
    def task_name(self) -> str:
        return self.record.task_name


@dataclass
class Corpus:
    items: list[CorpusItem] = field(default_factory=list)
    manifest: Optional[DatasetManifest] = None

    def split(self, name: str) -> list[CorpusItem]:
        return [it for it in self.items if it.record.split == name]

    def task_names(self) -> list[str]:
        seen: list[str] = []
        for it in self.items:
            if it.task_name not in seen:
                seen.append(it.task_name)
        return seen

    def subset(self, items: Sequence[CorpusItem]) -> "Corpus":
        return Corpus(items=list(items), manifest=self.manifest)

    def __len__(self) -> int:
        return len(self.items)


def split_counts(n: int, fractions: tuple[float, float, float]) -> tuple[int, int, int]:
    """train = ⌊f_train·n⌋, val = ⌊f_val·n⌋, test = remainder."""
    n_train = int(np.floor(fractions[0] * n + 1e-9))
    n_val = int(np.floor(fractions[1] * n + 1e-9))
    return n_train, n_val, n - n_train - n_val


def _assign_splits(n: int, fractions, seed: int, template_index: int) -> list[str]:
    n_train, n_val, _ = split_counts(n, fractions)
    order = np.random.default_rng(np.random.SeedSequence([seed, template_index, 1 << 20])).permutation(n)
    splits = [""] * n
    for rank, idx in enumerate(order):
        splits[idx] = "train" if rank < n_train else "val" if rank < n_train + n_val else "test"
    return splits


def demo_seeds(master_seed: int, template_index: int, demo_index: int) -> tuple[int, int]:
    """(scene seed, demo seed) derived from (master seed, template, demo index)."""
    state = np.random.SeedSequence([master_seed, template_index, demo_index]).generate_state(2, np.uint64)
    return int(state[0]), int(state[1])


def generate_dataset(
    config: GeneratorConfig,
    templates: Sequence[TaskTemplate],
    out_dir: str,
    progress: bool = True,
) -> DatasetManifest:
    """
    Gera todas as demos, cenas, o índice e o manifesto (escrito por último).
    Generate every demo, scene, the index and the manifest (written last).
    """
    if not templates:
        raise ContractError("at least one template is required")

    ensure_dir(os.path.join(out_dir, "demos"))
    ensure_dir(os.path.join(out_dir, "scenes"))
    logger.info(
        f"Gerando {config.num_demos} demos × {len(templates)} tarefas em {out_dir} / "
        f"Generating {config.num_demos} demos × {len(templates)} tasks into {out_dir}"
    )

    jobs = [(ti, t, k) for ti, t in enumerate(templates) for k in range(config.num_demos)]
    splits = {ti: _assign_splits(config.num_demos, config.split_fractions, config.seed, ti) for ti in range(len(templates))}

    records: list[DemoRecord] = []
    for ti, template, k in tqdm(jobs, desc="gen-data", disable=not progress):
        scene_seed, demo_seed = demo_seeds(config.seed, ti, k)
        scene = generate_scene(template.num_task_objects, config.num_distractors, scene_seed)
        demo, labels, anchors = generate_demo(template, scene, demo_seed, config)

        stem = f"{template.name}_{k:03d}"
        demo_rel = os.path.join("demos", stem + ".csv")
        scene_rel = os.path.join("scenes", stem + ".json")
        write_demo_csv(os.path.join(out_dir, demo_rel), demo, labels)
        save_scene(scene, os.path.join(out_dir, scene_rel))

        records.append(
            DemoRecord(
                demo_path=demo_rel,
                task_name=template.name,
                split=splits[ti][k],
                seed=demo_seed,
                index=k,
                scene_path=scene_rel,
                anchors=anchors,
                demo_checksum=sha256_of(os.path.join(out_dir, demo_rel)),
                scene_checksum=sha256_of(os.path.join(out_dir, scene_rel)),
            )
        )

    index = pl.DataFrame(
        {
            "demo_path": [r.demo_path for r in records],
            "task_name": [r.task_name for r in records],
            "split": [r.split for r in records],
            "index": [r.index for r in records],
            "seed": [str(r.seed) for r in records],
        }
    )
    index_path = os.path.join(out_dir, "index.csv")
    index.write_csv(index_path)
    write_metadata(index, index_path, os.path.join(out_dir, "index_metadata.json"), origin="datagen")

    manifest = DatasetManifest(
        generator=config.model_dump(mode="json"),
        templates=[t.name for t in templates],
        records=records,
    )
    write_json(manifest.model_dump(mode="json"), os.path.join(out_dir, MANIFEST_FILE))
    logger.info(f"Dataset gerado: {manifest.split_counts()} / Dataset generated: {manifest.split_counts()}")
    return manifest


def _manifest_path(path: str) -> str:
    return os.path.join(path, MANIFEST_FILE) if os.path.isdir(path) else path


def read_manifest(path: str) -> DatasetManifest:
    manifest_path = _manifest_path(path)
    try:
        return DatasetManifest.model_validate(read_json(manifest_path))
    except PydanticValidationError as e:
        raise DatasetError(manifest_path, f"manifesto inválido / invalid manifest: {e}") from e


def load_dataset(path: str, verify_checksums: bool = True, validate_rows: bool = False) -> Corpus:
    """
    Carrega o corpus a partir do diretório ou do manifesto; inverso de generate_dataset.
    Load the corpus from the directory or the manifest; inverse of generate_dataset.
    """
    manifest_path = _manifest_path(path)
    root = os.path.dirname(manifest_path)
    manifest = read_manifest(manifest_path)
    sample_rate = float(manifest.generator.get("sample_rate_hz", DEFAULT_SAMPLE_RATE_HZ))

    items: list[CorpusItem] = []
    for record in manifest.records:
        demo_path = os.path.join(root, record.demo_path)
        scene_path = os.path.join(root, record.scene_path)
        for file_path, expected in ((demo_path, record.demo_checksum), (scene_path, record.scene_checksum)):
            if not os.path.exists(file_path):
                raise DatasetError(file_path, "arquivo ausente / file missing")
            if verify_checksums and expected and sha256_of(file_path) != expected:
                raise DatasetError(file_path, "checksum diferente do manifesto / checksum mismatch")
        demo, labels = load_demo_csv(demo_path, record.task_name, sample_rate, validate_rows=validate_rows)
        items.append(CorpusItem(demo=demo, labels=labels, record=record, scene=load_scene(scene_path)))

    logger.info(f"Dataset carregado: {len(items)} demos / Dataset loaded: {len(items)} demos")
    return Corpus(items=items, manifest=manifest)


def corpus_from_memory(
    config: GeneratorConfig,
    templates: Sequence[TaskTemplate],
) -> Corpus:
    """Same corpus as generate_dataset, built without touching the disk."""
    items: list[CorpusItem] = []
    for ti, template in enumerate(templates):
        splits = _assign_splits(config.num_demos, config.split_fractions, config.seed, ti)
        for k in range(config.num_demos):
            scene_seed, demo_seed = demo_seeds(config.seed, ti, k)
            scene = generate_scene(template.num_task_objects, config.num_distractors, scene_seed)
            demo, labels, anchors = generate_demo(template, scene, demo_seed, config)
            record = DemoRecord(
                demo_path="",
                task_name=template.name,
                split=splits[k],
                seed=demo_seed,
                index=k,
                scene_path="",
                anchors=anchors,
            )
            items.append(CorpusItem(demo=demo, labels=labels, record=record, scene=scene))
    return Corpus(items=items)
