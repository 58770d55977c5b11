"""
therbligs.py
------------

Conversões entre rótulos por timestep, codificação one-hot e segmentos
(run-length), além da validação de demonstrações e da gramática de tarefas.
Conversions between per-timestep labels, one-hot encoding and run-length
segments, plus demonstration and task-grammar validation.

Fluxo / Flow:
    LabelSequence --one_hot--> n×7 matrix --decode--> LabelSequence
    LabelSequence --segments_from_labels--> [TherbligSegment] --labels_from_segments--> LabelSequence
"""

from typing import Iterable, Sequence, Union

import numpy as np

from contracts.domain_contracts import (
    NUM_FEATURES,
    NUM_THERBLIGS,
    Demonstration,
    LabelSequence,
    Therblig,
    TherbligSegment,
    ValidationReport,
    Violation,
)
from utils.errors import ContractError

LabelsLike = Union[LabelSequence, Sequence[int], np.ndarray]


def as_label_array(labels: LabelsLike) -> np.ndarray:
    if isinstance(labels, LabelSequence):
        return np.asarray(labels.labels)
    return np.asarray(labels, dtype=np.int64).reshape(-1)


def check_codes(codes: np.ndarray) -> None:
    bad = np.flatnonzero((codes < 0) | (codes >= NUM_THERBLIGS))
    if bad.size:
        i = int(bad[0])
        raise ContractError(f"therblig code {int(codes[i])} at index {i} is outside 0..{NUM_THERBLIGS - 1}")


def one_hot(labels: LabelsLike) -> np.ndarray:
    codes = as_label_array(labels)
    check_codes(codes)
    out = np.zeros((codes.shape[0], NUM_THERBLIGS), dtype=np.float64)
    out[np.arange(codes.shape[0]), codes] = 1.0
    return out


def decode(matrix: np.ndarray) -> LabelSequence:
    """Argmax per row; the inverse of one_hot."""
    m = np.asarray(matrix)
    if m.ndim != 2 or m.shape[1] != NUM_THERBLIGS:
        raise ContractError(f"expected an n×{NUM_THERBLIGS} matrix, got shape {m.shape}")
    return LabelSequence(labels=np.argmax(m, axis=1))


def segments_from_labels(labels: LabelsLike) -> list[TherbligSegment]:
    codes = as_label_array(labels)
    if codes.size == 0:
        raise ContractError("cannot segment an empty label sequence")
    check_codes(codes)

    boundaries = np.flatnonzero(np.diff(codes)) + 1
    starts = np.concatenate([[0], boundaries])
    ends = np.concatenate([boundaries, [codes.size]])
    return [
        TherbligSegment(therblig=Therblig(int(codes[s])), start=int(s), end=int(e))
        for s, e in zip(starts, ends)
    ]


def labels_from_segments(segments: Sequence[TherbligSegment]) -> LabelSequence:
    if not segments:
        raise ContractError("cannot rebuild labels from zero segments")
    expected_start = 0
    for seg in segments:
        if seg.start != expected_start:
            raise ContractError(f"segments are not contiguous at index {seg.start} (expected {expected_start})")
        expected_start = seg.end
    labels = np.concatenate([np.full(seg.length, int(seg.therblig), dtype=np.int64) for seg in segments])
    return LabelSequence(labels=labels)


def therblig_order(segments: Iterable[TherbligSegment]) -> list[Therblig]:
    return [seg.therblig for seg in segments]


def validate_demonstration(demo: Demonstration) -> ValidationReport:
    """
    Verifica comprimento, largura (26) e finitude; reporta todas as violações.
    Check length, width (26) and finiteness; report every violation.

    Nunca levanta exceção / Never raises.
    """
    violations: list[Violation] = []
    states = demo.states

    if states.ndim != 2:
        violations.append(Violation(kind="shape", message=f"states must be 2-D, got shape {states.shape}"))
        return ValidationReport(violations=violations)

    n, width = states.shape
    if n < 2:
        violations.append(Violation(kind="length", message=f"demonstration needs at least 2 steps, got {n}"))
    if width != NUM_FEATURES:
        violations.append(
            Violation(kind="width", message=f"rows must have {NUM_FEATURES} features, got {width}")
        )
    if demo.gripper.shape != (n,):
        violations.append(
            Violation(kind="gripper", message=f"gripper has shape {demo.gripper.shape}, expected ({n},)")
        )
    if not demo.sample_rate_hz > 0:
        violations.append(Violation(kind="sample_rate", message=f"sample rate {demo.sample_rate_hz} must be > 0"))

    for t, f in np.argwhere(~np.isfinite(states)):
        violations.append(
            Violation(
                kind="non_finite",
                message=f"non-finite value {states[t, f]} at timestep {t}, feature {f}",
                timestep=int(t),
                feature=int(f),
            )
        )
    return ValidationReport(violations=violations)


def check_grammar(labels: LabelsLike) -> list[str]:
    """
    Confere as restrições de ordem da gramática de tarefas.
    Check the ordering constraints of the task grammar.

    - começa e termina em Rest / starts and ends with Rest
    - Grasp < TransportLoaded < Release
    - Use só entre Grasp e Release / Use only between Grasp and Release
    """
    order = therblig_order(segments_from_labels(labels))
    problems: list[str] = []
    if order[0] != Therblig.REST:
        problems.append(f"starts with {order[0].name}, not REST")
    if order[-1] != Therblig.REST:
        problems.append(f"ends with {order[-1].name}, not REST")

    holding = False
    carried = False
    for i, th in enumerate(order):
        if th == Therblig.GRASP:
            if holding:
                problems.append(f"GRASP at segment {i} while already holding")
            holding, carried = True, False
        elif th == Therblig.TRANSPORT_LOADED:
            if not holding:
                problems.append(f"TRANSPORT_LOADED at segment {i} without a preceding GRASP")
            carried = True
        elif th == Therblig.USE:
            if not holding:
                problems.append(f"USE at segment {i} outside a GRASP..RELEASE span")
        elif th == Therblig.RELEASE:
            if not holding:
                problems.append(f"RELEASE at segment {i} without a preceding GRASP")
            elif not carried:
                problems.append(f"RELEASE at segment {i} without a preceding TRANSPORT_LOADED")
            holding = False
    if holding:
        problems.append("sequence ends while still holding an object")
    return problems
