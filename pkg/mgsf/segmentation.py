"""
Label post-processing and demo segmentation with a trained model.

    probs --argmax--> raw labels --median(window)--> smoothed --run-length--> segments
"""

from typing import Callable, Optional

import numpy as np
from scipy.ndimage import median_filter

from contracts.domain_contracts import Demonstration, LabelSequence, TherbligSegment
from domain.therbligs import LabelsLike, as_label_array, segments_from_labels
from mgsf.model import MgsfModel
from utils.errors import ContractError

Segmenter = Callable[[Demonstration], LabelSequence]


def smooth_labels(labels: LabelsLike, window: int = 5) -> np.ndarray:
    """Median filter over codes; edges repeat the boundary value."""
    if window < 1 or window % 2 == 0:
        raise ContractError(f"smoothing window must be a positive odd number, got {window}")
    codes = as_label_array(labels)
    if window == 1 or codes.size == 0:
        return codes.copy()
    return median_filter(codes, size=window, mode="nearest")


def segment(
    demo: Demonstration,
    model: MgsfModel,
    window: Optional[int] = None,
) -> tuple[LabelSequence, list[TherbligSegment]]:
    window = model.config.smoothing_window if window is None else window
    probs = model.predict_proba(demo.states).astype(np.float64)
    probs = probs / probs.sum(axis=1, keepdims=True)
    labels = smooth_labels(np.argmax(probs, axis=1), window)
    sequence = LabelSequence(labels=labels, probabilities=probs)
    return sequence, segments_from_labels(sequence)


def model_segmenter(model: MgsfModel, window: Optional[int] = None) -> Segmenter:
    def run(demo: Demonstration) -> LabelSequence:
        return segment(demo, model, window)[0]

    return run
