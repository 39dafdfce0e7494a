"""Bounding-box detection evaluation over YOLO-format annotation files.

Ground truths and predictions are paired by greedy one-to-one matching in
descending IoU order (ties broken by ground-truth index, then prediction
index). Only annotations sharing class and image id may pair. Unmatched
ground truths count as IoU 0 in mean_iou; the mean over matched pairs only
is reported separately so either aggregation convention is available.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path


class AnnotationParseError(ValueError):
    """Raised for malformed annotation lines; carries the 1-based line number."""

    def __init__(self, path, line_number: int, message: str):
        super().__init__(f"{path}:{line_number}: {message}")
        self.path = str(path)
        self.line_number = line_number


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned rectangle in absolute pixel coordinates."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise ValueError(f"box corners out of order: {self}")

    @property
    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)


@dataclass(frozen=True)
class Annotation:
    image_id: str
    class_id: int
    box: BoundingBox
    confidence: float | None = None

    def __post_init__(self):
        if self.confidence is not None and not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")


@dataclass(frozen=True)
class EvalSummary:
    """Aggregate of one matching run.

    per_gt_iou holds one value per ground truth in input order, 0.0 for
    unmatched ground truths. matches holds (gt_index, pred_index, iou)
    triples for the accepted pairs.
    """

    per_gt_iou: tuple[float, ...]
    mean_iou: float
    mean_matched_iou: float
    detection_rate_at_t: float
    false_positives: int
    iou_threshold: float
    matches: tuple[tuple[int, int, float], ...]

    @property
    def ground_truth_count(self) -> int:
        return len(self.per_gt_iou)

    @property
    def matched_count(self) -> int:
        return len(self.matches)


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection area over union area; 0 when the union is degenerate."""
    ix = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    iy = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    inter = max(ix, 0.0) * max(iy, 0.0)
    union = a.area + b.area - inter
    if union <= 0.0:
        return 0.0
    return inter / union


def match_annotations(
    ground_truth: list[Annotation],
    predictions: list[Annotation],
    iou_threshold: float = 0.5,
) -> EvalSummary:
    """Greedy one-to-one matching of predictions to ground truths."""
    if not 0.0 < iou_threshold <= 1.0:
        raise ValueError(f"iou_threshold must be in (0, 1], got {iou_threshold}")

    candidates = []
    for gi, gt in enumerate(ground_truth):
        for pi, pred in enumerate(predictions):
            if gt.class_id != pred.class_id or gt.image_id != pred.image_id:
                continue
            v = iou(gt.box, pred.box)
            if v >= iou_threshold:
                candidates.append((-v, gi, pi))
    candidates.sort()

    gt_used = [False] * len(ground_truth)
    pred_used = [False] * len(predictions)
    matches = []
    for neg_v, gi, pi in candidates:
        if gt_used[gi] or pred_used[pi]:
            continue
        gt_used[gi] = True
        pred_used[pi] = True
        matches.append((gi, pi, -neg_v))
    matches.sort()

    per_gt = [0.0] * len(ground_truth)
    for gi, _, v in matches:
        per_gt[gi] = v
    n_gt = len(ground_truth)
    mean_iou = sum(per_gt) / n_gt if n_gt else 0.0
    mean_matched = sum(v for _, _, v in matches) / len(matches) if matches else 0.0
    rate = len(matches) / n_gt if n_gt else 0.0
    return EvalSummary(
        per_gt_iou=tuple(per_gt),
        mean_iou=mean_iou,
        mean_matched_iou=mean_matched,
        detection_rate_at_t=rate,
        false_positives=len(predictions) - len(matches),
        iou_threshold=iou_threshold,
        matches=tuple(matches),
    )


def load_yolo_annotations(
    path: str | os.PathLike,
    image_width: int,
    image_height: int,
) -> list[Annotation]:
    """Parse one YOLO text file: `class cx cy w h [confidence]` per line.

    Coordinates are normalized center format in [0, 1]; they are converted
    to absolute corner boxes clamped to the image bounds. The image id is
    the file stem. Blank lines are skipped.
    """
    if image_width < 1 or image_height < 1:
        raise ValueError("image dimensions must be >= 1")
    path = Path(path)
    image_id = path.stem
    annotations = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            fields = line.split()
            if len(fields) not in (5, 6):
                raise AnnotationParseError(
                    path, lineno, f"expected 5 or 6 fields, got {len(fields)}"
                )
            try:
                class_id = int(fields[0])
                cx, cy, w, h = (float(f) for f in fields[1:5])
                confidence = float(fields[5]) if len(fields) == 6 else None
            except ValueError:
                raise AnnotationParseError(path, lineno, f"non-numeric field in {line!r}") from None
            if class_id < 0:
                raise AnnotationParseError(path, lineno, f"negative class id {class_id}")
            for name, value in (("cx", cx), ("cy", cy), ("w", w), ("h", h)):
                if not 0.0 <= value <= 1.0:
                    raise AnnotationParseError(
                        path, lineno, f"{name}={value} outside normalized range [0, 1]"
                    )
            if confidence is not None and not 0.0 <= confidence <= 1.0:
                raise AnnotationParseError(
                    path, lineno, f"confidence={confidence} outside [0, 1]"
                )
            box = BoundingBox(
                x_min=max((cx - w / 2.0) * image_width, 0.0),
                y_min=max((cy - h / 2.0) * image_height, 0.0),
                x_max=min((cx + w / 2.0) * image_width, float(image_width)),
                y_max=min((cy + h / 2.0) * image_height, float(image_height)),
            )
            annotations.append(
                Annotation(image_id=image_id, class_id=class_id, box=box, confidence=confidence)
            )
    return annotations
