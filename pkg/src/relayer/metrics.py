"""Evaluation battery over predicted vs ground-truth plans and rasters."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._kernels import levenshtein
from .design_doc import BoundingBox
from .plan_codec import DesignPlan

IOU_THRESHOLD = 0.5
PSNR_CAP = 99.0

ATTRIBUTES = ("color", "font", "alignment", "lines", "angle")


def ned_similarity(a: str, b: str) -> float:
    """1 - edit_distance / max(len); both empty -> 1."""
    if not a and not b:
        return 1.0
    arr_a = np.array([ord(c) for c in a], dtype=np.int32)
    arr_b = np.array([ord(c) for c in b], dtype=np.int32)
    return 1.0 - levenshtein(arr_a, arr_b) / max(len(a), len(b))


def iou(a, b) -> float:
    ax1, ay1, ax2, ay2 = a.as_tuple() if isinstance(a, BoundingBox) else a
    bx1, by1, bx2, by2 = b.as_tuple() if isinstance(b, BoundingBox) else b
    ix = max(0, min(ax2, bx2) - max(ax1, bx1))
    iy = max(0, min(ay2, by2) - max(ay1, by1))
    inter = ix * iy
    union = (ax2 - ax1) * (ay2 - ay1) + (bx2 - bx1) * (by2 - by1) - inter
    return inter / union if union > 0 else 0.0


def mask_iou(a: np.ndarray, b: np.ndarray) -> float:
    inter = np.logical_and(a != 0, b != 0).sum()
    union = np.logical_or(a != 0, b != 0).sum()
    return float(inter / union) if union else 0.0


def greedy_match(pred, gt, threshold: float = IOU_THRESHOLD):
    """Greedy matching by descending IoU; each box used at most once.
    Returns list of (pred_index, gt_index) pairs with IoU >= threshold."""
    pairs = []
    for i, p in enumerate(pred):
        for j, g in enumerate(gt):
            score = iou(p, g)
            if score >= threshold:
                pairs.append((score, i, j))
    # ties resolved by lowest indices for determinism
    pairs.sort(key=lambda t: (-t[0], t[1], t[2]))
    used_p, used_g, matches = set(), set(), []
    for _, i, j in pairs:
        if i in used_p or j in used_g:
            continue
        used_p.add(i)
        used_g.add(j)
        matches.append((i, j))
    return matches


def detection_f1(pred, gt, iou_threshold: float = IOU_THRESHOLD):
    """Returns (precision, recall, f1)."""
    if not pred and not gt:
        return (1.0, 1.0, 1.0)
    if not pred or not gt:
        return (0.0, 0.0, 0.0)
    tp = len(greedy_match(pred, gt, iou_threshold))
    precision = tp / len(pred)
    recall = tp / len(gt)
    if precision + recall == 0:
        return (0.0, 0.0, 0.0)
    return (precision, recall, 2 * precision * recall / (precision + recall))


def attribute_accuracy(pred_plan: DesignPlan, gt_plan: DesignPlan,
                       iou_threshold: float = IOU_THRESHOLD) -> dict:
    """Per-attribute exact-match rates over detection-matched text pairs.

    Color counts correct only when all four channel bins are equal.
    Unmatched texts affect detection F1 only, not these denominators.
    """
    pred_texts = pred_plan.texts
    gt_texts = gt_plan.texts
    matches = greedy_match([e.box for e in pred_texts], [e.box for e in gt_texts],
                           iou_threshold)
    counts = {name: 0 for name in ATTRIBUTES}
    ned_total = 0.0
    for i, j in matches:
        p, g = pred_texts[i], gt_texts[j]
        counts["color"] += int(p.color == g.color)
        counts["font"] += int(p.font == g.font)
        counts["alignment"] += int(p.alignment == g.alignment)
        counts["lines"] += int(p.line_count == g.line_count)
        counts["angle"] += int(p.angle == g.angle)
        ned_total += ned_similarity(p.content or "", g.content or "")
    n = len(matches)
    rates = {name: (counts[name] / n if n else 1.0) for name in ATTRIBUTES}
    rates["recognition_ned"] = ned_total / n if n else 1.0
    rates["matched_pairs"] = n
    return rates


def layer_count_l1(preds, gts) -> float:
    preds = np.atleast_1d(np.asarray(preds, dtype=np.float64))
    gts = np.atleast_1d(np.asarray(gts, dtype=np.float64))
    if preds.shape != gts.shape:
        raise ValueError("count vectors must have equal length")
    return float(np.mean(np.abs(preds - gts)))


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """10*log10(255^2 / MSE) over RGB, capped at 99.0 dB for identical
    images."""
    if a.shape != b.shape:
        raise ValueError("images must share a shape")
    diff = a[..., :3].astype(np.float64) - b[..., :3].astype(np.float64)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return PSNR_CAP
    return min(PSNR_CAP, 10.0 * math.log10(255.0 ** 2 / mse))


@dataclass
class EvalReport:
    scalars: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)


def evaluate_plans(pairs, iou_threshold: float = IOU_THRESHOLD) -> EvalReport:
    """Aggregate the metric battery over (pred_plan, gt_plan) pairs."""
    report = EvalReport()
    text_f1s, obj_f1s = [], []
    attr_totals = {name: 0.0 for name in ATTRIBUTES}
    ned_total, matched_total = 0.0, 0
    text_counts_p, text_counts_g = [], []
    obj_counts_p, obj_counts_g = [], []
    for idx, (pred, gt) in enumerate(pairs):
        t_f1 = detection_f1([e.box for e in pred.texts], [e.box for e in gt.texts],
                            iou_threshold)[2]
        o_f1 = detection_f1([e.box for e in pred.objects], [e.box for e in gt.objects],
                            iou_threshold)[2]
        attrs = attribute_accuracy(pred, gt, iou_threshold)
        text_f1s.append(t_f1)
        obj_f1s.append(o_f1)
        n = attrs["matched_pairs"]
        for name in ATTRIBUTES:
            attr_totals[name] += attrs[name] * n
        ned_total += attrs["recognition_ned"] * n
        matched_total += n
        text_counts_p.append(len(pred.texts))
        text_counts_g.append(len(gt.texts))
        obj_counts_p.append(len(pred.objects))
        obj_counts_g.append(len(gt.objects))
        report.rows.append({"sample": idx, "text_f1": t_f1, "object_f1": o_f1,
                            **{k: attrs[k] for k in ATTRIBUTES},
                            "recognition_ned": attrs["recognition_ned"]})
    n_samples = max(1, len(report.rows))
    report.scalars = {
        "text_detection_f1": sum(text_f1s) / n_samples,
        "object_detection_f1": sum(obj_f1s) / n_samples,
        "recognition_ned": ned_total / matched_total if matched_total else 1.0,
        "text_layer_count_l1": layer_count_l1(text_counts_p, text_counts_g)
        if text_counts_p else 0.0,
        "object_layer_count_l1": layer_count_l1(obj_counts_p, obj_counts_g)
        if obj_counts_p else 0.0,
    }
    for name in ATTRIBUTES:
        report.scalars[f"{name}_accuracy"] = (
            attr_totals[name] / matched_total if matched_total else 1.0)
    return report
