"""Similarity indices between a predicted extraction and its target.

Binary indices from the confusion counts:

    DCI = 2*tp / ((tp + fp) + (tp + fn))      overlap coincidence
    TI  = tp / (tp + fp + fn)                 intersection over union
    Em  = (fp + fn) / (tp + fp + fn)          misclassification share
    Bpn = (fp - fn) / tp                      over/under-estimation bias

plus the single-window structural similarity on grayscale pairs.
Conventions for the degenerate cases: two empty masks count as a perfect
match (DCI = TI = 1, Em = 0); Bpn with tp = 0 is NaN and aggregation
drops it.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .model import BinaryMask, GrayImage

# standard stabilizers for an 8-bit dynamic range
DEFAULT_C1 = (0.01 * 255.0) ** 2
DEFAULT_C2 = (0.03 * 255.0) ** 2

REPORT_COLUMNS = ("slice", "dci", "ti", "em", "bpn", "ssim", "tp", "fp", "fn", "tn")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class SimilarityReport:
    """Per-slice index bundle; ``bpn`` is NaN when tp = 0."""

    dci: float
    ti: float
    em: float
    bpn: float
    ssim: float
    counts: ConfusionCounts


def confusion(pred: BinaryMask, target: BinaryMask) -> ConfusionCounts:
    """Exact pixel confusion counts between two masks."""
    if pred.width != target.width or pred.height != target.height:
        raise ValueError(
            f"confusion: dimension mismatch {pred.width}x{pred.height}"
            f" vs {target.width}x{target.height}"
        )
    p, t = pred.bits, target.bits
    tp = int(np.count_nonzero(p & t))
    fp = int(np.count_nonzero(p & ~t))
    fn = int(np.count_nonzero(~p & t))
    tn = p.size - tp - fp - fn
    return ConfusionCounts(tp, fp, fn, tn)


def similarity(counts: ConfusionCounts) -> tuple[float, float, float, float]:
    """(DCI, TI, Em, Bpn) from confusion counts, degenerate conventions
    as documented in the module docstring."""
    tp, fp, fn = counts.tp, counts.fp, counts.fn
    union = tp + fp + fn
    if union == 0:
        dci, ti, em = 1.0, 1.0, 0.0
    else:
        dci = 2.0 * tp / ((tp + fp) + (tp + fn))
        ti = tp / union
        em = (fp + fn) / union
    bpn = (fp - fn) / tp if tp > 0 else math.nan
    return dci, ti, em, bpn


def ssim(x: GrayImage, y: GrayImage, c1: float = DEFAULT_C1, c2: float = DEFAULT_C2) -> float:
    """Whole-image structural similarity with population statistics."""
    if x.width != y.width or x.height != y.height:
        raise ValueError("ssim: dimension mismatch")
    a, b = x.data, y.data
    mu_x, mu_y = a.mean(), b.mean()
    var_x = a.var()
    var_y = b.var()
    cov = ((a - mu_x) * (b - mu_y)).mean()
    num = (2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)
    den = (mu_x**2 + mu_y**2 + c1) * (var_x + var_y + c2)
    return float(num / den)


def ssim_windowed(
    x: GrayImage,
    y: GrayImage,
    c1: float = DEFAULT_C1,
    c2: float = DEFAULT_C2,
    window: int = 7,
) -> float:
    """Mean of local structural similarity over a sliding square window
    (edge-replicated). Offered as a variant; the reference index is the
    whole-image one."""
    if x.width != y.width or x.height != y.height:
        raise ValueError("ssim: dimension mismatch")
    if window < 3 or window % 2 == 0:
        raise ValueError("window must be an odd integer >= 3")
    a, b = x.data, y.data
    f = lambda im: ndimage.uniform_filter(im, size=window, mode="nearest")
    mu_x, mu_y = f(a), f(b)
    var_x = f(a * a) - mu_x**2
    var_y = f(b * b) - mu_y**2
    cov = f(a * b) - mu_x * mu_y
    num = (2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)
    den = (mu_x**2 + mu_y**2 + c1) * (var_x + var_y + c2)
    return float((num / den).mean())


def loss_ssim(y: GrayImage, y_pred: GrayImage, c1: float = DEFAULT_C1, c2: float = DEFAULT_C2) -> float:
    """Structural-similarity training loss 1 - SSIM, in [0, 2]."""
    return 1.0 - ssim(y, y_pred, c1, c2)


def slice_report(
    pred: BinaryMask,
    target: BinaryMask,
    pred_gray: GrayImage | None = None,
    target_gray: GrayImage | None = None,
    c1: float = DEFAULT_C1,
    c2: float = DEFAULT_C2,
) -> SimilarityReport:
    """Full report for one slice. SSIM is computed on the grayscale pair
    when both are given, otherwise on the masks rendered as 0/255."""
    counts = confusion(pred, target)
    dci, ti, em, bpn = similarity(counts)
    if pred_gray is not None and target_gray is not None:
        s = ssim(pred_gray, target_gray, c1, c2)
    else:
        s = ssim(
            GrayImage(np.where(pred.bits, 255.0, 0.0)),
            GrayImage(np.where(target.bits, 255.0, 0.0)),
            c1,
            c2,
        )
    return SimilarityReport(dci=dci, ti=ti, em=em, bpn=bpn, ssim=s, counts=counts)


def _fmt(x: float) -> str:
    return repr(float(x))


def write_report_csv(path, rows: list[tuple[str, SimilarityReport]]) -> None:
    """Write per-slice reports; float fields round-trip exactly."""
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(REPORT_COLUMNS)
        for slice_id, rep in rows:
            c = rep.counts
            out.writerow(
                [slice_id, _fmt(rep.dci), _fmt(rep.ti), _fmt(rep.em), _fmt(rep.bpn),
                 _fmt(rep.ssim), c.tp, c.fp, c.fn, c.tn]
            )


def read_report_csv(path) -> list[tuple[str, SimilarityReport]]:
    """Parse a report CSV back into (slice id, report) pairs.

    Accepts an optional leading ``patient`` column; when present the slice
    id is returned as "patient/slice"."""
    rows = []
    with open(Path(path), newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValueError(f"empty report csv: {path}")
        missing = [c for c in REPORT_COLUMNS if c not in reader.fieldnames]
        if missing:
            raise ValueError(f"report csv {path} lacks columns {missing}")
        for rec in reader:
            counts = ConfusionCounts(
                int(rec["tp"]), int(rec["fp"]), int(rec["fn"]), int(rec["tn"])
            )
            rep = SimilarityReport(
                dci=float(rec["dci"]),
                ti=float(rec["ti"]),
                em=float(rec["em"]),
                bpn=float(rec["bpn"]),
                ssim=float(rec["ssim"]),
                counts=counts,
            )
            slice_id = rec["slice"]
            if "patient" in rec and rec["patient"]:
                slice_id = f"{rec['patient']}/{slice_id}"
            rows.append((slice_id, rep))
    return rows
