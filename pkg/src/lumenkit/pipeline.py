"""End-to-end patent-lumen segmentation for one slice or a whole series.

Stage order for one slice (basal ROI in, binary extraction out):

1. rescale/reconstruct the basal ROI (sampling operator, factor R)
2. apply the operator-drawn elliptical selection, scaled by R
3. low-frequency wavelet residual
4. plaque map from the reconstructed basal (hyperdense pixels in the
   selection, grown by the dilation radius)
5. zero plaque pixels in the residual
6. min-max normalization, then histogram equalization
7. local-mean adaptive threshold, then square dilation
8. restrict to the selection and exclude the plaque map -> final mask
9. superpose the final mask on the reconstructed basal (overlay)

The contrast-series target goes through the same rescaling, selection
masking, and plaque removal, then a fixed threshold at eta. The
no-reconstruction variant substitutes pixel replication for the sampling
operator everywhere, including the target path, so both paths of each
variant stay commensurable.

Series layout on disk: ``<patient>/basal/<id>.png``, optional
``<patient>/cm/<id>.png``, and ``<patient>/rois.csv`` with columns
``id,cx,cy,a,b,angle`` (pixel units at base resolution, radians).
"""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import metrics
from .imgproc import (
    Ellipse,
    PipelineConfig,
    adaptive_threshold,
    apply_mask,
    binarize,
    colored_map,
    dilate,
    equalize,
    normalize_minmax,
    plaque_mask,
    replicate_upscale,
    subtract_plaques,
    superpose,
    wavelet_residual,
)
from .metrics import SimilarityReport, slice_report
from .model import BinaryMask, GrayImage, ImageIOError, RgbImage, load_image, save_image
from .sk import SkParams, sk_reconstruct


class SeriesLayoutError(Exception):
    """Raised when a series directory does not match the expected layout."""


@dataclass(frozen=True)
class SliceInput:
    basal: GrayImage
    vessel_ellipse: Ellipse
    cm: GrayImage | None = None

    def __post_init__(self):
        if self.cm is not None and (
            self.cm.width != self.basal.width or self.cm.height != self.basal.height
        ):
            raise ValueError("basal and contrast images must share dimensions")


@dataclass(frozen=True)
class SliceOutput:
    b_sk: GrayImage
    c_f: BinaryMask
    c_p: BinaryMask
    overlay: GrayImage
    cm_b: BinaryMask | None = None
    map: RgbImage | None = None
    report: SimilarityReport | None = None
    intermediates: dict = field(default_factory=dict)


def _rescale(img: GrayImage, sk_params: SkParams, use_sk: bool) -> GrayImage:
    if use_sk:
        return sk_reconstruct(img, sk_params)
    return replicate_upscale(img, sk_params.scale)


def prepare_target(
    cm: GrayImage,
    c_p: BinaryMask,
    cfg: PipelineConfig,
    sk_params: SkParams,
    ellipse: Ellipse | None = None,
    use_sk: bool = True,
) -> BinaryMask:
    """Binarized plaque-free target from the contrast image.

    The contrast ROI is rescaled with the same operator parameters as the
    basal path, confined to the scaled selection when one is given, has
    the plaque pixels zeroed, and is thresholded at eta.
    """
    rescaled = _rescale(cm, sk_params, use_sk)
    if c_p.width != rescaled.width or c_p.height != rescaled.height:
        raise ValueError("plaque mask dimensions must match the rescaled contrast image")
    if ellipse is not None:
        sel = ellipse.scaled(sk_params.scale).mask(rescaled.width, rescaled.height)
        rescaled = apply_mask(rescaled, sel)
    cleaned = subtract_plaques(rescaled, c_p)
    return binarize(cleaned, cfg.eta, cfg.binarize_strict)


def _segment(
    inp: SliceInput,
    cfg: PipelineConfig,
    sk_params: SkParams,
    use_sk: bool,
    keep_intermediates: bool,
) -> SliceOutput:
    r = sk_params.scale
    b_sk = _rescale(inp.basal, sk_params, use_sk)
    vessel = inp.vessel_ellipse.scaled(r).mask(b_sk.width, b_sk.height)
    c = apply_mask(b_sk, vessel)
    c_r = wavelet_residual(c, cfg.wavelet_levels, cfg.wavelet_basis)
    c_p = plaque_mask(b_sk, vessel, cfg.plaque_threshold, cfg.dilation_radius)
    cleaned = subtract_plaques(c_r, c_p)
    normalized = normalize_minmax(cleaned)
    equalized = equalize(normalized)
    thresholded = adaptive_threshold(equalized, cfg.adapt_window, cfg.adapt_offset)
    dilated = dilate(thresholded, cfg.dilation_radius)
    # the plaque map is excluded outright: plaques are never patent lumen
    c_f = BinaryMask(dilated.bits & vessel.bits & ~c_p.bits)
    overlay = superpose(c_f, b_sk)

    cm_b = rep = cmap = None
    if inp.cm is not None:
        cm_b = prepare_target(inp.cm, c_p, cfg, sk_params, inp.vessel_ellipse, use_sk)
        rep = slice_report(c_f, cm_b)
        cmap = colored_map(c_f, cm_b)

    inter: dict = {}
    if keep_intermediates:
        inter = {
            "c": c,
            "c_r": c_r,
            "normalized": normalized,
            "equalized": equalized,
            "thresholded": thresholded,
        }
    return SliceOutput(
        b_sk=b_sk, c_f=c_f, c_p=c_p, overlay=overlay,
        cm_b=cm_b, map=cmap, report=rep, intermediates=inter,
    )


def segment_slice(
    inp: SliceInput,
    cfg: PipelineConfig,
    sk_params: SkParams,
    keep_intermediates: bool = False,
) -> SliceOutput:
    """Run the full segmentation on one slice (with operator reconstruction)."""
    return _segment(inp, cfg, sk_params, True, keep_intermediates)


def segment_slice_nosk(
    inp: SliceInput,
    cfg: PipelineConfig,
    sk_params: SkParams,
    keep_intermediates: bool = False,
) -> SliceOutput:
    """Ablation variant: pixel-replication upscaling instead of the
    sampling operator, same scale factor and downstream stages."""
    return _segment(inp, cfg, sk_params, False, keep_intermediates)


@dataclass(frozen=True)
class SeriesEntry:
    """One processed slice of a series run; ``error`` is set instead of
    ``output`` when that slice failed."""

    patient: str
    slice_id: str
    output: SliceOutput | None = None
    error: str | None = None


def read_rois(path) -> dict[str, Ellipse]:
    """Parse a per-slice selection table (columns id,cx,cy,a,b,angle)."""
    rois: dict[str, Ellipse] = {}
    try:
        with open(Path(path), newline="") as fh:
            reader = csv.DictReader(fh)
            required = {"id", "cx", "cy", "a", "b", "angle"}
            if reader.fieldnames is None or not required.issubset(reader.fieldnames):
                raise SeriesLayoutError(f"{path}: need columns id,cx,cy,a,b,angle")
            for rec in reader:
                rois[rec["id"]] = Ellipse(
                    float(rec["cx"]), float(rec["cy"]),
                    float(rec["a"]), float(rec["b"]), float(rec["angle"]),
                )
    except OSError as exc:
        raise SeriesLayoutError(f"cannot read roi table {path}: {exc}") from exc
    except ValueError as exc:
        raise SeriesLayoutError(f"malformed roi table {path}: {exc}") from exc
    return rois


def discover_patients(series_dir) -> list[tuple[str, Path]]:
    """Find patient directories (a basal/ folder plus rois.csv).

    The series directory may itself be a single patient directory, or
    contain one subdirectory per patient."""
    root = Path(series_dir)
    if not root.is_dir():
        raise SeriesLayoutError(f"series directory not found: {root}")
    if (root / "rois.csv").is_file() and (root / "basal").is_dir():
        return [(root.name, root)]
    patients = [
        (p.name, p)
        for p in sorted(root.iterdir())
        if p.is_dir() and (p / "rois.csv").is_file() and (p / "basal").is_dir()
    ]
    if not patients:
        raise SeriesLayoutError(
            f"{root}: no patient directories (need <patient>/basal/ and <patient>/rois.csv)"
        )
    return patients


def _list_slices(patient_dir: Path, rois: dict[str, Ellipse]) -> list[str]:
    ids = sorted(p.stem for p in (patient_dir / "basal").glob("*.png"))
    return [i for i in ids if i in rois]


def _process_slice(args) -> SeriesEntry:
    patient, patient_dir, slice_id, roi, cfg, sk_params, use_sk, keep = args
    try:
        basal = load_image(Path(patient_dir) / "basal" / f"{slice_id}.png")
        cm_path = Path(patient_dir) / "cm" / f"{slice_id}.png"
        cm = load_image(cm_path) if cm_path.is_file() else None
        inp = SliceInput(basal=basal, vessel_ellipse=roi, cm=cm)
        out = _segment(inp, cfg, sk_params, use_sk, keep)
        return SeriesEntry(patient=patient, slice_id=slice_id, output=out)
    except (ImageIOError, ValueError, ArithmeticError) as exc:
        return SeriesEntry(patient=patient, slice_id=slice_id, error=f"{type(exc).__name__}: {exc}")


def run_series(
    series_dir,
    cfg: PipelineConfig,
    sk_params: SkParams,
    use_sk: bool = True,
    keep_intermediates: bool = False,
    parallelism: int = 1,
) -> list[SeriesEntry]:
    """Process every slice of a series; failures are isolated per slice.

    Results are ordered by (patient, slice id) and independent of the
    parallelism degree."""
    jobs = []
    for patient, pdir in discover_patients(series_dir):
        rois = read_rois(pdir / "rois.csv")
        for slice_id in _list_slices(pdir, rois):
            jobs.append(
                (patient, str(pdir), slice_id, rois[slice_id], cfg, sk_params, use_sk, keep_intermediates)
            )
    jobs.sort(key=lambda j: (j[0], j[2]))
    if parallelism > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            entries = list(pool.map(_process_slice, jobs))
    else:
        entries = [_process_slice(j) for j in jobs]
    return entries


def write_series_outputs(
    out_dir, entries: list[SeriesEntry], keep_intermediates: bool = False
) -> tuple[int, int]:
    """Write per-slice stage images and per-patient report CSVs.

    Returns (written slice count, failed slice count). Alongside the
    per-patient ``report.csv`` (spec'd columns), a combined
    ``report.csv`` with a leading patient column is written at the root.
    """
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    per_patient: dict[str, list[tuple[str, SimilarityReport]]] = {}
    failures = 0
    for e in entries:
        if e.error is not None:
            failures += 1
            continue
        out = e.output
        slice_dir = root / e.patient / e.slice_id
        slice_dir.mkdir(parents=True, exist_ok=True)
        save_image(out.b_sk, slice_dir / "b_sk.png")
        save_image(out.c_f, slice_dir / "c_f.png")
        save_image(out.c_p, slice_dir / "c_p.png")
        save_image(out.overlay, slice_dir / "overlay.png")
        if out.cm_b is not None:
            save_image(out.cm_b, slice_dir / "cm_b.png")
        if out.map is not None:
            save_image(out.map, slice_dir / "map.png")
        if keep_intermediates:
            for name, stage in out.intermediates.items():
                save_image(stage, slice_dir / f"{name}.png")
        if out.report is not None:
            per_patient.setdefault(e.patient, []).append((e.slice_id, out.report))
    for patient, rows in sorted(per_patient.items()):
        metrics.write_report_csv(root / patient / "report.csv", sorted(rows))
    _write_combined_report(root / "report.csv", per_patient)
    with open(root / "errors.csv", "w", newline="") as fh:
        out_csv = csv.writer(fh, lineterminator="\n")
        out_csv.writerow(["patient", "slice", "error"])
        for e in entries:
            if e.error is not None:
                out_csv.writerow([e.patient, e.slice_id, e.error])
    return len(entries) - failures, failures


def _write_combined_report(path, per_patient: dict[str, list[tuple[str, SimilarityReport]]]):
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(("patient",) + metrics.REPORT_COLUMNS)
        for patient, rows in sorted(per_patient.items()):
            for slice_id, rep in sorted(rows):
                c = rep.counts
                out.writerow(
                    [patient, slice_id, repr(rep.dci), repr(rep.ti), repr(rep.em),
                     repr(rep.bpn), repr(rep.ssim), c.tp, c.fp, c.fn, c.tn]
                )
