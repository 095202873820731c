"""Sampling-kernel image reconstruction and patent-lumen segmentation toolkit."""

from .imgproc import Ellipse, PipelineConfig
from .kernels import KernelAxiomReport, KernelSpec, verify_kernel
from .metrics import ConfusionCounts, SimilarityReport, confusion, loss_ssim, similarity, ssim
from .model import BinaryMask, GrayImage, RgbImage, load_image, save_image
from .phantom import PhantomParams, generate, generate_suite
from .pipeline import SliceInput, SliceOutput, prepare_target, run_series, segment_slice, segment_slice_nosk
from .sk import SkParams, integral_mean, sk_reconstruct
from .stats import StatsSummary, boxplot_rows, compare_methods, per_patient_table, summarize

__version__ = "0.1.0"

__all__ = [
    "BinaryMask",
    "ConfusionCounts",
    "Ellipse",
    "GrayImage",
    "KernelAxiomReport",
    "KernelSpec",
    "PhantomParams",
    "PipelineConfig",
    "RgbImage",
    "SimilarityReport",
    "SkParams",
    "SliceInput",
    "SliceOutput",
    "StatsSummary",
    "boxplot_rows",
    "compare_methods",
    "confusion",
    "generate",
    "generate_suite",
    "integral_mean",
    "load_image",
    "loss_ssim",
    "per_patient_table",
    "prepare_target",
    "run_series",
    "save_image",
    "segment_slice",
    "segment_slice_nosk",
    "similarity",
    "sk_reconstruct",
    "ssim",
    "summarize",
    "verify_kernel",
]
