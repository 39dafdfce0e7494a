"""Evaluation toolkit for real and AI-generated fruit imagery.

Submodules:
    image_core   image containers, PNG/JPEG I/O, luma conversion, masking
    metrics      full-reference quality metrics (MSE, PSNR, SSIM)
    detect_eval  bounding-box IoU scoring over YOLO-format annotations
    net_quality  skin/net binarization and island statistics for melon nets
    stats        one-way ANOVA, Tukey HSD, compact letter display
    synthgen     synthetic net-pattern fixtures with exact ground truth
    report       run manifests and CSV/JSON result tables
    cli          command-line entry point
"""

__version__ = "0.1.0"

from .detect_eval import Annotation, BoundingBox, EvalSummary, iou, match_annotations  # noqa: F401
from .image_core import BinaryMask, Image, load_image, load_mask, save_image, save_mask  # noqa: F401
from .metrics import QualityScore, SsimParams, mse, psnr, score_pair, ssim  # noqa: F401
from .net_quality import BinarizeParams, IslandReport, assess_net_quality, label_islands  # noqa: F401
from .stats import GroupSample, TukeyOutcome, one_way_anova, tukey_hsd  # noqa: F401
from .synthgen import SynthSpec, degrade, generate  # noqa: F401
