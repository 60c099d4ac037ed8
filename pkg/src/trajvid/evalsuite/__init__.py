from .metrics import psnr, ssim, trajectory_error, PSNR_CAP_DB
from .tracking import extract_generated_trajectory
from .ablation import EvalReport, evaluate_mode, format_table, run_ablation, trend_verdict, write_reports

__all__ = [
    "psnr", "ssim", "trajectory_error", "PSNR_CAP_DB",
    "extract_generated_trajectory",
    "EvalReport", "evaluate_mode", "format_table", "run_ablation", "trend_verdict", "write_reports",
]
