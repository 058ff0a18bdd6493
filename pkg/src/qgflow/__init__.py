"""Pseudo-spectral suite for the 2D dissipative quasi-geostrophic equation."""
from ._kernels import BACKEND
from .dynamics import PicardConfig, SolverConfig, TrajectoryRecord, monitors, picard_solve, simulate, step
from .gevrey import GevreyConfig, NormReport, WeightedNormSpec, gevrey_transform, k_g_e1_norms
from .littlewood_paley import BesovIndex, LPFrame, besov_norm, build_frame
from .spectral import Grid2D, PhysicalParams, SpectralField

__all__ = [
    "BACKEND",
    "BesovIndex",
    "GevreyConfig",
    "Grid2D",
    "LPFrame",
    "NormReport",
    "PhysicalParams",
    "PicardConfig",
    "SolverConfig",
    "SpectralField",
    "TrajectoryRecord",
    "WeightedNormSpec",
    "besov_norm",
    "build_frame",
    "gevrey_transform",
    "k_g_e1_norms",
    "monitors",
    "picard_solve",
    "simulate",
    "step",
]

__version__ = "0.1.0"
