"""Multiphase area-preserving curvature flow by vector-valued thresholding."""
from .kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"
