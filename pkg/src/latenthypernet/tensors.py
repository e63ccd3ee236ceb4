"""Dense float64 tensor substrate shared by every other module.

Tensors are numpy arrays of float64 in row-major (C) order. They are treated
as immutable once constructed: operations here return fresh arrays and never
write into their inputs. numpy supplies the storage and BLAS-backed products;
this module pins down the contracts the rest of the package relies on.
"""
from __future__ import annotations

import numpy as np

from .errors import ShapeError

Tensor = np.ndarray


def tensor(values) -> Tensor:
    """Build a float64, row-major tensor from nested sequences or an array."""
    return np.array(values, dtype=np.float64, order="C")


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product of two rank-2 tensors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul needs rank-2 operands, got ranks {a.ndim} and {b.ndim}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul inner dimensions disagree: {a.shape} x {b.shape}")
    return a @ b


def transpose(a: Tensor) -> Tensor:
    """Transpose of a rank-2 tensor, returned in row-major order."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ShapeError(f"transpose needs a rank-2 tensor, got rank {a.ndim}")
    return np.ascontiguousarray(a.T)


def l2_norm(v: Tensor) -> float:
    """Euclidean norm of a rank-1 tensor."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise ShapeError(f"l2_norm needs a rank-1 tensor, got rank {v.ndim}")
    return float(np.linalg.norm(v))
