import math
import time
from functools import lru_cache

import torch

from .defs import DTYPE, SYM_REPAIR_TOL, ContractError


def symmetrize(x: torch.Tensor) -> torch.Tensor:
    return 0.5 * (x + x.transpose(-1, -2))


def skew_part(x: torch.Tensor) -> torch.Tensor:
    return 0.5 * (x - x.transpose(-1, -2))


def as_sym(x, dim: int = None) -> torch.Tensor:
    """
    Build a symmetric matrix (the SymMatrix type is a float64 torch.Tensor).
    Asymmetry below SYM_REPAIR_TOL (relative Frobenius) is repaired silently,
    anything beyond it is rejected.

    :param x: array-like (n, n)
    :param dim: int, optional expected n
    :return: torch.Tensor (n, n) float64, exactly symmetric
    """
    x = torch.as_tensor(x, dtype=DTYPE)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise ContractError(f"expected a square matrix, got shape {tuple(x.shape)}")
    if dim is not None and x.shape[0] != dim:
        raise ContractError(f"expected dim {dim}, got {x.shape[0]}")
    scale = torch.linalg.norm(x).item()
    asym = torch.linalg.norm(x - x.T).item()
    if asym > SYM_REPAIR_TOL * max(scale, 1e-300):
        raise ContractError(f"matrix is not symmetric (relative asymmetry {asym / scale:.3e})")
    return symmetrize(x)


def cond_report(x: torch.Tensor) -> str:
    """Short condition summary used in numeric error messages"""
    if not torch.isfinite(x).all():
        return "matrix has non-finite entries"
    try:
        s = torch.linalg.svdvals(x)
    except RuntimeError:
        return f"matrix norm {torch.linalg.norm(x).item():.3e}, svd failed"
    smax, smin = s.max().item(), s.min().item()
    cond = math.inf if smin == 0.0 else smax / smin
    return f"sigma_max={smax:.3e} sigma_min={smin:.3e} cond={cond:.3e}"


@lru_cache(maxsize=None)
def _sym_basis(n: int) -> torch.Tensor:
    mats = []
    for i in range(n):
        e = torch.zeros(n, n, dtype=DTYPE)
        e[i, i] = 1.0
        mats.append(e)
    r = 1.0 / math.sqrt(2.0)
    for i in range(n):
        for j in range(i + 1, n):
            e = torch.zeros(n, n, dtype=DTYPE)
            e[i, j] = e[j, i] = r
            mats.append(e)
    return torch.stack(mats)


def sym_basis(n: int) -> torch.Tensor:
    """
    Frobenius-orthonormal basis of the symmetric matrices:
    unit diagonals first, then (e_i e_j^T + e_j e_i^T) / sqrt(2).

    :return: torch.Tensor (n(n+1)/2, n, n)
    """
    return _sym_basis(n)


@lru_cache(maxsize=None)
def _skew_basis(n: int) -> torch.Tensor:
    r = 1.0 / math.sqrt(2.0)
    mats = []
    for i in range(n):
        for j in range(i + 1, n):
            e = torch.zeros(n, n, dtype=DTYPE)
            e[i, j] = r
            e[j, i] = -r
            mats.append(e)
    if not mats:
        return torch.zeros(0, n, n, dtype=DTYPE)
    return torch.stack(mats)


def skew_basis(n: int) -> torch.Tensor:
    """
    Frobenius-orthonormal basis of the skew-symmetric matrices,
    (e_i e_j^T - e_j e_i^T) / sqrt(2) for i < j.

    :return: torch.Tensor (n(n-1)/2, n, n)
    """
    return _skew_basis(n)


def polar_factor(q: torch.Tensor) -> torch.Tensor:
    """Nearest orthogonal matrix (orthogonal polar factor)"""
    u, _, vh = torch.linalg.svd(q)
    return u @ vh


def ortho_drift(q: torch.Tensor) -> float:
    eye = torch.eye(q.shape[-1], dtype=q.dtype)
    return torch.linalg.norm(q.T @ q - eye).item()


class Timing:
    """
    Timing environment
    usage:
    with Timing("message"):
        your commands here
    will print wall time in ms
    """

    def __init__(self, name):
        self.name = name

    def __enter__(self):
        self.start = time.perf_counter()

    def __exit__(self, type, value, traceback):
        self.end = time.perf_counter()
        print(self.name, "elapsed", (self.end - self.start) * 1000.0, "ms")
