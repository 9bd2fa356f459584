"""
Jobs behind the command line driver: mean, median, single prox step,
windowed denoising of a grid field and the iteration bound.
"""
import warnings
from multiprocessing import get_context
from typing import Callable, List, Optional, Sequence, Tuple

import torch
from tqdm import tqdm

from .defs import EPS, ContractError
from .objectives import Objective, karcher_objective, median_objective
from .prox import (InnerReport, OuterRecord, ProxConfig, ProxTrace, ipp_solve,
                   iteration_lower_bound, prox_step)
from .field import TensorField
from .spd import SpdPoint, distance, sym_fn

FILTERS = ("mean", "median")


def arithmetic_mean_init(points: Sequence[SpdPoint],
                         weights: Optional[Sequence[float]] = None) -> SpdPoint:
    """Weighted arithmetic mean, symmetrized and with eigenvalues floored"""
    weights = [1.0] * len(points) if weights is None else list(weights)
    acc = torch.zeros_like(points[0].mat)
    for p, w in zip(points, weights):
        acc += w * p.mat
    acc = acc / sum(weights)
    lam_floor = points[0].dim * EPS * 10.0 * torch.linalg.norm(acc).item()
    return SpdPoint(sym_fn(acc, lambda lam: lam.clamp_min(lam_floor)))


def make_objective(filter: str, points: Sequence[SpdPoint],
                   weights: Optional[Sequence[float]] = None) -> Objective:
    if filter == "mean":
        return karcher_objective(points, weights)
    if filter == "median":
        return median_objective(points, weights)
    raise ContractError(f"unknown filter {filter!r}, expected one of {FILTERS}")


def _solve(filter: str, fld: TensorField, config: ProxConfig,
           callback: Optional[Callable[[OuterRecord], None]]) -> Tuple[SpdPoint, ProxTrace]:
    f = make_objective(filter, fld.mats, fld.weights)
    return ipp_solve(f, arithmetic_mean_init(fld.mats, fld.weights), config, callback)


def run_mean(fld: TensorField, config: ProxConfig,
             callback: Optional[Callable[[OuterRecord], None]] = None):
    """Weighted Karcher mean of the field, started from the arithmetic mean"""
    return _solve("mean", fld, config, callback)


def run_median(fld: TensorField, config: ProxConfig,
               callback: Optional[Callable[[OuterRecord], None]] = None):
    """Weighted geodesic median of the field, started from the arithmetic mean"""
    return _solve("median", fld, config, callback)


def run_prox(fld: TensorField, config: ProxConfig, filter: str = "mean",
             anchor: Optional[SpdPoint] = None) -> Tuple[SpdPoint, InnerReport]:
    """One proximal step with beta0 and eps0 from anchor (default: arithmetic mean)"""
    config.validate()
    f = make_objective(filter, fld.mats, fld.weights)
    if anchor is None:
        anchor = arithmetic_mean_init(fld.mats, fld.weights)
    return prox_step(f, anchor, config.beta0, config.eps0, config)


def window_indices(grid: Tuple[int, int], i: int, j: int, window: int) -> List[int]:
    """Flat indices of the window around (i, j), shrunk at the borders"""
    h, w = grid
    r = window // 2
    return [ii * w + jj
            for ii in range(max(0, i - r), min(h, i + r + 1))
            for jj in range(max(0, j - r), min(w, j + r + 1))]


def _denoise_voxel(args) -> Tuple[torch.Tensor, bool]:
    mats, weights, config, filter = args
    points = [SpdPoint(m) for m in mats]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        f = make_objective(filter, points, weights)
        a, trace = ipp_solve(f, arithmetic_mean_init(points, weights), config)
    return a.mat, trace.n_warnings > 0


def _init_worker():
    torch.set_num_threads(1)


def run_denoise(fld: TensorField, window: int, config: ProxConfig, filter: str = "mean",
                jobs: int = 1, progress: bool = True) -> Tuple[TensorField, int]:
    """
    Replace each voxel by the weighted mean (or median) of its window.
    Voxels are independent; with jobs > 1 they are solved in a process pool
    and collected in voxel order.

    :return: (filtered field, number of voxels whose solve raised a warning)
    """
    if fld.grid is None:
        raise ContractError("denoise needs a field with a grid")
    if window < 1 or window % 2 == 0:
        raise ContractError("window must be a positive odd integer")
    if jobs < 1:
        raise ContractError("jobs must be a positive integer")
    if filter not in FILTERS:
        raise ContractError(f"unknown filter {filter!r}, expected one of {FILTERS}")
    config.validate()
    h, w = fld.grid
    tasks = []
    for i in range(h):
        for j in range(w):
            idx = window_indices(fld.grid, i, j, window)
            tasks.append(([fld.mats[t].mat for t in idx], [fld.weights[t] for t in idx],
                          config, filter))

    if jobs == 1:
        results = [_denoise_voxel(t) for t in tqdm(tasks, disable=not progress)]
    else:
        with get_context("spawn").Pool(jobs, initializer=_init_worker) as pool:
            results = list(tqdm(pool.imap(_denoise_voxel, tasks), total=len(tasks),
                                disable=not progress))

    out = TensorField(fld.dim, [SpdPoint(m) for m, _ in results], list(fld.weights), fld.grid)
    n_warn = sum(flag for _, flag in results)
    if n_warn:
        warnings.warn(f"{n_warn} of {len(results)} voxels finished with solver warnings")
    return out, n_warn


def run_bound(eps0: float, beta0: float, mu: float, omega: float, eps: float) -> int:
    return iteration_lower_bound(eps0, beta0, mu, omega, eps)


def mean_distance(a: TensorField, b: TensorField) -> float:
    """Average Riemannian distance between two fields voxel by voxel"""
    if a.count != b.count:
        raise ContractError("fields have different sizes")
    return sum(distance(x, y) for x, y in zip(a.mats, b.mats)) / a.count
