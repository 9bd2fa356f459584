import math

import torch

from spdprox.defs import DTYPE
from spdprox.reducible import OrthoFrame
from spdprox.spd import SpdPoint, TangentVec, random_spd, random_sym


def gen(seed=0):
    return torch.Generator().manual_seed(seed)


def rand_points(n, m, g, spread=0.5):
    return [random_spd(n, g, spread) for _ in range(m)]


def rand_tangent(x, g, scale=1.0):
    return TangentVec(x, random_sym(x.dim, g, scale))


def rand_frame(n, g, det_sign=1.0):
    q, _ = torch.linalg.qr(torch.randn(n, n, generator=g, dtype=DTYPE))
    if torch.linalg.det(q).item() * det_sign < 0:
        q[:, 0] = -q[:, 0]
    return OrthoFrame(q)


def diag_point(*vals):
    return SpdPoint(torch.diag(torch.tensor(vals, dtype=DTYPE)))


OMEGA = 0.5671432904097838
E = math.e
