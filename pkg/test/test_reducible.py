import math

import pytest
import torch
from torch.testing import assert_close

from spdprox.defs import ContractError, DTYPE, SpdValidationError
from spdprox.reducible import (DiagPD, OrthoFrame, SkewTangent, decompose,
                               diag_distance, diag_geodesic, diag_log,
                               normalizer_from, orth_geodesic, orth_norm2, orth_riem_grad,
                               phi, reconstruct)
from spdprox.spd import SpdPoint, TangentVec, distance, geodesic, identity, random_spd
from spdprox.utils import ortho_drift
from util import gen, rand_frame, rand_points


def test_phi_decompose_round_trip():
    g = gen(0)
    for n in (2, 3, 5):
        for _ in range(20):
            a = random_spd(n, g)
            b, c = decompose(a)
            assert_close(phi(b, c).mat, a.mat, rtol=1e-10, atol=1e-10)


def test_decompose_tie_break():
    g = gen(1)
    a = random_spd(4, g)
    b, c = decompose(a)
    assert (b.values[:-1] >= b.values[1:]).all()
    idx = c.mat.abs().argmax(dim=0)
    assert (c.mat[idx, torch.arange(4)] > 0).all()


def test_reconstruct_at_start_is_anchor():
    g = gen(2)
    a = random_spd(3, g)
    nrm = normalizer_from(a)
    u = reconstruct(nrm, DiagPD.ones(3), OrthoFrame.eye(3))
    assert_close(u.mat, a.mat, rtol=1e-10, atol=1e-10)
    assert_close(nrm.apply(a), torch.eye(3, dtype=DTYPE), rtol=1e-10, atol=1e-10)


def test_normalizer_is_isometry():
    g = gen(3)
    a, x, y = rand_points(3, 3, g)
    nrm = normalizer_from(a)
    tx, ty = nrm.apply_point(x), nrm.apply_point(y)
    assert distance(tx, ty) == pytest.approx(distance(x, y), rel=1e-8)
    assert_close(nrm.apply_inv_point(tx).mat, x.mat, rtol=1e-9, atol=1e-9)


def test_phi_distance_to_identity():
    g = gen(4)
    b = DiagPD(torch.tensor([math.e, 1.0 / math.e], dtype=DTYPE))
    c = rand_frame(2, g)
    assert distance(phi(b, c), identity(2)) == pytest.approx(math.sqrt(2.0), rel=1e-10)


def test_diag_rejects_nonpositive():
    with pytest.raises(SpdValidationError):
        DiagPD(torch.tensor([1.0, 0.0], dtype=DTYPE))


def test_diag_geodesic():
    b = DiagPD(torch.tensor([math.e, 1.0 / math.e], dtype=DTYPE))
    v = torch.tensor([0.3, -0.2], dtype=DTYPE)
    assert_close(diag_geodesic(b, v, 0.0).values, b.values)
    ones = DiagPD.ones(2)
    assert diag_distance(b, ones) == pytest.approx(math.sqrt(2.0), rel=1e-12)
    assert_close(diag_geodesic(b, diag_log(b, ones), 1.0).values, ones.values)


def test_ortho_repair_and_reject():
    g = gen(5)
    c = rand_frame(3, g)
    drifted = OrthoFrame(c.mat + 1e-9 * torch.randn(3, 3, generator=g, dtype=DTYPE))
    assert ortho_drift(drifted.mat) < 1e-12
    with pytest.raises(ContractError):
        OrthoFrame(2.0 * c.mat)


def test_skew_tangent_rejects_symmetric():
    c = OrthoFrame.eye(2)
    with pytest.raises(ContractError):
        SkewTangent(c, torch.eye(2, dtype=DTYPE))


def test_orth_geodesic_stays_in_component():
    g = gen(6)
    for sign in (1.0, -1.0):
        c = rand_frame(4, g, det_sign=sign)
        s = orth_riem_grad(c, torch.randn(4, 4, generator=g, dtype=DTYPE))
        for t in (0.1, 1.0, 5.0):
            c2 = orth_geodesic(c, s, t)
            assert ortho_drift(c2.mat) < 1e-10
            assert math.copysign(1.0, c2.det) == sign


def test_orth_geodesic_base_check():
    g = gen(7)
    c1, c2 = rand_frame(3, g), rand_frame(3, g)
    s = orth_riem_grad(c1, torch.randn(3, 3, generator=g, dtype=DTYPE))
    with pytest.raises(ContractError):
        orth_geodesic(c2, s, 1.0)


def _rand_diag(n, g):
    return DiagPD(torch.exp(torch.randn(n, generator=g, dtype=DTYPE)))


def test_phi_spectrum_is_b():
    g = gen(8)
    for n in (2, 3, 5):
        for _ in range(50):
            b, c = _rand_diag(n, g), rand_frame(n, g, det_sign=-1.0 if n == 3 else 1.0)
            assert_close(torch.linalg.eigvalsh(phi(b, c).mat), torch.sort(b.values).values,
                         rtol=1e-9, atol=0.0)


def test_phi_frame_composition():
    g = gen(9)
    for n in (2, 3, 5):
        for _ in range(50):
            b, c1, c2 = _rand_diag(n, g), rand_frame(n, g), rand_frame(n, g)
            lhs = phi(b, OrthoFrame(c1.mat @ c2.mat)).mat
            rhs = c1.mat @ phi(b, c2).mat @ c1.mat.T
            assert_close(lhs, rhs, rtol=1e-12, atol=1e-12)


def test_diag_space_is_embedded_spd_geometry():
    g = gen(10)
    for n in (2, 3, 5):
        for _ in range(20):
            b1, b2 = _rand_diag(n, g), _rand_diag(n, g)
            x1, x2 = SpdPoint(torch.diag(b1.values)), SpdPoint(torch.diag(b2.values))
            assert diag_distance(b1, b2) == pytest.approx(distance(x1, x2), rel=1e-10)
            v = 0.5 * b1.values * torch.randn(n, generator=g, dtype=DTYPE)
            for t in (-0.5, 0.3, 1.0):
                assert_close(torch.diag(diag_geodesic(b1, v, t).values),
                             geodesic(x1, TangentVec(x1, torch.diag(v)), t).mat,
                             rtol=1e-10, atol=1e-12)


def test_orth_gradient_is_ascent_direction():
    g = gen(11)
    for n in (2, 3, 4):
        s_mat = torch.randn(n, n, generator=g, dtype=DTYPE)
        s_mat = s_mat + s_mat.T
        lam = torch.arange(1, n + 1, dtype=DTYPE)

        def h(c):
            return torch.sum(lam * torch.diagonal(c.mat.T @ s_mat @ c.mat)).item()

        c = rand_frame(n, g)
        grad = orth_riem_grad(c, 2.0 * s_mat @ c.mat * lam)
        step = 1e-6
        fd = (h(orth_geodesic(c, grad, step)) - h(orth_geodesic(c, grad, -step))) / (2.0 * step)
        assert fd == pytest.approx(orth_norm2(c, grad), rel=1e-6)
        assert h(orth_geodesic(c, grad, -1e-3)) < h(c)
