import math

import pytest
import torch
from torch.testing import assert_close

from spdprox.defs import ContractError, SpdValidationError
from spdprox.spd import (SpdPoint, TangentVec, characteristic_form, congruence_point,
                         distance, euclid_to_riem_grad, exp_map, geodesic,
                         geodesic_segment, identity, log_map, metric_inner,
                         push_tangent, random_spd, random_sym, riem_norm, sym_fn)
from util import diag_point, gen, rand_points, rand_tangent

N_TRIALS = 1000


def _trials(seed=0):
    g = gen(seed)
    for i in range(N_TRIALS):
        n = (2, 3, 5)[i % 3]
        yield g, n


def test_construction_rejects_indefinite():
    with pytest.raises(SpdValidationError) as info:
        diag_point(1.0, -0.1)
    assert info.value.min_eig == pytest.approx(-0.1)


def test_construction_rejects_asymmetric():
    with pytest.raises(ContractError):
        SpdPoint(torch.tensor([[2.0, 1.0], [0.0, 2.0]], dtype=torch.float64))


def test_construction_repairs_tiny_asymmetry():
    m = torch.tensor([[2.0, 1.0], [1.0 + 1e-12, 3.0]], dtype=torch.float64)
    x = SpdPoint(m)
    assert torch.equal(x.mat, x.mat.T)


def test_distance_basics():
    x = diag_point(math.e, math.e ** 2)
    assert distance(identity(2), x) == pytest.approx(math.sqrt(5.0), rel=1e-12)
    assert distance(x, x) == 0.0


def test_distance_symmetry_and_triangle():
    for g, n in _trials():
        x, y, z = rand_points(n, 3, g)
        assert distance(x, y) == pytest.approx(distance(y, x), rel=1e-9, abs=1e-12)
        assert distance(x, z) <= distance(x, y) + distance(y, z) + 1e-10


def test_geodesic_segment_endpoints_and_speed():
    for g, n in _trials(1):
        x, y = rand_points(n, 2, g)
        assert_close(geodesic_segment(x, y, 0.0).mat, x.mat, rtol=1e-10, atol=1e-10)
        assert_close(geodesic_segment(x, y, 1.0).mat, y.mat, rtol=1e-9, atol=1e-9)
        d = distance(x, y)
        t = 0.3
        assert distance(x, geodesic_segment(x, y, t)) == pytest.approx(t * d, rel=1e-8, abs=1e-10)


def test_geodesic_initial_point():
    g = gen(2)
    x = random_spd(3, g)
    s = rand_tangent(x, g)
    assert_close(geodesic(x, s, 0.0).mat, x.mat, rtol=1e-12, atol=1e-12)


def test_exp_log_round_trip():
    for g, n in _trials(3):
        x, y = rand_points(n, 2, g)
        v = log_map(x, y)
        assert_close(exp_map(x, v).mat, y.mat, rtol=1e-9, atol=1e-9)
        assert riem_norm(x, v) == pytest.approx(distance(x, y), rel=1e-9, abs=1e-12)


def test_congruence_isometry():
    for g, n in _trials(4):
        p, x, y = rand_points(n, 3, g)
        px, py = congruence_point(p, x), congruence_point(p, y)
        assert distance(px, py) == pytest.approx(distance(x, y), rel=1e-8, abs=1e-10)


def test_push_tangent_preserves_norm():
    g = gen(5)
    for _ in range(20):
        p, x = rand_points(3, 2, g)
        u = rand_tangent(x, g)
        pu = push_tangent(p, u)
        assert riem_norm(pu.base, pu) == pytest.approx(riem_norm(x, u), rel=1e-8)


def test_law_of_cosines_inequality():
    for g, n in _trials(6):
        x, y, z = rand_points(n, 3, g)
        cross = metric_inner(x, log_map(x, y), log_map(x, z))
        lhs = distance(y, z) ** 2
        rhs = distance(x, y) ** 2 + distance(x, z) ** 2 - 2.0 * cross
        assert lhs >= rhs - 1e-9


def test_tangent_base_mismatch():
    g = gen(7)
    x, y = rand_points(2, 2, g)
    with pytest.raises(ContractError):
        rand_tangent(x, g) + rand_tangent(y, g)
    with pytest.raises(ContractError):
        metric_inner(x, rand_tangent(y, g), rand_tangent(y, g))


def test_riemannian_gradient_of_trace():
    g = gen(8)
    x = random_spd(3, g)
    grad = euclid_to_riem_grad(x, torch.eye(3, dtype=torch.float64))
    assert_close(grad.vec, x.mat @ x.mat)
    assert metric_inner(x, grad, grad) == pytest.approx(torch.trace(x.mat @ x.mat).item(), rel=1e-10)


def test_characteristic_form_positive():
    g = gen(9)
    for _ in range(50):
        x, y = rand_points(3, 2, g, spread=1.0)
        assert characteristic_form(x, y) > 0.0


def test_widely_separated_scales():
    x, y = identity(2), SpdPoint(1e-17 * torch.eye(2, dtype=torch.float64))
    d = distance(x, y)
    assert d == pytest.approx(math.sqrt(2.0) * 17.0 * math.log(10.0), rel=1e-12)
    assert riem_norm(x, log_map(x, y)) == pytest.approx(d, rel=1e-9)
    assert_close(torch.diagonal(geodesic_segment(x, y, 1.0).mat),
                 torch.full((2,), 1e-17, dtype=torch.float64), rtol=1e-8, atol=0.0)

    g = gen(10)
    for scale in (1e-17, 1e-12, 1e15):
        x = random_spd(3, g)
        y = SpdPoint(scale * random_spd(3, g).mat)
        d = distance(x, y)
        assert d > 25.0
        assert riem_norm(x, log_map(x, y)) == pytest.approx(d, rel=1e-9)
        end = geodesic_segment(x, y, 1.0)
        err = torch.linalg.norm(end.mat - y.mat) / torch.linalg.norm(y.mat)
        assert err.item() <= 1e-9
        assert distance(x, geodesic_segment(x, y, 0.5)) == pytest.approx(0.5 * d, rel=1e-8)


def test_geodesic_velocity_at_zero():
    g = gen(11)
    h = 1e-6
    for n in (2, 3, 5):
        for _ in range(10):
            x = random_spd(n, g)
            s = rand_tangent(x, g, 0.5)
            vel = (geodesic(x, s, h).mat - geodesic(x, s, -h).mat) / (2.0 * h)
            assert_close(vel, s.vec, rtol=0.0, atol=1e-6)


def test_sym_fn_round_trip():
    for g, n in _trials(12):
        x = random_spd(n, g)
        assert_close(sym_fn(sym_fn(x.mat, torch.log), torch.exp), x.mat, rtol=1e-10, atol=1e-10)
        root = sym_fn(x.mat, torch.sqrt)
        assert_close(root @ root, x.mat, rtol=1e-10, atol=1e-10)


def test_characteristic_form_symmetric():
    for g, n in _trials(13):
        x, y = rand_points(n, 2, g)
        assert characteristic_form(x, y) == pytest.approx(characteristic_form(y, x), rel=1e-12)


def test_riemannian_gradient_duality():
    g = gen(14)
    for n in (2, 3, 5):
        x = random_spd(n, g)
        s = random_sym(n, g)
        grad = euclid_to_riem_grad(x, s)
        for i in range(n):
            for j in range(i, n):
                e = torch.zeros(n, n, dtype=torch.float64)
                e[i, j] = e[j, i] = 1.0
                # <x s x, e>_x = Tr(s e)
                assert metric_inner(x, grad, TangentVec(x, e)) == pytest.approx(
                    torch.sum(s * e).item(), rel=1e-9, abs=1e-10)


def test_push_tangent_preserves_inner_product():
    g = gen(15)
    for n in (2, 3, 5):
        for _ in range(20):
            p, x = rand_points(n, 2, g)
            u, v = rand_tangent(x, g), rand_tangent(x, g)
            pu, pv = push_tangent(p, u), push_tangent(p, v)
            assert metric_inner(pu.base, pu, pv) == pytest.approx(metric_inner(x, u, v),
                                                                  rel=1e-8, abs=1e-10)
