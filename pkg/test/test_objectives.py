import math

import pytest
import torch
from torch.testing import assert_close

from spdprox.defs import ContractError, DTYPE
from spdprox.objectives import (Objective, grad_rho_b, karcher_objective,
                                median_objective, phi_k, prox_objective,
                                prox_value, rho_k, trace_objective)
from spdprox.oracle import fd_gradient_check
from spdprox.reducible import DiagPD, OrthoFrame, diag_norm2, normalizer_from, phi
from spdprox.spd import (congruence_point, distance, geodesic, geodesic_segment, identity,
                         random_spd, random_sym, riem_norm)
from util import E, diag_point, gen, rand_frame, rand_points, rand_tangent


def _objectives(g, n):
    pts = rand_points(n, 4, g)
    w = [1.0, 2.0, 0.5, 1.5]
    return [karcher_objective(pts, w), median_objective(pts, w), trace_objective()]


def test_karcher_single_point():
    g = gen(0)
    x = random_spd(3, g)
    f = karcher_objective([x])
    assert f(x) == 0.0
    assert riem_norm(x, f.grad(x)) == 0.0


def test_karcher_two_point_midpoint():
    g = gen(1)
    for _ in range(10):
        x1, x2 = rand_points(3, 2, g)
        f = karcher_objective([x1, x2])
        mid = geodesic_segment(x1, x2, 0.5)
        assert riem_norm(mid, f.grad(mid)) <= 1e-9


def test_karcher_commuting_family():
    f = karcher_objective([diag_point(1.0, 1.0), diag_point(E ** 2, E ** 4)])
    x = diag_point(E, E ** 2)
    assert riem_norm(x, f.grad(x)) <= 1e-8


def test_data_validation():
    g = gen(2)
    with pytest.raises(ContractError):
        karcher_objective([])
    with pytest.raises(ContractError):
        median_objective([random_spd(2, g), random_spd(3, g)])
    with pytest.raises(ContractError):
        karcher_objective([random_spd(2, g)], [0.0])
    with pytest.raises(ContractError):
        karcher_objective([random_spd(2, g)])(random_spd(3, g))


def test_gradients_match_finite_differences():
    g = gen(3)
    for n in (2, 3, 5):
        for _ in range(4):
            x = random_spd(n, g)
            dirs = [random_sym(n, g) for _ in range(5)]
            for f in _objectives(g, n):
                err = fd_gradient_check(f, x, f.grad(x), delta=1e-6, directions=dirs)
                assert err <= 1e-4, f.name


def test_median_gradient_off_data_points():
    g = gen(4)
    pts = rand_points(3, 5, g)
    f = median_objective(pts)
    for _ in range(10):
        x = random_spd(3, g)
        assert fd_gradient_check(f, x, f.grad(x)) <= 1e-4


def test_median_subgradient_at_data_point_is_finite():
    g = gen(5)
    pts = rand_points(2, 3, g)
    f = median_objective(pts)
    s = f.grad(pts[0])
    assert torch.isfinite(s.vec).all()


def test_geodesic_convexity_sampling():
    g = gen(6)
    for n in (2, 3):
        fs = _objectives(g, n)
        for _ in range(30):
            x, y = rand_points(n, 2, g, spread=1.0)
            mid = geodesic_segment(x, y, 0.5)
            for f in fs:
                assert f(mid) <= 0.5 * f(x) + 0.5 * f(y) + 1e-10


def test_phi_k_at_start_and_identity_normalizer():
    g = gen(7)
    pts = rand_points(3, 3, g)
    f = karcher_objective(pts)
    a = random_spd(3, g)
    assert phi_k(f, normalizer_from(a), DiagPD.ones(3), OrthoFrame.eye(3)) == pytest.approx(f(a), rel=1e-10)

    b = DiagPD(torch.tensor([2.0, 1.0, 0.5], dtype=DTYPE))
    c = rand_frame(3, g)
    assert phi_k(f, normalizer_from(identity(3)), b, c) == pytest.approx(f(phi(b, c)), rel=1e-10)


def test_phi_k_convex_in_b():
    g = gen(8)
    f = karcher_objective(rand_points(3, 4, g))
    nrm = normalizer_from(random_spd(3, g))
    for _ in range(20):
        c = rand_frame(3, g)
        b1 = DiagPD(torch.exp(torch.randn(3, generator=g, dtype=DTYPE)))
        b2 = DiagPD(torch.exp(torch.randn(3, generator=g, dtype=DTYPE)))
        bm = DiagPD(torch.sqrt(b1.values * b2.values))
        lhs = phi_k(f, nrm, bm, c)
        assert lhs <= 0.5 * phi_k(f, nrm, b1, c) + 0.5 * phi_k(f, nrm, b2, c) + 1e-10


def test_rho_k():
    g = gen(9)
    assert rho_k(DiagPD.ones(2), OrthoFrame.eye(2)) == 0.0
    b = DiagPD(torch.tensor([E, 1.0 / E], dtype=DTYPE))
    assert rho_k(b, rand_frame(2, g)) == pytest.approx(2.0, rel=1e-12)
    for _ in range(10):
        b = DiagPD(torch.exp(torch.randn(3, generator=g, dtype=DTYPE)))
        c1, c2 = rand_frame(3, g), rand_frame(3, g)
        d1 = distance(phi(b, c1), identity(3)) ** 2
        d2 = distance(phi(b, c2), identity(3)) ** 2
        assert d1 == pytest.approx(rho_k(b, c1), abs=1e-10)
        assert d2 == pytest.approx(rho_k(b, c2), abs=1e-10)


def test_grad_rho_b():
    assert_close(grad_rho_b(DiagPD.ones(3)), torch.zeros(3, dtype=DTYPE))
    b = DiagPD(torch.full((4,), E, dtype=DTYPE))
    assert math.sqrt(diag_norm2(b, grad_rho_b(b))) == pytest.approx(2.0 * math.sqrt(4.0), rel=1e-12)

    g = gen(10)
    b = DiagPD(torch.exp(torch.randn(3, generator=g, dtype=DTYPE)))
    h = 1e-6
    fd = torch.zeros(3, dtype=DTYPE)
    for k in range(3):
        vp, vm = b.values.clone(), b.values.clone()
        vp[k] += h
        vm[k] -= h
        fd[k] = (rho_k(DiagPD(vp)) - rho_k(DiagPD(vm))) / (2.0 * h)
    # Riemannian gradient on D1 is b^2 times the Euclidean partials
    assert_close(grad_rho_b(b) / b.values ** 2, fd, rtol=1e-5, atol=1e-8)


def test_prox_value():
    g = gen(11)
    f = karcher_objective(rand_points(2, 3, g))
    a = random_spd(2, g)
    p = prox_objective(f, a, 2.0)
    assert prox_value(p, a) == pytest.approx(f(a), rel=1e-12)
    x = random_spd(2, g)
    assert p(x) == pytest.approx(f(x) + distance(x, a) ** 2, rel=1e-12)
    assert prox_value(prox_objective(f, a, 0.0), x) == f(x)
    with pytest.raises(ContractError):
        prox_objective(f, a, -1.0)


def test_objective_without_gradient():
    f = Objective(None, lambda x: 0.0)
    assert not f.differentiable
    with pytest.raises(ContractError):
        f.grad(identity(2))


def test_prox_objective_gradient():
    g = gen(12)
    for n in (2, 3):
        f = karcher_objective(rand_points(n, 3, g))
        a = random_spd(n, g)
        p = prox_objective(f, a, 1.5)
        x = random_spd(n, g)
        assert fd_gradient_check(p, x, p.grad(x), delta=1e-6) <= 1e-4


def test_median_of_collinear_points_is_middle():
    g = gen(13)
    for _ in range(5):
        x1, x3 = rand_points(3, 2, g)
        x2 = geodesic_segment(x1, x3, 0.4)
        f = median_objective([x1, x2, x3])
        f_mid = f(x2)
        assert f_mid == pytest.approx(distance(x1, x3), rel=1e-9)
        for _ in range(20):
            y = geodesic(x2, rand_tangent(x2, g, 0.1), 1.0)
            assert f(y) >= f_mid - 1e-9
        for y in rand_points(3, 10, g):
            assert f(y) >= f_mid - 1e-9


def test_objective_values_are_congruence_invariant():
    g = gen(14)
    for n in (2, 3):
        pts = rand_points(n, 4, g)
        w = [1.0, 2.0, 0.5, 1.5]
        p = random_spd(n, g)
        moved = [congruence_point(p, x) for x in pts]
        for make in (karcher_objective, median_objective):
            f, f_moved = make(pts, w), make(moved, w)
            for y in rand_points(n, 10, g):
                assert f_moved(congruence_point(p, y)) == pytest.approx(f(y), rel=1e-8, abs=1e-10)
