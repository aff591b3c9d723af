import math

import numpy as np
import pytest

from slagflow.ambient import (
    CalabiModel,
    FlatTorusCY,
    curvature_at,
    curvature_norms_fd,
    riemann_from_derivs,
)


class TestFlatCurvature:
    def test_flat_zero(self, flat_t4, rng):
        field = flat_t4.field()
        q = rng.uniform(-3, 3, size=4)
        _, nrm = curvature_at(field, q)
        assert nrm <= 1e-8

    def test_cylinder_zero(self, cylinder_t3):
        field = cylinder_t3.field()
        _, nrm = curvature_at(field, np.array([3.0, 0.2, 1.0, 0.0]))
        assert nrm <= 1e-12

    def test_fd_route_on_flat(self, flat_t4):
        field = flat_t4.field()
        _, nrm = curvature_norms_fd(field.metric, np.zeros(4), h=1e-3)
        assert nrm < 1e-9


class TestCalabiCurvature:
    def test_analytic_matches_fd_oracle(self, calabi_n2, rng):
        """Dual route: analytic log-chart curvature against the
        Richardson-extrapolated finite-difference oracle."""
        field = calabi_n2.field()
        for _ in range(4):
            z = rng.uniform(-1.5, 1.5, size=2)
            t = rng.uniform(4.0, 60.0)
            q = calabi_n2.fiber_point(z, t, rng.uniform(0, 2 * math.pi))
            _, nrm = curvature_at(field, q)
            pl = field.to_log_chart(q)
            def metric_log(p):
                return field.log_chart_metric_derivs(p)[0]
            _, nrm_fd = curvature_norms_fd(metric_log, pl, h=2e-3)
            assert nrm == pytest.approx(nrm_fd, rel=1e-5)

    def test_norm_is_theta_and_deck_invariant(self, calabi_n2, rng):
        field = calabi_n2.field()
        z = np.array([0.8, -0.3])
        q1 = calabi_n2.fiber_point(z, 20.0, 0.4)
        q2 = calabi_n2.fiber_point(z, 20.0, 2.9)
        _, n1 = curvature_at(field, q1)
        _, n2 = curvature_at(field, q2)
        assert n1 == pytest.approx(n2, rel=1e-10)

    @pytest.mark.parametrize("n,slope_bound", [(2, -2.0), (3, -2.0)])
    def test_decay_exponent(self, n, slope_bound):
        """log|Rm| vs log l0 slope obeys the stated decay bounds: the fit is
        <= -2 in all dimensions and the n=2 values respect C l0^{-6}."""
        base = FlatTorusCY.square(2 * math.pi, m=n - 1)
        model = CalabiModel(n, base, ell_min=1.1, ell_max=3.6)
        field = model.field()
        ls = np.array([1.5, 2.0, 2.5, 3.0])
        norms = []
        for l0 in ls:
            t = l0 ** (2 * n)
            pl = np.zeros(2 * n)
            pl[2 * n - 2] = -t / 2.0  # rho with phi = 0
            _, nrm, _, _ = riemann_from_derivs(*field.log_chart_metric_derivs(pl))
            norms.append(nrm)
        slope = np.polyfit(np.log(ls), np.log(norms), 1)[0]
        assert slope <= slope_bound + 0.05
        if n == 2:
            consts = np.array(norms) * ls**6
            assert consts.max() <= 2.0 * consts.min()  # consistent with C l0^{-6}

    def test_gradient_norm_finite(self, calabi_n2):
        field = calabi_n2.field()
        q = calabi_n2.fiber_point(np.zeros(2), 16.0, 0.0)
        _, nrm, grad = curvature_at(field, q, want_grad=True)
        assert nrm > 0
        assert np.isfinite(grad) and grad > 0

    def test_fiber_length_injectivity_proxy(self, calabi_n2):
        """Circle-fiber length scales as l0^{1-n}: ratio at 2 l0 vs l0 is
        2^{1-n} to near machine precision."""
        n = 2
        def fiber_length(l0):
            t = l0 ** (2 * n)
            m = 256
            h = 2 * math.pi / m
            thetas = np.arange(m) * h
            pts = calabi_n2.fiber_point(np.zeros(2), t, thetas)
            field = calabi_n2.field()
            tang = (np.roll(pts, -1, axis=0) - np.roll(pts, 1, axis=0)) / (2 * h)
            g = field.metric(pts)
            return float(np.sum(np.sqrt(np.einsum("pa,pab,pb->p", tang, g, tang))) * h)
        l0 = 1.4
        ratio = fiber_length(2 * l0) / fiber_length(l0)
        assert ratio == pytest.approx(2.0 ** (1 - n), abs=1e-6)
