import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gevspec import symbols
from gevspec.symbols import (ANALYTIC, gevrey_flat, make_analytic_transport,
                             make_davies, make_gevrey_transport,
                             make_trapped_toy, model_from_tag, smooth_step,
                             taylor_extension)

ALL_MODELS = [make_davies(), make_analytic_transport(),
              make_gevrey_transport(1.5), make_gevrey_transport(2.0),
              make_gevrey_transport(3.0), make_trapped_toy()]


class TestGevreyFlat:
    def test_flat_region(self):
        assert gevrey_flat(2.0, 0.0) == 0.0
        assert gevrey_flat(2.0, -3.7) == 0.0
        assert np.all(gevrey_flat(2.0, np.linspace(-5, 0, 11)) == 0.0)

    def test_closed_form_values(self):
        assert gevrey_flat(2.0, 1.0) == pytest.approx(math.exp(-1.0), rel=1e-12)
        assert gevrey_flat(3.0, 0.25) == pytest.approx(math.exp(-2.0), rel=1e-12)

    def test_rejects_bad_order(self):
        with pytest.raises(ValueError):
            gevrey_flat(1.0, 0.5)
        with pytest.raises(ValueError):
            gevrey_flat(0.5, 0.5)

    @given(s=st.floats(1.1, 6.0), t1=st.floats(1e-6, 50.0),
           t2=st.floats(1e-6, 50.0))
    @settings(max_examples=200, deadline=None)
    def test_monotone_and_bounded(self, s, t1, t2):
        lo, hi = min(t1, t2), max(t1, t2)
        v_lo, v_hi = gevrey_flat(s, lo), gevrey_flat(s, hi)
        assert 0.0 <= v_lo <= v_hi <= 1.0

    def test_derivative_matches_finite_difference(self):
        t = np.linspace(0.05, 4.0, 37)
        d = 1e-6
        fd = (gevrey_flat(2.5, t + d) - gevrey_flat(2.5, t - d)) / (2 * d)
        assert np.allclose(symbols._gevrey_flat_d1(2.5, t), fd, atol=1e-7)


class TestSmoothStep:
    def test_endpoints(self):
        assert smooth_step(-0.2) == 0.0
        assert smooth_step(0.0) == 0.0
        assert smooth_step(1.0) == pytest.approx(1.0)
        assert smooth_step(1.5) == pytest.approx(1.0)

    @given(u=st.floats(-1.0, 2.0))
    @settings(max_examples=100, deadline=None)
    def test_range(self, u):
        v = float(smooth_step(u))
        assert 0.0 <= v <= 1.0


class TestDavies:
    def test_eval_examples(self):
        m = make_davies()
        assert m.symbol(1.0, 1.0) == pytest.approx(1.0 + 1.0j)
        assert m.symbol(2.0, 0.0) == pytest.approx(4.0j)

    def test_grad_example(self):
        m = make_davies()
        gx, gxi = m.symbol.grad(0.0, 2.0)
        assert gx == pytest.approx(0.0)
        assert gxi == pytest.approx(4.0)

    def test_metadata(self):
        m = make_davies()
        assert math.isinf(m.symbol.order_s)
        assert m.z0 == 0j


class TestTransportModels:
    def test_gevrey_zero_at_origin(self):
        m = make_gevrey_transport(2.0)
        assert m.symbol(0.0, 0.0) == 0.0

    def test_tanh_saturation(self):
        m = make_gevrey_transport(2.0)
        assert abs(np.imag(m.symbol(0.0, 10.0)) - 1.0) < 1e-8

    def test_gevrey_flat_factor_value(self):
        m = make_gevrey_transport(2.0)
        assert np.real(m.symbol(np.sqrt(2.0), 0.0)) == pytest.approx(
            math.exp(-1.0), rel=1e-12)

    def test_real_part_nonneg_and_zero_segment(self):
        m = make_gevrey_transport(2.0)
        x = np.linspace(-5, 5, 201)
        xi = np.linspace(-5, 5, 201)
        vals = m.symbol(x[:, None], xi[None, :])
        assert np.all(np.real(vals) >= 0.0)
        inside = np.abs(x) <= 1.0
        assert np.all(m.symbol(x[inside], 0.0) == 0.0)

    def test_rejects_bad_order(self):
        with pytest.raises(ValueError):
            make_gevrey_transport(1.0)

    def test_analytic_examples(self):
        m = make_analytic_transport()
        assert m.symbol(0.0, 0.0) == 0.0
        assert np.real(m.symbol(1.0, 0.0)) == pytest.approx(0.5)
        assert np.imag(m.symbol(1.0, 0.0)) == pytest.approx(0.0)
        gx, gxi = m.symbol.grad(0.0, 0.0)
        assert gx == pytest.approx(0.0)
        assert gxi == pytest.approx(1.0j)

    def test_orders_reported(self):
        assert make_analytic_transport().symbol.order_s == ANALYTIC
        assert make_davies().symbol.order_s == ANALYTIC
        assert make_gevrey_transport(2.5).symbol.order_s == 2.5

    def test_multiplier_nonvanishing_on_zero_box(self):
        for m in ALL_MODELS:
            if m.multiplier_q is None:
                continue
            (xlo, xhi), (klo, khi) = m.symbol.zero_set_hint
            x = np.linspace(xlo, xhi, 21)
            xi = np.linspace(klo, khi, 21)
            q = m.multiplier_q(x[:, None], xi[None, :])
            assert np.abs(q).min() >= 0.5


class TestDerivativeConsistency:
    @pytest.mark.parametrize("model", ALL_MODELS, ids=lambda m: m.tag)
    def test_grad_matches_finite_differences(self, model, rng):
        pts = rng.uniform(-5, 5, size=(100, 2))
        x, xi = pts[:, 0], pts[:, 1]
        d = 1e-5
        sym = model.symbol
        gx, gxi = sym.grad(x, xi)
        fdx = (sym(x + d, xi) - sym(x - d, xi)) / (2 * d)
        fdk = (sym(x, xi + d) - sym(x, xi - d)) / (2 * d)
        assert np.abs(gx - fdx).max() < 1e-6
        assert np.abs(gxi - fdk).max() < 1e-6

    @pytest.mark.parametrize("model", ALL_MODELS, ids=lambda m: m.tag)
    def test_hess_matches_finite_differences(self, model, rng):
        pts = rng.uniform(-5, 5, size=(100, 2))
        x, xi = pts[:, 0], pts[:, 1]
        # small step: fourth derivatives spike near the flat-region edge
        d = 1e-5
        sym = model.symbol
        H = sym.hess(x, xi)
        fdxx = (sym(x + d, xi) - 2 * sym(x, xi) + sym(x - d, xi)) / d ** 2
        fdkk = (sym(x, xi + d) - 2 * sym(x, xi) + sym(x, xi - d)) / d ** 2
        assert np.abs(H[..., 0, 0] - fdxx).max() < 1e-4
        assert np.abs(H[..., 1, 1] - fdkk).max() < 1e-4

    @pytest.mark.parametrize("model", ALL_MODELS, ids=lambda m: m.tag)
    def test_hess_symmetric(self, model, rng):
        pts = rng.uniform(-5, 5, size=(50, 2))
        H = model.symbol.hess(pts[:, 0], pts[:, 1])
        assert np.abs(H[..., 0, 1] - H[..., 1, 0]).max() == 0.0


class TestTaylorExtension:
    def test_real_restriction(self):
        for m in ALL_MODELS:
            v = taylor_extension(m.symbol, 2, (0.3, -0.2), (0.0, 0.0))
            assert v == pytest.approx(complex(m.symbol(0.3, -0.2)), abs=1e-14)

    def test_quadratic_symbol_exact(self):
        m = make_davies()
        for tau in (0.1, 0.3, -0.2):
            v = taylor_extension(m.symbol, 2, (0.0, 0.0), (0.0, tau))
            assert v == pytest.approx(-tau ** 2, abs=1e-14)

    def test_first_order_closed_form(self):
        m = make_gevrey_transport(2.0)
        delta = 0.05
        f2 = math.exp(-1.0 / 3.0)
        fp2 = math.exp(-1.0 / 3.0) / 9.0 * 4.0
        v = taylor_extension(m.symbol, 1, (2.0, 0.0), (delta, 0.0))
        assert v == pytest.approx(f2 + 1j * delta * fp2, abs=1e-12)

    def test_rejects_bad_order(self):
        m = make_davies()
        with pytest.raises(ValueError):
            taylor_extension(m.symbol, 3, (0.0, 0.0), (0.1, 0.0))
        with pytest.raises(ValueError):
            taylor_extension(m.symbol, 0, (0.0, 0.0), (0.1, 0.0))


class TestTagParsing:
    def test_round_trip(self):
        for tag in ("davies", "analytic-transport", "trapped-toy",
                    "gevrey-transport:s=2.0", "gevrey-transport:s=1.5"):
            assert model_from_tag(tag).tag == tag.replace("2.0", "2")

    def test_unknown_tag(self):
        with pytest.raises(ValueError):
            model_from_tag("heat-kernel")
        with pytest.raises(ValueError):
            model_from_tag("gevrey-transport:alpha=2")
