import math

import numpy as np
import pytest

from rtmf import plantlib
from rtmf.controllers import (
    ControllerState,
    MaglevLaw,
    StaGains,
    generic_v,
    maglev_v_hosmo,
    maglev_v_sto,
    rtmf_control,
    saturate,
    sign,
    spow,
    sta_core,
    sta_scalar,
)
from rtmf.regform import design_k, to_regular_form
from rtmf.synthesis import UncertainLti


class TestPrimitives:
    def test_sign_zero(self):
        assert sign(0.0) == 0.0
        assert sign(-0.0) == 0.0
        assert sign(2.5) == 1.0 and sign(-1e-300) == -1.0

    def test_spow_continuous_at_zero(self):
        assert spow(0.0, 0.5) == 0.0
        assert abs(spow(1e-12, 0.5)) < 1e-5
        assert spow(-4.0, 0.5) == -2.0

    def test_saturate(self):
        assert saturate(7.0, (-5.0, 5.0)) == 5.0
        assert saturate(-0.3, (-5.0, 5.0)) == -0.3


class TestStaCore:
    def test_rest_point(self):
        v, st = sta_core([0.0], ControllerState.zero(), StaGains(), 1e-3)
        assert v[0] == 0.0
        assert st.omega_int[0] == 0.0

    def test_arithmetic(self):
        st = ControllerState(omega_int=np.array([1.0]))
        v, new = sta_core([4.0], st, StaGains(k1=2.0, k2=3.0), 0.1)
        assert v[0] == pytest.approx(-3.0)
        assert new.omega_int[0] == pytest.approx(1.0 - 0.3)
        assert new.t == pytest.approx(0.1)

    def test_vector(self):
        st = ControllerState.zero(2)
        v, new = sta_core([1.0, -1.0], st, StaGains(k1=1.0, k2=1.0), 0.5)
        np.testing.assert_allclose(v, [-1.0, 1.0])
        np.testing.assert_allclose(new.omega_int, [-0.5, 0.5])

    def test_bad_dt(self):
        with pytest.raises(ValueError):
            sta_core([0.0], ControllerState.zero(), StaGains(), 0.0)

    def test_scalar_closed_loop_reaches_band(self):
        dt, k1, k2 = 1e-4, 10.0, 10.0
        s, om = 1.0, 0.0
        last_violation = 0.0
        for k in range(int(5.0 / dt)):
            t = (k + 1) * dt
            vp, om = sta_scalar(s, om, k1, k2, dt)
            s += dt * (vp + 5.0 * math.sin(k * dt))
            if abs(s) > 1e-3:
                last_violation = t
        assert last_violation < 2.0


class TestGains:
    def test_positive(self):
        with pytest.raises(ValueError):
            StaGains(k1=0.0)

    def test_default_rule(self):
        g = StaGains.for_disturbance(5.0)
        assert g.k2 == pytest.approx(6.5)
        assert g.satisfies_gain_condition(5.0)
        assert not StaGains(k2=1.0).satisfies_gain_condition(5.0)


class TestRtmfControl:
    def test_zero(self):
        np.testing.assert_array_equal(rtmf_control(plantlib.ROUNDED_H, np.zeros(3), [0.0]), [0.0])

    def test_model_initial_condition(self):
        u = rtmf_control(plantlib.ROUNDED_H, [1e-5, 0, 0], [0.0])
        assert u[0] == pytest.approx(2.125)

    def test_pure_sta(self):
        assert rtmf_control(np.zeros((1, 3)), [1, 2, 3], [0.7])[0] == pytest.approx(0.7)


class TestGenericV:
    def test_zero_state(self, maglev_sys):
        d = design_k(to_regular_form(maglev_sys))
        np.testing.assert_allclose(generic_v(d, [0.0], [0.0], [0.4]), [0.4])

    def test_cancels_sigma_drift(self, rng):
        A = rng.standard_normal((3, 3))
        B = rng.standard_normal((3, 1))
        sys = UncertainLti(A=A, B=B, C=[[1.0, 0.0, 0.0]])
        rf = to_regular_form(sys)
        d = design_k(rf, [-1.0, -3.0])
        for _ in range(10):
            z = rng.standard_normal(3)
            vp, w = rng.standard_normal(), rng.standard_normal()
            es = d.T2 @ rf.T1 @ z
            v = generic_v(d, es[:2], es[2:], [vp])
            zdot = A @ z + B[:, 0] * (v[0] + w)
            sdot = (d.T2 @ rf.T1 @ zdot)[2]
            assert sdot == pytest.approx(vp + w, abs=1e-9)

    def test_maglev_blocks(self, maglev_sys):
        d = design_k(to_regular_form(maglev_sys))
        # script_A = A21 + A22 K - K (A11 + A12 K) with A11 = A22 = 0
        K = 1 / 3518.85
        np.testing.assert_allclose(d.sigma_rows, [[-2180 / 3518.85 + K, 3518.85 * K]], rtol=1e-12)


class TestMaglevLaw:
    def test_constants(self):
        law = MaglevLaw()
        assert law.coef_xr1 == pytest.approx(3518.85 * 212500)
        assert law.coef_xr1 == pytest.approx(7.47e8, rel=2e-3)
        assert law.coef_xr3 == pytest.approx(8885.0)

    def test_zero_state_sto(self):
        v, st = maglev_v_sto((0.0, 0.0), (0.0, 0.0, 0.0), 0.0, 0.0, ControllerState.zero(),
                             StaGains(), 1e-4, K2=400.0)
        assert v == 0.0 and st.omega_int[0] == 0.0

    def test_zero_state_hosmo(self):
        v, st = maglev_v_hosmo((0.0, 0.0), (0.0, 0.0, 0.0), 0.0, 0.0, ControllerState.zero(),
                               StaGains(15, 15, 15, 15), 0.0, 1e-4, L2=100.0)
        assert v == 0.0 and st.omega_int[0] == 0.0

    @pytest.mark.parametrize("H", [tuple(plantlib.ROUNDED_H[0]), (747740000 / 3518.85, 0.0, -343000 / 3518.85)])
    def test_surface_dynamics_sto(self, rng, H):
        law = MaglevLaw(H=H)
        gains = StaGains()
        K2 = 400.0
        for _ in range(10):
            x1, x2, xh1, xh2, w = rng.standard_normal(5)
            x_r = rng.standard_normal(3) * 1e-5
            om = rng.standard_normal()
            e1 = x1 - xh1
            s = law.surface(x1, xh2, x_r)
            v, _ = maglev_v_sto((xh1, xh2), x_r, e1, s, ControllerState(np.array([om])), gains, 1e-4, K2=K2, law=law)
            u = law.feedforward(x_r) + v
            xh2dot = K2 * sign(e1) - 3518.85 * u + 2180 * xh1
            x_r_dot = plantlib.refmodel_deriv(x_r, 0.0)
            sdot = (x2 - 343000 * x_r[1]) + (xh2dot - 343000 * x_r_dot[1])
            want = (x2 - xh2) - gains.lambda1 * spow(s, 0.5) + om
            assert sdot == pytest.approx(want, rel=1e-6, abs=1e-6)

    def test_surface_dynamics_hosmo(self, rng):
        law = MaglevLaw()
        gains = StaGains(lambda1=15.0, lambda2=15.0)
        L2 = 100.0
        for _ in range(10):
            x1, x2, xh1, xh2, xh3 = rng.standard_normal(5)
            x_r = rng.standard_normal(3) * 1e-5
            e1 = x1 - xh1
            s = law.surface(x1, xh2, x_r)
            v, st = maglev_v_hosmo((xh1, xh2), x_r, e1, s, ControllerState.zero(), gains, xh3, 1e-4,
                                   L2=L2, law=law)
            u = law.feedforward(x_r) + v
            xh2dot = L2 * spow(e1, 1 / 3) + 2180 * xh1 - 3518.85 * u + xh3
            sdot = (x2 - 343000 * x_r[1]) + (xh2dot - 343000 * plantlib.refmodel_deriv(x_r, 0.0)[1])
            want = (x2 - xh2) - gains.lambda1 * spow(s, 0.5)
            assert sdot == pytest.approx(want, rel=1e-6, abs=1e-6)
            assert st.omega_int[0] == pytest.approx(-15.0 * sign(s) * 1e-4)
