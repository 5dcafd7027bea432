import json
import math
from dataclasses import replace

import numpy as np
import pytest

from rtmf import config, simharness
from rtmf.controllers import StaGains
from rtmf.plantlib import CommandSignal, Disturbance
from rtmf.simharness import (
    CSV_COLUMNS,
    DivergenceError,
    Scenario,
    ScenarioError,
    Trajectory,
    compare,
    compute_metrics,
    run,
    simulate,
)


def make_traj(t, u, e=None, s=None):
    data = np.zeros((len(t), len(CSV_COLUMNS)))
    data[:, CSV_COLUMNS.index("t")] = t
    data[:, CSV_COLUMNS.index("u")] = u
    if e is not None:
        data[:, CSV_COLUMNS.index("e")] = e
    if s is not None:
        data[:, CSV_COLUMNS.index("s")] = s
    return Trajectory(data)


class TestScenario:
    def test_defaults_validate(self):
        scn = Scenario()
        assert scn.n_steps == 200000
        assert scn.steady_start == 10.0
        assert scn.label() == "STO"

    @pytest.mark.parametrize("kw", [
        {"plant": "quadrotor"},
        {"controller": "sto_rtmf", "observer": "hosmo"},
        {"dt": 0.0},
        {"dt": 0.5},
        {"t_end": -1.0},
        {"t_steady": 30.0},
        {"x0_plant": (1.0,)},
        {"disturbance_channel": "sensor"},
    ])
    def test_rejects(self, kw):
        with pytest.raises(ScenarioError):
            Scenario(**kw)

    def test_dict_round_trip(self):
        scn = Scenario(controller="hosmo_rtmf", observer="hosmo", t_steady=4.0,
                       disturbance=Disturbance("table", table=((0.0, 1.0), (2.0, 3.0))),
                       gains=StaGains(lambda1=15.0, lambda2=15.0))
        assert Scenario.from_dict(scn.to_dict()) == scn

    def test_unknown_key(self):
        with pytest.raises(ScenarioError, match="unknown"):
            Scenario.from_dict({"gain": 3})


class TestSimulate:
    @pytest.mark.parametrize("controller,observer", [
        ("sto_rtmf", "sto"), ("hosmo_rtmf", "hosmo"), ("generic_sta", "none"), ("none", "none"),
    ])
    def test_equilibrium_stays_zero(self, controller, observer):
        scn = Scenario(controller=controller, observer=observer, command=CommandSignal("zero"),
                       disturbance=Disturbance("zero"), x0_plant=(0.0, 0.0), x_r0=(0.0, 0.0, 0.0),
                       t_end=0.5, dt=1e-3)
        tr = simulate(scn)
        assert np.all(tr.data[:, 1:] == 0.0)
        np.testing.assert_allclose(tr.t, np.arange(501) * 1e-3)

    def test_one_row_per_step(self):
        tr = simulate(config.load_scenario(preset="sto-sine", t_end=0.2))
        assert len(tr) == 2001
        assert tr.t[1] == pytest.approx(1e-4)

    def test_columns_consistent(self):
        tr = simulate(config.load_scenario(preset="hosmo-sine", t_end=0.5))
        np.testing.assert_allclose(tr.e, tr.y - tr.y_r)
        np.testing.assert_allclose(tr.e1, tr.x1 - tr.xhat1)
        np.testing.assert_allclose(tr.e2, tr.x2 - tr.xhat2)
        np.testing.assert_allclose(tr.w, 5.0 * np.sin(tr.t))
        assert tr.y_r[0] == pytest.approx(3.43)

    def test_open_loop_divergence(self):
        scn = Scenario(controller="none", observer="none", command=CommandSignal("zero"),
                       disturbance=Disturbance("zero"), x0_plant=(1e-3, 0.0), t_end=2.0)
        with pytest.raises(DivergenceError) as info:
            simulate(scn)
        assert info.value.t < 0.5

    def test_saturation_limits_control(self):
        scn = replace(config.load_scenario(preset="sto-sine", t_end=1.0), saturation=True)
        tr = simulate(scn)
        assert np.max(np.abs(tr.u)) <= 5.0

    def test_rounded_h_preset_tracks(self):
        scn = replace(config.load_scenario(preset="hosmo-sine"), h_preset="rounded")
        _, m = run(scn)
        assert m.tracking_rms_steady < 1e-3

    def test_nonlinear_plant_from_rest(self):
        # the 3.43 V model start puts the transient through the magnet face,
        # so start plant and model at the operating point
        scn = replace(config.load_scenario(preset="hosmo-sine", t_end=6.0), plant="nonlinear",
                      x0_plant=(0.0, 0.0), x_r0=(0.0, 0.0, 0.0), t_steady=3.0)
        _, m = run(scn)
        assert m.tracking_rms_steady < 1e-3

    def test_nonlinear_plant_hits_magnet_from_default_start(self):
        scn = replace(config.load_scenario(preset="hosmo-sine", t_end=1.0), plant="nonlinear")
        with pytest.raises(simharness.SimulationError, match="magnet"):
            simulate(scn)

    def test_csv_format(self):
        tr = simulate(config.load_scenario(preset="sto-sine", t_end=0.01))
        lines = tr.to_csv().splitlines()
        assert lines[0] == "t,y,y_r,e,x1,x2,xhat1,xhat2,s,u,v,w,e1,e2"
        assert len(lines) == len(tr) + 1
        row = [float(v) for v in lines[-1].split(",")]
        np.testing.assert_allclose(row, tr.data[-1], rtol=1e-14)

    def test_dt_halved_shrinks_surface_band(self):
        base = config.load_scenario(preset="sto-sine", t_end=6.0)
        bands = [run(replace(base, dt=dt))[1].sliding_band for dt in (2e-4, 1e-4)]
        assert bands[1] < bands[0]


class TestMetrics:
    def test_constant_u(self):
        t = np.linspace(0, 2, 201)
        m = compute_metrics(make_traj(t, np.full_like(t, 0.3)), 1.0)
        assert m.control_tv_rate == 0.0
        assert m.max_abs_u == pytest.approx(0.3)

    def test_unit_step(self):
        t = np.linspace(0, 2, 201)
        u = np.where(t >= 1.5, 1.0, 0.0)
        m = compute_metrics(make_traj(t, u), 1.0)
        assert m.control_tv_rate == pytest.approx(1.0 / (2.0 - 1.0))

    def test_rms_and_band(self):
        t = np.linspace(0, 2, 2001)
        e = np.where(t >= 1.0, 0.5, 9.0)
        s = np.where(t >= 1.0, -0.25, 9.0)
        m = compute_metrics(make_traj(t, 0 * t, e=e, s=s), 1.0)
        assert m.tracking_rms_steady == pytest.approx(0.5)
        assert m.sliding_band == pytest.approx(0.25)

    def test_empty_window(self):
        t = np.linspace(0, 1, 11)
        with pytest.raises(ValueError):
            compute_metrics(make_traj(t, 0 * t), 1.0)

    def test_serialisation(self):
        t = np.linspace(0, 2, 21)
        m = compute_metrics(make_traj(t, 0 * t), 1.0)
        assert json.loads(m.to_json())["t_steady"] == 1.0
        assert "control_tv_rate = 0" in m.to_text()

    def test_observer_convergence_time(self):
        t = np.linspace(0, 1, 11)
        tr = make_traj(t, 0 * t)
        tr.data[:4, CSV_COLUMNS.index("e2")] = 1.0
        assert simharness.observer_convergence_time(tr) == pytest.approx(0.4)
        tr.data[-1, CSV_COLUMNS.index("e1")] = 1.0
        assert simharness.observer_convergence_time(tr) is None


class TestCompare:
    def test_identical(self):
        scn = config.load_scenario(preset="hosmo-sine", t_end=2.0)
        rep = compare(scn, scn)
        assert all(v == 1.0 for v in rep.ratios.values())
        assert rep.label_a != rep.label_b

    def test_mismatched_horizon(self):
        a = config.load_scenario(preset="sto-sine", t_end=2.0)
        b = config.load_scenario(preset="hosmo-sine", t_end=3.0)
        with pytest.raises(ScenarioError, match="horizon"):
            compare(a, b)

    def test_mismatched_command(self):
        a = config.load_scenario(preset="sto-sine", t_end=2.0)
        b = config.load_scenario(preset="hosmo-trapezoid", t_end=2.0)
        with pytest.raises(ScenarioError):
            compare(a, b)

    def test_sto_vs_hosmo_verdicts(self):
        a = config.load_scenario(preset="sto-sine", t_end=6.0)
        b = config.load_scenario(preset="hosmo-sine", t_end=6.0)
        rep = compare(a, b)
        assert "HOSMO smoother: yes" in rep.verdicts
        assert "HOSMO more precise: yes" in rep.verdicts
        assert rep.to_dict()["ratios_b_over_a"]["control_tv_rate"] < 1.0
        assert math.isfinite(rep.ratios["max_abs_u"])
