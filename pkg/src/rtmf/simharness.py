"""Fixed-step closed-loop simulation of the MagLev benchmark.

Every continuous state (plant, reference model, observer, controller
integrals) is advanced together by explicit Euler. The control is computed
once per step from the start-of-step measurements and held over the step.
Runs are deterministic: the same :class:`Scenario` gives a bit-identical
:class:`Trajectory`.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import plantlib
from .controllers import (
    ControllerState,
    MaglevLaw,
    StaGains,
    maglev_v_hosmo,
    maglev_v_sto,
    saturate,
    sta_scalar,
)
from .observers import HOSMO_DEFAULT_GAINS, STO_DEFAULT_GAINS, HosmoState, StoState, hosmo_step, sto_step
from .plantlib import CommandSignal, Disturbance, MaglevParams
from .regform import design_k, to_regular_form
from .synthesis import solve_gh

PLANTS = ("linear", "nonlinear")
CONTROLLERS = ("generic_sta", "sto_rtmf", "hosmo_rtmf", "none")
OBSERVERS = ("none", "sto", "hosmo")
H_PRESETS = ("exact", "rounded")
OBSERVER_INITS = ("measured", "zero")
REQUIRED_OBSERVER = {"sto_rtmf": "sto", "hosmo_rtmf": "hosmo", "generic_sta": "none", "none": "none"}

CSV_COLUMNS = ("t", "y", "y_r", "e", "x1", "x2", "xhat1", "xhat2", "s", "u", "v", "w", "e1", "e2")
BLOWUP = 1e6
E1_TOL = 1e-3
E2_TOL = 0.05


class ScenarioError(ValueError):
    """Scenario fails validation."""


class SimulationError(RuntimeError):
    """Simulation aborted; ``t`` is the time of the failing step."""

    def __init__(self, message: str, t: float):
        super().__init__(f"{message} at t = {t:.6g} s")
        self.t = t


class DivergenceError(SimulationError):
    pass


@dataclass(frozen=True)
class ObserverGains:
    K1: float = STO_DEFAULT_GAINS[0]
    K2: float = STO_DEFAULT_GAINS[1]
    L1: float = HOSMO_DEFAULT_GAINS[0]
    L2: float = HOSMO_DEFAULT_GAINS[1]
    L3: float = HOSMO_DEFAULT_GAINS[2]

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) <= 0:
                raise ScenarioError(f"observer gain {f.name} must be positive")


@dataclass(frozen=True)
class Scenario:
    plant: str = "linear"
    controller: str = "sto_rtmf"
    observer: str = "sto"
    command: CommandSignal = field(default_factory=CommandSignal)
    disturbance: Disturbance = field(default_factory=Disturbance)
    disturbance_channel: str = "input"
    gains: StaGains = field(default_factory=StaGains)
    observer_gains: ObserverGains = field(default_factory=ObserverGains)
    surface_poles: tuple[float, ...] = (-1.0,)
    surface_slope: float = 1.0
    h_preset: str = "exact"
    dt: float = 1e-4
    t_end: float = 20.0
    t_steady: float | None = None
    x0_plant: tuple[float, float] = (0.5, 0.0)
    x_r0: tuple[float, float, float] = tuple(plantlib.MODEL_X_R0)
    observer_init: str = "measured"
    observer_bypass: bool = False
    saturation: bool = False
    seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        def one_of(name, options):
            if getattr(self, name) not in options:
                raise ScenarioError(f"{name} must be one of {options}, got {getattr(self, name)!r}")

        one_of("plant", PLANTS)
        one_of("controller", CONTROLLERS)
        one_of("observer", OBSERVERS)
        one_of("h_preset", H_PRESETS)
        one_of("observer_init", OBSERVER_INITS)
        one_of("disturbance_channel", plantlib.CHANNELS)
        if not 1e-6 <= self.dt <= 1e-2:
            raise ScenarioError(f"dt must lie in [1e-6, 1e-2], got {self.dt}")
        if self.t_end <= 0 or self.t_end / self.dt > 1e8:
            raise ScenarioError("t_end must be positive with t_end/dt <= 1e8")
        if self.t_steady is not None and not 0 <= self.t_steady < self.t_end:
            raise ScenarioError("t_steady must lie in [0, t_end)")
        need = REQUIRED_OBSERVER[self.controller]
        if self.observer != need:
            raise ScenarioError(f"controller {self.controller!r} requires observer {need!r}, got {self.observer!r}")
        if len(self.x0_plant) != 2 or len(self.x_r0) != 3:
            raise ScenarioError("x0_plant needs 2 entries and x_r0 needs 3")
        if self.surface_slope <= 0:
            raise ScenarioError("surface_slope must be positive")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    @property
    def steady_start(self) -> float:
        return self.t_end / 2 if self.t_steady is None else self.t_steady

    def label(self) -> str:
        return {"sto_rtmf": "STO", "hosmo_rtmf": "HOSMO", "generic_sta": "STA", "none": "OPEN"}[self.controller]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["disturbance"]["table"] = [list(p) for p in self.disturbance.table]
        d["surface_poles"] = list(self.surface_poles)
        d["x0_plant"] = list(self.x0_plant)
        d["x_r0"] = list(self.x_r0)
        if self.t_steady is None:
            del d["t_steady"]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> Scenario:
        d = dict(d)
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ScenarioError(f"unknown scenario keys: {sorted(unknown)}")
        try:
            if "command" in d:
                d["command"] = CommandSignal(**d["command"])
            if "disturbance" in d:
                dist = dict(d["disturbance"])
                dist["table"] = tuple(tuple(float(v) for v in p) for p in dist.get("table", ()))
                d["disturbance"] = Disturbance(**dist)
            if "gains" in d:
                d["gains"] = StaGains(**d["gains"])
            if "observer_gains" in d:
                d["observer_gains"] = ObserverGains(**d["observer_gains"])
            for key in ("surface_poles", "x0_plant", "x_r0"):
                if key in d:
                    d[key] = tuple(float(v) for v in d[key])
            return cls(**d)
        except ScenarioError:
            raise
        except (TypeError, ValueError) as exc:
            raise ScenarioError(str(exc)) from exc


@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled closed-loop history (one row per step, ``t = k dt``)."""

    data: np.ndarray
    extras: dict = field(default_factory=dict)

    def __getattr__(self, name):
        if name in CSV_COLUMNS:
            return self.data[:, CSV_COLUMNS.index(name)]
        raise AttributeError(name)

    def __len__(self) -> int:
        return self.data.shape[0]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in self.data:
            w.writerow([f"{v:.15g}" for v in row])
        return buf.getvalue()

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())


@dataclass(frozen=True)
class Metrics:
    tracking_rms_steady: float
    sliding_band: float
    observer_T_conv: float | None
    control_tv_rate: float
    max_abs_u: float
    t_steady: float

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_text(self) -> str:
        lines = []
        for k, v in self.to_dict().items():
            lines.append(f"{k} = {'none' if v is None else format(v, '.12g')}")
        return "\n".join(lines) + "\n"


def _model_gains(scn: Scenario):
    sys = plantlib.maglev_plant(theta_M=scn.disturbance.sup_w, theta_dot_M=scn.disturbance.sup_wdot)
    model = plantlib.maglev_reference_model()
    syn = solve_gh(sys, model)
    H = syn.H if scn.h_preset == "exact" else plantlib.ROUNDED_H
    return sys, model, syn, H


def simulate(scn: Scenario) -> Trajectory:
    """Run the closed loop described by ``scn``.

    Raises :class:`DivergenceError` when any state exceeds 1e6 in magnitude
    or turns non-finite, and :class:`SimulationError` when the nonlinear
    plant hits the magnet.
    """
    sys, model, syn, H = _model_gains(scn)
    dt = scn.dt
    N = scn.n_steps
    A_r, B_r = model.A_r, model.B_r[:, 0]
    ar = A_r[2]  # companion bottom row
    g_cmd = scn.command
    g_dist = scn.disturbance
    channel = scn.disturbance_channel
    params = MaglevParams()
    if scn.plant == "linear":
        def plant_f(x1, x2, u, w):
            return plantlib.maglev_linear_deriv((x1, x2), u, w, channel)
    else:
        def plant_f(x1, x2, u, w):
            try:
                return plantlib.maglev_nonlinear_volts_deriv((x1, x2), u, w, channel, params)
            except plantlib.SingularityError as exc:
                raise SimulationError(str(exc), t) from exc

    x1, x2 = (float(v) for v in scn.x0_plant)
    xr = [float(v) for v in scn.x_r0]
    c_r = model.C_r[0, 0]
    Hrow = tuple(float(h) for h in np.asarray(H).reshape(-1))
    law = MaglevLaw(H=Hrow, surface_slope=scn.surface_slope)
    og = scn.observer_gains
    cstate = ControllerState.zero(1)

    if scn.observer == "sto":
        obs = StoState(xhat1=x1 if scn.observer_init == "measured" else 0.0, K1=og.K1, K2=og.K2)
    elif scn.observer == "hosmo":
        obs = HosmoState(xhat1=x1 if scn.observer_init == "measured" else 0.0, L1=og.L1, L2=og.L2, L3=og.L3)
    else:
        obs = None

    if scn.controller == "generic_sta":
        # MagLev is n = 2, m = 1: eta and sigma are scalars, so the surface
        # maps are unrolled into plain floats for speed
        rf = to_regular_form(sys)
        design = design_k(rf, list(scn.surface_poles), seed=scn.seed)
        T1G = rf.T1 @ syn.G
        t11, t12 = rf.T1[0]
        t21, t22 = rf.T1[1]
        g1 = tuple(T1G[0])
        g2 = tuple(T1G[1])
        kk = float(design.K[0, 0])
        f_eta, f_sig = (float(c) for c in design.sigma_rows[0])
        k1, k2 = scn.gains.k1, scn.gains.k2
        omega = 0.0

    rows = []
    xhat3_hist = []
    eta_hist = []
    limits = params.u_limits
    t = 0.0
    for k in range(N + 1):
        t = k * dt
        r = g_cmd(t)
        w = g_dist(t)
        y = x1
        ff = Hrow[0] * xr[0] + Hrow[1] * xr[1] + Hrow[2] * xr[2]

        if scn.controller == "none":
            xh1, xh2, e1 = x1, x2, 0.0
            s = 0.0
            v = 0.0
            u = 0.0
            new_c = cstate
        elif scn.controller == "generic_sta":
            xh1, xh2, e1 = x1, x2, 0.0
            eta = t11 * x1 + t12 * x2 - (g1[0] * xr[0] + g1[1] * xr[1] + g1[2] * xr[2])
            xi = t21 * x1 + t22 * x2 - (g2[0] * xr[0] + g2[1] * xr[1] + g2[2] * xr[2])
            s = xi - kk * eta
            vp, omega_next = sta_scalar(s, omega, k1, k2, dt)
            v = -(f_eta * eta + f_sig * s) + vp
            u = ff + v
            new_c = cstate
            eta_hist.append(eta)
        else:
            if scn.observer_bypass:
                xh1, xh2, e1 = x1, x2, 0.0
                integral = 0.0
            else:
                xh1, xh2 = obs.xhat1, obs.xhat2
                e1 = y - xh1
                integral = obs.xhat3 if scn.observer == "hosmo" else 0.0
            s = law.surface(y, xh2, xr)
            if scn.controller == "sto_rtmf":
                K2 = 0.0 if scn.observer_bypass else og.K2
                v, new_c = maglev_v_sto((xh1, xh2), xr, e1, s, cstate, scn.gains, dt, K2=K2, law=law)
            else:
                L2 = 0.0 if scn.observer_bypass else og.L2
                v, new_c = maglev_v_hosmo((xh1, xh2), xr, e1, s, cstate, scn.gains, integral, dt, L2=L2, law=law)
            u = ff + v
        if scn.saturation:
            u = saturate(u, limits)

        y_r = c_r * xr[0]
        rows.append((t, y, y_r, y - y_r, x1, x2, xh1, xh2, s, u, v, w, y - xh1, x2 - xh2))
        if scn.observer == "hosmo":
            xhat3_hist.append(obs.xhat3)
        if k == N:
            break

        d1, d2 = plant_f(x1, x2, u, w)
        xr_dot2 = ar[0] * xr[0] + ar[1] * xr[1] + ar[2] * xr[2] + B_r[2] * r
        xr = [xr[0] + dt * xr[1], xr[1] + dt * xr[2], xr[2] + dt * xr_dot2]
        x1 += dt * d1
        x2 += dt * d2
        if obs is not None:
            obs = sto_step(obs, y, u, dt) if scn.observer == "sto" else hosmo_step(obs, y, u, dt)
        cstate = new_c
        if scn.controller == "generic_sta":
            omega = omega_next
        t_next = (k + 1) * dt
        states = [x1, x2, u]
        if obs is not None:
            states += [obs.xhat1, obs.xhat2]
        if not all(math.isfinite(q) and abs(q) <= BLOWUP for q in states):
            raise DivergenceError("state exceeded blow-up threshold", t_next)

    extras = {}
    if xhat3_hist:
        extras["xhat3"] = np.array(xhat3_hist)
    if eta_hist:
        extras["eta"] = np.array(eta_hist)
    return Trajectory(data=np.array(rows, dtype=float), extras=extras)


def observer_convergence_time(tr: Trajectory, e1_tol: float = E1_TOL, e2_tol: float = E2_TOL):
    """Earliest sample time after which both observer errors stay in band.

    Returns ``None`` if the bands are still violated at the last sample.
    """
    bad = (np.abs(tr.e1) > e1_tol) | (np.abs(tr.e2) > e2_tol)
    idx = np.flatnonzero(bad)
    if idx.size == 0:
        return float(tr.t[0])
    last = idx[-1]
    if last == len(tr) - 1:
        return None
    return float(tr.t[last + 1])


def compute_metrics(tr: Trajectory, t_steady: float) -> Metrics:
    t = tr.t
    t_end = float(t[-1])
    if not t_steady < t_end:
        raise ValueError(f"steady window is empty (t_steady={t_steady} >= t_end={t_end})")
    mask = t >= t_steady - 1e-12
    if mask.sum() < 2:
        raise ValueError("steady window holds fewer than two samples")
    e = tr.e[mask]
    u = tr.u[mask]
    s = tr.s[mask]
    return Metrics(
        tracking_rms_steady=float(np.sqrt(np.mean(e * e))),
        sliding_band=float(np.max(np.abs(s))),
        observer_T_conv=observer_convergence_time(tr),
        control_tv_rate=float(np.sum(np.abs(np.diff(u))) / (t_end - t_steady)),
        max_abs_u=float(np.max(np.abs(u))),
        t_steady=float(t_steady),
    )


def run(scn: Scenario) -> tuple[Trajectory, Metrics]:
    tr = simulate(scn)
    return tr, compute_metrics(tr, scn.steady_start)


RATIO_KEYS = ("tracking_rms_steady", "sliding_band", "control_tv_rate", "max_abs_u")


def _ratio(b: float, a: float) -> float:
    if a == b:
        return 1.0
    if a == 0:
        return math.inf
    return b / a


@dataclass(frozen=True)
class ComparisonReport:
    label_a: str
    label_b: str
    metrics_a: Metrics
    metrics_b: Metrics
    ratios: dict

    @property
    def verdicts(self) -> list[str]:
        a, b = self.metrics_a, self.metrics_b
        yn = lambda flag: "yes" if flag else "no"  # noqa: E731
        return [
            f"{self.label_b} smoother: {yn(b.control_tv_rate < a.control_tv_rate)}",
            f"{self.label_b} more precise: {yn(b.sliding_band < a.sliding_band)}",
            f"{self.label_b} tracks better: {yn(b.tracking_rms_steady < a.tracking_rms_steady)}",
        ]

    def to_dict(self) -> dict:
        return {
            "a": {"label": self.label_a, **self.metrics_a.to_dict()},
            "b": {"label": self.label_b, **self.metrics_b.to_dict()},
            "ratios_b_over_a": self.ratios,
            "verdicts": self.verdicts,
        }

    def to_text(self) -> str:
        out = [f"{'metric':<22}{self.label_a:>18}{self.label_b:>18}{'b/a':>12}"]
        for k in RATIO_KEYS:
            out.append(f"{k:<22}{getattr(self.metrics_a, k):>18.6g}{getattr(self.metrics_b, k):>18.6g}{self.ratios[k]:>12.4g}")
        out.extend(self.verdicts)
        return "\n".join(out) + "\n"


def compare(scn_a: Scenario, scn_b: Scenario) -> ComparisonReport:
    if scn_a.t_end != scn_b.t_end or scn_a.steady_start != scn_b.steady_start:
        raise ScenarioError(f"mismatched horizons: t_end {scn_a.t_end} vs {scn_b.t_end}")
    if scn_a.command != scn_b.command or scn_a.disturbance != scn_b.disturbance:
        raise ScenarioError("scenarios must share the command and the disturbance")
    _, ma = run(scn_a)
    _, mb = run(scn_b)
    la, lb = scn_a.label(), scn_b.label()
    if la == lb:
        la, lb = f"{la}(a)", f"{lb}(b)"
    ratios = {k: _ratio(getattr(mb, k), getattr(ma, k)) for k in RATIO_KEYS}
    return ComparisonReport(la, lb, ma, mb, ratios)
