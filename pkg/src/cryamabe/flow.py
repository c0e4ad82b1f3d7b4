"""Explicit time integration of ``d lambda / dt = -W``.

Stability near the poles
------------------------
The sublaplacian carries ``tan^2 d_xi1^2`` and ``cot^2 d_xi2^2``, whose
symbol ``(tan(eta) k1 - cot(eta) k2)^2`` is unbounded as ``eta`` approaches
0 or pi/2.  An explicit step restricted by that symbol would scale like
``h^4``.  Instead, in every ``eta`` row the tendency is projected onto the
Fourier modes with ``|tan(eta) k1 - cot(eta) k2| <= kappa pi / h_eta``.  The
dropped modes of a smooth field decay like ``sin(eta)^|k2|`` (resp.
``cos(eta)^|k1|``), so the projection costs nothing at the resolved scales and
the step obeys the ordinary ``h_eta^2`` limit.

Since the tendency has no component outside the band, those modes of
``lambda`` are constant in time.  :func:`run` restores them from the initial
spectrum after every step; otherwise the round-off of each update would
random-walk in exactly the modes the operators amplify most.
"""
from __future__ import annotations

import json
import logging
import math
from collections import deque
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from .calculus import FrameCalculus
from .errors import ConfigurationError, HypothesisError, StepFailure, UsageError
from .fieldio import read_field_binary, read_field_csv, write_snapshot
from .harnack import differential_residual_field, harnack_base, require_positive
from .initial_data import TorsionFreeParams, torsion_free_lambda
from .polynomial import random_smooth_field
from .sphere import HopfGrid, build_grid
from .timeseries import backward_weights, central_weights, check_uniform, combine
from .transform import DiagnosticsRecord, PseudohermitianState

log = logging.getLogger(__name__)

INTEGRATORS = ("rk4", "euler")
DEFAULT_FILTER = 1.5
W_STEP_CAP = 0.1
TRACE_COLUMNS = ("t", "dt", "min_W", "max_W", "min_Y", "max_abs_A11",
                 "max_abs_W0", "max_abs_W11", "res_2_7", "res_2_8")
HARNACK_COLUMNS = ("t", "min_Y", "argmin_eta", "argmin_xi1", "argmin_xi2", "min_diff_residual")

DEFAULT_TOLERANCES = {
    "monotone_rel": 1e-8,
    "lower_bound_abs": 1e-6,
    "harnack_abs": 1e-6,
}


@lru_cache(maxsize=16)
def _polar_mask(grid: HopfGrid, kappa: float):
    k1 = np.fft.fftfreq(grid.n_xi1, 1.0 / grid.n_xi1)[None, :, None]
    k2 = np.fft.rfftfreq(grid.n_xi2, 1.0 / grid.n_xi2)[None, None, :]
    return np.abs(grid.tan * k1 - grid.cot * k2) <= kappa * np.pi / grid.h_eta


def polar_filter(grid: HopfGrid, f, kappa=DEFAULT_FILTER):
    """Project ``f`` onto the modes resolved by the ``eta`` spacing."""
    if not kappa:
        return f
    mask = _polar_mask(grid, float(kappa))
    F = np.fft.rfft2(f, axes=(1, 2))
    return np.fft.irfft2(F * mask, s=f.shape[1:], axes=(1, 2))


def out_of_band(grid: HopfGrid, lam, kappa=DEFAULT_FILTER):
    """Row spectrum of ``lam`` outside the resolved band (the part a step never changes)."""
    if not kappa:
        return None
    return np.where(_polar_mask(grid, float(kappa)), 0.0, np.fft.rfft2(lam, axes=(1, 2)))


def _restore(grid, lam, anchor, kappa):
    mask = _polar_mask(grid, float(kappa))
    F = np.where(mask, np.fft.rfft2(lam, axes=(1, 2)), anchor)
    return np.fft.irfft2(F, s=lam.shape[1:], axes=(1, 2))


def tendency(state: PseudohermitianState, kappa=DEFAULT_FILTER):
    return -polar_filter(state.grid, state.W, kappa)


def step(state: PseudohermitianState, dt, integrator="rk4", kappa=DEFAULT_FILTER, anchor=None):
    """Advance ``lambda`` by one step; RK4 re-evaluates W at every stage.

    ``anchor`` (from :func:`out_of_band`) pins the unresolved modes.
    """
    if not dt > 0:
        raise UsageError(f"time step must be positive, got {dt}")
    if integrator not in INTEGRATORS:
        raise UsageError(f"unknown integrator {integrator!r}")
    lam = state.lam
    k1 = tendency(state, kappa)
    if integrator == "euler":
        new = lam + dt * k1
    else:
        def stage(x):
            return tendency(state.with_lambda(x, state.t), kappa)
        k2 = stage(lam + 0.5 * dt * k1)
        k3 = stage(lam + 0.5 * dt * k2)
        k4 = stage(lam + dt * k3)
        new = lam + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if anchor is not None and kappa:
        new = _restore(state.grid, new, anchor, kappa)
    if not np.all(np.isfinite(new)):
        raise StepFailure(f"non-finite lambda after step at t = {state.t + dt:.6g}", state)
    return state.with_lambda(new, state.t + dt)


def adaptive_dt(state: PseudohermitianState, sigma, h_min=None):
    """``sigma h^2 / (4 max exp(-2 lambda))``, capped by ``dt max W <= 0.1``."""
    if h_min is None:
        h_min = state.grid.h_eta
    dt = sigma * h_min**2 / (4.0 * float(np.max(np.exp(-2.0 * state.lam))))
    w_max = float(np.max(state.W))
    if w_max > 0:
        dt = min(dt, W_STEP_CAP / w_max)
    return dt


def collapse_predicted(state: PseudohermitianState, dt):
    """True when the first-order predictor drives ``exp(2 lambda)`` to zero."""
    return bool(np.any(np.exp(2.0 * state.lam) * (1.0 - 2.0 * dt * state.W) <= 0.0))


@dataclass
class Perturbation:
    """Smooth random perturbation added to the initial conformal factor."""

    amplitude: float = 0.0
    seed: int = 0
    degree: int = 2

    def field(self, grid):
        if not self.amplitude:
            return 0.0
        f, _ = random_smooth_field(self.seed, self.degree, grid)
        return self.amplitude * f


@dataclass
class FlowConfig:
    grid: HopfGrid
    initial: TorsionFreeParams | None = None
    initial_file: str | None = None
    perturbation: Perturbation = field(default_factory=Perturbation)
    t_end: float = 0.25
    sigma: float = 0.25
    integrator: str = "rk4"
    w_cap: float = 1e4
    t_min: float = 0.01
    snapshots_every: float | None = None
    snapshot_times: tuple = ()
    dt: float | None = None
    polar_filter: float = DEFAULT_FILTER
    order: int = 8
    cartan: bool = False
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    out: str | None = None
    keep_snapshots: bool = True

    def __post_init__(self):
        if not self.t_end > 0:
            raise ConfigurationError(f"t_end must be positive, got {self.t_end}")
        if not 0 < self.sigma <= 1:
            raise ConfigurationError(f"sigma must lie in (0, 1], got {self.sigma}")
        if not self.w_cap > 0:
            raise ConfigurationError(f"w_cap must be positive, got {self.w_cap}")
        if self.integrator not in INTEGRATORS:
            raise ConfigurationError(f"integrator must be one of {INTEGRATORS}")
        if self.dt is not None and not self.dt > 0:
            raise ConfigurationError(f"dt must be positive, got {self.dt}")
        if self.snapshots_every is not None and not self.snapshots_every > 0:
            raise ConfigurationError("snapshots_every must be positive")
        if self.initial is not None and self.initial_file is not None:
            raise ConfigurationError("give initial parameters or an initial file, not both")
        self.snapshot_times = tuple(sorted(float(t) for t in self.snapshot_times))
        self.tolerances = {**DEFAULT_TOLERANCES, **self.tolerances}

    @classmethod
    def from_dict(cls, d, base_dir="."):
        d = dict(d)
        try:
            g = d.pop("grid")
        except KeyError:
            raise ConfigurationError("config needs a 'grid' entry") from None
        grid = build_grid(*g) if isinstance(g, (list, tuple)) else HopfGrid.from_dict(g)
        init = d.pop("initial", None)
        kw = {}
        if isinstance(init, dict) and "file" in init:
            path = Path(init["file"])
            kw["initial_file"] = str(path if path.is_absolute() else Path(base_dir) / path)
        elif init is not None:
            kw["initial"] = TorsionFreeParams.from_dict(init)
        if "perturbation" in d:
            kw["perturbation"] = Perturbation(**d.pop("perturbation"))
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        return cls(grid=grid, **kw, **d)

    @classmethod
    def from_json(cls, path):
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from None
        return cls.from_dict(data, base_dir=path.parent)

    def to_dict(self):
        d = {k: v for k, v in asdict(self).items() if k not in ("grid", "initial", "initial_file")}
        d["grid"] = self.grid.to_dict()
        if self.initial is not None:
            d["initial"] = self.initial.to_dict()
        elif self.initial_file is not None:
            d["initial"] = {"file": self.initial_file}
        d["snapshot_times"] = list(self.snapshot_times)
        return d

    def initial_lambda(self):
        grid = self.grid
        if self.initial_file is not None:
            path = Path(self.initial_file)
            lam = read_field_csv(path, grid) if path.suffix == ".csv" else read_field_binary(path, grid)
            if np.iscomplexobj(lam):
                raise ConfigurationError(f"{path}: the conformal factor must be real")
        elif self.initial is not None:
            lam = torsion_free_lambda(self.initial, grid)
        else:
            lam = np.zeros(grid.shape)
        return lam + self.perturbation.field(grid)


@dataclass
class TerminalEvent:
    kind: str  # completed | w_cap | collapse | step_failure
    t: float
    message: str = ""

    @property
    def numerical(self):
        return self.kind != "completed"


@dataclass
class Snapshot:
    t: float
    lam: np.ndarray
    path: str | None = None


@dataclass
class FlowResult:
    config: FlowConfig
    trace: list
    harnack: list
    snapshots: list
    event: TerminalEvent
    final_state: PseudohermitianState
    initial_levels: dict
    files: list = field(default_factory=list)

    def column(self, name, rows=None):
        rows = self.trace if rows is None else rows
        return np.array([r[name] for r in rows], dtype=float)


def _monitor(state: PseudohermitianState, cartan=False):
    """Per-level quantities kept in the residual window."""
    w = state.W
    a11 = state.A11
    lap = state.lap_W
    base = harnack_base(state, state.t) if state.t > 0 else None
    y = base - 2.0 * state.grad_W_norm2 / w if base is not None else None
    return {
        "t": state.t, "W": w, "A11": a11, "state": state,
        "rhs_2_7": 4.0 * lap + 2.0 * w * w,
        "rhs_2_8": 2.0 * w * a11 - 2j * state.W11,
        "Y": y,
        "diag": state.diagnostics(cartan=cartan),
    }


def _row(cur, dt, w_dot, a_dot):
    d: DiagnosticsRecord = cur["diag"]
    row = {
        "t": cur["t"], "dt": dt,
        "min_W": float(np.min(cur["W"])), "max_W": float(np.max(cur["W"])),
        "min_Y": float(np.min(cur["Y"])),
        "max_abs_A11": d.max_abs_A11, "max_abs_W0": d.max_abs_W0, "max_abs_W11": d.max_abs_W11,
        "res_2_7": float(np.max(np.abs(w_dot - cur["rhs_2_7"]))),
        "res_2_8": float(np.max(np.abs(a_dot - cur["rhs_2_8"]))),
    }
    if d.max_abs_Q11 is not None:
        row["max_abs_Q11"] = d.max_abs_Q11
        row["max_abs_Q11_torsion_free"] = d.max_abs_Q11_torsion_free
    return row


def _harnack_row(cur, w_dot):
    state = cur["state"]
    k = int(np.argmin(cur["Y"]))
    eta, x1, x2 = state.grid.node_coordinates(k)
    resid = differential_residual_field(w_dot, state, cur["t"])
    return {"t": cur["t"], "min_Y": float(cur["Y"].flat[k]), "argmin_eta": eta,
            "argmin_xi1": x1, "argmin_xi2": x2, "min_diff_residual": float(np.min(resid))}


class _Recorder:
    """Streams trace rows; each row needs the level after it for the time derivative."""

    def __init__(self, t_min, cartan):
        self.t_min = t_min
        self.cartan = cartan
        self.window = deque(maxlen=3)
        self.dts = deque(maxlen=3)
        self.trace, self.harnack = [], []

    def push(self, state, dt):
        self.window.append(_monitor(state, self.cartan))
        self.dts.append(dt)
        if len(self.window) == 3:
            a, b, c = self.window
            wts = central_weights(a["t"], b["t"], c["t"])
            self._emit(b, self.dts[1], wts, (a, b, c))

    def finish(self):
        if len(self.window) < 3:
            return
        a, b, c = self.window
        self._emit(c, self.dts[2], backward_weights(a["t"], b["t"], c["t"]), (a, b, c))

    def _emit(self, cur, dt, wts, levels):
        if cur["t"] <= 0:
            return
        w_dot = combine(wts, [lv["W"] for lv in levels])
        a_dot = combine(wts, [lv["A11"] for lv in levels])
        self.trace.append(_row(cur, dt, w_dot, a_dot))
        if cur["t"] >= self.t_min - 1e-15:
            self.harnack.append(_harnack_row(cur, w_dot))


def _targets(cfg: FlowConfig):
    marks = set(t for t in cfg.snapshot_times if 0 < t <= cfg.t_end)
    if cfg.snapshots_every:
        k = 1
        while k * cfg.snapshots_every <= cfg.t_end * (1 + 1e-12):
            marks.add(min(k * cfg.snapshots_every, cfg.t_end))
            k += 1
    return sorted(marks)


def initial_levels(state: PseudohermitianState, cartan=False):
    """t = 0 values of the monitored quantities (their discretization level
    when the exact values vanish)."""
    d = state.diagnostics(cartan=cartan)
    levels = {k: v for k, v in d.to_dict().items() if isinstance(v, float)}
    levels["min_W"] = float(np.min(state.W))
    levels["max_W"] = float(np.max(state.W))
    levels["max_abs_lap_W"] = float(np.max(np.abs(state.lap_W)))
    return levels


def run(cfg: FlowConfig) -> FlowResult:
    grid = cfg.grid
    calc = FrameCalculus(grid, order=cfg.order)
    state = PseudohermitianState(calc, cfg.initial_lambda(), 0.0)
    require_positive(state)
    out = Path(cfg.out) if cfg.out else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
    extra = {"params": cfg.initial.to_dict()} if cfg.initial is not None else {}

    snapshots, files = [], []

    def snap(s):
        path = None
        if out:
            stem = out / f"snapshot_{len(snapshots):04d}"
            jp, bp = write_snapshot(stem, grid, s.t, {"lambda": s.lam, "W": s.W, "A11": s.A11}, extra)
            files.extend([jp.name, bp.name])
            path = str(jp)
        snapshots.append(Snapshot(s.t, np.array(s.lam) if cfg.keep_snapshots else None, path))

    levels = initial_levels(state, cartan=cfg.cartan)
    anchor = out_of_band(grid, state.lam, cfg.polar_filter)
    rec = _Recorder(cfg.t_min, cfg.cartan)
    rec.push(state, 0.0)
    snap(state)
    targets = deque(t for t in _targets(cfg) if t > 0)
    n_fixed = None
    if cfg.dt is not None:
        n_fixed = round(cfg.t_end / cfg.dt)
        if abs(n_fixed * cfg.dt - cfg.t_end) > 1e-9 * cfg.t_end:
            raise ConfigurationError("with a fixed dt, t_end must be a whole number of steps")
    event = None
    k = 0
    while event is None:
        if n_fixed is not None:
            if k >= n_fixed:
                break
            t_next = cfg.t_end if k + 1 == n_fixed else (k + 1) * cfg.dt
            dt = t_next - state.t
        else:
            if state.t >= cfg.t_end * (1 - 1e-14):
                break
            dt = adaptive_dt(state, cfg.sigma)
            limit = targets[0] if targets else cfg.t_end
            if state.t + dt >= limit - 1e-12 * limit:
                dt = limit - state.t
            t_next = state.t + dt
        if float(np.max(state.W)) > cfg.w_cap:
            event = TerminalEvent("w_cap", state.t, f"max W exceeded {cfg.w_cap:g}")
            break
        if collapse_predicted(state, dt):
            event = TerminalEvent("collapse", state.t, "predicted exp(2 lambda) <= 0")
            break
        try:
            new = step(state, dt, cfg.integrator, cfg.polar_filter, anchor)
            new.t = t_next
            if not np.all(np.isfinite(new.W)):
                raise StepFailure(f"non-finite W at t = {t_next:.6g}", state)
        except StepFailure as exc:
            event = TerminalEvent("step_failure", state.t, str(exc))
            break
        state = new
        k += 1
        rec.push(state, dt)
        while targets and state.t >= targets[0] - 1e-12 * max(1.0, targets[0]):
            targets.popleft()
            snap(state)
    rec.finish()
    if event is None:
        event = TerminalEvent("completed", state.t)
    if not snapshots or snapshots[-1].t != state.t:
        snap(state)
    result = FlowResult(cfg, rec.trace, rec.harnack, snapshots, event, state, levels, files)
    if out:
        write_trace(out / "trace.csv", result.trace)
        write_harnack(out / "harnack.csv", result.harnack)
        files.extend(["trace.csv", "harnack.csv"])
    log.info("flow stopped: %s at t=%.6g after %d steps", event.kind, state.t, k)
    return result


def _write_rows(path, columns, rows):
    import csv
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for r in rows:
            w.writerow([repr(float(r[c])) for c in columns])


def write_trace(path, rows):
    _write_rows(path, TRACE_COLUMNS, rows)


def write_harnack(path, rows):
    _write_rows(path, HARNACK_COLUMNS, rows)


def read_rows(path):
    import csv
    with open(path, newline="") as fh:
        return [{k: float(v) for k, v in r.items()} for r in csv.DictReader(fh)]


def evolution_residuals(states) -> DiagnosticsRecord:
    """Central-difference check of the W and A11 evolution equations.

    ``states`` must be at least three levels with a uniform step.  The
    residuals are maxima over the interior levels.
    """
    check_uniform([s.t for s in states])
    r7 = r8 = 0.0
    for a, b, c in zip(states, states[1:], states[2:]):
        wts = central_weights(a.t, b.t, c.t)
        w_dot = combine(wts, (a.W, b.W, c.W))
        a_dot = combine(wts, (a.A11, b.A11, c.A11))
        r7 = max(r7, float(np.max(np.abs(w_dot - 4.0 * b.lap_W - 2.0 * b.W**2))))
        r8 = max(r8, float(np.max(np.abs(a_dot - 2.0 * b.W * b.A11 + 2j * b.W11))))
    return DiagnosticsRecord(res_2_7=r7, res_2_8=r8)


def scalar_solution(w0, t):
    """Curvature of the spatially constant solution: ``w0 / (1 - 2 w0 t)``."""
    return w0 / (1.0 - 2.0 * w0 * np.asarray(t, dtype=float))


def blowup_time(w0):
    return math.inf if w0 <= 0 else 1.0 / (2.0 * w0)
