"""Scenario catalog, experiment driver, diagnostics and data export."""

from __future__ import annotations

import csv
import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .core import (ConfigError, MeshState, ProblemSpec, RunConfig, TauPolicy,
                   pack_state, unpack_state)
from .integrator import (IntegratorConfig, StepRecord,
                         consistent_initial_derivatives, integrate,
                         make_system)
from .meshdyn import defect, equidistribute_initial
from .monitor import monitor_field, monitor_values

# Reference blow-up times used by the acceptance checks.
T_STAR_P2 = 0.08243786
T_STAR_P2_N40_FIXED = 0.082283
T_STAR_P5 = 1.5625962e-6

# Blow-up runs need steps far below 1e-16: near t* the accuracy-limited step
# scales like 1/u_max.
BLOWUP_MIN_STEP = 1e-24


@dataclass(frozen=True)
class Scenario:
    """A named problem with its default run configuration.

    ``amplitude`` sets the initial data ``amplitude * sin(pi x)`` of the
    coupled problems; prescribed examples take ``u(x, 0)`` from the formula.
    """

    id: str
    description: str
    spec: ProblemSpec
    config: RunConfig
    amplitude: Optional[float] = None
    initial_mesh: str = "equidistributed"

    def initial_data(self, x):
        x = np.asarray(x, dtype=float)
        if self.spec.prescribed:
            from .physics import PrescribedSolution
            return PrescribedSolution(self.spec.example)(x, 0.0)
        u = self.amplitude * np.sin(np.pi * x)
        u[..., 0] = u[..., -1] = 0.0
        return u

    def with_config(self, config: RunConfig) -> "Scenario":
        return Scenario(self.id, self.description, self.spec, config,
                        self.amplitude, self.initial_mesh)

    def override(self, **changes) -> "Scenario":
        return self.with_config(self.config.replace(**changes))


def _example(eid, t_end, text):
    spec = ProblemSpec("prescribed", "arclength", example=eid)
    cfg = RunConfig(N=100, mmpde="MMPDE6", tau=TauPolicy.fixed(1e-3),
                    gamma=2.0, ip=4, t_end=t_end)
    return Scenario(eid, text, spec, cfg, initial_mesh="uniform")


def _blowup(sid, spec, amplitude, ip, t_end, decades, text):
    cfg = RunConfig(N=200, mmpde="MMPDE6", tau=TauPolicy.adaptive(),
                    gamma=2.0, ip=ip, t_end=t_end, decades=decades,
                    min_step=BLOWUP_MIN_STEP)
    return Scenario(sid, text, spec, cfg, amplitude=amplitude)


SCENARIOS = {s.id: s for s in (
    _example("example1", 10.0,
             "mesh-only: exp(-10 pi^2 t) sin(pi x), relaxes to uniform"),
    _example("example2", 1.0,
             "mesh-only: two decay rates, exp(-pi^2 t) and exp(-100 pi^2 t)"),
    _example("example3", 0.4 - 1e-5,
             "mesh-only: Gaussian that blows up at x=0.5, t=0.4"),
    _blowup("blowup_p2", ProblemSpec("power", "power", p=2.0), 20.0, 0, 1.0,
            tuple(range(1, 21)), "u_t = u_xx + u^2, u0 = 20 sin(pi x)"),
    _blowup("blowup_p5", ProblemSpec("power", "power", p=5.0), 20.0, 4, 1e-5,
            tuple(range(1, 11)), "u_t = u_xx + u^5, u0 = 20 sin(pi x)"),
    _blowup("blowup_exp", ProblemSpec("exponential", "exponential"), 5.0, 4,
            1.0, (1,), "u_t = u_xx + exp(u), u0 = 5 sin(pi x)"),
)}


def get_scenario(sid: str) -> Scenario:
    try:
        return SCENARIOS[sid]
    except KeyError:
        raise ConfigError(f"unknown scenario {sid!r}; choose one of "
                          f"{', '.join(SCENARIOS)}", "scenario") from None


# --- results ----------------------------------------------------------------

@dataclass
class Snapshot:
    decade: int
    t: float
    u: np.ndarray
    x: np.ndarray
    u_max: float


@dataclass
class RunResult:
    scenario: Scenario
    t_end: float
    u_max_final: float
    termination: str
    message: str
    snapshots: list = field(default_factory=list)
    tau_history: list = field(default_factory=list)
    step_history: list = field(default_factory=list)
    times: np.ndarray = None
    meshes: np.ndarray = None
    values: np.ndarray = None
    u_final: np.ndarray = None
    x_final: np.ndarray = None
    wall_clock_seconds: float = 0.0

    @property
    def config(self) -> RunConfig:
        return self.scenario.config

    @property
    def n_accepted(self) -> int:
        return sum(1 for s in self.step_history if not s.failed)


def _initial_mesh(scn: Scenario) -> MeshState:
    if scn.initial_mesh == "uniform":
        return MeshState.uniform(scn.config.N)
    return equidistribute_initial(scn.initial_data, scn.spec, scn.config)


def integrator_config(config: RunConfig) -> IntegratorConfig:
    return IntegratorConfig(rtol=config.rtol, atol=config.atol,
                            max_order=config.max_order,
                            min_step=config.min_step,
                            max_error_failures=config.max_error_failures,
                            max_newton=config.max_newton)


def run_experiment(scenario, on_step: Callable = None) -> RunResult:
    """Integrate one scenario to ``t_end`` or to its failure cascade.

    ``scenario`` is a :class:`Scenario` or a catalog id. Snapshots are taken
    at the first accepted step whose ``u_max`` reaches each configured
    decade ``10**n``.
    """
    scn = get_scenario(scenario) if isinstance(scenario, str) else scenario
    cfg = scn.config
    tic = time.perf_counter()
    system = make_system(scn.spec, cfg)
    mesh = _initial_mesh(scn)
    if scn.spec.prescribed:
        y0 = mesh.nodes.copy()
    else:
        y0 = pack_state(scn.initial_data(mesh.nodes), mesh)
    yd0 = consistent_initial_derivatives(system, 0.0, y0)

    def split(t, y):
        if scn.spec.prescribed:
            return system.values(t, y), y
        return unpack_state(y)

    pending = sorted(set(cfg.decades))
    u_init, x_init = split(0.0, y0)
    snapshots, taus = [], []
    times, meshes, values = [0.0], [x_init.copy()], [u_init.copy()]

    def record(t, y):
        u, x = split(t, y)
        umax = float(np.max(u))
        while pending and umax >= 10.0 ** pending[0]:
            snapshots.append(Snapshot(pending.pop(0), float(t), u.copy(),
                                      x.copy(), umax))
        return umax

    record(0.0, y0)
    taus.append((0.0, float(system.tau(0.0, y0))))

    def hook(t, y, yd, rec):
        t = float(t)
        record(t, y)
        u, x = split(t, y)
        times.append(t)
        meshes.append(x.copy())
        values.append(u.copy())
        taus.append((t, float(system.tau(t, y))))
        return on_step(t, y, yd, rec) if on_step is not None else False

    res = integrate(system, 0.0, y0, yd0, cfg.t_end, integrator_config(cfg),
                    on_step=hook)
    t_final = float(res.t)
    u, x = split(t_final, res.y)
    return RunResult(
        scenario=scn, t_end=t_final, u_max_final=float(np.max(u)),
        termination=res.termination.reason,
        message=res.termination.message, snapshots=snapshots,
        tau_history=taus, step_history=list(res.steps),
        times=np.array(times), meshes=np.array(meshes),
        values=np.array(values), u_final=u.copy(),
        x_final=x.copy(), wall_clock_seconds=time.perf_counter() - tic)


# --- diagnostics ------------------------------------------------------------

def self_similar_transform(u, u_max, spec: ProblemSpec):
    """Profile variable that tends to ``cos^2(pi (xi - 1/2))`` near blow-up.

    ``(u / u_max)^(p-1)`` for power problems, ``exp(u - u_max)`` for the
    exponential one and ``u / u_max`` otherwise.
    """
    u = np.asarray(u, dtype=float)
    if spec.nonlinearity == "exponential":
        return np.exp(u - u_max)
    if spec.nonlinearity == "power":
        return np.abs(u / u_max) ** (spec.p - 1.0)
    return u / u_max


def self_similar_profile(xi):
    return np.cos(np.pi * (np.asarray(xi, dtype=float) - 0.5)) ** 2


def self_similarity_deviation(snapshot, spec: ProblemSpec) -> float:
    """Largest interior distance from the asymptotic blow-up profile.

    The profile is expressed in the computational coordinate ``xi_i = i/N``.
    """
    u = np.asarray(snapshot.u, dtype=float)
    xi = np.linspace(0.0, 1.0, u.size)
    g = self_similar_transform(u, snapshot.u_max, spec)
    return float(np.max(np.abs(g[1:-1] - self_similar_profile(xi[1:-1]))))


def defect_history(result: RunResult) -> np.ndarray:
    """``max_i |E_i|`` at every stored mesh of a run."""
    cfg = result.config
    spec = result.scenario.spec
    m = monitor_field(monitor_values(spec, result.values, result.meshes),
                      cfg.gamma, cfg.ip, cfg.monitor_floor)
    return np.abs(defect(result.meshes, m)).max(axis=-1)


def nodes_in_peak(u) -> int:
    """Number of nodes at or above half the peak height."""
    u = np.asarray(u, dtype=float)
    return int(np.count_nonzero(u >= 0.5 * u.max()))


def refinement_study(scenario, Ns: Sequence[int], **overrides) -> list[dict]:
    """One run per ``N``; a failed run is recorded and the study continues."""
    scn = get_scenario(scenario) if isinstance(scenario, str) else scenario
    if len(Ns) < 2:
        raise ConfigError("a refinement study needs at least two N values",
                          "N")
    rows = []
    for N in Ns:
        row = {"N": int(N), "t_star": float("nan"),
               "u_max_final": float("nan"), "wall_clock_seconds": 0.0,
               "termination": "", "error": ""}
        try:
            r = run_experiment(scn.override(N=int(N), **overrides))
        except Exception as exc:  # recorded per row
            row["error"] = f"{type(exc).__name__}: {exc}"
        else:
            row.update(t_star=r.t_end, u_max_final=r.u_max_final,
                       wall_clock_seconds=r.wall_clock_seconds,
                       termination=r.termination)
        rows.append(row)
    return rows


def compare(scenario, Ns: Sequence[int], fixed_tau: float = 1e-5,
            adaptive: TauPolicy = None, **overrides) -> list[dict]:
    """Matched fixed-tau and adaptive-tau runs, executed one after another.

    Runs are strictly sequential so the wall-clock ratios are comparable.
    """
    scn = get_scenario(scenario) if isinstance(scenario, str) else scenario
    adaptive = adaptive or TauPolicy.adaptive()
    rows = []
    for N in Ns:
        base = scn.override(N=int(N), **overrides)
        rf = run_experiment(base.override(tau=TauPolicy.fixed(fixed_tau)))
        ra = run_experiment(base.override(tau=adaptive))
        rows.append({
            "N": int(N),
            "t_star_fixed": rf.t_end, "t_star_adaptive": ra.t_end,
            "u_max_fixed": rf.u_max_final, "u_max_adaptive": ra.u_max_final,
            "seconds_fixed": rf.wall_clock_seconds,
            "seconds_adaptive": ra.wall_clock_seconds,
            "time_ratio": ra.wall_clock_seconds / rf.wall_clock_seconds,
            "u_max_ratio": ra.u_max_final / rf.u_max_final,
        })
    return rows


# --- export -----------------------------------------------------------------

def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _write_csv(path: Path, header, rows):
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def summary(result: RunResult) -> dict:
    return {
        "scenario": result.scenario.id,
        "t_star": result.t_end,
        "u_max_final": result.u_max_final,
        "wall_clock_seconds": result.wall_clock_seconds,
        "termination": result.termination,
        "message": result.message,
        "accepted_steps": result.n_accepted,
        "failed_steps": len(result.step_history) - result.n_accepted,
        "snapshot_decades": [s.decade for s in result.snapshots],
        "config": result.config.to_items(),
    }


def export(result: RunResult, out_dir) -> Path:
    """Write the run's data files into ``out_dir`` and return that path."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") \
            from exc
    t_star = result.t_end
    N = result.config.N
    _write_csv(out / "trajectories.csv",
               ["t", "t_star_minus_t"] + [f"x_{i}" for i in range(N + 1)],
               ([t, t_star - t, *x] for t, x in
                zip(result.times, result.meshes)))
    spec = result.scenario.spec
    snap_rows = []
    for s in result.snapshots:
        xi = np.linspace(0.0, 1.0, s.u.size)
        g = self_similar_transform(s.u, s.u_max, spec)
        prof = self_similar_profile(xi)
        for i in range(s.u.size):
            snap_rows.append([s.decade, s.t, s.u_max, i, xi[i], s.x[i],
                              s.u[i], g[i], prof[i]])
    _write_csv(out / "snapshots.csv",
               ["decade", "t", "u_max", "i", "xi", "x", "u", "transform",
                "profile"], snap_rows)
    _write_csv(out / "tau.csv", ["t", "tau"], result.tau_history)
    _write_csv(out / "steps.csv",
               ["t", "dt", "order", "newton_iters", "failed", "reason"],
               ([s.t, s.dt, s.order, s.newton_iters, int(s.failed),
                 s.reason] for s in result.step_history))
    path = out / "summary.json"
    try:
        path.write_text(json.dumps(summary(result), indent=2) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return out


def default_output_dir() -> Path:
    return Path(os.environ.get("MMRELAX_OUT", "mmrelax_out"))
