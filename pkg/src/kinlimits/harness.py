"""Experiment configuration, epsilon sweeps and report emission."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, Optional

import numpy as np
import yaml

from .fluid_reference import (
    NoContraction,
    euler_residual,
    l2,
    solve_stationary_nsf,
    solve_stationary_stokes,
    state_from_fields,
)
from .kinetic_model import BgkOperator, RegimeClass, classify_regime, default_source, solve_hats, transport_coefficients
from .kinetic_solver import (
    KineticSolver,
    NotConverged,
    SolverConfig,
    StationarySolver,
    build_velocity_grid,
    extract_moments,
    save_checkpoint,
)

log = logging.getLogger(__name__)

CSV_SCHEMA_VERSION = 1
CSV_COLUMNS = (
    "epsilon",
    "u_error",
    "theta_error",
    "boussinesq_residual",
    "div_u_residual",
    "euler_momentum_residual",
    "euler_heat_residual",
    "u3_rms",
    "steps",
    "steady_residual",
    "method",
)
ERROR_FLOOR = 1e-14
METHODS = ("auto", "stepping", "stationary")


class EmptyInput(FileNotFoundError):
    """No sweep report was found under the given paths."""


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    """Everything that determines a sweep; mirrors the YAML keys one to one."""

    r: float = 0.5
    q: float = 0.5
    epsilon_ladder: list[float] = field(default_factory=lambda: [0.2, 0.1, 0.05])
    M: int = 32
    N: int = 8
    nu0: float = 1.0
    amplitude: float = 0.05
    dt_safety: float = 0.5
    steady_tol: float = 1e-6
    max_steps: int = 200_000
    method: str = "auto"
    fluid_tol: float = 1e-12
    output_dir: Optional[str] = None
    snapshots: bool = False

    def __post_init__(self):
        self.epsilon_ladder = [float(e) for e in self.epsilon_ladder]
        if not self.epsilon_ladder:
            raise ConfigError("epsilon_ladder is empty")
        if any(e <= 0 or e > 0.5 for e in self.epsilon_ladder):
            raise ConfigError("every epsilon must lie in (0, 0.5]")
        if any(a <= b for a, b in zip(self.epsilon_ladder, self.epsilon_ladder[1:])):
            raise ConfigError("epsilon_ladder must be strictly decreasing")
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}")
        if self.amplitude < 0:
            raise ConfigError("amplitude must be non-negative")
        if not self.regime.in_scope:
            raise ConfigError(f"(r, q) = ({self.r}, {self.q}) is outside every limit regime")

    @property
    def regime(self):
        return classify_regime(self.r, self.q)

    @classmethod
    def from_yaml(cls, path: str | Path, **overrides) -> "ExperimentConfig":
        path = Path(path)
        try:
            data = yaml.safe_load(path.read_text()) or {}
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: expected a mapping at top level")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**data)

    def echo(self) -> dict:
        out = asdict(self)
        out["regime"] = self.regime.cls.value
        return out

    def solver_config(self, epsilon: float) -> SolverConfig:
        source = default_source(self.M, self.amplitude) if self.amplitude > 0 else None
        return SolverConfig(
            epsilon=epsilon,
            regime=self.regime,
            nu0=self.nu0,
            dt_safety=self.dt_safety,
            steady_tol=self.steady_tol,
            max_steps=self.max_steps,
            source=source,
            M=self.M,
            N=self.N,
        )

    def resolved_method(self) -> str:
        if self.method != "auto":
            return self.method
        # Euler steady states need t ~ eps^(1-q) with dt ~ eps^(1+q): solve directly
        return "stationary" if self.regime.cls is RegimeClass.EULER else "stepping"


@dataclass
class SweepRow:
    epsilon: float
    u_error: float
    theta_error: float
    boussinesq_residual: float
    div_u_residual: float
    euler_momentum_residual: float
    euler_heat_residual: float
    u3_rms: float
    steps: int
    steady_residual: float
    method: str
    wall_time: float = 0.0


@dataclass
class SweepReport:
    regime: dict
    coefficients: dict
    config: dict
    rows: list[SweepRow] = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows], dtype=float)

    @property
    def fitted_orders(self) -> dict[str, Optional[float]]:
        eps = self.column("epsilon")
        names = ("u_error", "theta_error", "boussinesq_residual", "div_u_residual",
                 "euler_momentum_residual", "euler_heat_residual")
        return {n: fit_order(eps, self.column(n)) for n in names}

    @property
    def fitted_order(self) -> Optional[float]:
        key = "euler_heat_residual" if self.regime["class"] == RegimeClass.EULER.value else "u_error"
        return self.fitted_orders[key]

    def csv_text(self) -> str:
        buf = io.StringIO()
        buf.write(f"# kinlimits sweep report, schema_version={CSV_SCHEMA_VERSION}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in self.rows:
            w.writerow([_fmt(getattr(row, c)) for c in CSV_COLUMNS])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "schema_version": CSV_SCHEMA_VERSION,
            "regime": self.regime,
            "coefficients": self.coefficients,
            "config": self.config,
            "fitted_order": _jsonable(self.fitted_order),
            "fitted_orders": {k: _jsonable(v) for k, v in self.fitted_orders.items()},
            "rows": [{k: _jsonable(v) for k, v in asdict(r).items()} for r in self.rows],
        }

    def write(self, out_dir: str | Path) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        csv_path, json_path = out / "report.csv", out / "report.json"
        csv_path.write_text(self.csv_text())
        json_path.write_text(json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n")
        return csv_path, json_path


def _fmt(x: Any) -> str:
    if isinstance(x, float):
        return "nan" if math.isnan(x) else repr(x)
    return str(x)


def _jsonable(x: Any) -> Any:
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def fit_order(eps: np.ndarray, err: np.ndarray) -> Optional[float]:
    """Least-squares slope of ``log err`` against ``log eps``; ``None`` if undefined."""
    eps, err = np.asarray(eps, float), np.asarray(err, float)
    if len(eps) < 2 or not np.all(np.isfinite(err)) or np.any(err <= 0):
        return None
    return float(np.polyfit(np.log(eps), np.log(err), 1)[0])


def exact_coefficients(nu0: float) -> tuple[Fraction, Fraction]:
    tc = transport_coefficients(solve_hats(BgkOperator(Fraction(nu0).limit_denominator(10**6))))
    return tc.kappa, tc.nu


def reference_state(cfg: ExperimentConfig):
    """The regime's comparison target; ``None`` in the Euler regime (residuals only)."""
    if cfg.regime.cls is RegimeClass.EULER or cfg.amplitude == 0:
        return None
    kappa, nu = (float(c) for c in exact_coefficients(cfg.nu0))
    src = default_source(cfg.M, cfg.amplitude)
    if cfg.regime.cls is RegimeClass.NSF:
        return solve_stationary_nsf(src.momentum, src.heat, nu, kappa, tol=cfg.fluid_tol)
    return solve_stationary_stokes(src.momentum, nu, src.heat, kappa)


def _relative(a: np.ndarray, ref: np.ndarray) -> float:
    return l2(a - ref) / max(l2(ref), ERROR_FLOOR)


def solve_point(cfg: ExperimentConfig, epsilon: float, vgrid=None):
    """Steady kinetic state at one epsilon.  Returns ``(g, steps, residual)``."""
    scfg = cfg.solver_config(epsilon)
    if cfg.resolved_method() == "stationary":
        return StationarySolver(scfg, vgrid).solve()
    return KineticSolver(scfg, vgrid).run_to_steady()


def cmd_sweep(cfg: ExperimentConfig, write: bool = True) -> SweepReport:
    """Run the epsilon ladder and compare each steady state with the limit system.

    Raises
    ------
    NotConverged, NoContraction
        With an ``epsilon`` attribute naming the offending ladder point
        (``None`` when the fluid reference itself failed).
    """
    regime = cfg.regime
    kappa, nu = exact_coefficients(cfg.nu0)
    report = SweepReport(
        regime={"r": regime.r, "q": regime.q, "class": regime.cls.value},
        coefficients={"kappa": str(kappa), "nu": str(nu)},
        config=cfg.echo(),
    )
    try:
        ref = reference_state(cfg)
    except NoContraction as exc:
        exc.epsilon = None
        raise
    vgrid = build_velocity_grid(cfg.N)
    method = cfg.resolved_method()
    zero = np.zeros((2, cfg.M, cfg.M))
    for eps in cfg.epsilon_ladder:
        t0 = time.perf_counter()
        try:
            g, steps, residual = solve_point(cfg, eps, vgrid)
        except (NotConverged, NoContraction) as exc:
            exc.epsilon = eps
            raise
        mom = extract_moments(g, vgrid)
        state = state_from_fields(mom.u, mom.theta, mom.rho)
        grid = state.grid
        if cfg.amplitude == 0:
            # both sides vanish identically; the error is the size of the kinetic state
            u_err = _relative(mom.u[:2], zero)
            th_err = _relative(mom.theta, zero[0])
        elif ref is None:
            u_err = th_err = float("nan")
        else:
            u_err = _relative(mom.u[:2], ref.u)
            th_err = _relative(mom.theta, ref.theta)
        # the limit system is unforced in the Euler regime (forcing is higher order)
        e_mom, e_heat = euler_residual(state, zero, zero[0])
        row = SweepRow(
            epsilon=eps,
            u_error=u_err,
            theta_error=th_err,
            boussinesq_residual=l2(grid.ifft(grid.grad(grid.fft(mom.rho + mom.theta)))),
            div_u_residual=l2(grid.ifft(grid.div(grid.fft(mom.u[:2])))),
            euler_momentum_residual=e_mom,
            euler_heat_residual=e_heat,
            u3_rms=l2(mom.u[2]),
            steps=int(steps),
            steady_residual=float(residual),
            method=method,
            wall_time=time.perf_counter() - t0,
        )
        log.info("eps=%g u_err=%.4g theta_err=%.4g steps=%d (%.1fs)", eps, u_err, th_err, steps, row.wall_time)
        report.rows.append(row)
        if write and cfg.output_dir and cfg.snapshots:
            snap = Path(cfg.output_dir) / f"snapshot_eps{eps:g}.npz"
            snap.parent.mkdir(parents=True, exist_ok=True)
            save_checkpoint(snap, g, cfg.solver_config(eps).echo())
    if write and cfg.output_dir:
        report.write(cfg.output_dir)
    return report


@dataclass
class RelaxResult:
    max_deviation: float
    cases: list[dict]

    @property
    def ok(self) -> bool:
        return self.max_deviation < RELAX_TOL


RELAX_TOL = 1e-10


def homogeneous_profile(vgrid) -> np.ndarray:
    """Fixed non-equilibrium velocity profile with a nonzero kernel part."""
    V = vgrid.nodes
    c = vgrid.speed_squared
    return 0.3 + 0.2 * V[:, 0] - 0.1 * c + 0.5 * V[:, 0] * V[:, 1] + 0.25 * V[:, 2] ** 3 - 0.05 * c**2


def cmd_relax_test(
    epsilons: Iterable[float] = (0.2, 0.05),
    qs: Iterable[float] = (0.5, 2.0),
    nu0: float = 1.0,
    decades: float = 3.0,
    steps: int = 60,
    M: int = 4,
    N: int = 8,
) -> RelaxResult:
    """Spatially uniform data must relax as ``exp(-nu0 t / eps^(1+q))`` exactly.

    The linear collision step is checked over ``decades`` orders of decay of
    the non-equilibrium part.  Transport acts trivially on uniform data.
    """
    vgrid = build_velocity_grid(N)
    prof = homogeneous_profile(vgrid)
    g0 = np.broadcast_to(prof, (M, M, prof.size)).copy()
    neq0 = g0 - vgrid.project(g0)
    norm0 = np.sqrt(np.mean(vgrid.inner(neq0, neq0)))
    worst, cases = 0.0, []
    for eps in epsilons:
        for q in qs:
            t_end = decades * math.log(10) * eps ** (1 + q) / nu0
            dt = t_end / steps
            cfg = SolverConfig(
                epsilon=eps, regime=classify_regime(min(q, 0.5), q),
                nu0=nu0, M=M, N=N, dt=dt, collisions_nonlinear=False,
            )
            solver = KineticSolver(cfg, vgrid)
            g, dev = g0, 0.0
            for n in range(1, steps + 1):
                g = solver.step(g)
                neq = g - vgrid.project(g0)
                got = np.sqrt(np.mean(vgrid.inner(neq, neq)))
                want = math.exp(-nu0 * n * dt / eps ** (1 + q)) * norm0
                dev = max(dev, abs(got - want))
            cases.append({"epsilon": eps, "q": q, "max_deviation": float(dev), "final_ratio": float(got / norm0)})
            worst = max(worst, dev)
    return RelaxResult(max_deviation=float(worst), cases=cases)


def cmd_coefficients(nu0: float = 1.0) -> str:
    kappa, nu = exact_coefficients(nu0)
    return f"kappa={kappa} nu={nu}"


def cmd_report(paths: Iterable[str | Path]) -> dict:
    """Merge every ``report.json`` found under ``paths`` into one document."""
    found: list[Path] = []
    for p in map(Path, paths):
        if p.is_dir():
            found.extend(sorted(p.rglob("report.json")))
        elif p.is_file():
            found.append(p)
        else:
            raise FileNotFoundError(f"no such file or directory: {p}")
    if not found:
        raise EmptyInput(f"no report.json under {', '.join(map(str, paths)) or '(nothing)'}")
    runs = []
    for f in found:
        try:
            data = json.loads(f.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ValueError(f"unreadable report {f}: {exc}") from exc
        data["source"] = str(f)
        runs.append(data)
    return {"schema_version": CSV_SCHEMA_VERSION, "runs": runs}
