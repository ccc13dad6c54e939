"""Discrete-velocity solver for the scaled fluctuation equation on the 2D torus.

The unknown ``g(x, v)`` is stored as a real array of shape ``(M, M, N**3)``:
two periodic space axes on ``[0, 2 pi)^2`` followed by a flattened tensor
Gauss-Hermite velocity grid.  The evolution equation is

    eps dg/dt + v.grad g + eps^-q L g = eps^(r-q) Gamma(g, g) + S

with ``L = nu0 (I - P_h)`` and ``Gamma(g, g) = L(g^2) / 2``.  Both stiff parts
are integrated exactly (Fourier phase shifts for transport, exponential
relaxation for collisions), so the time step never has to resolve ``eps``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numpy.polynomial.hermite_e import hermegauss

from .kinetic_model import ScalingRegime, SourceSpec, classify_regime, heat_source_profile
from .moment_algebra import VelocityPolynomial, gaussian_moment

log = logging.getLogger(__name__)

NORM_FLOOR = 1e-14


class QuadratureDegeneracy(RuntimeError):
    pass


class StiffnessOverflow(FloatingPointError):
    pass


class NotConverged(RuntimeError):
    """Stepping hit ``max_steps`` with the steady residual still above tolerance."""

    def __init__(self, residual: float, steps: int, g: np.ndarray | None = None):
        super().__init__(f"not steady after {steps} steps (residual {residual:.3e})")
        self.residual = residual
        self.steps = steps
        self.g = g


# --- velocity space ----------------------------------------------------------


@dataclass(frozen=True)
class VelocityGrid:
    """Tensor Gauss-Hermite nodes with weights absorbing the unit Maxwellian."""

    N: int
    nodes: np.ndarray  # (N**3, 3)
    weights: np.ndarray  # (N**3,)
    abscissae: np.ndarray  # (N,) one-dimensional nodes
    basis: np.ndarray = field(repr=False)  # (N**3, 5): 1, v1, v2, v3, |v|^2
    _moment_map: np.ndarray = field(repr=False)  # (N**3, 5) weighted basis
    _gram_inv: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.weights.size

    @property
    def speed_squared(self) -> np.ndarray:
        return np.einsum("ki,ki->k", self.nodes, self.nodes)

    def sample(self, p: VelocityPolynomial) -> np.ndarray:
        return p(self.nodes[:, 0], self.nodes[:, 1], self.nodes[:, 2])

    def inner(self, f: np.ndarray, g: np.ndarray) -> np.ndarray:
        """Discrete ``<f, g>_h`` contracted over the trailing velocity axis."""
        return (f * g) @ self.weights

    def kernel_moments(self, g: np.ndarray) -> np.ndarray:
        """``<g, 1>, <g, v_i>, <g, |v|^2>`` along the last axis."""
        return g @ self._moment_map

    def project(self, g: np.ndarray) -> np.ndarray:
        coeffs = self.kernel_moments(g) @ self._gram_inv
        return coeffs @ self.basis.T


def build_velocity_grid(N: int) -> VelocityGrid:
    if N < 4 or N % 2:
        raise ValueError("N must be even and at least 4")
    x, w = hermegauss(N)
    w = w / w.sum()
    if not (np.all(np.isfinite(x)) and np.all(w > 0)):
        raise QuadratureDegeneracy(f"Gauss-Hermite rule with {N} nodes is degenerate")
    # per-axis exactness up to degree 2N-1 against the closed-form moments
    for e in range(2 * N):
        exact = float(gaussian_moment(e, 0, 0))
        got = float(np.sum(w * x**e))
        if abs(got - exact) > 1e-12 * max(1.0, exact):
            raise QuadratureDegeneracy(f"1D moment {e}: {got} vs {exact}")
    v1, v2, v3 = np.meshgrid(x, x, x, indexing="ij")
    nodes = np.stack([v1.ravel(), v2.ravel(), v3.ravel()], axis=1)
    weights = np.einsum("i,j,k->ijk", w, w, w).ravel()
    basis = np.column_stack([np.ones(len(weights)), nodes, np.sum(nodes**2, axis=1)])
    moment_map = weights[:, None] * basis
    gram = basis.T @ moment_map
    return VelocityGrid(
        N=N,
        nodes=nodes,
        weights=weights,
        abscissae=x,
        basis=basis,
        _moment_map=moment_map,
        _gram_inv=np.linalg.inv(gram).T,
    )


def discrete_projection(grid: VelocityGrid, g: np.ndarray) -> np.ndarray:
    """Discrete M-orthogonal projection onto span{1, v, |v|^2} along the last axis."""
    return grid.project(g)


# --- physical space ----------------------------------------------------------


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform ``M x M`` grid on ``[0, 2 pi)^2`` with rfft2 wavenumbers."""

    M: int

    def __post_init__(self):
        if self.M < 2 or self.M % 2:
            raise ValueError("M must be even")

    @property
    def dx(self) -> float:
        return 2 * np.pi / self.M

    def coordinates(self) -> tuple[np.ndarray, np.ndarray]:
        x = self.dx * np.arange(self.M)
        return np.meshgrid(x, x, indexing="ij")

    def half_wavenumbers(self) -> tuple[np.ndarray, np.ndarray]:
        """Wavenumbers ``(k1[:, None], k2[None, :])`` for the rfft2 layout."""
        k1 = np.fft.fftfreq(self.M, 1.0 / self.M)
        k2 = np.fft.rfftfreq(self.M, 1.0 / self.M)
        return k1[:, None], k2[None, :]

    def nyquist_mask(self) -> np.ndarray:
        k1, k2 = self.half_wavenumbers()
        return (np.abs(k1) < self.M // 2) & (np.abs(k2) < self.M // 2)


# --- configuration -----------------------------------------------------------


@dataclass
class SolverConfig:
    epsilon: float
    regime: ScalingRegime = field(default_factory=lambda: classify_regime(0.5, 0.5))
    nu0: float = 1.0
    dt_safety: float = 0.5
    steady_tol: float = 1e-6
    max_steps: int = 200_000
    source: Optional[SourceSpec] = None
    M: int = 32
    N: int = 8
    collisions_nonlinear: bool = True
    dt: Optional[float] = None  # overrides the CFL-derived step

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.nu0 <= 0:
            raise ValueError("nu0 must be positive")
        if not 0 < self.dt_safety <= 1:
            raise ValueError("dt_safety must lie in (0, 1]")
        if self.source is not None and self.source.h.shape != (self.M, self.M):
            raise ValueError("source fields do not match the spatial grid")

    def echo(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "r": self.regime.r,
            "q": self.regime.q,
            "regime": self.regime.cls.value,
            "nu0": self.nu0,
            "dt_safety": self.dt_safety,
            "steady_tol": self.steady_tol,
            "max_steps": self.max_steps,
            "M": self.M,
            "N": self.N,
            "amplitude": 0.0 if self.source is None else self.source.amplitude,
            "collisions_nonlinear": self.collisions_nonlinear,
            "dt": self.dt,
        }


@dataclass
class MomentFields:
    rho: np.ndarray  # (M, M)
    u: np.ndarray  # (3, M, M); the third component is diagnostic only
    theta: np.ndarray  # (M, M)


def extract_moments(g: np.ndarray, grid: VelocityGrid) -> MomentFields:
    m = grid.kernel_moments(g)
    rho = m[..., 0]
    u = np.moveaxis(m[..., 1:4], -1, 0)
    theta = (m[..., 4] - 3 * rho) / 3
    return MomentFields(rho=rho, u=u, theta=theta)


def lift_hydrodynamic(grid: VelocityGrid, rho, u, theta) -> np.ndarray:
    """Sample ``rho + u.v + (|v|^2 - 3) theta / 2`` onto the velocity grid."""
    V = grid.nodes
    g = rho[..., None] + 0.5 * (grid.speed_squared - 3) * theta[..., None]
    for i in range(len(u)):
        g = g + u[i][..., None] * V[:, i]
    return g


def rms(a: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.square(a))))


# --- the time stepper --------------------------------------------------------


class KineticSolver:
    """Strang-split stepper: half transport, collision + source, half transport."""

    def __init__(self, cfg: SolverConfig, vgrid: VelocityGrid | None = None):
        self.cfg = cfg
        self.vgrid = vgrid if vgrid is not None else build_velocity_grid(cfg.N)
        self.sgrid = SpatialGrid(cfg.M)
        vinplane = np.hypot(self.vgrid.nodes[:, 0], self.vgrid.nodes[:, 1]).max()
        self.dt = cfg.dt if cfg.dt is not None else cfg.dt_safety * cfg.epsilon * self.sgrid.dx / vinplane
        self._phase_cache: dict[float, np.ndarray] = {}
        self._source = self._source_increment(cfg.source)

    # individual pieces ---------------------------------------------------
    def phase(self, tau: float) -> np.ndarray:
        """Exact transport multiplier over free-flight time ``tau = dt / eps``."""
        if tau not in self._phase_cache:
            k1, k2 = self.sgrid.half_wavenumbers()
            V = self.vgrid.nodes
            arg = k1[..., None] * V[:, 0] + k2[..., None] * V[:, 1]
            ph = np.exp(-1j * tau * arg)
            ph *= self.sgrid.nyquist_mask()[..., None]
            self._phase_cache[tau] = ph
        return self._phase_cache[tau]

    def transport_step(self, g: np.ndarray, dt: float) -> np.ndarray:
        M = self.cfg.M
        gh = np.fft.rfft2(g, axes=(0, 1))
        gh *= self.phase(dt / self.cfg.epsilon)
        return np.fft.irfft2(gh, s=(M, M), axes=(0, 1))

    def collision_step(self, g: np.ndarray, dt: float) -> np.ndarray:
        cfg = self.cfg
        eps, q, r = cfg.epsilon, cfg.regime.q, cfg.regime.r
        with np.errstate(over="ignore", divide="ignore"):
            lam = np.float64(cfg.nu0) * dt / np.float64(eps) ** (1 + q)
        if not np.isfinite(lam):
            raise StiffnessOverflow(f"relaxation exponent {lam!r} is not finite")
        decay = np.exp(-lam)
        pg = self.vgrid.project(g)
        out = pg + decay * (g - pg)
        if cfg.collisions_nonlinear:
            g2 = g * g
            # Gamma(g,g)/nu0 = (I - P)(g^2) / 2 relaxes towards eps^r times itself
            out += (-np.expm1(-lam)) * eps**r * 0.5 * (g2 - self.vgrid.project(g2))
        # The float projection reproduces moments only to O(machine eps), a bias
        # that would accumulate step after step; restore the invariants of g.
        out += self.vgrid.project(g - out)
        return out

    def _source_increment(self, source: SourceSpec | None) -> np.ndarray | None:
        if source is None or source.amplitude == 0:
            return None
        return source_field(source, self.vgrid, self.cfg.epsilon, self.cfg.regime) / self.cfg.epsilon

    def apply_source(self, g: np.ndarray, dt: float) -> np.ndarray:
        if self._source is None:
            return g
        return g + dt * self._source

    def step(self, g: np.ndarray) -> np.ndarray:
        dt = self.dt
        g = self.transport_step(g, dt / 2)
        g = self.apply_source(self.collision_step(g, dt), dt)
        return self.transport_step(g, dt / 2)

    # driving ---------------------------------------------------------------
    def run_to_steady(self, g0: np.ndarray | None = None, check_every: int = 1):
        """Step until ``|g^{n+1} - g^n| / (dt |g^n| + floor) < steady_tol``.

        Consecutive half transports are fused, so one FFT round trip is spent
        per step; the returned field is the full-step Strang state.
        Returns ``(g, steps, residual)``.
        """
        cfg = self.cfg
        dt = self.dt
        if g0 is None:
            g0 = self.zeros()
        b = self.apply_source(self.collision_step(self.transport_step(g0, dt / 2), dt), dt)
        steps, residual = 1, np.inf
        while steps < cfg.max_steps:
            b_new = self.apply_source(self.collision_step(self.transport_step(b, dt), dt), dt)
            steps += 1
            if steps % check_every == 0:
                residual = rms(b_new - b) / (dt * rms(b) + NORM_FLOOR)
            b = b_new
            if residual < cfg.steady_tol:
                break
            if steps % 1000 == 0:
                log.debug("eps=%g step %d residual %.3e", cfg.epsilon, steps, residual)
        g = self.transport_step(b, dt / 2)
        if residual >= cfg.steady_tol:
            raise NotConverged(residual, steps, g)
        return g, steps, residual

    def zeros(self) -> np.ndarray:
        return np.zeros((self.cfg.M, self.cfg.M, self.vgrid.size))


def source_field(source: SourceSpec, vgrid: VelocityGrid, epsilon: float, regime: ScalingRegime) -> np.ndarray:
    """``S(x, v)`` sampled on the grids, shape ``(M, M, N**3)``."""
    V = vgrid.nodes
    f = source.momentum
    profile = vgrid.sample(heat_source_profile())
    S = f[0][..., None] * V[:, 0] + f[1][..., None] * V[:, 1] + source.heat[..., None] * profile
    return epsilon**regime.source_exponent * S


def transport_step(solver: KineticSolver, g: np.ndarray, dt: float) -> np.ndarray:
    return solver.transport_step(g, dt)


def collision_step(solver: KineticSolver, g: np.ndarray, dt: float) -> np.ndarray:
    return solver.collision_step(g, dt)


def apply_source(solver: KineticSolver, g: np.ndarray, dt: float) -> np.ndarray:
    return solver.apply_source(g, dt)


def run_to_steady(cfg: SolverConfig, g0: np.ndarray | None = None, vgrid: VelocityGrid | None = None):
    return KineticSolver(cfg, vgrid).run_to_steady(g0)


# --- direct stationary solve ---------------------------------------------------


class StationarySolver:
    """Steady state of the discrete-velocity equation without time stepping.

    Each Fourier mode of ``v.grad g + lam (I - P) g = R`` is inverted exactly
    through a 5x5 system for the collision-invariant coefficients; the
    quadratic collision term is handled by Newton-Krylov on top of that.
    The spatial mean of the invariant moments is pinned to zero.
    """

    def __init__(self, cfg: SolverConfig, vgrid: VelocityGrid | None = None):
        self.cfg = cfg
        self.vgrid = vgrid if vgrid is not None else build_velocity_grid(cfg.N)
        self.sgrid = SpatialGrid(cfg.M)
        vg = self.vgrid
        k1, k2 = self.sgrid.half_wavenumbers()
        self.lam = cfg.nu0 * cfg.epsilon ** (-cfg.regime.q)
        D = 1j * (k1[..., None] * vg.nodes[:, 0] + k2[..., None] * vg.nodes[:, 1]) + self.lam
        self.Dinv = 1.0 / D
        self.mask = self.sgrid.nyquist_mask()
        # (G - lam Phi^T W D^-1 Phi) c = Phi^T W D^-1 R for every k != 0
        A = np.einsum("va,xyv,vb->xyab", vg._moment_map, self.Dinv, vg.basis)
        gram = vg.basis.T @ vg._moment_map
        sys = gram - self.lam * A
        sys[0, 0] = np.eye(5)
        self.sys_inv = np.linalg.inv(sys)
        src = None if cfg.source is None else source_field(cfg.source, vg, cfg.epsilon, cfg.regime)
        self.S = src

    def solve_linear(self, R: np.ndarray) -> np.ndarray:
        M = self.cfg.M
        vg = self.vgrid
        Rh = np.fft.rfft2(R, axes=(0, 1))
        DR = self.Dinv * Rh
        rhs = DR @ vg._moment_map
        rhs[0, 0] = 0.0
        c = np.einsum("xyab,xyb->xya", self.sys_inv, rhs)
        gh = self.Dinv * (self.lam * (c @ vg.basis.T)) + DR
        gh *= self.mask[..., None]
        return np.fft.irfft2(gh, s=(M, M), axes=(0, 1))

    def forcing(self, g: np.ndarray) -> np.ndarray:
        cfg = self.cfg
        R = np.zeros_like(g) if self.S is None else self.S.copy()
        if cfg.collisions_nonlinear:
            g2 = g * g
            coeff = cfg.epsilon ** (cfg.regime.r - cfg.regime.q) * 0.5 * cfg.nu0
            R += coeff * (g2 - self.vgrid.project(g2))
        return R

    def solve(self, tol: float = 1e-11, maxiter: int = 60):
        """Return ``(g, iterations, residual)`` with residual in RMS relative units."""
        from scipy.optimize import newton_krylov

        shape = (self.cfg.M, self.cfg.M, self.vgrid.size)
        g0 = self.solve_linear(self.forcing(np.zeros(shape)))
        if not self.cfg.collisions_nonlinear or self.S is None:
            return g0, 1, 0.0
        scale = max(np.abs(g0).max(), NORM_FLOOR)

        def F(x):
            g = x.reshape(shape) * scale
            return (g - self.solve_linear(self.forcing(g))).ravel() / scale

        counter = {"n": 0}

        def cb(x, f):
            counter["n"] += 1

        x = newton_krylov(
            F, (g0 / scale).ravel(), f_tol=tol, maxiter=maxiter, method="lgmres", callback=cb
        )
        g = x.reshape(shape) * scale
        res = rms(F(x)) * scale / max(rms(g), NORM_FLOOR)
        return g, counter["n"], float(res)


def save_checkpoint(path, g: np.ndarray, config: dict) -> None:
    """Write ``g`` and a JSON config echo to an ``.npz`` archive."""
    import json

    np.savez(path, g=g, config=np.array(json.dumps(config, sort_keys=True)))


def load_checkpoint(path) -> tuple[np.ndarray, dict]:
    import json

    with np.load(path, allow_pickle=False) as data:
        return data["g"], json.loads(str(data["config"]))
