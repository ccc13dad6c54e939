"""Stationary incompressible reference solutions on the 2D torus.

Fields live in full ``fft2`` layout on an ``M x M`` grid over ``[0, 2 pi)^2``.
Quadratic terms are formed pseudo-spectrally with 2/3-rule dealiasing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class SingularMode(ValueError):
    """Forcing has a mean (k = 0) component the periodic Laplacian cannot absorb."""


class NoContraction(RuntimeError):
    """Picard iteration stopped contracting; the forcing amplitude is too large."""


@dataclass(frozen=True)
class SpectralGrid:
    M: int

    @property
    def k(self) -> tuple[np.ndarray, np.ndarray]:
        k = np.fft.fftfreq(self.M, 1.0 / self.M)
        k1, k2 = np.meshgrid(k, k, indexing="ij")
        return k1, k2

    @property
    def ksq(self) -> np.ndarray:
        k1, k2 = self.k
        return k1**2 + k2**2

    @property
    def dealias(self) -> np.ndarray:
        k1, k2 = self.k
        kmax = self.M // 2
        return (np.abs(k1) < 2 * kmax / 3) & (np.abs(k2) < 2 * kmax / 3)

    def fft(self, a: np.ndarray) -> np.ndarray:
        return np.fft.fft2(a, axes=(-2, -1))

    def ifft(self, a: np.ndarray) -> np.ndarray:
        return np.fft.ifft2(a, axes=(-2, -1)).real

    def grad(self, a_hat: np.ndarray) -> np.ndarray:
        k1, k2 = self.k
        return np.stack([1j * k1 * a_hat, 1j * k2 * a_hat])

    def div(self, w_hat: np.ndarray) -> np.ndarray:
        k1, k2 = self.k
        return 1j * (k1 * w_hat[0] + k2 * w_hat[1])


def l2(a: np.ndarray) -> float:
    """Root-mean-square norm over all grid points and components."""
    return float(np.sqrt(np.sum(np.square(a)) / (a.shape[-1] * a.shape[-2])))


def leray_project(w_hat: np.ndarray, grid: SpectralGrid) -> np.ndarray:
    """``w - k (k.w) / |k|^2`` per mode; the k = 0 mode passes through."""
    k1, k2 = grid.k
    ksq = grid.ksq
    safe = np.where(ksq == 0, 1.0, ksq)
    kw = (k1 * w_hat[0] + k2 * w_hat[1]) / safe
    return np.stack([w_hat[0] - k1 * kw, w_hat[1] - k2 * kw])


def leray_project_physical(w: np.ndarray) -> np.ndarray:
    grid = SpectralGrid(w.shape[-1])
    return grid.ifft(leray_project(grid.fft(w), grid))


@dataclass
class FluidState:
    """Spectral ``u`` (2 components), pressure, temperature and density."""

    u_hat: np.ndarray
    p_hat: np.ndarray
    theta_hat: np.ndarray
    rho_hat: np.ndarray
    grid: SpectralGrid
    iterations: int = 0

    @property
    def u(self) -> np.ndarray:
        return self.grid.ifft(self.u_hat)

    @property
    def p(self) -> np.ndarray:
        return self.grid.ifft(self.p_hat)

    @property
    def theta(self) -> np.ndarray:
        return self.grid.ifft(self.theta_hat)

    @property
    def rho(self) -> np.ndarray:
        return self.grid.ifft(self.rho_hat)


def _check_mean_free(a_hat: np.ndarray, name: str) -> None:
    mean = np.abs(a_hat[..., 0, 0]) / a_hat.shape[-1] ** 2
    scale = max(np.abs(a_hat).max() / a_hat.shape[-1] ** 2, 1.0)
    if np.any(mean > 1e-12 * scale):
        raise SingularMode(f"{name} has a nonzero mean mode")


def _inverse_laplacian(a_hat: np.ndarray, grid: SpectralGrid, coeff: float) -> np.ndarray:
    """Solve ``-coeff * Lap x = a`` with zero mean."""
    ksq = grid.ksq
    out = np.where(ksq == 0, 0.0, a_hat / (coeff * np.where(ksq == 0, 1.0, ksq)))
    return out


def convection(u_hat: np.ndarray, a_hat: np.ndarray, grid: SpectralGrid) -> np.ndarray:
    """Dealiased ``u . grad a`` for scalar (M, M) or vector (2, M, M) ``a_hat``."""
    mask = grid.dealias
    u = grid.ifft(u_hat * mask)
    if a_hat.ndim == 2:
        ga = grid.ifft(grid.grad(a_hat * mask))
        return grid.fft(u[0] * ga[0] + u[1] * ga[1]) * mask
    out = []
    for comp in a_hat:
        ga = grid.ifft(grid.grad(comp * mask))
        out.append(grid.fft(u[0] * ga[0] + u[1] * ga[1]) * mask)
    return np.stack(out)


def _pressure(rhs_hat: np.ndarray, grid: SpectralGrid) -> np.ndarray:
    # grad p = (I - Leray) rhs  =>  p = -i k.rhs / |k|^2
    k1, k2 = grid.k
    ksq = grid.ksq
    return np.where(ksq == 0, 0.0, -1j * (k1 * rhs_hat[0] + k2 * rhs_hat[1]) / np.where(ksq == 0, 1.0, ksq))


def solve_stationary_stokes(f: np.ndarray, nu: float, h: np.ndarray | None = None, kappa: float | None = None) -> FluidState:
    """``grad p = nu Lap u + f``, ``div u = 0``; optionally ``kappa Lap theta + h = 0``."""
    if nu <= 0:
        raise ValueError("nu must be positive")
    grid = SpectralGrid(f.shape[-1])
    f_hat = grid.fft(f)
    _check_mean_free(f_hat, "momentum forcing")
    u_hat = _inverse_laplacian(leray_project(f_hat, grid), grid, nu)
    p_hat = _pressure(f_hat, grid)
    if h is None:
        theta_hat = np.zeros_like(p_hat)
    else:
        h_hat = grid.fft(h)
        _check_mean_free(h_hat, "heat forcing")
        theta_hat = _inverse_laplacian(h_hat, grid, kappa if kappa is not None else nu)
    return FluidState(u_hat=u_hat, p_hat=p_hat, theta_hat=theta_hat, rho_hat=-theta_hat, grid=grid)


def solve_stationary_nsf(
    f: np.ndarray,
    h: np.ndarray,
    nu: float,
    kappa: float,
    tol: float = 1e-12,
    max_iter: int = 2000,
) -> FluidState:
    """Picard iteration for the stationary incompressible Navier-Stokes-Fourier system.

    ``u.grad u + grad p = nu Lap u + f``, ``u.grad theta = kappa Lap theta + h``,
    ``div u = 0`` and ``rho = -theta``.
    """
    if nu <= 0 or kappa <= 0:
        raise ValueError("nu and kappa must be positive")
    grid = SpectralGrid(f.shape[-1])
    f_hat = grid.fft(f)
    h_hat = grid.fft(h)
    _check_mean_free(f_hat, "momentum forcing")
    _check_mean_free(h_hat, "heat forcing")
    u_hat = _inverse_laplacian(leray_project(f_hat, grid), grid, nu)
    theta_hat = _inverse_laplacian(h_hat, grid, kappa)
    last = np.inf
    stalls = 0
    scale = max(np.abs(u_hat).max(), np.abs(theta_hat).max(), 1e-300)
    for it in range(1, max_iter + 1):
        rhs_u = f_hat - convection(u_hat, u_hat, grid)
        u_new = _inverse_laplacian(leray_project(rhs_u, grid), grid, nu)
        th_new = _inverse_laplacian(h_hat - convection(u_new, theta_hat, grid), grid, kappa)
        change = max(np.abs(u_new - u_hat).max(), np.abs(th_new - theta_hat).max()) / scale
        u_hat, theta_hat = u_new, th_new
        if change < tol:
            break
        stalls = stalls + 1 if change >= last else 0
        if stalls >= 20 or not np.isfinite(change) or change > 1e8:
            raise NoContraction(f"Picard change stopped decreasing at iteration {it} ({change:.3e})")
        last = change
    else:
        raise NoContraction(f"no convergence in {max_iter} iterations (change {change:.3e})")
    p_hat = _pressure(f_hat - convection(u_hat, u_hat, grid), grid)
    return FluidState(u_hat=u_hat, p_hat=p_hat, theta_hat=theta_hat, rho_hat=-theta_hat, grid=grid, iterations=it)


def nsf_residuals(state: FluidState, f: np.ndarray, h: np.ndarray, nu: float, kappa: float) -> tuple[float, float]:
    """RMS residuals of the momentum and temperature equations."""
    g = state.grid
    ksq = g.ksq
    mom = convection(state.u_hat, state.u_hat, g) + g.grad(state.p_hat) + nu * ksq * state.u_hat - g.fft(f)
    heat = convection(state.u_hat, state.theta_hat, g) + kappa * ksq * state.theta_hat - g.fft(h)
    return l2(g.ifft(mom)), l2(g.ifft(heat))


def euler_residual(state: FluidState, f: np.ndarray, h: np.ndarray) -> tuple[float, float]:
    """``(|P(u.grad u - f)|, |u.grad theta - h|)`` for the stationary Euler system."""
    g = state.grid
    mom = leray_project(convection(state.u_hat, state.u_hat, g) - g.fft(f), g)
    heat = convection(state.u_hat, state.theta_hat, g) - g.fft(h)
    return l2(g.ifft(mom)), l2(g.ifft(heat))


def state_from_fields(u: np.ndarray, theta: np.ndarray, rho: np.ndarray | None = None) -> FluidState:
    """Wrap physical fields (e.g. kinetic moments) as a :class:`FluidState`."""
    grid = SpectralGrid(theta.shape[-1])
    theta_hat = grid.fft(theta)
    rho_hat = -theta_hat if rho is None else grid.fft(rho)
    return FluidState(
        u_hat=grid.fft(u[:2]), p_hat=np.zeros_like(theta_hat), theta_hat=theta_hat, rho_hat=rho_hat, grid=grid
    )
