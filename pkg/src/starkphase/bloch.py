"""
Local atomic dynamics of the V system: Hamiltonian, relaxation and the
density-matrix equation of motion, integrated in local time t' = t - z/c.

Levels are indexed 0, 1, 2 for |1>, |2>, |3>.  Matrices are in units of
rad/s (H / hbar).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DomainError, NumericalInstabilityError


class RelaxationMode(str, enum.Enum):
    AS_WRITTEN = "as_written"
    REPOPULATING = "repopulating"


@dataclass(frozen=True)
class RelaxationModel:
    """Radiative decay of |2> and |3>.

    ``as_written`` applies only -1/2 {Gamma, rho}, so decayed population
    leaves the system; ``repopulating`` returns it to |1>.
    """

    gamma2: float
    gamma3: float
    mode: RelaxationMode = RelaxationMode.AS_WRITTEN

    def __post_init__(self):
        if self.gamma2 < 0 or self.gamma3 < 0:
            raise DomainError("decay rates must be non-negative")
        object.__setattr__(self, "mode", RelaxationMode(self.mode))

    @property
    def gamma_diag(self) -> np.ndarray:
        return np.diag([0.0, self.gamma2, self.gamma3])

    @property
    def repopulating(self) -> bool:
        return self.mode is RelaxationMode.REPOPULATING


def ground_state() -> np.ndarray:
    rho = np.zeros((3, 3), complex)
    rho[0, 0] = 1.0
    return rho


def build_hamiltonian(omega_p: complex, omega_s: complex, delta_p: float, delta_s: float) -> np.ndarray:
    return np.array(
        [
            [0.0, -omega_p / 2, -omega_s / 2],
            [-np.conj(omega_p) / 2, delta_p, 0.0],
            [-np.conj(omega_s) / 2, 0.0, delta_s],
        ],
        dtype=complex,
    )


def density_matrix_rhs(rho: np.ndarray, h: np.ndarray, relax: RelaxationModel) -> np.ndarray:
    """d rho / dt = -i [h, rho] - 1/2 {Gamma, rho}  (+ repopulation of |1>)."""
    g = relax.gamma_diag
    drho = -1j * (h @ rho - rho @ h) - 0.5 * (g @ rho + rho @ g)
    if relax.repopulating:
        drho[0, 0] += relax.gamma2 * rho[1, 1].real + relax.gamma3 * rho[2, 2].real
    return drho


def check_density_matrix(rho: np.ndarray, tol: float = 1e-9) -> None:
    """Raise ``NumericalInstabilityError`` unless rho is a valid (sub-normalized) state."""
    if not np.all(np.isfinite(rho)):
        raise NumericalInstabilityError("density matrix is not finite")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-12:
        raise NumericalInstabilityError("density matrix is not Hermitian")
    tr = np.trace(rho).real
    if not (0 < tr <= 1 + tol):
        raise NumericalInstabilityError(f"trace {tr!r} outside (0, 1]")
    if np.linalg.eigvalsh(rho).min() < -tol:
        raise NumericalInstabilityError("density matrix is not positive semidefinite")


def field_midpoints(x: np.ndarray) -> np.ndarray:
    """Values half way between consecutive samples by 4-point cubic interpolation.

    Interior: (-x[k-1] + 9 x[k] + 9 x[k+1] - x[k+2]) / 16; one-sided cubic
    stencils at the two ends.  Error is O(dt**4), which keeps RK4 fourth order.
    """
    x = np.asarray(x, dtype=complex)
    n = x.size
    if n < 2:
        return np.empty(0, complex)
    if n < 4:
        return 0.5 * (x[:-1] + x[1:])
    mid = np.empty(n - 1, complex)
    mid[1:-1] = (-x[:-3] + 9 * x[1:-2] + 9 * x[2:-1] - x[3:]) / 16
    mid[0] = (5 * x[0] + 15 * x[1] - 5 * x[2] + x[3]) / 16
    mid[-1] = (5 * x[-1] + 15 * x[-2] - 5 * x[-3] + x[-4]) / 16
    return mid


def integrate_time_slice(
    rho0: np.ndarray,
    omega_p: np.ndarray,
    omega_s: np.ndarray,
    delta_p: float,
    delta_s: float,
    relax: RelaxationModel,
    dt: float,
) -> np.ndarray:
    """Fixed-step RK4 over uniformly sampled fields.

    Returns an array of shape (len(omega_p), 3, 3); element n is rho at the
    n-th field sample, element 0 is ``rho0``.
    """
    op = np.ascontiguousarray(omega_p, dtype=complex)
    os_ = np.ascontiguousarray(omega_s, dtype=complex)
    if op.shape != os_.shape or op.ndim != 1:
        raise DomainError("field series must be 1-D and of equal length")
    if not dt > 0:
        raise DomainError("dt must be positive")
    rho0 = np.asarray(rho0, dtype=complex)
    check_density_matrix(rho0)
    out = np.empty((op.size, 3, 3), complex)
    bad = _kernels.rk4_march(
        rho0, op, os_, field_midpoints(op), field_midpoints(os_), float(delta_p), float(delta_s),
        float(relax.gamma2), float(relax.gamma3), relax.repopulating, float(dt), out,
    )
    if bad >= 0:
        raise NumericalInstabilityError(f"density-matrix invariants violated at step {bad}")
    return out


def march_coherences(
    omega_p: np.ndarray,
    omega_s: np.ndarray,
    delta_p: float,
    delta_s: float,
    relax: RelaxationModel,
    dt: float,
):
    """rho_12(t') and rho_13(t') from the ground state, plus the bad step (-1 if none)."""
    omega_p = np.ascontiguousarray(omega_p, dtype=complex)
    omega_s = np.ascontiguousarray(omega_s, dtype=complex)
    rho12 = np.empty(omega_p.shape[0], complex)
    rho13 = np.empty(omega_p.shape[0], complex)
    bad = _kernels.rk4_coherences(
        ground_state(), omega_p, omega_s, field_midpoints(omega_p), field_midpoints(omega_s), float(delta_p), float(delta_s),
        float(relax.gamma2), float(relax.gamma3), relax.repopulating, float(dt), rho12, rho13,
    )
    return rho12, rho13, bad
