"""Compiled inner loops: RK4 march of the 3x3 density matrix in local time."""

import numba as nb
import numpy as np

INVARIANT_TOL = 1e-9


@nb.njit(cache=True, inline="always")
def _rhs(rho, op, os, dp, ds, g2, g3, repop, out):
    # h = [[0, -op/2, -os/2], [-conj(op)/2, dp, 0], [-conj(os)/2, 0, ds]]
    h01 = -0.5 * op
    h02 = -0.5 * os
    h10 = np.conj(h01)
    h20 = np.conj(h02)
    g = (0.0, g2, g3)
    for i in range(3):
        for j in range(3):
            # (h rho)_ij
            if i == 0:
                hr = h01 * rho[1, j] + h02 * rho[2, j]
            elif i == 1:
                hr = h10 * rho[0, j] + dp * rho[1, j]
            else:
                hr = h20 * rho[0, j] + ds * rho[2, j]
            # (rho h)_ij
            if j == 0:
                rh = rho[i, 1] * h10 + rho[i, 2] * h20
            elif j == 1:
                rh = rho[i, 0] * h01 + rho[i, 1] * dp
            else:
                rh = rho[i, 0] * h02 + rho[i, 2] * ds
            out[i, j] = -1j * (hr - rh) - 0.5 * (g[i] + g[j]) * rho[i, j]
    if repop:
        out[0, 0] += g2 * rho[1, 1].real + g3 * rho[2, 2].real


@nb.njit(cache=True)
def _violates(rho):
    for i in range(3):
        for j in range(3):
            if not (np.isfinite(rho[i, j].real) and np.isfinite(rho[i, j].imag)):
                return True
    tr = rho[0, 0].real + rho[1, 1].real + rho[2, 2].real
    if tr > 1.0 + INVARIANT_TOL or tr <= 0.0:
        return True
    for i in range(3):
        if rho[i, i].real < -INVARIANT_TOL:
            return True
    # 2x2 principal minors of a PSD matrix are non-negative
    for i in range(3):
        for j in range(i + 1, 3):
            if abs(rho[i, j]) ** 2 > rho[i, i].real * rho[j, j].real + INVARIANT_TOL:
                return True
    return False


@nb.njit(cache=True)
def _step(rho, op0, os0, opm, osm, op1, os1, dp, ds, g2, g3, repop, dt, work):
    """One classic RK4 step in place, given fields at start, middle and end."""
    k1 = work[0]
    k2 = work[1]
    k3 = work[2]
    k4 = work[3]
    tmp = work[4]
    _rhs(rho, op0, os0, dp, ds, g2, g3, repop, k1)
    for i in range(3):
        for j in range(3):
            tmp[i, j] = rho[i, j] + 0.5 * dt * k1[i, j]
    _rhs(tmp, opm, osm, dp, ds, g2, g3, repop, k2)
    for i in range(3):
        for j in range(3):
            tmp[i, j] = rho[i, j] + 0.5 * dt * k2[i, j]
    _rhs(tmp, opm, osm, dp, ds, g2, g3, repop, k3)
    for i in range(3):
        for j in range(3):
            tmp[i, j] = rho[i, j] + dt * k3[i, j]
    _rhs(tmp, op1, os1, dp, ds, g2, g3, repop, k4)
    for i in range(3):
        for j in range(3):
            tmp[i, j] = rho[i, j] + dt / 6.0 * (k1[i, j] + 2.0 * k2[i, j] + 2.0 * k3[i, j] + k4[i, j])
    # re-symmetrize against Hermiticity drift
    for i in range(3):
        for j in range(3):
            rho[i, j] = 0.5 * (tmp[i, j] + np.conj(tmp[j, i]))


@nb.njit(cache=True)
def rk4_march(rho0, op, os, opm, osm, dp, ds, g2, g3, repop, dt, out):
    """March rho over the field samples; ``out[n]`` is rho at sample n.

    ``opm``/``osm`` hold the fields half way between consecutive samples.

    Returns the index of the first step whose result breaks the density
    matrix invariants, or -1.
    """
    n = op.shape[0]
    rho = rho0.copy()
    work = np.empty((5, 3, 3), np.complex128)
    out[0] = rho
    for step in range(n - 1):
        _step(rho, op[step], os[step], opm[step], osm[step], op[step + 1], os[step + 1],
              dp, ds, g2, g3, repop, dt, work)
        out[step + 1] = rho
        if _violates(rho):
            return step + 1
    return -1


@nb.njit(cache=True)
def rk4_coherences(rho0, op, os, opm, osm, dp, ds, g2, g3, repop, dt, rho12, rho13):
    """Same march as :func:`rk4_march`, storing only rho_12 and rho_13."""
    n = op.shape[0]
    rho = rho0.copy()
    work = np.empty((5, 3, 3), np.complex128)
    rho12[0] = rho[0, 1]
    rho13[0] = rho[0, 2]
    for step in range(n - 1):
        _step(rho, op[step], os[step], opm[step], osm[step], op[step + 1], os[step + 1],
              dp, ds, g2, g3, repop, dt, work)
        rho12[step + 1] = rho[0, 1]
        rho13[step + 1] = rho[0, 2]
        if _violates(rho):
            return step + 1
    return -1
