"""Hot grid kernels: total phase-field energy and its nodal gradient.

Fields live on an (nx, ny) node grid over the unit square (first index is x).
Each cell is integrated with 2x2 Gauss points under bilinear interpolation;
single-point quadrature admits zero-energy checkerboard modes, which this
rule suppresses.

Two interchangeable implementations exist: a numba ``@njit`` loop kernel and
a vectorized pure-numpy fallback. The environment variable
``VDEEPONET_NUMBA`` selects the default path (``0``/``off`` forces numpy,
``1``/``on`` requires numba, unset auto-detects). Both are importable side by
side for equivalence tests and for ``benchmarks/bench_kernels.py``.
"""

from __future__ import annotations

import os

import numpy as np

from .errors import ConfigurationError

_GP = 1.0 / np.sqrt(3.0)
# gauss-point loop order: (xi, eta) in (-g,-g), (+g,-g), (-g,+g), (+g,+g)
_GAUSS = ((-_GP, -_GP), (_GP, -_GP), (-_GP, _GP), (_GP, _GP))


def _shape_tables():
    """Bilinear shape values and parent-space derivatives at the Gauss points.

    Row order per point: nodes (i,j), (i+1,j), (i,j+1), (i+1,j+1).
    """
    n = np.empty((4, 4))
    dxi = np.empty((4, 4))
    deta = np.empty((4, 4))
    for p, (xi, eta) in enumerate(_GAUSS):
        n[p] = (0.25 * (1 - xi) * (1 - eta), 0.25 * (1 + xi) * (1 - eta),
                0.25 * (1 - xi) * (1 + eta), 0.25 * (1 + xi) * (1 + eta))
        dxi[p] = (-0.25 * (1 - eta), 0.25 * (1 - eta),
                  -0.25 * (1 + eta), 0.25 * (1 + eta))
        deta[p] = (-0.25 * (1 - xi), -0.25 * (1 + xi),
                   0.25 * (1 - xi), 0.25 * (1 + xi))
    return n, dxi, deta


_N_TAB, _DXI_TAB, _DETA_TAB = _shape_tables()


def numba_available() -> bool:
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def numba_enabled() -> bool:
    """Resolve the VDEEPONET_NUMBA flag against numba availability."""
    flag = os.environ.get("VDEEPONET_NUMBA", "").strip().lower()
    if flag in ("0", "off", "false", "no"):
        return False
    if flag in ("1", "on", "true", "yes"):
        if not numba_available():
            raise ConfigurationError("VDEEPONET_NUMBA is set but numba is not "
                                     "importable")
        return True
    return numba_available()


# ---------------------------------------------------------------------------
# pure-numpy path
# ---------------------------------------------------------------------------

def _split_derivs_np(exx, eyy, exy, nu, mu):
    """Split energies and their strain derivatives, vectorized over cells."""
    lam_s = exx + eyy
    mean = 0.5 * lam_s
    half_diff = 0.5 * (exx - eyy)
    r = np.sqrt(half_diff ** 2 + exy ** 2)
    lam1 = mean + r
    lam2 = mean - r

    pos_s, neg_s = lam_s + np.abs(lam_s), lam_s - np.abs(lam_s)
    pos_1, neg_1 = lam1 + np.abs(lam1), lam1 - np.abs(lam1)
    pos_2, neg_2 = lam2 + np.abs(lam2), lam2 - np.abs(lam2)

    psi_p = nu / 8.0 * pos_s ** 2 + mu / 4.0 * (pos_1 ** 2 + pos_2 ** 2)
    psi_m = nu / 8.0 * neg_s ** 2 + mu / 4.0 * (neg_1 ** 2 + neg_2 ** 2)

    sgn_s, sgn_1, sgn_2 = np.sign(lam_s), np.sign(lam1), np.sign(lam2)
    a_p = nu / 4.0 * pos_s * (1.0 + sgn_s)
    a_m = nu / 4.0 * neg_s * (1.0 - sgn_s)
    b1_p = mu / 2.0 * pos_1 * (1.0 + sgn_1)
    b1_m = mu / 2.0 * neg_1 * (1.0 - sgn_1)
    b2_p = mu / 2.0 * pos_2 * (1.0 + sgn_2)
    b2_m = mu / 2.0 * neg_2 * (1.0 - sgn_2)

    safe_r = np.where(r > 0.0, r, 1.0)
    dr_xx = np.where(r > 0.0, half_diff / (2.0 * safe_r), 0.0)
    dr_xy = np.where(r > 0.0, exy / safe_r, 0.0)

    dp_xx = a_p + b1_p * (0.5 + dr_xx) + b2_p * (0.5 - dr_xx)
    dp_yy = a_p + b1_p * (0.5 - dr_xx) + b2_p * (0.5 + dr_xx)
    dp_xy = (b1_p - b2_p) * dr_xy
    dm_xx = a_m + b1_m * (0.5 + dr_xx) + b2_m * (0.5 - dr_xx)
    dm_yy = a_m + b1_m * (0.5 - dr_xx) + b2_m * (0.5 + dr_xx)
    dm_xy = (b1_m - b2_m) * dr_xy
    return psi_p, psi_m, dp_xx, dp_yy, dp_xy, dm_xx, dm_yy, dm_xy


def pf_energy_grad_numpy(u, v, phi, hist, h, nu, mu, g_c, l_0):
    """Total energy and nodal gradients; vectorized over all cells at once."""
    corners = lambda f: (f[:-1, :-1], f[1:, :-1], f[:-1, 1:], f[1:, 1:])
    uc, vc, pc, hc = corners(u), corners(v), corners(phi), corners(hist)
    inv = 2.0 / h
    weight = (h / 2.0) ** 2
    c_surf = g_c / (2.0 * l_0)
    c_grad = g_c * l_0 / 2.0

    grad_u = np.zeros_like(u)
    grad_v = np.zeros_like(v)
    grad_phi = np.zeros_like(phi)
    gu_c = [grad_u[:-1, :-1], grad_u[1:, :-1], grad_u[:-1, 1:], grad_u[1:, 1:]]
    gv_c = [grad_v[:-1, :-1], grad_v[1:, :-1], grad_v[:-1, 1:], grad_v[1:, 1:]]
    gp_c = [grad_phi[:-1, :-1], grad_phi[1:, :-1], grad_phi[:-1, 1:],
            grad_phi[1:, 1:]]

    energy = 0.0
    for p in range(4):
        dndx = _DXI_TAB[p] * inv
        dndy = _DETA_TAB[p] * inv
        nsh = _N_TAB[p]
        u_x = sum(dndx[a] * uc[a] for a in range(4))
        u_y = sum(dndy[a] * uc[a] for a in range(4))
        v_x = sum(dndx[a] * vc[a] for a in range(4))
        v_y = sum(dndy[a] * vc[a] for a in range(4))
        phi_g = sum(nsh[a] * pc[a] for a in range(4))
        phi_x = sum(dndx[a] * pc[a] for a in range(4))
        phi_y = sum(dndy[a] * pc[a] for a in range(4))
        h_g = sum(nsh[a] * hc[a] for a in range(4))

        exx, eyy, exy = u_x, v_y, 0.5 * (u_y + v_x)
        psi_p, psi_m, dp_xx, dp_yy, dp_xy, dm_xx, dm_yy, dm_xy = \
            _split_derivs_np(exx, eyy, exy, nu, mu)

        gdeg = (1.0 - phi_g) ** 2
        density = (gdeg * (psi_p + h_g) + psi_m
                   + c_surf * phi_g ** 2 + c_grad * (phi_x ** 2 + phi_y ** 2))
        energy += weight * np.sum(density)

        d_xx = gdeg * dp_xx + dm_xx
        d_yy = gdeg * dp_yy + dm_yy
        d_xy = gdeg * dp_xy + dm_xy
        dphi = (-2.0 * (1.0 - phi_g) * (psi_p + h_g) + 2.0 * c_surf * phi_g)
        for a in range(4):
            gu_c[a] += weight * (d_xx * dndx[a] + 0.5 * d_xy * dndy[a])
            gv_c[a] += weight * (d_yy * dndy[a] + 0.5 * d_xy * dndx[a])
            gp_c[a] += weight * (dphi * nsh[a]
                                 + 2.0 * c_grad * (phi_x * dndx[a]
                                                   + phi_y * dndy[a]))
    return energy, grad_u, grad_v, grad_phi


# ---------------------------------------------------------------------------
# numba path
# ---------------------------------------------------------------------------

if numba_available():
    from numba import njit

    @njit(cache=True)
    def _split_derivs_nb(exx, eyy, exy, nu, mu):
        lam_s = exx + eyy
        mean = 0.5 * lam_s
        half_diff = 0.5 * (exx - eyy)
        r = np.sqrt(half_diff * half_diff + exy * exy)
        lam1 = mean + r
        lam2 = mean - r

        pos_s, neg_s = lam_s + abs(lam_s), lam_s - abs(lam_s)
        pos_1, neg_1 = lam1 + abs(lam1), lam1 - abs(lam1)
        pos_2, neg_2 = lam2 + abs(lam2), lam2 - abs(lam2)

        psi_p = nu / 8.0 * pos_s ** 2 + mu / 4.0 * (pos_1 ** 2 + pos_2 ** 2)
        psi_m = nu / 8.0 * neg_s ** 2 + mu / 4.0 * (neg_1 ** 2 + neg_2 ** 2)

        sgn_s = np.sign(lam_s)
        sgn_1 = np.sign(lam1)
        sgn_2 = np.sign(lam2)
        a_p = nu / 4.0 * pos_s * (1.0 + sgn_s)
        a_m = nu / 4.0 * neg_s * (1.0 - sgn_s)
        b1_p = mu / 2.0 * pos_1 * (1.0 + sgn_1)
        b1_m = mu / 2.0 * neg_1 * (1.0 - sgn_1)
        b2_p = mu / 2.0 * pos_2 * (1.0 + sgn_2)
        b2_m = mu / 2.0 * neg_2 * (1.0 - sgn_2)

        if r > 0.0:
            dr_xx = half_diff / (2.0 * r)
            dr_xy = exy / r
        else:
            dr_xx = 0.0
            dr_xy = 0.0

        dp_xx = a_p + b1_p * (0.5 + dr_xx) + b2_p * (0.5 - dr_xx)
        dp_yy = a_p + b1_p * (0.5 - dr_xx) + b2_p * (0.5 + dr_xx)
        dp_xy = (b1_p - b2_p) * dr_xy
        dm_xx = a_m + b1_m * (0.5 + dr_xx) + b2_m * (0.5 - dr_xx)
        dm_yy = a_m + b1_m * (0.5 - dr_xx) + b2_m * (0.5 + dr_xx)
        dm_xy = (b1_m - b2_m) * dr_xy
        return psi_p, psi_m, dp_xx, dp_yy, dp_xy, dm_xx, dm_yy, dm_xy

    @njit(cache=True)
    def _pf_energy_grad_nb(u, v, phi, hist, h, nu, mu, g_c, l_0,
                           n_tab, dxi_tab, deta_tab):
        nx, ny = u.shape
        inv = 2.0 / h
        weight = (h / 2.0) ** 2
        c_surf = g_c / (2.0 * l_0)
        c_grad = g_c * l_0 / 2.0

        grad_u = np.zeros((nx, ny))
        grad_v = np.zeros((nx, ny))
        grad_phi = np.zeros((nx, ny))
        energy = 0.0

        for i in range(nx - 1):
            for j in range(ny - 1):
                iu = (i, i + 1, i, i + 1)
                ju = (j, j, j + 1, j + 1)
                for p in range(4):
                    u_x = 0.0
                    u_y = 0.0
                    v_x = 0.0
                    v_y = 0.0
                    phi_g = 0.0
                    phi_x = 0.0
                    phi_y = 0.0
                    h_g = 0.0
                    for a in range(4):
                        dndx = dxi_tab[p, a] * inv
                        dndy = deta_tab[p, a] * inv
                        uu = u[iu[a], ju[a]]
                        vv = v[iu[a], ju[a]]
                        pp = phi[iu[a], ju[a]]
                        u_x += dndx * uu
                        u_y += dndy * uu
                        v_x += dndx * vv
                        v_y += dndy * vv
                        phi_g += n_tab[p, a] * pp
                        phi_x += dndx * pp
                        phi_y += dndy * pp
                        h_g += n_tab[p, a] * hist[iu[a], ju[a]]

                    exx = u_x
                    eyy = v_y
                    exy = 0.5 * (u_y + v_x)
                    psi_p, psi_m, dp_xx, dp_yy, dp_xy, dm_xx, dm_yy, dm_xy = \
                        _split_derivs_nb(exx, eyy, exy, nu, mu)

                    gdeg = (1.0 - phi_g) ** 2
                    energy += weight * (
                        gdeg * (psi_p + h_g) + psi_m
                        + c_surf * phi_g ** 2
                        + c_grad * (phi_x ** 2 + phi_y ** 2))

                    d_xx = gdeg * dp_xx + dm_xx
                    d_yy = gdeg * dp_yy + dm_yy
                    d_xy = gdeg * dp_xy + dm_xy
                    dphi = (-2.0 * (1.0 - phi_g) * (psi_p + h_g)
                            + 2.0 * c_surf * phi_g)
                    for a in range(4):
                        dndx = dxi_tab[p, a] * inv
                        dndy = deta_tab[p, a] * inv
                        grad_u[iu[a], ju[a]] += weight * (
                            d_xx * dndx + 0.5 * d_xy * dndy)
                        grad_v[iu[a], ju[a]] += weight * (
                            d_yy * dndy + 0.5 * d_xy * dndx)
                        grad_phi[iu[a], ju[a]] += weight * (
                            dphi * n_tab[p, a]
                            + 2.0 * c_grad * (phi_x * dndx + phi_y * dndy))
        return energy, grad_u, grad_v, grad_phi

    def pf_energy_grad_numba(u, v, phi, hist, h, nu, mu, g_c, l_0):
        return _pf_energy_grad_nb(u, v, phi, hist, h, nu, mu, g_c, l_0,
                                  _N_TAB, _DXI_TAB, _DETA_TAB)
else:  # pragma: no cover - exercised only without numba installed
    pf_energy_grad_numba = None


def pf_energy_grad(u, v, phi, hist, h, nu, mu, g_c, l_0):
    """Dispatch to the path selected by VDEEPONET_NUMBA (auto by default)."""
    if numba_enabled():
        return pf_energy_grad_numba(u, v, phi, hist, h, nu, mu, g_c, l_0)
    return pf_energy_grad_numpy(u, v, phi, hist, h, nu, mu, g_c, l_0)
