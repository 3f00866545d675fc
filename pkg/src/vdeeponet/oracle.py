"""Desk-scale ground-truth generators on uniform grids.

Two solvers double as test oracles and dataset producers: direct minimization
of the discrete phase-field energy over nodal (u, v, phi), and a 5-point
flux-form solver for heterogeneous Darcy flow. The phase-field minimizer is
projected gradient descent with Barzilai-Borwein steps and a monotone
backtracking line search; phi is boxed to [0, 1] by projection each iterate.

Dirichlet values follow the lift polynomials of the operator networks (both
vertical edges carry u = 0 in tension; v = 0 on the whole boundary in shear),
so oracle fields live in the same constrained space the surrogates predict in.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from . import io as vio
from ._kernels import _DETA_TAB, _DXI_TAB, _N_TAB, _split_derivs_np, pf_energy_grad
from .deeponet import LiftSpec
from .errors import ArgumentError, NumericalError
from .phasefield import (CrackSegment, MaterialParams, initial_history,
                         initial_history_multi, strain_from_gradients,
                         strain_split)


@dataclass(frozen=True)
class Grid:
    nx: int
    ny: int

    def __post_init__(self):
        if self.nx < 8 or self.ny < 8:
            raise ArgumentError("grid needs nx, ny >= 8")

    @property
    def h(self) -> float:
        return 1.0 / (self.nx - 1)

    @property
    def hy(self) -> float:
        return 1.0 / (self.ny - 1)

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.nx)

    @property
    def ys(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.ny)

    def nodes(self) -> np.ndarray:
        """All node coordinates, x-major: row k = (xs[k // ny], ys[k % ny])."""
        xx, yy = np.meshgrid(self.xs, self.ys, indexing="ij")
        return np.column_stack([xx.reshape(-1), yy.reshape(-1)])


@dataclass
class GridFields:
    u: np.ndarray
    v: np.ndarray
    phi: np.ndarray
    hist: np.ndarray

    def copy(self) -> "GridFields":
        return GridFields(self.u.copy(), self.v.copy(), self.phi.copy(),
                          self.hist.copy())


@dataclass
class SolveReport:
    converged: bool
    iterations: int
    grad_norm: float
    energies: list = field(default_factory=list)
    audit: dict = field(default_factory=dict)


def init_fields(grid: Grid, cracks, material: MaterialParams,
                b_scalar: float) -> GridFields:
    """Zero displacements with the seeded nodal history ridge."""
    hist = initial_history_multi(grid.nodes(), cracks, material,
                                 b_scalar).reshape(grid.nx, grid.ny)
    zero = np.zeros((grid.nx, grid.ny))
    return GridFields(zero.copy(), zero.copy(), zero.copy(), hist)


def dirichlet_values(grid: Grid, scenario: str, delta_w: float):
    """Masks and values implied by the lift polynomials of each scenario."""
    shape = (grid.nx, grid.ny)
    mask_u = np.zeros(shape, dtype=bool)
    mask_v = np.zeros(shape, dtype=bool)
    val_u = np.zeros(shape)
    val_v = np.zeros(shape)
    if scenario == "tensile":
        mask_u[0, :] = mask_u[-1, :] = True
        mask_v[:, 0] = True
        mask_v[:, -1] = True
        val_v[:, -1] = delta_w
    elif scenario == "shear":
        mask_u[:, 0] = True
        mask_u[:, -1] = True
        val_u[:, -1] = delta_w
        mask_v[0, :] = mask_v[-1, :] = mask_v[:, 0] = mask_v[:, -1] = True
    else:
        raise ArgumentError(f"no fracture boundary set for '{scenario}'")
    return mask_u, val_u, mask_v, val_v


def nodal_displacement_gradients(grid: Grid, u: np.ndarray, v: np.ndarray):
    du_dx = np.gradient(u, grid.h, axis=0, edge_order=2)
    du_dy = np.gradient(u, grid.hy, axis=1, edge_order=2)
    dv_dx = np.gradient(v, grid.h, axis=0, edge_order=2)
    dv_dy = np.gradient(v, grid.hy, axis=1, edge_order=2)
    return du_dx, du_dy, dv_dx, dv_dy


def nodal_psi_plus(grid: Grid, u: np.ndarray, v: np.ndarray,
                   material: MaterialParams) -> np.ndarray:
    """Tensile strain-energy density at nodes from central differences."""
    du_dx, du_dy, dv_dx, dv_dy = nodal_displacement_gradients(grid, u, v)
    strain = strain_from_gradients(du_dx, du_dy, dv_dx, dv_dy)
    psi_plus, _ = strain_split(strain, material)
    return psi_plus


def energy_audit(grid: Grid, fields: GridFields,
                 material: MaterialParams) -> dict:
    """Elastic / crack-surface / history split of the discrete energy."""
    corners = lambda f: (f[:-1, :-1], f[1:, :-1], f[:-1, 1:], f[1:, 1:])
    uc, vc = corners(fields.u), corners(fields.v)
    pc, hc = corners(fields.phi), corners(fields.hist)
    inv = 2.0 / grid.h
    weight = (grid.h / 2.0) ** 2
    elastic = surface = hist_term = 0.0
    for p in range(4):
        dndx, dndy, nsh = _DXI_TAB[p] * inv, _DETA_TAB[p] * inv, _N_TAB[p]
        u_x = sum(dndx[a] * uc[a] for a in range(4))
        u_y = sum(dndy[a] * uc[a] for a in range(4))
        v_x = sum(dndx[a] * vc[a] for a in range(4))
        v_y = sum(dndy[a] * vc[a] for a in range(4))
        phi_g = sum(nsh[a] * pc[a] for a in range(4))
        phi_x = sum(dndx[a] * pc[a] for a in range(4))
        phi_y = sum(dndy[a] * pc[a] for a in range(4))
        h_g = sum(nsh[a] * hc[a] for a in range(4))
        psi_p, psi_m = _split_derivs_np(u_x, v_y, 0.5 * (u_y + v_x),
                                        material.nu_lame, material.mu_lame)[:2]
        gdeg = (1.0 - phi_g) ** 2
        elastic += weight * np.sum(gdeg * psi_p + psi_m)
        surface += weight * np.sum(
            material.g_c / (2.0 * material.l_0)
            * (phi_g ** 2 + material.l_0 ** 2 * (phi_x ** 2 + phi_y ** 2)))
        hist_term += weight * np.sum(gdeg * h_g)
    return {"elastic": float(elastic), "surface": float(surface),
            "history": float(hist_term),
            "total": float(elastic + surface + hist_term)}


def _projected_grad_norm(gu, gv, gp, phi, mask_u, mask_v):
    gu = np.where(mask_u, 0.0, gu)
    gv = np.where(mask_v, 0.0, gv)
    gp = gp.copy()
    gp[(phi <= 0.0) & (gp > 0.0)] = 0.0
    gp[(phi >= 1.0) & (gp < 0.0)] = 0.0
    return max(np.abs(gu).max(), np.abs(gv).max(), np.abs(gp).max()), gu, gv, gp


def solve_phasefield_step(grid: Grid, fields_prev: GridFields,
                          material: MaterialParams, cracks, lift: LiftSpec,
                          delta_w: float, *, tol: float = 1e-8,
                          max_iter: int = 40_000,
                          track_energies: bool = False):
    """Minimize the discrete energy at one load step; history stays frozen.

    Returns the solved fields (with the history then advanced by the solved
    tensile energy) and a :class:`SolveReport`. Non-convergence at the cap
    returns the best iterate with ``converged=False``; a non-finite energy
    aborts.
    """
    if grid.nx != grid.ny:
        raise ArgumentError("phase-field solver needs a square grid")
    mask_u, val_u, mask_v, val_v = dirichlet_values(grid, lift.scenario, delta_w)

    u = np.where(mask_u, val_u, fields_prev.u)
    v = np.where(mask_v, val_v, fields_prev.v)
    hist = fields_prev.hist
    c_surf = material.g_c / (2.0 * material.l_0)
    phi = np.clip(np.maximum(fields_prev.phi, hist / (hist + c_surf)), 0.0, 1.0)
    fresh = not (np.any(fields_prev.u) or np.any(fields_prev.v))
    if fresh:
        ramp = delta_w * grid.ys[None, :].repeat(grid.nx, 0)
        if lift.scenario == "tensile":
            v = np.where(mask_v, val_v, ramp)
        else:
            u = np.where(mask_u, val_u, ramp)

    args = (hist, grid.h, material.nu_lame, material.mu_lame, material.g_c,
            material.l_0)
    energy, gu, gv, gp = pf_energy_grad(u, v, phi, *args)
    norm, gu, gv, gp = _projected_grad_norm(gu, gv, gp, phi, mask_u, mask_v)
    energies = [energy] if track_energies else []
    # per-block Barzilai-Borwein steps: the elastic and phase blocks carry
    # curvatures orders of magnitude apart, a single step stalls the descent
    steps = [1e-3 / max(norm, 1.0)] * 3
    converged = norm < tol
    it = 0
    while not converged and it < max_iter:
        it += 1
        accepted = False
        scale_back = 1.0
        for _ in range(60):
            u_new = np.where(mask_u, val_u, u - scale_back * steps[0] * gu)
            v_new = np.where(mask_v, val_v, v - scale_back * steps[1] * gv)
            phi_new = np.clip(phi - scale_back * steps[2] * gp, 0.0, 1.0)
            e_new, gu_n, gv_n, gp_n = pf_energy_grad(u_new, v_new, phi_new, *args)
            if not np.isfinite(e_new):
                raise NumericalError("phase-field energy diverged")
            if e_new <= energy:
                accepted = True
                break
            scale_back *= 0.5
        if not accepted:
            break  # line search stalled at floating-point resolution
        for b, (x_old, x_new, g_old, g_new) in enumerate((
                (u, u_new, gu, gu_n), (v, v_new, gv, gv_n),
                (phi, phi_new, gp, gp_n))):
            s = x_new - x_old
            sy = float(np.sum(s * (g_new - g_old)))
            s_sq = float(np.sum(s * s))
            if sy > 0.0 and s_sq > 0.0:
                steps[b] = float(np.clip(s_sq / sy, 1e-14, 1e6))
            else:
                steps[b] = float(np.clip(steps[b] * scale_back * 2.0,
                                         1e-14, 1e6))
        u, v, phi, energy = u_new, v_new, phi_new, e_new
        norm, gu, gv, gp = _projected_grad_norm(gu_n, gv_n, gp_n, phi,
                                                mask_u, mask_v)
        if track_energies:
            energies.append(energy)
        converged = norm < tol

    solved = GridFields(u, v, phi, hist)
    psi_plus = nodal_psi_plus(grid, u, v, material)
    solved.hist = np.maximum(hist, psi_plus)
    report = SolveReport(converged, it, norm, energies,
                         energy_audit(grid, GridFields(u, v, phi, hist), material))
    return solved, report


def solve_schedule(grid: Grid, cracks, material: MaterialParams, scenario: str,
                   schedule, *, b_scalar: float = 1000.0, tol: float = 1e-8,
                   max_iter: int = 40_000):
    """Run all load steps for one crack configuration; returns per-step output."""
    fields = init_fields(grid, cracks, material, b_scalar)
    steps = []
    for delta_w in schedule:
        fields, report = solve_phasefield_step(
            grid, fields, material, cracks, LiftSpec(scenario, delta_w),
            delta_w, tol=tol, max_iter=max_iter)
        steps.append((fields.copy(), report))
    return steps


def bilinear_sample(grid: Grid, nodal: np.ndarray, points: np.ndarray):
    """Bilinear interpolation of a nodal field at arbitrary unit-square points."""
    pts = np.atleast_2d(points)
    fx = np.clip(pts[:, 0], 0.0, 1.0) / grid.h
    fy = np.clip(pts[:, 1], 0.0, 1.0) / grid.hy
    i = np.clip(fx.astype(int), 0, grid.nx - 2)
    j = np.clip(fy.astype(int), 0, grid.ny - 2)
    tx = fx - i
    ty = fy - j
    return ((1 - tx) * (1 - ty) * nodal[i, j] + tx * (1 - ty) * nodal[i + 1, j]
            + (1 - tx) * ty * nodal[i, j + 1] + tx * ty * nodal[i + 1, j + 1])


# ---------------------------------------------------------------------------
# Darcy flow
# ---------------------------------------------------------------------------

def darcy_fd_solve(conductivity: np.ndarray, grid: Grid) -> np.ndarray:
    """Solve -div(K grad h) = 1 with h = 0 on the boundary.

    Flux-form 5-point stencil with arithmetic face averaging of K; sparse
    direct solve, residual checked below 1e-10.
    """
    k = np.asarray(conductivity, dtype=np.float64)
    if k.shape != (grid.nx, grid.ny):
        raise ArgumentError(f"conductivity shape {k.shape} != grid "
                            f"{(grid.nx, grid.ny)}")
    if np.any(k <= 0.0):
        raise ArgumentError("conductivity must be positive everywhere")
    if abs(grid.h - grid.hy) > 1e-15:
        raise ArgumentError("darcy solver needs a square grid")
    nxi, nyi = grid.nx - 2, grid.ny - 2
    idx = lambda i, j: (i - 1) * nyi + (j - 1)
    inv_h2 = 1.0 / grid.h ** 2

    rows, cols, vals = [], [], []
    for i in range(1, grid.nx - 1):
        for j in range(1, grid.ny - 1):
            center = idx(i, j)
            diag = 0.0
            for (ii, jj) in ((i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)):
                k_face = 0.5 * (k[i, j] + k[ii, jj])
                diag += k_face * inv_h2
                if 1 <= ii <= grid.nx - 2 and 1 <= jj <= grid.ny - 2:
                    rows.append(center)
                    cols.append(idx(ii, jj))
                    vals.append(-k_face * inv_h2)
            rows.append(center)
            cols.append(center)
            vals.append(diag)
    a = scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(nxi * nyi, nxi * nyi))
    b = np.ones(nxi * nyi)
    x = scipy.sparse.linalg.spsolve(a, b)
    residual = np.abs(a @ x - b).max()
    if residual > 1e-10:
        raise NumericalError(f"darcy solve residual {residual:.2e} > 1e-10")
    h_full = np.zeros((grid.nx, grid.ny))
    h_full[1:-1, 1:-1] = x.reshape(nxi, nyi)
    return h_full


def darcy_grid_energy(h_field: np.ndarray, conductivity: np.ndarray,
                      grid: Grid) -> float:
    """Discrete quadratic energy whose minimizer is :func:`darcy_fd_solve`."""
    k = np.asarray(conductivity, dtype=np.float64)
    h = np.asarray(h_field, dtype=np.float64)
    kx = 0.5 * (k[1:, :] + k[:-1, :])
    ky = 0.5 * (k[:, 1:] + k[:, :-1])
    dx = (h[1:, :] - h[:-1, :])
    dy = (h[:, 1:] - h[:, :-1])
    quad = 0.5 * (np.sum(kx * dx * dx) + np.sum(ky * dy * dy))
    return float(quad - grid.h ** 2 * np.sum(h))


# ---------------------------------------------------------------------------
# dataset generation
# ---------------------------------------------------------------------------

def generate_dataset(out_dir, scenario: str, cracks, schedule, grid: Grid,
                     material: MaterialParams, sensors: np.ndarray, *,
                     b_scalar: float = 1000.0, seed: int = 0,
                     tol: float = 1e-8, max_iter: int = 40_000) -> dict:
    """Solve every (crack, step), write snapshots/energies and a manifest.

    Per crack configuration ``ci`` the files are
    ``fields_crack{ci}_step{k}.csv`` for steps 1..r (grid-node fields) and
    ``energy_crack{ci}_step{k}.csv`` for steps 0..r-1 (sensor tensile energy;
    step 0 is the seeded ridge). Outputs are bit-reproducible.
    """
    os.makedirs(out_dir, exist_ok=True)
    nodes = None
    file_names = []
    reports = []
    for ci, crack in enumerate(cracks):
        crack_list = [crack] if isinstance(crack, CrackSegment) else list(crack)
        h0_sens = initial_history_multi(sensors, crack_list, material, b_scalar)
        name = f"energy_crack{ci:02d}_step00.csv"
        vio.write_energy_csv(os.path.join(out_dir, name), sensors, h0_sens)
        file_names.append(name)

        steps = solve_schedule(grid, crack_list, material, scenario, schedule,
                               b_scalar=b_scalar, tol=tol, max_iter=max_iter)
        if nodes is None:
            nodes = grid.nodes()
        for k, (fields, report) in enumerate(steps, start=1):
            reports.append({"crack": ci, "step": k,
                            "converged": bool(report.converged),
                            "iterations": report.iterations,
                            "grad_norm": report.grad_norm,
                            "audit": report.audit})
            if not report.converged:
                raise NumericalError(
                    f"oracle did not converge for crack {ci} step {k} "
                    f"(grad norm {report.grad_norm:.3e})")
            name = f"fields_crack{ci:02d}_step{k:02d}.csv"
            vio.write_fields_csv(os.path.join(out_dir, name), nodes,
                                 fields.u.reshape(-1), fields.v.reshape(-1),
                                 fields.phi.reshape(-1))
            file_names.append(name)
            if k < len(schedule):
                psi_sens = bilinear_sample(
                    grid, nodal_psi_plus(grid, fields.u, fields.v, material),
                    sensors)
                name = f"energy_crack{ci:02d}_step{k:02d}.csv"
                vio.write_energy_csv(os.path.join(out_dir, name), sensors,
                                     psi_sens)
                file_names.append(name)

    sensors_name = "sensors.csv"
    vio.write_sensors_csv(os.path.join(out_dir, sensors_name), sensors)
    file_names.append(sensors_name)

    def crack_entry(cr):
        segments = [cr] if isinstance(cr, CrackSegment) else list(cr)
        return [[[c.x0, c.y0], [c.x1, c.y1]] for c in segments]

    payload = {
        "format_version": 1,
        "scenario": scenario,
        "schedule": [float(w) for w in schedule],
        "cracks": [crack_entry(cr) for cr in cracks],
        "grid": {"nx": grid.nx, "ny": grid.ny},
        "material": {"nu_lame": material.nu_lame, "mu_lame": material.mu_lame,
                     "g_c": material.g_c, "l_0": material.l_0},
        "b_scalar": b_scalar,
        "seed": seed,
        "sensor_count": int(sensors.shape[0]),
        "solves": reports,
    }
    return vio.write_manifest(os.path.join(out_dir, "manifest.json"), payload,
                              file_names)
