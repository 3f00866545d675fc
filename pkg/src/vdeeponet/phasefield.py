"""Phase-field fracture physics on arrays of evaluation points.

Units: lengths in mm, Lame constants in kN/mm^2, critical energy release
rate in kN/mm; energy densities come out in kN/mm^2 and integrated energies
in kN*mm per unit thickness. All functions are pure and vectorized over
leading point dimensions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, NumericalError


@dataclass(frozen=True)
class MaterialParams:
    nu_lame: float   # first Lame constant
    mu_lame: float   # second Lame constant (shear modulus)
    g_c: float       # critical energy release rate
    l_0: float       # phase-field length scale

    def __post_init__(self):
        if self.mu_lame <= 0.0 or self.g_c <= 0.0 or self.l_0 <= 0.0:
            raise ArgumentError("mu_lame, g_c and l_0 must all be > 0")


@dataclass(frozen=True)
class CrackSegment:
    x0: float
    y0: float
    x1: float
    y1: float

    def __post_init__(self):
        if self.x0 == self.x1 and self.y0 == self.y1:
            raise ArgumentError("crack segment endpoints coincide")
        for v in (self.x0, self.y0, self.x1, self.y1):
            if not (0.0 <= v <= 1.0):
                raise ArgumentError("crack segment must lie in the unit square")

    @property
    def a(self) -> np.ndarray:
        return np.array([self.x0, self.y0])

    @property
    def b(self) -> np.ndarray:
        return np.array([self.x1, self.y1])


@dataclass(frozen=True)
class StrainState:
    """Small-strain components with eigenvalues of the symmetric tensor."""
    eps_xx: np.ndarray
    eps_yy: np.ndarray
    eps_xy: np.ndarray
    lam1: np.ndarray
    lam2: np.ndarray

    @property
    def lam_s(self) -> np.ndarray:
        return self.lam1 + self.lam2


@dataclass(frozen=True)
class EnergyDensity:
    f_e: np.ndarray
    f_c: np.ndarray
    psi_plus: np.ndarray
    psi_minus: np.ndarray


@dataclass(frozen=True)
class HistoryField:
    points: np.ndarray  # (n, 2)
    values: np.ndarray  # (n,), >= 0
    step: int = 0

    def __post_init__(self):
        if self.points.shape[0] != self.values.shape[0]:
            raise ArgumentError("history point/value counts differ")
        if np.any(self.values < 0.0):
            raise ArgumentError("history values must be >= 0")


class ClampCounter:
    """Counts phase values clipped to [0, 1] during energy evaluation."""

    def __init__(self):
        self.events = 0

    def add(self, n: int):
        self.events += int(n)

    def reset(self):
        self.events = 0


clamp_counter = ClampCounter()


def clamp_phase(phi, counter: ClampCounter = clamp_counter) -> np.ndarray:
    phi = np.asarray(phi, dtype=np.float64)
    outside = np.count_nonzero((phi < 0.0) | (phi > 1.0))
    if outside:
        counter.add(outside)
    return np.clip(phi, 0.0, 1.0)


def degradation(phi) -> np.ndarray:
    """Stiffness multiplier (1-phi)^2; phi clipped to [0, 1] with a counter."""
    phi = clamp_phase(phi)
    return (1.0 - phi) ** 2


def crack_density(phi, grad_phi, l_0: float) -> np.ndarray:
    """Diffuse crack-surface density (1/2l0)(phi^2 + l0^2 |grad phi|^2)."""
    if l_0 <= 0.0:
        raise ArgumentError("l_0 must be > 0")
    phi = np.asarray(phi, dtype=np.float64)
    grad_phi = np.asarray(grad_phi, dtype=np.float64)
    grad_sq = np.sum(grad_phi * grad_phi, axis=-1)
    return (phi * phi + l_0 * l_0 * grad_sq) / (2.0 * l_0)


def segment_distance(points, crack: CrackSegment) -> np.ndarray:
    """Euclidean distance from each point to the segment, endpoint caps included."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    ab = crack.b - crack.a
    denom = float(ab @ ab)
    t = np.clip(((pts - crack.a) @ ab) / denom, 0.0, 1.0)
    closest = crack.a + t[:, None] * ab
    d = np.linalg.norm(pts - closest, axis=1)
    return d if np.asarray(points).ndim > 1 else d[0]


def initial_history(points, crack: CrackSegment, material: MaterialParams,
                    b_scalar: float) -> np.ndarray:
    """Seed history ridge: (B*Gc/2l0)(1 - 2d/l0) within d <= l0/2, else 0."""
    if b_scalar <= 0.0:
        raise ArgumentError("b_scalar must be > 0")
    d = np.asarray(segment_distance(points, crack), dtype=np.float64)
    peak = b_scalar * material.g_c / (2.0 * material.l_0)
    ridge = peak * (1.0 - 2.0 * d / material.l_0)
    return np.where(d <= material.l_0 / 2.0, ridge, 0.0)


def initial_history_multi(points, cracks, material: MaterialParams,
                          b_scalar: float) -> np.ndarray:
    """Pointwise max of the seed field over several crack segments."""
    fields = [initial_history(points, c, material, b_scalar) for c in cracks]
    return np.maximum.reduce(fields) if fields else \
        np.zeros(np.atleast_2d(points).shape[0])


def strain_from_gradients(du_dx, du_dy, dv_dx, dv_dy) -> StrainState:
    """Symmetric small-strain tensor and its eigenvalues (closed 2x2 form)."""
    arrs = [np.asarray(a, dtype=np.float64) for a in (du_dx, du_dy, dv_dx, dv_dy)]
    if any(not np.all(np.isfinite(a)) for a in arrs):
        raise NumericalError("non-finite displacement gradient")
    du_dx, du_dy, dv_dx, dv_dy = arrs
    eps_xx = du_dx
    eps_yy = dv_dy
    eps_xy = 0.5 * (du_dy + dv_dx)
    mean = 0.5 * (eps_xx + eps_yy)
    radius = np.sqrt((0.5 * (eps_xx - eps_yy)) ** 2 + eps_xy ** 2)
    return StrainState(eps_xx, eps_yy, eps_xy, mean + radius, mean - radius)


def strain_split(strain: StrainState, material: MaterialParams):
    """Tensile/compressive energy split over the strain eigenvalues."""
    nu, mu = material.nu_lame, material.mu_lame
    lam_s = strain.lam_s
    psi_plus = nu / 8.0 * (lam_s + np.abs(lam_s)) ** 2 + mu / 4.0 * (
        (strain.lam1 + np.abs(strain.lam1)) ** 2
        + (strain.lam2 + np.abs(strain.lam2)) ** 2)
    psi_minus = nu / 8.0 * (lam_s - np.abs(lam_s)) ** 2 + mu / 4.0 * (
        (strain.lam1 - np.abs(strain.lam1)) ** 2
        + (strain.lam2 - np.abs(strain.lam2)) ** 2)
    return psi_plus, psi_minus


def elastic_density(psi_plus, psi_minus, phi) -> np.ndarray:
    """Degraded elastic energy density g(phi) psi+ + psi-."""
    return degradation(phi) * np.asarray(psi_plus) + np.asarray(psi_minus)


def fracture_density(phi, grad_phi, history, material: MaterialParams) -> np.ndarray:
    """Crack-surface energy plus the degraded history driving term.

    The g(phi)*H term carries a positive sign so that a seeded or accumulated
    history ridge lowers the energy as phi grows toward 1 there; with B and the
    seed field of :func:`initial_history` this puts the pointwise optimum at
    phi = B/(1+B) on a fresh crack.
    """
    history = np.asarray(history, dtype=np.float64)
    if np.any(history < 0.0):
        raise ArgumentError("history must be >= 0")
    surface = material.g_c * crack_density(phi, grad_phi, material.l_0)
    return surface + degradation(phi) * history


def total_energy(densities, domain_area: float) -> float:
    """Monte-Carlo quadrature: area times the mean of f_e + f_c per point."""
    if domain_area <= 0.0:
        raise ArgumentError("domain_area must be > 0")
    if isinstance(densities, EnergyDensity):
        total = np.asarray(densities.f_e) + np.asarray(densities.f_c)
    else:
        items = list(densities)
        if not items:
            raise ArgumentError("empty density sample list")
        total = np.concatenate([
            np.atleast_1d(np.asarray(d.f_e) + np.asarray(d.f_c)) for d in items])
    if total.size == 0:
        raise ArgumentError("empty density sample list")
    return float(domain_area * np.mean(total))


def update_history(previous: HistoryField, current_psi_plus) -> HistoryField:
    """Pointwise max with the current tensile energy; step index advances."""
    psi = np.asarray(current_psi_plus, dtype=np.float64)
    if psi.shape != previous.values.shape:
        raise ArgumentError(f"psi+ shape {psi.shape} does not match history "
                            f"shape {previous.values.shape}")
    return HistoryField(previous.points, np.maximum(previous.values, psi),
                        previous.step + 1)
