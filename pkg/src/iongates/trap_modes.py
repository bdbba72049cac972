"""Equilibrium positions, axial normal modes and Lamb-Dicke factors of a linear chain.

Lengths are in units of the harmonic length scale l = (e^2 / (4 pi eps0 m nu1^2))^(1/3)
and frequencies in units of nu1, so the dimensionless potential of a harmonic
trap is sum_i u_i^2 / 2 + sum_{i<j} 1 / |u_i - u_j|.
"""

from dataclasses import dataclass, field
from typing import Optional
import warnings

import numpy as np
from scipy import constants

from .errors import ConfigError, LambDickeWarning, NegativeCurvature, NoConvergence, NotOrthogonal

AMU = constants.atomic_mass
HBAR = constants.hbar

SR88_MASS_AMU = 87.9056
SR88_WAVELENGTH = 674e-9

_ORTHO_TOL = 1e-10
_COM_OVERLAP = 1 - 1e-8


@dataclass(frozen=True)
class TrapModel:
    """Trap description. ``nu1`` is angular (rad/s); ``wave_number`` in rad/m.

    ``kind`` is one of ``harmonic``, ``equal_spaced`` or ``custom``. For
    ``equal_spaced`` the ions sit at ``spacing`` apart and ``curvature``
    optionally gives per-site trap curvatures; the default ``"balanced"``
    takes them from the odd polynomial trap force that holds the grid in
    equilibrium, ``"uniform"`` uses one curvature for every site. Equal-spaced
    frequencies are rescaled so the lowest mode is nu1. For ``custom``
    supply either ``positions`` (+ optional ``curvature``) or a full mode set
    ``mode_nu`` (units of nu1) and ``mode_matrix``.
    """

    kind: str = "harmonic"
    nu1: float = 2 * np.pi * 400e3
    ion_mass: float = SR88_MASS_AMU * AMU
    wave_number: float = 2 * np.pi / SR88_WAVELENGTH
    spacing: float = 1.0
    curvature: Optional[object] = None
    positions: Optional[tuple] = None
    mode_nu: Optional[tuple] = None
    mode_matrix: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in ("harmonic", "equal_spaced", "custom"):
            raise ConfigError(f"unknown trap kind {self.kind!r}")
        if not (self.nu1 > 0 and self.ion_mass > 0 and self.wave_number > 0):
            raise ConfigError("nu1, ion_mass and wave_number must be positive")
        if self.kind == "custom" and self.positions is None and self.mode_nu is None:
            raise ConfigError("custom trap needs positions or a full mode set")
        if self.kind == "equal_spaced" and not self.spacing > 0:
            raise ConfigError("spacing must be positive")


@dataclass(frozen=True)
class IonChainModes:
    """Axial mode set. ``nu`` is in units of nu1 (ascending); rows of ``O`` are modes."""

    n_ions: int
    nu: np.ndarray
    O: np.ndarray
    eta: np.ndarray
    com_index: Optional[int] = None
    nu1: float = 2 * np.pi * 400e3
    positions: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def nu_si(self):
        return self.nu * self.nu1

    def with_eta(self, eta):
        return IonChainModes(self.n_ions, self.nu, self.O, np.asarray(eta, float),
                             self.com_index, self.nu1, self.positions)

    def shifted(self, dnu):
        """Copy with every mode frequency shifted by ``dnu`` (units of nu1); O and eta kept."""
        return IonChainModes(self.n_ions, self.nu + dnu, self.O, self.eta,
                             self.com_index, self.nu1, self.positions)


def _coulomb_gradient(u):
    d = u[:, None] - u[None, :]
    np.fill_diagonal(d, 1.0)
    f = np.sign(d) / d**2
    np.fill_diagonal(f, 0.0)
    return -f.sum(axis=1)


def coulomb_hessian(u):
    """Hessian of sum_{i<j} 1/|u_i - u_j| at positions ``u``."""
    u = np.asarray(u, dtype=float)
    d = np.abs(u[:, None] - u[None, :])
    np.fill_diagonal(d, 1.0)
    h = -2.0 / d**3
    np.fill_diagonal(h, 0.0)
    np.fill_diagonal(h, -h.sum(axis=1))
    return h


def _harmonic_energy(u):
    d = np.abs(u[:, None] - u[None, :])
    iu = np.triu_indices(len(u), 1)
    return 0.5 * np.sum(u**2) + np.sum(1.0 / d[iu])


def equilibrium_positions(n_ions, trap=None, max_iter=200, tol=1e-12):
    """Dimensionless equilibrium positions, sorted ascending.

    Harmonic traps use damped Newton on the force balance; equal_spaced
    returns a centred grid with the trap's spacing.
    """
    if n_ions < 1:
        raise ConfigError("n_ions must be >= 1")
    kind = "harmonic" if trap is None else trap.kind
    if kind == "equal_spaced":
        return trap.spacing * (np.arange(n_ions) - 0.5 * (n_ions - 1))
    if kind != "harmonic":
        raise ConfigError(f"equilibrium positions undefined for kind {kind!r}")
    if n_ions == 1:
        return np.zeros(1)

    # Rough chain length ~ 2 N^0.56 (James); close enough for Newton.
    half = n_ions**0.56
    u = np.linspace(-half, half, n_ions)
    for _ in range(max_iter):
        g = u + _coulomb_gradient(u)
        gnorm = np.linalg.norm(g)
        if gnorm < tol:
            return np.sort(u)
        H = np.eye(n_ions) + coulomb_hessian(u)
        step = np.linalg.solve(H, -g)
        e0 = _harmonic_energy(u)
        t = 1.0
        while t > 1e-8:
            trial = u + t * step
            if np.all(np.diff(trial) > 0) and _harmonic_energy(trial) <= e0 + 1e-14 * abs(e0):
                break
            t *= 0.5
        u = u + t * step
    g = u + _coulomb_gradient(u)
    if np.linalg.norm(g) < tol:
        return np.sort(u)
    raise NoConvergence(f"equilibrium solve stalled at |grad| = {np.linalg.norm(g):.3e}")


def _fix_signs(vecs):
    # Largest-magnitude entry positive; first index wins ties.
    out = vecs.copy()
    for row in out:
        m = np.max(np.abs(row))
        k = int(np.argmax(np.abs(row) >= m - 1e-12))
        if row[k] < 0:
            row *= -1
    return out


def _find_com(O):
    n = O.shape[1]
    overlap = np.abs(O @ (np.ones(n) / np.sqrt(n)))
    k = int(np.argmax(overlap))
    return k if overlap[k] > _COM_OVERLAP else None


def check_mode_matrix(O):
    O = np.asarray(O, dtype=float)
    if O.ndim != 2 or O.shape[0] != O.shape[1]:
        raise NotOrthogonal("mode matrix must be square")
    err = np.max(np.abs(O @ O.T - np.eye(O.shape[0])))
    if err > _ORTHO_TOL:
        raise NotOrthogonal(f"mode matrix rows not orthonormal (max error {err:.2e})")
    return O


def lamb_dicke(nu, trap):
    """eta_j = k sqrt(hbar / (2 m nu_j)) for angular ``nu`` in rad/s."""
    nu = np.asarray(nu, dtype=float)
    if np.any(nu <= 0):
        raise NegativeCurvature("mode frequencies must be positive")
    eta = trap.wave_number * np.sqrt(HBAR / (2 * trap.ion_mass * nu))
    if np.any(eta >= 0.3):
        warnings.warn(f"Lamb-Dicke factor up to {eta.max():.3f}; expansion is poor", LambDickeWarning)
    return eta


def balancing_curvature(positions):
    """Site curvatures U''(u_i) of the odd polynomial force that cancels the Coulomb force.

    The trap force is interpolated exactly through the mirror-symmetric
    positions with one odd power per ion pair, then differentiated.
    """
    u = np.asarray(positions, dtype=float)
    if len(u) < 2:
        return np.ones(len(u))
    if not np.allclose(np.sort(u), -np.sort(u)[::-1], atol=1e-12 * np.max(np.abs(u))):
        raise ConfigError("balanced curvature needs mirror-symmetric positions")
    scale = np.max(np.abs(u))
    x = u / scale
    push = -_coulomb_gradient(u)  # Coulomb force on each ion
    right = x > 1e-12
    powers = np.arange(1, 2 * int(np.sum(right)), 2)
    coef = np.linalg.solve(x[right, None] ** powers, push[right])
    # d/du of sum c_p (u / scale)^p
    return np.array([np.sum(coef * powers * xi ** (powers - 1)) for xi in x]) / scale


def _modes_from_hessian(H):
    w, v = np.linalg.eigh(H)
    if np.any(w <= 0):
        raise NegativeCurvature(f"non-positive Hessian eigenvalue {w.min():.3e}")
    order = np.argsort(w)
    return np.sqrt(w[order]), _fix_signs(v[:, order].T)


def normal_modes(n_ions, trap=None):
    """Build the IonChainModes for ``n_ions`` ions in ``trap`` (default: Sr88 harmonic)."""
    trap = trap or TrapModel()
    positions = None
    if trap.kind == "custom" and trap.mode_nu is not None:
        nu = np.asarray(trap.mode_nu, dtype=float)
        O = check_mode_matrix(trap.mode_matrix)
        if nu.shape != (n_ions,) or O.shape != (n_ions, n_ions):
            raise ConfigError("custom mode set does not match n_ions")
        if np.any(nu <= 0):
            raise NegativeCurvature("mode frequencies must be positive")
        order = np.argsort(nu, kind="stable")
        nu, O = nu[order], O[order]
    else:
        if trap.kind == "custom":
            positions = np.asarray(trap.positions, dtype=float)
            if positions.shape != (n_ions,):
                raise ConfigError("custom positions do not match n_ions")
        else:
            positions = equilibrium_positions(n_ions, trap)
        C = coulomb_hessian(positions)
        if trap.kind == "harmonic":
            H = np.eye(n_ions) + C
        elif trap.curvature is None or trap.curvature == "balanced":
            H = np.diag(balancing_curvature(positions)) + C
        elif trap.curvature == "uniform":
            # The uniform vector is an eigenvector of C with eigenvalue 0, so
            # the lowest mode sits exactly at sqrt(kappa).
            H = np.eye(n_ions) + C
        else:
            kappa = np.asarray(trap.curvature, dtype=float)
            if kappa.shape != (n_ions,):
                raise ConfigError("curvature vector does not match n_ions")
            H = np.diag(kappa) + C
        nu, O = _modes_from_hessian(H)
        if trap.kind != "harmonic":
            nu = nu / nu[0]
        check_mode_matrix(O)
    eta = lamb_dicke(nu * trap.nu1, trap)
    return IonChainModes(n_ions, nu, O, eta, _find_com(O), trap.nu1, positions)


def modes_table(modes):
    """Rows of (mode_index, nu_over_nu1, eta, O_j1..O_jN)."""
    idx = np.arange(modes.n_ions)[:, None]
    return np.hstack([idx, modes.nu[:, None], modes.eta[:, None], modes.O])
