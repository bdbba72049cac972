"""Spin-spin coupling targets, their least-squares entangling phases and pulse schedules.

A set of entangling phases phi_j realises the Ising couplings

    exp(-i sum_{i<k} j_ik sigma_y^i sigma_y^k),  j_ik = (N/2) sum_j phi_j O_ji O_jk,

up to a global phase, so an all-to-all pi/4 coupling is a pi/2 phase gap
between the centre-of-mass mode and every other mode.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .errors import BadParams, DimensionMismatch, ZeroTarget

TARGET_KINDS = ("all_to_all", "nearest_neighbour", "nn_with_nnn", "ssh", "custom")


@dataclass(frozen=True)
class CouplingTarget:
    j_desired: np.ndarray
    phi_ideal: np.ndarray
    j_ideal: np.ndarray
    F_ideal: float
    gaps: np.ndarray
    ref_mode: int = 0


@dataclass(frozen=True)
class StroboscopicSchedule:
    n: int
    t: np.ndarray
    interleave: tuple = ()


def reference_mode(modes):
    """Centre-of-mass mode when present, else the lowest mode."""
    return modes.com_index if modes.com_index is not None else 0


def coupling_from_phases(phi, O):
    """(N/2) sum_j phi_j o_j o_j^T."""
    O = np.asarray(O, dtype=float)
    return 0.5 * O.shape[0] * (O.T * np.asarray(phi, dtype=float)) @ O


def _overlap_fidelity(a, b):
    na, nb = a @ a, b @ b
    if na == 0 or nb == 0:
        return 0.5
    return 0.5 * (1.0 + (a @ b) / np.sqrt(na * nb))


def ideal_phases(j_desired, modes, ref_mode=None, higher_spin=False):
    """Least-squares phases for ``j_desired`` and the normalised-overlap F_ideal.

    By default only the N(N-1)/2 distinct off-diagonal entries enter. With
    ``higher_spin`` the diagonal is kept as well and the fit becomes the
    trace-inner-product projection phi_j = (2/N) o_j^T j o_j.
    """
    J = np.asarray(j_desired, dtype=float)
    N = modes.n_ions
    if J.shape != (N, N):
        raise DimensionMismatch(f"coupling matrix must be {N}x{N}")
    if not np.allclose(J, J.T, atol=1e-12 * max(1.0, np.max(np.abs(J)))):
        raise BadParams("coupling matrix must be symmetric")
    J = 0.5 * (J + J.T)
    O = modes.O
    ref = reference_mode(modes) if ref_mode is None else ref_mode
    if higher_spin:
        if not np.any(J):
            raise ZeroTarget("coupling matrix is zero")
        phi = (2.0 / N) * np.einsum("ji,ik,jk->j", O, J, O)
        j_ideal = coupling_from_phases(phi, O)
        F = _overlap_fidelity(j_ideal.ravel(), J.ravel())
    else:
        iu = np.triu_indices(N, 1)
        target = J[iu]
        if not np.any(target):
            raise ZeroTarget("off-diagonal couplings are all zero")
        P = 0.5 * N * np.stack([np.outer(o, o)[iu] for o in O], axis=1)
        phi = np.linalg.pinv(P) @ target
        j_ideal = coupling_from_phases(phi, O)
        F = _overlap_fidelity(j_ideal[iu], target)
    gaps = np.array([phi[ref] - phi[j] for j in range(N) if j != ref])
    return CouplingTarget(J, phi, j_ideal, float(F), gaps, ref)


def builtin_target(kind, n_ions, **params):
    """Coupling matrix of a named family.

    all_to_all(phi), nearest_neighbour(phi), nn_with_nnn(phi, ratio),
    ssh(phi, dphi, s) and custom(matrix). SSH bond (i, i+1) with 1-based i
    carries phi - (-1)^(s+i) dphi, so s=0 starts strong and s=1 starts weak.
    """
    N = int(n_ions)
    if N < 1:
        raise BadParams("n_ions must be positive")
    phi = float(params.get("phi", np.pi / 4))
    if kind == "all_to_all":
        return phi * (np.ones((N, N)) - np.eye(N))
    if kind == "nearest_neighbour":
        return phi * (np.eye(N, k=1) + np.eye(N, k=-1))
    if kind == "nn_with_nnn":
        ratio = float(params.get("ratio", -0.25))
        return phi * (np.eye(N, k=1) + np.eye(N, k=-1) + ratio * (np.eye(N, k=2) + np.eye(N, k=-2)))
    if kind == "ssh":
        dphi = float(params.get("dphi", phi / 3))
        s = int(params.get("s", 0))
        if s not in (0, 1):
            raise BadParams("ssh s must be 0 or 1")
        if not phi > dphi > 0:
            raise BadParams("ssh needs phi > dphi > 0")
        bonds = phi - (-1.0) ** (s + np.arange(1, N)) * dphi
        return np.diag(bonds, 1) + np.diag(bonds, -1)
    if kind == "custom":
        if "matrix" not in params:
            raise BadParams("custom target needs a matrix")
        J = np.asarray(params["matrix"], dtype=float)
        if J.shape != (N, N):
            raise BadParams(f"custom matrix must be {N}x{N}")
        return J
    raise BadParams(f"unknown target kind {kind!r}")


def strobe_schedule(n, Omega, trotter=False):
    """Repetition times t_k = k / Omega; optional alternating y/x drive-phase markers."""
    if int(n) != n or n < 1:
        raise BadParams("need at least one repetition")
    if not Omega > 0:
        raise BadParams("Omega must be positive")
    t = np.arange(1, int(n) + 1) / Omega
    marks = tuple("y" if k % 2 == 0 else "x" for k in range(int(n))) if trotter else ()
    return StroboscopicSchedule(int(n), t, marks)


def write_coupling_csv(path, J):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for row in np.asarray(J, dtype=float):
            w.writerow([f"{v:.17g}" for v in row])
