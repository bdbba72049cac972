"""Linear constraint rows on the tone amplitudes and their null space.

Rows are tagged so a caller can tell which physical condition each one
enforces. Common per-row prefactors that do not change the null space are
kept where they are cheap (the robustness rows carry their eta_j factors)
and dropped for closure rows.
"""

from dataclasses import dataclass

import numpy as np

from .errors import EmptyNullSpace
from .integrals import segment, tone_exponents, tone_mode_moment, tone_mode_overlap

SV_CUTOFF = 1e-10
ROBUST_FAMILIES = ("timing", "freq", "optical")


@dataclass(frozen=True)
class ConstraintSystem:
    L: np.ndarray
    row_tags: tuple
    K: np.ndarray
    sv_tolerance: float = SV_CUTOFF

    @property
    def l(self):
        return self.K.shape[1]

    @property
    def M(self):
        return self.K.shape[0]


@dataclass(frozen=True)
class RowBlock:
    rows: np.ndarray
    tags: tuple
    harmonic_trivial: bool = False


def _pair(values, kind_cos, kind_sin, n_modes):
    rows = np.vstack([values.real, values.imag])
    tags = tuple(f"{kind_cos}({j})" for j in range(n_modes)) + tuple(
        f"{kind_sin}({j})" for j in range(n_modes)
    )
    return rows, tags


def closure_rows(modes, tones):
    """int_0^T cos(w_i t + p_i) {cos, sin}(nu_j t) dt; eta prefactors dropped."""
    ov = tone_mode_overlap(tones.omega, tones.phi, modes.nu, tones.T)
    rows, tags = _pair(ov, "closure_cos", "closure_sin", modes.n_ions)
    return RowBlock(rows, tags)


def timing_robust_rows(modes, tones, order=1, reduced=False):
    """Rows zeroing d^k alpha_j / dT^k at the gate time for k = 1..order.

    The first order entries are 2 sqrt(2) eta_j {cos, sin}(nu_j T) cos(w_n T + p_n).
    With ``reduced`` the mode-independent row cos(w_n T + p_n) is returned
    instead (same kernel at first order).
    """
    T = tones.T
    scale = np.max(np.abs(tones.omega)) + np.max(modes.nu)
    if reduced:
        rows = np.cos(tones.omega * T + tones.phi)[None, :]
        trivial = bool(np.all(np.abs(rows) < 1e-12))
        return RowBlock(rows, ("robust_timing(*)",), trivial)
    freqs, weights = tone_exponents(tones.omega, tones.phi)
    pre = 2 * np.sqrt(2) * modes.eta[:, None]
    all_rows, tags = [], []
    for m in range(order):
        f = freqs[None, :, :] + modes.nu[:, None, None]
        # d^m/dt^m [cos(w t + p) e^{i nu t}] at t = T, normalised by scale^m
        d = np.sum(weights[None] * (1j * f / scale) ** m * np.exp(1j * f * T), axis=-1)
        vals = pre * d
        all_rows += [vals.real, vals.imag]
        tags += [f"robust_timing({j},d{m + 1},cos)" for j in range(modes.n_ions)]
        tags += [f"robust_timing({j},d{m + 1},sin)" for j in range(modes.n_ions)]
    rows = np.vstack(all_rows)
    trivial = bool(np.all(np.abs(rows) < 1e-12 * max(1.0, np.max(np.abs(pre)))))
    return RowBlock(rows, tuple(tags), trivial)


def freq_robust_rows(modes, tones):
    """Rows for int_0^T F_j dt = int_0^T G_j dt = 0 (mode-frequency drift and heating).

    Scaled by -sqrt(2) eta_j, which makes the harmonic-basis entries equal to
    the familiar rational-trigonometric expressions in (T, nu_j, n).
    """
    mom = tone_mode_moment(tones.omega, tones.phi, modes.nu, tones.T)
    vals = -np.sqrt(2) * modes.eta[:, None] * mom
    rows, tags = _pair(vals, "robust_freq_cos", "robust_freq_sin", modes.n_ions)
    return RowBlock(rows, tags)


def optical_robust_rows(modes, tones):
    """Rows for the quadrature-shifted drive, sqrt(2) eta_j int sin(w t + p) e^{i nu t} dt."""
    ov = tone_mode_overlap(tones.omega, tones.phi - np.pi / 2, modes.nu, tones.T)
    vals = np.sqrt(2) * modes.eta[:, None] * ov
    rows, tags = _pair(vals, "robust_optical_cos", "robust_optical_sin", modes.n_ions)
    return RowBlock(rows, tags)


def carrier_linear_row(tones, form="endpoint"):
    """First-order carrier row.

    ``endpoint``: cos(w_n T + p_n), the drive value at the gate end.
    ``integral``: int_0^T cos(w_n t + p_n) dt, the rotation angle per unit amplitude.
    Both vanish identically in the harmonic basis.
    """
    if form == "endpoint":
        row = np.cos(tones.omega * tones.T + tones.phi)[None, :]
        floor = 1e-12
    elif form == "integral":
        freqs, weights = tone_exponents(tones.omega, tones.phi)
        row = np.sum(weights * segment(freqs, tones.T), axis=-1).real[None, :]
        floor = 1e-12 * tones.T
    else:
        raise ValueError(f"unknown carrier row form {form!r}")
    return RowBlock(row, ("carrier_linear",), bool(np.all(np.abs(row) < floor)))


def null_basis(L, tolerance=SV_CUTOFF):
    """Orthonormal basis (columns) of the kernel of ``L``."""
    L = np.atleast_2d(np.asarray(L, dtype=float))
    M = L.shape[1]
    if L.shape[0] == 0:
        return np.eye(M)
    _, s, vt = np.linalg.svd(L, full_matrices=True)
    rank = int(np.sum(s > tolerance * s[0])) if s.size and s[0] > 0 else 0
    K = vt[rank:].T
    if K.shape[1] == 0:
        raise EmptyNullSpace(
            f"no null space: {M} tones against rank {rank}; add tones (wider margin or longer T)"
        )
    return K


def _drop_zero_rows(L, tags, rel=1e-12):
    scale = np.max(np.abs(L)) if L.size else 0.0
    keep = np.max(np.abs(L), axis=1) > rel * max(scale, 1e-300)
    return L[keep], tuple(t for t, k in zip(tags, keep) if k)


def build_constraints(modes, tones, robust=(), timing_order=1, carrier=True,
                      tolerance=SV_CUTOFF, normalize=True):
    """Assemble closure + selected robustness + carrier rows and their kernel.

    Rows are normalised to unit max-norm (kernel unchanged) so the singular
    value cutoff is relative to comparable rows. All-zero rows are dropped.
    """
    for fam in robust:
        if fam not in ROBUST_FAMILIES:
            raise ValueError(f"unknown robustness family {fam!r}")
    blocks = [closure_rows(modes, tones)]
    if "timing" in robust:
        blocks.append(timing_robust_rows(modes, tones, order=timing_order))
    if "freq" in robust:
        blocks.append(freq_robust_rows(modes, tones))
    if "optical" in robust:
        blocks.append(optical_robust_rows(modes, tones))
    if carrier:
        blocks.append(carrier_linear_row(tones))
    L = np.vstack([b.rows for b in blocks])
    tags = sum((b.tags for b in blocks), ())
    if normalize:
        # Absolute floor: a row that is zero up to rounding stays zero.
        norms = np.max(np.abs(L), axis=1)
        floor = 1e-12 * max(np.max(norms), 1e-300)
        norms = np.where(norms > floor, norms, np.inf)
        L = L / norms[:, None]
    L, tags = _drop_zero_rows(L, tags)
    K = null_basis(L, tolerance)
    return ConstraintSystem(L, tags, K, tolerance)
