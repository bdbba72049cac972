"""Phase-space trajectories, entangling-phase bilinear forms and carrier terms.

Conventions (amplitudes are the effective Omega * r, frequencies in nu1):

    f_j + i g_j = (2 sqrt(2) / sqrt(N)) eta_j s(t) exp(i nu_j t),
    s(t) = sum_i r_i cos(omega_i t + phi_i),
    alpha_j(t) = F_j + i G_j = int_0^t (f_j + i g_j),
    A_j(t) = -int_0^t F_j dG_j,

so that the evolution is prod_j exp(-i A_j J_j^2) exp(-i F_j q_j J_j) exp(-i G_j p_j J_j)
and the entangling phase phi_j = A_j(T) = r^T A~_j r with

    (A~_j)_{ik} = -(4 eta_j^2 / N) int_0^T dt int_0^t dt' sin(nu_j t) cos(nu_j t')
                  [cos(w_k t + p_k) cos(w_i t' + p_i) + (i <-> k)].
"""

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .integrals import nested, segment, tone_exponents

# Prefactor of the second-order carrier/sideband cross term, per unit eta_j.
CARRIER_PREFACTOR = 0.25

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


@dataclass(frozen=True)
class PhaseForms:
    A_tilde: np.ndarray  # (N, M, M)

    def phases(self, r):
        r = np.asarray(r, dtype=float)
        return np.einsum("i,jik,k->j", r, self.A_tilde, r)


@dataclass(frozen=True)
class ReducedForms:
    C_tilde: np.ndarray  # (N - 1, l, l), rows for every non-reference mode
    target_gaps: np.ndarray
    ref_mode: int = 0
    others: tuple = ()

    @property
    def l(self):
        return self.C_tilde.shape[1]


@dataclass(frozen=True)
class Trajectory:
    t_grid: np.ndarray
    alpha: np.ndarray  # (N, nt) complex
    A: np.ndarray  # (N, nt) real

    @property
    def endpoints(self):
        return self.alpha[:, -1], self.A[:, -1]


@dataclass(frozen=True)
class CarrierDiagnostics:
    linear_term: float
    cc_alpha: np.ndarray  # (N,) complex, F_cc + i G_cc


def coupling(modes):
    """(2 sqrt 2 / sqrt N) eta_j."""
    return 2 * np.sqrt(2) / np.sqrt(modes.n_ions) * modes.eta


def _amps(amps):
    return np.asarray(getattr(amps, "effective", amps), dtype=float)


def alpha_at(modes, tones, r, t):
    """alpha_j(t) for all modes at times ``t`` -> (N, nt) complex."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    freqs, weights = tone_exponents(tones.omega, tones.phi)  # (M, 2)
    f = freqs[None, None, :, :] + modes.nu[:, None, None, None]
    seg = segment(f, t[None, :, None, None])  # (N, nt, M, 2)
    X = np.sum(weights[None, None] * seg, axis=-1)
    return coupling(modes)[:, None] * (X @ r)


def _drive_at(tones, r, t):
    return np.cos(np.multiply.outer(t, tones.omega) + tones.phi) @ r


def _phase_increments(modes, tones, r, t_grid):
    """-int F g dt over each [t_k, t_{k+1}] by piecewise Gauss-Legendre."""
    fmax = np.max(tones.omega) + np.max(modes.nu)
    h_max = 1.0 / fmax
    cpl = coupling(modes)
    out = np.zeros((modes.n_ions, len(t_grid) - 1))
    for k in range(len(t_grid) - 1):
        a, b = t_grid[k], t_grid[k + 1]
        if b <= a:
            continue
        n_pieces = int(np.ceil((b - a) / h_max))
        edges = np.linspace(a, b, n_pieces + 1)
        mid = 0.5 * (edges[1:] + edges[:-1])
        half = 0.5 * (edges[1:] - edges[:-1])
        nodes = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
        w = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
        F = alpha_at(modes, tones, r, nodes).real
        g = cpl[:, None] * _drive_at(tones, r, nodes)[None, :] * np.sin(np.multiply.outer(modes.nu, nodes))
        out[:, k] = -(F * g) @ w
    return out


def trajectories(modes, tones, amps, t_grid=None):
    """Closed-form alpha_j(t) plus quadrature-integrated A_j(t) on ``t_grid``."""
    r = _amps(amps)
    if t_grid is None:
        t_grid = np.linspace(0.0, tones.T, 201)
    t_grid = np.asarray(t_grid, dtype=float)
    alpha = alpha_at(modes, tones, r, t_grid)
    alpha[:, t_grid == 0.0] = 0.0
    inc = _phase_increments(modes, tones, r, np.concatenate([[0.0], t_grid]))
    A = np.cumsum(inc, axis=1)
    return Trajectory(t_grid, alpha, A)


def _pair_integrals(outer_f, outer_w, inner_f, inner_w, T):
    """sum over exponent pairs of w_o w_i P(a, b) for every (outer k, inner i)."""
    a = outer_f[:, None, :, None]
    b = inner_f[None, :, None, :]
    P = nested(a, b, T)
    return np.einsum("kp,iq,kipq->ki", outer_w, inner_w, P)


def phase_matrix(modes, tones, j):
    """Symmetric A~_j (M x M); phi_j = r^T A~_j r."""
    nu = modes.nu[j]
    freqs, weights = tone_exponents(tones.omega, tones.phi)
    # outer: cos(w_k t + p_k) sin(nu t) ; inner: cos(w_i t' + p_i) cos(nu t')
    tau = np.array([1.0, -1.0])
    of = (freqs[:, :, None] + tau[None, None, :] * nu).reshape(len(freqs), 4)
    ow = (weights[:, :, None] * (tau / 2j)[None, None, :]).reshape(len(freqs), 4)
    inf = of
    iw = (weights[:, :, None] * np.full(2, 0.5)[None, None, :]).reshape(len(freqs), 4)
    I = _pair_integrals(of, ow, inf, iw, tones.T).real
    return -(4 * modes.eta[j] ** 2 / modes.n_ions) * (I + I.T)


def phase_matrix_slope(modes, tones, j, step=1e-5):
    """d A~_j / d nu_j by central difference (eta_j held fixed)."""
    up = phase_matrix(modes.shifted(step), tones, j)
    dn = phase_matrix(modes.shifted(-step), tones, j)
    return (up - dn) / (2 * step)


def gap_slope_forms(modes, tones, ref_mode=0):
    """M x M forms whose values are d(phi_ref - phi_j)/d(common nu shift), j != ref_mode."""
    D = [phase_matrix_slope(modes, tones, j) for j in range(modes.n_ions)]
    return [D[ref_mode] - D[j] for j in range(modes.n_ions) if j != ref_mode]


def phase_forms(modes, tones):
    return PhaseForms(np.stack([phase_matrix(modes, tones, j) for j in range(modes.n_ions)]))


def reduced_forms(K, forms, targets, ref_mode=0):
    """C~_j = K^T (A~_ref - A~_j) K for every j != ref_mode; ``targets`` are the gaps."""
    A = forms.A_tilde if isinstance(forms, PhaseForms) else np.asarray(forms)
    K = np.asarray(K, dtype=float)
    if A.shape[1] != K.shape[0]:
        raise DimensionMismatch(f"K has {K.shape[0]} rows but forms are {A.shape[1]}x{A.shape[2]}")
    others = tuple(j for j in range(A.shape[0]) if j != ref_mode)
    targets = np.broadcast_to(np.asarray(targets, dtype=float), (len(others),)).copy()
    C = np.stack([K.T @ (A[ref_mode] - A[j]) @ K for j in others]) if others else np.zeros((0, K.shape[1], K.shape[1]))
    C = 0.5 * (C + np.transpose(C, (0, 2, 1)))
    return ReducedForms(C, targets, ref_mode, others)


def carrier_matrices(modes, tones):
    """Complex B_j with G_cc + i F_cc = CARRIER_PREFACTOR eta_j r^T B_j r.

    B_j[n, m] = int_0^T dt1 cos(w_n t1 + p_n) int_0^t1 dt2 cos(w_m t2 + p_m) exp(i nu_j t2),
    symmetrised over (n, m).
    """
    freqs, weights = tone_exponents(tones.omega, tones.phi)
    out = []
    for nu in modes.nu:
        B = _pair_integrals(freqs, weights, freqs + nu, weights, tones.T)
        out.append(0.5 * (B + B.T))
    return np.stack(out)


def carrier_quadratic_forms(modes, tones):
    """Real symmetric (G_cc, F_cc) forms per mode -> array (N, 2, M, M)."""
    B = carrier_matrices(modes, tones)
    pre = CARRIER_PREFACTOR * modes.eta[:, None, None]
    return np.stack([pre * B.real, pre * B.imag], axis=1)


def carrier_linear_term(tones, amps):
    """First-order carrier coefficient sum_n r_n int_0^T cos(w_n t + p_n) dt.

    For quadrature tones (p = pi/2) this is -sum_n r_n int_0^T sin(w_n t) dt,
    which vanishes identically in the harmonic basis.
    """
    r = _amps(amps)
    freqs, weights = tone_exponents(tones.omega, tones.phi)
    vals = np.sum(weights * segment(freqs, tones.T), axis=-1).real
    return float(vals @ r)


def carrier_second_order(modes, tones, amps, forms=None):
    r = _amps(amps)
    Q = carrier_quadratic_forms(modes, tones) if forms is None else forms
    G = np.einsum("i,jik,k->j", r, Q[:, 0], r)
    F = np.einsum("i,jik,k->j", r, Q[:, 1], r)
    return CarrierDiagnostics(carrier_linear_term(tones, amps), F + 1j * G)


def write_trajectory(path, traj, T):
    n_modes = traj.alpha.shape[0]
    head = ["t_over_T"]
    for j in range(n_modes):
        head += [f"re_alpha_{j}", f"im_alpha_{j}", f"A_{j}"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(head)
        for k, t in enumerate(traj.t_grid):
            row = [t / T]
            for j in range(n_modes):
                row += [traj.alpha[j, k].real, traj.alpha[j, k].imag, traj.A[j, k]]
            w.writerow([f"{v:.17g}" for v in row])
