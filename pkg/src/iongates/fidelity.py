"""Closed-form gate fidelity estimators.

With endpoints alpha_j(T) = F_j + i G_j and phases A_j the evolution factorises
in the basis of sigma_y product states |a> (eigenvalues lambda_{j,a} of J_{y,j})
into a phase exp(-i (A_j + F_j G_j / 2) lambda^2) and a motional displacement
by lambda (-i / sqrt 2)(F_j + i G_j). Tracing out thermal motion damps the
coherence between |a> and |b> by exp(-(F_j^2 + G_j^2)/2 (lambda_a - lambda_b)^2 (nbar_j + 1/2)).

The benchmark state is exp(-i b pi/2 J_y^2)|0...0>, a GHZ state for even N,
with branch b = +1 reached by phi_ref - phi_j = +pi/2 and b = -1 by -pi/2.
"""

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import comb

from .errors import OddRegister, TooLarge
from .phase_forms import alpha_at, carrier_linear_term, phase_forms
from .targets import reference_mode

MAX_EXACT_IONS = 14
_CHUNK = 1 << 9


@dataclass(frozen=True)
class EigenStructure:
    lam: np.ndarray  # (N, 2^N)
    parity: np.ndarray  # (2^N,)
    m: np.ndarray  # total J_y eigenvalue per state


def eigen_structure(modes_or_O):
    O = np.asarray(getattr(modes_or_O, "O", modes_or_O), dtype=float)
    N = O.shape[0]
    idx = np.arange(2**N)
    bits = (idx[None, :] >> (N - 1 - np.arange(N))[:, None]) & 1
    s = 1.0 - 2.0 * bits  # (N qubits, 2^N)
    lam = 0.5 * np.sqrt(N) * (O @ s)
    return EigenStructure(lam, np.prod(s, axis=0), 0.5 * s.sum(axis=0))


def _check_even(N):
    if N % 2:
        raise OddRegister("GHZ benchmark needs an even number of ions")


def _as_vec(x, N):
    return np.broadcast_to(np.asarray(x, dtype=float), (N,)).astype(float)


def unitary_fidelity_exact(A, F, G, modes, nbar=0.0, branch=1):
    """Thermal GHZ fidelity from the full 2^N x 2^N double sum."""
    O = np.asarray(getattr(modes, "O", modes), dtype=float)
    N = O.shape[0]
    _check_even(N)
    if N > MAX_EXACT_IONS:
        raise TooLarge(f"exact fidelity capped at N = {MAX_EXACT_IONS}")
    A, F, G, nbar = (_as_vec(v, N) for v in (A, F, G, nbar))
    es = eigen_structure(O)
    lam = es.lam
    Phi = A + 0.5 * F * G
    d = 0.5 * (F**2 + G**2) * (nbar + 0.5)
    h = np.exp(-1j * branch * 0.5 * np.pi * es.m**2 + 1j * (Phi @ lam**2))
    q = d @ lam**2
    dl = d[:, None] * lam
    n_states = lam.shape[1]
    total = 0.0
    for a0 in range(0, n_states, _CHUNK):
        a1 = min(a0 + _CHUNK, n_states)
        expo = -q[a0:a1, None] - q[None, :] + 2.0 * (lam[:, a0:a1].T @ dl)
        block = np.conj(h[a0:a1])[:, None] * h[None, :] * np.exp(expo)
        total += np.sum(block.real)
    return float(total / 4.0**N)


def unitary_fidelity_alt_decay(A, F, G, modes, nbar=0.0, branch=1):
    """Exact GHZ fidelity with the alternative decay (F^2+G^2)^2/2 |lam_a - lam_b| (n+1/2).

    Diagnostic only; the Fock oracle decides between this and the default.
    """
    O = np.asarray(getattr(modes, "O", modes), dtype=float)
    N = O.shape[0]
    _check_even(N)
    if N > 8:
        raise TooLarge("alternative decay form is evaluated densely up to N = 8")
    A, F, G, nbar = (_as_vec(v, N) for v in (A, F, G, nbar))
    es = eigen_structure(O)
    h = np.exp(-1j * branch * 0.5 * np.pi * es.m**2 + 1j * ((A + 0.5 * F * G) @ es.lam**2))
    d = 0.5 * (F**2 + G**2) ** 2 * (nbar + 0.5)
    diff = np.abs(es.lam[:, :, None] - es.lam[:, None, :])
    K = np.exp(-np.tensordot(d, diff, axes=(0, 0)))
    return float(np.real(np.conj(h) @ K @ h) / 4.0**N)


def _binomial_sum(Phi, d, N, branch):
    k = np.arange(N + 1)
    m = 0.5 * N - k
    w = comb(N, k)
    h = w * np.exp(-1j * branch * 0.5 * np.pi * m**2 + 1j * Phi * m**2)
    K = np.exp(-d * (m[:, None] - m[None, :]) ** 2)
    return float(np.real(np.conj(h) @ K @ h) / 4.0**N)


def com_fidelity(A, F, G, nbar, N, branch=1):
    """GHZ fidelity when only the centre-of-mass mode acts (binomial double sum)."""
    _check_even(N)
    Phi = A + 0.5 * F * G
    d = 0.5 * (F**2 + G**2) * (nbar + 0.5)
    return _binomial_sum(Phi, d, N, branch)


def com_identity_fidelity(A, F, G, nbar, N):
    """Probability of returning to |0...0> under a centre-of-mass-like mode."""
    Phi = A + 0.5 * F * G
    d = 0.5 * (F**2 + G**2) * (nbar + 0.5)
    return _binomial_sum(Phi, d, N, 0)


def unitary_fidelity_approx(A, F, G, modes, nbar=0.0, branch=1, ref_mode=None):
    """Reference-mode GHZ factor times identity factors of the other modes, phases relative to their mean."""
    N = modes.n_ions
    _check_even(N)
    A, F, G, nbar = (_as_vec(v, N) for v in (A, F, G, nbar))
    ref = reference_mode(modes) if ref_mode is None else ref_mode
    others = [j for j in range(N) if j != ref]
    Abar = np.mean(A[others]) if others else 0.0
    out = com_fidelity(A[ref] - Abar, F[ref], G[ref], nbar[ref], N, branch)
    for j in others:
        out *= com_identity_fidelity(A[j] - Abar, F[j], G[j], nbar[j], N)
    return float(out)


def carrier_fidelity(tones, amps, cc):
    """(F_cc1, F_cc2) from the first-order rotation and second-order cc endpoints."""
    F1 = float(np.cos(2.0 * carrier_linear_term(tones, amps)))
    Fc, Gc = cc.cc_alpha.real, cc.cc_alpha.imag
    R = Fc**2 + Gc**2
    per_mode = (3.0 + np.exp(-R)) / 8.0 + 0.5 * np.cos(0.5 * Fc * Gc) * np.exp(-0.25 * R)
    return F1, float(np.prod(per_mode))


def total_infidelity(F_U, F_cc1=1.0, F_cc2=1.0):
    return 1.0 - F_U * F_cc1 * F_cc2


@dataclass
class FidelityReport:
    F_U: float
    F_U_branches: dict
    F_U_approx: float
    F_cc1: float
    F_cc2: float
    F_total: float
    infidelity: float
    branch: int
    inputs: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def endpoints(modes, tones, r, forms=None):
    """(A_j, F_j, G_j) at the gate time."""
    r = np.asarray(getattr(r, "effective", r), dtype=float)
    forms = forms or phase_forms(modes, tones)
    A = forms.phases(r)
    alpha = alpha_at(modes, tones, r, tones.T)[:, 0]
    return A, alpha.real, alpha.imag


def evaluate(modes, tones, amps, cc, nbar=0.0, branch=1, forms=None, exact=True):
    """Assemble a FidelityReport for a drive with precomputed carrier diagnostics."""
    N = modes.n_ions
    nbar_v = _as_vec(nbar, N)
    A, F, G = endpoints(modes, tones, amps, forms)
    even = N % 2 == 0
    branches = {}
    F_U = approx = float("nan")
    if even:
        approx = unitary_fidelity_approx(A, F, G, modes, nbar_v, branch)
        if exact and N <= MAX_EXACT_IONS:
            for b in (1, -1):
                branches[str(b)] = unitary_fidelity_exact(A, F, G, modes, nbar_v, b)
            F_U = branches[str(branch)]
        else:
            F_U = approx
    F1, F2 = carrier_fidelity(tones, amps, cc)
    F_total = F_U * F1 * F2
    inputs = {"A": A, "F": F, "G": G, "nbar": nbar_v, "cc_alpha": cc.cc_alpha,
              "carrier_linear": cc.linear_term}
    return FidelityReport(F_U, branches, approx, F1, F2, F_total, 1.0 - F_total, int(branch), inputs)
