"""Direct Schrodinger integration in a truncated Fock space (small chains only).

The interaction-picture Hamiltonian is written straight from the Lamb-Dicke
expansion of a global bichromatic field,

    H(t) = s(t) sum_n sigma_y^n sum_j eta_j O_jn (a_j e^{-i nu_j t} + a_j^+ e^{i nu_j t})
           [+ s(t) J_x with the carrier, J_x = sum_n sigma_x^n / 2],

with s(t) the effective drive Omega * sum_i r_i cos(omega_i t + phi_i). It
shares no code with the closed forms beyond the mode set. Tensor order:
qubits (first = most significant) then modes.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .errors import DimensionGuard, OddRegister, TruncationError
from .phase_forms import trajectories

MAX_ORACLE_IONS = 3
LEAK_TOL = 1e-8

_SY = np.array([[0, -1j], [1j, 0]])
_SX = np.array([[0, 1], [1, 0]], dtype=complex)


@dataclass(frozen=True)
class FockConfig:
    n_max: int = 25
    nbar: float = 0.0
    include_carrier: bool = False
    rtol: float = 1e-10
    atol: float = 1e-12
    thermal_cut: float = 1e-8
    leak_tol: float = LEAK_TOL

    def __post_init__(self):
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("tolerances must be positive")


@dataclass(frozen=True)
class QuantumState:
    psi: np.ndarray
    n_ions: int
    n_max: int

    def qubit_density(self):
        m = self.psi.reshape(2**self.n_ions, -1)
        return m @ m.conj().T


def _annihilation(n):
    return sp.diags(np.sqrt(np.arange(1, n)), 1, format="csr", dtype=complex)


def _embed(ops):
    out = ops[0]
    for o in ops[1:]:
        out = sp.kron(out, o, format="csr")
    return out


class _Hamiltonian:
    def __init__(self, modes, tones, r, n_max, include_carrier):
        N = modes.n_ions
        self.tones, self.r = tones, np.asarray(r, dtype=float)
        self.nu = modes.nu
        I2 = sp.identity(2, format="csr", dtype=complex)
        If = sp.identity(n_max, format="csr", dtype=complex)
        a = _annihilation(n_max)

        def qubit(op, n):
            return _embed([sp.csr_matrix(op) if k == n else I2 for k in range(N)] + [If] * N)

        def mode(op, j):
            return _embed([I2] * N + [op if k == j else If for k in range(N)])

        sy = [qubit(_SY, n) for n in range(N)]
        self.B = []
        for j in range(N):
            S = sum(modes.eta[j] * modes.O[j, n] * sy[n] for n in range(N))
            self.B.append((S @ mode(a, j)).tocsr())
        self.Bd = [b.conj().T.tocsr() for b in self.B]
        self.carrier = (0.5 * sum(qubit(_SX, n) for n in range(N))).tocsr() if include_carrier else None

    def drive(self, t):
        return float(np.cos(self.tones.omega * t + self.tones.phi) @ self.r)

    def rhs(self, t, y):
        s = self.drive(t)
        out = np.zeros_like(y)
        for nu, b, bd in zip(self.nu, self.B, self.Bd):
            ph = np.exp(-1j * nu * t)
            out += ph * (b @ y) + np.conj(ph) * (bd @ y)
        if self.carrier is not None:
            out += self.carrier @ y
        return -1j * s * out


def _guard(modes):
    if modes.n_ions > MAX_ORACLE_IONS:
        raise DimensionGuard(f"oracle limited to N <= {MAX_ORACLE_IONS}")


def _check_leakage(psi, N, n_max, tol):
    p = np.abs(psi.reshape([2**N] + [n_max] * N)) ** 2
    for j in range(N):
        axes = tuple(k for k in range(N + 1) if k != j + 1)
        pops = p.sum(axis=axes)
        top = pops[-2:].sum() if n_max >= 2 else pops[-1]
        if top > tol:
            raise TruncationError(f"mode {j} holds {top:.2e} in its top Fock levels; raise n_max")


def product_state(n_ions, n_max, qubits=None, fock=None):
    """|qubits> (computational, int or amplitude vector) times a Fock product state."""
    q = np.zeros(2**n_ions, dtype=complex)
    if qubits is None:
        q[0] = 1.0
    elif np.isscalar(qubits):
        q[int(qubits)] = 1.0
    else:
        q = np.asarray(qubits, dtype=complex)
    m = np.zeros(n_max**n_ions, dtype=complex)
    occ = [0] * n_ions if fock is None else list(fock)
    m[np.ravel_multi_index(occ, [n_max] * n_ions)] = 1.0
    return np.kron(q, m)


def _propagate(H, psi0, t_final, cfg):
    if t_final == 0:
        return psi0.copy()
    sol = solve_ivp(H.rhs, (0.0, t_final), psi0, method="DOP853", rtol=cfg.rtol, atol=cfg.atol)
    if not sol.success:
        raise RuntimeError(f"integration failed: {sol.message}")
    return sol.y[:, -1]


def evolve(modes, tones, amps, config=FockConfig(), t_final=None, psi0=None):
    """Integrate from ``psi0`` (default |0...0> x vacuum) to ``t_final`` (default T)."""
    _guard(modes)
    N, n = modes.n_ions, config.n_max
    t_final = tones.T if t_final is None else float(t_final)
    if not 0 <= t_final <= tones.T * (1 + 1e-12):
        raise ValueError("t_final must lie in [0, T]")
    r = np.asarray(getattr(amps, "effective", amps), dtype=float)
    H = _Hamiltonian(modes, tones, r, n, config.include_carrier)
    psi0 = product_state(N, n) if psi0 is None else psi0
    psi = _propagate(H, psi0, t_final, config)
    _check_leakage(psi, N, n, config.leak_tol)
    return QuantumState(psi, N, n)


def ghz_state(n_ions, branch=1):
    """exp(-i branch pi/2 J_y^2)|0...0> with J_y = sum sigma_y / 2."""
    Jy = sum(_embed([sp.csr_matrix(_SY) if k == n else sp.identity(2) for k in range(n_ions)])
             for n in range(n_ions)).toarray() / 2
    v = np.zeros(2**n_ions, dtype=complex)
    v[0] = 1.0
    return expm(-1j * branch * np.pi / 2 * Jy @ Jy) @ v


def ghz_fidelity(state, branch=None):
    """<GHZ|rho_qubits|GHZ>; a dict over both branches when ``branch`` is None."""
    rho = state.qubit_density() if isinstance(state, QuantumState) else np.asarray(state)
    N = int(round(np.log2(rho.shape[0])))
    if N % 2:
        raise OddRegister("GHZ benchmark needs an even number of ions")
    vals = {}
    for b in (1, -1):
        g = ghz_state(N, b)
        vals[b] = float(np.real(g.conj() @ rho @ g))
    return vals if branch is None else vals[branch]


def thermal_weights(nbar, n_max, cut=1e-8):
    """Fock occupations and probabilities covering 1 - cut of a thermal state."""
    if nbar <= 0:
        return np.array([0]), np.array([1.0])
    p = nbar / (1 + nbar)
    k = np.arange(n_max)
    w = (1 - p) * p**k
    keep = np.searchsorted(np.cumsum(w), 1 - cut) + 1
    return k[:keep], w[:keep]


def thermal_ghz_fidelity(modes, tones, amps, config, branch=1):
    """GHZ fidelity averaged over Fock-diagonal thermal initial states."""
    N, n = modes.n_ions, config.n_max
    occ, w = thermal_weights(config.nbar, n, config.thermal_cut)
    total, norm = 0.0, 0.0
    for idx in np.ndindex(*([len(occ)] * N)):
        weight = float(np.prod(w[list(idx)]))
        psi0 = product_state(N, n, fock=occ[list(idx)])
        st = evolve(modes, tones, amps, config, psi0=psi0)
        total += weight * ghz_fidelity(st, branch)
        norm += weight
    return total / norm


def _closed_form_parts(modes, A, F, G, n_max, pad):
    N = modes.n_ions
    big = n_max + pad
    a = _annihilation(big).toarray()
    ad = a.conj().T
    # sigma_y eigenbasis: columns |+y>, |-y>
    v1 = np.array([[1, 1], [1j, -1j]]) / np.sqrt(2)
    V = v1
    for _ in range(N - 1):
        V = np.kron(V, v1)
    idx = np.arange(2**N)
    s = 1.0 - 2.0 * ((idx[None, :] >> (N - 1 - np.arange(N))[:, None]) & 1)
    lam = 0.5 * np.sqrt(N) * (modes.O @ s)
    alpha = -1j / np.sqrt(2) * (np.asarray(F) + 1j * np.asarray(G))
    Phi = np.asarray(A) + 0.5 * np.asarray(F) * np.asarray(G)
    for k in range(2**N):
        Ds = []
        for j in range(N):
            beta = alpha[j] * lam[j, k]
            Ds.append(expm(beta * ad - np.conj(beta) * a)[:n_max, :n_max])
        yield k, V[:, k], Ds, np.exp(-1j * np.sum(Phi * lam[:, k] ** 2))


def closed_form_apply(modes, A, F, G, n_max, psi, pad=30):
    """Apply the closed-form evolution to state vector(s) ``psi`` (columns).

    prod_j exp(-i(A_j + F_j G_j / 2) J_j^2) D_j(alpha_j J_j), worked out per
    sigma_y eigenstate with displacements exponentiated at cutoff n_max + pad
    and then truncated.
    """
    N = modes.n_ions
    psi = np.asarray(psi, dtype=complex)
    vec = psi.ndim == 1
    X = psi.reshape(2**N, n_max**N, -1)
    out = np.zeros_like(X)
    for k, v, Ds, phase in _closed_form_parts(modes, A, F, G, n_max, pad):
        c = np.tensordot(v.conj(), X, axes=(0, 0)).reshape((n_max,) * N + (-1,))
        for j, D in enumerate(Ds):
            c = np.moveaxis(np.tensordot(D, c, axes=(1, j)), 0, j)
        out += phase * v[:, None, None] * c.reshape(1, n_max**N, -1)
    out = out.reshape(psi.shape[0], -1)
    return out[:, 0] if vec else out


def closed_form_operator(modes, A, F, G, n_max, pad=30):
    """Dense closed-form operator on qubits x truncated modes (small N and n_max only)."""
    dim = 2**modes.n_ions * n_max**modes.n_ions
    return closed_form_apply(modes, A, F, G, n_max, np.eye(dim, dtype=complex), pad)


def check_unitary_structure(modes, tones, amps, config=FockConfig(), fock_states=None, t_final=None):
    """Compare integrated columns with the closed-form operator.

    Columns are every qubit basis state times each Fock product state in
    ``fock_states`` (default: vacuum). Returns the spectral norm of the
    difference restricted to those columns plus the motional-vacuum return.
    """
    _guard(modes)
    N, n = modes.n_ions, config.n_max
    if config.include_carrier:
        raise ValueError("structure check runs without the carrier")
    t_final = tones.T if t_final is None else float(t_final)
    r = np.asarray(getattr(amps, "effective", amps), dtype=float)
    tr = trajectories(modes, tones, r, np.array([0.0, t_final]))
    alpha, A = tr.alpha[:, -1], tr.A[:, -1]
    fock_states = fock_states or [tuple([0] * N)]
    H = _Hamiltonian(modes, tones, r, n, False)
    cols_num, cols_cf = [], []
    for occ in fock_states:
        for q in range(2**N):
            psi0 = product_state(N, n, q, occ)
            psi = _propagate(H, psi0, t_final, config)
            _check_leakage(psi, N, n, config.leak_tol)
            cols_num.append(psi)
            cols_cf.append(closed_form_apply(modes, A, alpha.real, alpha.imag, n, psi0))
    Xn, Xc = np.array(cols_num).T, np.array(cols_cf).T
    # Motional vacuum return of each qubit column.
    vac = np.ravel_multi_index([0] * N, [n] * N)
    block = Xn.reshape(2**N, n**N, -1)[:, vac, : 2**N]
    return {
        "operator_norm_gap": float(np.linalg.norm(Xn - Xc, 2)),
        "vacuum_block_unitarity_gap": float(np.linalg.norm(block.conj().T @ block - np.eye(2**N), 2)),
        "columns": len(cols_num),
        "n_max": n,
    }
