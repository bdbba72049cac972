"""Reduced quadratic problem: x^T C_j x = gap_j on the null space, minimising |K x|_1.

Analytic constructions cover two and three ions. The general solver is a
seeded multi-start: each start is pulled onto the constraint set by damped
minimum-norm Newton steps, its 1-norm is reduced by SLSQP on a smoothed
objective with an epsilon continuation, and the result is Newton-polished
back onto the quadrics.
"""

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from .errors import (
    DegenerateDirection,
    DimensionMismatch,
    EmptyNullSpace,
    Infeasible,
    ProjectionFailed,
    ZeroMatrix,
)

HALF_PI = 0.5 * np.pi
_EIG_TOL = 1e-12
# Newton residual still worth handing to the 1-norm stage.
_LOOSE = 1e-8


@dataclass(frozen=True)
class SpectralSplit:
    psi: np.ndarray  # columns, positive eigenvalues
    lam: np.ndarray
    xi: np.ndarray  # columns, negative eigenvalues
    gam: np.ndarray
    zero_space: np.ndarray

    @property
    def p(self):
        return len(self.lam)

    @property
    def n(self):
        return len(self.gam)


@dataclass(frozen=True)
class Fragment:
    x: np.ndarray
    phase_sign: int = 1


@dataclass
class SolverOptions:
    restarts: int = 32
    seed: int = 0
    tol_quad: float = 1e-6
    tol_cc: float = 4e-5
    max_iterations: int = 200
    global_stage: bool = False
    global_rounds: int = 8
    allow_sign_flip: bool = False
    eps_schedule: tuple = (1e-2, 1e-3, 1e-4)
    newton_tol: float = 1e-13


@dataclass
class GateSolution:
    x: np.ndarray
    r: np.ndarray
    phases: np.ndarray
    residuals: dict
    one_norm: float
    seed: int
    iterations: int
    phase_sign: int = 1
    degenerate: bool = False
    success: bool = True
    restart_index: int = -1
    history: list = field(default_factory=list)


def spectral_split(D, tol=_EIG_TOL):
    D = np.asarray(D, dtype=float)
    w, v = np.linalg.eigh(0.5 * (D + D.T))
    scale = max(np.max(np.abs(w)), 1e-300) if w.size else 1.0
    pos = w > tol * scale
    neg = w < -tol * scale
    zero = ~(pos | neg)
    # Positive block descending, negative block by descending magnitude.
    ip = np.where(pos)[0][::-1]
    ineg = np.where(neg)[0]
    return SpectralSplit(v[:, ip], w[ip], v[:, ineg], w[ineg], v[:, zero])


def solve_two_ion(C2, target=HALF_PI):
    """Largest-|eigenvalue| direction scaled to |x^T C2 x| = target."""
    C2 = np.asarray(C2, dtype=float)
    w, v = np.linalg.eigh(0.5 * (C2 + C2.T))
    k = int(np.argmax(np.abs(w)))
    if abs(w[k]) <= 1e-300 or not np.any(C2):
        raise ZeroMatrix("phase-gap form is identically zero")
    x = v[:, k] * np.sqrt(target / abs(w[k]))
    return Fragment(x, 1 if w[k] > 0 else -1)


def solve_three_ion(C2, C3, target=HALF_PI, pair=None):
    """x = c (psi_i + sqrt(lam_i / |gam_j|) xi_j) on the null cone of D3 = C2 - C3."""
    C2 = np.asarray(C2, dtype=float)
    split = spectral_split(np.asarray(C2) - np.asarray(C3))
    if split.p == 0 or split.n == 0:
        raise Infeasible("gap-difference form is sign-definite; no equal-gap direction exists")
    pairs = [(i, j) for i in range(split.p) for j in range(split.n)]
    if pair is not None:
        pairs = [tuple(pair)] + [p for p in pairs if p != tuple(pair)]
    scale = np.max(np.abs(np.linalg.eigvalsh(0.5 * (C2 + C2.T)))) if np.any(C2) else 0.0
    for i, j in pairs:
        x0 = split.psi[:, i] + np.sqrt(split.lam[i] / abs(split.gam[j])) * split.xi[:, j]
        v = x0 @ C2 @ x0
        if abs(v) > 1e-10 * scale * (x0 @ x0):
            return Fragment(x0 * np.sqrt(target / abs(v)), 1 if v > 0 else -1)
    raise DegenerateDirection("every null-cone direction annihilates the phase-gap form")


def renormalize_feasible(x, D_list, C2, target=HALF_PI):
    """Rescale positive/negative parts to zero x^T D x for the first D, then fix x^T C2 x."""
    x = np.asarray(x, dtype=float)
    if D_list:
        split = spectral_split(D_list[0])
        xp = split.psi @ (split.psi.T @ x)
        xn = split.xi @ (split.xi.T @ x)
        x0 = x - xp - xn
        P = xp @ D_list[0] @ xp
        Q = xn @ D_list[0] @ xn
        if P <= 0 or Q >= 0:
            raise ProjectionFailed("x lacks a positive or a negative component")
        a = (abs(Q) / P) ** 0.25
        b = (P / abs(Q)) ** 0.25
        x = a * xp + b * xn + x0
    v = x @ C2 @ x
    if v == 0:
        raise ProjectionFailed("x annihilates the phase-gap form")
    return x * np.sqrt(target / abs(v))


# General solver ------------------------------------------------------------


def independent_forms(forms, rel=1e-9):
    """Orthonormal basis of the span of zero-target quadratic forms.

    The carrier forms are linearly dependent (and some vanish up to rounding),
    which would leave the Newton Jacobian rank deficient.
    """
    forms = [np.asarray(F, dtype=float) for F in forms]
    if not forms:
        return []
    V = np.array([F.ravel() for F in forms])
    _, s, vt = np.linalg.svd(V, full_matrices=False)
    if s[0] == 0:
        return []
    keep = s > rel * s[0]
    shape = forms[0].shape
    return [0.5 * (v.reshape(shape) + v.reshape(shape).T) for v in vt[keep]]


class _System:
    """Quadratic equalities x^T Q_k x = t_k, each Q_k scaled to unit spectral norm."""

    def __init__(self, gap_forms, gaps, cc_forms):
        Q, t, kind = [], [], []
        for C, g in zip(gap_forms, gaps):
            s = np.linalg.norm(C, 2)
            if s == 0:
                if g != 0:
                    raise ZeroMatrix("a phase-gap form vanishes but its target does not")
                continue
            Q.append(C / s)
            t.append(g / s)
            kind.append("gap")
        self.gap_scale = np.array([np.linalg.norm(C, 2) for C in gap_forms])
        for C in independent_forms(cc_forms):
            Q.append(C / np.linalg.norm(C, 2))
            t.append(0.0)
            kind.append("cc")
        self.Q = np.array(Q) if Q else np.zeros((0, 0, 0))
        self.t = np.array(t)
        self.kind = np.array(kind)

    def h(self, x):
        return (self.Q @ x) @ x - self.t

    def jac(self, x):
        return 2.0 * self.Q @ x

    def newton(self, x, tol=1e-13, max_iter=60):
        """Damped minimum-norm Newton onto h = 0."""
        if len(self.t) == 0:
            return x, True
        hx = self.h(x)
        for _ in range(max_iter):
            nh = np.linalg.norm(hx)
            if nh < tol:
                return x, True
            step = np.linalg.lstsq(self.jac(x), hx, rcond=None)[0]
            a = 1.0
            while a > 1e-6:
                xt = x - a * step
                ht = self.h(xt)
                if np.linalg.norm(ht) < (1 - 1e-4 * a) * nh:
                    break
                a *= 0.5
            else:
                return x, False
            x, hx = xt, ht
        return x, np.linalg.norm(hx) < tol


def _smooth_l1(K, eps):
    def f(x):
        r = K @ x
        s = np.sqrt(r * r + eps * eps)
        return float(np.sum(s - eps)), K.T @ (r / s)

    return f


def _local(system, K, x0, opts, scale):
    x, ok = system.newton(x0, opts.newton_tol)
    if not ok and np.linalg.norm(system.h(x)) > _LOOSE:
        return None, 0
    iters = 0
    for e in opts.eps_schedule:
        f = _smooth_l1(K, e * scale)
        cons = {"type": "eq", "fun": system.h, "jac": system.jac}
        res = minimize(lambda z: f(z)[0] / scale, x, jac=lambda z: f(z)[1] / scale,
                       constraints=[cons], method="SLSQP",
                       options={"maxiter": opts.max_iterations, "ftol": 1e-12})
        iters += int(res.nit)
        xt, ok = system.newton(res.x, opts.newton_tol)
        if ok and np.sum(np.abs(K @ xt)) <= np.sum(np.abs(K @ x)) * (1 + 1e-12):
            x = xt
    return x, iters


def _random_start(rng, system, l, sign):
    for _ in range(20):
        x = rng.standard_normal(l)
        gi = np.where(system.kind == "gap")[0]
        if len(gi) == 0:
            return x
        v = np.mean([x @ system.Q[k] @ x / system.t[k] for k in gi if system.t[k] != 0] or [1.0])
        if v > 0:
            return x / np.sqrt(v)
    return x


def _seeds(reduced, gaps_signed, l, n_restarts, rng_master, system, sign_cycle):
    """Analytic starts first, then random directions; one child RNG per restart."""
    child = rng_master.spawn(n_restarts)
    seeds = []
    C = reduced.C_tilde
    analytic = []
    if len(C) >= 1 and np.any(C[0]):
        try:
            analytic.append(solve_two_ion(C[0], abs(gaps_signed[0]) or HALF_PI).x)
        except ZeroMatrix:
            pass
    if len(C) >= 2:
        try:
            analytic.append(solve_three_ion(C[0], C[1], abs(gaps_signed[0]) or HALF_PI).x)
        except (Infeasible, DegenerateDirection):
            pass
    for k in range(n_restarts):
        if k < len(analytic):
            seeds.append((analytic[k] + 1e-3 * child[k].standard_normal(l), sign_cycle[k % len(sign_cycle)]))
        else:
            sign = sign_cycle[k % len(sign_cycle)]
            seeds.append((_random_start(child[k], system, l, sign), sign))
    return seeds, child


def _residuals(reduced, targets, x, K, cc_forms, L=None):
    quad = np.array([x @ C @ x for C in reduced.C_tilde]) - targets
    r = K @ x
    cc = np.array([r @ Q @ r for Q in cc_forms]) if len(cc_forms) else np.zeros(0)
    out = {
        "quad": quad,
        "quad_max": float(np.max(np.abs(quad))) if quad.size else 0.0,
        "cc_sq": float(np.sum(cc**2)),
    }
    if L is not None:
        out["closure_max"] = float(np.max(np.abs(L @ r))) if L.size else 0.0
    return out


def _feasible(res, opts):
    slope = res.get("slope")
    ok_slope = slope is None or np.max(np.abs(slope), initial=0.0) < opts.tol_quad
    return res["quad_max"] < opts.tol_quad and res["cc_sq"] < opts.tol_cc and ok_slope


def optimize(reduced, K, options=None, cc_forms=(), L=None, forms=None, zero_forms=()):
    """Best feasible x over all restarts by 1-norm of r = K x.

    ``cc_forms`` are M x M symmetric matrices whose quadratic values must
    vanish (second-order carrier endpoints), ``zero_forms`` further M x M
    forms that must vanish (phase-gap slopes); ``L`` is only used to report
    closure residuals and ``forms`` (PhaseForms) to report absolute phases.
    """
    opts = options or SolverOptions()
    K = np.asarray(K, dtype=float)
    if K.ndim != 2 or K.shape[1] == 0:
        raise EmptyNullSpace("null space is empty")
    l = K.shape[1]
    if reduced.C_tilde.shape[1:] != (l, l):
        raise DimensionMismatch("reduced forms do not match the null-space basis")
    gaps = np.asarray(reduced.target_gaps, dtype=float)
    cc_red = [K.T @ Q @ K for Q in list(cc_forms) + list(zero_forms)]

    def finish(x, sign, k, iters, ok, hist):
        r = K @ x
        targets = sign * gaps
        res = _residuals(reduced, targets, x, K, cc_forms, L)
        if len(zero_forms):
            res["slope"] = np.array([r @ Q @ r for Q in zero_forms])
        ph = forms.phases(r) if forms is not None else np.zeros(0)
        return GateSolution(x, r, ph, res, float(np.sum(np.abs(r))), opts.seed, iters,
                            sign, False, ok, k, hist)

    if not np.any(gaps):
        x = np.zeros(l)
        sol = finish(x, 1, -1, 0, True, [])
        sol.degenerate = True
        return sol

    signs = (1, -1) if opts.allow_sign_flip else (1,)
    systems = {s: _System(reduced.C_tilde, s * gaps, cc_red) for s in signs}
    rng = np.random.default_rng(opts.seed)
    base = systems[1]
    seeds, child = _seeds(reduced, gaps, l, opts.restarts, rng, base, signs)
    scale = np.sqrt(np.max(np.abs(gaps)) / max(np.max(base.gap_scale), 1e-300))

    best, closest, history = None, None, []
    for k, (x0, sign) in enumerate(seeds):
        system = systems[sign]
        x, iters = _local(system, K, x0, opts, scale)
        if x is None:
            history.append((k, sign, None))
            continue
        sol = finish(x, sign, k, iters, True, [])
        feasible = _feasible(sol.residuals, opts)
        history.append((k, sign, sol.one_norm if feasible else None))
        if not feasible:
            sol.success = False
            if closest is None or sol.residuals["quad_max"] < closest.residuals["quad_max"]:
                closest = sol
        if feasible and (best is None or sol.one_norm < best.one_norm - 1e-12 * best.one_norm):
            best = sol

    if opts.global_stage and best is not None:
        grng = child[0] if child else np.random.default_rng(opts.seed)
        for g in range(opts.global_rounds):
            system = systems[best.phase_sign]
            x0 = best.x * (1 + 0.2 * grng.standard_normal(l))
            x, iters = _local(system, K, x0, opts, scale)
            if x is None:
                continue
            sol = finish(x, best.phase_sign, opts.restarts + g, iters, True, [])
            if _feasible(sol.residuals, opts) and sol.one_norm < best.one_norm:
                best = sol

    if best is None:
        raise Infeasible(f"no restart met the tolerances ({opts.restarts} tried)", best=closest)
    best.history = history
    return best


def with_options(opts, **kw):
    return replace(opts, **kw)
