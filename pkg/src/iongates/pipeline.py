"""End-to-end gate design: tones, constraints, phase forms, solve, fidelity."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .constraints import build_constraints
from .drive import DEFAULT_MARGIN, AmplitudeVector, ToneBasis, explicit_basis, harmonic_basis
from .errors import EmptyNullSpace
from .fidelity import evaluate
from .phase_forms import (
    carrier_quadratic_forms,
    carrier_second_order,
    gap_slope_forms,
    phase_forms,
    reduced_forms,
)
from .solver import SolverOptions, optimize
from .targets import builtin_target, ideal_phases, reference_mode

# Extra null-space dimensions kept beyond the number of quadratic equations.
SLACK = 4
MARGIN_STEP = 0.25
MAX_MARGIN = 6.0


@dataclass
class Design:
    modes: object
    tones: ToneBasis
    constraints: object
    forms: object
    reduced: object
    target: object
    solution: object
    report: object
    margin: float

    @property
    def amps(self):
        return AmplitudeVector(self.solution.r, 1.0)


def n_quadratic(n_ions, carrier=True, robust=()):
    extra = (n_ions - 1) if "freq" in robust else 0
    return (n_ions - 1) + (2 * n_ions if carrier else 0) + extra


def choose_basis(modes, T, robust=(), timing_order=1, margin=DEFAULT_MARGIN, carrier=True,
                 auto_widen=True):
    """Harmonic basis, widened until the null space leaves room for the quadrics."""
    need = n_quadratic(modes.n_ions, carrier, robust) + SLACK
    m = margin
    while True:
        tones = harmonic_basis(T, modes, m)
        try:
            cs = build_constraints(modes, tones, robust, timing_order, carrier)
            if cs.l >= need or not auto_widen:
                return tones, cs, m
        except EmptyNullSpace:
            if not auto_widen:
                raise
        if m >= MAX_MARGIN:
            raise EmptyNullSpace(f"null space too small even at margin {m}")
        m += MARGIN_STEP


def design_gate(modes, T, target=None, robust=(), timing_order=1, margin=DEFAULT_MARGIN,
                options: Optional[SolverOptions] = None, carrier=True, nbar=0.0,
                auto_widen=True, exact=True, tones=None):
    """Design a global drive realising ``target`` (default all-to-all pi/4) at gate time T."""
    J = builtin_target("all_to_all", modes.n_ions) if target is None else target
    tgt = ideal_phases(J, modes)
    if tones is None:
        tones, cs, margin = choose_basis(modes, T, robust, timing_order, margin, carrier, auto_widen)
    else:
        cs = build_constraints(modes, tones, robust, timing_order, carrier)
    forms = phase_forms(modes, tones)
    red = reduced_forms(cs.K, forms, tgt.gaps, tgt.ref_mode)
    cc = carrier_quadratic_forms(modes, tones).reshape(-1, tones.M, tones.M) if carrier else ()
    opts = options or SolverOptions()
    all_to_all = np.allclose(np.abs(tgt.gaps), np.pi / 2, atol=1e-9) and np.isclose(tgt.F_ideal, 1.0)
    if all_to_all and not opts.allow_sign_flip:
        opts = SolverOptions(**{**opts.__dict__, "allow_sign_flip": True})
    # Frequency robustness also pins the first-order drift of the phase gaps.
    slopes = gap_slope_forms(modes, tones, tgt.ref_mode) if "freq" in robust else ()
    sol = optimize(red, cs.K, opts, cc_forms=list(cc), L=cs.L, forms=forms, zero_forms=slopes)
    diag = carrier_second_order(modes, tones, sol.r)
    report = evaluate(modes, tones, sol.r, diag, nbar=nbar, branch=sol.phase_sign, forms=forms,
                      exact=exact)
    return Design(modes, tones, cs, forms, red, tgt, sol, report, margin)


def ms_baseline(modes, T, nbar=0.0, ref_mode=None, detuning_periods=1):
    """Single-tone two-sideband gate closing only the reference mode.

    The tone sits ``detuning_periods`` harmonics above the reference mode and
    its amplitude sets the reference phase against the mean of the others to
    pi/2. Returns (report, tones, r).
    """
    ref = reference_mode(modes) if ref_mode is None else ref_mode
    n = int(round(modes.nu[ref] * T / (2 * np.pi))) + int(detuning_periods)
    tones = explicit_basis(T, [n])
    forms = phase_forms(modes, tones)
    a = forms.A_tilde[:, 0, 0]
    others = [j for j in range(modes.n_ions) if j != ref]
    gap = a[ref] - (np.mean(a[others]) if others else 0.0)
    r = np.array([np.sqrt(0.5 * np.pi / abs(gap))])
    sign = 1 if gap > 0 else -1
    diag = carrier_second_order(modes, tones, r)
    report = evaluate(modes, tones, r, diag, nbar=nbar, branch=sign, forms=forms)
    return report, tones, r
