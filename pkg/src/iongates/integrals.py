"""Closed-form time integrals of exponentials.

Every integral in the gate model is a linear combination of

    E(c; T) = int_0^T exp(i c t) dt
    P(a, b; T) = int_0^T dt exp(i a t) int_0^t dt' exp(i b t')

after writing the cosines and sines as complex exponentials. Both are
evaluated without any division by a small frequency: ``E`` through the
unnormalised sinc, ``P`` through one of three algebraically equivalent
expressions chosen by which of ``|a| T`` and ``|b| T`` is bounded away from
zero, with a double power series when both are small.
"""

import math

import numpy as np

# |x| T below this switches P to a different branch.
_BRANCH = 1.0
_SERIES_ORDER = 20


def sinc(x):
    """sin(x)/x with the removable singularity filled in."""
    return np.sinc(np.asarray(x) / np.pi)


def segment(c, T):
    """int_0^T exp(i c t) dt, vectorised over ``c`` and ``T``."""
    c = np.asarray(c, dtype=float)
    T = np.asarray(T, dtype=float)
    x = 0.5 * c * T
    return T * np.exp(1j * x) * sinc(x)


def _series_coefficients(order):
    k = np.arange(order)
    fk = np.array([math.factorial(int(i)) for i in k], dtype=float)
    # coeff[k, l] = 1 / (k! l! (l + 1) (k + l + 2))
    return 1.0 / (fk[:, None] * fk[None, :] * (k[None, :] + 1.0) * (k[:, None] + k[None, :] + 2.0))


_COEF = _series_coefficients(_SERIES_ORDER)


def _nested_series(a, b, T):
    x = 1j * a * T
    y = 1j * b * T
    k = np.arange(_SERIES_ORDER)
    xp = x[..., None] ** k
    yp = y[..., None] ** k
    s = np.einsum("...k,kl,...l->...", xp, _COEF, yp)
    return T * T * s


def nested(a, b, T):
    """P(a, b; T) = int_0^T dt e^{iat} int_0^t dt' e^{ibt'}.

    ``a``, ``b`` and ``T`` broadcast against each other.
    """
    a, b, T = np.broadcast_arrays(
        np.asarray(a, dtype=float), np.asarray(b, dtype=float), np.asarray(T, dtype=float)
    )
    out = np.empty(a.shape, dtype=complex)
    bt = np.abs(b * T)
    at = np.abs(a * T)

    m1 = bt >= _BRANCH
    if np.any(m1):
        aa, bb, tt = a[m1], b[m1], T[m1]
        out[m1] = (segment(aa + bb, tt) - segment(aa, tt)) / (1j * bb)

    m2 = (~m1) & (at >= _BRANCH)
    if np.any(m2):
        # Square minus the complementary triangle.
        aa, bb, tt = a[m2], b[m2], T[m2]
        out[m2] = segment(aa, tt) * segment(bb, tt) - (
            segment(aa + bb, tt) - segment(bb, tt)
        ) / (1j * aa)

    m3 = ~(m1 | m2)
    if np.any(m3):
        out[m3] = _nested_series(a[m3], b[m3], T[m3])
    return out


def tone_exponents(omega, phi):
    """Split cos(omega t + phi) into (+/-) exponentials.

    Returns ``(freqs, weights)`` with trailing axis of length 2 such that
    cos(omega t + phi) = sum_s weights[..., s] * exp(i freqs[..., s] t).
    """
    omega = np.asarray(omega, dtype=float)
    phi = np.asarray(phi, dtype=float)
    freqs = np.stack([omega, -omega], axis=-1)
    weights = 0.5 * np.stack([np.exp(1j * phi), np.exp(-1j * phi)], axis=-1)
    return freqs, weights


def tone_mode_overlap(omega, phi, nu, T):
    """int_0^T cos(omega_i t + phi_i) exp(i nu_j t) dt as a (len(nu), len(omega)) array."""
    freqs, weights = tone_exponents(omega, phi)
    nu = np.asarray(nu, dtype=float)
    seg = segment(freqs[None, :, :] + nu[:, None, None], T)
    return np.sum(weights[None, :, :] * seg, axis=-1)


def tone_mode_moment(omega, phi, nu, T):
    """int_0^T (T - t) cos(omega_i t + phi_i) exp(i nu_j t) dt.

    Equal to the time integral of the running integral, which is what the
    mode-frequency robustness condition needs.
    """
    freqs, weights = tone_exponents(omega, phi)
    nu = np.asarray(nu, dtype=float)
    val = nested(0.0, freqs[None, :, :] + nu[:, None, None], T)
    return np.sum(weights[None, :, :] * val, axis=-1)
