"""One-dimensional filters in p, interpolation kernels in the angle, and the
Poisson-summation checker.

The ramp filter is ``|D_p| / (4 pi)``. With ``pad=1`` it is the periodic
lattice multiplier ``|xi_k| / (4 pi)`` on the p-FFT. With ``pad >= 2``
(default) the rows are linearly convolved with the band-limited ramp kernel
sampled in p (Ram-Lak), whose frequency response is exactly ``|xi| / (4 pi)``
on ``|xi| < pi/dp``; this avoids the wrap-around of the kernel's ``1/p^2``
tail that a zero-padded lattice multiplier suffers from.
"""
from dataclasses import dataclass

import numpy as np

from .grids import is_power_of_two

KERNEL_KINDS = ("dirac", "sinc", "lanczos3", "lanczos3_stretched")
# aliases accepted on the command line
KERNEL_ALIASES = {"lan3": "lanczos3", "lan3x2": "lanczos3_stretched"}

SINC_HALF_WIDTH = 32


@dataclass(frozen=True)
class Kernel1D:
    """Angular interpolation kernel.

    ``sinc`` is ``sinc(pi t) * sinc(pi t / 32)`` truncated to ``|t| < 32``
    (64 samples), a Lanczos-type flat-top approximation of the ideal kernel.
    """
    kind: str

    def __post_init__(self):
        kind = KERNEL_ALIASES.get(self.kind, self.kind)
        if kind not in KERNEL_KINDS:
            raise ValueError(f"unknown kernel {self.kind!r}; expected one of {KERNEL_KINDS}")
        object.__setattr__(self, "kind", kind)

    @property
    def half_width(self):
        return {"dirac": 0, "sinc": SINC_HALF_WIDTH, "lanczos3": 3, "lanczos3_stretched": 6}[self.kind]


def _lanczos(t, a):
    t = np.asarray(t, dtype=float)
    return np.where(np.abs(t) < a, np.sinc(t) * np.sinc(t / a), 0.0)


def kernel_eval(k, t):
    """Kernel values at ``t`` (sample units). ``dirac`` is 1 at 0 and 0 elsewhere."""
    t = np.asarray(t, dtype=float)
    if k.kind == "dirac":
        return (t == 0).astype(float)
    if k.kind == "lanczos3":
        return _lanczos(t, 3)
    if k.kind == "lanczos3_stretched":
        return _lanczos(t / 2.0, 3)
    return _lanczos(t, SINC_HALF_WIDTH)


def kernel_weights(k, upsample):
    """``chi(l / upsample)`` for integer l, normalized to unit sum.

    Returns (offsets, weights) with offsets in units of the fine step.
    """
    hw = int(np.ceil(k.half_width * upsample))
    l = np.arange(-hw, hw + 1)
    w = kernel_eval(k, l / upsample)
    keep = w != 0
    l, w = l[keep], w[keep]
    return l, w / w.sum()


def kernel_dft(k, upsample, q, period):
    """Discrete Fourier coefficient ``sum_l w_l exp(-i q l 2 pi / period)``."""
    l, w = kernel_weights(k, upsample)
    q = np.asarray(q, dtype=float)
    return np.sum(w[None, :] * np.exp(-2j * np.pi * np.outer(q, l) / period), axis=1).reshape(q.shape)


def circular_convolve_angle(values, k, upsample):
    """Periodic convolution along axis 0 with the discretized kernel.

    ``upsample`` is the number of series samples per kernel unit, i.e. the
    kernel is ``chi(theta / (s h))`` sampled at the series step
    ``s h / upsample``.
    """
    v = np.asarray(values)
    n = v.shape[0]
    l, w = kernel_weights(k, upsample)
    ker = np.zeros(n)
    np.add.at(ker, np.mod(l, n), w)
    kf = np.fft.fft(ker)
    shape = (n,) + (1,) * (v.ndim - 1)
    out = np.fft.ifft(np.fft.fft(v, axis=0) * kf.reshape(shape), axis=0)
    return out if np.iscomplexobj(v) else out.real


# ---------------------------------------------------------------------------
# p-filters
# ---------------------------------------------------------------------------

def _spectral(rows, dp, mult, pad):
    rows = np.asarray(rows, dtype=float)
    P = rows.shape[-1]
    N = P * pad
    xi = 2.0 * np.pi * np.fft.fftfreq(N, d=dp)
    F = np.fft.fft(rows, n=N, axis=-1)
    return np.fft.ifft(F * mult(xi, N), axis=-1)[..., :P]


def ramp_kernel(N, dp):
    """Band-limited ramp kernel times dp, in FFT order for a length-N circle."""
    n = np.fft.fftfreq(N, d=1.0 / N).astype(np.int64)
    h = np.zeros(N)
    h[0] = np.pi / (2.0 * dp * dp)
    odd = n % 2 != 0
    h[odd] = -2.0 / (np.pi * n[odd] ** 2 * dp * dp)
    return h * dp / (4.0 * np.pi)


def ramp_rows(rows, dp, pad=2):
    """``|D_p| / (4 pi)`` on the last axis (see module docstring for ``pad``)."""
    if pad == 1:
        return _spectral(rows, dp, lambda xi, N: np.abs(xi) / (4.0 * np.pi), 1).real
    P = np.shape(rows)[-1]
    kf = np.fft.fft(ramp_kernel(P * pad, dp))
    return _spectral(rows, dp, lambda xi, N: kf, pad).real


def ramp_filter(sino, pad=2):
    """Apply ``|D_p| / (4 pi)`` to every row of a sinogram."""
    if not is_power_of_two(sino.p_count):
        raise ValueError("p_count must be a power of two")
    return sino.replace(values=ramp_rows(sino.values, sino.dp, pad))


def hilbert(rows, dp=1.0, pad=1):
    """Multiplier ``-i sgn(xi)`` on the last axis; DC and the Nyquist bin map to 0."""
    def mult(xi, N):
        m = -1j * np.sign(xi)
        if N % 2 == 0:
            m[N // 2] = 0.0
        return m
    return _spectral(rows, dp, mult, pad).real


# ---------------------------------------------------------------------------
# Poisson summation
# ---------------------------------------------------------------------------

@dataclass
class PoissonResult:
    lhs: complex
    partial_sums: np.ndarray
    residuals: np.ndarray


def fourier_coeff(rho, n, samples=4096):
    """``int_0^{2 pi} rho(phi) exp(-i n phi) dphi`` by the periodic trapezoid rule."""
    phi = 2.0 * np.pi * np.arange(samples) / samples
    vals = np.asarray(rho(phi), dtype=complex)
    n = np.atleast_1d(n)
    return (2.0 * np.pi / samples) * np.exp(-1j * np.outer(n, phi)) @ vals


def poisson_check(rho, m, kmax=4, rho_hat=None, samples=4096):
    """Compare ``(pi/m) sum_{k<2m} rho(pi k/m)`` with ``sum_{|k|<=K} rho_hat(2mk)``.

    ``rho_hat`` defaults to coefficients from dense periodic quadrature.
    Returns the left side, partial sums for K = 0..kmax and their residuals.
    """
    phi = np.pi * np.arange(2 * m) / m
    lhs = (np.pi / m) * np.sum(np.asarray(rho(phi), dtype=complex))
    ks = np.arange(-kmax, kmax + 1)
    if rho_hat is None:
        coeffs = fourier_coeff(rho, 2 * m * ks, samples)
    else:
        coeffs = np.array([rho_hat(2 * m * k) for k in ks], dtype=complex)
    partial = np.array([coeffs[np.abs(ks) <= K].sum() for K in range(kmax + 1)])
    return PoissonResult(lhs, partial, np.abs(lhs - partial))
