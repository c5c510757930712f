"""Spectral evaluation of the 2D variable-hard-sphere collision operator.

The operator is discretised through its Carleman form: for orthogonal
offsets y = rho*e(theta), z = s*e(theta + pi/2),

    Q(f)(v) = 2 b  int dtheta  int_0^R drho rho^gamma  int_{-R}^{R} ds
              [ f(v + s e') f(v + rho e)  -  f(v + rho e + s e') f(v) ],

with the kernel decoupled onto the radial leg (exact for Maxwell molecules,
gamma = 0).  Angles use a uniform rule, the radial integral Gauss-Legendre,
and the s-integral closes analytically into a sinc multiplier, so one
evaluation costs 2*n_angular + 3 FFTs.  Gain and loss share the same
discrete quadrature, which makes the discrete mass of Q vanish identically
(mode pairing) and keeps the dense oracle `q_naive` an exact mirror of the
FFT path.

Nyquist lines of the transform are projected out so that every retained
mode has its exact negation on the grid; without this the edge modes break
the conservation pairing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, InvalidStateError, NumericBreakdownError, OracleSizeError
from .phase_space import MacroState, VelocityGrid

MAX_KERNEL_N = 128
ORACLE_MAX_N = 16

# kernel truncation radius: r_support = 2 L / (3 + sqrt(2)), the usual
# no-aliasing balance; translations beyond it wrap around the periodised box
# and corrupt the momentum/energy moments for wide (hot) states
SUPPORT_FACTOR = 2.0 / (3.0 + np.sqrt(2.0))


@dataclass(frozen=True)
class CollisionParams:
    b: float = 1.0
    gamma: float = 0.0
    n_angular: int = 16
    n_radial: int = 16
    r_support: float | None = None  # defaults to l_max * SUPPORT_FACTOR
    beta0: float = 4.0

    def __post_init__(self):
        if self.b <= 0:
            raise InvalidStateError("kernel magnitude b must be positive")
        if not (-2.0 < self.gamma <= 1.0):
            raise InvalidStateError(f"gamma must lie in (-2, 1], got {self.gamma}")
        if self.n_angular < 2 or self.n_angular % 2:
            raise InvalidStateError("n_angular must be even and >= 2")
        if self.n_radial < 2:
            raise InvalidStateError("n_radial must be >= 2")

    def support_radius(self, vgrid: VelocityGrid) -> float:
        return self.r_support if self.r_support is not None else vgrid.l_max * SUPPORT_FACTOR


@dataclass(frozen=True)
class SpectralKernel:
    """Precomputed multipliers, stored in unshifted FFT layout.

    Opposite angles pair up exactly (the smear multiplier is even under
    theta -> theta + pi and the radial phase sum conjugates), so only
    n_angular/2 angles are stored, with the radial factor already folded to
    its real part.  gain_smear carries the quadrature weights and the 2b
    prefactor; loss_mult is the paired diagonal sum(gain_smear * gain_trans)
    so gain and loss cancel exactly at equilibrium mode pairs.
    """

    gain_smear: np.ndarray   # (n_angular/2, N, N) real
    gain_trans: np.ndarray   # (n_angular/2, N, N) real
    loss_mult: np.ndarray    # (N, N) real
    mask: np.ndarray         # (N, N) Nyquist projector
    params: CollisionParams
    n_per_dim: int
    l_max: float
    # the same multipliers restricted to the rfft half-spectrum; every
    # multiplier is real and even in the mode index, so the half-complex
    # transform path is exact for real slices
    smear_r: np.ndarray = None
    trans_r: np.ndarray = None
    loss_r: np.ndarray = None
    mask_r: np.ndarray = None


_KERNEL_CACHE: dict = {}


def build_kernel(p: CollisionParams, vg: VelocityGrid) -> SpectralKernel:
    """Precompute the spectral multipliers for (params, grid); cached per process."""
    key = (p, vg.n_per_dim, vg.l_max)
    hit = _KERNEL_CACHE.get(key)
    if hit is not None:
        return hit

    n = vg.n_per_dim
    if n > MAX_KERNEL_N:
        est = p.n_angular * n * n * 24
        raise CapacityError(
            f"n_per_dim={n} exceeds {MAX_KERNEL_N} (kernel estimate {est/1e6:.0f} MB)"
        )

    r_int = p.support_radius(vg)  # translation reach of the periodised kernel

    # Gauss-Legendre on [0, r_int]
    xg, wg = np.polynomial.legendre.leggauss(p.n_radial)
    rho = 0.5 * (xg + 1.0) * r_int
    wrho = 0.5 * r_int * wg * rho**p.gamma

    half = p.n_angular // 2
    theta = 2.0 * np.pi * np.arange(half) / p.n_angular
    w_ang = 2.0 * np.pi / p.n_angular

    nu = 2.0 * np.pi * np.fft.fftfreq(n, d=vg.dv)  # angular wavenumbers
    nu1 = nu[:, None]
    nu2 = nu[None, :]
    mask = np.ones((n, n))
    mask[n // 2, :] = 0.0
    mask[:, n // 2] = 0.0

    gain_smear = np.empty((half, n, n))
    gain_trans = np.empty((half, n, n))
    for a, th in enumerate(theta):
        e1, e2 = np.cos(th), np.sin(th)
        nu_par = nu1 * e1 + nu2 * e2          # along e(theta)
        nu_perp = -nu1 * e2 + nu2 * e1        # along e(theta + pi/2)
        # int_{-R}^{R} exp(i nu_perp s) ds = 2 R sinc(nu_perp R)
        smear = 2.0 * r_int * np.sinc(nu_perp * r_int / np.pi)
        gain_smear[a] = (2.0 * p.b * w_ang) * smear * mask
        # paired radial sum over theta and theta+pi: twice the real part
        phase = np.cos(rho[:, None, None] * nu_par[None, :, :])
        gain_trans[a] = 2.0 * (wrho[:, None, None] * phase).sum(axis=0) * mask

    loss_mult = (gain_smear * gain_trans).sum(axis=0)

    half_n = n // 2 + 1
    kern = SpectralKernel(
        gain_smear=gain_smear,
        gain_trans=gain_trans,
        loss_mult=loss_mult,
        mask=mask,
        params=p,
        n_per_dim=n,
        l_max=vg.l_max,
        smear_r=np.ascontiguousarray(gain_smear[..., :half_n]),
        trans_r=np.ascontiguousarray(gain_trans[..., :half_n]),
        loss_r=np.ascontiguousarray(loss_mult[..., :half_n]),
        mask_r=np.ascontiguousarray(mask[..., :half_n]),
    )
    _KERNEL_CACHE[key] = kern
    return kern


def q_spectral(fslice: np.ndarray, k: SpectralKernel) -> np.ndarray:
    """FFT evaluation of Q(f, f); accepts (..., N, N) batches of cells.

    Real input and real-even multipliers allow the half-complex transform
    pair, halving the FFT work relative to the full complex path.
    """
    n = k.n_per_dim
    if fslice.shape[-2:] != (n, n):
        raise InvalidStateError(f"slice shape {fslice.shape} does not match kernel N={n}")
    shape = (n, n)
    F = np.fft.rfft2(fslice) * k.mask_r
    f_proj = np.fft.irfft2(F, s=shape)
    gain = np.zeros_like(f_proj)
    for a in range(k.smear_r.shape[0]):
        u = np.fft.irfft2(k.smear_r[a] * F, s=shape)
        t = np.fft.irfft2(k.trans_r[a] * F, s=shape)
        gain += u * t
    loss = f_proj * np.fft.irfft2(k.loss_r * F, s=shape)
    q = gain - loss
    if not np.all(np.isfinite(q)):
        bad = np.argwhere(~np.isfinite(q).all(axis=(-2, -1)))
        cell = int(bad[0, 0]) if bad.size else -1
        raise NumericBreakdownError(f"NaN in collision transform (cell {cell})")
    return q


def q_naive(fslice: np.ndarray, k: SpectralKernel) -> np.ndarray:
    """Direct O(N^4) mode-pair evaluation of the same truncated spectral sum.

    Test oracle only; refuses grids above ORACLE_MAX_N.
    """
    n = k.n_per_dim
    if n > ORACLE_MAX_N:
        raise OracleSizeError(f"q_naive refuses n_per_dim={n} > {ORACLE_MAX_N}")
    if fslice.shape != (n, n):
        raise InvalidStateError("q_naive takes a single (N, N) slice")

    F = (np.fft.fft2(fslice) * k.mask).ravel()
    nmodes = n * n
    smear = k.gain_smear.reshape(-1, nmodes)
    trans = k.gain_trans.reshape(-1, nmodes)
    lossk = k.loss_mult.ravel()
    maskf = k.mask.ravel()

    # pair kernels: gain G(l, m) = sum_a smear_a(l) trans_a(m); loss P(l) L(m)
    gain_hat = np.zeros(nmodes, dtype=complex)
    loss_hat = np.zeros(nmodes, dtype=complex)
    idx = np.arange(nmodes)
    li, lj = divmod(idx, n)
    for kk in range(nmodes):
        ki, kj = divmod(kk, n)
        mi = (ki - li) % n
        mj = (kj - lj) % n
        mm = mi * n + mj
        gl = (smear[:, idx] * trans[:, mm]).sum(axis=0)
        gain_hat[kk] = (gl * F[idx] * F[mm]).sum()
        loss_hat[kk] = (maskf[idx] * F[idx] * lossk[mm] * F[mm]).sum()
    return np.fft.ifft2((gain_hat - loss_hat).reshape(n, n)).real / nmodes


def bgk_relax(fslice: np.ndarray, m_equiv: np.ndarray, beta: float) -> np.ndarray:
    """Penalisation increment beta * (M - f)."""
    return beta * (m_equiv - fslice)


def penalty_beta(m: MacroState, p: CollisionParams) -> np.ndarray:
    """Collision-frequency surrogate beta = beta0 * b * rho * T^(gamma/2), per cell."""
    return p.beta0 * p.b * m.rho * m.temp ** (0.5 * p.gamma)
